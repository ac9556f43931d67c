//! Longitudinal planning toolkit for merging at yield intersections.
//!
//! The crate is organized around a planning pipeline that runs once per
//! control cycle:
//!
//! 1. [`predict`] — constant-velocity Kalman estimates of the main-road
//!    vehicles and their open-loop propagation over the planning horizon.
//! 2. [`risk`] — safety-corridor geometry and residual-risk probabilities
//!    for a candidate arrival state.
//! 3. [`trajgen`] — closed-form jerk-optimal and time-weighted jerk-optimal
//!    trajectories, constraint checks and point-of-no-return computation.
//! 4. [`planner`] — enumeration and cost-optimal selection of merge options,
//!    gentle stop and fail-safe fallbacks, trajectory locking.
//! 5. [`sim`] — an IDM-driven Monte-Carlo world for evaluating the planner's
//!    decisions, plus the noisy-target replanning experiment.
//!
//! All numeric quantities are SI (m, s, m/s, m/s², m/s³).

pub mod config;
pub mod planner;
pub mod predict;
pub mod quad;
pub mod risk;
pub mod sim;
pub mod state;
pub mod trajgen;

pub use state::{DynamicLimits, Error, Result, State1D};
