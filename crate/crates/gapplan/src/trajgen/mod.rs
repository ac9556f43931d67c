//! Analytic trajectory generation, evaluation, costs and checks.

mod quintic;
mod time_weighted;

pub use quintic::QuinticCoefficients;
pub use time_weighted::TimeWeightedCoefficients;

use std::io::{self, Write};

use crate::quad;
use crate::state::{DynamicLimits, Error, Result, State1D};

/// Tolerance for boundary/range comparisons on the time axis.
const T_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Quintic,
    TimeWeighted,
    ConstantDeceleration,
}

/// Constant-deceleration braking profile: a = -b until standstill at
/// `s_stop`, then rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDecel {
    /// Applied deceleration (m/s², >= 0).
    pub b: f64,
    /// Stop position (m).
    pub s_stop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Coeffs {
    Quintic(QuinticCoefficients),
    TimeWeighted(TimeWeightedCoefficients),
    ConstantDecel(ConstantDecel),
}

/// An analytic motion plan, evaluable at any time in `[0, t_f]`
/// (constant-deceleration plans accept any `t >= 0`, clamped at the stop).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    coeffs: Coeffs,
    /// Horizon (s).
    pub t_f: f64,
    /// State at t = 0.
    pub x0: State1D,
    /// State at t = t_f.
    pub xf: State1D,
}

impl Trajectory {
    pub fn kind(&self) -> TrajectoryKind {
        match self.coeffs {
            Coeffs::Quintic(_) => TrajectoryKind::Quintic,
            Coeffs::TimeWeighted(_) => TrajectoryKind::TimeWeighted,
            Coeffs::ConstantDecel(_) => TrajectoryKind::ConstantDeceleration,
        }
    }

    pub fn quintic_coefficients(&self) -> Option<&QuinticCoefficients> {
        match &self.coeffs {
            Coeffs::Quintic(c) => Some(c),
            _ => None,
        }
    }

    pub fn time_weighted_coefficients(&self) -> Option<&TimeWeightedCoefficients> {
        match &self.coeffs {
            Coeffs::TimeWeighted(c) => Some(c),
            _ => None,
        }
    }

    pub fn constant_decel(&self) -> Option<&ConstantDecel> {
        match &self.coeffs {
            Coeffs::ConstantDecel(c) => Some(c),
            _ => None,
        }
    }

    /// Evaluates state and jerk, clamping `t` into the valid range instead
    /// of erroring. Constant-deceleration plans hold the stopped state.
    pub fn eval_clamped(&self, t: f64) -> (State1D, f64) {
        let t = t.max(0.0);
        match &self.coeffs {
            Coeffs::ConstantDecel(_) => self.eval_raw(t),
            _ => self.eval_raw(t.min(self.t_f)),
        }
    }

    fn eval_raw(&self, t: f64) -> (State1D, f64) {
        match &self.coeffs {
            Coeffs::Quintic(c) => {
                let (s, v, a, u) = c.eval(t);
                (State1D::new(s, v, a), u)
            }
            Coeffs::TimeWeighted(c) => {
                let (s, v, a, u) = c.eval(t);
                (State1D::new(s, v, a), u)
            }
            Coeffs::ConstantDecel(c) => {
                if t > self.t_f {
                    (State1D::new(c.s_stop, 0.0, 0.0), 0.0)
                } else {
                    let s = self.x0.s + self.x0.v * t - 0.5 * c.b * t * t;
                    let v = self.x0.v - c.b * t;
                    (State1D::new(s, v.max(0.0), -c.b), 0.0)
                }
            }
        }
    }

    /// Writes the trajectory as CSV `t,s,v,a,j`, sampled every `dt` plus the
    /// final point, with >= 9 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: &mut W, dt: f64) -> io::Result<()> {
        writeln!(out, "t,s,v,a,j")?;
        for t in sample_grid(self.t_f, dt) {
            let (x, j) = self.eval_clamped(t);
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_sig(t),
                fmt_sig(x.s),
                fmt_sig(x.v),
                fmt_sig(x.a),
                fmt_sig(j)
            )?;
        }
        Ok(())
    }
}

/// Formats a float with 10 significant digits (CSV export convention).
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.9e}")
}

/// Sampling grid 0, dt, 2dt, ..., t_f (final point always included).
pub(crate) fn sample_grid(t_f: f64, dt: f64) -> impl Iterator<Item = f64> {
    let n = (t_f / dt + T_EPS).floor() as usize;
    let last_on_grid = (n as f64) * dt >= t_f - T_EPS;
    (0..=n)
        .map(move |k| k as f64 * dt)
        .chain(if last_on_grid { None } else { Some(t_f) })
}

/// Evaluates a trajectory at `t`, returning state and jerk.
pub fn eval(traj: &Trajectory, t: f64) -> Result<(State1D, f64)> {
    match traj.kind() {
        TrajectoryKind::ConstantDeceleration => {
            if t < -T_EPS {
                return Err(Error::OutOfRange { t, t_f: traj.t_f });
            }
        }
        _ => {
            if t < -T_EPS || t > traj.t_f + T_EPS {
                return Err(Error::OutOfRange { t, t_f: traj.t_f });
            }
        }
    }
    Ok(traj.eval_clamped(t))
}

/// Jerk-optimal quintic between two states.
pub fn solve_quintic(x0: State1D, xf: State1D, t_f: f64) -> Result<Trajectory> {
    let c = quintic::solve(x0, xf, t_f)?;
    Ok(Trajectory {
        coeffs: Coeffs::Quintic(c),
        t_f,
        x0,
        xf,
    })
}

/// Time-weighted jerk-optimal trajectory (weight `(w_t-1)/(1+t) + 1`).
pub fn solve_time_weighted(x0: State1D, xf: State1D, t_f: f64, w_t: f64) -> Result<Trajectory> {
    solve_time_weighted_anchored(x0, xf, t_f, w_t, 0.0)
}

/// Time-weighted solve with the weight anchored at absolute time `anchor`;
/// used when replanning repeatedly against one fixed experiment clock so
/// that replans of a consistent target reproduce the original plan's tail.
pub fn solve_time_weighted_anchored(
    x0: State1D,
    xf: State1D,
    t_f: f64,
    w_t: f64,
    anchor: f64,
) -> Result<Trajectory> {
    let c = time_weighted::solve_anchored(x0, xf, t_f, w_t, anchor)?;
    Ok(Trajectory {
        coeffs: Coeffs::TimeWeighted(c),
        t_f,
        x0,
        xf,
    })
}

/// Constant-deceleration braking trajectory from `x0` (v >= 0) with
/// deceleration `b >= 0`. Horizon is the stop time.
pub fn constant_deceleration(x0: State1D, b: f64) -> Result<Trajectory> {
    if !x0.is_finite() || x0.v < 0.0 || !(b >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "constant deceleration needs v >= 0 and b >= 0, got v={}, b={}",
            x0.v, b
        )));
    }
    let (t_stop, s_stop) = if x0.v <= 0.0 || b == 0.0 {
        (0.0, x0.s)
    } else {
        (x0.v / b, x0.s + x0.v * x0.v / (2.0 * b))
    };
    let b_eff = if x0.v <= 0.0 { 0.0 } else { b };
    Ok(Trajectory {
        coeffs: Coeffs::ConstantDecel(ConstantDecel { b: b_eff, s_stop }),
        t_f: t_stop,
        x0: State1D::new(x0.s, x0.v.max(0.0), -b_eff),
        xf: State1D::new(s_stop, 0.0, -b_eff),
    })
}

/// Jerk cost ∫ ½ u(t)² dt over the full horizon (adaptive quadrature,
/// relative tolerance 1e-8). Zero for constant-deceleration plans.
pub fn jerk_cost(traj: &Trajectory) -> f64 {
    match traj.kind() {
        TrajectoryKind::ConstantDeceleration => 0.0,
        _ => quad::integrate(
            |t| {
                let (_, u) = traj.eval_clamped(t);
                0.5 * u * u
            },
            0.0,
            traj.t_f,
            1e-8,
        ),
    }
}

/// Time-weighted jerk cost ∫ ½ ((w_t−1)/(1+t) + 1) u(t)² dt.
pub fn time_weighted_cost(traj: &Trajectory, w_t: f64) -> Result<f64> {
    if !(w_t >= 1.0) {
        return Err(Error::InvalidArgument(format!("w_t must be >= 1, got {w_t}")));
    }
    if traj.kind() == TrajectoryKind::ConstantDeceleration {
        return Ok(0.0);
    }
    Ok(quad::integrate(
        |t| {
            let (_, u) = traj.eval_clamped(t);
            0.5 * ((w_t - 1.0) / (1.0 + t) + 1.0) * u * u
        },
        0.0,
        traj.t_f,
        1e-8,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    AccelBelowMin,
    AccelAboveMax,
    VelocityBelowZero,
    VelocityAboveMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintViolation {
    pub t: f64,
    pub kind: ViolationKind,
}

/// Result of sampling a trajectory against the dynamic limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    pub valid: bool,
    pub violation: Option<ConstraintViolation>,
}

/// Samples t = 0, dt_check, 2·dt_check, ..., t_f and reports the first
/// sample violating `a ∈ [a_min, a_max]` or `v ∈ [0, v_max]`. Violations
/// between samples are accepted as negligible for smooth trajectories.
pub fn check_constraints(traj: &Trajectory, limits: &DynamicLimits, dt_check: f64) -> ConstraintReport {
    const TOL: f64 = 1e-9;
    for t in sample_grid(traj.t_f, dt_check) {
        let (x, _) = traj.eval_clamped(t);
        let kind = if x.a < limits.a_min - TOL {
            Some(ViolationKind::AccelBelowMin)
        } else if x.a > limits.a_max + TOL {
            Some(ViolationKind::AccelAboveMax)
        } else if x.v < -TOL {
            Some(ViolationKind::VelocityBelowZero)
        } else if x.v > limits.v_max + TOL {
            Some(ViolationKind::VelocityAboveMax)
        } else {
            None
        };
        if let Some(kind) = kind {
            return ConstraintReport {
                valid: false,
                violation: Some(ConstraintViolation { t, kind }),
            };
        }
    }
    ConstraintReport {
        valid: true,
        violation: None,
    }
}

/// Finds the point of no return: the largest sampled time at which the
/// vehicle can still stop at `s_yield` with deceleration `b_max`, i.e.
/// `s(t) <= s_yield − v(t)²/(2 b_max)`. Returns `None` when even t = 0 is
/// already beyond the braking envelope.
pub fn compute_pnr(traj: &Trajectory, s_yield: f64, b_max: f64, dt: f64) -> Option<(f64, State1D)> {
    let times: Vec<f64> = sample_grid(traj.t_f, dt).collect();
    for &t in times.iter().rev() {
        let (x, _) = traj.eval_clamped(t);
        if x.s <= s_yield - x.v * x.v / (2.0 * b_max) + T_EPS {
            return Some((t, x));
        }
    }
    None
}
