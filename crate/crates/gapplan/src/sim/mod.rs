//! Monte-Carlo traffic world, episode runner, sweep harness and the
//! noisy-target replanning experiment.

mod episode;
mod idm;
mod replay;
mod sweep;
mod world;

pub use episode::{derive_seed, rollout_world, run_episode, CycleTiming, EpisodeResult, Rollout};
pub use idm::{idm_accel, IdmParams, FULL_BRAKE};
pub use replay::{
    generate_target_noise, read_noise_csv, replay_noisy_target, write_samples_csv, ReplayResult,
    ReplaySpec, TrajSample,
};
pub use sweep::{
    episode_seed, monte_carlo, monte_carlo_cell, write_stats_csv, CollisionEvent, StatsRow,
    StatsTable, SweepSpec,
};
pub use world::{
    audit_step, collision_between, generate_scenario, measure, step_world, ScenarioConfig,
    Vehicle, World,
};
