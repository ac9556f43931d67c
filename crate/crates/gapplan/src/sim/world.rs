//! Simulated world: main-road vehicles driven by the IDM, measurement
//! model, scenario generation, and the collision predicate.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::planner::LocalMap;
use crate::sim::idm::{idm_accel, IdmParams};
use crate::state::State1D;

/// One main-road vehicle (center position).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub s: f64,
    pub v: f64,
    pub length: f64,
}

/// Simulation world. `vehicles` are ordered front to back (index 0 is the
/// next to arrive at the merge point). The ego is driven externally by the
/// active decision trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub t: f64,
    pub vehicles: Vec<Vehicle>,
    pub ego: State1D,
    pub ego_length: f64,
}

/// Monte-Carlo scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Initial bumper gap between the two main-road vehicles (m).
    pub gap_size: f64,
    /// Lead-vehicle arrival-time interval at the merge point (s).
    pub arrival_interval: (f64, f64),
    /// Nominal initial speed of the main-road vehicles (m/s).
    pub v_init_others: f64,
    /// Std dev of the initial-speed noise (m/s).
    pub sigma_v: f64,
    /// Std dev of the per-step IDM acceleration noise (m/s²).
    pub sigma_a: f64,
    /// Std dev of the position measurement noise (m).
    pub sigma_s: f64,
    /// Ego initial-speed interval (m/s).
    pub ego_v_interval: (f64, f64),
    /// Ego start distance before the merge point (m).
    pub ego_start_offset: f64,
    /// Length of the main-road vehicles (m).
    pub vehicle_length: f64,
    /// Ego vehicle length (m).
    pub ego_length: f64,
    /// Base seed for single-scenario runs; sweeps derive per-episode seeds.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            gap_size: 50.0,
            arrival_interval: (5.0, 13.0),
            v_init_others: 30.0 / 3.6,
            sigma_v: 0.3,
            sigma_a: 0.25,
            sigma_s: 0.25,
            ego_v_interval: (25.0 / 3.6, 35.0 / 3.6),
            ego_start_offset: 80.0,
            vehicle_length: 4.0,
            ego_length: 4.0,
            seed: 1,
        }
    }
}

/// Builds the initial world: the lead vehicle is placed to arrive at the
/// merge point (at its own initial speed) at a time drawn uniformly from
/// the arrival interval; the follower starts exactly `gap_size` behind
/// bumper to bumper; the ego starts `ego_start_offset` before the merge
/// point at a uniformly drawn speed.
pub fn generate_scenario<R: Rng>(cfg: &ScenarioConfig, map: &LocalMap, rng: &mut R) -> World {
    let arrival = Uniform::new_inclusive(cfg.arrival_interval.0, cfg.arrival_interval.1);
    let speed_noise = Normal::new(0.0, cfg.sigma_v).expect("sigma_v >= 0");
    let ego_speed = Uniform::new_inclusive(cfg.ego_v_interval.0, cfg.ego_v_interval.1);

    let t_arr = arrival.sample(rng);
    let v_a = cfg.v_init_others + speed_noise.sample(rng);
    let v_b = cfg.v_init_others + speed_noise.sample(rng);
    let ego_v = ego_speed.sample(rng);

    let s_a = map.s_merge - v_a * t_arr;
    let s_b = s_a - cfg.gap_size - cfg.vehicle_length;
    World {
        t: 0.0,
        vehicles: vec![
            Vehicle { s: s_a, v: v_a, length: cfg.vehicle_length },
            Vehicle { s: s_b, v: v_b, length: cfg.vehicle_length },
        ],
        ego: State1D::new(map.s_merge - cfg.ego_start_offset, ego_v, 0.0),
        ego_length: cfg.ego_length,
    }
}

/// Advances the main-road vehicles one step: IDM acceleration plus Gaussian
/// noise, then the exact double-integrator update with the velocity clamped
/// at zero. Accelerations are computed from the pre-step states; the noise
/// is drawn per vehicle in index order.
pub fn step_world<R: Rng>(world: &mut World, dt: f64, sigma_a: f64, idm: &IdmParams, rng: &mut R) {
    let noise = Normal::new(0.0, sigma_a.max(0.0)).expect("sigma_a >= 0");
    let accels: Vec<f64> = (0..world.vehicles.len())
        .map(|i| {
            let v = &world.vehicles[i];
            let base = if i == 0 {
                idm_accel(v.v, f64::INFINITY, 0.0, idm)
            } else {
                let lead = &world.vehicles[i - 1];
                let gap = lead.s - v.s - 0.5 * (lead.length + v.length);
                idm_accel(v.v, gap, v.v - lead.v, idm)
            };
            base + if sigma_a > 0.0 { noise.sample(rng) } else { 0.0 }
        })
        .collect();
    for (v, a) in world.vehicles.iter_mut().zip(accels) {
        v.s += v.v * dt + 0.5 * a * dt * dt;
        v.v = (v.v + a * dt).max(0.0);
    }
    world.t += dt;
}

/// Position measurements of the main-road vehicles with additive Gaussian
/// noise; velocities are not measured directly. Returns (z_s, length) per
/// vehicle in index order.
pub fn measure<R: Rng>(world: &World, sigma_s: f64, rng: &mut R) -> Vec<(f64, f64)> {
    let noise = Normal::new(0.0, sigma_s.max(0.0)).expect("sigma_s >= 0");
    world
        .vehicles
        .iter()
        .map(|v| {
            let z = v.s + if sigma_s > 0.0 { noise.sample(rng) } else { 0.0 };
            (z, v.length)
        })
        .collect()
}

/// Two vehicles collide when their center distance is strictly less than
/// the mean of their lengths; touching exactly is not a collision.
pub fn collision_between(ego_s: f64, ego_len: f64, other_s: f64, other_len: f64) -> bool {
    (ego_s - other_s).abs() < 0.5 * (ego_len + other_len)
}

/// Collision audit for one sim step. The ego is only on the main-road axis
/// once its front has crossed the merge point; before that the paths are
/// disjoint.
pub fn audit_step(ego: &State1D, ego_len: f64, vehicles: &[Vehicle], s_merge: f64) -> bool {
    if ego.s + 0.5 * ego_len <= s_merge {
        return false;
    }
    vehicles
        .iter()
        .any(|v| collision_between(ego.s, ego_len, v.s, v.length))
}
