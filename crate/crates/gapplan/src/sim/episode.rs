//! One Monte-Carlo episode: measure, filter, plan, execute, audit.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::planner::{plan_cycle, update_filters, DecisionClass, LockState};
use crate::quad;
use crate::sim::world::{audit_step, generate_scenario, measure, step_world, Vehicle, World};
use crate::trajgen::TrajectoryKind;

/// splitmix64 step; used to derive independent per-stream seeds.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of indices. Episodes
/// and their internal streams are independent but fully reproducible.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut x = master;
    for &p in parts {
        x = splitmix64(x ^ p.wrapping_mul(0x9E3779B97F4A7C15));
    }
    splitmix64(x)
}

/// Pre-generated main-road vehicle trajectories for one episode. The main
/// road never reacts to the ego, so the whole rollout is a pure function of
/// the world seed — identical across time weights by construction.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub dt: f64,
    /// `states[k]` are the vehicles at t = k·dt.
    pub states: Vec<Vec<Vehicle>>,
    pub initial: World,
}

impl Rollout {
    /// FNV-1a digest over the bit patterns of all positions and speeds.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bits: u64| {
            h ^= bits;
            h = h.wrapping_mul(0x100000001b3);
        };
        for step in &self.states {
            for v in step {
                eat(v.s.to_bits());
                eat(v.v.to_bits());
            }
        }
        h
    }
}

/// Rolls the main-road world forward for the whole episode horizon.
pub fn rollout_world(cfg: &RunConfig, world_seed: u64) -> Rollout {
    let mut rng = ChaCha8Rng::seed_from_u64(world_seed);
    let map = cfg.local_map();
    let mut world = generate_scenario(&cfg.scenario, &map, &mut rng);
    let initial = world.clone();
    let n_steps = (cfg.episode_t_max / cfg.dt_sim).ceil() as usize;
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(world.vehicles.clone());
    for _ in 0..n_steps {
        step_world(&mut world, cfg.dt_sim, cfg.scenario.sigma_a, &cfg.idm, &mut rng);
        states.push(world.vehicles.clone());
    }
    Rollout {
        dt: cfg.dt_sim,
        states,
        initial,
    }
}

/// Wall-clock timing of one planning cycle, tagged with its decision class.
#[derive(Debug, Clone, Copy)]
pub struct CycleTiming {
    pub class: DecisionClass,
    pub millis: f64,
}

/// Outcome of one episode.
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    /// Final decision class (never `Locked`; locks resolve to their merge
    /// class). Merging behind the last vehicle counts as merging into a gap.
    pub decision_class: DecisionClass,
    /// Output of the collision audit, never inferred from decisions.
    pub collided: bool,
    /// Largest deceleration the ego actually executed (m/s²).
    pub max_decel_applied: f64,
    /// ∫ u² dt over the trajectory actually driven (m²/s⁵).
    pub executed_jerk_energy: f64,
    /// Per-cycle wall-clock timings (excluded from determinism).
    pub cycle_log: Vec<CycleTiming>,
    /// Largest fail-safe deceleration executed, if any fail-safe ran.
    pub failsafe_decel: Option<f64>,
    /// A fail-safe could not stop at the yield line within `b_max`.
    pub emergency: bool,
    /// Digest of the main-road rollout (for cross-weight comparability).
    pub rollout_digest: u64,
    /// Episode seed (for replaying failures).
    pub seed: u64,
}

impl EpisodeResult {
    pub fn cycle_times_ms(&self) -> impl Iterator<Item = f64> + '_ {
        self.cycle_log.iter().map(|c| c.millis)
    }
}

/// Runs one episode. All randomness is derived from `seed`: stream 0 drives
/// the scenario and the main-road noise, stream 1 the measurement noise, so
/// the main-road trajectories are bitwise identical across planner settings
/// for a fixed seed.
pub fn run_episode(cfg: &RunConfig, seed: u64) -> EpisodeResult {
    let rollout = rollout_world(cfg, derive_seed(seed, &[0]));
    let mut rng_meas = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));

    let map = cfg.local_map();
    let pcfg = cfg.planner_config();
    let steps_per_cycle = (cfg.dt_cycle / cfg.dt_sim).round() as usize;
    let r_meas = (cfg.scenario.sigma_s * cfg.scenario.sigma_s).max(1e-6);

    let mut world = rollout.initial.clone();
    let mut estimates = Vec::new();
    let mut lock = LockState::none();
    let mut cycle_log = Vec::new();

    let mut executed_jerk_energy = 0.0;
    let mut max_decel_applied = 0.0_f64;
    let mut failsafe_decel: Option<f64> = None;
    let mut emergency = false;
    let mut collided = false;
    let mut stopped_since: Option<f64> = None;

    let mut step = 0usize;
    let mut final_class = None;

    'episode: while final_class.is_none() {
        let t_now = step as f64 * cfg.dt_sim;
        if t_now >= cfg.episode_t_max - cfg.dt_cycle {
            // safety cap; classify by the current lock/fallback state
            final_class = Some(lock.locked_class().unwrap_or(DecisionClass::GentleStop));
            break;
        }

        let meas = measure(&world, cfg.scenario.sigma_s, &mut rng_meas);
        update_filters(
            &mut estimates,
            &meas,
            r_meas,
            cfg.dt_cycle,
            cfg.process_noise,
            cfg.idm.v0,
            t_now,
        )
        .expect("filter parameters validated by config");
        let objects: Vec<_> = estimates.iter().flatten().copied().collect();

        let t0 = Instant::now();
        let (decision, new_lock) = plan_cycle(t_now, &world.ego, &objects, None, &map, &pcfg, &lock);
        cycle_log.push(CycleTiming {
            class: decision.class,
            millis: t0.elapsed().as_secs_f64() * 1e3,
        });
        lock = new_lock;
        emergency |= decision.emergency;

        if decision.class == DecisionClass::FailSafe {
            if let Some(cd) = decision.trajectory.constant_decel() {
                failsafe_decel = Some(failsafe_decel.unwrap_or(0.0).max(cd.b));
            }
        }

        // execute one cycle of the decision trajectory
        let traj = &decision.trajectory;
        for sub in 0..steps_per_cycle {
            let tau0 = decision.time_offset + sub as f64 * cfg.dt_sim;
            let tau1 = tau0 + cfg.dt_sim;
            if traj.kind() != TrajectoryKind::ConstantDeceleration {
                executed_jerk_energy += quad::integrate(
                    |t| {
                        let (_, u) = traj.eval_clamped(t);
                        u * u
                    },
                    tau0,
                    tau1.min(traj.t_f).max(tau0),
                    1e-8,
                );
            }
            let (ego_next, _) = traj.eval_clamped(tau1);
            max_decel_applied = max_decel_applied.max(-ego_next.a);
            world.ego = ego_next;
            step += 1;
            world.vehicles = rollout.states[step.min(rollout.states.len() - 1)].clone();
            world.t = step as f64 * cfg.dt_sim;
            if audit_step(&world.ego, world.ego_length, &world.vehicles, map.s_merge) {
                collided = true;
                final_class = Some(effective_class(&decision, &lock));
                break 'episode;
            }
        }

        // termination checks
        let offset_end = decision.time_offset + cfg.dt_cycle;
        match effective_class(&decision, &lock) {
            c @ (DecisionClass::MergeBeforeFirst | DecisionClass::MergeIntoGap) => {
                if offset_end >= traj.t_f - 1e-9 {
                    final_class = Some(c);
                }
            }
            DecisionClass::GentleStop => {
                let at_rest = world.ego.v < 1e-3 && (world.ego.s - map.s_yield).abs() < 0.5;
                if at_rest {
                    let since = *stopped_since.get_or_insert(world.t);
                    if world.t - since >= cfg.stop_grace - 1e-9 {
                        final_class = Some(DecisionClass::GentleStop);
                    }
                } else {
                    stopped_since = None;
                }
            }
            DecisionClass::FailSafe => {
                if world.ego.v <= 1e-9 {
                    final_class = Some(DecisionClass::FailSafe);
                }
            }
            DecisionClass::Locked => unreachable!("effective_class resolves locks"),
        }
        if final_class.is_none() && effective_class(&decision, &lock) != DecisionClass::GentleStop {
            stopped_since = None;
        }
    }

    EpisodeResult {
        decision_class: final_class.expect("loop sets the class before exiting"),
        collided,
        max_decel_applied,
        executed_jerk_energy,
        cycle_log,
        failsafe_decel,
        emergency,
        rollout_digest: rollout.digest(),
        seed,
    }
}

fn effective_class(decision: &crate::planner::Decision, lock: &LockState) -> DecisionClass {
    match decision.class {
        DecisionClass::Locked => lock
            .locked_class()
            .expect("locked decisions carry their lock state"),
        c => c,
    }
}
