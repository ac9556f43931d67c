//! Run configuration: every tunable with its default, a line-oriented
//! `key = value` file format, and key-by-key overrides.

use std::fs;
use std::path::Path;

use crate::planner::{LocalMap, PlannerConfig};
use crate::risk::SafetyParams;
use crate::sim::{IdmParams, ScenarioConfig};
use crate::state::{DynamicLimits, Error, Result};

/// Complete configuration of a run. Construct with [`RunConfig::default`],
/// then layer a config file and per-key overrides on top.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Master seed; all randomness derives from it.
    pub seed: u64,
    /// Worker threads for sweeps (0 = available parallelism).
    pub threads: usize,
    /// Output directory for CSV files.
    pub out_dir: String,

    pub limits: DynamicLimits,
    pub safety: SafetyParams,
    pub idm: IdmParams,
    pub scenario: ScenarioConfig,

    /// Time weight of merge trajectories.
    pub w_t: f64,
    /// World integration step (s).
    pub dt_sim: f64,
    /// Replanning cadence (s); must be a multiple of `dt_sim`.
    pub dt_cycle: f64,
    /// Prediction grid step (s).
    pub dt_pred: f64,
    /// Arrival-time sampling step (s).
    pub dt_f: f64,
    /// Constraint sampling step (s).
    pub dt_check: f64,
    /// Point-of-no-return scan step (s).
    pub dt_pnr: f64,
    /// Prediction process-noise intensity (m²/s⁴).
    pub process_noise: f64,
    /// Candidate/prediction horizon (s).
    pub predict_horizon: f64,

    /// Map target speed at the merge (m/s); also the before-first goal
    /// speed. Distinct from the dynamic limit `v_max`.
    pub v_target: f64,
    /// Merge-point position on the shared axis (m).
    pub s_merge: f64,
    /// Yield line sits this far before the merge point (m).
    pub s_yield_offset: f64,
    /// Sensing range (m).
    pub sight_range: f64,
    /// Objects farther past the merge point are dropped (m).
    pub clearance_past_merge: f64,

    /// Comfortable deceleration bound of the gentle stop (m/s²).
    pub comfort_decel: f64,
    /// Gentle-stop horizon grid step (s).
    pub gentle_dt: f64,
    /// Gentle-stop maximum horizon (s).
    pub gentle_t_max: f64,

    /// Episode wall-time cap (s).
    pub episode_t_max: f64,
    /// Grace period after a completed stop before classifying (s).
    pub stop_grace: f64,

    /// Sweep: smallest gap (m).
    pub gap_min: f64,
    /// Sweep: largest gap (m).
    pub gap_max: f64,
    /// Sweep: gap step (m).
    pub gap_step: f64,
    /// Sweep: time weights to evaluate.
    pub w_t_set: Vec<f64>,
    /// Sweep: episodes per cell.
    pub runs: usize,

    /// Replay: experiment horizon (s).
    pub replay_t_f: f64,
    /// Replay: target lock time (s).
    pub replay_lock_time: f64,
    /// Replay: number of noise seeds for the comparison.
    pub replay_seeds: usize,
    /// Replay: nominal target position (m).
    pub replay_target_s: f64,
    /// Replay: nominal target speed (m/s).
    pub replay_target_v: f64,
    /// Replay: initial std dev of the target-position noise (m).
    pub replay_noise_sigma_s: f64,
    /// Replay: initial std dev of the target-speed noise (m/s).
    pub replay_noise_sigma_v: f64,
    /// Replay: probability of holding the previous noise sample per cycle.
    pub replay_noise_hold: f64,

    /// Benchmark: minimum number of timed plan cycles.
    pub bench_cycles: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: 0,
            out_dir: "out".into(),
            limits: DynamicLimits::default(),
            safety: SafetyParams::default(),
            idm: IdmParams::default(),
            scenario: ScenarioConfig::default(),
            w_t: 12.5,
            dt_sim: 0.08,
            dt_cycle: 0.08,
            dt_pred: 0.08,
            dt_f: 0.2,
            dt_check: 0.2,
            dt_pnr: 0.08,
            process_noise: 0.0625,
            predict_horizon: 15.0,
            v_target: 30.0 / 3.6,
            s_merge: 100.0,
            s_yield_offset: 3.0,
            sight_range: 200.0,
            clearance_past_merge: 20.0,
            comfort_decel: 2.5,
            gentle_dt: 0.25,
            gentle_t_max: 20.0,
            episode_t_max: 60.0,
            stop_grace: 2.0,
            gap_min: 30.0,
            gap_max: 65.0,
            gap_step: 5.0,
            w_t_set: vec![1.0, 2.0, 5.0, 12.5, 25.0],
            runs: 1000,
            replay_t_f: 9.52,
            replay_lock_time: 7.44,
            replay_seeds: 50,
            replay_target_s: 85.0,
            replay_target_v: 10.0,
            replay_noise_sigma_s: 10.0,
            replay_noise_sigma_v: 1.5,
            replay_noise_hold: 0.3,
            bench_cycles: 1000,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse value '{value}' for key '{key}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|p| parse::<f64>(key, p))
        .collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// One macro expands the key table into both `set` and `entries`, so the
/// parser and the `defaults` printer cannot drift apart.
macro_rules! config_keys {
    ($self:ident, $($key:literal => $field:expr, $get:expr;)+) => {
        pub fn set(&mut $self, key: &str, value: &str) -> Result<()> {
            match key {
                $($key => { $field(value)?; Ok(()) })+
                _ => Err(Error::Config(format!("unknown config key '{key}'"))),
            }
        }

        /// All keys with their current values, in declaration order.
        pub fn entries(&$self) -> Vec<(&'static str, String)> {
            vec![$(($key, $get)),+]
        }
    };
}

impl RunConfig {
    config_keys! { self,
        "seed" => |v| -> Result<()> { self.seed = parse("seed", v)?; self.scenario.seed = self.seed; Ok(()) }, self.seed.to_string();
        "threads" => |v| -> Result<()> { self.threads = parse("threads", v)?; Ok(()) }, self.threads.to_string();
        "out_dir" => |v: &str| -> Result<()> { self.out_dir = v.trim().to_string(); Ok(()) }, self.out_dir.clone();
        "a_min" => |v| -> Result<()> { self.limits.a_min = parse("a_min", v)?; Ok(()) }, self.limits.a_min.to_string();
        "a_max" => |v| -> Result<()> { self.limits.a_max = parse("a_max", v)?; Ok(()) }, self.limits.a_max.to_string();
        "v_max" => |v| -> Result<()> { self.limits.v_max = parse("v_max", v)?; Ok(()) }, self.limits.v_max.to_string();
        "b_max" => |v| -> Result<()> { self.limits.b_max = parse("b_max", v)?; Ok(()) }, self.limits.b_max.to_string();
        "t_safety" => |v| -> Result<()> { self.safety.t_safety = parse("t_safety", v)?; Ok(()) }, self.safety.t_safety.to_string();
        "s_margin" => |v| -> Result<()> { self.safety.s_margin = parse("s_margin", v)?; Ok(()) }, self.safety.s_margin.to_string();
        "p_residual_max" => |v| -> Result<()> { self.safety.p_residual_max = parse("p_residual_max", v)?; Ok(()) }, self.safety.p_residual_max.to_string();
        "w_risk_a" => |v| -> Result<()> { self.safety.w_risk_a = parse("w_risk_a", v)?; Ok(()) }, self.safety.w_risk_a.to_string();
        "w_risk_b" => |v| -> Result<()> { self.safety.w_risk_b = parse("w_risk_b", v)?; Ok(()) }, self.safety.w_risk_b.to_string();
        "idm_v0" => |v| -> Result<()> { self.idm.v0 = parse("idm_v0", v)?; Ok(()) }, self.idm.v0.to_string();
        "idm_t_headway" => |v| -> Result<()> { self.idm.t_headway = parse("idm_t_headway", v)?; Ok(()) }, self.idm.t_headway.to_string();
        "idm_s0" => |v| -> Result<()> { self.idm.s0 = parse("idm_s0", v)?; Ok(()) }, self.idm.s0.to_string();
        "idm_a_max" => |v| -> Result<()> { self.idm.a_max = parse("idm_a_max", v)?; Ok(()) }, self.idm.a_max.to_string();
        "idm_b_comf" => |v| -> Result<()> { self.idm.b_comf = parse("idm_b_comf", v)?; Ok(()) }, self.idm.b_comf.to_string();
        "idm_delta" => |v| -> Result<()> { self.idm.delta = parse("idm_delta", v)?; Ok(()) }, self.idm.delta.to_string();
        "gap_size" => |v| -> Result<()> { self.scenario.gap_size = parse("gap_size", v)?; Ok(()) }, self.scenario.gap_size.to_string();
        "arrival_min" => |v| -> Result<()> { self.scenario.arrival_interval.0 = parse("arrival_min", v)?; Ok(()) }, self.scenario.arrival_interval.0.to_string();
        "arrival_max" => |v| -> Result<()> { self.scenario.arrival_interval.1 = parse("arrival_max", v)?; Ok(()) }, self.scenario.arrival_interval.1.to_string();
        "v_init_others" => |v| -> Result<()> { self.scenario.v_init_others = parse("v_init_others", v)?; Ok(()) }, self.scenario.v_init_others.to_string();
        "sigma_v" => |v| -> Result<()> { self.scenario.sigma_v = parse("sigma_v", v)?; Ok(()) }, self.scenario.sigma_v.to_string();
        "sigma_a" => |v| -> Result<()> { self.scenario.sigma_a = parse("sigma_a", v)?; Ok(()) }, self.scenario.sigma_a.to_string();
        "sigma_s" => |v| -> Result<()> { self.scenario.sigma_s = parse("sigma_s", v)?; Ok(()) }, self.scenario.sigma_s.to_string();
        "ego_v_min" => |v| -> Result<()> { self.scenario.ego_v_interval.0 = parse("ego_v_min", v)?; Ok(()) }, self.scenario.ego_v_interval.0.to_string();
        "ego_v_max" => |v| -> Result<()> { self.scenario.ego_v_interval.1 = parse("ego_v_max", v)?; Ok(()) }, self.scenario.ego_v_interval.1.to_string();
        "ego_start_offset" => |v| -> Result<()> { self.scenario.ego_start_offset = parse("ego_start_offset", v)?; Ok(()) }, self.scenario.ego_start_offset.to_string();
        "vehicle_length" => |v| -> Result<()> { self.scenario.vehicle_length = parse("vehicle_length", v)?; Ok(()) }, self.scenario.vehicle_length.to_string();
        "ego_length" => |v| -> Result<()> { self.scenario.ego_length = parse("ego_length", v)?; Ok(()) }, self.scenario.ego_length.to_string();
        "w_t" => |v| -> Result<()> { self.w_t = parse("w_t", v)?; Ok(()) }, self.w_t.to_string();
        "dt_sim" => |v| -> Result<()> { self.dt_sim = parse("dt_sim", v)?; Ok(()) }, self.dt_sim.to_string();
        "dt_cycle" => |v| -> Result<()> { self.dt_cycle = parse("dt_cycle", v)?; Ok(()) }, self.dt_cycle.to_string();
        "dt_pred" => |v| -> Result<()> { self.dt_pred = parse("dt_pred", v)?; Ok(()) }, self.dt_pred.to_string();
        "dt_f" => |v| -> Result<()> { self.dt_f = parse("dt_f", v)?; Ok(()) }, self.dt_f.to_string();
        "dt_check" => |v| -> Result<()> { self.dt_check = parse("dt_check", v)?; Ok(()) }, self.dt_check.to_string();
        "dt_pnr" => |v| -> Result<()> { self.dt_pnr = parse("dt_pnr", v)?; Ok(()) }, self.dt_pnr.to_string();
        "process_noise" => |v| -> Result<()> { self.process_noise = parse("process_noise", v)?; Ok(()) }, self.process_noise.to_string();
        "predict_horizon" => |v| -> Result<()> { self.predict_horizon = parse("predict_horizon", v)?; Ok(()) }, self.predict_horizon.to_string();
        "v_target" => |v| -> Result<()> { self.v_target = parse("v_target", v)?; Ok(()) }, self.v_target.to_string();
        "s_merge" => |v| -> Result<()> { self.s_merge = parse("s_merge", v)?; Ok(()) }, self.s_merge.to_string();
        "s_yield_offset" => |v| -> Result<()> { self.s_yield_offset = parse("s_yield_offset", v)?; Ok(()) }, self.s_yield_offset.to_string();
        "sight_range" => |v| -> Result<()> { self.sight_range = parse("sight_range", v)?; Ok(()) }, self.sight_range.to_string();
        "clearance_past_merge" => |v| -> Result<()> { self.clearance_past_merge = parse("clearance_past_merge", v)?; Ok(()) }, self.clearance_past_merge.to_string();
        "comfort_decel" => |v| -> Result<()> { self.comfort_decel = parse("comfort_decel", v)?; Ok(()) }, self.comfort_decel.to_string();
        "gentle_dt" => |v| -> Result<()> { self.gentle_dt = parse("gentle_dt", v)?; Ok(()) }, self.gentle_dt.to_string();
        "gentle_t_max" => |v| -> Result<()> { self.gentle_t_max = parse("gentle_t_max", v)?; Ok(()) }, self.gentle_t_max.to_string();
        "episode_t_max" => |v| -> Result<()> { self.episode_t_max = parse("episode_t_max", v)?; Ok(()) }, self.episode_t_max.to_string();
        "stop_grace" => |v| -> Result<()> { self.stop_grace = parse("stop_grace", v)?; Ok(()) }, self.stop_grace.to_string();
        "gap_min" => |v| -> Result<()> { self.gap_min = parse("gap_min", v)?; Ok(()) }, self.gap_min.to_string();
        "gap_max" => |v| -> Result<()> { self.gap_max = parse("gap_max", v)?; Ok(()) }, self.gap_max.to_string();
        "gap_step" => |v| -> Result<()> { self.gap_step = parse("gap_step", v)?; Ok(()) }, self.gap_step.to_string();
        "w_t_set" => |v| -> Result<()> { self.w_t_set = parse_list("w_t_set", v)?; Ok(()) }, fmt_list(&self.w_t_set);
        "runs" => |v| -> Result<()> { self.runs = parse("runs", v)?; Ok(()) }, self.runs.to_string();
        "replay_t_f" => |v| -> Result<()> { self.replay_t_f = parse("replay_t_f", v)?; Ok(()) }, self.replay_t_f.to_string();
        "replay_lock_time" => |v| -> Result<()> { self.replay_lock_time = parse("replay_lock_time", v)?; Ok(()) }, self.replay_lock_time.to_string();
        "replay_seeds" => |v| -> Result<()> { self.replay_seeds = parse("replay_seeds", v)?; Ok(()) }, self.replay_seeds.to_string();
        "replay_target_s" => |v| -> Result<()> { self.replay_target_s = parse("replay_target_s", v)?; Ok(()) }, self.replay_target_s.to_string();
        "replay_target_v" => |v| -> Result<()> { self.replay_target_v = parse("replay_target_v", v)?; Ok(()) }, self.replay_target_v.to_string();
        "replay_noise_sigma_s" => |v| -> Result<()> { self.replay_noise_sigma_s = parse("replay_noise_sigma_s", v)?; Ok(()) }, self.replay_noise_sigma_s.to_string();
        "replay_noise_sigma_v" => |v| -> Result<()> { self.replay_noise_sigma_v = parse("replay_noise_sigma_v", v)?; Ok(()) }, self.replay_noise_sigma_v.to_string();
        "replay_noise_hold" => |v| -> Result<()> { self.replay_noise_hold = parse("replay_noise_hold", v)?; Ok(()) }, self.replay_noise_hold.to_string();
        "bench_cycles" => |v| -> Result<()> { self.bench_cycles = parse("bench_cycles", v)?; Ok(()) }, self.bench_cycles.to_string();
    }

    /// Parses a `key = value` config file (`#` starts a comment) over the
    /// defaults. Unknown keys are rejected.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies config-file text on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected 'key = value', got '{raw}'"),
                });
            };
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.limits.validate()?;
        self.safety.validate()?;
        if !(self.w_t >= 1.0) {
            return Err(Error::Config(format!("w_t must be >= 1, got {}", self.w_t)));
        }
        for &w in &self.w_t_set {
            if !(w >= 1.0) {
                return Err(Error::Config(format!("w_t_set entries must be >= 1, got {w}")));
            }
        }
        for (name, v) in [
            ("dt_sim", self.dt_sim),
            ("dt_cycle", self.dt_cycle),
            ("dt_pred", self.dt_pred),
            ("dt_f", self.dt_f),
            ("dt_check", self.dt_check),
            ("dt_pnr", self.dt_pnr),
            ("predict_horizon", self.predict_horizon),
            ("gentle_dt", self.gentle_dt),
            ("gentle_t_max", self.gentle_t_max),
            ("episode_t_max", self.episode_t_max),
            ("comfort_decel", self.comfort_decel),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let ratio = self.dt_cycle / self.dt_sim;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 - 1e-9 {
            return Err(Error::Config(format!(
                "dt_cycle ({}) must be a positive multiple of dt_sim ({})",
                self.dt_cycle, self.dt_sim
            )));
        }
        if self.scenario.arrival_interval.0 > self.scenario.arrival_interval.1
            || self.scenario.ego_v_interval.0 > self.scenario.ego_v_interval.1
        {
            return Err(Error::Config("intervals must be well ordered".into()));
        }
        if !(self.scenario.gap_size > 0.0) {
            return Err(Error::Config(format!(
                "gap_size must be > 0, got {}",
                self.scenario.gap_size
            )));
        }
        if self.runs < 1 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if self.v_target > self.limits.v_max {
            return Err(Error::Config(format!(
                "v_target ({}) exceeds the dynamic limit v_max ({})",
                self.v_target, self.limits.v_max
            )));
        }
        self.local_map().validate()?;
        Ok(())
    }

    pub fn local_map(&self) -> LocalMap {
        LocalMap {
            s_yield: self.s_merge - self.s_yield_offset,
            s_merge: self.s_merge,
            v_max: self.v_target,
            sight_range: self.sight_range,
        }
    }

    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            limits: self.limits,
            safety: self.safety,
            w_t: self.w_t,
            dt_f: self.dt_f,
            horizon: self.predict_horizon,
            dt_pred: self.dt_pred,
            process_noise: self.process_noise,
            dt_check: self.dt_check,
            dt_pnr: self.dt_pnr,
            dt_cycle: self.dt_cycle,
            comfort_decel: self.comfort_decel,
            gentle_dt: self.gentle_dt,
            gentle_t_max: self.gentle_t_max,
            clearance_past_merge: self.clearance_past_merge,
        }
    }

    /// Sweep gap list from `gap_min..=gap_max` in `gap_step` increments.
    pub fn sweep_gaps(&self) -> Vec<f64> {
        let mut gaps = Vec::new();
        let mut g = self.gap_min;
        while g <= self.gap_max + 1e-9 {
            gaps.push(g);
            g += self.gap_step;
        }
        gaps
    }
}
