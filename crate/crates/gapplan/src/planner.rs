//! The per-cycle planning scheme: preprocessing, merge-option enumeration
//! and evaluation, gentle stop, fail-safe, cost-optimal selection, and
//! trajectory locking beyond the point of no return.

use std::io::{self, Write};

use crate::predict::{kalman_update, predict_horizon, ObjectEstimate, PredictionTrack};
use crate::risk::{risk_ahead, risk_behind, safety_positions, SafetyParams};
use crate::state::{DynamicLimits, Error, Result, State1D};
use crate::trajgen::{
    self, check_constraints, compute_pnr, constant_deceleration, jerk_cost, solve_quintic,
    solve_time_weighted, Trajectory,
};

pub use crate::predict::PredictionTrack as Track;

/// Local map abstraction: everything is an arc length on one axis that the
/// ego path and the main road share from the merge point on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMap {
    /// Yield-line position on the ego path (m).
    pub s_yield: f64,
    /// Merge-point position (m).
    pub s_merge: f64,
    /// Map target speed (m/s).
    pub v_max: f64,
    /// Sensing range around the merge point (m).
    pub sight_range: f64,
}

impl LocalMap {
    pub fn validate(&self) -> Result<()> {
        if self.s_yield > self.s_merge {
            return Err(Error::InvalidArgument(format!(
                "s_yield ({}) must not exceed s_merge ({})",
                self.s_yield, self.s_merge
            )));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::InvalidArgument(format!("map v_max must be > 0, got {}", self.v_max)));
        }
        Ok(())
    }
}

/// Which merge option a candidate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    /// Merge ahead of the first vehicle to arrive.
    BeforeFirst,
    /// Merge into the gap behind vehicle `i` of the preprocessed list.
    IntoGap(usize),
    /// Merge behind the last vehicle (open gap to the end of sight).
    BehindLast,
}

/// A fully evaluated merge option.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeCandidate {
    /// Arrival time (s).
    pub t_f: f64,
    /// Target state (position, matched speed, zero acceleration).
    pub target: State1D,
    pub trajectory: Trajectory,
    /// Point of no return along the trajectory, absent if already beyond.
    pub pnr: Option<(f64, State1D)>,
    pub p_risk_a: f64,
    pub p_risk_b: f64,
    /// Jerk cost plus weighted residual risks.
    pub cost: f64,
    pub option_kind: OptionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionClass {
    MergeBeforeFirst,
    MergeIntoGap,
    GentleStop,
    FailSafe,
    Locked,
}

impl DecisionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecisionClass::MergeBeforeFirst => "before_first",
            DecisionClass::MergeIntoGap => "into_gap",
            DecisionClass::GentleStop => "gentle_stop",
            DecisionClass::FailSafe => "fail_safe",
            DecisionClass::Locked => "locked",
        }
    }
}

/// Output of one planning cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub class: DecisionClass,
    pub trajectory: Trajectory,
    pub candidate: Option<MergeCandidate>,
    pub lock_engaged: bool,
    /// Execution offset into `trajectory` at the cycle start; nonzero only
    /// for locked decisions, which reuse the trajectory planned at lock
    /// time.
    pub time_offset: f64,
    /// Set when a fail-safe cannot stop at the yield line even at `b_max`.
    pub emergency: bool,
}

/// Lock status carried between planning cycles.
#[derive(Debug, Clone, Default)]
pub struct LockState {
    locked: Option<LockedPlan>,
}

#[derive(Debug, Clone)]
struct LockedPlan {
    trajectory: Trajectory,
    class: DecisionClass,
    candidate: Option<MergeCandidate>,
    t_lock: f64,
}

impl LockState {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_locked(&self) -> bool {
        self.locked.is_some()
    }

    /// Decision class recorded at lock time, if locked.
    pub fn locked_class(&self) -> Option<DecisionClass> {
        self.locked.as_ref().map(|l| l.class)
    }
}

/// Planner knobs. Limits and safety parameters are embedded so a planner
/// cycle is a pure function of (inputs, config).
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub limits: DynamicLimits,
    pub safety: SafetyParams,
    /// Time weight for merge trajectories (>= 1).
    pub w_t: f64,
    /// Arrival-time sampling step (s).
    pub dt_f: f64,
    /// Planning horizon for candidate arrival times (s).
    pub horizon: f64,
    /// Prediction grid step (s).
    pub dt_pred: f64,
    /// Process-noise intensity of the prediction (m²/s⁴).
    pub process_noise: f64,
    /// Constraint sampling step (s).
    pub dt_check: f64,
    /// Point-of-no-return scan step (s).
    pub dt_pnr: f64,
    /// Replanning cadence (s); used for the lock-engagement test.
    pub dt_cycle: f64,
    /// Comfortable deceleration bound for the gentle stop (m/s², positive).
    pub comfort_decel: f64,
    /// Gentle-stop horizon grid step (s).
    pub gentle_dt: f64,
    /// Gentle-stop maximum horizon (s).
    pub gentle_t_max: f64,
    /// Objects farther past the merge point than this are irrelevant (m).
    pub clearance_past_merge: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            limits: DynamicLimits::default(),
            safety: SafetyParams::default(),
            w_t: 12.5,
            dt_f: 0.2,
            horizon: 15.0,
            dt_pred: 0.08,
            process_noise: 0.0625,
            dt_check: 0.2,
            dt_pnr: 0.08,
            dt_cycle: 0.08,
            comfort_decel: 2.5,
            gentle_dt: 0.25,
            gentle_t_max: 20.0,
            clearance_past_merge: 20.0,
        }
    }
}

/// A sampled arrival-time/target pair with its residual risks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetCandidate {
    pub t_f: f64,
    pub target: State1D,
    pub p_a: f64,
    pub p_b: f64,
}

fn distance_to_merge(obj: &ObjectEstimate, map: &LocalMap) -> f64 {
    map.s_merge - obj.s_hat
}

fn preprocess_indices(objects: &[ObjectEstimate], map: &LocalMap, clearance: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..objects.len())
        .filter(|&i| {
            let d = distance_to_merge(&objects[i], map);
            d <= map.sight_range && d >= -clearance
        })
        .collect();
    idx.sort_by(|&a, &b| {
        distance_to_merge(&objects[a], map)
            .partial_cmp(&distance_to_merge(&objects[b], map))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

/// Keeps objects within sight and not substantially past the merge point,
/// sorted ascending by distance to the merge point (first element = next
/// to arrive).
pub fn preprocess(objects: &[ObjectEstimate], map: &LocalMap, clearance: f64) -> Vec<ObjectEstimate> {
    preprocess_indices(objects, map, clearance)
        .into_iter()
        .map(|i| objects[i])
        .collect()
}

/// Enumerates arrival times for merging into the gap behind `ahead` (and
/// ahead of `behind`, when present). The scan starts at the first time the
/// ahead-vehicle risk is acceptable and stops once the behind-vehicle risk
/// is not. Targets match the ahead vehicle's predicted speed.
pub fn enumerate_gap_targets(
    ahead: &PredictionTrack,
    behind: Option<&PredictionTrack>,
    map: &LocalMap,
    params: &SafetyParams,
    dt_f: f64,
    horizon: f64,
) -> Vec<TargetCandidate> {
    let mut out = Vec::new();
    let n = (horizon / dt_f + 1e-9).floor() as usize;
    let mut started = false;
    for k in 1..=n {
        let t_f = k as f64 * dt_f;
        let est_a = ahead.sample(t_f);
        let (v_b, l_b) = behind
            .map(|tr| {
                let e = tr.sample(t_f);
                (e.v_hat, e.length)
            })
            .unwrap_or((0.0, 0.0));
        let (s_safety_a, s_safety_b) =
            safety_positions(map.s_merge, est_a.v_hat, v_b, est_a.length, l_b, params);
        let p_a = risk_ahead(ahead, s_safety_a, t_f);
        if !started {
            if p_a <= params.p_residual_max {
                started = true;
            } else {
                continue;
            }
        }
        let p_b = behind.map(|tr| risk_behind(tr, s_safety_b, t_f)).unwrap_or(0.0);
        if p_b > params.p_residual_max {
            break;
        }
        if p_a > params.p_residual_max {
            continue;
        }
        out.push(TargetCandidate {
            t_f,
            target: State1D::new(map.s_merge, est_a.v_hat, 0.0),
            p_a,
            p_b,
        });
    }
    out
}

/// Enumerates arrival times for merging before the first vehicle (which
/// then acts as the vehicle behind the ego). The search runs backward from
/// the last time its risk is acceptable, emitting targets at the map speed
/// until the ego connection becomes dynamically infeasible. `first = None`
/// is the free-road case (no risk bound, full horizon).
pub fn enumerate_before_first_targets(
    first: Option<&PredictionTrack>,
    ego: &State1D,
    map: &LocalMap,
    limits: &DynamicLimits,
    params: &SafetyParams,
    cfg: &PlannerConfig,
) -> Vec<TargetCandidate> {
    let n = (cfg.horizon / cfg.dt_f + 1e-9).floor() as usize;
    let risk_at = |t_f: f64| -> f64 {
        match first {
            Some(tr) => {
                let e = tr.sample(t_f);
                let (_, s_safety_b) =
                    safety_positions(map.s_merge, 0.0, e.v_hat, 0.0, e.length, params);
                risk_behind(tr, s_safety_b, t_f)
            }
            None => 0.0,
        }
    };
    // latest compliant arrival time
    let mut k_end = None;
    for k in (1..=n).rev() {
        if risk_at(k as f64 * cfg.dt_f) <= params.p_residual_max {
            k_end = Some(k);
            break;
        }
    }
    let Some(k_end) = k_end else {
        return Vec::new();
    };
    // Close to the merge point the latest arrival times may themselves be
    // dynamically infeasible (they would require loitering into reverse), so
    // the backward scan skips an infeasible tail first and stops once the
    // feasible window ends.
    let mut out = Vec::new();
    let mut found_any = false;
    for k in (1..=k_end).rev() {
        let t_f = k as f64 * cfg.dt_f;
        let p_b = risk_at(t_f);
        if p_b > params.p_residual_max {
            continue;
        }
        let target = State1D::new(map.s_merge, map.v_max, 0.0);
        let feasible = solve_time_weighted(*ego, target, t_f, cfg.w_t)
            .map(|tr| check_constraints(&tr, limits, cfg.dt_check).valid)
            .unwrap_or(false);
        if feasible {
            found_any = true;
            out.push(TargetCandidate {
                t_f,
                target,
                p_a: 0.0,
                p_b,
            });
        } else if found_any {
            break;
        }
    }
    out.reverse();
    out
}

/// Connects the ego state to one target, checks dynamic feasibility,
/// computes the point of no return, and prices the option. Residual risks
/// are carried over from the enumeration that produced the target.
pub fn evaluate_option(
    ego: &State1D,
    cand: &TargetCandidate,
    kind: OptionKind,
    map: &LocalMap,
    limits: &DynamicLimits,
    params: &SafetyParams,
    cfg: &PlannerConfig,
) -> Option<MergeCandidate> {
    let trajectory = solve_time_weighted(*ego, cand.target, cand.t_f, cfg.w_t).ok()?;
    if !check_constraints(&trajectory, limits, cfg.dt_check).valid {
        return None;
    }
    let pnr = compute_pnr(&trajectory, map.s_yield, limits.b_max, cfg.dt_pnr);
    let cost = jerk_cost(&trajectory) + params.w_risk_a * cand.p_a + params.w_risk_b * cand.p_b;
    Some(MergeCandidate {
        t_f: cand.t_f,
        target: cand.target,
        trajectory,
        pnr,
        p_risk_a: cand.p_a,
        p_risk_b: cand.p_b,
        cost,
        option_kind: kind,
    })
}

/// Searches horizon candidates for a comfortable stop at the yield line.
/// Returns the feasible quintic of minimal jerk cost, or `None` when no
/// comfortable stop exists (the caller falls through to the fail-safe).
pub fn plan_gentle_stop(
    ego: &State1D,
    map: &LocalMap,
    limits: &DynamicLimits,
    cfg: &PlannerConfig,
) -> Option<Trajectory> {
    if ego.s > map.s_yield + 1e-9 {
        return None;
    }
    let comfort = DynamicLimits {
        a_min: -cfg.comfort_decel,
        ..*limits
    };
    let target = State1D::new(map.s_yield, 0.0, 0.0);
    let t_min = (1.5 * ego.v / cfg.comfort_decel).max(cfg.gentle_dt);
    let mut best: Option<(f64, Trajectory)> = None;
    let mut t_f = t_min;
    while t_f <= cfg.gentle_t_max + 1e-9 {
        if let Ok(tr) = solve_quintic(*ego, target, t_f) {
            if check_constraints(&tr, &comfort, cfg.dt_check).valid {
                let cost = jerk_cost(&tr);
                if best.as_ref().map_or(true, |(c, _)| cost < *c) {
                    best = Some((cost, tr));
                }
            }
        }
        t_f += cfg.gentle_dt;
    }
    best.map(|(_, tr)| tr)
}

/// Constant-deceleration stop at the yield line. When the required
/// deceleration exceeds `b_max` (or the ego is already past the line),
/// brakes at `b_max` and flags an emergency.
pub fn fail_safe(ego: &State1D, map: &LocalMap, b_max: f64) -> (Trajectory, bool) {
    let v = ego.v.max(0.0);
    if v <= 0.0 {
        let tr = constant_deceleration(State1D::new(ego.s, 0.0, 0.0), 0.0)
            .expect("zero-speed fail-safe is always constructible");
        return (tr, false);
    }
    let dist = map.s_yield - ego.s;
    let x0 = State1D::new(ego.s, v, ego.a);
    if dist <= 0.0 {
        let tr = constant_deceleration(x0, b_max).expect("full braking is always constructible");
        return (tr, true);
    }
    let b = v * v / (2.0 * dist);
    if b <= b_max + 1e-12 {
        let tr = constant_deceleration(x0, b).expect("required braking is feasible");
        (tr, false)
    } else {
        let tr = constant_deceleration(x0, b_max).expect("full braking is always constructible");
        (tr, true)
    }
}

/// Runs one full planning cycle.
///
/// When a lock is active the stored trajectory is returned shifted by the
/// elapsed time. Otherwise: preprocess, predict when no predictions are
/// supplied, enumerate before-first plus every consecutive gap (the last
/// vehicle spans an open gap to the end of sight), pick the cheapest valid
/// candidate, and fall back to the gentle stop and then the fail-safe.
/// A merge decision whose point of no return would be crossed before the
/// next cycle engages the lock.
pub fn plan_cycle(
    t_now: f64,
    ego: &State1D,
    objects: &[ObjectEstimate],
    predictions: Option<&[PredictionTrack]>,
    map: &LocalMap,
    cfg: &PlannerConfig,
    lock: &LockState,
) -> (Decision, LockState) {
    if let Some(lp) = &lock.locked {
        let elapsed = t_now - lp.t_lock;
        if elapsed < lp.trajectory.t_f - 1e-9 {
            return (
                Decision {
                    class: DecisionClass::Locked,
                    trajectory: lp.trajectory.clone(),
                    candidate: lp.candidate.clone(),
                    lock_engaged: true,
                    time_offset: elapsed,
                    emergency: false,
                },
                lock.clone(),
            );
        }
        // lock expired at its horizon; replan from scratch
    }

    let order = preprocess_indices(objects, map, cfg.clearance_past_merge);
    let tracks: Vec<PredictionTrack> = match predictions {
        Some(p) => order.iter().map(|&i| p[i].clone()).collect(),
        None => order
            .iter()
            .map(|&i| {
                predict_horizon(&objects[i], cfg.horizon, cfg.dt_pred, cfg.process_noise)
                    .expect("horizon and dt_pred validated by config")
            })
            .collect(),
    };

    let mut candidates: Vec<MergeCandidate> = Vec::new();
    for tc in enumerate_before_first_targets(tracks.first(), ego, map, &cfg.limits, &cfg.safety, cfg)
    {
        if let Some(c) = evaluate_option(ego, &tc, OptionKind::BeforeFirst, map, &cfg.limits, &cfg.safety, cfg) {
            candidates.push(c);
        }
    }
    for i in 0..tracks.len() {
        let behind = tracks.get(i + 1);
        let kind = if behind.is_some() {
            OptionKind::IntoGap(i)
        } else {
            OptionKind::BehindLast
        };
        for tc in enumerate_gap_targets(&tracks[i], behind, map, &cfg.safety, cfg.dt_f, cfg.horizon)
        {
            if let Some(c) = evaluate_option(ego, &tc, kind, map, &cfg.limits, &cfg.safety, cfg) {
                candidates.push(c);
            }
        }
    }

    let best = candidates.into_iter().min_by(|a, b| {
        (a.cost, a.t_f)
            .partial_cmp(&(b.cost, b.t_f))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    if let Some(best) = best {
        let class = match best.option_kind {
            OptionKind::BeforeFirst => DecisionClass::MergeBeforeFirst,
            _ => DecisionClass::MergeIntoGap,
        };
        // lock when the next cycle would start beyond the PNR
        let engage = match best.pnr {
            None => true,
            Some((t_pnr, _)) => cfg.dt_cycle > t_pnr + 1e-12,
        };
        let new_lock = if engage {
            LockState {
                locked: Some(LockedPlan {
                    trajectory: best.trajectory.clone(),
                    class,
                    candidate: Some(best.clone()),
                    t_lock: t_now,
                }),
            }
        } else {
            LockState::none()
        };
        let decision = Decision {
            class,
            trajectory: best.trajectory.clone(),
            candidate: Some(best),
            lock_engaged: engage,
            time_offset: 0.0,
            emergency: false,
        };
        return (decision, new_lock);
    }

    if let Some(tr) = plan_gentle_stop(ego, map, &cfg.limits, cfg) {
        return (
            Decision {
                class: DecisionClass::GentleStop,
                trajectory: tr,
                candidate: None,
                lock_engaged: false,
                time_offset: 0.0,
                emergency: false,
            },
            LockState::none(),
        );
    }

    let (tr, emergency) = fail_safe(ego, map, cfg.limits.b_max);
    (
        Decision {
            class: DecisionClass::FailSafe,
            trajectory: tr,
            candidate: None,
            lock_engaged: false,
            time_offset: 0.0,
            emergency,
        },
        LockState::none(),
    )
}

/// Convenience wrapper: feed raw position measurements through the
/// constant-velocity filter. `estimates[i]` is updated in place (or
/// initialized on the first measurement).
pub fn update_filters(
    estimates: &mut Vec<Option<ObjectEstimate>>,
    measurements: &[(f64, f64)], // (z_s, length)
    r: f64,
    dt: f64,
    q: f64,
    v_map: f64,
    t_now: f64,
) -> Result<()> {
    if estimates.len() < measurements.len() {
        estimates.resize(measurements.len(), None);
    }
    for (i, &(z_s, length)) in measurements.iter().enumerate() {
        estimates[i] = Some(match &estimates[i] {
            None => ObjectEstimate::init(z_s, r, v_map, length, t_now),
            Some(prior) => kalman_update(prior, z_s, r, dt, q)?,
        });
    }
    Ok(())
}

/// One row of the per-cycle decision log.
#[derive(Debug, Clone)]
pub struct CycleLogRow {
    pub cycle: usize,
    pub t_now: f64,
    pub class: DecisionClass,
    pub t_f: f64,
    pub cost: Option<f64>,
    pub p_a: Option<f64>,
    pub p_b: Option<f64>,
    pub lock: bool,
}

impl CycleLogRow {
    pub fn from_decision(cycle: usize, t_now: f64, d: &Decision) -> Self {
        Self {
            cycle,
            t_now,
            class: d.class,
            t_f: d.trajectory.t_f,
            cost: d.candidate.as_ref().map(|c| c.cost),
            p_a: d.candidate.as_ref().map(|c| c.p_risk_a),
            p_b: d.candidate.as_ref().map(|c| c.p_risk_b),
            lock: d.lock_engaged,
        }
    }
}

/// Writes the decision log as CSV `cycle,t_now,class,t_f,cost,p_a,p_b,lock`.
pub fn write_decision_log<W: Write>(out: &mut W, rows: &[CycleLogRow]) -> io::Result<()> {
    writeln!(out, "cycle,t_now,class,t_f,cost,p_a,p_b,lock")?;
    let opt = |v: Option<f64>| v.map(trajgen::fmt_sig).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.cycle,
            trajgen::fmt_sig(r.t_now),
            r.class.as_str(),
            trajgen::fmt_sig(r.t_f),
            opt(r.cost),
            opt(r.p_a),
            opt(r.p_b),
            if r.lock { 1 } else { 0 }
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::Covariance2;
    use approx::assert_abs_diff_eq;

    fn map() -> LocalMap {
        LocalMap {
            s_yield: 97.0,
            s_merge: 100.0,
            v_max: 30.0 / 3.6,
            sight_range: 200.0,
        }
    }

    fn obj(s: f64, v: f64, sigma: f64) -> ObjectEstimate {
        ObjectEstimate {
            s_hat: s,
            v_hat: v,
            cov: Covariance2::new(sigma * sigma, 0.0, 0.0),
            length: 4.0,
            timestamp: 0.0,
        }
    }

    fn const_track(s: f64, v: f64, sigma: f64, horizon: f64, dt: f64) -> PredictionTrack {
        // constant-sigma track for controlled risk windows
        let n = (horizon / dt).round() as usize;
        let states = (0..=n)
            .map(|k| {
                let t = k as f64 * dt;
                let mut e = obj(s + v * t, v, sigma);
                e.timestamp = t;
                e
            })
            .collect();
        PredictionTrack { dt, states }
    }

    #[test]
    fn preprocess_sorts_and_filters() {
        let m = map();
        assert!(preprocess(&[], &m, 20.0).is_empty());
        let objects = vec![obj(30.0, 8.0, 0.5), obj(60.0, 8.0, 0.5)];
        let out = preprocess(&objects, &m, 20.0);
        assert_eq!(out[0].s_hat, 60.0, "closer to merge sorts first");
        assert_eq!(out[1].s_hat, 30.0);
        // 10 m past merge with 5 m clearance -> removed
        let objects = vec![obj(110.0, 8.0, 0.5)];
        assert!(preprocess(&objects, &m, 5.0).is_empty());
        assert_eq!(preprocess(&objects, &m, 15.0).len(), 1);
        // beyond sight range -> removed
        let objects = vec![obj(-150.0, 8.0, 0.5)];
        assert!(preprocess(&objects, &m, 20.0).is_empty());
    }

    #[test]
    fn gap_enumeration_empty_when_bumper_to_bumper() {
        let m = map();
        let ahead = const_track(50.0, 8.33, 0.5, 15.0, 0.08);
        let behind = const_track(44.0, 8.33, 0.5, 15.0, 0.08);
        let out = enumerate_gap_targets(&ahead, Some(&behind), &m, &SafetyParams::default(), 0.2, 15.0);
        assert!(out.is_empty());
    }

    #[test]
    fn gap_enumeration_open_ended_without_follower() {
        let m = map();
        // ahead vehicle far past merge for t >= ~2 s
        let ahead = const_track(95.0, 12.0, 0.5, 15.0, 0.08);
        let out = enumerate_gap_targets(&ahead, None, &m, &SafetyParams::default(), 0.2, 15.0);
        assert!(!out.is_empty());
        assert!(out.iter().all(|c| c.p_b == 0.0));
        // runs to the horizon end
        assert_abs_diff_eq!(out.last().unwrap().t_f, 15.0, epsilon = 1e-9);
        // targets match the ahead vehicle's speed
        assert!(out.iter().all(|c| (c.target.v - 12.0).abs() < 1e-9));
    }

    #[test]
    fn gap_window_matches_dense_scan() {
        let m = map();
        let params = SafetyParams::default();
        let ahead = const_track(50.0, 8.33, 0.5, 15.0, 0.08);
        let behind = const_track(10.0, 8.33, 0.5, 15.0, 0.08);
        let dt_f = 0.2;
        let out = enumerate_gap_targets(&ahead, Some(&behind), &m, &params, dt_f, 15.0);
        assert!(!out.is_empty());
        // dense oracle: first compliant start and first behind-violation after it
        let dense = 0.001;
        let mut t0 = None;
        let mut t_end = None;
        let mut t = dense;
        while t <= 15.0 {
            let ea = ahead.sample(t);
            let eb = behind.sample(t);
            let (sa, sb) = safety_positions(m.s_merge, ea.v_hat, eb.v_hat, ea.length, eb.length, &params);
            let pa = risk_ahead(&ahead, sa, t);
            let pb = risk_behind(&behind, sb, t);
            if t0.is_none() && pa <= params.p_residual_max {
                t0 = Some(t);
            }
            if t0.is_some() && pb > params.p_residual_max {
                t_end = Some(t);
                break;
            }
            t += dense;
        }
        let first = out.first().unwrap().t_f;
        let last = out.last().unwrap().t_f;
        assert!((first - t0.unwrap()).abs() <= dt_f + 1e-9, "start {first} vs oracle {:?}", t0);
        assert!((last - t_end.unwrap()).abs() <= dt_f + 1e-9, "end {last} vs oracle {:?}", t_end);
    }

    #[test]
    fn before_first_empty_when_vehicle_at_merge() {
        let m = map();
        let first = const_track(100.0, 8.33, 0.1, 15.0, 0.08);
        let ego = State1D::new(20.0, 8.33, 0.0);
        let cfg = PlannerConfig::default();
        let out = enumerate_before_first_targets(
            Some(&first),
            &ego,
            &m,
            &cfg.limits,
            &cfg.safety,
            &cfg,
        );
        assert!(out.is_empty());
    }

    #[test]
    fn before_first_limited_by_dynamics() {
        let m = map();
        let cfg = PlannerConfig::default();
        let first = const_track(-100.0, 8.33, 0.5, 15.0, 0.08);
        let ego = State1D::new(40.0, 8.33, 0.0);
        let out = enumerate_before_first_targets(
            Some(&first),
            &ego,
            &m,
            &cfg.limits,
            &cfg.safety,
            &cfg,
        );
        assert!(!out.is_empty());
        // dense backward oracle over the same grid: earliest feasible t_f
        let target = State1D::new(m.s_merge, m.v_max, 0.0);
        let mut oracle_first = None;
        let mut k = 1;
        while (k as f64) * cfg.dt_f <= cfg.horizon {
            let t_f = k as f64 * cfg.dt_f;
            let ok = solve_time_weighted(ego, target, t_f, cfg.w_t)
                .map(|tr| check_constraints(&tr, &cfg.limits, 0.01).valid)
                .unwrap_or(false);
            if ok {
                oracle_first = Some(t_f);
                break;
            }
            k += 1;
        }
        let earliest = out.first().unwrap().t_f;
        assert!(
            (earliest - oracle_first.unwrap()).abs() <= cfg.dt_f + 1e-9,
            "earliest {earliest} vs oracle {:?}",
            oracle_first
        );
    }

    #[test]
    fn evaluate_option_cost_composition() {
        let m = map();
        let cfg = PlannerConfig::default();
        let ego = State1D::new(20.0, 8.33, 0.0);
        let tc = TargetCandidate {
            t_f: 10.4,
            target: State1D::new(m.s_merge, 8.33, 0.0),
            p_a: 0.04,
            p_b: 0.02,
        };
        let c = evaluate_option(&ego, &tc, OptionKind::IntoGap(0), &m, &cfg.limits, &cfg.safety, &cfg)
            .unwrap();
        let jerk = jerk_cost(&c.trajectory);
        assert_abs_diff_eq!(c.cost, jerk + 20.0 * 0.04 + 50.0 * 0.02, epsilon = 1e-9);
        // zero-risk option prices at pure jerk cost
        let tc0 = TargetCandidate { p_a: 0.0, p_b: 0.0, ..tc };
        let c0 = evaluate_option(&ego, &tc0, OptionKind::BeforeFirst, &m, &cfg.limits, &cfg.safety, &cfg)
            .unwrap();
        assert_abs_diff_eq!(c0.cost, jerk_cost(&c0.trajectory), epsilon = 1e-12);
    }

    #[test]
    fn evaluate_option_rejects_infeasible() {
        let m = map();
        let cfg = PlannerConfig::default();
        // target behind the ego forces reversing -> v < 0 en route
        let ego = State1D::new(90.0, 10.0, 0.0);
        let tc = TargetCandidate {
            t_f: 6.0,
            target: State1D::new(60.0, 2.0, 0.0),
            p_a: 0.0,
            p_b: 0.0,
        };
        assert!(evaluate_option(&ego, &tc, OptionKind::IntoGap(0), &m, &cfg.limits, &cfg.safety, &cfg)
            .is_none());
    }

    #[test]
    fn gentle_stop_from_standstill_at_yield() {
        let m = map();
        let cfg = PlannerConfig::default();
        let ego = State1D::new(m.s_yield, 0.0, 0.0);
        let tr = plan_gentle_stop(&ego, &m, &cfg.limits, &cfg).unwrap();
        assert_abs_diff_eq!(tr.t_f, cfg.gentle_dt, epsilon = 1e-12);
        assert_abs_diff_eq!(jerk_cost(&tr), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gentle_stop_feasible_case_hits_target() {
        let m = map();
        let mut cfg = PlannerConfig::default();
        cfg.limits.v_max = 14.0; // ego arrives above the map speed
        let ego = State1D::new(m.s_yield - 50.0, 10.0, 0.0);
        let tr = plan_gentle_stop(&ego, &m, &cfg.limits, &cfg).unwrap();
        let (x, _) = tr.eval_clamped(tr.t_f);
        assert_abs_diff_eq!(x.s, m.s_yield, epsilon = 1e-6);
        assert_abs_diff_eq!(x.v, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(x.a, 0.0, epsilon = 1e-6);
        // grid-search oracle: no denser-grid candidate beats it by more than
        // a grid quantum of cost
        let comfort = DynamicLimits { a_min: -cfg.comfort_decel, ..cfg.limits };
        let mut t = 0.05_f64;
        let mut best = f64::INFINITY;
        while t <= cfg.gentle_t_max {
            if let Ok(c) = solve_quintic(ego, State1D::new(m.s_yield, 0.0, 0.0), t) {
                if check_constraints(&c, &comfort, cfg.dt_check).valid {
                    best = best.min(jerk_cost(&c));
                }
            }
            t += 0.05;
        }
        assert!(jerk_cost(&tr) <= best * 1.15 + 1e-9);
    }

    #[test]
    fn gentle_stop_infeasible_when_too_close() {
        let m = map();
        let cfg = PlannerConfig::default();
        // 5 m before yield at 15 m/s: required mean deceleration 22.5 m/s²
        let ego = State1D::new(m.s_yield - 5.0, 15.0, 0.0);
        assert!(plan_gentle_stop(&ego, &m, &cfg.limits, &cfg).is_none());
    }

    #[test]
    fn fail_safe_substitution_cases() {
        let m = map();
        // v = 10, 20 m to the yield line -> b = 2.5, stop exactly at yield
        let (tr, em) = fail_safe(&State1D::new(m.s_yield - 20.0, 10.0, 0.0), &m, 4.0);
        assert!(!em);
        assert_abs_diff_eq!(tr.constant_decel().unwrap().b, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(tr.xf.s, m.s_yield, epsilon = 1e-12);
        // at rest: zero trajectory
        let (tr, em) = fail_safe(&State1D::new(50.0, 0.0, 0.0), &m, 4.0);
        assert!(!em);
        assert_eq!(tr.xf.s, 50.0);
        // v = 10, 5 m to go, b_max = 4 -> required 10 > 4 -> emergency
        let (tr, em) = fail_safe(&State1D::new(m.s_yield - 5.0, 10.0, 0.0), &m, 4.0);
        assert!(em);
        assert_abs_diff_eq!(tr.constant_decel().unwrap().b, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn plan_cycle_free_road_merges_before_first() {
        let m = map();
        let cfg = PlannerConfig::default();
        let ego = State1D::new(20.0, 8.33, 0.0);
        let (d, lock) = plan_cycle(0.0, &ego, &[], None, &m, &cfg, &LockState::none());
        assert_eq!(d.class, DecisionClass::MergeBeforeFirst);
        assert!(!d.lock_engaged, "no lock before the PNR is reached");
        assert!(!lock.is_locked());
        assert!(check_constraints(&d.trajectory, &cfg.limits, 0.05).valid);
        assert_abs_diff_eq!(d.trajectory.xf.v, m.v_max, epsilon = 1e-9);
    }

    #[test]
    fn plan_cycle_dense_platoon_yields_gentle_stop() {
        let m = map();
        let cfg = PlannerConfig::default();
        let ego = State1D::new(20.0, 8.33, 0.0);
        // nose-to-tail platoon closing every gap over the entire horizon,
        // long enough that the open gap behind its tail stays out of reach
        let objects: Vec<ObjectEstimate> = (0..25)
            .map(|i| obj(108.0 - 10.0 * i as f64, 8.33, 0.3))
            .collect();
        let (d, _) = plan_cycle(0.0, &ego, &objects, None, &m, &cfg, &LockState::none());
        assert_eq!(d.class, DecisionClass::GentleStop);
        let (x, _) = d.trajectory.eval_clamped(d.trajectory.t_f);
        assert_abs_diff_eq!(x.s, m.s_yield, epsilon = 1e-6);
    }

    #[test]
    fn plan_cycle_selects_cheapest_candidate() {
        let m = map();
        let cfg = PlannerConfig::default();
        let ego = State1D::new(20.0, 8.33, 0.0);
        let objects = vec![obj(60.0, 8.33, 0.4), obj(10.0, 8.33, 0.4)];
        let (d, _) = plan_cycle(0.0, &ego, &objects, None, &m, &cfg, &LockState::none());
        let best = d.candidate.as_ref().unwrap();
        // exhaustive re-enumeration: nothing cheaper exists
        let order = preprocess(&objects, &m, cfg.clearance_past_merge);
        let tracks: Vec<PredictionTrack> = order
            .iter()
            .map(|o| predict_horizon(o, cfg.horizon, cfg.dt_pred, cfg.process_noise).unwrap())
            .collect();
        let mut all = Vec::new();
        for tc in enumerate_before_first_targets(tracks.first(), &ego, &m, &cfg.limits, &cfg.safety, &cfg) {
            all.extend(evaluate_option(&ego, &tc, OptionKind::BeforeFirst, &m, &cfg.limits, &cfg.safety, &cfg));
        }
        for i in 0..tracks.len() {
            let kind = if i + 1 < tracks.len() { OptionKind::IntoGap(i) } else { OptionKind::BehindLast };
            for tc in enumerate_gap_targets(&tracks[i], tracks.get(i + 1), &m, &cfg.safety, cfg.dt_f, cfg.horizon) {
                all.extend(evaluate_option(&ego, &tc, kind, &m, &cfg.limits, &cfg.safety, &cfg));
            }
        }
        assert!(!all.is_empty());
        for c in &all {
            assert!(best.cost <= c.cost + 1e-12);
            assert!(c.p_risk_a <= cfg.safety.p_residual_max + 1e-12);
            assert!(c.p_risk_b <= cfg.safety.p_residual_max + 1e-12);
        }
    }

    #[test]
    fn lock_replays_identical_trajectory() {
        let m = map();
        let mut cfg = PlannerConfig::default();
        // force an immediate lock: ego effectively at the no-return point
        cfg.dt_cycle = 0.08;
        let ego = State1D::new(98.5, 8.33, 0.0);
        let (d1, lock1) = plan_cycle(0.0, &ego, &[], None, &m, &cfg, &LockState::none());
        assert!(d1.lock_engaged);
        assert!(lock1.is_locked());
        let ego_later = d1.trajectory.eval_clamped(0.08).0;
        let (d2, lock2) = plan_cycle(0.08, &ego_later, &[], None, &m, &cfg, &lock1);
        assert_eq!(d2.class, DecisionClass::Locked);
        assert_eq!(d2.trajectory, d1.trajectory);
        assert_abs_diff_eq!(d2.time_offset, 0.08, epsilon = 1e-12);
        let (d3, _) = plan_cycle(0.16, &ego_later, &[], None, &m, &cfg, &lock2);
        assert_eq!(d3.trajectory, d1.trajectory);
        assert_abs_diff_eq!(d3.time_offset, 0.16, epsilon = 1e-12);
    }

    #[test]
    fn plan_cycle_is_total() {
        // pathological state: past the yield line at speed, no options
        let m = map();
        let cfg = PlannerConfig::default();
        let ego = State1D::new(99.0, 14.0, 0.0);
        let objects = vec![obj(104.0, 8.33, 0.2), obj(96.0, 8.33, 0.2)];
        let (d, _) = plan_cycle(0.0, &ego, &objects, None, &m, &cfg, &LockState::none());
        // always returns a decision; this one must be an emergency fail-safe
        // or a (locked) merge, never a panic
        assert!(matches!(
            d.class,
            DecisionClass::FailSafe | DecisionClass::MergeIntoGap | DecisionClass::MergeBeforeFirst
        ));
    }

    #[test]
    fn candidate_count_grows_with_risk_budget() {
        let m = map();
        let ahead = const_track(55.0, 8.33, 0.8, 15.0, 0.08);
        let behind = const_track(5.0, 8.33, 0.8, 15.0, 0.08);
        let mut counts = Vec::new();
        for p_max in [0.02, 0.05, 0.1, 0.2] {
            let params = SafetyParams {
                p_residual_max: p_max,
                ..Default::default()
            };
            counts.push(enumerate_gap_targets(&ahead, Some(&behind), &m, &params, 0.2, 15.0).len());
        }
        for w in counts.windows(2) {
            assert!(w[1] >= w[0], "candidate set must not shrink: {counts:?}");
        }
    }
}
