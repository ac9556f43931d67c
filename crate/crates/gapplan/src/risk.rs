//! Safety-corridor geometry and residual-risk probabilities.
//!
//! A merge target at position `s_PGA` is safe w.r.t. the vehicle ahead when
//! that vehicle's position at the arrival time is beyond `s_safety_a`, and
//! w.r.t. the vehicle behind when it is still short of `s_safety_b`. The
//! residual risks are the Gaussian tail probabilities of those conditions
//! being violated under the predicted distributions.

use crate::predict::PredictionTrack;
use crate::state::{Error, Result};

/// Parameters of the safety corridor and risk costing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyParams {
    /// Time headway converted to distance via the other vehicle's speed (s).
    pub t_safety: f64,
    /// Additional static margin (m).
    pub s_margin: f64,
    /// Maximum acceptable residual risk per vehicle.
    pub p_residual_max: f64,
    /// Cost weight of the ahead-vehicle risk.
    pub w_risk_a: f64,
    /// Cost weight of the behind-vehicle risk.
    pub w_risk_b: f64,
}

impl Default for SafetyParams {
    fn default() -> Self {
        Self {
            t_safety: 1.0,
            s_margin: 2.0,
            p_residual_max: 0.05,
            w_risk_a: 20.0,
            w_risk_b: 50.0,
        }
    }
}

impl SafetyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_safety > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_safety must be > 0, got {}",
                self.t_safety
            )));
        }
        if !(self.s_margin >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "s_margin must be >= 0, got {}",
                self.s_margin
            )));
        }
        if !(self.p_residual_max > 0.0 && self.p_residual_max < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "p_residual_max must be in (0, 1), got {}",
                self.p_residual_max
            )));
        }
        Ok(())
    }
}

/// Standard Gaussian cumulative distribution function.
pub fn gaussian_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Safety positions around a merge target at `s_pga`.
///
/// Ahead: `s_pga + v̂_a·t_safety + s_margin + l_a/2` — the ahead vehicle's
/// center must be beyond this. Behind: `s_pga − v̂_b·t_safety − s_margin −
/// l_b/2` — the behind vehicle's center must be short of this. Margin and
/// half-length shrink the admissible corridor on both sides.
pub fn safety_positions(
    s_pga: f64,
    v_hat_a: f64,
    v_hat_b: f64,
    l_a: f64,
    l_b: f64,
    params: &SafetyParams,
) -> (f64, f64) {
    let ahead = s_pga + v_hat_a * params.t_safety + params.s_margin + 0.5 * l_a;
    let behind = s_pga - v_hat_b * params.t_safety - params.s_margin - 0.5 * l_b;
    (ahead, behind)
}

fn position_std(s11: f64) -> f64 {
    s11.max(0.0).sqrt()
}

/// Residual risk that the vehicle ahead violates its safety distance at
/// `t_f`: `1 − Φ((ŝ(t_f) − s_safety_a)/σ(t_f))`. Degenerates to {0, 1} by
/// the sign of `ŝ − s_safety_a` when the predicted variance vanishes.
pub fn risk_ahead(track_a: &PredictionTrack, s_safety_a: f64, t_f: f64) -> f64 {
    let est = track_a.sample(t_f);
    let sigma = position_std(est.cov.s11);
    if sigma <= 0.0 {
        return if est.s_hat > s_safety_a { 0.0 } else { 1.0 };
    }
    1.0 - gaussian_cdf((est.s_hat - s_safety_a) / sigma)
}

/// Residual risk that the vehicle behind violates its safety distance at
/// `t_f`: `1 − Φ((s_safety_b − ŝ(t_f))/σ(t_f))`.
pub fn risk_behind(track_b: &PredictionTrack, s_safety_b: f64, t_f: f64) -> f64 {
    let est = track_b.sample(t_f);
    let sigma = position_std(est.cov.s11);
    if sigma <= 0.0 {
        return if est.s_hat < s_safety_b { 0.0 } else { 1.0 };
    }
    1.0 - gaussian_cdf((s_safety_b - est.s_hat) / sigma)
}
