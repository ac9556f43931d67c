//! Constant-velocity Kalman estimation of other vehicles and open-loop
//! propagation of mean and covariance over the planning horizon.
//!
//! The estimate is deliberately generic — a position/velocity mean with a
//! 2×2 covariance — so richer predictors can slot in behind the same types.

use crate::state::{Error, Result};

/// Symmetric 2×2 covariance of (position, velocity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance2 {
    /// Position variance (m²).
    pub s11: f64,
    /// Position/velocity covariance (m²/s).
    pub s12: f64,
    /// Velocity variance (m²/s²).
    pub s22: f64,
}

impl Covariance2 {
    pub fn new(s11: f64, s12: f64, s22: f64) -> Self {
        Self { s11, s12, s22 }
    }

    /// Positive semi-definiteness up to `tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.s11 >= -tol && self.s22 >= -tol && self.s11 * self.s22 - self.s12 * self.s12 >= -tol
    }

    pub fn trace(&self) -> f64 {
        self.s11 + self.s22
    }
}

/// Estimated state of one tracked vehicle on the main-road axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectEstimate {
    /// Estimated position (m).
    pub s_hat: f64,
    /// Estimated velocity (m/s).
    pub v_hat: f64,
    pub cov: Covariance2,
    /// Vehicle length (m).
    pub length: f64,
    /// Estimate time (s).
    pub timestamp: f64,
}

impl ObjectEstimate {
    /// Filter initialization from the first position measurement: position
    /// from the measurement, velocity from the map speed, s11 = r,
    /// s22 = (2 m/s)².
    pub fn init(z_s: f64, r: f64, v_map: f64, length: f64, timestamp: f64) -> Self {
        Self {
            s_hat: z_s,
            v_hat: v_map,
            cov: Covariance2::new(r, 0.0, 4.0),
            length,
            timestamp,
        }
    }
}

/// One predict-then-update step of the constant-velocity filter.
///
/// `r` is the measurement variance (m²), `q` the white-acceleration process
/// noise intensity (m²/s⁴) applied as piecewise-constant acceleration over
/// the step.
pub fn kalman_update(
    prior: &ObjectEstimate,
    z_s: f64,
    r: f64,
    dt: f64,
    q: f64,
) -> Result<ObjectEstimate> {
    if !(r > 0.0) || !(dt > 0.0) || !(q >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kalman_update needs r > 0, dt > 0, q >= 0 (got r={r}, dt={dt}, q={q})"
        )));
    }
    if !prior.cov.is_psd(1e-9) {
        return Err(Error::InvalidArgument("prior covariance not PSD".into()));
    }
    // predict
    let s_pred = prior.s_hat + prior.v_hat * dt;
    let v_pred = prior.v_hat;
    let dt2 = dt * dt;
    let p11 = prior.cov.s11 + 2.0 * prior.cov.s12 * dt + prior.cov.s22 * dt2 + q * dt2 * dt2 / 4.0;
    let p12 = prior.cov.s12 + prior.cov.s22 * dt + q * dt * dt2 / 2.0;
    let p22 = prior.cov.s22 + q * dt2;
    // update with H = [1, 0]
    let innov = z_s - s_pred;
    let s_gain = p11 + r;
    let k1 = p11 / s_gain;
    let k2 = p12 / s_gain;
    Ok(ObjectEstimate {
        s_hat: s_pred + k1 * innov,
        v_hat: v_pred + k2 * innov,
        cov: Covariance2::new((1.0 - k1) * p11, (1.0 - k1) * p12, p22 - k2 * p12),
        length: prior.length,
        timestamp: prior.timestamp + dt,
    })
}

/// Per-object prediction over a uniform time grid starting at 0 = now.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrack {
    /// Grid step (s).
    pub dt: f64,
    /// Estimates at t = 0, dt, 2·dt, ...
    pub states: Vec<ObjectEstimate>,
}

impl PredictionTrack {
    /// Last grid time.
    pub fn horizon(&self) -> f64 {
        (self.states.len().saturating_sub(1)) as f64 * self.dt
    }

    /// Linear interpolation between grid points, clamped at both ends.
    pub fn sample(&self, t: f64) -> ObjectEstimate {
        let n = self.states.len();
        debug_assert!(n > 0);
        if t <= 0.0 || n == 1 {
            return self.states[0];
        }
        let idx = t / self.dt;
        let k = idx.floor() as usize;
        if k + 1 >= n {
            return self.states[n - 1];
        }
        let w = idx - k as f64;
        let a = &self.states[k];
        let b = &self.states[k + 1];
        let lerp = |x: f64, y: f64| x + w * (y - x);
        ObjectEstimate {
            s_hat: lerp(a.s_hat, b.s_hat),
            v_hat: lerp(a.v_hat, b.v_hat),
            cov: Covariance2::new(
                lerp(a.cov.s11, b.cov.s11),
                lerp(a.cov.s12, b.cov.s12),
                lerp(a.cov.s22, b.cov.s22),
            ),
            length: a.length,
            timestamp: lerp(a.timestamp, b.timestamp),
        }
    }
}

/// Open-loop constant-velocity propagation of an estimate.
///
/// The mean follows the affine formula exactly; the covariance is the
/// closed form of the step-by-step discrete transition with process noise
/// `q` injected each step.
pub fn predict_horizon(
    est: &ObjectEstimate,
    horizon: f64,
    dt_pred: f64,
    q: f64,
) -> Result<PredictionTrack> {
    if !(horizon > 0.0) || !(dt_pred > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "predict_horizon needs horizon > 0 and dt_pred > 0 (got {horizon}, {dt_pred})"
        )));
    }
    let n = (horizon / dt_pred + 1e-9).floor() as usize;
    let dt2 = dt_pred * dt_pred;
    let mut states = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let kf = k as f64;
        let t = kf * dt_pred;
        // noise accumulation over k steps:
        //   sum_j q dt^4 (1/4 + j + j^2), sum_j q dt^3 (1/2 + j), sum_j q dt^2
        let sum_j = kf * (kf - 1.0) / 2.0;
        let sum_j2 = if k >= 2 { (kf - 1.0) * kf * (2.0 * kf - 1.0) / 6.0 } else { 0.0 };
        let n11 = q * dt2 * dt2 * (kf / 4.0 + sum_j + sum_j2);
        let n12 = q * dt_pred * dt2 * (kf / 2.0 + sum_j);
        let n22 = q * dt2 * kf;
        states.push(ObjectEstimate {
            s_hat: est.s_hat + est.v_hat * t,
            v_hat: est.v_hat,
            cov: Covariance2::new(
                est.cov.s11 + 2.0 * est.cov.s12 * t + est.cov.s22 * t * t + n11,
                est.cov.s12 + est.cov.s22 * t + n12,
                est.cov.s22 + n22,
            ),
            length: est.length,
            timestamp: est.timestamp + t,
        });
    }
    Ok(PredictionTrack {
        dt: dt_pred,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn est(s: f64, v: f64, cov: Covariance2) -> ObjectEstimate {
        ObjectEstimate {
            s_hat: s,
            v_hat: v,
            cov,
            length: 4.0,
            timestamp: 0.0,
        }
    }

    #[test]
    fn huge_r_ignores_measurement() {
        let prior = est(10.0, 5.0, Covariance2::new(1.0, 0.0, 1.0));
        let post = kalman_update(&prior, 500.0, 1e12, 0.1, 0.0625).unwrap();
        // posterior ~ prediction step of prior
        assert_abs_diff_eq!(post.s_hat, 10.5, epsilon = 1e-6);
        assert_abs_diff_eq!(post.v_hat, 5.0, epsilon = 1e-6);
    }

    #[test]
    fn infinite_prior_takes_measurement() {
        let prior = est(0.0, 8.33, Covariance2::new(1e12, 0.0, 4.0));
        let post = kalman_update(&prior, 42.0, 0.0625, 0.08, 0.0).unwrap();
        assert_abs_diff_eq!(post.s_hat, 42.0, epsilon = 1e-6);
    }

    #[test]
    fn velocity_converges_on_clean_cv_object() {
        // q = 0, noise-free measurements of a true CV object
        let truth_v = 7.5;
        let dt = 0.08;
        let mut e = ObjectEstimate::init(0.0, 0.0625, 8.333, 4.0, 0.0);
        for k in 1..=50 {
            let z = truth_v * (k as f64) * dt;
            e = kalman_update(&e, z, 0.0625, dt, 0.0).unwrap();
        }
        assert!((e.v_hat - truth_v).abs() < 0.01, "v_hat = {}", e.v_hat);
    }

    #[test]
    fn update_rejects_bad_args() {
        let prior = est(0.0, 0.0, Covariance2::new(1.0, 0.0, 1.0));
        assert!(kalman_update(&prior, 0.0, 0.0, 0.1, 0.0).is_err());
        assert!(kalman_update(&prior, 0.0, 1.0, 0.0, 0.0).is_err());
        let bad = est(0.0, 0.0, Covariance2::new(1.0, 5.0, 1.0));
        assert!(kalman_update(&bad, 0.0, 1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn noiseless_propagation_is_exact_quadratic() {
        let e = est(0.0, 8.33, Covariance2::new(0.3, 0.1, 0.5));
        let track = predict_horizon(&e, 10.0, 0.08, 0.0).unwrap();
        for (k, st) in track.states.iter().enumerate() {
            let t = k as f64 * 0.08;
            assert_eq!(st.s_hat, 8.33 * t + 0.0);
            let expect = 0.3 + 2.0 * 0.1 * t + 0.5 * t * t;
            assert_abs_diff_eq!(st.cov.s11, expect, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(track.sample(10.0).s_hat, 83.3, epsilon = 1e-9);
    }

    #[test]
    fn noisy_propagation_matches_step_recursion() {
        // oracle: explicit step-by-step 2x2 recursion
        let q = 0.0625;
        let dt = 0.08;
        let e = est(3.0, 9.1, Covariance2::new(0.25, 0.05, 0.8));
        let track = predict_horizon(&e, 8.0, dt, q).unwrap();
        let (mut p11, mut p12, mut p22) = (0.25, 0.05, 0.8);
        for (k, st) in track.states.iter().enumerate() {
            if k > 0 {
                let n11 = q * dt.powi(4) / 4.0;
                let n12 = q * dt.powi(3) / 2.0;
                let n22 = q * dt * dt;
                let p11n = p11 + 2.0 * p12 * dt + p22 * dt * dt + n11;
                let p12n = p12 + p22 * dt + n12;
                let p22n = p22 + n22;
                p11 = p11n;
                p12 = p12n;
                p22 = p22n;
            }
            assert_abs_diff_eq!(st.cov.s11, p11, epsilon = 1e-10);
            assert_abs_diff_eq!(st.cov.s12, p12, epsilon = 1e-10);
            assert_abs_diff_eq!(st.cov.s22, p22, epsilon = 1e-10);
        }
    }

    #[test]
    fn covariance_stays_psd_and_trace_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            // random PSD prior via A A^T; the cross term is kept
            // non-negative as produced by this filter pipeline (position
            // and velocity uncertainty grow together under propagation)
            let a11: f64 = rng.gen_range(-2.0..2.0);
            let a12: f64 = rng.gen_range(-2.0..2.0);
            let a21: f64 = rng.gen_range(-2.0..2.0);
            let a22: f64 = rng.gen_range(-2.0..2.0);
            let cov = Covariance2::new(
                a11 * a11 + a12 * a12,
                (a11 * a21 + a12 * a22).abs(),
                a21 * a21 + a22 * a22,
            );
            let e = est(rng.gen_range(-50.0..50.0), rng.gen_range(0.0..15.0), cov);
            let post = kalman_update(&e, e.s_hat + rng.gen_range(-1.0..1.0), 0.0625, 0.08, 0.0625)
                .unwrap();
            assert!(post.cov.is_psd(1e-9), "posterior not PSD: {:?}", post.cov);
            let track = predict_horizon(&e, 2.0, 0.25, 0.0625).unwrap();
            let mut prev_trace = -f64::INFINITY;
            for st in &track.states {
                assert!(st.cov.is_psd(1e-9));
                assert!(st.cov.trace() >= prev_trace - 1e-12);
                prev_trace = st.cov.trace();
            }
        }
    }

    #[test]
    fn sample_interpolates_linearly() {
        let e = est(0.0, 10.0, Covariance2::new(1.0, 0.0, 0.0));
        let track = predict_horizon(&e, 1.0, 0.5, 0.0).unwrap();
        let mid = track.sample(0.25);
        assert_abs_diff_eq!(mid.s_hat, 2.5, epsilon = 1e-12);
        // clamped beyond the horizon
        assert_abs_diff_eq!(track.sample(99.0).s_hat, 10.0, epsilon = 1e-12);
    }
}
