//! Closed-form time-weighted jerk-optimal trajectories.
//!
//! The optimal control problem is to minimize
//!
//! ```text
//!   J = ∫₀^T ½ ((w − 1)/(h + t) + 1) u(t)² dt,      h = 1 + g,
//! ```
//!
//! over the triple integrator  ṡ = v, v̇ = a, ȧ = u  with both endpoint
//! states fixed. `g` is the anchor offset: a plan that starts at absolute
//! time `g` with the weight pinned to the experiment clock uses `h = 1 + g`,
//! so that replanning along an already-optimal trajectory reproduces its
//! tail exactly. Standard plans use `g = 0`.
//!
//! The Hamiltonian stationarity condition gives, with W = w + g,
//!
//! ```text
//!   u(t) = -(h + t) λ₃(t) / (W + t),     λ₃ quadratic,
//! ```
//!
//! and polynomial long division splits u into a quadratic plus a pole term
//! `β/(W + t)`, whose remainder fixes β as a linear function of the
//! quadratic's coefficients:
//!
//! ```text
//!   u(t) = b₁ t² + b₂ t + b₃ + β / (W + t)
//!   β    = (w − 1) (h b₂ − h² b₁ − b₃) · (W/h)³
//! ```
//!
//! (The (W/h)³ factor is the exact closed form of 1/(1 − (w−1)(1/W + h/W² +
//! h²/W³)), via W − h = w − 1 and the difference of cubes.) Triple
//! integration then yields the state; the three integration constants are
//! pinned by the initial state, and `(b₁, b₂, b₃)` come from a 3×3 linear
//! solve against the terminal state.
//!
//! Numerically, the pole's antiderivatives are stored with their cubic
//! Taylor content removed (`R₃(t) = 1/(W+t) − 1/W + t/W² − t²/W³ =
//! −t³/(W³(W+t))` and its integrals `R₂, R₁, R₀`, all zero at t = 0). This
//! keeps the basis well conditioned when W is large relative to T, where
//! the raw logarithmic terms are nearly polynomial.

use nalgebra::{Matrix3, Vector3};

use crate::state::{Error, Result, State1D};

/// Coefficients of a time-weighted jerk-optimal trajectory.
///
/// Position evaluates as
/// `s(t) = α₁t⁵ + α₂t⁴ + α₃t³ + α₄t² + α₅t + α₆ + β·R₀(t)`
/// where `R₀` is the Taylor-residual log basis function described in the
/// module docs, with shift `W = w_t + anchor`. For `w_t = 1` the β term
/// vanishes and the trajectory is a plain quintic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWeightedCoefficients {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub alpha5: f64,
    pub alpha6: f64,
    /// Coefficient of the logarithmic basis terms.
    pub beta: f64,
    /// Time weight of the cost functional, >= 1.
    pub w_t: f64,
    /// Absolute start time of the plan on the weight's clock (0 for
    /// standalone plans). The basis shift is `W = w_t + anchor`.
    pub anchor: f64,
    /// Horizon (s).
    pub t_f: f64,
}

impl TimeWeightedCoefficients {
    /// Basis shift of the logarithmic terms.
    pub fn shift(&self) -> f64 {
        self.w_t + self.anchor
    }

    /// Evaluates (s, v, a, u) at time `t` (no range check).
    pub fn eval(&self, t: f64) -> (f64, f64, f64, f64) {
        let (r0, r1, r2, r3) = log_residuals(t, self.shift());
        let (a1, a2, a3, a4, a5, a6, b) = (
            self.alpha1,
            self.alpha2,
            self.alpha3,
            self.alpha4,
            self.alpha5,
            self.alpha6,
            self.beta,
        );
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let s = a1 * t4 * t + a2 * t4 + a3 * t3 + a4 * t2 + a5 * t + a6 + b * r0;
        let v = 5.0 * a1 * t4 + 4.0 * a2 * t3 + 3.0 * a3 * t2 + 2.0 * a4 * t + a5 + b * r1;
        let a = 20.0 * a1 * t3 + 12.0 * a2 * t2 + 6.0 * a3 * t + 2.0 * a4 + b * r2;
        let u = 60.0 * a1 * t2 + 24.0 * a2 * t + 6.0 * a3 + b * r3;
        (s, v, a, u)
    }
}

/// Residual log basis at time `t` with shift `W`: returns (R₀, R₁, R₂, R₃).
///
/// R₃ = 1/(W+t) minus its quadratic Taylor polynomial at 0; each Rₖ is the
/// integral of Rₖ₊₁ with Rₖ(0) = 0.
pub(crate) fn log_residuals(t: f64, shift: f64) -> (f64, f64, f64, f64) {
    let x = t / shift;
    let (rho0, rho1, rho2) = rho(x);
    let rho3 = -x * x * x / (1.0 + x);
    (shift * shift * rho0, shift * rho1, rho2, rho3 / shift)
}

/// Dimensionless residual functions
/// ρ₂(x) = ln(1+x) − x + x²/2 − x³/3 and its integrals ρ₁ = ∫ρ₂, ρ₀ = ∫ρ₁.
///
/// For small x the direct form cancels catastrophically, so the tail of the
/// ln(1+x) series is summed instead; both branches agree to ~1e-14 at the
/// switch point.
fn rho(x: f64) -> (f64, f64, f64) {
    debug_assert!(x > -1.0);
    if x.abs() < 0.5 {
        let mut r0 = 0.0;
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        let mut xk = x * x * x * x;
        let mut k = 4usize;
        loop {
            let sgn = if k % 2 == 0 { -1.0 } else { 1.0 };
            let kf = k as f64;
            let t2 = sgn * xk / kf;
            r2 += t2;
            r1 += sgn * xk * x / (kf * (kf + 1.0));
            r0 += sgn * xk * x * x / (kf * (kf + 1.0) * (kf + 2.0));
            if t2.abs() < 1e-19 * (r2.abs() + 1e-30) || k > 200 {
                break;
            }
            xk *= x;
            k += 1;
        }
        (r0, r1, r2)
    } else {
        let l = x.ln_1p();
        let x2 = x * x;
        let x3 = x2 * x;
        let x4 = x3 * x;
        let x5 = x4 * x;
        let r2 = l - x + x2 / 2.0 - x3 / 3.0;
        let r1 = (1.0 + x) * l - x - x2 / 2.0 + x3 / 6.0 - x4 / 12.0;
        let q = 1.0 + x;
        let r0 = 0.5 * q * q * l - 0.25 * q * q + 0.25 - x2 / 2.0 - x3 / 6.0 + x4 / 24.0
            - x5 / 60.0;
        (r0, r1, r2)
    }
}

/// Solves the time-weighted problem with the weight anchored at absolute
/// time `anchor` (the weight factor is `(w_t − 1)/(1 + anchor + t) + 1` in
/// plan-local time `t`). `anchor = 0` is the standalone problem.
pub fn solve_anchored(
    x0: State1D,
    xf: State1D,
    t_f: f64,
    w_t: f64,
    anchor: f64,
) -> Result<TimeWeightedCoefficients> {
    if !x0.is_finite() || !xf.is_finite() {
        return Err(Error::InvalidArgument("non-finite boundary state".into()));
    }
    if !(t_f > 0.0) || !t_f.is_finite() {
        return Err(Error::InvalidArgument(format!("t_f must be > 0, got {t_f}")));
    }
    if !(w_t >= 1.0) || !w_t.is_finite() {
        return Err(Error::InvalidArgument(format!("w_t must be >= 1, got {w_t}")));
    }
    if !(anchor >= 0.0) || !anchor.is_finite() {
        return Err(Error::InvalidArgument(format!("anchor must be >= 0, got {anchor}")));
    }

    let shift = w_t + anchor; // W
    let h = 1.0 + anchor;
    // beta = bv . (b1, b2, b3)
    let scale = (w_t - 1.0) * (shift / h).powi(3);
    let bv = Vector3::new(-scale * h * h, scale * h, -scale);

    let t = t_f;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let (r0t, r1t, r2t, _) = log_residuals(t, shift);

    // Terminal-state rows; initial state is absorbed into the constants.
    let mut m = Matrix3::zeros();
    m.set_row(0, &(Vector3::new(t5 / 60.0, t4 / 24.0, t3 / 6.0) + bv * r0t).transpose());
    m.set_row(1, &(Vector3::new(t4 / 12.0, t3 / 6.0, t2 / 2.0) + bv * r1t).transpose());
    m.set_row(2, &(Vector3::new(t3 / 3.0, t2 / 2.0, t) + bv * r2t).transpose());
    let rhs = Vector3::new(
        xf.s - (x0.s + x0.v * t + 0.5 * x0.a * t2),
        xf.v - (x0.v + x0.a * t),
        xf.a - x0.a,
    );

    // Column equilibration before the LU solve keeps short horizons and
    // large weights well conditioned.
    let mut col_scale = Vector3::new(1.0, 1.0, 1.0);
    for j in 0..3 {
        let cmax = m.column(j).amax();
        if cmax > 0.0 {
            col_scale[j] = cmax;
            for i in 0..3 {
                m[(i, j)] /= cmax;
            }
        }
    }
    let lu = m.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("time-weighted boundary system".into()))?;
    let b = Vector3::new(sol[0] / col_scale[0], sol[1] / col_scale[1], sol[2] / col_scale[2]);
    if !b.iter().all(|x| x.is_finite()) {
        return Err(Error::SingularSystem("non-finite solve result".into()));
    }
    let beta = bv.dot(&b);

    Ok(TimeWeightedCoefficients {
        alpha1: b[0] / 60.0,
        alpha2: b[1] / 24.0,
        alpha3: b[2] / 6.0,
        alpha4: 0.5 * x0.a,
        alpha5: x0.v,
        alpha6: x0.s,
        beta,
        w_t,
        anchor,
        t_f,
    })
}
