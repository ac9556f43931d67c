//! Jerk-optimal quintic connection between two boundary states.

use nalgebra::{Matrix3, Vector3};

use crate::state::{Error, Result, State1D};

/// Coefficients of a quintic `s(t) = c0 + c1 t + ... + c5 t^5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticCoefficients {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    /// Horizon (s).
    pub t_f: f64,
}

impl QuinticCoefficients {
    /// Evaluates (s, v, a, u) at time `t` (no range check).
    pub fn eval(&self, t: f64) -> (f64, f64, f64, f64) {
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let s = self.c0 + self.c1 * t + self.c2 * t2 + self.c3 * t3 + self.c4 * t4 + self.c5 * t4 * t;
        let v = self.c1 + 2.0 * self.c2 * t + 3.0 * self.c3 * t2 + 4.0 * self.c4 * t3 + 5.0 * self.c5 * t4;
        let a = 2.0 * self.c2 + 6.0 * self.c3 * t + 12.0 * self.c4 * t2 + 20.0 * self.c5 * t3;
        let u = 6.0 * self.c3 + 24.0 * self.c4 * t + 60.0 * self.c5 * t2;
        (s, v, a, u)
    }
}

/// Solves for the unique quintic satisfying all six boundary conditions.
/// This is the minimizer of ∫ ½u² dt over the triple integrator.
pub fn solve(x0: State1D, xf: State1D, t_f: f64) -> Result<QuinticCoefficients> {
    if !x0.is_finite() || !xf.is_finite() {
        return Err(Error::InvalidArgument("non-finite boundary state".into()));
    }
    if !(t_f > 0.0) || !t_f.is_finite() {
        return Err(Error::InvalidArgument(format!("t_f must be > 0, got {t_f}")));
    }
    let c0 = x0.s;
    let c1 = x0.v;
    let c2 = 0.5 * x0.a;
    let t = t_f;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let m = Matrix3::new(
        t3, t4, t5, //
        3.0 * t2, 4.0 * t3, 5.0 * t4, //
        6.0 * t, 12.0 * t2, 20.0 * t3,
    );
    let rhs = Vector3::new(
        xf.s - c0 - c1 * t - c2 * t2,
        xf.v - c1 - 2.0 * c2 * t,
        xf.a - 2.0 * c2,
    );
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("quintic boundary system".into()))?;
    Ok(QuinticCoefficients {
        c0,
        c1,
        c2,
        c3: sol[0],
        c4: sol[1],
        c5: sol[2],
        t_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rest_to_rest_is_zero() {
        let c = solve(State1D::new(0.0, 0.0, 0.0), State1D::new(0.0, 0.0, 0.0), 4.0).unwrap();
        for i in 0..=10 {
            let (s, _, _, u) = c.eval(4.0 * i as f64 / 10.0);
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(u, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_velocity_connection() {
        // boundary data admits the zero-jerk solution s(t) = 10 t
        let c = solve(State1D::new(0.0, 10.0, 0.0), State1D::new(50.0, 10.0, 0.0), 5.0).unwrap();
        for i in 0..=20 {
            let t = 5.0 * i as f64 / 20.0;
            let (s, v, a, u) = c.eval(t);
            assert_abs_diff_eq!(s, 10.0 * t, epsilon = 1e-9);
            assert_abs_diff_eq!(v, 10.0, epsilon = 1e-9);
            assert_abs_diff_eq!(a, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(u, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn boundary_conditions_hold() {
        let x0 = State1D::new(-4.0, 3.0, 1.1);
        let xf = State1D::new(90.0, 14.0, -0.7);
        let c = solve(x0, xf, 8.2).unwrap();
        let (s, v, a, _) = c.eval(0.0);
        assert_abs_diff_eq!(s, x0.s, epsilon = 1e-9);
        assert_abs_diff_eq!(v, x0.v, epsilon = 1e-9);
        assert_abs_diff_eq!(a, x0.a, epsilon = 1e-9);
        let (s, v, a, _) = c.eval(8.2);
        assert_abs_diff_eq!(s, xf.s, epsilon = 1e-9);
        assert_abs_diff_eq!(v, xf.v, epsilon = 1e-9);
        assert_abs_diff_eq!(a, xf.a, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_horizon() {
        let x = State1D::new(0.0, 0.0, 0.0);
        assert!(solve(x, x, 0.0).is_err());
        assert!(solve(x, x, f64::NAN).is_err());
    }
}
