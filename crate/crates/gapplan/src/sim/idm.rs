//! Intelligent driver model car-following acceleration.

/// IDM parameters. Defaults are standard published values matched to the
/// 30 km/h scenario speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams {
    /// Desired speed v0 (m/s).
    pub v0: f64,
    /// Time headway T (s).
    pub t_headway: f64,
    /// Minimum gap s0 (m).
    pub s0: f64,
    /// Maximum acceleration a (m/s²).
    pub a_max: f64,
    /// Comfortable deceleration b (m/s²).
    pub b_comf: f64,
    /// Velocity exponent δ.
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 30.0 / 3.6,
            t_headway: 1.5,
            s0: 2.0,
            a_max: 1.4,
            b_comf: 2.0,
            delta: 4.0,
        }
    }
}

/// Physical full-braking floor applied to the IDM output (m/s²).
pub const FULL_BRAKE: f64 = -9.0;

/// IDM acceleration for bumper gap `gap` (use `f64::INFINITY` for a free
/// road) and closing speed `dv = v - v_leader`. A non-positive gap returns
/// the full-braking floor; the formula output is clamped to it as well.
pub fn idm_accel(v: f64, gap: f64, dv: f64, p: &IdmParams) -> f64 {
    let free = p.a_max * (1.0 - (v / p.v0).powf(p.delta));
    if gap.is_infinite() {
        return free.max(FULL_BRAKE);
    }
    if gap <= 0.0 {
        return FULL_BRAKE;
    }
    let s_star = p.s0 + v * p.t_headway + v * dv / (2.0 * (p.a_max * p.b_comf).sqrt());
    let a = p.a_max * (1.0 - (v / p.v0).powf(p.delta) - (s_star / gap).powi(2));
    a.max(FULL_BRAKE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn free_road_fixed_point() {
        let p = IdmParams::default();
        assert_abs_diff_eq!(idm_accel(p.v0, f64::INFINITY, 0.0, &p), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn free_road_standstill_accelerates_fully() {
        let p = IdmParams::default();
        assert_abs_diff_eq!(idm_accel(0.0, f64::INFINITY, 0.0, &p), p.a_max, epsilon = 1e-12);
    }

    #[test]
    fn formula_recomputation() {
        // independent term-by-term recomputation at the default parameters
        let p = IdmParams::default();
        let (v, gap, dv) = (8.33, 30.0, 0.0);
        let s_star: f64 = 2.0 + 8.33 * 1.5 + 0.0;
        let expect = 1.4 * (1.0 - (8.33_f64 / (30.0 / 3.6)).powf(4.0) - (s_star / 30.0) * (s_star / 30.0));
        assert_abs_diff_eq!(idm_accel(v, gap, dv, &p), expect, epsilon = 1e-9);
    }

    #[test]
    fn closed_gap_brakes_fully() {
        let p = IdmParams::default();
        assert_eq!(idm_accel(5.0, 0.0, 0.0, &p), FULL_BRAKE);
        assert_eq!(idm_accel(5.0, -1.0, 0.0, &p), FULL_BRAKE);
        // tiny gap: formula blows up but stays clamped
        assert_eq!(idm_accel(5.0, 1e-6, 0.0, &p), FULL_BRAKE);
    }
}
