//! Longitudinal state and dynamic limits shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("time {t} outside trajectory horizon [0, {t_f}]")]
    OutOfRange { t: f64, t_f: f64 },
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Longitudinal state along a 1D path: position, velocity, acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State1D {
    /// Position (m), arc length along the path.
    pub s: f64,
    /// Velocity (m/s).
    pub v: f64,
    /// Acceleration (m/s²).
    pub a: f64,
}

impl State1D {
    pub fn new(s: f64, v: f64, a: f64) -> Self {
        Self { s, v, a }
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.v.is_finite() && self.a.is_finite()
    }
}

/// Acceleration/velocity bounds plus the maximum acceptable fail-safe
/// deceleration `b_max` (a separate emergency bound, not tied to `a_min`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicLimits {
    /// Minimum (most negative) acceleration (m/s²), < 0.
    pub a_min: f64,
    /// Maximum acceleration (m/s²), > 0.
    pub a_max: f64,
    /// Maximum velocity (m/s), > 0. Velocity must also stay >= 0.
    pub v_max: f64,
    /// Maximum acceptable fail-safe deceleration (m/s², positive).
    pub b_max: f64,
}

impl Default for DynamicLimits {
    fn default() -> Self {
        // the velocity limit leaves headroom above the 30/3.6 map speed so
        // that initial speeds up to 35/3.6 remain feasible states
        Self {
            a_min: -4.0,
            a_max: 2.5,
            v_max: 10.0,
            b_max: 4.0,
        }
    }
}

impl DynamicLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_min < 0.0 && self.a_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need a_min < 0 < a_max, got [{}, {}]",
                self.a_min, self.a_max
            )));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::InvalidArgument(format!("v_max must be > 0, got {}", self.v_max)));
        }
        if !(self.b_max > 0.0) {
            return Err(Error::InvalidArgument(format!("b_max must be > 0, got {}", self.b_max)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_limits_are_valid() {
        DynamicLimits::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_limits() {
        let mut l = DynamicLimits::default();
        l.a_min = 1.0;
        assert!(l.validate().is_err());
        let mut l = DynamicLimits::default();
        l.v_max = 0.0;
        assert!(l.validate().is_err());
    }
}
