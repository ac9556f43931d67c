//! Noisy-target replanning experiment.
//!
//! A single merge maneuver with a fixed horizon is replanned every cycle
//! while the target state jumps due to prediction noise. Past the lock time
//! the target freezes and the remainder is planned solely jerk-optimal.
//! The pieces actually driven (the first cycle of every plan) concatenate
//! into the executed trajectory, whose jerk energy measures how much of
//! the noise leaked into the motion.

use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::quad;
use crate::state::{Error, Result, State1D};
use crate::trajgen::{fmt_sig, solve_quintic, solve_time_weighted_anchored, Trajectory};

/// Parameters of one replay run.
#[derive(Debug, Clone, Copy)]
pub struct ReplaySpec {
    pub x0: State1D,
    /// Nominal target state (position, speed, zero acceleration).
    pub target: State1D,
    /// Experiment horizon (s).
    pub t_f: f64,
    /// Replanning cadence (s).
    pub dt: f64,
    /// Target lock time (s); cycles after it ignore the noise and plan
    /// jerk-optimal toward the frozen target.
    pub lock_time: f64,
    /// Time weight; the weight stays anchored to the experiment clock so
    /// replanning a consistent target reproduces the original plan's tail.
    pub w_t: f64,
}

/// A sampled point of the executed trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajSample {
    pub t: f64,
    pub s: f64,
    pub v: f64,
    pub a: f64,
    pub j: f64,
}

#[derive(Debug, Clone)]
pub struct ReplayResult {
    /// Executed trajectory sampled at each cycle start plus the endpoint.
    pub samples: Vec<TrajSample>,
    /// ∫ u² dt of the executed trajectory (m²/s⁵).
    pub jerk_energy: f64,
    /// Every cycle's plan, with its start time.
    pub plans: Vec<(f64, Trajectory)>,
}

/// Runs the replay. `noise[k]` is the (Δs, Δv) target perturbation applied
/// at cycle k; missing entries mean zero.
pub fn replay_noisy_target(spec: &ReplaySpec, noise: &[(f64, f64)]) -> Result<ReplayResult> {
    if !(spec.t_f > 0.0) || !(spec.dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "replay needs t_f > 0 and dt > 0 (got {}, {})",
            spec.t_f, spec.dt
        )));
    }
    let mut cur = spec.x0;
    let mut frozen = spec.target;
    let mut samples = Vec::new();
    let mut plans = Vec::new();
    let mut jerk_energy = 0.0;
    let mut k = 0usize;
    loop {
        let t_k = k as f64 * spec.dt;
        let remaining = spec.t_f - t_k;
        if remaining <= 1e-9 {
            break;
        }
        let locked = t_k > spec.lock_time + 1e-9;
        let target = if locked {
            frozen
        } else {
            let (ds, dv) = noise.get(k).copied().unwrap_or((0.0, 0.0));
            let t = State1D::new(spec.target.s + ds, spec.target.v + dv, 0.0);
            frozen = t;
            t
        };
        let plan = if locked {
            solve_quintic(cur, target, remaining)?
        } else {
            solve_time_weighted_anchored(cur, target, remaining, spec.w_t, t_k)?
        };
        let step = spec.dt.min(remaining);
        let (x, j) = plan.eval_clamped(0.0);
        samples.push(TrajSample { t: t_k, s: x.s, v: x.v, a: x.a, j });
        jerk_energy += quad::integrate(
            |t| {
                let (_, u) = plan.eval_clamped(t);
                u * u
            },
            0.0,
            step,
            1e-8,
        );
        let (next, _) = plan.eval_clamped(step);
        cur = next;
        plans.push((t_k, plan));
        k += 1;
    }
    let j_final = plans
        .last()
        .map(|(t_k, p)| p.eval_clamped(spec.t_f - t_k).1)
        .unwrap_or(0.0);
    samples.push(TrajSample {
        t: spec.t_f,
        s: cur.s,
        v: cur.v,
        a: cur.a,
        j: j_final,
    });
    Ok(ReplayResult {
        samples,
        jerk_energy,
        plans,
    })
}

/// Generates a target-noise sequence with magnitudes shrinking over the
/// horizon (large early, small near arrival) and occasional holds, matching
/// how intermittent prediction updates move a merge target.
pub fn generate_target_noise(
    n_cycles: usize,
    dt: f64,
    t_f: f64,
    sigma_s0: f64,
    sigma_v0: f64,
    hold_prob: f64,
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::with_capacity(n_cycles);
    let mut prev = (0.0, 0.0);
    for k in 0..n_cycles {
        let t = k as f64 * dt;
        let decay = (1.0 - t / t_f).max(0.0);
        let sig_s = sigma_s0 * decay * decay + 0.3;
        let sig_v = sigma_v0 * decay * decay + 0.05;
        if k > 0 && rng.gen::<f64>() < hold_prob {
            out.push(prev);
            continue;
        }
        prev = (sig_s * unit.sample(&mut rng), sig_v * unit.sample(&mut rng));
        out.push(prev);
    }
    out
}

/// Reads a noise sequence CSV `t,ds,dv` on the replanning grid.
pub fn read_noise_csv<R: BufRead>(reader: R, dt: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if i == 0 {
            if trimmed != "t,ds,dv" {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected header 't,ds,dv', got '{trimmed}'"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("cannot parse '{s}' as a number"),
            })
        };
        let t = parse(fields[0])?;
        let expect = out.len() as f64 * dt;
        if (t - expect).abs() > 1e-6 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("time {t} is off the replanning grid (expected {expect})"),
            });
        }
        out.push((parse(fields[1])?, parse(fields[2])?));
    }
    Ok(out)
}

/// Writes an executed trajectory in the standard `t,s,v,a,j` format.
pub fn write_samples_csv<W: Write>(out: &mut W, samples: &[TrajSample]) -> io::Result<()> {
    writeln!(out, "t,s,v,a,j")?;
    for p in samples {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sig(p.t),
            fmt_sig(p.s),
            fmt_sig(p.v),
            fmt_sig(p.a),
            fmt_sig(p.j)
        )?;
    }
    Ok(())
}
