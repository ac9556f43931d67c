//! Monte-Carlo sweep over gap sizes and time weights.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::planner::DecisionClass;
use crate::sim::episode::{derive_seed, run_episode, EpisodeResult};
use crate::trajgen::fmt_sig;

/// Sweep grid: every (gap, w_t) cell runs `runs` episodes.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub gaps: Vec<f64>,
    pub w_ts: Vec<f64>,
    pub runs: usize,
}

impl SweepSpec {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            gaps: cfg.sweep_gaps(),
            w_ts: cfg.w_t_set.clone(),
            runs: cfg.runs,
        }
    }
}

/// Aggregated statistics of one sweep cell.
#[derive(Debug, Clone)]
pub struct StatsRow {
    pub gap: f64,
    pub w_t: f64,
    pub runs: usize,
    /// Fraction merging into a gap (incl. behind the last vehicle).
    pub p_gap: f64,
    /// Fraction merging before the first vehicle.
    pub p_before: f64,
    /// Fraction gently stopping at the yield line.
    pub p_gentle: f64,
    /// Fraction applying the fail-safe strategy.
    pub p_failsafe: f64,
    pub collisions: usize,
    /// Mean applied fail-safe deceleration over fail-safe episodes (m/s²).
    pub mean_failsafe_decel: f64,
    /// Max applied fail-safe deceleration (m/s²).
    pub max_failsafe_decel: f64,
    /// Max fail-safe deceleration among non-emergency episodes (m/s²).
    pub max_nonemergency_decel: f64,
    /// Episodes whose fail-safe could not stop at the yield line.
    pub emergencies: usize,
    /// Mean planning-cycle wall time (ms); excluded from determinism.
    pub mean_cycle_ms: f64,
}

/// A collision with everything needed to replay it.
#[derive(Debug, Clone, Copy)]
pub struct CollisionEvent {
    pub gap: f64,
    pub w_t: f64,
    pub run: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct StatsTable {
    pub rows: Vec<StatsRow>,
    pub collisions: Vec<CollisionEvent>,
}

/// Per-episode seed. Depends on the gap and the run index but NOT on the
/// time weight, so the main-road traffic is identical across weights.
pub fn episode_seed(master: u64, gap: f64, run: usize) -> u64 {
    derive_seed(master, &[gap.to_bits(), run as u64])
}

fn fold_cell(gap: f64, w_t: f64, episodes: &[EpisodeResult]) -> StatsRow {
    let runs = episodes.len();
    let count = |c: DecisionClass| episodes.iter().filter(|e| e.decision_class == c).count();
    let n_gap = count(DecisionClass::MergeIntoGap);
    let n_before = count(DecisionClass::MergeBeforeFirst);
    let n_gentle = count(DecisionClass::GentleStop);
    let n_fs = count(DecisionClass::FailSafe);
    let fs: Vec<&EpisodeResult> = episodes
        .iter()
        .filter(|e| e.decision_class == DecisionClass::FailSafe)
        .collect();
    let fs_decels: Vec<f64> = fs.iter().filter_map(|e| e.failsafe_decel).collect();
    let mean_fs = if fs_decels.is_empty() {
        0.0
    } else {
        fs_decels.iter().sum::<f64>() / fs_decels.len() as f64
    };
    let max_fs = fs_decels.iter().fold(0.0_f64, |a, &b| a.max(b));
    let max_non_em = fs
        .iter()
        .filter(|e| !e.emergency)
        .filter_map(|e| e.failsafe_decel)
        .fold(0.0_f64, |a, b| a.max(b));
    let mut n_cycles = 0usize;
    let mut ms_sum = 0.0;
    for e in episodes {
        n_cycles += e.cycle_log.len();
        ms_sum += e.cycle_times_ms().sum::<f64>();
    }
    StatsRow {
        gap,
        w_t,
        runs,
        p_gap: n_gap as f64 / runs as f64,
        p_before: n_before as f64 / runs as f64,
        p_gentle: n_gentle as f64 / runs as f64,
        p_failsafe: n_fs as f64 / runs as f64,
        collisions: episodes.iter().filter(|e| e.collided).count(),
        mean_failsafe_decel: mean_fs,
        max_failsafe_decel: max_fs,
        max_nonemergency_decel: max_non_em,
        emergencies: episodes.iter().filter(|e| e.emergency && e.decision_class == DecisionClass::FailSafe).count(),
        mean_cycle_ms: if n_cycles > 0 { ms_sum / n_cycles as f64 } else { 0.0 },
    }
}

/// Runs one sweep cell. Episodes are distributed across the rayon pool but
/// collected in index order, so the aggregated statistics are bit-identical
/// for any thread count.
pub fn monte_carlo_cell(
    base: &RunConfig,
    gap: f64,
    w_t: f64,
    runs: usize,
) -> (StatsRow, Vec<CollisionEvent>) {
    let mut cfg = base.clone();
    cfg.scenario.gap_size = gap;
    cfg.w_t = w_t;
    let episodes: Vec<EpisodeResult> = (0..runs)
        .into_par_iter()
        .map(|run| run_episode(&cfg, episode_seed(base.seed, gap, run)))
        .collect();
    let collisions = episodes
        .iter()
        .enumerate()
        .filter(|(_, e)| e.collided)
        .map(|(run, e)| CollisionEvent {
            gap,
            w_t,
            run,
            seed: e.seed,
        })
        .collect();
    (fold_cell(gap, w_t, &episodes), collisions)
}

/// Runs the full sweep over every (gap, w_t) cell.
pub fn monte_carlo(spec: &SweepSpec, base: &RunConfig) -> StatsTable {
    let mut rows = Vec::new();
    let mut collisions = Vec::new();
    for &gap in &spec.gaps {
        for &w_t in &spec.w_ts {
            let (row, cell_collisions) = monte_carlo_cell(base, gap, w_t, spec.runs);
            rows.push(row);
            collisions.extend(cell_collisions);
        }
    }
    StatsTable { rows, collisions }
}

/// Writes the sweep statistics as CSV. The timing column is wall-clock and
/// therefore not deterministic; pass `include_timing = false` to leave it
/// empty for byte-identical output across runs and thread counts.
pub fn write_stats_csv<W: Write>(out: &mut W, table: &StatsTable, include_timing: bool) -> io::Result<()> {
    writeln!(
        out,
        "gap_m,w_t,runs,p_gap,p_before,p_gentle,p_failsafe,collisions,mean_failsafe_decel,max_failsafe_decel,mean_cycle_ms"
    )?;
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.gap,
            r.w_t,
            r.runs,
            fmt_sig(r.p_gap),
            fmt_sig(r.p_before),
            fmt_sig(r.p_gentle),
            fmt_sig(r.p_failsafe),
            r.collisions,
            fmt_sig(r.mean_failsafe_decel),
            fmt_sig(r.max_failsafe_decel),
            if include_timing {
                format!("{:.3}", r.mean_cycle_ms)
            } else {
                String::new()
            }
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.runs = 4;
        cfg
    }

    #[test]
    fn fractions_sum_to_one() {
        let cfg = tiny_cfg();
        let spec = SweepSpec {
            gaps: vec![40.0, 60.0],
            w_ts: vec![1.0],
            runs: 4,
        };
        let table = monte_carlo(&spec, &cfg);
        assert_eq!(table.rows.len(), 2);
        for r in &table.rows {
            let sum = r.p_gap + r.p_before + r.p_gentle + r.p_failsafe;
            assert!((sum - 1.0).abs() < 1e-12, "fractions sum to {sum}");
        }
    }

    #[test]
    fn single_run_has_unit_fraction() {
        let cfg = tiny_cfg();
        let spec = SweepSpec {
            gaps: vec![50.0],
            w_ts: vec![12.5],
            runs: 1,
        };
        let table = monte_carlo(&spec, &cfg);
        let r = &table.rows[0];
        let fractions = [r.p_gap, r.p_before, r.p_gentle, r.p_failsafe];
        assert_eq!(fractions.iter().filter(|&&f| f == 1.0).count(), 1);
        assert_eq!(fractions.iter().filter(|&&f| f == 0.0).count(), 3);
    }

    #[test]
    fn traffic_shared_across_weights() {
        // identical other-vehicle trajectories (bitwise) across w_t cells
        let cfg = tiny_cfg();
        for run in 0..3 {
            let seed = episode_seed(cfg.seed, 50.0, run);
            let mut c1 = cfg.clone();
            c1.scenario.gap_size = 50.0;
            c1.w_t = 1.0;
            let mut c25 = cfg.clone();
            c25.scenario.gap_size = 50.0;
            c25.w_t = 25.0;
            let e1 = run_episode(&c1, seed);
            let e25 = run_episode(&c25, seed);
            assert_eq!(e1.rollout_digest, e25.rollout_digest);
        }
    }

    #[test]
    fn csv_schema_and_timing_toggle() {
        let cfg = tiny_cfg();
        let spec = SweepSpec {
            gaps: vec![50.0],
            w_ts: vec![1.0],
            runs: 2,
        };
        let table = monte_carlo(&spec, &cfg);
        let mut with = Vec::new();
        write_stats_csv(&mut with, &table, true).unwrap();
        let mut without = Vec::new();
        write_stats_csv(&mut without, &table, false).unwrap();
        let text = String::from_utf8(without).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "gap_m,w_t,runs,p_gap,p_before,p_gentle,p_failsafe,collisions,mean_failsafe_decel,max_failsafe_decel,mean_cycle_ms"
        );
        assert!(lines.next().unwrap().ends_with(','), "timing column left empty");
    }
}
