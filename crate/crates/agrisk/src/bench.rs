//! Benchmark harness: times the simulation at increasing worker counts
//! and attributes wall time to pipeline phases by differencing runs that
//! stop at successive stages.
//!
//! Phase attribution: a lookup-only run measures table access and the
//! event loop; a through-terms run adds the financial terms; the full
//! run adds secondary uncertainty. Each phase cost is the difference of
//! adjacent stage timings, clamped at zero against timer noise.

use crate::engine::{run_portfolio_phase, EngineConfig, EngineError, SimPhase};
use crate::model::{LossTable, Portfolio, YearEventTable};
use std::time::Instant;

/// One timing observation: a phase at a worker count.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub num_workers: usize,
    pub num_trials: usize,
    /// One of `lookup`, `financial_terms`, `secondary_uncertainty`, `total`.
    pub phase: &'static str,
    pub wall_time_ms: f64,
    /// Total wall time at this worker count divided into this one; only
    /// meaningful for the `total` phase rows.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("num_workers,num_trials,phase,wall_time_ms,speedup\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.3},{:.3}\n",
                r.num_workers, r.num_trials, r.phase, r.wall_time_ms, r.speedup
            ));
        }
        out
    }

    /// Total wall time at a worker count, if measured.
    pub fn total_ms(&self, num_workers: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.num_workers == num_workers && r.phase == "total")
            .map(|r| r.wall_time_ms)
    }
}

fn time_phase(
    pf: &Portfolio,
    yet: &YearEventTable,
    table: &LossTable,
    cfg: &EngineConfig,
    phase: SimPhase,
    repeats: usize,
) -> Result<f64, EngineError> {
    // one discarded warmup to populate caches and spin up the pool
    run_portfolio_phase(pf, yet, table, cfg, phase)?;
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        run_portfolio_phase(pf, yet, table, cfg, phase)?;
        best = best.min(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(best)
}

/// Run the benchmark over the given worker counts. `repeats` runs are
/// taken per stage and the minimum kept, which is the standard way to
/// suppress scheduler noise on a shared host.
pub fn run_bench(
    pf: &Portfolio,
    yet: &YearEventTable,
    table: &LossTable,
    base_cfg: &EngineConfig,
    worker_counts: &[usize],
    repeats: usize,
) -> Result<BenchReport, EngineError> {
    let num_trials = yet.trials.len();
    let mut rows = Vec::new();
    let mut baseline_total = None;
    for &workers in worker_counts {
        let cfg = EngineConfig { num_workers: workers, ..base_cfg.clone() };
        let t_lookup = time_phase(pf, yet, table, &cfg, SimPhase::LookupOnly, repeats)?;
        let t_terms = time_phase(pf, yet, table, &cfg, SimPhase::ThroughTerms, repeats)?;
        let t_full = time_phase(pf, yet, table, &cfg, SimPhase::Full, repeats)?;
        let baseline = *baseline_total.get_or_insert(t_full);
        for (phase, ms, speedup) in [
            ("lookup", t_lookup, 0.0),
            ("financial_terms", (t_terms - t_lookup).max(0.0), 0.0),
            ("secondary_uncertainty", (t_full - t_terms).max(0.0), 0.0),
            ("total", t_full, baseline / t_full),
        ] {
            rows.push(BenchRow {
                num_workers: workers,
                num_trials,
                phase,
                wall_time_ms: ms,
                speedup,
            });
        }
    }
    Ok(BenchReport { rows })
}
