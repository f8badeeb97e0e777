//! The per-trial simulation: for every program, layer and trial, walk the
//! trial's event sequence, look losses up in the direct-access table, apply
//! secondary uncertainty and financial terms, and populate year loss tables.
//!
//! Parallelism is over trials. Workers write only their own pre-allocated
//! trial slots, so results are bit-identical for any worker count or chunk
//! size.

use crate::model::{validate_portfolio, Finding, Layer, LayerTerms, LossTable, Portfolio, Trial,
    YearEventTable};
use crate::uncertainty::{self, UncertaintyError};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    Single,
}

/// How aggregate terms are applied within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregateMode {
    /// Re-apply the aggregate formula to the carried trial loss after every
    /// event. The clipped value feeds the next event, so the outcome can
    /// depend on event order.
    #[default]
    ClipAsYouGo,
    /// Apply aggregate terms once, to the trial's total occurrence-net loss.
    AtTrialEnd,
}

/// Which stages of the per-event work to run. The bench harness times the
/// stages differentially; normal runs always use [`SimPhase::Full`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimPhase {
    /// Event fetch and loss-table lookup only; present mean losses are
    /// summed raw.
    LookupOnly,
    /// Lookup plus financial terms, with the mean loss standing in for the
    /// sampled loss.
    ThroughTerms,
    #[default]
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub num_workers: usize,
    /// Trials per work unit handed to a worker.
    pub chunk_size: usize,
    pub precision: Precision,
    pub xelt_terms_enabled: bool,
    pub aggregate_mode: AggregateMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            num_workers: 1,
            chunk_size: 256,
            precision: Precision::Double,
            xelt_terms_enabled: true,
            aggregate_mode: AggregateMode::ClipAsYouGo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialLoss {
    pub trial_id: u64,
    pub loss: f64,
}

/// Final loss per trial for one layer (or a portfolio rollup).
#[derive(Debug, Clone, PartialEq)]
pub struct YearLossTable {
    pub losses: Vec<TrialLoss>,
}

impl YearLossTable {
    pub fn loss_values(&self) -> Vec<f64> {
        self.losses.iter().map(|t| t.loss).collect()
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("portfolio failed validation with {} finding(s); first: {}", .0.len(), .0[0])]
    Validation(Vec<Finding>),
    #[error("trial {trial_id}, event {event_index}, xelt {xelt}: {source}")]
    Uncertainty {
        trial_id: u64,
        event_index: usize,
        xelt: usize,
        source: UncertaintyError,
    },
}

/// Occurrence terms: min(max(l − OccR, 0), OccL).
#[inline]
pub fn apply_occurrence_terms(loss: f64, terms: &LayerTerms) -> f64 {
    (loss - terms.occ_retention).max(0.0).min(terms.occ_limit)
}

/// Aggregate terms: min(max(l − AggR, 0), AggL).
#[inline]
pub fn apply_aggregate_terms(loss: f64, terms: &LayerTerms) -> f64 {
    (loss - terms.agg_retention).max(0.0).min(terms.agg_limit)
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub precision: Precision,
    pub xelt_terms_enabled: bool,
    pub aggregate_mode: AggregateMode,
    pub phase: SimPhase,
}

impl SimOptions {
    pub fn from_config(cfg: &EngineConfig, phase: SimPhase) -> Self {
        SimOptions {
            precision: cfg.precision,
            xelt_terms_enabled: cfg.xelt_terms_enabled,
            aggregate_mode: cfg.aggregate_mode,
            phase,
        }
    }
}

/// Simulate one trial against one layer and return its year loss.
///
/// Per-event losses are summed in XELT-index order, then event order, so
/// the floating-point result is reproducible.
pub fn simulate_trial(
    trial: &Trial,
    trial_id: u64,
    layer: &Layer,
    table: &LossTable,
    opts: &SimOptions,
) -> Result<f64, EngineError> {
    match opts.precision {
        Precision::Double => simulate_trial_f64(trial, trial_id, layer, table, opts),
        Precision::Single => simulate_trial_f32(trial, trial_id, layer, table, opts),
    }
}

fn simulate_trial_f64(
    trial: &Trial,
    trial_id: u64,
    layer: &Layer,
    table: &LossTable,
    opts: &SimOptions,
) -> Result<f64, EngineError> {
    let terms = &layer.terms;
    let mut year_loss = 0.0_f64;
    let mut cumulative = 0.0_f64;
    for (event_index, occ) in trial.occurrences.iter().enumerate() {
        let mut event_loss = 0.0_f64;
        for (pos, &xelt_id) in layer.xelt_ids.iter().enumerate() {
            let Some(slot) = table.lookup(xelt_id, occ.event_id) else {
                continue;
            };
            let loss = match opts.phase {
                SimPhase::LookupOnly | SimPhase::ThroughTerms => slot.mean_loss,
                SimPhase::Full => uncertainty::sample_loss(
                    slot.mean_loss,
                    slot.z_e,
                    slot.sigma_i,
                    slot.sigma_c,
                    slot.max_loss,
                    occ.z_prog_e,
                )
                .map_err(|source| EngineError::Uncertainty {
                    trial_id,
                    event_index,
                    xelt: xelt_id,
                    source,
                })?,
            };
            let loss = if opts.xelt_terms_enabled && opts.phase != SimPhase::LookupOnly {
                layer.xelt_terms[pos].apply(loss)
            } else {
                loss
            };
            event_loss += loss;
        }
        if opts.phase == SimPhase::LookupOnly {
            year_loss += event_loss;
            continue;
        }
        let occ_net = apply_occurrence_terms(event_loss, terms);
        match opts.aggregate_mode {
            AggregateMode::ClipAsYouGo => {
                year_loss = apply_aggregate_terms(year_loss + occ_net, terms);
            }
            AggregateMode::AtTrialEnd => cumulative += occ_net,
        }
    }
    if opts.phase == SimPhase::LookupOnly {
        return Ok(year_loss);
    }
    if opts.aggregate_mode == AggregateMode::AtTrialEnd {
        year_loss = apply_aggregate_terms(cumulative, terms);
    }
    Ok(year_loss)
}

fn simulate_trial_f32(
    trial: &Trial,
    trial_id: u64,
    layer: &Layer,
    table: &LossTable,
    opts: &SimOptions,
) -> Result<f64, EngineError> {
    let terms = &layer.terms;
    let occ_r = terms.occ_retention as f32;
    let occ_l = terms.occ_limit as f32;
    let agg_r = terms.agg_retention as f32;
    let agg_l = terms.agg_limit as f32;
    let mut year_loss = 0.0_f32;
    let mut cumulative = 0.0_f32;
    for (event_index, occ) in trial.occurrences.iter().enumerate() {
        let mut event_loss = 0.0_f32;
        for (pos, &xelt_id) in layer.xelt_ids.iter().enumerate() {
            let Some(slot) = table.lookup(xelt_id, occ.event_id) else {
                continue;
            };
            let loss = match opts.phase {
                SimPhase::LookupOnly | SimPhase::ThroughTerms => slot.mean_loss as f32,
                SimPhase::Full => uncertainty::sample_loss_single(
                    slot.mean_loss as f32,
                    slot.z_e as f32,
                    slot.sigma_i as f32,
                    slot.sigma_c as f32,
                    slot.max_loss as f32,
                    occ.z_prog_e as f32,
                )
                .map_err(|source| EngineError::Uncertainty {
                    trial_id,
                    event_index,
                    xelt: xelt_id,
                    source,
                })?,
            };
            let loss = if opts.xelt_terms_enabled && opts.phase != SimPhase::LookupOnly {
                let t = &layer.xelt_terms[pos];
                t.share as f32 * (loss - t.retention as f32).max(0.0).min(t.limit as f32)
            } else {
                loss
            };
            event_loss += loss;
        }
        if opts.phase == SimPhase::LookupOnly {
            year_loss += event_loss;
            continue;
        }
        let occ_net = (event_loss - occ_r).max(0.0).min(occ_l);
        match opts.aggregate_mode {
            AggregateMode::ClipAsYouGo => {
                year_loss = (year_loss + occ_net - agg_r).max(0.0).min(agg_l);
            }
            AggregateMode::AtTrialEnd => cumulative += occ_net,
        }
    }
    if opts.phase == SimPhase::LookupOnly {
        return Ok(year_loss as f64);
    }
    if opts.aggregate_mode == AggregateMode::AtTrialEnd {
        year_loss = (cumulative - agg_r).max(0.0).min(agg_l);
    }
    Ok(year_loss as f64)
}

/// Run the full analysis and produce one year loss table per layer, in
/// program-major order.
pub fn run_portfolio(
    pf: &Portfolio,
    yet: &YearEventTable,
    table: &LossTable,
    cfg: &EngineConfig,
) -> Result<Vec<YearLossTable>, EngineError> {
    run_portfolio_phase(pf, yet, table, cfg, SimPhase::Full)
}

/// [`run_portfolio`] with an explicit simulation phase (bench harness use).
pub fn run_portfolio_phase(
    pf: &Portfolio,
    yet: &YearEventTable,
    table: &LossTable,
    cfg: &EngineConfig,
    phase: SimPhase,
) -> Result<Vec<YearLossTable>, EngineError> {
    let findings = validate_portfolio(pf, table);
    if !findings.is_empty() {
        return Err(EngineError::Validation(findings));
    }
    let opts = SimOptions::from_config(cfg, phase);
    let chunk = cfg.chunk_size.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.num_workers.max(1))
        .build()
        .expect("failed to build worker pool");

    let mut output = Vec::with_capacity(pf.num_layers());
    for layer in pf.layers() {
        let mut losses = vec![0.0_f64; yet.trials.len()];
        pool.install(|| {
            losses
                .par_chunks_mut(chunk)
                .zip(yet.trials.par_chunks(chunk))
                .enumerate()
                .try_for_each(|(chunk_idx, (out, trials))| {
                    let base = (chunk_idx * chunk) as u64;
                    for (i, (slot, trial)) in out.iter_mut().zip(trials).enumerate() {
                        *slot = simulate_trial(trial, base + i as u64, layer, table, &opts)?;
                    }
                    Ok(())
                })
        })?;
        output.push(YearLossTable {
            losses: losses
                .into_iter()
                .enumerate()
                .map(|(i, loss)| TrialLoss { trial_id: i as u64, loss })
                .collect(),
        });
    }
    Ok(output)
}

/// Sum per-layer year losses into a single portfolio-level table. This is
/// an extension beyond the per-layer outputs.
pub fn portfolio_rollup(per_layer: &[YearLossTable]) -> YearLossTable {
    let num_trials = per_layer.first().map_or(0, |y| y.losses.len());
    let losses = (0..num_trials)
        .map(|i| TrialLoss {
            trial_id: i as u64,
            loss: per_layer.iter().map(|y| y.losses[i].loss).sum(),
        })
        .collect();
    YearLossTable { losses }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_loss_table, EventOccurrence, Program, XeltRecord, XeltTerms};

    fn layer_terms(occ_r: f64, occ_l: f64, agg_r: f64, agg_l: f64) -> LayerTerms {
        LayerTerms {
            occ_retention: occ_r,
            occ_limit: occ_l,
            agg_retention: agg_r,
            agg_limit: agg_l,
        }
    }

    #[test]
    fn occurrence_terms_formula() {
        let t = layer_terms(20.0, 50.0, 0.0, 1e9);
        assert_eq!(apply_occurrence_terms(100.0, &t), 50.0);
        assert_eq!(apply_occurrence_terms(10.0, &t), 0.0);
        assert_eq!(apply_occurrence_terms(45.0, &t), 25.0);
    }

    #[test]
    fn aggregate_terms_formula() {
        let t = layer_terms(0.0, 1e9, 200.0, 500.0);
        assert_eq!(apply_aggregate_terms(1000.0, &t), 500.0);
        assert_eq!(apply_aggregate_terms(0.0, &t), 0.0);
        assert_eq!(apply_aggregate_terms(350.0, &t), 150.0);
    }

    fn degenerate_record(event_id: u32, mean: f64) -> XeltRecord {
        XeltRecord {
            event_id,
            mean_loss: mean,
            z_e: 0.5,
            sigma_i: 0.0,
            sigma_c: 0.0,
            max_loss: mean.max(1.0) * 4.0,
        }
    }

    fn occurrence(event_id: u32, ts: f64) -> EventOccurrence {
        EventOccurrence { event_id, timestamp: ts, z_prog_e: 0.5 }
    }

    fn single_layer(xelt_ids: Vec<usize>, terms: LayerTerms) -> Layer {
        let n = xelt_ids.len();
        Layer { xelt_ids, xelt_terms: vec![XeltTerms::identity(); n], terms }
    }

    #[test]
    fn zero_event_trial_is_zero() {
        let table = build_loss_table(&[vec![degenerate_record(0, 10.0)]], 4).unwrap();
        let layer = single_layer(vec![0], layer_terms(0.0, 1e9, 0.0, 1e9));
        let opts = SimOptions::from_config(&EngineConfig::default(), SimPhase::Full);
        let trial = Trial { occurrences: vec![] };
        assert_eq!(simulate_trial(&trial, 0, &layer, &table, &opts).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_pass_through() {
        let table = build_loss_table(&[vec![degenerate_record(1, 30.0)]], 4).unwrap();
        let layer = single_layer(vec![0], layer_terms(0.0, 1e12, 0.0, 1e12));
        let opts = SimOptions::from_config(&EngineConfig::default(), SimPhase::Full);
        let trial = Trial { occurrences: vec![occurrence(1, 0.2)] };
        assert_eq!(simulate_trial(&trial, 0, &layer, &table, &opts).unwrap(), 30.0);
    }

    #[test]
    fn aggregate_clip_as_you_go_is_order_dependent() {
        let records =
            vec![vec![degenerate_record(0, 300.0)], vec![degenerate_record(1, 100.0)]];
        // two events hitting one record each
        let table = build_loss_table(&records, 4).unwrap();
        let layer = single_layer(vec![0, 1], layer_terms(0.0, 1e12, 200.0, 1e12));
        let opts = SimOptions::from_config(&EngineConfig::default(), SimPhase::Full);
        let fwd = Trial { occurrences: vec![occurrence(0, 0.1), occurrence(1, 0.2)] };
        let rev = Trial { occurrences: vec![occurrence(1, 0.1), occurrence(0, 0.2)] };
        let a = simulate_trial(&fwd, 0, &layer, &table, &opts).unwrap();
        let b = simulate_trial(&rev, 0, &layer, &table, &opts).unwrap();
        // 300 then 100: (300-200)=100, then (100+100-200)=0
        assert_eq!(a, 0.0);
        // 100 then 300: (100-200)=0, then (0+300-200)=100
        assert_eq!(b, 100.0);
    }

    #[test]
    fn no_aggregate_terms_means_permutation_invariant_sum() {
        let records =
            vec![vec![degenerate_record(0, 12.5)], vec![degenerate_record(1, 30.0)]];
        let table = build_loss_table(&records, 4).unwrap();
        let layer = single_layer(vec![0, 1], layer_terms(5.0, 1e12, 0.0, 1e12));
        let opts = SimOptions::from_config(&EngineConfig::default(), SimPhase::Full);
        let fwd = Trial { occurrences: vec![occurrence(0, 0.1), occurrence(1, 0.2)] };
        let rev = Trial { occurrences: vec![occurrence(1, 0.1), occurrence(0, 0.2)] };
        let a = simulate_trial(&fwd, 0, &layer, &table, &opts).unwrap();
        let b = simulate_trial(&rev, 0, &layer, &table, &opts).unwrap();
        assert_eq!(a, (12.5 - 5.0) + (30.0 - 5.0));
        assert_eq!(a, b);
    }

    fn small_world() -> (Portfolio, YearEventTable, LossTable) {
        let records = vec![
            vec![degenerate_record(0, 10.0), degenerate_record(2, 25.0)],
            vec![degenerate_record(1, 40.0)],
        ];
        let table = build_loss_table(&records, 4).unwrap();
        let pf = Portfolio {
            programs: vec![Program {
                layers: vec![single_layer(vec![0, 1], layer_terms(5.0, 100.0, 0.0, 1e12))],
            }],
        };
        let trials = (0..10)
            .map(|i| Trial {
                occurrences: vec![occurrence(i % 4, 0.1), occurrence((i + 1) % 4, 0.6)],
            })
            .collect();
        (pf, YearEventTable { trials, catalogue_size: 4 }, table)
    }

    #[test]
    fn run_matches_sequential_composition() {
        let (pf, yet, table) = small_world();
        let cfg = EngineConfig::default();
        let out = run_portfolio(&pf, &yet, &table, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].losses.len(), 10);
        let opts = SimOptions::from_config(&cfg, SimPhase::Full);
        let layer = &pf.programs[0].layers[0];
        for (i, trial) in yet.trials.iter().enumerate() {
            let expected = simulate_trial(trial, i as u64, layer, &table, &opts).unwrap();
            assert_eq!(out[0].losses[i].loss, expected);
            assert_eq!(out[0].losses[i].trial_id, i as u64);
        }
    }

    #[test]
    fn worker_count_and_chunking_do_not_change_bits() {
        let (pf, yet, table) = small_world();
        let base = run_portfolio(&pf, &yet, &table, &EngineConfig::default()).unwrap();
        for workers in [2, 8] {
            for chunk_size in [1, 3, 64] {
                let cfg = EngineConfig { num_workers: workers, chunk_size, ..Default::default() };
                let got = run_portfolio(&pf, &yet, &table, &cfg).unwrap();
                assert_eq!(got, base, "workers={workers} chunk={chunk_size}");
            }
        }
    }

    #[test]
    fn validation_preempts_execution() {
        let (mut pf, yet, table) = small_world();
        pf.programs[0].layers[0].xelt_ids.push(99);
        pf.programs[0].layers[0].xelt_terms.push(XeltTerms::identity());
        let err = run_portfolio(&pf, &yet, &table, &EngineConfig::default()).unwrap_err();
        assert!(matches!(err, EngineError::Validation(_)));
    }

    #[test]
    fn rollup_sums_layers_per_trial() {
        let a = YearLossTable {
            losses: vec![
                TrialLoss { trial_id: 0, loss: 1.0 },
                TrialLoss { trial_id: 1, loss: 2.0 },
            ],
        };
        let b = YearLossTable {
            losses: vec![
                TrialLoss { trial_id: 0, loss: 10.0 },
                TrialLoss { trial_id: 1, loss: 20.0 },
            ],
        };
        let roll = portfolio_rollup(&[a, b]);
        assert_eq!(roll.losses[0].loss, 11.0);
        assert_eq!(roll.losses[1].loss, 22.0);
    }

    #[test]
    fn year_loss_bounded_by_aggregate_limit() {
        let records = vec![vec![degenerate_record(0, 500.0)]];
        let table = build_loss_table(&records, 2).unwrap();
        let layer = single_layer(vec![0], layer_terms(0.0, 1e12, 0.0, 750.0));
        let opts = SimOptions::from_config(&EngineConfig::default(), SimPhase::Full);
        let trial = Trial {
            occurrences: (0..5).map(|i| occurrence(0, i as f64 / 5.0)).collect(),
        };
        let loss = simulate_trial(&trial, 0, &layer, &table, &opts).unwrap();
        assert_eq!(loss, 750.0);
    }
}
