//! Deterministic synthetic-data generation: year event tables, XELT record
//! lists, and portfolios with configurable shape parameters. Real event
//! catalogues are proprietary, so all inputs here are synthetic.
//!
//! The generator uses its own xoshiro256** stream seeded through
//! splitmix64, so a seed reproduces identical datasets on every platform.

use crate::model::{
    EventOccurrence, Layer, LayerTerms, Portfolio, Program, Trial, XeltRecord, XeltTerms,
    YearEventTable,
};
use thiserror::Error;

/// xoshiro256** with splitmix64 seeding. Fixed constants, no
/// platform-dependent behaviour.
#[derive(Debug, Clone)]
pub struct Rng {
    state: [u64; 4],
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        // splitmix64 expansion of the seed into the four state words
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        };
        Rng { state: [next(), next(), next(), next()] }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.state[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.state[1] << 17;
        self.state[2] ^= self.state[0];
        self.state[3] ^= self.state[1];
        self.state[1] ^= self.state[2];
        self.state[0] ^= self.state[3];
        self.state[2] ^= t;
        self.state[3] = self.state[3].rotate_left(45);
        result
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) / (1u64 << 53) as f64
    }

    /// Uniform draw in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound) by rejection, bias-free.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let v = self.next_u64();
            if v >= threshold {
                return v % bound;
            }
        }
    }

    /// Uniform integer in the inclusive range.
    pub fn range_u64(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }
}

/// Shape parameters for synthetic datasets. Defaults mirror the
/// experimental shape the engine is benchmarked at: a million-event
/// catalogue, 1,000 events per trial, one layer over 16 XELTs.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub num_trials: usize,
    pub events_per_trial: (usize, usize),
    pub catalogue_size: u32,
    pub num_xelts: usize,
    pub records_per_xelt: (usize, usize),
    /// Mean loss drawn uniformly from this range.
    pub mean_loss_range: (f64, f64),
    /// σ_I as a fraction of the mean loss.
    pub sigma_i_fraction: f64,
    /// σ_C as a fraction of the mean loss.
    pub sigma_c_fraction: f64,
    /// max_l = multiplier × μ_l; must exceed 1.
    pub max_loss_multiplier: f64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 0,
            num_trials: 1000,
            events_per_trial: (1000, 1000),
            catalogue_size: 1_000_000,
            num_xelts: 16,
            records_per_xelt: (10_000, 30_000),
            mean_loss_range: (1_000.0, 100_000.0),
            sigma_i_fraction: 0.5,
            sigma_c_fraction: 0.3,
            max_loss_multiplier: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("invalid generation spec: {0}")]
    Invalid(String),
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.num_trials == 0 {
            return Err(GenError::Invalid("num_trials must be at least 1".into()));
        }
        if self.events_per_trial.0 == 0 || self.events_per_trial.0 > self.events_per_trial.1 {
            return Err(GenError::Invalid(format!(
                "events_per_trial range {:?} is empty or degenerate",
                self.events_per_trial
            )));
        }
        if self.catalogue_size == 0 {
            return Err(GenError::Invalid("catalogue_size must be at least 1".into()));
        }
        if self.num_xelts == 0 {
            return Err(GenError::Invalid("num_xelts must be at least 1".into()));
        }
        if self.records_per_xelt.0 == 0 || self.records_per_xelt.0 > self.records_per_xelt.1 {
            return Err(GenError::Invalid(format!(
                "records_per_xelt range {:?} is empty or degenerate",
                self.records_per_xelt
            )));
        }
        if self.records_per_xelt.1 > self.catalogue_size as usize {
            return Err(GenError::Invalid(format!(
                "records_per_xelt up to {} exceeds catalogue of {}",
                self.records_per_xelt.1, self.catalogue_size
            )));
        }
        if !(self.mean_loss_range.0 > 0.0 && self.mean_loss_range.0 <= self.mean_loss_range.1) {
            return Err(GenError::Invalid(format!(
                "mean_loss_range {:?} is empty or nonpositive",
                self.mean_loss_range
            )));
        }
        if self.sigma_i_fraction < 0.0 || self.sigma_c_fraction < 0.0 {
            return Err(GenError::Invalid("sigma fractions must be nonnegative".into()));
        }
        if !(self.max_loss_multiplier > 1.0) {
            return Err(GenError::Invalid("max_loss_multiplier must exceed 1".into()));
        }
        Ok(())
    }
}

/// Generate a year event table: per trial, uniform event ids, sorted
/// timestamps and an independent uniform draw per occurrence.
pub fn generate_yet(spec: &GenSpec) -> Result<YearEventTable, GenError> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed ^ 0x59455f54); // stream tag "YET"
    let trials = (0..spec.num_trials)
        .map(|_| {
            let n =
                rng.range_u64(spec.events_per_trial.0 as u64, spec.events_per_trial.1 as u64)
                    as usize;
            let mut occurrences: Vec<EventOccurrence> = (0..n)
                .map(|_| EventOccurrence {
                    event_id: rng.below(spec.catalogue_size as u64) as u32,
                    timestamp: rng.range_f64(0.0, 1.0),
                    z_prog_e: rng.uniform(),
                })
                .collect();
            occurrences.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
            Trial { occurrences }
        })
        .collect();
    Ok(YearEventTable { trials, catalogue_size: spec.catalogue_size })
}

/// Generate sparse record lists, one per XELT, with distinct event ids.
pub fn generate_xelts(spec: &GenSpec) -> Result<Vec<Vec<XeltRecord>>, GenError> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed ^ 0x58454c54); // stream tag "XELT"
    let mut xelts = Vec::with_capacity(spec.num_xelts);
    for _ in 0..spec.num_xelts {
        let n = rng.range_u64(spec.records_per_xelt.0 as u64, spec.records_per_xelt.1 as u64)
            as usize;
        let mut seen = std::collections::HashSet::with_capacity(n);
        let mut records = Vec::with_capacity(n);
        while records.len() < n {
            let event_id = rng.below(spec.catalogue_size as u64) as u32;
            if !seen.insert(event_id) {
                continue;
            }
            let mean_loss = rng.range_f64(spec.mean_loss_range.0, spec.mean_loss_range.1);
            records.push(XeltRecord {
                event_id,
                mean_loss,
                z_e: rng.uniform(),
                sigma_i: spec.sigma_i_fraction * mean_loss,
                sigma_c: spec.sigma_c_fraction * mean_loss,
                max_loss: spec.max_loss_multiplier * mean_loss,
            });
        }
        records.sort_by_key(|r| r.event_id);
        xelts.push(records);
    }
    Ok(xelts)
}

/// Generate a one-program portfolio whose single layer covers every XELT,
/// with terms drawn relative to the expected per-trial layer loss.
pub fn generate_portfolio(spec: &GenSpec) -> Result<Portfolio, GenError> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed ^ 0x504f5254); // stream tag "PORT"
    let mean_events =
        0.5 * (spec.events_per_trial.0 + spec.events_per_trial.1) as f64;
    let mean_records =
        0.5 * (spec.records_per_xelt.0 + spec.records_per_xelt.1) as f64;
    let hit_rate = mean_records / spec.catalogue_size as f64;
    let mean_loss = 0.5 * (spec.mean_loss_range.0 + spec.mean_loss_range.1);
    let expected_event_loss = spec.num_xelts as f64 * hit_rate * mean_loss;
    let expected_trial_loss = mean_events * expected_event_loss;

    let terms = LayerTerms {
        occ_retention: rng.range_f64(0.0, 0.25 * expected_event_loss.max(1.0)),
        occ_limit: rng.range_f64(2.0, 10.0) * expected_event_loss.max(1.0),
        agg_retention: rng.range_f64(0.0, 0.1 * expected_trial_loss.max(1.0)),
        agg_limit: rng.range_f64(1.0, 4.0) * expected_trial_loss.max(1.0),
    };
    let layer = Layer {
        xelt_ids: (0..spec.num_xelts).collect(),
        xelt_terms: vec![XeltTerms::identity(); spec.num_xelts],
        terms,
    };
    Ok(Portfolio { programs: vec![Program { layers: vec![layer] }] })
}
