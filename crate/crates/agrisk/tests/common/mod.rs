#![allow(dead_code)] // each test binary uses its own subset of helpers

//! Shared test helpers: a deliberately simple reference implementation of
//! the simulation (hash-map lookups, plain sequential loops) and builders
//! for randomized small worlds. The reference follows the same summation
//! order as the engine — XELT position within the layer, then event order
//! — so outputs must agree bit for bit.

use agrisk::engine::{apply_aggregate_terms, apply_occurrence_terms, TrialLoss, YearLossTable};
use agrisk::gen::Rng;
use agrisk::model::{
    Layer, LayerTerms, Portfolio, Program, Trial, XeltRecord, XeltTerms, YearEventTable,
    EventOccurrence,
};
use agrisk::uncertainty::sample_loss;
use std::collections::HashMap;

/// Reference simulation of one layer over the whole YET. Clip-as-you-go
/// aggregate semantics, double precision, XELT terms applied.
pub fn reference_layer_run(
    layer: &Layer,
    yet: &YearEventTable,
    xelts: &[Vec<XeltRecord>],
) -> YearLossTable {
    let maps: Vec<HashMap<u32, &XeltRecord>> = xelts
        .iter()
        .map(|records| records.iter().map(|r| (r.event_id, r)).collect())
        .collect();
    let losses = yet
        .trials
        .iter()
        .enumerate()
        .map(|(trial_id, trial)| {
            let mut year_loss = 0.0_f64;
            for occ in &trial.occurrences {
                let mut event_loss = 0.0_f64;
                for (pos, &xelt_id) in layer.xelt_ids.iter().enumerate() {
                    let Some(rec) = maps[xelt_id].get(&occ.event_id) else { continue };
                    let loss = sample_loss(
                        rec.mean_loss,
                        rec.z_e,
                        rec.sigma_i,
                        rec.sigma_c,
                        rec.max_loss,
                        occ.z_prog_e,
                    )
                    .expect("reference sample failed");
                    event_loss += layer.xelt_terms[pos].apply(loss);
                }
                let occ_net = apply_occurrence_terms(event_loss, &layer.terms);
                year_loss = apply_aggregate_terms(year_loss + occ_net, &layer.terms);
            }
            TrialLoss { trial_id: trial_id as u64, loss: year_loss }
        })
        .collect();
    YearLossTable { losses }
}

/// Reference run over every layer of a portfolio, program-major.
pub fn reference_portfolio_run(
    pf: &Portfolio,
    yet: &YearEventTable,
    xelts: &[Vec<XeltRecord>],
) -> Vec<YearLossTable> {
    pf.layers().map(|layer| reference_layer_run(layer, yet, xelts)).collect()
}

/// Adaptive Simpson quadrature to the requested absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 50)
}

/// Quadrature oracle for the regularized incomplete beta function.
/// Mirrors at x > 1/2 so the upper-endpoint singularity never enters the
/// integration range; substitutes u = t^α when α < 1 so the integrand is
/// bounded at the lower endpoint.
pub fn beta_cdf_oracle(x: f64, alpha: f64, beta: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > 0.5 {
        return 1.0 - beta_cdf_oracle(1.0 - x, beta, alpha);
    }
    let ln_b = agrisk::statfuncs::ln_beta(alpha, beta).unwrap();
    if alpha < 1.0 {
        // ∫ t^(α−1)(1−t)^(β−1) dt = (1/α) ∫ (1−u^(1/α))^(β−1) du, u = t^α
        let upper = x.powf(alpha);
        let f = |u: f64| {
            if u <= 0.0 {
                1.0
            } else {
                ((beta - 1.0) * (-u.powf(1.0 / alpha)).ln_1p()).exp()
            }
        };
        adaptive_simpson(&f, 0.0, upper, 1e-15) / (alpha * ln_b.exp())
    } else {
        let f = |t: f64| {
            if t <= 0.0 {
                if alpha > 1.0 {
                    0.0
                } else {
                    (-ln_b).exp()
                }
            } else {
                ((alpha - 1.0) * t.ln() + (beta - 1.0) * (-t).ln_1p() - ln_b).exp()
            }
        };
        adaptive_simpson(&f, 0.0, x, 5e-15)
    }
}

/// A randomized small world: ≤4 XELTs, ≤3 layers, ≤20 trials of ≤10
/// events, random (sometimes binding) terms.
pub fn random_small_world(
    rng: &mut Rng,
) -> (Portfolio, YearEventTable, Vec<Vec<XeltRecord>>, u32) {
    let catalogue_size = rng.range_u64(5, 40) as u32;
    let num_xelts = rng.range_u64(1, 4) as usize;

    let xelts: Vec<Vec<XeltRecord>> = (0..num_xelts)
        .map(|_| {
            let n = rng.range_u64(1, catalogue_size as u64) as usize;
            let mut seen = std::collections::HashSet::new();
            let mut records = Vec::new();
            while records.len() < n {
                let event_id = rng.below(catalogue_size as u64) as u32;
                if !seen.insert(event_id) {
                    continue;
                }
                let mean_loss = rng.range_f64(1.0, 500.0);
                records.push(XeltRecord {
                    event_id,
                    mean_loss,
                    z_e: rng.uniform(),
                    // occasionally degenerate to exercise the short-circuit
                    sigma_i: if rng.below(4) == 0 { 0.0 } else { rng.range_f64(0.0, 0.6) * mean_loss },
                    sigma_c: if rng.below(4) == 0 { 0.0 } else { rng.range_f64(0.0, 0.4) * mean_loss },
                    max_loss: rng.range_f64(1.5, 6.0) * mean_loss,
                });
            }
            records.sort_by_key(|r| r.event_id);
            records
        })
        .collect();

    let num_layers = rng.range_u64(1, 3) as usize;
    let layers: Vec<Layer> = (0..num_layers)
        .map(|_| {
            let k = rng.range_u64(1, num_xelts as u64) as usize;
            // distinct xelt ids via a partial Fisher-Yates shuffle
            let mut ids: Vec<usize> = (0..num_xelts).collect();
            for i in 0..k {
                let j = i + rng.below((num_xelts - i) as u64) as usize;
                ids.swap(i, j);
            }
            let xelt_ids: Vec<usize> = ids[..k].to_vec();
            let xelt_terms = xelt_ids
                .iter()
                .map(|_| {
                    if rng.below(2) == 0 {
                        XeltTerms::identity()
                    } else {
                        XeltTerms {
                            retention: rng.range_f64(0.0, 50.0),
                            limit: rng.range_f64(100.0, 2000.0),
                            share: rng.range_f64(0.25, 1.0),
                        }
                    }
                })
                .collect();
            Layer {
                xelt_ids,
                xelt_terms,
                terms: LayerTerms {
                    occ_retention: rng.range_f64(0.0, 100.0),
                    occ_limit: rng.range_f64(50.0, 3000.0),
                    agg_retention: rng.range_f64(0.0, 200.0),
                    agg_limit: rng.range_f64(100.0, 8000.0),
                },
            }
        })
        .collect();
    let pf = Portfolio { programs: vec![Program { layers }] };

    let num_trials = rng.range_u64(1, 20) as usize;
    let trials = (0..num_trials)
        .map(|_| {
            let n = rng.range_u64(0, 10) as usize;
            let mut occurrences: Vec<EventOccurrence> = (0..n)
                .map(|_| EventOccurrence {
                    event_id: rng.below(catalogue_size as u64) as u32,
                    timestamp: rng.range_f64(0.0, 1.0),
                    z_prog_e: rng.uniform(),
                })
                .collect();
            occurrences.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
            Trial { occurrences }
        })
        .collect();
    let yet = YearEventTable { trials, catalogue_size };

    (pf, yet, xelts, catalogue_size)
}
