//! Risk measures over a year loss table: the empirical exceedance curve,
//! PML at return periods, VaR and TVaR.
//!
//! Conventions (documented constants, swappable): plotting position
//! p_i = i/(N+1) for the exceedance curve, and the upper order statistic
//! at the quantile boundary for VaR.

use crate::engine::YearLossTable;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("year loss table is empty")]
    EmptyTable,
    #[error("return period must exceed 1, got {0}")]
    BadReturnPeriod(f64),
    #[error("tail level must lie strictly inside (0,1), got {0}")]
    BadLevel(f64),
}

/// Losses sorted descending with exceedance probability i/(N+1) at rank i.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceCurve {
    /// Nonincreasing loss values, rank 1 first.
    pub losses: Vec<f64>,
}

impl ExceedanceCurve {
    /// Exceedance probability of 1-based rank i.
    pub fn probability(&self, rank: usize) -> f64 {
        rank as f64 / (self.losses.len() as f64 + 1.0)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.losses.iter().enumerate().map(|(i, &l)| (self.probability(i + 1), l))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskMeasures {
    pub pml_by_return_period: Vec<(f64, f64)>,
    pub var: f64,
    pub tvar: f64,
    pub level: f64,
}

/// Empirical exceedance-probability curve of a year loss table.
pub fn exceedance_curve(ylt: &YearLossTable) -> Result<ExceedanceCurve, MeasureError> {
    if ylt.losses.is_empty() {
        return Err(MeasureError::EmptyTable);
    }
    let mut losses = ylt.loss_values();
    losses.sort_by(|a, b| b.total_cmp(a));
    Ok(ExceedanceCurve { losses })
}

/// Loss at exceedance probability 1/return_period, linearly interpolated
/// between ranks and clamped to the curve endpoints.
pub fn pml(curve: &ExceedanceCurve, return_period: f64) -> Result<f64, MeasureError> {
    if !(return_period > 1.0) {
        return Err(MeasureError::BadReturnPeriod(return_period));
    }
    let n = curve.losses.len() as f64;
    let p = 1.0 / return_period;
    // fractional rank with p_i = i/(N+1)
    let r = p * (n + 1.0);
    if r <= 1.0 {
        return Ok(curve.losses[0]);
    }
    if r >= n {
        return Ok(*curve.losses.last().unwrap());
    }
    let lo = r.floor() as usize;
    let frac = r - lo as f64;
    let a = curve.losses[lo - 1];
    let b = curve.losses[lo];
    Ok(a + frac * (b - a))
}

/// VaR at level q: the upper empirical quantile of the loss vector.
pub fn var(ylt: &YearLossTable, level: f64) -> Result<f64, MeasureError> {
    if ylt.losses.is_empty() {
        return Err(MeasureError::EmptyTable);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(MeasureError::BadLevel(level));
    }
    let mut losses = ylt.loss_values();
    losses.sort_by(f64::total_cmp);
    let n = losses.len();
    let idx = ((level * n as f64).floor() as usize).min(n - 1);
    Ok(losses[idx])
}

/// TVaR at level q: the mean of all losses at or above VaR_q.
pub fn tvar(ylt: &YearLossTable, level: f64) -> Result<RiskMeasures, MeasureError> {
    let v = var(ylt, level)?;
    let tail: Vec<f64> = ylt.losses.iter().map(|t| t.loss).filter(|&l| l >= v).collect();
    let t = tail.iter().sum::<f64>() / tail.len() as f64;
    Ok(RiskMeasures { pml_by_return_period: Vec::new(), var: v, tvar: t, level })
}

/// PML at each requested return period plus VaR/TVaR at one level.
pub fn risk_measures(
    ylt: &YearLossTable,
    return_periods: &[f64],
    level: f64,
) -> Result<RiskMeasures, MeasureError> {
    let curve = exceedance_curve(ylt)?;
    let mut measures = tvar(ylt, level)?;
    measures.pml_by_return_period = return_periods
        .iter()
        .map(|&rp| pml(&curve, rp).map(|l| (rp, l)))
        .collect::<Result<_, _>>()?;
    Ok(measures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::TrialLoss;

    fn ylt(values: &[f64]) -> YearLossTable {
        YearLossTable {
            losses: values
                .iter()
                .enumerate()
                .map(|(i, &loss)| TrialLoss { trial_id: i as u64, loss })
                .collect(),
        }
    }

    #[test]
    fn curve_rank_arithmetic() {
        let curve = exceedance_curve(&ylt(&[5.0, 1.0, 3.0])).unwrap();
        assert_eq!(curve.losses, vec![5.0, 3.0, 1.0]);
        let pts: Vec<(f64, f64)> = curve.points().collect();
        assert_eq!(pts, vec![(0.25, 5.0), (0.5, 3.0), (0.75, 1.0)]);
    }

    #[test]
    fn curve_of_zeros() {
        let curve = exceedance_curve(&ylt(&[0.0; 5])).unwrap();
        assert!(curve.losses.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn curve_rejects_empty() {
        assert_eq!(exceedance_curve(&ylt(&[])), Err(MeasureError::EmptyTable));
    }

    #[test]
    fn pml_endpoint_is_max_loss() {
        // N=100, rp=101: 1/rp lands exactly on rank 1
        let values: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let curve = exceedance_curve(&ylt(&values)).unwrap();
        assert_eq!(pml(&curve, 101.0).unwrap(), 100.0);
    }

    #[test]
    fn pml_exact_rank_and_midpoint() {
        // 5 losses, p_i = i/6
        let curve = exceedance_curve(&ylt(&[50.0, 40.0, 30.0, 20.0, 10.0])).unwrap();
        // 1/rp = 2/6 → rank 2 exactly
        assert_eq!(pml(&curve, 3.0).unwrap(), 40.0);
        // 1/rp = 2.5/6, midway between ranks 2 and 3 → midpoint of 40 and 30
        assert_eq!(pml(&curve, 6.0 / 2.5).unwrap(), 35.0);
        assert_eq!(pml(&curve, 0.5).unwrap_err(), MeasureError::BadReturnPeriod(0.5));
    }

    #[test]
    fn pml_monotone_in_return_period() {
        let values: Vec<f64> = (0..500).map(|i| (i * i) as f64 * 0.01).collect();
        let curve = exceedance_curve(&ylt(&values)).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let rp = 1.0 + i as f64 * 10.0;
            let v = pml(&curve, rp).unwrap();
            assert!(v >= prev, "rp={rp}");
            prev = v;
        }
    }

    #[test]
    fn tvar_upper_quantile_convention() {
        let m = tvar(&ylt(&[0.0, 0.0, 0.0, 10.0]), 0.75).unwrap();
        assert_eq!(m.var, 10.0);
        assert_eq!(m.tvar, 10.0);
    }

    #[test]
    fn constant_table_gives_constant_measures() {
        for &q in &[0.1, 0.5, 0.9, 0.99] {
            let m = tvar(&ylt(&[7.5; 64]), q).unwrap();
            assert_eq!(m.var, 7.5);
            assert_eq!(m.tvar, 7.5);
        }
    }

    #[test]
    fn tvar_dominates_var_and_is_monotone_in_level() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..20 {
            let q = i as f64 / 20.0;
            let m = tvar(&ylt(&values), q).unwrap();
            assert!(m.tvar >= m.var, "q={q}");
            assert!(m.tvar >= prev, "q={q}");
            prev = m.tvar;
        }
    }

    #[test]
    fn measures_scale_equivariant_and_permutation_invariant() {
        let values: Vec<f64> = (0..200).map(|i| ((i * 31) % 97) as f64).collect();
        let mut shuffled = values.clone();
        shuffled.reverse();
        shuffled.swap(3, 150);
        let base = risk_measures(&ylt(&values), &[10.0, 50.0], 0.9).unwrap();
        let perm = risk_measures(&ylt(&shuffled), &[10.0, 50.0], 0.9).unwrap();
        assert_eq!(base, perm);
        let scaled: Vec<f64> = values.iter().map(|v| v * 4.0).collect();
        let s = risk_measures(&ylt(&scaled), &[10.0, 50.0], 0.9).unwrap();
        assert_eq!(s.var, base.var * 4.0);
        assert_eq!(s.tvar, base.tvar * 4.0);
        for (a, b) in s.pml_by_return_period.iter().zip(&base.pml_by_return_period) {
            assert_eq!(a.1, b.1 * 4.0);
        }
    }
}
