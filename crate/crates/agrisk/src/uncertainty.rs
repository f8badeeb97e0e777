//! Secondary uncertainty: combining the independent and correlated
//! standard deviations into a single uniform draw, parameterizing a beta
//! distribution per record, and sampling the loss.

use crate::model::XeltRecord;
use crate::statfuncs::{self, Probability, StatError};
use thiserror::Error;

/// Incoming uniform draws are clamped into [Z_CLAMP, 1 − Z_CLAMP] before
/// the normal quantile so deviates stay finite.
pub const Z_CLAMP: f64 = 1e-12;

/// The normalized standard deviation is capped at σ_βmax · (1 − EPS_CAP)
/// to keep both beta shape parameters strictly positive.
pub const EPS_CAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UncertaintyError {
    /// Both standard deviations are zero: the loss distribution collapses
    /// to a point mass and callers should short-circuit to the mean.
    #[error("degenerate loss distribution: {reason}")]
    Degenerate { reason: &'static str },
    #[error(
        "secondary uncertainty failed (mu_l={mu_l}, sigma_i={sigma_i}, sigma_c={sigma_c}, \
         max_l={max_loss}, z_prog_e={z_prog_e}, z_e={z_e}): {source}"
    )]
    Stat {
        mu_l: f64,
        sigma_i: f64,
        sigma_c: f64,
        max_loss: f64,
        z_prog_e: f64,
        z_e: f64,
        source: StatError,
    },
}

/// Intermediate quantities of the five-step standard-deviation combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondaryDraw {
    /// Raw combined standard deviation σ = σ_I + σ_C.
    pub sigma: f64,
    pub v_prog_e: f64,
    pub v_e: f64,
    /// Linear combination of the two deviates weighted by σ_I/σ and σ_C/σ.
    pub lc: f64,
    /// Combined normal random variable.
    pub v: f64,
    /// Final uniform draw z = Φ(v).
    pub z: f64,
}

/// The per-record beta parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    /// Normalized standard deviation σ/max_l, after capping.
    pub sigma_b: f64,
    /// Normalized mean μ_l/max_l.
    pub mu_b: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Cap σ_βmax = sqrt(μ_β(1 − μ_β)).
    pub sigma_b_max: f64,
}

/// Steps 1-5: combine the two uniform draws and the two standard
/// deviations into one uniform draw.
///
/// 1. σ = σ_I + σ_C
/// 2. v_* = Φ⁻¹(z_*)
/// 3. LC = v_(Prog,E)·(σ_I/σ) + v_(E)·(σ_C/σ)
/// 4. v = LC / sqrt((σ_I/σ)² + (σ_C/σ)²)
/// 5. z = Φ(v)
pub fn combine_draws(
    z_prog_e: f64,
    z_e: f64,
    sigma_i: f64,
    sigma_c: f64,
) -> Result<SecondaryDraw, UncertaintyError> {
    let sigma = sigma_i + sigma_c;
    if sigma <= 0.0 {
        return Err(UncertaintyError::Degenerate { reason: "sigma_i + sigma_c is zero" });
    }
    let wrap = |source| UncertaintyError::Stat {
        mu_l: f64::NAN,
        sigma_i,
        sigma_c,
        max_loss: f64::NAN,
        z_prog_e,
        z_e,
        source,
    };
    let v_prog_e = statfuncs::normal_quantile(Probability::clamped(z_prog_e, Z_CLAMP))
        .map_err(wrap)?
        .get();
    let v_e =
        statfuncs::normal_quantile(Probability::clamped(z_e, Z_CLAMP)).map_err(wrap)?.get();
    let wi = sigma_i / sigma;
    let wc = sigma_c / sigma;
    let lc = v_prog_e * wi + v_e * wc;
    let v = lc / (wi * wi + wc * wc).sqrt();
    let z = statfuncs::normal_cdf(v).map_err(wrap)?.get();
    Ok(SecondaryDraw { sigma, v_prog_e, v_e, lc, v, z })
}

/// Beta shape parameters from the raw mean, combined standard deviation and
/// maximum loss. The normalized standard deviation is capped just below
/// σ_βmax before the shared factor (σ_βmax/σ_β)² − 1 is formed.
pub fn beta_params(mu_l: f64, sigma: f64, max_l: f64) -> Result<BetaParams, UncertaintyError> {
    if !(max_l > 0.0) {
        return Err(UncertaintyError::Degenerate { reason: "max_l is not positive" });
    }
    if mu_l <= 0.0 {
        return Err(UncertaintyError::Degenerate { reason: "mean loss is zero" });
    }
    if mu_l >= max_l {
        return Err(UncertaintyError::Degenerate { reason: "mean loss at maximum loss" });
    }
    if !(sigma > 0.0) {
        return Err(UncertaintyError::Degenerate { reason: "sigma is zero" });
    }
    let mu_b = mu_l / max_l;
    let sigma_b_max = (mu_b * (1.0 - mu_b)).sqrt();
    let mut sigma_b = sigma / max_l;
    if sigma_b >= sigma_b_max {
        sigma_b = sigma_b_max * (1.0 - EPS_CAP);
    }
    let factor = (sigma_b_max / sigma_b).powi(2) - 1.0;
    Ok(BetaParams {
        sigma_b,
        mu_b,
        alpha: mu_b * factor,
        beta: (1.0 - mu_b) * factor,
        sigma_b_max,
    })
}

/// Sample the loss for one record and one program-event draw:
/// max_l · InvCDF_beta(z; α, β), with degenerate records short-circuited
/// to their distributional limit.
pub fn sample_loss(
    mu_l: f64,
    z_e: f64,
    sigma_i: f64,
    sigma_c: f64,
    max_loss: f64,
    z_prog_e: f64,
) -> Result<f64, UncertaintyError> {
    if sigma_i + sigma_c <= 0.0 {
        return Ok(mu_l.min(max_loss));
    }
    if mu_l <= 0.0 {
        return Ok(0.0);
    }
    if mu_l >= max_loss {
        return Ok(max_loss);
    }
    let draw = combine_draws(z_prog_e, z_e, sigma_i, sigma_c)?;
    let params = beta_params(mu_l, draw.sigma, max_loss)?;
    let q = statfuncs::beta_quantile(
        Probability::clamped(draw.z, 0.0),
        params.alpha,
        params.beta,
    )
    .map_err(|source| UncertaintyError::Stat {
        mu_l,
        sigma_i,
        sigma_c,
        max_loss,
        z_prog_e,
        z_e,
        source,
    })?;
    Ok(max_loss * q.get())
}

/// [`sample_loss`] for one XELT record.
pub fn apply_secondary_uncertainty(
    rec: &XeltRecord,
    z_prog_e: f64,
) -> Result<f64, UncertaintyError> {
    sample_loss(rec.mean_loss, rec.z_e, rec.sigma_i, rec.sigma_c, rec.max_loss, z_prog_e)
}

/// Reduced-precision variant: every pipeline boundary value is rounded
/// through f32; the statistical kernels still accumulate in double.
pub fn sample_loss_single(
    mu_l: f32,
    z_e: f32,
    sigma_i: f32,
    sigma_c: f32,
    max_loss: f32,
    z_prog_e: f32,
) -> Result<f32, UncertaintyError> {
    if sigma_i + sigma_c <= 0.0 {
        return Ok(mu_l.min(max_loss));
    }
    if mu_l <= 0.0 {
        return Ok(0.0);
    }
    if mu_l >= max_loss {
        return Ok(max_loss);
    }
    let wrap = |source| UncertaintyError::Stat {
        mu_l: mu_l as f64,
        sigma_i: sigma_i as f64,
        sigma_c: sigma_c as f64,
        max_loss: max_loss as f64,
        z_prog_e: z_prog_e as f64,
        z_e: z_e as f64,
        source,
    };
    let sigma = sigma_i + sigma_c;
    let clamp32 = |z: f32| (z as f64).clamp(Z_CLAMP, 1.0 - Z_CLAMP) as f32;
    let v_prog_e = statfuncs::single::normal_quantile(clamp32(z_prog_e)).map_err(wrap)?;
    let v_e = statfuncs::single::normal_quantile(clamp32(z_e)).map_err(wrap)?;
    let wi = sigma_i / sigma;
    let wc = sigma_c / sigma;
    let lc = v_prog_e * wi + v_e * wc;
    let v = lc / (wi * wi + wc * wc).sqrt();
    let z = statfuncs::single::normal_cdf(v).map_err(wrap)?;
    let params =
        beta_params(mu_l as f64, sigma as f64, max_loss as f64).map_err(|e| match e {
            UncertaintyError::Degenerate { .. } => e,
            other => other,
        })?;
    let q = statfuncs::single::beta_quantile(
        z.clamp(0.0, 1.0),
        params.alpha as f32,
        params.beta as f32,
    )
    .map_err(wrap)?;
    Ok(max_loss * q)
}
