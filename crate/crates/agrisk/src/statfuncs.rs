//! Statistical kernels: normal CDF/quantile, log-beta, regularized
//! incomplete beta and its inverse.
//!
//! These are the hot functions of secondary uncertainty. Everything here is
//! a pure function over `f64`; reduced-precision wrappers live in [`single`].

// Published coefficient tables are transcribed verbatim, digits and all.
#![allow(clippy::excessive_precision)]

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatError {
    #[error("domain error in {what}: got {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("beta quantile did not converge: last iterate {last}, residual {residual}")]
    Convergence { last: f64, residual: f64 },
}

/// A value in the closed unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self, StatError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(StatError::Domain { what: "probability", value });
        }
        Ok(Probability(value))
    }

    /// Clamp into `[lo, 1 - lo]`. Callers that feed quantile functions use
    /// this to keep deviates finite.
    pub fn clamped(value: f64, lo: f64) -> Self {
        Probability(value.max(lo).min(1.0 - lo))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// A standard-normal deviate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormalDeviate(pub f64);

impl NormalDeviate {
    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF, Φ(x) = 0.5 · erfc(−x/√2).
pub fn normal_cdf(x: f64) -> Result<Probability, StatError> {
    if !x.is_finite() {
        return Err(StatError::Domain { what: "normal_cdf argument", value: x });
    }
    let p = 0.5 * erfc(-x / SQRT_2);
    Ok(Probability(p.clamp(0.0, 1.0)))
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal quantile Φ⁻¹(p) for p strictly inside (0, 1).
///
/// Rational approximation (Wichura's PPND16) followed by one Newton
/// refinement against [`normal_cdf`].
pub fn normal_quantile(p: Probability) -> Result<NormalDeviate, StatError> {
    let p = p.get();
    if p <= 0.0 || p >= 1.0 {
        return Err(StatError::Domain { what: "normal_quantile probability", value: p });
    }
    let mut x = ppnd16(p);
    // One Newton step; the residual is tiny so this only polishes the tail.
    let f = 0.5 * erfc(-x / SQRT_2) - p;
    let d = normal_pdf(x);
    if d > 0.0 {
        let step = f / d;
        if step.is_finite() {
            x -= step;
        }
    }
    Ok(NormalDeviate(x))
}

/// ln B(α, β) = ln Γ(α) + ln Γ(β) − ln Γ(α+β).
pub fn ln_beta(alpha: f64, beta: f64) -> Result<f64, StatError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(StatError::Domain { what: "ln_beta alpha", value: alpha });
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(StatError::Domain { what: "ln_beta beta", value: beta });
    }
    Ok(ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta))
}

/// Regularized incomplete beta I_x(α, β) via the Lentz continued fraction,
/// reflected when x is past the distribution mean.
pub fn beta_cdf(x: Probability, alpha: f64, beta: f64) -> Result<Probability, StatError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(StatError::Domain { what: "beta_cdf alpha", value: alpha });
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(StatError::Domain { what: "beta_cdf beta", value: beta });
    }
    let x = x.get();
    if x == 0.0 {
        return Ok(Probability(0.0));
    }
    if x == 1.0 {
        return Ok(Probability(1.0));
    }
    let ln_b = ln_beta(alpha, beta)?;
    let front = (alpha * x.ln() + beta * (-x).ln_1p() - ln_b).exp();
    let p = if x < (alpha + 1.0) / (alpha + beta + 2.0) {
        front * beta_cont_frac(x, alpha, beta) / alpha
    } else {
        1.0 - front * beta_cont_frac(1.0 - x, beta, alpha) / beta
    };
    Ok(Probability(p.clamp(0.0, 1.0)))
}

/// Beta density at x (0 for x outside the open interval).
pub fn beta_pdf(x: f64, alpha: f64, beta: f64, ln_b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    ((alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_b).exp()
}

const BETA_QUANTILE_MAX_ITER: usize = 200;
const BETA_QUANTILE_P_TOL: f64 = 1e-12;
const BETA_QUANTILE_X_TOL: f64 = 1e-14;

/// Inverse of [`beta_cdf`] in x: smallest x with I_x(α, β) = p.
///
/// Newton iteration on the CDF with the analytic density as derivative,
/// safeguarded by a bisection bracket. Converges when the p-residual drops
/// below 1e-12 or the x-step below 1e-14; gives up after 200 iterations.
pub fn beta_quantile(p: Probability, alpha: f64, beta: f64) -> Result<Probability, StatError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(StatError::Domain { what: "beta_quantile alpha", value: alpha });
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(StatError::Domain { what: "beta_quantile beta", value: beta });
    }
    let p = p.get();
    if p == 0.0 {
        return Ok(Probability(0.0));
    }
    if p == 1.0 {
        return Ok(Probability(1.0));
    }

    let ln_b = ln_beta(alpha, beta)?;
    let mut x = beta_quantile_guess(p, alpha, beta, ln_b);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut residual = f64::INFINITY;

    for _ in 0..BETA_QUANTILE_MAX_ITER {
        let f = beta_cdf(Probability(x), alpha, beta)?.get() - p;
        residual = f;
        if f.abs() <= BETA_QUANTILE_P_TOL {
            return Ok(Probability(x));
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = beta_pdf(x, alpha, beta, ln_b);
        let newton = if d > 0.0 { x - f / d } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= BETA_QUANTILE_X_TOL * x.abs().max(1.0) {
            return Ok(Probability(next));
        }
        x = next;
    }
    Err(StatError::Convergence { last: x, residual })
}

/// Initial iterate for the beta quantile (Abramowitz & Stegun 26.5.22 when
/// both shapes exceed 1, otherwise the tail-power split).
fn beta_quantile_guess(p: f64, alpha: f64, beta: f64, ln_b: f64) -> f64 {
    let x = if alpha >= 1.0 && beta >= 1.0 {
        let pp = if p < 0.5 { p } else { 1.0 - p };
        let t = (-2.0 * pp.ln()).sqrt();
        let mut y = t - (2.30753 + 0.27061 * t) / (1.0 + (0.99229 + 0.04481 * t) * t);
        if p < 0.5 {
            y = -y;
        }
        let al = (y * y - 3.0) / 6.0;
        let h = 2.0 / (1.0 / (2.0 * alpha - 1.0) + 1.0 / (2.0 * beta - 1.0));
        let w = y * (al + h).sqrt() / h
            - (1.0 / (2.0 * beta - 1.0) - 1.0 / (2.0 * alpha - 1.0))
                * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
        alpha / (alpha + beta * (2.0 * w).exp())
    } else {
        let lna = (alpha / (alpha + beta)).ln();
        let lnb = (beta / (alpha + beta)).ln();
        let t = (alpha * lna).exp() / alpha;
        let u = (beta * lnb).exp() / beta;
        let w = t + u;
        if p < t / w {
            (alpha * p * w).powf(1.0 / alpha)
        } else {
            1.0 - (beta * (1.0 - p) * w).powf(1.0 / beta)
        }
    };
    let _ = ln_b;
    x.clamp(1e-300, 1.0 - f64::EPSILON / 2.0)
}

/// Lentz evaluation of the continued fraction for the incomplete beta.
fn beta_cont_frac(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=400 {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

// Lanczos (g = 7, n = 9) coefficients.
const LANCZOS: [f64; 8] = [
    676.5203681218851,
    -1259.1392167224028,
    771.3234287776531,
    -176.6150291621406,
    12.507343278686905,
    -0.13857109526572012,
    9.984369578019572e-6,
    1.5056327351493116e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = 0.999_999_999_999_809_93;
    for (i, c) in LANCZOS.iter().enumerate() {
        a += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + a.ln()
}

// ---------------------------------------------------------------------------
// erfc: Cody's rational Chebyshev approximation (three regimes), absolute
// error below 1e-16 in the central range and full relative accuracy in the
// tail.
// ---------------------------------------------------------------------------

const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        // erfc = 1 - erf in the central interval
        let z = y * y;
        let mut xnum = ERF_A[4] * z;
        let mut xden = z;
        for i in 0..3 {
            xnum = (xnum + ERF_A[i]) * z;
            xden = (xden + ERF_B[i]) * z;
        }
        let erf = x * (xnum + ERF_A[3]) / (xden + ERF_B[3]);
        return 1.0 - erf;
    }
    let result = if y <= 4.0 {
        let mut xnum = ERF_C[8] * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + ERF_C[i]) * y;
            xden = (xden + ERF_D[i]) * y;
        }
        scaled_exp(y) * (xnum + ERF_C[7]) / (xden + ERF_D[7])
    } else if y < 26.6 {
        let z = 1.0 / (y * y);
        let mut xnum = ERF_P[5] * z;
        let mut xden = z;
        for i in 0..4 {
            xnum = (xnum + ERF_P[i]) * z;
            xden = (xden + ERF_Q[i]) * z;
        }
        let r = z * (xnum + ERF_P[4]) / (xden + ERF_Q[4]);
        scaled_exp(y) * (FRAC_1_SQRT_PI - r) / y
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// exp(−y²) split so the argument of each exp stays exactly representable.
#[inline]
fn scaled_exp(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

// Wichura's PPND16 rational approximations (AS 241).
fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545_5e3 * r + 2.872_908_573_572_194e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Reduced-precision entry points. Inputs and outputs are `f32`; all
/// internal arithmetic stays in double precision.
pub mod single {
    use super::Probability;

    pub fn normal_cdf(x: f32) -> Result<f32, super::StatError> {
        super::normal_cdf(x as f64).map(|p| p.get() as f32)
    }

    pub fn normal_quantile(p: f32) -> Result<f32, super::StatError> {
        super::normal_quantile(Probability::new(p as f64)?).map(|d| d.get() as f32)
    }

    pub fn beta_cdf(x: f32, alpha: f32, beta: f32) -> Result<f32, super::StatError> {
        super::beta_cdf(Probability::new(x as f64)?, alpha as f64, beta as f64)
            .map(|p| p.get() as f32)
    }

    pub fn beta_quantile(p: f32, alpha: f32, beta: f32) -> Result<f32, super::StatError> {
        super::beta_quantile(Probability::new(p as f64)?, alpha as f64, beta as f64)
            .map(|p| p.get() as f32)
    }
}
