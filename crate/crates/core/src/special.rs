//! Scalar special functions behind the cascade-gain marginals.
//!
//! Everything the analytical model needs reduces to the standard normal
//! distribution: the order-1/2 Marcum Q function is a sum of two Gaussian
//! tails, `I_{-1/2}` is an elementary function, and the one-degree-of-freedom
//! non-central chi-square law is the law of `(sigma Z + sqrt(tau))^2`.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use crate::error::{domain, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this `Phi` is evaluated through the Mills ratio instead of `erfc`,
/// which underflows near `-38`.
const LOG_TAIL_SWITCH: f64 = -37.0;

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[inline]
pub fn gaussian_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF.
#[inline]
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `Q(x) = 1 - Phi(x)`, accurate for large positive `x`.
#[inline]
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Mills ratio `(1 - Phi(t)) / phi(t)` for `t >= 5` by Laplace's continued fraction.
fn mills_ratio(t: f64) -> f64 {
    debug_assert!(t >= 5.0);
    // Terms needed for full double precision shrink quickly with t.
    let terms = if t >= 20.0 {
        8
    } else if t >= 10.0 {
        16
    } else {
        40
    };
    let mut acc = t;
    for k in (1..=terms).rev() {
        acc = t + k as f64 / acc;
    }
    1.0 / acc
}

/// `ln Phi(x)`, finite for every finite `x`.
pub fn ln_gaussian_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x < LOG_TAIL_SWITCH {
        -0.5 * x * x - LN_SQRT_2PI + mills_ratio(-x).ln()
    } else if x > 0.0 {
        (-gaussian_tail(x)).ln_1p()
    } else {
        gaussian_cdf(x).ln()
    }
}

/// `phi(x) / Phi(x)`, the inverse Mills ratio, stable in the far lower tail.
pub fn gaussian_hazard_lower(x: f64) -> f64 {
    if x < LOG_TAIL_SWITCH {
        1.0 / mills_ratio(-x)
    } else {
        gaussian_pdf(x) / gaussian_cdf(x)
    }
}

// Wichura's AS241 (PPND16) coefficients.
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[inline]
fn horner(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// AS241 for the lower tail given `r = sqrt(-ln p)`; returns a negative quantile.
fn as241_tail(r: f64) -> f64 {
    if r <= 5.0 {
        let s = r - 1.6;
        -horner(&C, s) / horner(&D, s)
    } else {
        let s = r - 5.0;
        -horner(&E, s) / horner(&F, s)
    }
}

/// Standard normal quantile `Phi^{-1}(p)`, equal to `sqrt(2) erfinv(2p - 1)`.
///
/// Returns `-inf`/`+inf` at `p = 0`/`p = 1` and NaN outside `[0, 1]`.
pub fn gaussian_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * horner(&A, r) / horner(&B, r);
    }
    let lower = p < 0.5;
    let tail = if lower { p } else { 1.0 - p };
    let mut x = as241_tail((-tail.ln()).sqrt());
    // One Halley step against the tail probability.
    let err = gaussian_cdf(x) - tail;
    let u = err / gaussian_pdf(x);
    if u.is_finite() {
        x -= u / (1.0 + 0.5 * x * u);
    }
    if lower {
        x
    } else {
        -x
    }
}

/// Quantile from a log-probability; reaches far below `f64::MIN_POSITIVE`.
pub fn gaussian_quantile_ln(ln_p: f64) -> f64 {
    if ln_p.is_nan() || ln_p > 0.0 {
        return f64::NAN;
    }
    if ln_p == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if ln_p > -680.0 {
        return gaussian_quantile(ln_p.exp());
    }
    let l = -2.0 * ln_p;
    let mut x = -(l - l.ln() - (2.0 * PI).ln()).sqrt();
    for _ in 0..8 {
        let step = (ln_gaussian_cdf(x) - ln_p) / gaussian_hazard_lower(x);
        x -= step;
        if step.abs() <= 1e-15 * x.abs() {
            break;
        }
    }
    x
}

/// Inverse error function on `(-1, 1)`.
pub fn inverse_erf(y: f64) -> Result<f64> {
    if y.is_nan() || y.abs() >= 1.0 {
        return Err(domain("y", y, "|y| < 1 required"));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let sign = y.signum();
    let y = y.abs();
    // erfinv(y) = -Phi^{-1}((1 - y)/2) / sqrt(2); the complement is exact near 1.
    let c = 1.0 - y;
    let mut x = -gaussian_quantile(0.5 * c) * FRAC_1_SQRT_2;
    let two_over_sqrt_pi = 2.0 / PI.sqrt();
    for _ in 0..2 {
        let resid = if y > 0.5 { c - erfc(x) } else { erf(x) - y };
        let deriv = two_over_sqrt_pi * (-x * x).exp();
        if deriv == 0.0 {
            break;
        }
        // d erfc/dx = -deriv, so both branches share the sign convention below.
        let step = resid / deriv;
        x -= step / (1.0 + x * step);
    }
    Ok(sign * x)
}

/// Marcum Q function of order 1/2.
///
/// Uses the exact identity `Q_{1/2}(a, b) = Q(b - a) + Q(b + a)` with `Q` the
/// standard normal upper tail.
pub fn marcum_q_half(a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || a < 0.0 {
        return Err(domain("a", a, "a >= 0 required"));
    }
    if b.is_nan() || b < 0.0 {
        return Err(domain("b", b, "b >= 0 required"));
    }
    Ok((gaussian_tail(b - a) + gaussian_tail(b + a)).min(1.0))
}

/// Modified Bessel function `I_{-1/2}(z) = sqrt(2 / (pi z)) cosh(z)`.
///
/// Overflows to `+inf` beyond `z ~ 710`; use [`ln_bessel_i_neg_half`] there.
pub fn bessel_i_neg_half(z: f64) -> Result<f64> {
    if z.is_nan() || z <= 0.0 {
        return Err(domain("z", z, "z > 0 required"));
    }
    if z <= 700.0 {
        Ok((2.0 / (PI * z)).sqrt() * z.cosh())
    } else {
        Ok(ln_bessel_i_neg_half(z)?.exp())
    }
}

/// `ln I_{-1/2}(z)`. The function is positive on `z > 0`, so no sign is carried.
pub fn ln_bessel_i_neg_half(z: f64) -> Result<f64> {
    if z.is_nan() || z <= 0.0 {
        return Err(domain("z", z, "z > 0 required"));
    }
    let ln_cosh = z + (-2.0 * z).exp().ln_1p() - LN_2;
    Ok(0.5 * (2.0 / (PI * z)).ln() + ln_cosh)
}

/// Non-central chi-square law with one degree of freedom, scaled by `sigma2`:
/// the distribution of `(sqrt(sigma2) Z + sqrt(tau))^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChiSq1 {
    tau: f64,
    sigma2: f64,
}

impl NoncentralChiSq1 {
    pub fn new(tau: f64, sigma2: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(domain("tau", tau, "finite tau >= 0 required"));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(domain("sigma2", sigma2, "finite sigma2 > 0 required"));
        }
        Ok(Self { tau, sigma2 })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `(b - a, b + a)` in standard-deviation units.
    fn standardized(&self, x: f64) -> (f64, f64) {
        let a = (self.tau / self.sigma2).sqrt();
        let b = (x / self.sigma2).sqrt();
        (b - a, b + a)
    }

    /// `F(x) = 1 - Q_{1/2}(sqrt(tau/sigma2), sqrt(x/sigma2))`, evaluated as
    /// `Phi(b - a) - Phi(-(b + a))` so that tiny lower-tail values keep their
    /// relative precision.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(domain("x", x, "x >= 0 required"));
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        let (lo, hi) = self.standardized(x);
        Ok((gaussian_cdf(lo) - gaussian_cdf(-hi)).clamp(0.0, 1.0))
    }

    /// `ln F(x)`, finite long after `F(x)` itself underflows.
    pub fn ln_cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(domain("x", x, "x >= 0 required"));
        }
        if x == f64::INFINITY {
            return Ok(0.0);
        }
        let (lo, hi) = self.standardized(x);
        if lo > LOG_TAIL_SWITCH {
            let f = gaussian_cdf(lo) - gaussian_cdf(-hi);
            if f > 1e-300 {
                return Ok(f.min(1.0).ln());
            }
        }
        // ln(Phi(lo) - Phi(-hi)) = ln Phi(lo) + ln(1 - exp(d))
        let d = ln_gaussian_cdf(-hi) - ln_gaussian_cdf(lo);
        let ln_one_minus = if d > -LN_2 {
            (-d.exp_m1()).ln()
        } else {
            (-d.exp()).ln_1p()
        };
        Ok(ln_gaussian_cdf(lo) + ln_one_minus)
    }

    /// Survival function `1 - F(x)`, i.e. the Marcum Q term itself.
    pub fn sf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(domain("x", x, "x >= 0 required"));
        }
        if x == f64::INFINITY {
            return Ok(0.0);
        }
        let (lo, hi) = self.standardized(x);
        Ok((gaussian_tail(lo) + gaussian_tail(hi)).min(1.0))
    }

    /// Log-density. The Bessel form
    /// `(1/2s2)(x/tau)^(-1/4) exp(-(x+tau)/2s2) I_{-1/2}(sqrt(x tau)/s2)` collapses
    /// to `[phi((s-m)/sigma) + phi((s+m)/sigma)] / (2 s sigma)` with
    /// `s = sqrt(x)`, `m = sqrt(tau)`, which also covers `tau = 0`.
    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x <= 0.0 {
            return Err(domain("x", x, "x > 0 required"));
        }
        if x == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let s = x.sqrt();
        let m = self.tau.sqrt();
        let sigma = self.sigma2.sqrt();
        let d = (s - m) / sigma;
        let cross = -2.0 * s * m / self.sigma2;
        Ok(-0.5 * d * d + cross.exp().ln_1p() - LN_SQRT_2PI - (2.0 * s * sigma).ln())
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.ln_pdf(x)?.exp())
    }
}
