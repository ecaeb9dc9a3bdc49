//! Cascaded RIS channel statistics and the best-port gain distribution.
//!
//! With ideal RIS phases the amplitude seen at port `n` is
//! `A_n = sum_m h~_m |h_{m,n}|`, a sum of `M` products of independent
//! unit-power Rayleigh amplitudes. By the central limit theorem `A_n` is close
//! to `N(mu_A, sigma2_A)` with `mu_A = M pi / 4` and
//! `sigma2_A = M (1 - pi^2 / 16)`, so `A_n^2` is a scaled non-central
//! chi-square variable with one degree of freedom and `|h_n|^2 = A_n^2 / d~`.
//!
//! The ports are coupled through a Gaussian copula whose parameter is the
//! spatial correlation matrix, giving
//! `F_max(r) = Phi_R(z(r), ..., z(r))` with `z(r) = Phi^{-1}(F_{A^2}(r d~))`.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;

use crate::copula::{diagonal_cdf_at_score, mvn_cdf, Estimate, RqmcOptions};
use crate::error::{domain, Error, Result};
use crate::geometry::{PortGrid, SpatialCorrelation};
use crate::special::{gaussian_quantile, gaussian_quantile_ln, NoncentralChiSq1};
use crate::units::{db_to_linear, db_to_ln};

/// Largest `u` handed to the normal quantile, `1 - 2^-53`.
const MAX_MARGINAL: f64 = 1.0 - f64::EPSILON / 2.0;

/// Skewness of `A` above which the Gaussian approximation is flagged.
pub const CLT_SKEWNESS_LIMIT: f64 = 0.25;

/// Physical parameters of the link.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit power `P` in dBm.
    pub tx_power_dbm: f64,
    /// Noise power in dBm.
    pub noise_dbm: f64,
    pub pathloss_exp: f64,
    pub d_bs_ris_m: f64,
    pub d_ris_mu_m: f64,
    /// Number of RIS elements `M`.
    pub ris_elements: usize,
    pub grid: PortGrid,
    /// SNR threshold `gamma_th` in dB.
    pub snr_threshold_db: f64,
    /// Delay threshold `T_th` in seconds.
    pub delay_threshold_s: f64,
    /// Payload `R` in bits.
    pub data_bits: f64,
    pub bandwidth_hz: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 15.0,
            noise_dbm: -120.0,
            pathloss_exp: 2.5,
            d_bs_ris_m: 2000.0,
            d_ris_mu_m: 2000.0,
            ris_elements: 125,
            grid: PortGrid::new(5, 5, 1.0, 1.0).expect("valid default grid"),
            snr_threshold_db: 0.0,
            delay_threshold_s: 3e-3,
            data_bits: 3000.0,
            bandwidth_hz: 2e6,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_dbm", self.noise_dbm),
            ("snr_threshold_db", self.snr_threshold_db),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{key} = {v} must be finite")));
            }
        }
        if !(self.pathloss_exp.is_finite() && self.pathloss_exp > 2.0) {
            return Err(Error::InvalidConfig(format!(
                "pathloss_exp = {} must exceed 2",
                self.pathloss_exp
            )));
        }
        let positive = [
            ("d_bs_ris_m", self.d_bs_ris_m),
            ("d_ris_mu_m", self.d_ris_mu_m),
            ("delay_threshold_s", self.delay_threshold_s),
            ("data_bits", self.data_bits),
            ("bandwidth_hz", self.bandwidth_hz),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{key} = {v} must be positive")));
            }
        }
        if self.ris_elements == 0 {
            return Err(Error::InvalidConfig("ris_elements must be at least 1".into()));
        }
        Ok(())
    }

    /// Same link with a single fixed antenna.
    pub fn tas(&self) -> Self {
        Self {
            grid: PortGrid::single(),
            ..self.clone()
        }
    }

    pub fn ports(&self) -> usize {
        self.grid.ports()
    }

    /// `gamma_bar = P / sigma^2` in dB.
    pub fn mean_snr_db(&self) -> f64 {
        self.tx_power_dbm - self.noise_dbm
    }

    pub fn ln_mean_snr(&self) -> f64 {
        db_to_ln(self.mean_snr_db())
    }

    pub fn mean_snr(&self) -> f64 {
        db_to_linear(self.mean_snr_db())
    }

    /// `ln d~ = alpha (ln d_BS-RIS + ln d_RIS-MU)`.
    pub fn ln_d_tilde(&self) -> f64 {
        self.pathloss_exp * (self.d_bs_ris_m.ln() + self.d_ris_mu_m.ln())
    }

    pub fn d_tilde(&self) -> f64 {
        self.d_bs_ris_m.powf(self.pathloss_exp) * self.d_ris_mu_m.powf(self.pathloss_exp)
    }

    pub fn snr_threshold_linear(&self) -> f64 {
        db_to_linear(self.snr_threshold_db)
    }

    /// `2^(R / (B T_th)) - 1`, the SNR below which delivery misses the deadline.
    pub fn effective_snr_threshold(&self) -> f64 {
        (self.data_bits * LN_2 / (self.bandwidth_hz * self.delay_threshold_s)).exp_m1()
    }

    /// Normalized gain `r = gamma / gamma_bar` at which an SNR threshold binds.
    pub fn gain_at_snr(&self, snr_linear: f64) -> f64 {
        if snr_linear == 0.0 {
            return 0.0;
        }
        (snr_linear.ln() - self.ln_mean_snr()).exp()
    }
}

/// Gaussian approximation of the cascade amplitude plus the path-loss factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeGainDistribution {
    pub mu_a: f64,
    pub sigma2_a: f64,
    /// Non-centrality `mu_A^2`.
    pub tau: f64,
    pub d_tilde: f64,
    pub ris_elements: usize,
}

pub fn clt_params(config: &SystemConfig) -> CascadeGainDistribution {
    CascadeGainDistribution::new(config.ris_elements, config.d_tilde())
}

impl CascadeGainDistribution {
    pub fn new(ris_elements: usize, d_tilde: f64) -> Self {
        let m = ris_elements as f64;
        let mu_a = m * PI / 4.0;
        Self {
            mu_a,
            sigma2_a: m * (1.0 - PI * PI / 16.0),
            tau: mu_a * mu_a,
            d_tilde,
            ris_elements,
        }
    }

    /// Law of `A^2`.
    pub fn amplitude_squared(&self) -> NoncentralChiSq1 {
        NoncentralChiSq1::new(self.tau, self.sigma2_a).expect("CLT parameters are valid")
    }

    /// Exact skewness of `A` for Rayleigh-times-Rayleigh summands:
    /// `kappa_3 / (sigma^3 sqrt(M))`.
    pub fn cascade_skewness(&self) -> f64 {
        let k3 = 9.0 * PI / 16.0 - 3.0 * PI / 4.0 + 2.0 * (PI / 4.0).powi(3);
        let s2 = 1.0 - PI * PI / 16.0;
        k3 / (s2.powf(1.5) * (self.ris_elements as f64).sqrt())
    }

    /// True when `M` is large enough for the Gaussian cascade model.
    pub fn clt_reliable(&self) -> bool {
        self.cascade_skewness() <= CLT_SKEWNESS_LIMIT
    }

    fn check_r(r: f64) -> Result<()> {
        if r.is_nan() || r < 0.0 {
            return Err(domain("r", r, "gain r >= 0 required"));
        }
        Ok(())
    }

    /// `P(|h_n|^2 <= r) = F_{A^2}(r d~)`.
    pub fn marginal_gain_cdf(&self, r: f64) -> Result<f64> {
        Self::check_r(r)?;
        self.amplitude_squared().cdf(r * self.d_tilde)
    }

    pub fn ln_marginal_gain_cdf(&self, r: f64) -> Result<f64> {
        Self::check_r(r)?;
        self.amplitude_squared().ln_cdf(r * self.d_tilde)
    }

    /// `d~ f_{A^2}(r d~)`.
    pub fn marginal_gain_pdf(&self, r: f64) -> Result<f64> {
        Ok(self.ln_marginal_gain_pdf(r)?.exp())
    }

    pub fn ln_marginal_gain_pdf(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r <= 0.0 {
            return Err(domain("r", r, "gain r > 0 required"));
        }
        Ok(self.d_tilde.ln() + self.amplitude_squared().ln_pdf(r * self.d_tilde)?)
    }

    /// Common normal score `Phi^{-1}(F_{A^2}(r d~))`.
    ///
    /// The lower half goes through `ln F`, the upper half through the survival
    /// function, clamped so that `u <= 1 - 2^-53`.
    pub fn normal_score(&self, r: f64) -> Result<f64> {
        Self::check_r(r)?;
        let law = self.amplitude_squared();
        let x = r * self.d_tilde;
        let ln_f = law.ln_cdf(x)?;
        if ln_f <= -LN_2 {
            return Ok(gaussian_quantile_ln(ln_f));
        }
        let sf = law.sf(x)?.max(1.0 - MAX_MARGINAL);
        Ok(-gaussian_quantile(sf))
    }
}

fn check_dims(config: &SystemConfig, corr: &SpatialCorrelation) -> Result<()> {
    if corr.dim() != config.ports() {
        return Err(Error::DimensionMismatch {
            expected: config.ports(),
            found: corr.dim(),
        });
    }
    Ok(())
}

/// CDF of the best-port gain `h^2_FAS = max_n |h_n|^2` at `r`.
pub fn fas_gain_cdf(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    r: f64,
    options: &RqmcOptions,
) -> Result<Estimate> {
    check_dims(config, corr)?;
    let dist = clt_params(config);
    if r == 0.0 {
        CascadeGainDistribution::check_r(r)?;
        return Ok(Estimate::zero());
    }
    // Every margin is exactly 1 and drops out.
    if r == f64::INFINITY {
        return Ok(Estimate::exact(1.0));
    }
    if corr.dim() == 1 {
        return Ok(Estimate {
            value: dist.marginal_gain_cdf(r)?,
            ..Estimate::exact_ln(dist.ln_marginal_gain_cdf(r)?)
        });
    }
    diagonal_cdf_at_score(corr, dist.normal_score(r)?, options)
}

/// Density of the best-port gain, the exact derivative of [`fas_gain_cdf`].
///
/// Differentiating `Phi_R(z, ..., z)` along the diagonal gives
/// `f(r) = d~ f_{A^2}(r d~) sum_i P(X_j <= z, j != i | X_i = z)`: the marginal
/// density times the sum of conditional `(N-1)`-variate orthant
/// probabilities. The `phi(z)` of each partial derivative cancels against
/// `dz/dr`.
pub fn fas_gain_pdf(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    r: f64,
    options: &RqmcOptions,
) -> Result<Estimate> {
    check_dims(config, corr)?;
    let dist = clt_params(config);
    let ln_marginal = dist.ln_marginal_gain_pdf(r)?;
    let n = corr.dim();
    if n == 1 {
        return Ok(Estimate::exact_ln(ln_marginal));
    }
    let z = dist.normal_score(r)?;
    let rho = corr.matrix();
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let cov = DMatrix::from_fn(n - 1, n - 1, |a, b| {
            let (j, k) = (others[a], others[b]);
            rho[(j, k)] - rho[(j, i)] * rho[(k, i)]
        });
        let upper: Vec<f64> = others.iter().map(|&j| z * (1.0 - rho[(j, i)])).collect();
        terms.push(mvn_cdf(&cov, &upper, options)?);
    }
    let ln_sum = ln_sum_exp(terms.iter().map(|t| t.ln_value));
    if ln_sum == f64::NEG_INFINITY {
        return Ok(Estimate::zero());
    }
    // Terms share lattice shifts, so their errors are added, not pooled.
    let ln_se_sum = ln_sum_exp(terms.iter().map(|t| t.ln_std_error));
    Ok(Estimate::from_ln(ln_marginal + ln_sum, ln_marginal + ln_se_sum))
}

fn ln_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log of the copula-form joint density of `(|h_1|^2, ..., |h_N|^2)` at the
/// diagonal point `(r, ..., r)`: `N` marginal log-densities plus the copula
/// log-density at the common score.
///
/// This is the density of the port vector, not of the maximum; see
/// [`fas_gain_pdf`] for the latter.
pub fn ln_port_joint_density_diagonal(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    r: f64,
) -> Result<f64> {
    check_dims(config, corr)?;
    let dist = clt_params(config);
    let ln_marginal = dist.ln_marginal_gain_pdf(r)?;
    let z = dist.normal_score(r)?;
    let ln_c = crate::copula::ln_density_at_scores(corr, &vec![z; corr.dim()])?;
    Ok(corr.dim() as f64 * ln_marginal + ln_c)
}
