//! Outage probability, delay outage rate and the fixed-antenna baseline.
//!
//! Both metrics are values of the best-port gain CDF: outage at
//! `r = gamma_th / gamma_bar`, delay outage at the same point with `gamma_th`
//! replaced by `2^(R / (B T_th)) - 1`. They share one code path, so a delay
//! outage rate is bitwise equal to the outage probability evaluated at the
//! effective threshold with the same integration seed.

use std::f64::consts::LN_2;

use crate::channel::{clt_params, fas_gain_cdf, SystemConfig};
use crate::copula::{Estimate, RqmcOptions};
use crate::error::{domain, Result};
use crate::geometry::SpatialCorrelation;
use crate::montecarlo::McEstimate;

/// `P(SNR <= snr_linear)` for the best port.
pub fn outage_at_snr(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    snr_linear: f64,
    options: &RqmcOptions,
) -> Result<Estimate> {
    if snr_linear.is_nan() || snr_linear < 0.0 {
        return Err(domain("snr_linear", snr_linear, "threshold must be >= 0"));
    }
    fas_gain_cdf(config, corr, config.gain_at_snr(snr_linear), options)
}

pub fn outage_probability(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    options: &RqmcOptions,
) -> Result<Estimate> {
    outage_at_snr(config, corr, config.snr_threshold_linear(), options)
}

pub fn delay_outage_rate(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    options: &RqmcOptions,
) -> Result<Estimate> {
    outage_at_snr(config, corr, config.effective_snr_threshold(), options)
}

/// Time to deliver `R` bits at SNR `snr_linear`: `R / (B log2(1 + gamma))`.
///
/// Returns `+inf` when `snr_linear <= 0`.
pub fn delivery_time(config: &SystemConfig, snr_linear: f64) -> f64 {
    if !(snr_linear > 0.0) {
        return f64::INFINITY;
    }
    config.data_bits * LN_2 / (config.bandwidth_hz * snr_linear.ln_1p())
}

/// Single fixed antenna; closed form, no integration error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TasBaseline {
    pub op: f64,
    pub dor: f64,
    pub ln_op: f64,
    pub ln_dor: f64,
    /// False when `M` is too small for the Gaussian cascade model.
    pub clt_reliable: bool,
}

pub fn tas_baseline(config: &SystemConfig) -> Result<TasBaseline> {
    let dist = clt_params(config);
    let r_op = config.gain_at_snr(config.snr_threshold_linear());
    let r_dor = config.gain_at_snr(config.effective_snr_threshold());
    Ok(TasBaseline {
        op: dist.marginal_gain_cdf(r_op)?,
        dor: dist.marginal_gain_cdf(r_dor)?,
        ln_op: dist.ln_marginal_gain_cdf(r_op)?,
        ln_dor: dist.ln_marginal_gain_cdf(r_dor)?,
        clt_reliable: dist.clt_reliable(),
    })
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub series: String,
    pub axis_value: f64,
    pub config: SystemConfig,
    pub op: Option<Estimate>,
    pub dor: Option<Estimate>,
    pub tas: Option<TasBaseline>,
    pub mc_op: Option<McEstimate>,
    pub mc_dor: Option<McEstimate>,
    pub clt_warning: bool,
    /// Failure message when the point could not be evaluated.
    pub error: Option<String>,
}
