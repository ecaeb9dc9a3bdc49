//! Link-level Monte Carlo simulator for the RIS-aided fluid-antenna link.
//!
//! Each trial draws, for every RIS element `m`, a unit-power Rayleigh
//! BS-RIS amplitude `h~_m` (shared by all ports) and a circularly-symmetric
//! complex Gaussian RIS-MU field across the ports with covariance `R`. Ideal
//! phases align every product, so port `n` sees `A_n = sum_m h~_m |h_{m,n}|`
//! and the selected gain is `max_n A_n^2 / d~`. Signal and noise enter only
//! through `gamma_bar = P / sigma^2`.
//!
//! Trials are split into blocks of `batch`; block `b` draws from its own
//! ChaCha8 stream, so counts are reproducible for a fixed seed and batch size
//! whatever the execution order.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::SpatialCorrelation;
use crate::metrics::delivery_time;

pub const MIN_TRIALS: u64 = 1000;

/// Eigen-directions below this fraction of the largest are not sampled.
pub const FACTOR_CUTOFF: f64 = 1e-12;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McRun {
    pub trials: u64,
    pub seed: u64,
    /// Trials per block.
    pub batch: u64,
}

impl McRun {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            batch: 1 << 16,
        }
    }

    pub fn with_batch(self, batch: u64) -> Self {
        Self { batch, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::InvalidConfig(format!(
                "mc_trials = {} is below the minimum of {MIN_TRIALS}",
                self.trials
            )));
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("mc_batch must be at least 1".into()));
        }
        Ok(())
    }

    fn blocks(&self) -> u64 {
        self.trials.div_ceil(self.batch)
    }

    fn block_len(&self, b: u64) -> u64 {
        self.batch.min(self.trials - b * self.batch)
    }
}

/// Empirical probability with a Wilson-score 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub hits: u64,
    pub trials: u64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// False when fewer than 100 events were seen.
    pub resolved: bool,
}

impl McEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, trials, Z95);
        Self {
            hits,
            trials,
            value: hits as f64 / trials as f64,
            ci_low,
            ci_high,
            resolved: hits >= 100,
        }
    }

    /// Binomial standard error at the point estimate.
    pub fn std_error(&self) -> f64 {
        (self.value * (1.0 - self.value) / self.trials as f64).sqrt()
    }

    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Wilson score interval for `hits` successes in `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo.min(p), hi.max(p))
}

/// Draws complex port fields with covariance `R` from a PSD square root.
#[derive(Debug, Clone)]
pub struct PortFieldSampler {
    ports: usize,
    rank: usize,
    /// Row-major `ports x rank`, pre-scaled by `1/sqrt(2)` per quadrature.
    factor: Vec<f64>,
}

impl PortFieldSampler {
    pub fn new(corr: &SpatialCorrelation) -> Self {
        let f = corr.psd_factor(FACTOR_CUTOFF);
        let (ports, rank) = f.shape();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let factor = (0..ports)
            .flat_map(|i| (0..rank).map(move |k| (i, k)))
            .map(|(i, k)| f[(i, k)] * s)
            .collect();
        Self {
            ports,
            rank,
            factor,
        }
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// One complex field: real parts into `re`, imaginary parts into `im`.
    /// `g` is scratch of length `2 * rank`.
    pub fn draw_field<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        re: &mut [f64],
        im: &mut [f64],
        g: &mut [f64],
    ) {
        for v in g.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let (g_re, g_im) = g.split_at(self.rank);
        for i in 0..self.ports {
            let row = &self.factor[i * self.rank..(i + 1) * self.rank];
            let mut a = 0.0;
            let mut b = 0.0;
            for k in 0..self.rank {
                a += row[k] * g_re[k];
                b += row[k] * g_im[k];
            }
            re[i] = a;
            im[i] = b;
        }
    }

    /// Entrywise moduli of one field draw.
    pub fn draw_amplitudes<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut re = vec![0.0; self.ports];
        let mut im = vec![0.0; self.ports];
        let mut g = vec![0.0; 2 * self.rank];
        self.draw_field(rng, &mut re, &mut im, &mut g);
        for ((o, a), b) in out.iter_mut().zip(&re).zip(&im) {
            *o = (a * a + b * b).sqrt();
        }
    }
}

/// Correlated Rayleigh amplitudes `|h_1|, ..., |h_N|` with unit second moment.
pub fn draw_correlated_port_amplitudes<R: Rng + ?Sized>(
    corr: &SpatialCorrelation,
    rng: &mut R,
) -> Vec<f64> {
    let sampler = PortFieldSampler::new(corr);
    let mut out = vec![0.0; sampler.ports()];
    sampler.draw_amplitudes(rng, &mut out);
    out
}

/// Unit-power Rayleigh amplitude `sqrt(-ln U)`.
#[inline]
fn rayleigh<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    (-u.ln()).sqrt()
}

struct TrialState {
    amp: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    g: Vec<f64>,
}

impl TrialState {
    fn new(sampler: &PortFieldSampler) -> Self {
        Self {
            amp: vec![0.0; sampler.ports()],
            re: vec![0.0; sampler.ports()],
            im: vec![0.0; sampler.ports()],
            g: vec![0.0; 2 * sampler.rank()],
        }
    }

    /// Fills `amp` with `A_n = sum_m h~_m |h_{m,n}|`.
    fn draw<R: Rng + ?Sized>(&mut self, sampler: &PortFieldSampler, elements: usize, rng: &mut R) {
        self.amp.fill(0.0);
        for _ in 0..elements {
            let ht = rayleigh(rng);
            sampler.draw_field(rng, &mut self.re, &mut self.im, &mut self.g);
            for ((a, x), y) in self.amp.iter_mut().zip(&self.re).zip(&self.im) {
                *a += ht * (x * x + y * y).sqrt();
            }
        }
    }
}

fn check(config: &SystemConfig, corr: &SpatialCorrelation, run: &McRun) -> Result<()> {
    config.validate()?;
    run.validate()?;
    if corr.dim() != config.ports() {
        return Err(Error::DimensionMismatch {
            expected: config.ports(),
            found: corr.dim(),
        });
    }
    Ok(())
}

fn block_rng(run: &McRun, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    rng.set_stream(block);
    rng
}

/// Runs every trial and folds the per-port amplitudes `A_n` into one
/// accumulator per block; blocks are returned in order.
pub fn simulate_trials<T, I, F>(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    run: &McRun,
    init: I,
    visit: F,
) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, &[f64]) + Sync,
{
    check(config, corr, run)?;
    let sampler = PortFieldSampler::new(corr);
    let elements = config.ris_elements;
    Ok((0..run.blocks())
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(run, b);
            let mut state = TrialState::new(&sampler);
            let mut acc = init();
            for _ in 0..run.block_len(b) {
                state.draw(&sampler, elements, &mut rng);
                visit(&mut acc, &state.amp);
            }
            acc
        })
        .collect())
}

fn max_squared(amp: &[f64]) -> f64 {
    let m = amp.iter().copied().fold(0.0, f64::max);
    m * m
}

/// Fraction of trials with `SNR <= snr_linear`.
pub fn simulate_outage_at_snr(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    snr_linear: f64,
    run: &McRun,
) -> Result<McEstimate> {
    if snr_linear.is_nan() || snr_linear < 0.0 {
        return Err(crate::error::domain("snr_linear", snr_linear, "threshold must be >= 0"));
    }
    // SNR = gamma_bar A^2 / d~ <= gamma  <=>  A^2 <= gamma d~ / gamma_bar
    let limit = if snr_linear == 0.0 {
        0.0
    } else {
        (snr_linear.ln() + config.ln_d_tilde() - config.ln_mean_snr()).exp()
    };
    let counts = simulate_trials(config, corr, run, || 0u64, |hits, amp| {
        if max_squared(amp) <= limit {
            *hits += 1;
        }
    })?;
    Ok(McEstimate::from_counts(counts.iter().sum(), run.trials))
}

pub fn simulate_op(config: &SystemConfig, corr: &SpatialCorrelation, run: &McRun) -> Result<McEstimate> {
    simulate_outage_at_snr(config, corr, config.snr_threshold_linear(), run)
}

pub fn simulate_dor(config: &SystemConfig, corr: &SpatialCorrelation, run: &McRun) -> Result<McEstimate> {
    simulate_outage_at_snr(config, corr, config.effective_snr_threshold(), run)
}

/// Delay outage counted per trial as `delivery_time(SNR) > T_th`.
pub fn simulate_dor_by_delivery_time(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    run: &McRun,
) -> Result<McEstimate> {
    let ln_scale = config.ln_mean_snr() - config.ln_d_tilde();
    let counts = simulate_trials(config, corr, run, || 0u64, |hits, amp| {
        let snr = (ln_scale + max_squared(amp).ln()).exp();
        if delivery_time(config, snr) > config.delay_threshold_s {
            *hits += 1;
        }
    })?;
    Ok(McEstimate::from_counts(counts.iter().sum(), run.trials))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainFormat {
    /// Little-endian IEEE-754 binary64, one value per trial.
    Binary,
    /// One value per line, 17 significant digits.
    Csv,
}

/// Writes the selected-port gain `max_n A_n^2 / d~` of every trial, in trial
/// order. Returns the number of values written.
pub fn dump_gains<W: Write>(
    config: &SystemConfig,
    corr: &SpatialCorrelation,
    run: &McRun,
    format: GainFormat,
    mut out: W,
) -> Result<u64> {
    check(config, corr, run)?;
    let inv_d = (-config.ln_d_tilde()).exp();
    let mut written = 0;
    let io_err = |e: io::Error| Error::Io(e.to_string());
    let sampler = PortFieldSampler::new(corr);
    let mut state = TrialState::new(&sampler);
    for b in 0..run.blocks() {
        let mut rng = block_rng(run, b);
        for _ in 0..run.block_len(b) {
            state.draw(&sampler, config.ris_elements, &mut rng);
            let g = max_squared(&state.amp) * inv_d;
            match format {
                GainFormat::Binary => out.write_all(&g.to_le_bytes()).map_err(io_err)?,
                GainFormat::Csv => writeln!(out, "{g:.16e}").map_err(io_err)?,
            }
            written += 1;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(written)
}
