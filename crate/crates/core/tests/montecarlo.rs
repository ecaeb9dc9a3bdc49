//! Statistical checks of the link simulator against closed forms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_fas_core::channel::{fas_gain_cdf, CascadeGainDistribution};
use ris_fas_core::geometry::sinc;
use ris_fas_core::metrics::outage_probability;
use ris_fas_core::montecarlo::{
    simulate_dor, simulate_dor_by_delivery_time, simulate_op, simulate_trials, PortFieldSampler,
};
use ris_fas_core::special::{gaussian_cdf, gaussian_pdf};
use ris_fas_core::{McRun, PortGrid, Regularization, RqmcOptions, SpatialCorrelation, SystemConfig};
use statrs::function::gamma::gamma;

fn corr(grid: &PortGrid) -> SpatialCorrelation {
    SpatialCorrelation::build(grid, Regularization::default()).unwrap()
}

/// CDF of `A = sum of M products of two unit-power Rayleigh amplitudes`,
/// second-order Edgeworth expansion. Accurate to a few 1e-5 for M >= 80.
fn edgeworth_cdf(m: usize, a: f64) -> f64 {
    let mom: Vec<f64> = (1..=4).map(|k| gamma(1.0 + k as f64 / 2.0).powi(2)).collect();
    let mu = mom[0];
    let v = mom[1] - mu * mu;
    let k3 = mom[2] - 3.0 * mom[1] * mu + 2.0 * mu.powi(3);
    let k4 = mom[3] - 4.0 * mom[2] * mu - 3.0 * mom[1].powi(2) + 12.0 * mom[1] * mu * mu
        - 6.0 * mu.powi(4);
    let m = m as f64;
    let g1 = k3 / v.powf(1.5) / m.sqrt();
    let g2 = k4 / (v * v) / m;
    let z = (a - m * mu) / (m * v).sqrt();
    let he2 = z * z - 1.0;
    let he3 = z * z * z - 3.0 * z;
    let he5 = z.powi(5) - 10.0 * z.powi(3) + 15.0 * z;
    gaussian_cdf(z) - gaussian_pdf(z) * (g1 / 6.0 * he2 + g2 / 24.0 * he3 + g1 * g1 / 72.0 * he5)
}

/// Per-port `A_n` for every trial, port-major.
fn amplitudes(config: &SystemConfig, trials: u64, seed: u64) -> Vec<Vec<f64>> {
    let n = config.ports();
    let r = corr(&config.grid);
    let blocks = simulate_trials(config, &r, &McRun::new(trials, seed), Vec::new, |acc, amp| {
        acc.extend_from_slice(amp)
    })
    .unwrap();
    let flat: Vec<f64> = blocks.into_iter().flatten().collect();
    (0..n).map(|p| flat.iter().skip(p).step_by(n).copied().collect()).collect()
}

/// Kolmogorov distance between the sample and `cdf`.
fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn dkw_99(n: usize) -> f64 {
    ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt()
}

#[test]
fn unit_power_rayleigh_ports() {
    let r = SpatialCorrelation::from_matrix(
        nalgebra::DMatrix::identity(3, 3),
        Regularization::default(),
    )
    .unwrap();
    let s = PortFieldSampler::new(&r);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    let mut sum = [0.0; 3];
    let mut sq = [0.0; 3];
    let mut amp = [0.0; 3];
    for _ in 0..n {
        s.draw_amplitudes(&mut rng, &mut amp);
        for p in 0..3 {
            let e = amp[p] * amp[p];
            sum[p] += e;
            sq[p] += e * e;
        }
    }
    for p in 0..3 {
        let mean = sum[p] / n as f64;
        let se = ((sq[p] / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "port {p}: {mean} +- {se}");
    }
}

/// Empirical `E[h_i conj(h_j)]` with per-entry standard errors.
fn field_correlation(grid: &PortGrid, draws: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let s = PortFieldSampler::new(&corr(grid));
    let n = s.ports();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut re, mut im, mut g) = (vec![0.0; n], vec![0.0; n], vec![0.0; 2 * s.rank()]);
    let mut sum = vec![0.0; n * n];
    let mut sq = vec![0.0; n * n];
    for _ in 0..draws {
        s.draw_field(&mut rng, &mut re, &mut im, &mut g);
        for i in 0..n {
            for j in 0..n {
                let v = re[i] * re[j] + im[i] * im[j];
                sum[i * n + j] += v;
                sq[i * n + j] += v * v;
            }
        }
    }
    let d = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / d).collect();
    let se = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| ((q / d - m * m) / d).sqrt())
        .collect();
    (mean, se)
}

#[test]
fn quarter_wavelength_pair_has_sinc_half_correlation() {
    let grid = PortGrid::new(2, 1, 0.25, 0.0).unwrap();
    let (mean, se) = field_correlation(&grid, 1_000_000, 3);
    let target = 2.0 / std::f64::consts::PI;
    assert!((sinc(0.5) - target).abs() < 1e-15);
    assert!((mean[1] - target).abs() < 3.0 * se[1], "{} +- {}", mean[1], se[1]);
}

#[test]
fn field_correlation_matrix_matches_sinc() {
    // 36 distinct pairs: 4 standard errors keeps the family-wise rate below 1%.
    let grid = PortGrid::new(3, 3, 1.0, 1.0).unwrap();
    let (mean, se) = field_correlation(&grid, 400_000, 5);
    let reference = grid.correlation_matrix();
    for i in 0..9 {
        for j in 0..9 {
            let e = (mean[i * 9 + j] - reference[(i, j)]).abs();
            assert!(e < 4.0 * se[i * 9 + j], "({i},{j}): {e} vs se {}", se[i * 9 + j]);
        }
    }
}

#[test]
fn cascade_moments_match_clt_constants() {
    let config = SystemConfig {
        ris_elements: 100,
        grid: PortGrid::new(2, 1, 0.5, 0.0).unwrap(),
        ..Default::default()
    };
    let d = CascadeGainDistribution::new(100, config.d_tilde());
    for (p, a) in amplitudes(&config, 1_000_000, 21).into_iter().enumerate() {
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let c2 = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let c4 = a.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let var = c2 * n / (n - 1.0);
        assert!((mean - d.mu_a).abs() < 3.0 * (c2 / n).sqrt(), "port {p}: mean {mean}");
        let var_se = ((c4 - c2 * c2) / n).sqrt();
        assert!((var - d.sigma2_a).abs() < 3.0 * var_se, "port {p}: var {var} +- {var_se}");
    }
}

#[test]
fn per_port_gain_cdf_within_dkw_band() {
    // Against an Edgeworth-corrected law of A the simulator sits inside the
    // 99% band. The plain CLT marginal does not: its skewness error of about
    // 0.01 is six times the band half-width, and is checked to have exactly
    // that size.
    for (m, seed) in [(80usize, 31u64), (125, 32)] {
        let config = SystemConfig {
            ris_elements: m,
            grid: PortGrid::single(),
            ..Default::default()
        };
        let a = amplitudes(&config, 1_000_000, seed).remove(0);
        let eps = dkw_99(a.len());
        let ks_edgeworth = ks_distance(a.clone(), |x| edgeworth_cdf(m, x));
        assert!(ks_edgeworth < eps, "M={m}: {ks_edgeworth} vs band {eps}");

        let d = CascadeGainDistribution::new(m, config.d_tilde());
        let gains: Vec<f64> = a.iter().map(|x| x * x / config.d_tilde()).collect();
        let ks_clt = ks_distance(gains, |r| d.marginal_gain_cdf(r).unwrap());
        // largest first-order term, at the mean
        let skew_term = d.cascade_skewness() / 6.0 * gaussian_pdf(0.0);
        assert!(
            (ks_clt - skew_term).abs() < eps + 1e-3,
            "M={m}: CLT distance {ks_clt}, predicted {skew_term}"
        );
    }
}

fn op_coverage(config: &SystemConfig, reference: f64, runs: u64) -> u64 {
    let r = corr(&config.grid);
    (0..runs)
        .filter(|&k| {
            let e = simulate_op(config, &r, &McRun::new(10_000, 1000 + k)).unwrap();
            e.covers(reference)
        })
        .count() as u64
}

#[test]
fn interval_coverage_at_the_default_link_budget() {
    // The outage here is ~1e-14, so every run sees zero events and the
    // interval covers trivially.
    let config = SystemConfig {
        ris_elements: 100,
        grid: PortGrid::single(),
        ..Default::default()
    };
    let d = CascadeGainDistribution::new(100, config.d_tilde());
    let x = config.snr_threshold_linear() * config.d_tilde() / config.mean_snr();
    let closed = d.amplitude_squared().cdf(x).unwrap();
    assert!(closed < 1e-10);
    assert!(op_coverage(&config, closed, 100) >= 93);
}

#[test]
fn interval_coverage_at_moderate_outage() {
    let config = SystemConfig {
        tx_power_dbm: 8.0,
        ris_elements: 100,
        grid: PortGrid::single(),
        ..Default::default()
    };
    let limit = config.snr_threshold_linear() * config.d_tilde() / config.mean_snr();
    let reference = edgeworth_cdf(100, limit.sqrt());
    assert!(reference > 0.05 && reference < 0.5, "{reference}");
    let covered = op_coverage(&config, reference, 100);
    assert!(covered >= 93, "{covered} of 100");
}

#[test]
fn delivery_time_counting_matches_threshold_counting() {
    for p in [0.0, 2.0] {
        let config = SystemConfig {
            tx_power_dbm: p,
            grid: PortGrid::square(2, 1.0).unwrap(),
            ..Default::default()
        };
        let r = corr(&config.grid);
        let run = McRun::new(50_000, 17);
        let a = simulate_dor(&config, &r, &run).unwrap();
        let b = simulate_dor_by_delivery_time(&config, &r, &run).unwrap();
        assert_eq!(a.hits, b.hits);
        assert!(a.hits > 0);
    }
}

#[test]
fn batch_size_changes_draws_not_statistics() {
    let config = SystemConfig {
        tx_power_dbm: 5.0,
        grid: PortGrid::square(2, 1.0).unwrap(),
        ..Default::default()
    };
    let r = corr(&config.grid);
    let a = simulate_op(&config, &r, &McRun::new(200_000, 4)).unwrap();
    let b = simulate_op(&config, &r, &McRun::new(200_000, 4).with_batch(1000)).unwrap();
    assert_ne!(a.hits, b.hits);
    let pooled = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
    assert!((a.value - b.value).abs() < 4.0 * pooled);
    let c = simulate_op(&config, &r, &McRun::new(200_000, 4).with_batch(1000)).unwrap();
    assert_eq!(b, c);
}

#[test]
fn best_port_delay_outage_never_exceeds_a_fixed_port() {
    // Same trials scored twice: port 1 alone versus the best of 25.
    for p in [15.0, 1.0] {
        let config = SystemConfig {
            tx_power_dbm: p,
            ..Default::default()
        };
        let r = corr(&config.grid);
        let limit = config.effective_snr_threshold() * config.d_tilde() / config.mean_snr();
        let counts = simulate_trials(&config, &r, &McRun::new(20_000, 8), || (0u64, 0u64), |c, amp| {
            if amp[0] * amp[0] <= limit {
                c.0 += 1;
            }
            if amp.iter().all(|a| a * a <= limit) {
                c.1 += 1;
            }
        })
        .unwrap();
        let (tas, fas) = counts.iter().fold((0, 0), |s, c| (s.0 + c.0, s.1 + c.1));
        assert!(fas <= tas, "P={p}: {fas} > {tas}");
        if p == 1.0 {
            assert!(fas < tas && fas > 0);
        }
    }
}

#[test]
fn analytic_op_agrees_with_simulation_at_the_default_link_budget() {
    // 2x2 ports over 1x1 wavelengths, M = 100: both routes put the outage far
    // below simulation resolution.
    let config = SystemConfig {
        ris_elements: 100,
        grid: PortGrid::square(2, 1.0).unwrap(),
        ..Default::default()
    };
    let r = corr(&config.grid);
    let analytic = outage_probability(&config, &r, &RqmcOptions::default()).unwrap();
    let mc = simulate_op(&config, &r, &McRun::new(200_000, 2)).unwrap();
    let mc_se = (mc.ci_high - mc.ci_low) / (2.0 * 1.959_963_984_540_054);
    let pooled = (analytic.std_error.powi(2) + mc_se.powi(2)).sqrt();
    assert!((analytic.value - mc.value).abs() <= 5.0 * pooled);
    let fas_upper = fas_gain_cdf(&config, &r, config.gain_at_snr(1.0), &RqmcOptions::default());
    assert_eq!(fas_upper.unwrap(), analytic);
}
