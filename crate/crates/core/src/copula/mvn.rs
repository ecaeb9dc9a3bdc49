//! Multivariate normal orthant-type CDF `P(X_1 <= b_1, ..., X_n <= b_n)`.
//!
//! Sequential conditioning on a Cholesky factor turns the `n`-dimensional
//! Gaussian integral into an integral over `[0,1]^{n-1}` of a product of
//! univariate conditional probabilities. Variables are reordered so the most
//! restrictive conditional comes first. The unit cube is sampled by a randomly
//! shifted Kronecker lattice; independent shifts give the standard error.
//!
//! Products are tracked in log space. At the link budgets of interest the
//! joint probability of 25 correlated ports can sit far below `1e-300`. In
//! that regime each conditional variable is sampled from a normal shifted
//! towards the minimax saddle point of the log-likelihood ratio
//! (exponential tilting), which keeps the relative error bounded where the
//! untilted integrand is dominated by a vanishing fraction of the cube.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lattice::KroneckerLattice;
use crate::error::{Error, Result};
use crate::special::{
    gaussian_cdf, gaussian_hazard_lower, gaussian_quantile, gaussian_quantile_ln,
    ln_gaussian_cdf,
};

/// Below this the conditional probability is carried as a logarithm.
const LOG_PATH: f64 = -37.0;
const MAX_BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;
/// Tilting is used when the saddle-point bound on `ln P` falls below this.
const TILT_BELOW: f64 = -10.0;

/// Randomized quasi-Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RqmcOptions {
    /// Lattice points per randomization (each also evaluated antithetically).
    pub samples: usize,
    /// Independent random shifts; their spread gives the standard error.
    pub randomizations: usize,
    pub seed: u64,
}

impl Default for RqmcOptions {
    fn default() -> Self {
        Self {
            samples: 8192,
            randomizations: 16,
            seed: 0x5eed,
        }
    }
}

impl RqmcOptions {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 128 {
            return Err(Error::InvalidIntegration(format!(
                "at least 128 samples per randomization required, got {}",
                self.samples
            )));
        }
        if self.randomizations < 8 {
            return Err(Error::InvalidIntegration(format!(
                "at least 8 randomizations required, got {}",
                self.randomizations
            )));
        }
        Ok(())
    }
}

/// A probability (or density) together with its Monte Carlo standard error.
///
/// `ln_value` and `ln_std_error` stay finite when `value` and `std_error`
/// underflow to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub ln_value: f64,
    pub ln_std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self::exact_ln(value.ln())
    }

    pub fn exact_ln(ln_value: f64) -> Self {
        Self::from_ln(ln_value, f64::NEG_INFINITY)
    }

    pub fn from_ln(ln_value: f64, ln_std_error: f64) -> Self {
        Self {
            value: ln_value.exp(),
            std_error: ln_std_error.exp(),
            ln_value,
            ln_std_error,
        }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    pub fn log10(&self) -> f64 {
        self.ln_value / std::f64::consts::LN_10
    }

    /// Standard error relative to the value.
    pub fn relative_error(&self) -> f64 {
        if self.ln_value.is_finite() {
            (self.ln_std_error - self.ln_value).exp()
        } else {
            0.0
        }
    }
}

/// `P(X <= upper)` for `X ~ N(0, covariance)`.
///
/// Infinite upper limits drop out exactly; a `-inf` limit gives 0. Univariate
/// problems are evaluated in closed form with zero standard error.
pub fn mvn_cdf(covariance: &DMatrix<f64>, upper: &[f64], options: &RqmcOptions) -> Result<Estimate> {
    options.validate()?;
    let n = covariance.nrows();
    if covariance.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: covariance.ncols(),
        });
    }
    if upper.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: upper.len(),
        });
    }
    if upper.iter().any(|b| b.is_nan()) {
        return Err(Error::InvalidIntegration("NaN integration limit".into()));
    }
    if upper.contains(&f64::NEG_INFINITY) {
        return Ok(Estimate::zero());
    }
    let active: Vec<usize> = (0..n).filter(|&i| upper[i].is_finite()).collect();
    if active.is_empty() {
        return Ok(Estimate::exact(1.0));
    }

    let m = active.len();
    let mut corr = DMatrix::zeros(m, m);
    let mut limits = vec![0.0; m];
    for (a, &i) in active.iter().enumerate() {
        let sd_i = covariance[(i, i)].sqrt();
        if !(sd_i > 0.0 && sd_i.is_finite()) {
            return Err(Error::NotPositiveDefinite {
                pivot: i,
                value: covariance[(i, i)],
            });
        }
        limits[a] = upper[i] / sd_i;
        for (b, &j) in active.iter().enumerate() {
            corr[(a, b)] = covariance[(i, j)] / (sd_i * covariance[(j, j)].sqrt());
        }
        corr[(a, a)] = 1.0;
    }

    if m == 1 {
        let s = limits[0];
        return Ok(if s > LOG_PATH {
            Estimate::exact(gaussian_cdf(s))
        } else {
            Estimate::exact_ln(ln_gaussian_cdf(s))
        });
    }

    let mut plan = ConditioningPlan::new(corr, limits)?;
    if let Some((shift, bound)) = plan.saddle_point() {
        if bound < TILT_BELOW {
            plan.shift = Some(shift);
        }
    }
    Ok(plan.integrate(options))
}

/// Reordered limits and Cholesky factor for sequential conditioning.
struct ConditioningPlan {
    n: usize,
    /// Row-major lower factor.
    l: Vec<f64>,
    b: Vec<f64>,
    /// Tilting means of the first `n - 1` conditionals (last entry zero).
    shift: Option<Vec<f64>>,
}

impl ConditioningPlan {
    /// Genz-Bretz prioritized Cholesky: at step `i` pick the remaining
    /// variable with the smallest conditional probability given the truncated
    /// means of the variables already placed.
    fn new(mut c: DMatrix<f64>, mut b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        let mut l = DMatrix::<f64>::zeros(n, n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut best = i;
            let mut best_score = f64::INFINITY;
            for j in i..n {
                let mut num = b[j];
                let mut den = c[(j, j)];
                for k in 0..i {
                    num -= l[(j, k)] * y[k];
                    den -= l[(j, k)] * l[(j, k)];
                }
                let score = ln_gaussian_cdf(num / den.max(1e-300).sqrt());
                if score < best_score {
                    best_score = score;
                    best = j;
                }
            }
            if best != i {
                b.swap(i, best);
                c.swap_rows(i, best);
                c.swap_columns(i, best);
                l.swap_rows(i, best);
            }
            let mut d = c[(i, i)];
            for k in 0..i {
                d -= l[(i, k)] * l[(i, k)];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: i, value: d });
            }
            let d = d.sqrt();
            l[(i, i)] = d;
            for j in (i + 1)..n {
                let mut s = c[(j, i)];
                for k in 0..i {
                    s -= l[(j, k)] * l[(i, k)];
                }
                l[(j, i)] = s / d;
            }
            let mut num = b[i];
            for k in 0..i {
                num -= l[(i, k)] * y[k];
            }
            // E[Z | Z < s]
            y[i] = -gaussian_hazard_lower(num / d);
        }
        let l = (0..n)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .map(|(i, k)| l[(i, k)])
            .collect();
        Ok(Self {
            n,
            l,
            b,
            shift: None,
        })
    }

    /// Minimax tilting point: the saddle of
    /// `psi(x, mu) = sum_k mu_k^2 / 2 - x_k mu_k + ln Phi(s_k - c_k(x) - mu_k)`
    /// in unit-diagonal coordinates, found by damped Newton iteration.
    /// Returns the means and `psi` there, an upper bound on `ln P`.
    fn saddle_point(&self) -> Option<(Vec<f64>, f64)> {
        let n = self.n;
        let m = n - 1;
        // Unit-diagonal factor and limits.
        let lt = |k: usize, j: usize| self.l[k * n + j] / self.l[k * n + k];
        let s: Vec<f64> = (0..n).map(|k| self.b[k] / self.l[k * n + k]).collect();

        let eval = |v: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            let (x, mu) = v.split_at(m);
            let mut ut = vec![0.0; n];
            let mut p = vec![0.0; n];
            for k in 0..n {
                let c: f64 = (0..k.min(m)).map(|j| lt(k, j) * x[j]).sum();
                let mu_k = if k < m { mu[k] } else { 0.0 };
                ut[k] = s[k] - c - mu_k;
                p[k] = -gaussian_hazard_lower(ut[k]);
            }
            let mut grad = vec![0.0; 2 * m];
            for j in 0..m {
                let tail: f64 = ((j + 1)..n).map(|k| lt(k, j) * p[k]).sum();
                grad[j] = -mu[j] + tail;
                grad[m + j] = mu[j] - x[j] + p[j];
            }
            (grad, ut, p)
        };
        let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>();

        let mut v = vec![0.0; 2 * m];
        let (mut grad, mut ut, mut p) = eval(&v);
        let mut converged = false;
        for _ in 0..200 {
            if grad.iter().all(|g| g.abs() < 1e-10) {
                converged = true;
                break;
            }
            let dp: Vec<f64> = (0..n).map(|k| ut[k] * p[k] - p[k] * p[k]).collect();
            let mut jac = DMatrix::<f64>::zeros(2 * m, 2 * m);
            for j in 0..m {
                for i in 0..m {
                    let xx: f64 = ((j.max(i) + 1)..n).map(|k| lt(k, j) * dp[k] * lt(k, i)).sum();
                    jac[(j, i)] = xx;
                    // d grad_x_j / d mu_i and d grad_mu_i / d x_j
                    let mx = if i > j { dp[i] * lt(i, j) } else { 0.0 } - if i == j { 1.0 } else { 0.0 };
                    jac[(j, m + i)] = mx;
                    jac[(m + i, j)] = mx;
                }
                jac[(m + j, m + j)] = 1.0 + dp[j];
            }
            let rhs = DVector::from_iterator(2 * m, grad.iter().map(|g| -g));
            let step = jac.lu().solve(&rhs)?;
            let base = norm(&grad);
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
                let (g, u, pp) = eval(&trial);
                if norm(&g) < base || t < 1e-6 {
                    v = trial;
                    grad = g;
                    ut = u;
                    p = pp;
                    break;
                }
                t *= 0.5;
            }
        }
        if !converged {
            return None;
        }
        let (x, mu) = v.split_at(m);
        let mut psi = 0.0;
        for k in 0..n {
            psi += ln_gaussian_cdf(ut[k]);
            if k < m {
                psi += 0.5 * mu[k] * mu[k] - x[k] * mu[k];
            }
        }
        let mut shift = mu.to_vec();
        shift.push(0.0);
        psi.is_finite().then_some((shift, psi))
    }

    fn ln_integrand(&self, w: &[f64], y: &mut [f64]) -> f64 {
        match &self.shift {
            Some(mu) => self.ln_integrand_tilted(w, y, mu),
            None => self.ln_integrand_plain(w, y),
        }
    }

    /// Log-likelihood ratio with conditional `i` drawn from `N(mu_i, 1)`
    /// truncated above at its limit `s_i`:
    /// `sum_i ln Phi(s_i - mu_i) + mu_i^2 / 2 - y_i mu_i`.
    fn ln_integrand_tilted(&self, w: &[f64], y: &mut [f64], mu: &[f64]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i + 1];
            let mut num = self.b[i];
            for k in 0..i {
                num -= row[k] * y[k];
            }
            let t = num / row[i] - mu[i];
            let ln_e = ln_gaussian_cdf(t);
            if ln_e == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            total += ln_e;
            if i + 1 < n {
                let ln_p = w[i].max(f64::MIN_POSITIVE).ln() + ln_e;
                let z = if ln_p > LOG_PATH {
                    gaussian_quantile(ln_p.exp().min(MAX_BELOW_ONE))
                } else {
                    gaussian_quantile_ln(ln_p)
                };
                y[i] = mu[i] + z;
                total += mu[i] * (0.5 * mu[i] - y[i]);
            }
        }
        total
    }

    /// Log of the integrand at `w in [0,1]^{n-1}`.
    fn ln_integrand_plain(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let n = self.n;
        let mut prod = 1.0;
        let mut ln_scale = 0.0;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i + 1];
            let mut num = self.b[i];
            for k in 0..i {
                num -= row[k] * y[k];
            }
            let s = num / row[i];
            let last = i + 1 == n;
            if s > LOG_PATH {
                let e = gaussian_cdf(s);
                if e == 0.0 {
                    return f64::NEG_INFINITY;
                }
                prod *= e;
                if !last {
                    let p = w[i] * e;
                    y[i] = if p > 1e-300 {
                        gaussian_quantile(p.min(MAX_BELOW_ONE))
                    } else {
                        gaussian_quantile_ln(w[i].max(f64::MIN_POSITIVE).ln() + e.ln())
                    };
                }
            } else {
                let ln_e = ln_gaussian_cdf(s);
                if ln_e == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                ln_scale += ln_e;
                if !last {
                    y[i] = gaussian_quantile_ln(w[i].max(f64::MIN_POSITIVE).ln() + ln_e);
                }
            }
            if prod < 1e-250 {
                ln_scale += prod.ln();
                prod = 1.0;
            }
        }
        prod.ln() + ln_scale
    }

    /// Log of the mean integrand over one randomly shifted lattice.
    fn ln_mean_for_shift(&self, lattice: &KroneckerLattice, shift: &[f64], samples: usize) -> f64 {
        let d = lattice.dim();
        let mut w = vec![0.0; d];
        let mut w_anti = vec![0.0; d];
        let mut y = vec![0.0; self.n];
        let mut values = Vec::with_capacity(2 * samples);
        for j in 0..samples {
            lattice.point(j, shift, &mut w);
            for (a, &x) in w_anti.iter_mut().zip(&w) {
                *a = 1.0 - x;
            }
            values.push(self.ln_integrand(&w, &mut y));
            values.push(self.ln_integrand(&w_anti, &mut y));
        }
        ln_mean_exp(&values)
    }

    fn integrate(&self, options: &RqmcOptions) -> Estimate {
        let lattice = KroneckerLattice::new(self.n - 1);
        let ln_means: Vec<f64> = (0..options.randomizations)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                rng.set_stream(r as u64);
                let shift: Vec<f64> = (0..lattice.dim()).map(|_| rng.random::<f64>()).collect();
                self.ln_mean_for_shift(&lattice, &shift, options.samples)
            })
            .collect();
        combine_randomizations(&ln_means)
    }
}

fn ln_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + (sum / values.len() as f64).ln()
}

/// Mean and standard error across randomizations, scaled by the largest.
fn combine_randomizations(ln_means: &[f64]) -> Estimate {
    let k = ln_means.len() as f64;
    let max = ln_means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Estimate::zero();
    }
    let rel: Vec<f64> = ln_means.iter().map(|&v| (v - max).exp()).collect();
    let mean = rel.iter().sum::<f64>() / k;
    let var = rel.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Estimate::from_ln(max + mean.ln(), max + 0.5 * (var / k).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gaussian_cdf;
    use std::f64::consts::PI;

    fn bivariate(rho: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])
    }

    #[test]
    fn univariate_is_exact() {
        let e = mvn_cdf(&DMatrix::identity(1, 1), &[0.0], &RqmcOptions::default()).unwrap();
        assert_eq!(e.value, 0.5);
        assert_eq!(e.std_error, 0.0);
        let e = mvn_cdf(&DMatrix::identity(1, 1), &[-50.0], &RqmcOptions::default()).unwrap();
        assert!((e.ln_value - ln_gaussian_cdf(-50.0)).abs() < 1e-12);
    }

    #[test]
    fn independent_pair_at_origin() {
        let e = mvn_cdf(&DMatrix::identity(2, 2), &[0.0, 0.0], &RqmcOptions::default()).unwrap();
        assert_eq!(e.value, 0.25);
        assert!(e.std_error >= 0.0);
    }

    #[test]
    fn bivariate_orthant_matches_arcsine_law() {
        let e = mvn_cdf(&bivariate(0.5), &[0.0, 0.0], &RqmcOptions::default()).unwrap();
        let exact = 0.25 + 0.5f64.asin() / (2.0 * PI);
        assert!((e.value - exact).abs() <= (5.0 * e.std_error).max(1e-14), "{e:?}");
        assert!((exact - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bivariate_matches_dense_quadrature() {
        // Independent route: P = int_{-inf}^{b1} phi(x) Phi((b2 - rho x)/sqrt(1-rho^2)) dx
        let (rho, b1, b2) = (-0.6, 0.4, -0.3);
        let sd = (1.0f64 - rho * rho).sqrt();
        let (lo, steps) = (-12.0, 200_000);
        let h = (b1 - lo) / steps as f64;
        let f = |x: f64| {
            (-0.5 * x * x).exp() / (2.0 * PI).sqrt() * gaussian_cdf((b2 - rho * x) / sd)
        };
        let mut quad = f(lo) + f(b1);
        for k in 1..steps {
            quad += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        quad *= h / 3.0;
        let e = mvn_cdf(&bivariate(rho), &[b1, b2], &RqmcOptions::default()).unwrap();
        assert!(e.std_error < 1e-6, "{e:?}");
        assert!((e.value - quad).abs() <= 5.0 * e.std_error, "{e:?} vs {quad}");
    }

    #[test]
    fn infinite_limits_reduce_dimension() {
        let cov = bivariate(0.7);
        let opts = RqmcOptions::default();
        assert_eq!(mvn_cdf(&cov, &[f64::NEG_INFINITY, 1.0], &opts).unwrap().value, 0.0);
        let e = mvn_cdf(&cov, &[f64::INFINITY, 1.0], &opts).unwrap();
        assert_eq!(e.value, gaussian_cdf(1.0));
        let e = mvn_cdf(&cov, &[f64::INFINITY, f64::INFINITY], &opts).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(mvn_cdf(&cov, &[f64::NAN, 0.0], &opts).is_err());
        assert!(mvn_cdf(&cov, &[0.0], &opts).is_err());
    }

    #[test]
    fn covariance_is_standardized() {
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 1.0]);
        let a = mvn_cdf(&cov, &[2.0, 0.5], &RqmcOptions::default()).unwrap();
        let b = mvn_cdf(&bivariate(0.5), &[1.0, 0.5], &RqmcOptions::default()).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_options_and_matrices() {
        let opts = RqmcOptions {
            samples: 64,
            ..Default::default()
        };
        assert!(mvn_cdf(&bivariate(0.1), &[0.0, 0.0], &opts).is_err());
        let opts = RqmcOptions {
            randomizations: 4,
            ..Default::default()
        };
        assert!(mvn_cdf(&bivariate(0.1), &[0.0, 0.0], &opts).is_err());
        let singular = DMatrix::from_element(3, 3, 1.0);
        assert!(matches!(
            mvn_cdf(&singular, &[0.0, 0.0, 0.0], &RqmcOptions::default()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let cov = DMatrix::from_fn(6, 6, |i, j| 0.6f64.powi((i as i32 - j as i32).abs()));
        let b = [0.1, -0.2, 0.3, 0.0, 0.5, -0.4];
        let opts = RqmcOptions::default();
        let a = mvn_cdf(&cov, &b, &opts).unwrap();
        let c = mvn_cdf(&cov, &b, &opts).unwrap();
        assert_eq!(a.value.to_bits(), c.value.to_bits());
        assert_eq!(a.std_error.to_bits(), c.std_error.to_bits());
        let other = mvn_cdf(&cov, &b, &opts.with_seed(99)).unwrap();
        assert_ne!(a.value.to_bits(), other.value.to_bits());
        assert!((a.value - other.value).abs() < 5.0 * (a.std_error + other.std_error));
    }

    #[test]
    fn deep_tail_stays_finite_in_log_space() {
        // 25 independent variables at -10: ln P = 25 ln Phi(-10), far below 1e-308.
        let n = 25;
        let cov = DMatrix::identity(n, n);
        let e = mvn_cdf(&cov, &vec![-10.0; n], &RqmcOptions::default()).unwrap();
        let exact = 25.0 * ln_gaussian_cdf(-10.0);
        assert_eq!(e.value, 0.0);
        assert!(e.relative_error() < 1e-3, "{e:?}");
        assert!((e.ln_value - exact).abs() <= 5.0 * e.relative_error() + 1e-12, "{} vs {exact}", e.ln_value);
    }

    /// `ln int phi(z) Phi((t - sqrt(rho) z) / sqrt(1 - rho))^n dz`, log-space Simpson.
    fn ln_equicorrelated_orthant(t: f64, rho: f64, n: usize) -> f64 {
        let (a, b, steps) = (-40.0, 40.0, 200_000);
        let h = (b - a) / steps as f64;
        let f = |z: f64| {
            -0.5 * z * z - 0.5 * (2.0 * PI).ln()
                + n as f64 * ln_gaussian_cdf((t - rho.sqrt() * z) / (1.0 - rho).sqrt())
        };
        let terms: Vec<f64> = (0..=steps)
            .map(|k| {
                let w: f64 = if k == 0 || k == steps {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                f(a + k as f64 * h) + w.ln()
            })
            .collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + terms.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + (h / 3.0).ln()
    }

    #[test]
    fn tilted_route_matches_equicorrelated_oracle() {
        for (t, rho, n) in [(-4.0, 0.5, 6), (-8.0, 0.3, 10), (-6.0, 0.8, 20)] {
            let cov = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho });
            let e = mvn_cdf(&cov, &vec![t; n], &RqmcOptions::default()).unwrap();
            let exact = ln_equicorrelated_orthant(t, rho, n);
            assert!(exact < TILT_BELOW);
            assert!(e.relative_error() < 1e-2, "{e:?}");
            let tol = 5.0 * e.relative_error() + 1e-10;
            assert!((e.ln_value - exact).abs() <= tol, "t={t} rho={rho} n={n}: {e:?} vs {exact}");
        }
    }

    #[test]
    fn tilted_and_plain_routes_agree() {
        let n = 8;
        let cov = DMatrix::from_fn(n, n, |i, j| 0.5f64.powi((i as i32 - j as i32).abs()));
        let corr_limits = vec![-1.5; n];
        let mut plan = ConditioningPlan::new(cov, corr_limits).unwrap();
        let opts = RqmcOptions::default();
        let plain = plan.integrate(&opts);
        let (shift, bound) = plan.saddle_point().unwrap();
        assert!(bound >= plain.ln_value);
        plan.shift = Some(shift);
        let tilted = plan.integrate(&opts);
        let tol = 5.0 * (plain.std_error + tilted.std_error);
        assert!((plain.value - tilted.value).abs() <= tol, "{plain:?} vs {tilted:?}");
    }

    #[test]
    fn saddle_point_of_independent_problem() {
        // For R = I nothing couples the variables: no tilt, and the bound is exact.
        let plan = ConditioningPlan::new(DMatrix::identity(3, 3), vec![-3.0; 3]).unwrap();
        let (mu, psi) = plan.saddle_point().unwrap();
        assert!(mu.iter().all(|m| m.abs() < 1e-12), "{mu:?}");
        assert!((psi - 3.0 * ln_gaussian_cdf(-3.0)).abs() < 1e-12);
    }

    #[test]
    fn log_mean_exp_matches_direct_average() {
        let v = [0.1f64.ln(), 0.3f64.ln(), 0.2f64.ln()];
        assert!((ln_mean_exp(&v).exp() - 0.2).abs() < 1e-15);
        assert_eq!(ln_mean_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }
}
