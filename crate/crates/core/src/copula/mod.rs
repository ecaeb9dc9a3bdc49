//! Gaussian copula over the port correlation matrix.
//!
//! The copula's correlation parameter is the spatial correlation matrix
//! itself: `C(u) = Phi_R(Phi^{-1}(u_1), ..., Phi^{-1}(u_N))`.

mod lattice;
mod mvn;

use nalgebra::DMatrix;

pub use mvn::{mvn_cdf, Estimate, RqmcOptions};

use crate::error::{domain, Error, Result};
use crate::geometry::{Regularization, SpatialCorrelation};
use crate::special::{gaussian_cdf, gaussian_quantile};

/// An `N`-dimensional copula.
pub trait Copula {
    fn dim(&self) -> usize;

    /// `C(u_1, ..., u_N)` with its integration error.
    fn cdf(&self, u: &[f64]) -> Result<Estimate>;

    /// `ln c(u_1, ..., u_N)` for `u` in the open unit cube.
    fn ln_density(&self, u: &[f64]) -> Result<f64>;

    fn density(&self, u: &[f64]) -> Result<f64> {
        Ok(self.ln_density(u)?.exp())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GaussianCopula<'a> {
    correlation: &'a SpatialCorrelation,
    options: RqmcOptions,
}

impl<'a> GaussianCopula<'a> {
    pub fn new(correlation: &'a SpatialCorrelation, options: RqmcOptions) -> Self {
        Self {
            correlation,
            options,
        }
    }

    pub fn correlation(&self) -> &'a SpatialCorrelation {
        self.correlation
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.len(),
            });
        }
        Ok(())
    }
}

impl Copula for GaussianCopula<'_> {
    fn dim(&self) -> usize {
        self.correlation.dim()
    }

    fn cdf(&self, u: &[f64]) -> Result<Estimate> {
        self.check_len(u)?;
        for &ui in u {
            if !(0.0..=1.0).contains(&ui) {
                return Err(domain("u", ui, "marginal probabilities must lie in [0, 1]"));
            }
        }
        if u.contains(&0.0) {
            return Ok(Estimate::zero());
        }
        // Margins at 1 impose no constraint and are integrated out exactly.
        let keep: Vec<usize> = (0..u.len()).filter(|&i| u[i] < 1.0).collect();
        match keep.len() {
            0 => return Ok(Estimate::exact(1.0)),
            1 => return Ok(Estimate::exact(u[keep[0]])),
            _ => {}
        }
        let r = self.correlation.matrix();
        let sub = DMatrix::from_fn(keep.len(), keep.len(), |a, b| r[(keep[a], keep[b])]);
        let z: Vec<f64> = keep.iter().map(|&i| gaussian_quantile(u[i])).collect();
        mvn_cdf(&sub, &z, &self.options)
    }

    /// `-1/2 z^T (R^{-1} - I) z - 1/2 ln det R` with `z = Phi^{-1}(u)`,
    /// computed from the Cholesky factor by a triangular solve.
    fn ln_density(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        for &ui in u {
            if !(ui > 0.0 && ui < 1.0) {
                return Err(domain("u", ui, "copula density needs u in (0, 1)"));
            }
        }
        let z: Vec<f64> = u.iter().map(|&ui| gaussian_quantile(ui)).collect();
        ln_density_at_scores(self.correlation, &z)
    }
}

/// Copula log-density at normal scores `z`.
pub(crate) fn ln_density_at_scores(correlation: &SpatialCorrelation, z: &[f64]) -> Result<f64> {
    let v = correlation.whiten(z)?;
    let quad: f64 = v.iter().zip(z).map(|(a, b)| a * a - b * b).sum();
    Ok(-0.5 * quad - 0.5 * correlation.ln_det())
}

/// Gaussian copula CDF with the spatial correlation matrix as parameter.
pub fn copula_cdf(
    correlation: &SpatialCorrelation,
    marginal_values: &[f64],
    options: &RqmcOptions,
) -> Result<Estimate> {
    GaussianCopula::new(correlation, *options).cdf(marginal_values)
}

/// `C(u, ..., u)` given the common normal score `z = Phi^{-1}(u)`.
///
/// Taking the score instead of `u` keeps the lower tail usable after `u`
/// itself has underflowed.
pub fn diagonal_cdf_at_score(
    correlation: &SpatialCorrelation,
    z: f64,
    options: &RqmcOptions,
) -> Result<Estimate> {
    if z.is_nan() {
        return Err(domain("z", z, "normal score must not be NaN"));
    }
    mvn_cdf(correlation.matrix(), &vec![z; correlation.dim()], options)
}

/// Gaussian copula density.
pub fn copula_density(correlation: &SpatialCorrelation, marginal_values: &[f64]) -> Result<f64> {
    GaussianCopula::new(correlation, RqmcOptions::default()).density(marginal_values)
}

/// Outcome of the near-comonotone limit check.
#[derive(Debug, Clone, Copy)]
pub struct ComonotoneCheck {
    pub estimate: Estimate,
    /// `Phi(t)`, the limit as all correlations tend to one.
    pub target: f64,
}

impl ComonotoneCheck {
    /// Deviation in units of the reported standard error.
    pub fn z_score(&self) -> f64 {
        let diff = (self.estimate.value - self.target).abs();
        if self.estimate.std_error > 0.0 {
            diff / self.estimate.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Evaluates `Phi_R(t, ..., t)` with every correlation at `1 - 1e-9`
/// after the default regularization; the result should approach `Phi(t)`.
pub fn mvn_cdf_comonotone_check(t: f64, n: usize, options: &RqmcOptions) -> Result<ComonotoneCheck> {
    if n == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let rho = 1.0 - 1e-9;
    let raw = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho });
    let corr = SpatialCorrelation::from_matrix(raw, Regularization::default())?;
    let estimate = mvn_cdf(corr.matrix(), &vec![t; n], options)?;
    Ok(ComonotoneCheck {
        estimate,
        target: gaussian_cdf(t),
    })
}
