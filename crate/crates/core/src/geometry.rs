//! Planar fluid-antenna port grid and its spatial correlation.
//!
//! Ports sit on an `n1 x n2` lattice spanning `w1 x w2` wavelengths. Under
//! isotropic scattering over the front half-space the correlation between two
//! ports is `sinc(2 d / lambda)` with `d` their separation, which is what
//! [`PortGrid::port_correlation`] evaluates. [`validate_correlation_mc`]
//! recovers the same matrix by averaging plane-wave array responses.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Normalized sinc, `sin(pi t) / (pi t)`.
pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        let x = PI * t;
        x.sin() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortGrid {
    n1: usize,
    n2: usize,
    w1: f64,
    w2: f64,
}

impl PortGrid {
    /// `n1 x n2` ports over a `w1 x w2` aperture (sizes in wavelengths).
    pub fn new(n1: usize, n2: usize, w1: f64, w2: f64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "port counts must be at least 1, got {n1}x{n2}"
            )));
        }
        for (n, w, axis) in [(n1, w1, 1), (n2, w2, 2)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "aperture w{axis} = {w} must be finite and non-negative"
                )));
            }
            if n > 1 && w == 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "{n} ports along axis {axis} need a positive aperture"
                )));
            }
        }
        Ok(Self { n1, n2, w1, w2 })
    }

    /// Square `side x side` grid over a `width x width` aperture.
    pub fn square(side: usize, width: f64) -> Result<Self> {
        Self::new(side, side, width, width)
    }

    /// The single fixed antenna of a conventional receiver.
    pub fn single() -> Self {
        Self {
            n1: 1,
            n2: 1,
            w1: 0.0,
            w2: 0.0,
        }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn ports(&self) -> usize {
        self.n1 * self.n2
    }

    /// Row-major map from 1-based `(row, col)` to the 1-based port index.
    pub fn map_index(&self, row: usize, col: usize) -> Result<usize> {
        if row == 0 || row > self.n1 || col == 0 || col > self.n2 {
            return Err(Error::PortOutOfRange {
                row,
                col,
                rows: self.n1,
                cols: self.n2,
            });
        }
        Ok((row - 1) * self.n2 + col)
    }

    pub fn unmap_index(&self, index: usize) -> Result<(usize, usize)> {
        self.check_index(index)?;
        let k = index - 1;
        Ok((k / self.n2 + 1, k % self.n2 + 1))
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index == 0 || index > self.ports() {
            return Err(Error::IndexOutOfRange {
                index,
                ports: self.ports(),
            });
        }
        Ok(())
    }

    /// Offset of position `i` (1-based) along an axis; a single-port axis sits at 0.
    fn axis_offset(i: usize, count: usize, width: f64) -> f64 {
        if count <= 1 {
            0.0
        } else {
            (i - 1) as f64 / (count - 1) as f64 * width
        }
    }

    /// Port position `[0, y, z]` in wavelengths; axis 2 maps to `y`, axis 1 to `z`.
    pub fn position(&self, index: usize) -> Result<[f64; 3]> {
        let (row, col) = self.unmap_index(index)?;
        Ok([
            0.0,
            Self::axis_offset(col, self.n2, self.w2),
            Self::axis_offset(row, self.n1, self.w1),
        ])
    }

    /// Separation of two ports in wavelengths.
    pub fn separation(&self, n: usize, m: usize) -> Result<f64> {
        let p = self.position(n)?;
        let q = self.position(m)?;
        Ok(((p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
    }

    /// `sinc(2 d)` with `d` the port separation in wavelengths.
    pub fn port_correlation(&self, n: usize, m: usize) -> Result<f64> {
        if n == m {
            self.check_index(n)?;
            return Ok(1.0);
        }
        Ok(sinc(2.0 * self.separation(n, m)?))
    }

    /// The unregularized `N x N` sinc correlation matrix.
    pub fn correlation_matrix(&self) -> DMatrix<f64> {
        let n = self.ports();
        let mut r = DMatrix::identity(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self
                    .port_correlation(i + 1, j + 1)
                    .expect("indices within grid");
                r[(i, j)] = v;
                r[(j, i)] = v;
            }
        }
        r
    }
}

/// Conditioning applied before the matrix is factorized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    /// Weight `delta` of the identity in `(1 - delta) R + delta I`.
    pub nugget: f64,
    /// Eigenvalues below `eigen_floor * lambda_max` are lifted to that floor.
    pub eigen_floor: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            nugget: 0.0,
            eigen_floor: 1e-10,
        }
    }
}

/// A port correlation matrix with the factorizations the copula and the
/// simulator need.
#[derive(Debug, Clone)]
pub struct SpatialCorrelation {
    raw: DMatrix<f64>,
    matrix: DMatrix<f64>,
    regularization: Regularization,
    min_raw_eigenvalue: f64,
    floored: bool,
    cholesky: DMatrix<f64>,
    ln_det: f64,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpatialCorrelation {
    /// Correlation matrix of a port grid with the given regularization.
    pub fn build(grid: &PortGrid, regularization: Regularization) -> Result<Self> {
        Self::from_matrix(grid.correlation_matrix(), regularization)
    }

    /// Wraps an arbitrary correlation matrix (unit diagonal, symmetric).
    pub fn from_matrix(raw: DMatrix<f64>, regularization: Regularization) -> Result<Self> {
        let n = raw.nrows();
        if n == 0 || raw.ncols() != n {
            return Err(Error::InvalidCorrelation(format!(
                "expected a non-empty square matrix, got {}x{}",
                raw.nrows(),
                raw.ncols()
            )));
        }
        let Regularization {
            nugget,
            eigen_floor,
        } = regularization;
        if !(0.0..1.0).contains(&nugget) {
            return Err(Error::InvalidCorrelation(format!(
                "nugget {nugget} outside [0, 1)"
            )));
        }
        if !(eigen_floor.is_finite() && eigen_floor >= 0.0) {
            return Err(Error::InvalidCorrelation(format!(
                "eigen floor {eigen_floor} must be finite and non-negative"
            )));
        }
        for i in 0..n {
            if raw[(i, i)] != 1.0 {
                return Err(Error::InvalidCorrelation(format!(
                    "diagonal entry {i} is {}, expected 1",
                    raw[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (raw[(i, j)], raw[(j, i)]);
                if !a.is_finite() || a.abs() > 1.0 || (a - b).abs() > 1e-12 {
                    return Err(Error::InvalidCorrelation(format!(
                        "entries ({i},{j}) = {a} and ({j},{i}) = {b} are not a valid symmetric correlation"
                    )));
                }
            }
        }

        let raw_eigen = SymmetricEigen::new(raw.clone());
        let min_raw_eigenvalue = raw_eigen.eigenvalues.min();

        let mut matrix = raw.scale(1.0 - nugget);
        for i in 0..n {
            matrix[(i, i)] += nugget;
        }
        let eigen = SymmetricEigen::new(matrix.clone());
        let floor = eigen_floor * eigen.eigenvalues.max().max(0.0);
        let floored = eigen.eigenvalues.iter().any(|&l| l < floor);
        if floored {
            let lifted = eigen.eigenvalues.map(|l| l.max(floor));
            let v = &eigen.eigenvectors;
            let mut m = v * DMatrix::from_diagonal(&lifted) * v.transpose();
            // Back to unit diagonal so the copula margins stay standard normal.
            let scale: Vec<f64> = (0..n).map(|i| m[(i, i)].sqrt().recip()).collect();
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] *= scale[i] * scale[j];
                }
            }
            for i in 0..n {
                m[(i, i)] = 1.0;
                for j in 0..i {
                    let s = 0.5 * (m[(i, j)] + m[(j, i)]);
                    m[(i, j)] = s;
                    m[(j, i)] = s;
                }
            }
            matrix = m;
        }

        let cholesky = cholesky_lower(&matrix)?;
        let ln_det = 2.0 * cholesky.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let eigen = SymmetricEigen::new(matrix.clone());

        Ok(Self {
            raw,
            matrix,
            regularization,
            min_raw_eigenvalue,
            floored,
            cholesky,
            ln_det,
            eigenvalues: eigen.eigenvalues,
            eigenvectors: eigen.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The matrix as built, before regularization.
    pub fn raw(&self) -> &DMatrix<f64> {
        &self.raw
    }

    /// The regularized, positive-definite matrix used downstream.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn regularization(&self) -> Regularization {
        self.regularization
    }

    pub fn min_raw_eigenvalue(&self) -> f64 {
        self.min_raw_eigenvalue
    }

    /// True when the eigenvalue floor had to lift part of the spectrum.
    pub fn eigen_floored(&self) -> bool {
        self.floored
    }

    /// Lower Cholesky factor of [`Self::matrix`].
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    pub fn ln_det(&self) -> f64 {
        self.ln_det
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `N x r` factor `F` with `F F^T` equal to the regularized matrix.
    ///
    /// Built from the eigendecomposition with negative eigenvalues clipped to
    /// zero. Directions below `rel_cutoff * lambda_max` are dropped, which
    /// changes the covariance by at most that fraction.
    pub fn psd_factor(&self, rel_cutoff: f64) -> DMatrix<f64> {
        let lmax = self.eigenvalues.max().max(0.0);
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&k| self.eigenvalues[k] > rel_cutoff * lmax && self.eigenvalues[k] > 0.0)
            .collect();
        let mut f = DMatrix::zeros(self.dim(), keep.len());
        for (c, &k) in keep.iter().enumerate() {
            let s = self.eigenvalues[k].sqrt();
            for i in 0..self.dim() {
                f[(i, c)] = self.eigenvectors[(i, k)] * s;
            }
        }
        f
    }

    /// Solves `L v = z` for the Cholesky factor `L`.
    pub fn whiten(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: z.len(),
            });
        }
        let l = &self.cholesky;
        let mut v = vec![0.0; z.len()];
        for i in 0..z.len() {
            let mut acc = z[i];
            for k in 0..i {
                acc -= l[(i, k)] * v[k];
            }
            v[i] = acc / l[(i, i)];
        }
        Ok(v)
    }
}

/// Plain Cholesky returning the first failing pivot.
pub(crate) fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Writes a matrix as CSV: row-major, full, 17 significant digits, LF endings.
pub fn write_matrix_csv<W: Write>(matrix: &DMatrix<f64>, mut out: W) -> io::Result<()> {
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format!("{:.16e}", matrix[(i, j)]))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Monte Carlo estimate of the port correlation from plane-wave arrivals.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    /// Mean of `Re exp(j k.(r_n - r_m))`.
    pub real: DMatrix<f64>,
    /// Mean of the imaginary part; zero in expectation.
    pub imag: DMatrix<f64>,
    /// Standard error of each entry of `real`.
    pub std_error: DMatrix<f64>,
    pub samples: usize,
}

impl CorrelationEstimate {
    /// Largest absolute deviation from a reference matrix.
    pub fn max_abs_error(&self, reference: &DMatrix<f64>) -> f64 {
        (&self.real - reference).amax()
    }
}

/// Averages the array response outer product over arrivals drawn from the
/// half-space density `cos(nu) / (2 pi)`, `omega, nu in [-pi/2, pi/2]`.
///
/// `omega` is uniform and `nu = asin(U)` with `U` uniform on `[-1, 1]`, the
/// inverse transform of the `nu` marginal `cos(nu) / 2`.
pub fn validate_correlation_mc(
    grid: &PortGrid,
    samples: usize,
    seed: u64,
) -> Result<CorrelationEstimate> {
    if samples < 10_000 {
        return Err(Error::InvalidIntegration(format!(
            "at least 10000 samples required, got {samples}"
        )));
    }
    let n = grid.ports();
    let positions: Vec<[f64; 3]> = (1..=n)
        .map(|i| grid.position(i).expect("index within grid"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut re_sum = DMatrix::<f64>::zeros(n, n);
    let mut re_sq = DMatrix::<f64>::zeros(n, n);
    let mut im_sum = DMatrix::<f64>::zeros(n, n);
    let mut c = vec![0.0; n];
    let mut s = vec![0.0; n];
    let k0 = 2.0 * PI;

    for _ in 0..samples {
        let omega = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        let nu = rng.random_range(-1.0f64..1.0).asin();
        let k = [
            k0 * nu.cos() * omega.cos(),
            k0 * nu.cos() * omega.sin(),
            k0 * nu.sin(),
        ];
        for (i, p) in positions.iter().enumerate() {
            let phase = k[0] * p[0] + k[1] * p[1] + k[2] * p[2];
            let (si, ci) = phase.sin_cos();
            c[i] = ci;
            s[i] = si;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                // e^{j(phi_i - phi_j)}
                let re = c[i] * c[j] + s[i] * s[j];
                let im = s[i] * c[j] - c[i] * s[j];
                re_sum[(i, j)] += re;
                re_sq[(i, j)] += re * re;
                im_sum[(i, j)] += im;
            }
        }
    }

    let count = samples as f64;
    let mut real = DMatrix::identity(n, n);
    let mut imag = DMatrix::zeros(n, n);
    let mut std_error = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mean = re_sum[(i, j)] / count;
            let var = (re_sq[(i, j)] / count - mean * mean).max(0.0) * count / (count - 1.0);
            let se = (var / count).sqrt();
            real[(i, j)] = mean;
            real[(j, i)] = mean;
            imag[(i, j)] = im_sum[(i, j)] / count;
            imag[(j, i)] = -im_sum[(i, j)] / count;
            std_error[(i, j)] = se;
            std_error[(j, i)] = se;
        }
    }
    Ok(CorrelationEstimate {
        real,
        imag,
        std_error,
        samples,
    })
}
