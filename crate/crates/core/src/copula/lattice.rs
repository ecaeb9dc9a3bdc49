//! Randomly shifted Kronecker lattice with baker's-transform periodization.

/// Generator `frac(sqrt(p_k))` over the first `dim` primes (Richtmyer sequence).
#[derive(Debug, Clone)]
pub(crate) struct KroneckerLattice {
    alpha: Vec<f64>,
}

impl KroneckerLattice {
    pub(crate) fn new(dim: usize) -> Self {
        let alpha = first_primes(dim)
            .into_iter()
            .map(|p| (p as f64).sqrt().fract())
            .collect();
        Self { alpha }
    }

    pub(crate) fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Writes point `j` under `shift` into `out`, mapped by `x -> |2x - 1|`.
    #[inline]
    pub(crate) fn point(&self, j: usize, shift: &[f64], out: &mut [f64]) {
        let jf = j as f64;
        for ((o, &a), &s) in out.iter_mut().zip(&self.alpha).zip(shift) {
            let x = (jf * a + s).fract();
            *o = (2.0 * x - 1.0).abs();
        }
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        assert_eq!(first_primes(8), vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }

    #[test]
    fn points_stay_in_unit_cube() {
        let lat = KroneckerLattice::new(5);
        let shift = [0.1, 0.9, 0.5, 0.25, 0.0];
        let mut out = [0.0; 5];
        for j in 0..1000 {
            lat.point(j, &shift, &mut out);
            assert!(out.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn integrates_a_smooth_function_accurately() {
        // int_[0,1]^3 prod (1 + cos(2 pi x_k)/2) dx = 1
        let lat = KroneckerLattice::new(3);
        let shift = [0.31, 0.77, 0.05];
        let mut x = [0.0; 3];
        let n = 4096;
        let mut sum = 0.0;
        for j in 0..n {
            lat.point(j, &shift, &mut x);
            sum += x
                .iter()
                .map(|&t| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * t).cos())
                .product::<f64>();
        }
        assert!((sum / n as f64 - 1.0).abs() < 1e-3);
    }
}
