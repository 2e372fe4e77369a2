//! Symmetric positive definite solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative diagonal jitter tried once when a plain Cholesky fails.
pub const JITTER_SCALE: f64 = 1e-10;

/// Cholesky factor of an SPD matrix, kept together with the matrix itself so
/// solves can apply one step of iterative refinement.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl SpdFactor {
    /// Factorizes `a`; on failure retries once with `JITTER_SCALE * trace / n`
    /// added to the diagonal.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || n != a.ncols() {
            return Err(Error::Domain(format!(
                "cannot factorize a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        if let Some(chol) = Cholesky::new(a.clone()) {
            return Ok(SpdFactor {
                matrix: a,
                chol,
                jitter: 0.0,
            });
        }

        let trace = a.trace();
        let jitter = JITTER_SCALE * trace / n as f64;
        let mut shifted = a.clone();
        if jitter.is_finite() && jitter > 0.0 {
            for i in 0..n {
                shifted[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(shifted.clone()) {
                return Ok(SpdFactor {
                    matrix: shifted,
                    chol,
                    jitter,
                });
            }
        }
        let diag = a.diagonal();
        Err(Error::NotPositiveDefinite {
            n,
            trace,
            min_diag: diag.min(),
            max_diag: diag.max(),
            jitter,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// The factorized matrix, including any jitter that was added.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Solves `A x = b`, followed by one refinement step.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(b);
        let r = b - &self.matrix * &x;
        x += self.chol.solve(&r);
        x
    }
}

/// `||A x - b|| / max(1, ||b||)`.
pub fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a * x - b).norm() / b.norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn factor_reproduces_matrix() {
        let a = random_spd(40, 3);
        let f = SpdFactor::new(a.clone()).unwrap();
        let l = f.lower();
        assert!((&a - &l * l.transpose()).norm() <= 1e-8 * a.norm());
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn solve_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1, 5, 60] {
            let a = random_spd(n, n as u64);
            let b = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
            let x = SpdFactor::new(a.clone()).unwrap().solve(&b);
            assert!(relative_residual(&a, &x, &b) <= 1e-8);
        }
    }

    #[test]
    fn semidefinite_recovers_with_jitter() {
        // Rank one, so the plain factorization breaks down.
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let a = &v * v.transpose();
        let f = SpdFactor::new(a.clone()).unwrap();
        assert!(f.jitter() > 0.0);
        assert_eq!(f.jitter(), JITTER_SCALE * a.trace() / 3.0);
    }

    #[test]
    fn indefinite_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let err = SpdFactor::new(a).unwrap_err();
        assert!(
            matches!(err, Error::NotPositiveDefinite { n: 2, .. }),
            "{err}"
        );
        assert!(SpdFactor::new(DMatrix::zeros(2, 3)).is_err());
    }
}
