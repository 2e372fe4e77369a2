//! Gaussian kernel over complex feature vectors.
//!
//! The squared distance between two complex vectors is the squared modulus of
//! their difference, i.e. the ordinary squared Euclidean distance of the real
//! and imaginary parts taken together. Kernel values are therefore real and
//! the Gram matrix is a real symmetric matrix with unit diagonal.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::representation::ComplexFeature;

/// Width of the Gaussian kernel `exp(-d / (2 sigma))`.
///
/// Note that `sigma` divides the squared distance directly; it is not squared.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    sigma: f64,
}

impl KernelParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(KernelParams { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Symmetric `n x n` matrix of kernel values between training features.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Wraps a caller-built kernel matrix; it must be square and symmetric.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Domain(format!(
                "Gram matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m != m.transpose() {
            return Err(Error::Domain("Gram matrix must be symmetric".into()));
        }
        Ok(GramMatrix(m))
    }
}

/// Kernel values between every training feature and one query.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelVector(pub Vec<f64>);

impl KernelVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `sum_j |u_j - v_j|^2`, accumulated in index order.
pub fn complex_sq_distance(u: &ComplexFeature, v: &ComplexFeature) -> Result<f64> {
    check_len(u.len(), v.len())?;
    Ok(sq_distance_unchecked(u, v))
}

#[inline]
fn sq_distance_unchecked(u: &ComplexFeature, v: &ComplexFeature) -> f64 {
    u.0.iter().zip(&v.0).fold(0.0, |acc, (a, b)| {
        let dr = a.re - b.re;
        let di = a.im - b.im;
        acc + (dr * dr + di * di)
    })
}

#[inline]
fn gaussian(sq_dist: f64, p: KernelParams) -> f64 {
    // Underflows to exactly 0 for large distances, which is fine: lambda > 0
    // keeps the regularized systems definite.
    (-sq_dist / (2.0 * p.sigma)).exp()
}

pub fn kernel_value(u: &ComplexFeature, v: &ComplexFeature, p: KernelParams) -> Result<f64> {
    Ok(gaussian(complex_sq_distance(u, v)?, p))
}

/// Upper triangle evaluated in parallel, lower triangle mirrored, diagonal 1.
pub fn gram_matrix(train: &[ComplexFeature], p: KernelParams) -> Result<GramMatrix> {
    let n = train.len();
    if n == 0 {
        return Err(Error::Domain("Gram matrix of an empty training set".into()));
    }
    let d = train[0].len();
    for f in train {
        check_len(d, f.len())?;
    }

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| gaussian(sq_distance_unchecked(&train[i], &train[j]), p))
                .collect()
        })
        .collect();

    let mut k = DMatrix::identity(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (offset, &value) in row.iter().enumerate() {
            let j = i + 1 + offset;
            k[(i, j)] = value;
            k[(j, i)] = value;
        }
    }
    Ok(GramMatrix(k))
}

pub fn kernel_vector(
    train: &[ComplexFeature],
    z: &ComplexFeature,
    p: KernelParams,
) -> Result<KernelVector> {
    for f in train {
        check_len(f.len(), z.len())?;
    }
    Ok(KernelVector(
        train
            .iter()
            .map(|t| gaussian(sq_distance_unchecked(t, z), p))
            .collect(),
    ))
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Domain(format!(
            "feature length mismatch: {a} vs {b}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::Complex;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cf(v: &[(f64, f64)]) -> ComplexFeature {
        ComplexFeature(v.iter().map(|&(re, im)| Complex::new(re, im)).collect())
    }

    fn params(sigma: f64) -> KernelParams {
        KernelParams::new(sigma).unwrap()
    }

    /// Feature at squared distance `d` from the zero feature of length 1.
    fn at_distance(d: f64) -> ComplexFeature {
        cf(&[(d.sqrt(), 0.0)])
    }

    #[test]
    fn distances() {
        let u = cf(&[(1.0, 2.0), (3.0, 4.0)]);
        assert_eq!(complex_sq_distance(&u, &u).unwrap(), 0.0);
        assert_eq!(
            complex_sq_distance(&cf(&[(1.0, 2.0)]), &cf(&[(4.0, 6.0)])).unwrap(),
            25.0
        );
        let zero = cf(&[(0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(
            complex_sq_distance(&zero, &cf(&[(3.0, 0.0), (0.0, 4.0)])).unwrap(),
            25.0
        );
        assert!(complex_sq_distance(&zero, &cf(&[(0.0, 0.0)])).is_err());
    }

    #[test]
    fn kernel_values() {
        let u = cf(&[(9.0, 1.0)]);
        assert_eq!(kernel_value(&u, &u, params(3.0)).unwrap(), 1.0);

        let a = cf(&[(0.0, 0.0)]);
        let b = cf(&[(3.0, 4.0)]);
        assert_relative_eq!(
            kernel_value(&a, &b, params(0.5)).unwrap(),
            1.3887943864964021e-11,
            max_relative = 1e-12
        );

        let far = at_distance(2e10);
        assert_relative_eq!(
            kernel_value(&a, &far, params(1e10)).unwrap(),
            0.36787944117144233,
            max_relative = 1e-12
        );

        assert_eq!(
            kernel_value(&a, &at_distance(1e6), params(1e-3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn kernel_params_validation() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(-1.0).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
        assert!(KernelParams::new(f64::INFINITY).is_err());
    }

    #[test]
    fn gram_examples() {
        let one = gram_matrix(&[cf(&[(5.0, 1.0)])], params(1.0)).unwrap();
        assert_eq!(one.matrix(), &DMatrix::from_element(1, 1, 1.0));

        let same = cf(&[(5.0, 1.0), (2.0, 2.0)]);
        let g = gram_matrix(&[same.clone(), same], params(1.0)).unwrap();
        assert_eq!(g.matrix(), &DMatrix::from_element(2, 2, 1.0));

        let spread = [
            cf(&[(0.0, 0.0)]),
            cf(&[(255.0, 16256.25)]),
            cf(&[(100.0, 50.0)]),
        ];
        let g = gram_matrix(&spread, params(1e300)).unwrap();
        assert!(g.matrix().iter().all(|&v| (v - 1.0).abs() <= 1e-12));

        assert!(gram_matrix(&[], params(1.0)).is_err());
        assert!(gram_matrix(&[cf(&[(0.0, 0.0)]), cf(&[])], params(1.0)).is_err());
    }

    #[test]
    fn kernel_vector_examples() {
        let train = [cf(&[(1.0, 2.0)]), cf(&[(4.0, 6.0)])];
        let kv = kernel_vector(&train, &train[1], params(1.0)).unwrap();
        assert_eq!(kv.0[1], 1.0);

        let z = cf(&[(7.0, 7.0)]);
        let all = kernel_vector(&[z.clone(), z.clone(), z.clone()], &z, params(2.0)).unwrap();
        assert_eq!(all.0, vec![1.0; 3]);

        let zero = cf(&[(0.0, 0.0)]);
        let kv = kernel_vector(&[zero.clone(), at_distance(2e10)], &zero, params(1e10)).unwrap();
        assert_eq!(kv.0[0], 1.0);
        assert_relative_eq!(kv.0[1], 0.36787944117144233, max_relative = 1e-12);

        assert!(kernel_vector(&train, &cf(&[]), params(1.0)).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_monotone(
            u in proptest::collection::vec((0.0f64..255.0, 0.0f64..16256.0), 8),
            v in proptest::collection::vec((0.0f64..255.0, 0.0f64..16256.0), 8),
            sigma in 1e3f64..1e7,
        ) {
            let (u, v) = (cf(&u), cf(&v));
            let p = params(sigma);
            prop_assert_eq!(
                kernel_value(&u, &v, p).unwrap().to_bits(),
                kernel_value(&v, &u, p).unwrap().to_bits()
            );
            let zero = cf(&[(0.0, 0.0)]);
            let d = complex_sq_distance(&u, &v).unwrap();
            let near = kernel_value(&zero, &at_distance(d), p).unwrap();
            let far = kernel_value(&zero, &at_distance(2.0 * d + 1.0), p).unwrap();
            prop_assert!(far < near || near == 0.0);
        }

        #[test]
        fn gram_entries_bounded(
            feats in proptest::collection::vec(proptest::collection::vec((0.0f64..255.0, 0.0f64..16256.0), 4), 1..10),
            sigma in 1e2f64..1e9,
        ) {
            let feats: Vec<ComplexFeature> = feats.iter().map(|f| cf(f)).collect();
            let g = gram_matrix(&feats, params(sigma)).unwrap();
            for i in 0..g.n() {
                prop_assert_eq!(g.get(i, i), 1.0);
                for j in 0..g.n() {
                    prop_assert_eq!(g.get(i, j), g.get(j, i));
                    prop_assert!((0.0..=1.0).contains(&g.get(i, j)));
                }
            }
        }
    }
}
