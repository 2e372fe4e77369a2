//! Derived image views and their complex fusion.

pub use num_complex::Complex64 as Complex;

use crate::dataset::GrayImage;
use crate::error::{Error, Result};

/// Largest value of `v * (255 - v)` on `[0, 255]`, reached at `v = 127.5`.
pub const MAX_DERIVED: f64 = 127.5 * 127.5;

/// Flattened real image vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
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

/// Original pixels in the real part, derived pixels in the imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexFeature(pub Vec<Complex>);

impl ComplexFeature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.0
    }
}

/// Row-major flattening.
pub fn flatten(img: &GrayImage) -> FeatureVector {
    FeatureVector(img.pixels().to_vec())
}

/// Elementwise `v * (255 - v)`, no rescaling.
pub fn new_representation(v: &FeatureVector) -> Result<FeatureVector> {
    v.0.iter()
        .map(|&x| {
            if (0.0..=255.0).contains(&x) {
                Ok(x * (255.0 - x))
            } else {
                Err(Error::Domain(format!("intensity {x} outside [0, 255]")))
            }
        })
        .collect::<Result<_>>()
        .map(FeatureVector)
}

pub fn fuse_complex(x: &FeatureVector, tx: &FeatureVector) -> Result<ComplexFeature> {
    if x.len() != tx.len() {
        return Err(Error::Domain(format!(
            "cannot fuse vectors of length {} and {}",
            x.len(),
            tx.len()
        )));
    }
    Ok(ComplexFeature(
        x.0.iter()
            .zip(&tx.0)
            .map(|(&re, &im)| Complex::new(re, im))
            .collect(),
    ))
}

/// Flatten, derive, fuse.
pub fn transform(img: &GrayImage) -> Result<ComplexFeature> {
    let x = flatten(img);
    let tx = new_representation(&x)?;
    fuse_complex(&x, &tx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector(v.to_vec())
    }

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn flatten_is_row_major() {
        let g = GrayImage::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(flatten(&g), fv(&[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(flatten(&GrayImage::filled(1, 1, 7.0).unwrap()), fv(&[7.0]));
        let row = GrayImage::new(3, 1, vec![5.0, 6.0, 7.0]).unwrap();
        assert_eq!(flatten(&row), fv(&[5.0, 6.0, 7.0]));
    }

    #[test]
    fn derived_view_values() {
        assert_eq!(
            new_representation(&fv(&[0.0, 255.0])).unwrap(),
            fv(&[0.0, 0.0])
        );
        assert_eq!(new_representation(&fv(&[128.0])).unwrap(), fv(&[16256.0]));
        assert_eq!(new_representation(&fv(&[127.5])).unwrap(), fv(&[16256.25]));
        assert!(new_representation(&fv(&[-0.5])).is_err());
        assert!(new_representation(&fv(&[255.01])).is_err());
    }

    #[test]
    fn fusion() {
        let f = fuse_complex(&fv(&[100.0]), &fv(&[15500.0])).unwrap();
        assert_eq!(f.0, vec![c(100.0, 15500.0)]);
        let z = fuse_complex(&fv(&[0.0, 0.0]), &fv(&[0.0, 0.0])).unwrap();
        assert_eq!(z.0, vec![c(0.0, 0.0); 2]);
        assert!(fuse_complex(&fv(&[1.0]), &fv(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn transform_examples() {
        let t = |px: &[f64]| transform(&GrayImage::new(px.len(), 1, px.to_vec()).unwrap()).unwrap();
        assert_eq!(t(&[0.0]).0, vec![c(0.0, 0.0)]);
        assert_eq!(t(&[255.0]).0, vec![c(255.0, 0.0)]);
        assert_eq!(t(&[10.0, 250.0]).0, vec![c(10.0, 2450.0), c(250.0, 1250.0)]);
    }

    proptest! {
        #[test]
        fn derived_view_is_symmetric_and_bounded(v in proptest::collection::vec(0.0f64..=255.0, 1..64)) {
            let mirrored: Vec<f64> = v.iter().map(|x| 255.0 - x).collect();
            let a = new_representation(&fv(&v)).unwrap();
            let b = new_representation(&fv(&mirrored)).unwrap();
            for (x, y) in a.0.iter().zip(&b.0) {
                prop_assert!((x - y).abs() <= 1e-9 * MAX_DERIVED);
                prop_assert!((0.0..=MAX_DERIVED).contains(x));
            }
        }

        #[test]
        fn real_part_is_the_image(px in proptest::collection::vec(0.0f64..=255.0, 12)) {
            let g = GrayImage::new(3, 4, px.clone()).unwrap();
            let t = transform(&g).unwrap();
            let re: Vec<f64> = t.0.iter().map(|z| z.re).collect();
            prop_assert_eq!(re, px.clone());
            for (z, &x) in t.0.iter().zip(&px) {
                prop_assert_eq!(z.im, x * (255.0 - x));
            }
        }
    }
}
