//! Collaborative representation classification.
//!
//! A query is coded over *all* training samples at once by ridge regression
//! and assigned to the class whose own columns reconstruct it best. The
//! kernel variant works entirely with kernel values: the dictionary is the
//! Gram matrix `K` and the query is its kernel vector `k_z`. Two closed forms
//! of the regularized problem are available:
//!
//! * [`SolverForm::Alpha`]: `(K + lambda I) theta = k_z`
//! * [`SolverForm::Beta`]: `(K^T K + lambda I) theta = K^T k_z`
//!
//! The class-`i` score is `|| k_z - K[:, I(i)] theta[I(i)] ||_2`, smallest wins,
//! ties go to the lowest class index.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dataset::{GrayImage, LabeledDataset};
use crate::error::{Error, Result};
use crate::kernel::{self, GramMatrix, KernelParams, KernelVector};
use crate::linalg::SpdFactor;
use crate::representation::{self, ComplexFeature, FeatureVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SolverForm {
    /// `(K + lambda I)^-1 k_z`
    Alpha,
    /// `(K^T K + lambda I)^-1 K^T k_z`
    #[default]
    Beta,
}

impl SolverForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverForm::Alpha => "alpha",
            SolverForm::Beta => "beta",
        }
    }
}

impl fmt::Display for SolverForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" => Ok(SolverForm::Alpha),
            "beta" => Ok(SolverForm::Beta),
            other => Err(Error::InvalidParameter(format!(
                "unknown solver form {other:?}, expected alpha or beta"
            ))),
        }
    }
}

/// Representation coefficients over the training samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients(pub Vec<f64>);

impl Coefficients {
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

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class_id: usize,
    /// One score per class; `residuals[class_id]` is the minimum.
    pub residuals: Vec<f64>,
}

impl Prediction {
    pub fn min_residual(&self) -> f64 {
        self.residuals[self.class_id]
    }
}

/// Argmin with ties broken towards the lowest index.
fn argmin(residuals: &[f64]) -> usize {
    let mut best = 0;
    for (i, &r) in residuals.iter().enumerate().skip(1) {
        if r < residuals[best] {
            best = i;
        }
    }
    best
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Training column indices per class.
fn class_members(labels: &[usize], class_count: usize) -> Result<Vec<Vec<usize>>> {
    let mut members = vec![Vec::new(); class_count];
    for (j, &c) in labels.iter().enumerate() {
        members
            .get_mut(c)
            .ok_or_else(|| {
                Error::Domain(format!("label {c} out of range for {class_count} classes"))
            })?
            .push(j);
    }
    Ok(members)
}

/// `||theta_i||` divisor for the optional normalized residual. A class with
/// all-zero coefficients explains nothing and scores `f64::MAX`.
fn normalize(residual: f64, theta: &[f64], members: &[usize]) -> f64 {
    let norm = members
        .iter()
        .map(|&j| theta[j] * theta[j])
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        residual / norm
    } else {
        f64::MAX
    }
}

/// The linear-algebra core of kernel CRC: a fixed Gram matrix, labels, and
/// the cached factorization for one solver form.
#[derive(Clone, Debug)]
pub struct CrcSolver {
    gram: GramMatrix,
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
    lambda: f64,
    form: SolverForm,
    factor: SpdFactor,
    normalize_residuals: bool,
}

impl CrcSolver {
    pub fn from_gram(
        gram: GramMatrix,
        labels: Vec<usize>,
        class_count: usize,
        lambda: f64,
        form: SolverForm,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        let n = gram.n();
        if labels.len() != n {
            return Err(Error::Domain(format!(
                "{} labels for a Gram matrix of order {n}",
                labels.len()
            )));
        }
        let members = class_members(&labels, class_count)?;

        let k = gram.matrix();
        let mut system = match form {
            SolverForm::Alpha => k.clone(),
            SolverForm::Beta => {
                let ktk = k.tr_mul(k);
                (&ktk + ktk.transpose()) * 0.5
            }
        };
        for i in 0..n {
            system[(i, i)] += lambda;
        }
        let factor = SpdFactor::new(system)?;
        Ok(CrcSolver {
            gram,
            labels,
            members,
            lambda,
            form,
            factor,
            normalize_residuals: false,
        })
    }

    /// Divide each class residual by the norm of that class's coefficients.
    pub fn with_normalized_residuals(mut self, on: bool) -> Self {
        self.normalize_residuals = on;
        self
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.members.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn form(&self) -> SolverForm {
        self.form
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    fn check_kz(&self, kz: &KernelVector) -> Result<DVector<f64>> {
        if kz.len() != self.gram.n() {
            return Err(Error::Domain(format!(
                "kernel vector of length {} for {} training samples",
                kz.len(),
                self.gram.n()
            )));
        }
        Ok(DVector::from_column_slice(kz.as_slice()))
    }

    fn check_form(&self, wanted: SolverForm) -> Result<()> {
        if self.form != wanted {
            return Err(Error::Domain(format!(
                "model was factorized for the {} form, not {wanted}",
                self.form
            )));
        }
        Ok(())
    }

    pub fn solve_alpha(&self, kz: &KernelVector) -> Result<Coefficients> {
        self.check_form(SolverForm::Alpha)?;
        let b = self.check_kz(kz)?;
        Ok(Coefficients(self.factor.solve(&b).data.into()))
    }

    pub fn solve_beta(&self, kz: &KernelVector) -> Result<Coefficients> {
        self.check_form(SolverForm::Beta)?;
        let b = self.gram.matrix().tr_mul(&self.check_kz(kz)?);
        Ok(Coefficients(self.factor.solve(&b).data.into()))
    }

    /// Solves with whichever form the solver was built for.
    pub fn solve(&self, kz: &KernelVector) -> Result<Coefficients> {
        match self.form {
            SolverForm::Alpha => self.solve_alpha(kz),
            SolverForm::Beta => self.solve_beta(kz),
        }
    }

    /// Right-hand side of the cached system for `kz`.
    pub fn rhs(&self, kz: &KernelVector) -> Result<DVector<f64>> {
        let b = self.check_kz(kz)?;
        Ok(match self.form {
            SolverForm::Alpha => b,
            SolverForm::Beta => self.gram.matrix().tr_mul(&b),
        })
    }

    pub fn class_residuals(&self, kz: &KernelVector, theta: &Coefficients) -> Result<Vec<f64>> {
        let n = self.gram.n();
        if theta.len() != n || kz.len() != n {
            return Err(Error::Domain(format!(
                "coefficients ({}) and kernel vector ({}) must both have length {n}",
                theta.len(),
                kz.len()
            )));
        }
        let k = self.gram.matrix();
        Ok(self
            .members
            .iter()
            .map(|members| {
                let mut r = kz.0.clone();
                for &j in members {
                    let t = theta.0[j];
                    for (ri, kij) in r.iter_mut().zip(k.column(j).iter()) {
                        *ri -= kij * t;
                    }
                }
                let d = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                if self.normalize_residuals {
                    normalize(d, &theta.0, members)
                } else {
                    d
                }
            })
            .collect())
    }

    /// Solve, score every class, pick the argmin.
    pub fn predict(&self, kz: &KernelVector) -> Result<Prediction> {
        let theta = self.solve(kz)?;
        let residuals = self.class_residuals(kz, &theta)?;
        Ok(Prediction {
            class_id: argmin(&residuals),
            residuals,
        })
    }
}

/// Kernel CRC over complex-fused features, frozen after [`fit`].
#[derive(Clone, Debug)]
pub struct KernelCrcModel {
    features: Vec<ComplexFeature>,
    params: KernelParams,
    image_dims: Option<(usize, usize)>,
    solver: CrcSolver,
}

/// Transforms every training image, builds the Gram matrix and factorizes
/// the system for `form`.
pub fn fit(
    train: &LabeledDataset,
    sigma: f64,
    lambda: f64,
    form: SolverForm,
) -> Result<KernelCrcModel> {
    let features = train
        .samples
        .par_iter()
        .map(|s| representation::transform(&s.image))
        .collect::<Result<Vec<_>>>()?;
    let mut model = KernelCrcModel::fit_features(
        features,
        train.labels(),
        train.class_count(),
        sigma,
        lambda,
        form,
    )?;
    model.image_dims = Some(train.image_dims());
    Ok(model)
}

impl KernelCrcModel {
    /// Fits on already-transformed features.
    pub fn fit_features(
        features: Vec<ComplexFeature>,
        labels: Vec<usize>,
        class_count: usize,
        sigma: f64,
        lambda: f64,
        form: SolverForm,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        let params = KernelParams::new(sigma)?;
        if features.len() != labels.len() {
            return Err(Error::Domain(format!(
                "{} features but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let gram = kernel::gram_matrix(&features, params)?;
        let solver = CrcSolver::from_gram(gram, labels, class_count, lambda, form)?;
        Ok(KernelCrcModel {
            features,
            params,
            image_dims: None,
            solver,
        })
    }

    pub fn with_normalized_residuals(mut self, on: bool) -> Self {
        self.solver = self.solver.with_normalized_residuals(on);
        self
    }

    pub fn solver(&self) -> &CrcSolver {
        &self.solver
    }

    pub fn train_features(&self) -> &[ComplexFeature] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        self.solver.labels()
    }

    pub fn gram(&self) -> &GramMatrix {
        self.solver.gram()
    }

    pub fn sigma(&self) -> f64 {
        self.params.sigma()
    }

    pub fn lambda(&self) -> f64 {
        self.solver.lambda()
    }

    pub fn form(&self) -> SolverForm {
        self.solver.form()
    }

    pub fn kernel_vector(&self, z: &ComplexFeature) -> Result<KernelVector> {
        kernel::kernel_vector(&self.features, z, self.params)
    }

    pub fn solve_alpha(&self, kz: &KernelVector) -> Result<Coefficients> {
        self.solver.solve_alpha(kz)
    }

    pub fn solve_beta(&self, kz: &KernelVector) -> Result<Coefficients> {
        self.solver.solve_beta(kz)
    }

    pub fn class_residuals(&self, kz: &KernelVector, theta: &Coefficients) -> Result<Vec<f64>> {
        self.solver.class_residuals(kz, theta)
    }

    pub fn classify_feature(&self, z: &ComplexFeature) -> Result<Prediction> {
        self.solver.predict(&self.kernel_vector(z)?)
    }

    pub fn classify(&self, img: &GrayImage) -> Result<Prediction> {
        if let Some(dims) = self.image_dims {
            if img.dims() != dims {
                return Err(Error::Domain(format!(
                    "image is {:?} but the model was trained on {:?}",
                    img.dims(),
                    dims
                )));
            }
        }
        self.classify_feature(&representation::transform(img)?)
    }
}

/// Plain CRC on raw pixel vectors: `theta = (X^T X + lambda I)^-1 X^T y`.
#[derive(Clone, Debug)]
pub struct LinearCrcModel {
    columns: Vec<FeatureVector>,
    members: Vec<Vec<usize>>,
    image_dims: (usize, usize),
    lambda: f64,
    factor: SpdFactor,
    normalize_residuals: bool,
}

pub fn linear_crc_fit(train: &LabeledDataset, lambda: f64) -> Result<LinearCrcModel> {
    check_lambda(lambda)?;
    let columns: Vec<FeatureVector> = train
        .samples
        .iter()
        .map(|s| representation::flatten(&s.image))
        .collect();
    let members = class_members(&train.labels(), train.class_count())?;
    let n = columns.len();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| dot(&columns[i].0, &columns[j].0)).collect())
        .collect();
    let mut system = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            system[(i, i + offset)] = v;
            system[(i + offset, i)] = v;
        }
        system[(i, i)] += lambda;
    }
    Ok(LinearCrcModel {
        columns,
        members,
        image_dims: train.image_dims(),
        lambda,
        factor: SpdFactor::new(system)?,
        normalize_residuals: false,
    })
}

pub fn linear_crc_classify(model: &LinearCrcModel, img: &GrayImage) -> Result<Prediction> {
    model.classify(img)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

impl LinearCrcModel {
    pub fn with_normalized_residuals(mut self, on: bool) -> Self {
        self.normalize_residuals = on;
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_train(&self) -> usize {
        self.columns.len()
    }

    pub fn coefficients(&self, y: &FeatureVector) -> Result<Coefficients> {
        if y.len() != self.columns[0].len() {
            return Err(Error::Domain(format!(
                "query of length {} for training vectors of length {}",
                y.len(),
                self.columns[0].len()
            )));
        }
        let xty = DVector::from_iterator(
            self.columns.len(),
            self.columns.iter().map(|c| dot(&c.0, &y.0)),
        );
        Ok(Coefficients(self.factor.solve(&xty).data.into()))
    }

    pub fn classify(&self, img: &GrayImage) -> Result<Prediction> {
        if img.dims() != self.image_dims {
            return Err(Error::Domain(format!(
                "image is {:?} but the model was trained on {:?}",
                img.dims(),
                self.image_dims
            )));
        }
        let y = representation::flatten(img);
        let theta = self.coefficients(&y)?;
        let residuals: Vec<f64> = self
            .members
            .iter()
            .map(|members| {
                let mut r = y.0.clone();
                for &j in members {
                    let t = theta.0[j];
                    for (ri, xj) in r.iter_mut().zip(&self.columns[j].0) {
                        *ri -= xj * t;
                    }
                }
                let d = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                if self.normalize_residuals {
                    normalize(d, &theta.0, members)
                } else {
                    d
                }
            })
            .collect();
        Ok(Prediction {
            class_id: argmin(&residuals),
            residuals,
        })
    }
}
