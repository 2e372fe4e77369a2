//! Experiment harness: first-n splits, sigma sweeps, solver comparisons and
//! CSV reports.
//!
//! Every run is deterministic. Test samples are classified in parallel but
//! collected in dataset order, and sweep points are collected in exponent
//! order, so reports are byte-identical at any thread count.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::crc::{self, Prediction, SolverForm};
use crate::dataset::{self, GrayImage, LabeledDataset, LoadOptions, SplitSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Method {
    /// Complex fusion, Gaussian kernel, kernel CRC.
    #[default]
    ComplexFace,
    /// CRC on raw pixels.
    LinearCrc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ComplexFace => "complexface",
            Method::LinearCrc => "linear_crc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "complexface" => Ok(Method::ComplexFace),
            "linear_crc" | "crc" => Ok(Method::LinearCrc),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?}, expected complexface or linear_crc"
            ))),
        }
    }
}

/// Where an experiment's images come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Directory {
        root: PathBuf,
        load: LoadOptions,
    },
    Synthetic {
        seed: u64,
        classes: usize,
        per_class: usize,
        width: usize,
        height: usize,
        noise_sd: f64,
    },
}

impl DataSource {
    pub fn directory(root: impl Into<PathBuf>, resize_to: (usize, usize)) -> Self {
        DataSource::Directory {
            root: root.into(),
            load: LoadOptions {
                resize_to: Some(resize_to),
                center_crop: false,
            },
        }
    }

    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DataSource::Directory { root, load } => dataset::load_dataset_with(root, load),
            DataSource::Synthetic {
                seed,
                classes,
                per_class,
                width,
                height,
                noise_sd,
            } => {
                dataset::generate_synthetic(*seed, *classes, *per_class, *width, *height, *noise_sd)
            }
        }
    }

    /// Short label used in reports.
    pub fn name(&self) -> String {
        match self {
            DataSource::Directory { root, .. } => root
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| root.display().to_string()),
            DataSource::Synthetic { seed, .. } => format!("synthetic-{seed}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub train_per_class: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub form: SolverForm,
    pub method: Method,
    pub normalize_residuals: bool,
}

impl ExperimentConfig {
    /// Reference hyperparameters: `sigma = 1e10`, `lambda = 0.01`, beta form.
    pub fn new(data: DataSource, train_per_class: usize) -> Self {
        ExperimentConfig {
            data,
            train_per_class,
            sigma: crate::DEFAULT_SIGMA,
            lambda: crate::DEFAULT_LAMBDA,
            form: SolverForm::default(),
            method: Method::default(),
            normalize_residuals: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma <= 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if self.lambda <= 0.0 || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        SplitSpec::new(self.train_per_class)?;
        Ok(())
    }
}

/// Outcome for one test image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleOutcome {
    pub true_class: usize,
    pub predicted: usize,
    pub min_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub method: Method,
    pub dataset: String,
    pub train_per_class: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub form: SolverForm,
    pub n_train: usize,
    pub n_test: usize,
    pub n_errors: usize,
    pub error_rate_pct: f64,
    pub per_sample: Vec<SampleOutcome>,
}

fn error_rate(n_errors: usize, n_test: usize) -> f64 {
    100.0 * n_errors as f64 / n_test as f64
}

/// Loads the configured data and runs one experiment on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ds = cfg.data.load()?;
    run_on_dataset(cfg, &ds)
}

/// Runs `cfg` on an already-loaded dataset (its `data` field only names it).
pub fn run_on_dataset(cfg: &ExperimentConfig, ds: &LabeledDataset) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (train, test) = dataset::split_first_n(ds, SplitSpec::new(cfg.train_per_class)?)?;

    let predictions: Vec<Prediction> = match cfg.method {
        Method::ComplexFace => {
            let model = crc::fit(&train, cfg.sigma, cfg.lambda, cfg.form)?
                .with_normalized_residuals(cfg.normalize_residuals);
            classify_all(&test, |img| model.classify(img))?
        }
        Method::LinearCrc => {
            let model = crc::linear_crc_fit(&train, cfg.lambda)?
                .with_normalized_residuals(cfg.normalize_residuals);
            classify_all(&test, |img| model.classify(img))?
        }
    };

    let per_sample: Vec<SampleOutcome> = test
        .samples
        .iter()
        .zip(&predictions)
        .map(|(s, p)| SampleOutcome {
            true_class: s.class_id,
            predicted: p.class_id,
            min_residual: p.min_residual(),
        })
        .collect();
    let n_errors = per_sample
        .iter()
        .filter(|o| o.true_class != o.predicted)
        .count();

    Ok(ExperimentReport {
        method: cfg.method,
        dataset: cfg.data.name(),
        train_per_class: cfg.train_per_class,
        sigma: cfg.sigma,
        lambda: cfg.lambda,
        form: cfg.form,
        n_train: train.len(),
        n_test: test.len(),
        n_errors,
        error_rate_pct: error_rate(n_errors, test.len()),
        per_sample,
    })
}

fn classify_all<F>(test: &LabeledDataset, classify: F) -> Result<Vec<Prediction>>
where
    F: Fn(&GrayImage) -> Result<Prediction> + Sync,
{
    test.samples
        .par_iter()
        .map(|s| classify(&s.image))
        .collect()
}

/// `10^e` as the correctly rounded literal `1e{e}`.
pub fn sigma_from_exponent(e: i32) -> f64 {
    // powi accumulates rounding error for exponents past 22.
    format!("1e{e}").parse().expect("float literal")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub exponent: i32,
    pub error_rate_pct: f64,
    pub n_test: usize,
    pub n_errors: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSweepResult {
    pub form: SolverForm,
    pub method: Method,
    pub points: Vec<SweepPoint>,
}

impl SigmaSweepResult {
    pub fn at(&self, exponent: i32) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.exponent == exponent)
    }
}

/// One experiment per `sigma = 10^e`, `e` in `exp_min..=exp_max`.
pub fn sweep_sigma(cfg: &ExperimentConfig, exp_min: i32, exp_max: i32) -> Result<SigmaSweepResult> {
    if exp_min > exp_max {
        return Err(Error::InvalidParameter(format!(
            "empty exponent range {exp_min}..={exp_max}"
        )));
    }
    cfg.validate()?;
    let ds = cfg.data.load()?;
    sweep_sigma_on(cfg, &ds, exp_min, exp_max)
}

pub fn sweep_sigma_on(
    cfg: &ExperimentConfig,
    ds: &LabeledDataset,
    exp_min: i32,
    exp_max: i32,
) -> Result<SigmaSweepResult> {
    let points = (exp_min..=exp_max)
        .into_par_iter()
        .map(|e| {
            let point_cfg = ExperimentConfig {
                sigma: sigma_from_exponent(e),
                ..cfg.clone()
            };
            let r = run_on_dataset(&point_cfg, ds)?;
            Ok(SweepPoint {
                exponent: e,
                error_rate_pct: r.error_rate_pct,
                n_test: r.n_test,
                n_errors: r.n_errors,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SigmaSweepResult {
        form: cfg.form,
        method: cfg.method,
        points,
    })
}

/// Alpha and beta forms on the same split, in that order.
pub fn compare_forms(cfg: &ExperimentConfig) -> Result<(ExperimentReport, ExperimentReport)> {
    cfg.validate()?;
    let ds = cfg.data.load()?;
    compare_forms_on(cfg, &ds)
}

pub fn compare_forms_on(
    cfg: &ExperimentConfig,
    ds: &LabeledDataset,
) -> Result<(ExperimentReport, ExperimentReport)> {
    let with = |form| ExperimentConfig {
        form,
        ..cfg.clone()
    };
    Ok((
        run_on_dataset(&with(SolverForm::Alpha), ds)?,
        run_on_dataset(&with(SolverForm::Beta), ds)?,
    ))
}

pub const REPORT_CSV_HEADER: &str =
    "method,dataset,train_per_class,sigma,lambda,form,n_train,n_test,n_errors,error_rate_pct";
pub const SWEEP_CSV_HEADER: &str = "sigma_exp,error_rate_pct,n_test,n_errors";

/// LF-terminated CSV with a header row.
pub trait ToCsv {
    fn to_csv(&self) -> String;
}

fn csv_field(s: &str) -> String {
    s.replace([',', '\n', '\r', '"'], "_")
}

impl ExperimentReport {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{},{},{},{},{},{:.2}",
            self.method,
            csv_field(&self.dataset),
            self.train_per_class,
            self.sigma,
            self.lambda,
            self.form,
            self.n_train,
            self.n_test,
            self.n_errors,
            self.error_rate_pct
        )
    }
}

impl ToCsv for ExperimentReport {
    fn to_csv(&self) -> String {
        std::slice::from_ref(self).to_csv()
    }
}

impl ToCsv for [ExperimentReport] {
    fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_CSV_HEADER}\n");
        for r in self {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

impl ToCsv for Vec<ExperimentReport> {
    fn to_csv(&self) -> String {
        self.as_slice().to_csv()
    }
}

impl ToCsv for SigmaSweepResult {
    fn to_csv(&self) -> String {
        let mut out = format!("{SWEEP_CSV_HEADER}\n");
        for p in &self.points {
            writeln!(
                out,
                "{},{:.2},{},{}",
                p.exponent, p.error_rate_pct, p.n_test, p.n_errors
            )
            .unwrap();
        }
        out
    }
}

pub fn write_csv<T: ToCsv + ?Sized>(table: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.to_csv()).map_err(|e| Error::io(path, e))
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {}", "method", self.method)?;
        writeln!(f, "{:<16} {}", "dataset", self.dataset)?;
        writeln!(f, "{:<16} {}", "train/class", self.train_per_class)?;
        writeln!(f, "{:<16} {:e}", "sigma", self.sigma)?;
        writeln!(f, "{:<16} {}", "lambda", self.lambda)?;
        if self.method == Method::ComplexFace {
            writeln!(f, "{:<16} {}", "form", self.form)?;
        }
        writeln!(f, "{:<16} {}", "train samples", self.n_train)?;
        writeln!(f, "{:<16} {}", "test samples", self.n_test)?;
        writeln!(f, "{:<16} {}", "errors", self.n_errors)?;
        write!(f, "{:<16} {:.2}%", "error rate", self.error_rate_pct)
    }
}

impl fmt::Display for SigmaSweepResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method {}  form {}", self.method, self.form)?;
        writeln!(f, "{:>9}  {:>8}  {:>6}", "sigma", "error %", "errors")?;
        for p in &self.points {
            writeln!(
                f,
                "{:>9}  {:>8.2}  {:>6}",
                format!("1e{}", p.exponent),
                p.error_rate_pct,
                format!("{}/{}", p.n_errors, p.n_test)
            )?;
        }
        Ok(())
    }
}
