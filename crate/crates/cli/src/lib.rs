//! Command-line front end for the `complexface` library.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or numeric errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use complexface::dataset::{self, LoadOptions};
use complexface::evaluation::{self, sigma_from_exponent, ToCsv};
use complexface::{DataSource, Error, ExperimentConfig, Method, SolverForm};

/// Written next to synthetic trees so they load at native size without `--resize`.
pub const SYNTH_MANIFEST: &str = "complexface-synth.txt";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "complexface",
    version,
    about = "Complex-fused kernel collaborative representation classification"
)]
struct Cli {
    /// Worker threads; results are identical for every value.
    #[arg(long, global = true, env = "COMPLEXFACE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on the first n images per class and report the test error.
    FitEval {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Solver form: alpha or beta
        #[arg(long, default_value = "beta", value_parser = parse_form)]
        form: SolverForm,
        /// Classifier: complexface or linear_crc
        #[arg(long, default_value = "complexface", value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run one experiment per sigma = 10^e.
    SweepSigma {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Solver form: alpha or beta
        #[arg(long, default_value = "beta", value_parser = parse_form)]
        form: SolverForm,
        #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
        exp_min: i32,
        #[arg(long, default_value_t = 24, allow_negative_numbers = true)]
        exp_max: i32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the alpha and beta solver forms on the same split.
    CompareForms {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Plain CRC on raw pixels.
    BaselineCrc {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = complexface::DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long)]
        normalize_residuals: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a seeded synthetic dataset as a PGM tree.
    Synth {
        /// Number of classes
        #[arg(long)]
        classes: usize,
        /// Images per class
        #[arg(long)]
        per_class: usize,
        /// Image size as WxH.
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        /// Standard deviation of the per-pixel Gaussian noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset root with one subdirectory per class.
    #[arg(long)]
    data: PathBuf,
    /// Resize every image to WxH (required unless the tree came from `synth`).
    #[arg(long, value_parser = parse_dims)]
    resize: Option<(usize, usize)>,
    /// Centre-crop to the target aspect ratio before resizing.
    #[arg(long)]
    center_crop: bool,
    /// Number of leading images per class used for training.
    #[arg(long)]
    train_per_class: usize,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Gaussian kernel width.
    #[arg(long, default_value = "1e10", conflicts_with = "sigma_exp")]
    sigma: f64,
    /// Kernel width as a power of ten (sigma = 10^E).
    #[arg(long, value_name = "E", allow_negative_numbers = true)]
    sigma_exp: Option<i32>,
    /// Ridge regularization.
    #[arg(long, default_value_t = complexface::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Divide class residuals by the norm of the class coefficients.
    #[arg(long)]
    normalize_residuals: bool,
}

impl ModelArgs {
    fn sigma(&self) -> f64 {
        self.sigma_exp
            .map(sigma_from_exponent)
            .unwrap_or(self.sigma)
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Also write the results as CSV.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w: usize = w
        .trim()
        .parse()
        .map_err(|_| format!("bad width in {s:?}"))?;
    let h: usize = h
        .trim()
        .parse()
        .map_err(|_| format!("bad height in {s:?}"))?;
    if w == 0 || h == 0 {
        return Err(format!("dimensions must be positive, got {s:?}"));
    }
    Ok((w, h))
}

fn parse_form(s: &str) -> Result<SolverForm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a dispatched command, already mapped to its exit code class.
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e)
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };

    let result = match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => complexface::with_threads(n, || dispatch(cli.command))
            .map_err(Failure::from)
            .and_then(|r| r),
        None => dispatch(cli.command),
    };

    match result {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn data_source(args: &DataArgs) -> Result<DataSource, Failure> {
    let resize_to = match args.resize {
        Some(dims) => Some(dims),
        None if args.data.join(SYNTH_MANIFEST).is_file() => None,
        None => {
            return Err(Failure::Usage(format!(
                "--resize WxH is required for {}",
                args.data.display()
            )))
        }
    };
    Ok(DataSource::Directory {
        root: args.data.clone(),
        load: LoadOptions {
            resize_to,
            center_crop: args.center_crop,
        },
    })
}

fn config(
    data: &DataArgs,
    sigma: f64,
    lambda: f64,
    form: SolverForm,
    method: Method,
    normalize_residuals: bool,
) -> Result<ExperimentConfig, Failure> {
    let cfg = ExperimentConfig {
        data: data_source(data)?,
        train_per_class: data.train_per_class,
        sigma,
        lambda,
        form,
        method,
        normalize_residuals,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_report<T: ToCsv + ?Sized>(table: &T, output: &OutputArgs) -> Result<(), Failure> {
    if let Some(path) = &output.report {
        evaluation::write_csv(table, path)?;
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::FitEval {
            data,
            model,
            form,
            method,
            output,
        } => {
            let cfg = config(
                &data,
                model.sigma(),
                model.lambda,
                form,
                method,
                model.normalize_residuals,
            )?;
            let report = evaluation::run_experiment(&cfg)?;
            write_report(&report, &output)?;
            Ok(format!("{report}\n"))
        }
        Command::SweepSigma {
            data,
            model,
            form,
            exp_min,
            exp_max,
            output,
        } => {
            if exp_min > exp_max {
                return Err(Failure::Usage(format!(
                    "--exp-min {exp_min} is greater than --exp-max {exp_max}"
                )));
            }
            let cfg = config(
                &data,
                model.sigma(),
                model.lambda,
                form,
                Method::ComplexFace,
                model.normalize_residuals,
            )?;
            let sweep = evaluation::sweep_sigma(&cfg, exp_min, exp_max)?;
            write_report(&sweep, &output)?;
            Ok(format!("dataset {}\n{sweep}", cfg.data.name()))
        }
        Command::CompareForms {
            data,
            model,
            output,
        } => {
            let cfg = config(
                &data,
                model.sigma(),
                model.lambda,
                SolverForm::Beta,
                Method::ComplexFace,
                model.normalize_residuals,
            )?;
            let (alpha, beta) = evaluation::compare_forms(&cfg)?;
            let text = format!(
                "{:<8} {:>8} {:>10}\n{:<8} {:>8.2} {:>10}\n{:<8} {:>8.2} {:>10}\n",
                "form",
                "error %",
                "errors",
                "alpha",
                alpha.error_rate_pct,
                format!("{}/{}", alpha.n_errors, alpha.n_test),
                "beta",
                beta.error_rate_pct,
                format!("{}/{}", beta.n_errors, beta.n_test),
            );
            write_report(&vec![alpha, beta], &output)?;
            Ok(text)
        }
        Command::BaselineCrc {
            data,
            lambda,
            normalize_residuals,
            output,
        } => {
            let cfg = config(
                &data,
                complexface::DEFAULT_SIGMA,
                lambda,
                SolverForm::Beta,
                Method::LinearCrc,
                normalize_residuals,
            )?;
            let report = evaluation::run_experiment(&cfg)?;
            write_report(&report, &output)?;
            Ok(format!("{report}\n"))
        }
        Command::Synth {
            classes,
            per_class,
            dims,
            noise,
            seed,
            out,
        } => {
            let ds = dataset::generate_synthetic(seed, classes, per_class, dims.0, dims.1, noise)?;
            dataset::write_dataset(&ds, &out)?;
            write_manifest(&out, seed, classes, per_class, dims, noise)?;
            Ok(format!(
                "wrote {} images ({classes} classes x {per_class}) of {}x{} to {}\n",
                ds.len(),
                dims.0,
                dims.1,
                out.display()
            ))
        }
    }
}

fn write_manifest(
    root: &Path,
    seed: u64,
    classes: usize,
    per_class: usize,
    dims: (usize, usize),
    noise: f64,
) -> Result<(), Failure> {
    let path = root.join(SYNTH_MANIFEST);
    let text = format!(
        "seed={seed}\nclasses={classes}\nper_class={per_class}\nwidth={}\nheight={}\nnoise_sd={noise}\n",
        dims.0, dims.1
    );
    std::fs::write(&path, text).map_err(|source| Failure::Data(Error::Io { path, source }))
}
