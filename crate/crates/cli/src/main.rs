use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Parser, Subcommand};
use serde::Serialize;

use regime_split::binary::{detect_symmetric, variance_contamination_detect};
use regime_split::calibration::{formula_threshold, mc_calibrate, Pipeline, FORMULA_NOTE};
use regime_split::generators::rng_for;
use regime_split::harness::{self, run_plan};
use regime_split::multiclass::{detect_multiclass, DEFAULT_MAX_CLASSES};
use regime_split::multivariate::{detect_multivariate_binary, detect_multivariate_multiclass};
use regime_split::regression::detect_switching_regression_with;
use regime_split::{DetectionConfig, ScanGrid, ThresholdSpec, Variant};

mod csvio;
mod error;
mod kv;
mod specs;

use error::CliError;
use specs::{Mode, ThresholdArg};

#[derive(Parser)]
#[command(
    name = "regime-split",
    version,
    about = "Detect random regime switches in samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic sample from a generator spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the latent class of every observation.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Overrides the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte Carlo threshold from homogeneous samples of a generator spec.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a detector on a data file.
    Detect {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// fixed:<C>, formula:<sigma>,<rho>,<alpha> or mc:<calibration.json>
        #[arg(long)]
        threshold: String,
        /// Largest band half-width; the class separation bound for multiclass modes.
        #[arg(long)]
        b_max: Option<f64>,
        #[arg(long)]
        max_classes: Option<usize>,
        /// minimum-norm, influence-sum or leverage-scaled (regression mode).
        #[arg(long)]
        track: Option<String>,
        /// Smallest sample the detectors accept.
        #[arg(long, default_value_t = 20)]
        n_min: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a preset or a plan file and write the result table.
    #[command(group(ArgGroup::new("source").required(true).args(["preset", "plan"])))]
    Experiment {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn read_doc(path: &Path) -> Result<kv::Document, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    kv::Document::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write(path, &text)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate {
            spec,
            out,
            labels,
            seed,
        } => {
            let m = specs::model(&read_doc(&spec)?)?;
            let seed = seed.or(m.seed).unwrap_or(0);
            let g = m.kind.sample_with(m.n, &mut rng_for(seed, 0))?;
            write(&out, &csvio::format_dataset(&g.data))?;
            if let Some(path) = labels {
                write(&path, &csvio::format_labels(&g.labels))?;
            }
            Ok(())
        }
        Command::Calibrate {
            model,
            alpha,
            trials,
            seed,
            out,
            workers,
        } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(CliError::Usage(format!(
                    "--alpha must lie in (0, 1), got {alpha}"
                )));
            }
            if trials < 100 {
                return Err(CliError::Usage(format!(
                    "--trials must be >= 100, got {trials}"
                )));
            }
            let m = specs::model(&read_doc(&model)?)?;
            let grid = ScanGrid::default();
            let pipeline = match m.mode {
                Mode::Binary | Mode::Multiclass => Pipeline::Univariate {
                    variant: Variant::Symmetric,
                    grid,
                },
                Mode::Variance => Pipeline::Univariate {
                    variant: Variant::VarianceContamination,
                    grid,
                },
                Mode::Multivariate | Mode::MultivariateMulticlass => {
                    Pipeline::Multivariate { grid }
                }
                Mode::Regression => Pipeline::Regression {
                    grid,
                    track: m.track,
                },
            };
            let mut r = harness::install(workers, || {
                mc_calibrate(&m.kind, &pipeline, m.n, alpha, trials, seed)
            })??;
            let formula = formula_threshold(m.n, 1.0, 0.0, alpha)?;
            r.notes.push(format!(
                "formula threshold at N={} (sigma=1, rho=0, alpha={alpha}): {formula}",
                m.n
            ));
            r.notes.push(FORMULA_NOTE.to_string());
            write_json(&out, &r)
        }
        Command::Detect {
            data,
            mode,
            threshold,
            b_max,
            max_classes,
            track,
            n_min,
            out,
        } => {
            let t = specs::threshold(&threshold)?;
            if let Some(b) = b_max {
                if !(b > 0.0) || !b.is_finite() {
                    return Err(CliError::Usage(format!("--b-max must be > 0, got {b}")));
                }
            }
            let track = track
                .as_deref()
                .map(specs::parse_track)
                .transpose()?
                .unwrap_or_default();
            let table = csvio::read(&data)?;
            let resolve = |n: usize| -> Result<(f64, Option<String>), CliError> {
                Ok(match &t {
                    ThresholdArg::Fixed(c) => (*c, None),
                    ThresholdArg::Formula { sigma, rho, alpha } => {
                        (formula_threshold(n, *sigma, *rho, *alpha)?, None)
                    }
                    ThresholdArg::Calibrated(r) => (
                        r.c,
                        (r.n != n).then(|| {
                            format!(
                                "threshold was calibrated for N={} but the data has N={n}",
                                r.n
                            )
                        }),
                    ),
                })
            };
            let cfg = |c: f64| {
                DetectionConfig::new(ThresholdSpec::Fixed { c })
                    .with_grid(ScanGrid::Breakpoints { b_max })
                    .with_n_min(n_min)
            };
            let band = || {
                b_max.ok_or_else(|| {
                    CliError::Usage("multiclass modes need --b-max (the class separation)".into())
                })
            };
            let max_classes = max_classes.unwrap_or(DEFAULT_MAX_CLASSES);
            let warn = |note: &Option<String>| {
                if let Some(n) = note {
                    eprintln!("warning: {n}");
                }
            };
            match mode {
                Mode::Binary | Mode::Variance => {
                    let s = table.univariate()?;
                    let (c, note) = resolve(s.len())?;
                    let mut r = if mode == Mode::Binary {
                        detect_symmetric(&s, &cfg(c), c)?
                    } else {
                        variance_contamination_detect(&s, &cfg(c), c)?
                    };
                    r.diagnostics.extend(note);
                    write_json(&out, &r)
                }
                Mode::Multiclass => {
                    let s = table.univariate()?;
                    let (c, note) = resolve(s.len())?;
                    warn(&note);
                    let r = detect_multiclass(&s, &cfg(c), c, band()?, max_classes)?;
                    write_json(&out, &r)
                }
                Mode::Multivariate => {
                    let v = table.vectors()?;
                    let (c, note) = resolve(v.len())?;
                    let mut r = detect_multivariate_binary(&v, &cfg(c), c)?;
                    r.diagnostics.extend(note);
                    write_json(&out, &r)
                }
                Mode::MultivariateMulticlass => {
                    let v = table.vectors()?;
                    let (c, note) = resolve(v.len())?;
                    warn(&note);
                    let r = detect_multivariate_multiclass(&v, &cfg(c), c, band()?, max_classes)?;
                    write_json(&out, &r)
                }
                Mode::Regression => {
                    let d = table.regression()?;
                    let (c, note) = resolve(d.n())?;
                    warn(&note);
                    let r = detect_switching_regression_with(&d, &cfg(c), c, track)?;
                    write_json(&out, &r)
                }
            }
        }
        Command::Experiment {
            preset,
            plan,
            replications,
            seed,
            out,
            json,
            workers,
        } => {
            let mut p = match (preset, plan) {
                (Some(name), _) => {
                    harness::preset(&name).map_err(|e| CliError::Usage(e.to_string()))?
                }
                (None, Some(path)) => specs::plan(&read_doc(&path)?)?,
                (None, None) => unreachable!("clap enforces the source group"),
            };
            if let Some(r) = replications {
                if r == 0 {
                    return Err(CliError::Usage("--replications must be >= 1".into()));
                }
                p.replications = r;
            }
            if let Some(s) = seed {
                p.seed = s;
            }
            let started = Instant::now();
            let table = run_plan(&p, workers)?;
            eprintln!(
                "{}: {} cells x {} replications in {:.1?}",
                table.name,
                table.cells.len(),
                table.replications,
                started.elapsed()
            );
            write(&out, &table.to_csv())?;
            if let Some(path) = json {
                write_json(&path, &table)?;
            }
            Ok(())
        }
    }
}
