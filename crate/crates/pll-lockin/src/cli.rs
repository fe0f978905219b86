//! Command-line front end: argument parsing, config-file merging, command
//! dispatch, and exit-code policy. Every command renders through the export
//! helpers so file and stdout output are identical.

use crate::error::{Error, Result};
use crate::export::{
    equilibrium_rows, export_trajectory, format_float, scalar_rows, sweep_rows, OutputFormat,
};
use crate::lockin::conservative_lock_in;
use crate::model::{
    dissipativity_bound, equilibria, hold_in_frequency, FrequencyError, LoopParameters,
    PhaseState,
};
use crate::oracle::{integrate_trajectory, numeric_conservative_lock_in, trace_separatrix};
use crate::reduced::scales;
use crate::stability::pull_in_lower_bound;
use crate::sweep::{lock_in_sweep, SweepSpec};
use clap::{Args, Parser, Subcommand};
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

/// Default seed offset for separatrix traces.
const DEFAULT_EPSILON: f64 = 1e-7;
/// Default local error tolerance for integrating commands.
const DEFAULT_INTEGRATION_TOL: f64 = 1e-9;
/// Default frequency tolerance (relative to kvco) for the trace-based solver.
const DEFAULT_FREQUENCY_TOL: f64 = 1e-6;
/// Portrait runs integrate this many reduced time units.
const PORTRAIT_SPAN: f64 = 100.0;

#[derive(Parser, Debug)]
#[command(
    name = "pll-lockin",
    version,
    about = "Lock-in, pull-in and hold-in analysis of a second-order loop with a triangular phase detector"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Integrator branch time constant, seconds
    #[arg(long)]
    tau1: Option<f64>,
    /// Proportional branch time constant, seconds (0 = pure lag filter)
    #[arg(long)]
    tau2: Option<f64>,
    /// Loop gain, rad/s
    #[arg(long)]
    kvco: Option<f64>,
    /// Free-running frequency error, rad/s
    #[arg(long)]
    omega: Option<f64>,
    /// Tolerance: local error for integrating commands, frequency resolution
    /// relative to kvco for `lockin --oracle`
    #[arg(long)]
    tol: Option<f64>,
    /// Seed offset for separatrix traces
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output encoding: csv or json
    #[arg(long)]
    format: Option<String>,
    /// Write output here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Read key=value defaults from this file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List equilibria with their stability kinds
    Equilibria {
        #[command(flatten)]
        common: CommonArgs,
        /// Equilibrium index range, inclusive, e.g. -1..2
        #[arg(long)]
        m_range: Option<String>,
    },
    /// Hold-in frequency and the loop-filter confinement bound
    Holdin {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Guaranteed pull-in range from the global stability condition
    Pullin {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Conservative lock-in frequency (closed form, or traced with --oracle)
    Lockin {
        #[command(flatten)]
        common: CommonArgs,
        /// Solve by separatrix tracing instead of the first-integral system
        #[arg(long)]
        oracle: bool,
    },
    /// Worst-case frequency-step transient plus the saddle separatrix
    Portrait {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Lock-in frequency across a range of loop gains
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Smallest gain of the sweep
        #[arg(long)]
        kvco_min: Option<f64>,
        /// Largest gain of the sweep
        #[arg(long)]
        kvco_max: Option<f64>,
        /// Number of sweep points
        #[arg(long)]
        points: Option<usize>,
    },
}

/// What a run should do, after flags and config file have been merged.
#[derive(Debug, Clone, PartialEq)]
pub enum RunAction {
    Equilibria { omega: f64, m_range: (i32, i32) },
    HoldIn,
    PullIn,
    LockIn { oracle: bool },
    Portrait { omega: f64 },
    Sweep { spec: SweepSpec },
}

/// A fully resolved run: parameters, action, and output disposition.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: LoopParameters,
    pub action: RunAction,
    pub tol: Option<f64>,
    pub epsilon: f64,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
}

/// Layered lookup: explicit flag first, then the config file.
struct Resolver {
    file: HashMap<String, String>,
}

impl Resolver {
    fn new(config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };
        Ok(Resolver { file })
    }

    fn f64(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("config key {key}: {v:?} is not a number"))
                })
            })
            .transpose()
    }

    fn require_f64(&self, flag: Option<f64>, key: &str) -> Result<f64> {
        self.f64(flag, key)?.ok_or_else(|| {
            Error::InvalidInput(format!("{key} is required (pass --{key} or set it in --config)"))
        })
    }

    fn usize(&self, flag: Option<usize>, key: &str) -> Result<Option<usize>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    Error::InvalidInput(format!("config key {key}: {v:?} is not a count"))
                })
            })
            .transpose()
    }

    fn string(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.file.get(key).cloned())
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.file.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(Error::InvalidInput(format!(
                "config key {key}: {other:?} is not true/false"
            ))),
        }
    }
}

fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidInput(format!(
                "{} line {}: expected key=value, got {line:?}",
                path.display(),
                i + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_m_range(text: &str) -> Result<(i32, i32)> {
    let err = || {
        Error::InvalidInput(format!(
            "m-range {text:?} is not of the form LO..HI with integers"
        ))
    };
    let (lo, hi) = text.split_once("..").ok_or_else(err)?;
    let lo: i32 = lo.trim().parse().map_err(|_| err())?;
    let hi: i32 = hi.trim().parse().map_err(|_| err())?;
    if lo > hi {
        return Err(Error::InvalidInput(format!(
            "m-range {text:?} is reversed"
        )));
    }
    Ok((lo, hi))
}

fn resolve(common: CommonArgs, extra: ExtraArgs) -> Result<RunConfig> {
    let r = Resolver::new(common.config.as_deref())?;
    let tau1 = r.require_f64(common.tau1, "tau1")?;
    let tau2 = r.require_f64(common.tau2, "tau2")?;

    let action = match extra {
        ExtraArgs::Equilibria { m_range } => {
            let m_text = r
                .string(m_range, "m-range")
                .unwrap_or_else(|| "-1..2".to_string());
            RunAction::Equilibria {
                omega: r.require_f64(common.omega, "omega")?,
                m_range: parse_m_range(&m_text)?,
            }
        }
        ExtraArgs::HoldIn => RunAction::HoldIn,
        ExtraArgs::PullIn => RunAction::PullIn,
        ExtraArgs::LockIn { oracle } => RunAction::LockIn {
            oracle: r.flag(oracle, "oracle")?,
        },
        ExtraArgs::Portrait => RunAction::Portrait {
            omega: r.require_f64(common.omega, "omega")?,
        },
        ExtraArgs::Sweep {
            kvco_min,
            kvco_max,
            points,
        } => {
            let min = r.require_f64(kvco_min, "kvco-min")?;
            let max = r.require_f64(kvco_max, "kvco-max")?;
            let points = r.usize(points, "points")?.unwrap_or(16);
            RunAction::Sweep {
                spec: SweepSpec::new(min, max, points)?,
            }
        }
    };

    // the sweep supplies its own gains; every other command needs one
    let kvco = match action {
        RunAction::Sweep { .. } => r.f64(common.kvco, "kvco")?.unwrap_or(1.0),
        _ => r.require_f64(common.kvco, "kvco")?,
    };

    let format = match r.string(common.format, "format") {
        Some(text) => text.parse::<OutputFormat>()?,
        None => OutputFormat::Csv,
    };

    Ok(RunConfig {
        params: LoopParameters::new(tau1, tau2, kvco)?,
        action,
        tol: r.f64(common.tol, "tol")?,
        epsilon: r.f64(common.epsilon, "epsilon")?.unwrap_or(DEFAULT_EPSILON),
        format,
        output: common.output.or_else(|| {
            r.file.get("output").map(PathBuf::from)
        }),
    })
}

enum ExtraArgs {
    Equilibria { m_range: Option<String> },
    HoldIn,
    PullIn,
    LockIn { oracle: bool },
    Portrait,
    Sweep {
        kvco_min: Option<f64>,
        kvco_max: Option<f64>,
        points: Option<usize>,
    },
}

fn split(cli: Cli) -> (CommonArgs, ExtraArgs) {
    match cli.command {
        Command::Equilibria { common, m_range } => (common, ExtraArgs::Equilibria { m_range }),
        Command::Holdin { common } => (common, ExtraArgs::HoldIn),
        Command::Pullin { common } => (common, ExtraArgs::PullIn),
        Command::Lockin { common, oracle } => (common, ExtraArgs::LockIn { oracle }),
        Command::Portrait { common } => (common, ExtraArgs::Portrait),
        Command::Sweep {
            common,
            kvco_min,
            kvco_max,
            points,
        } => (
            common,
            ExtraArgs::Sweep {
                kvco_min,
                kvco_max,
                points,
            },
        ),
    }
}

/// Parse a full argument vector (including the program name) into a resolved
/// run configuration.
pub fn parse_run_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let (common, extra) = split(cli);
    resolve(common, extra)
}

/// Whole-process entry point: parse the real argument vector (letting clap
/// handle `--help`, `--version` and usage errors), run, print, and map any
/// error to an exit code.
pub fn main_entry() -> i32 {
    let (common, extra) = split(Cli::parse());
    let outcome = resolve(common, extra).and_then(|config| run(&config));
    match outcome {
        Ok(text) => {
            if !text.is_empty() {
                print!("{text}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Execute a resolved run. Returns the text for stdout; when an output path
/// is set the text goes to that file instead and the returned string is
/// empty. The portrait command writes a second file (or stdout block) with
/// the separatrix next to the transient.
pub fn run(config: &RunConfig) -> Result<String> {
    let params = &config.params;
    match &config.action {
        RunAction::Equilibria { omega, m_range } => {
            let points = equilibria(
                params,
                FrequencyError::new(*omega),
                m_range.0..=m_range.1,
            )?;
            deliver(config, equilibrium_rows(&points, config.format))
        }
        RunAction::HoldIn => {
            let rows = [
                ("hold_in", format_float(hold_in_frequency(params))),
                ("filter_bound", format_float(dissipativity_bound(params))),
            ];
            deliver(config, scalar_rows(&rows, config.format))
        }
        RunAction::PullIn => {
            let report = pull_in_lower_bound(params);
            let rows = [
                (
                    "pull_in_lower_bound",
                    format_float(report.pull_in_lower_bound),
                ),
                ("beta0_at_bound", format_float(report.beta0)),
                ("condition_holds", report.condition_holds.to_string()),
                ("bound_is_trivial", report.bound_is_trivial.to_string()),
            ];
            deliver(config, scalar_rows(&rows, config.format))
        }
        RunAction::LockIn { oracle } => {
            let text = if *oracle {
                let tol = config.tol.unwrap_or(DEFAULT_FREQUENCY_TOL);
                let omega_lc = numeric_conservative_lock_in(params, config.epsilon, tol)?;
                scalar_rows(
                    &[
                        ("omega_lc", format_float(omega_lc)),
                        ("method", "separatrix-trace".to_string()),
                    ],
                    config.format,
                )
            } else {
                let sol = conservative_lock_in(params)?;
                scalar_rows(
                    &[
                        ("omega_lc", format_float(sol.omega_lc)),
                        ("y_ab", format_float(sol.y_ab)),
                        ("case", format!("{:?}", sol.case_tag)),
                        ("residual_a", format_float(sol.residual_a)),
                        ("residual_b", format_float(sol.residual_b)),
                        ("iterations", sol.iterations.to_string()),
                    ],
                    config.format,
                )
            };
            deliver(config, text)
        }
        RunAction::Portrait { omega } => {
            let om = FrequencyError::new(*omega);
            let tol = config.tol.unwrap_or(DEFAULT_INTEGRATION_TOL);
            let k = params.kvco();
            let start = PhaseState::new(
                -params.tau1() * omega / k,
                2.0 * PI - FRAC_PI_2 * omega / k,
            );
            let span = PORTRAIT_SPAN * scales(params).a;
            let transient = integrate_trajectory(start, params, om, span, tol)?;
            let separatrix = trace_separatrix(params, om, config.epsilon, tol)?;
            let transient_text = export_trajectory(&transient, params, om, config.format);
            let separatrix_text = export_trajectory(&separatrix, params, om, config.format);
            match &config.output {
                Some(path) => {
                    write_text(path, &transient_text)?;
                    write_text(&sibling_path(path, "separatrix"), &separatrix_text)?;
                    Ok(String::new())
                }
                None => Ok(format!(
                    "# transient\n{transient_text}# separatrix\n{separatrix_text}"
                )),
            }
        }
        RunAction::Sweep { spec } => {
            let rows = lock_in_sweep(params.tau1(), params.tau2(), spec)?;
            deliver(config, sweep_rows(&rows, config.format))
        }
    }
}

fn deliver(config: &RunConfig, text: String) -> Result<String> {
    match &config.output {
        Some(path) => {
            write_text(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Derive the companion file name for the separatrix: `dir/name.tag.ext`.
fn sibling_path(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}.{tag}.{ext}"),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

/// Process exit code for an error: 2 for numeric failures that a different
/// tolerance, seed or bracket might cure, 1 for anything malformed.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::NoBracket { .. }
        | Error::Undecided { .. }
        | Error::StepUnderflow { .. }
        | Error::SignFlip { .. }
        | Error::SingularPoint { .. } => 2,
        _ => 1,
    }
}
