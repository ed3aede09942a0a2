//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

pub mod io;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{CommandFactory, Parser};
use log::{info, warn};

use crate::analysis::{consensus, graph_correlation_matrix_with};
use crate::error::Error;
use crate::graph::{EdgeVector, GraphSequence, WindowedSignals};
use crate::solver::{fit_dynamic, fit_static, DualSign, SolverConfig, ZUpdate};
use crate::synth::{change_profile, generate_with, ScenarioSpec};

use self::io::{FitOutputs, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  1  usage error (bad flags, missing required options, invalid parameters)
  2  data error (unreadable or malformed input, shape mismatch)
  3  numerical failure (singular system, divergence)

Every flag except --config can also be set in the --config file as a
`key=value` line; flags given on the command line win.";

#[derive(Parser, Debug)]
#[command(name = "dyngraph", version, allow_negative_numbers = true, about = "Learn time-varying graphs from multivariate signals", after_help = EXIT_HELP)]
struct Args {
    /// static | dynamic | synth | analyze | consensus
    #[arg(long)]
    mode: Option<String>,
    /// Signal CSV (fits), graph directory (analyze) or trial directory (consensus)
    #[arg(long)]
    input: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Samples per window
    #[arg(long)]
    window_len: Option<String>,
    /// Edge budget K
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    tau1: Option<String>,
    #[arg(long)]
    tau2: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    tol_obj: Option<String>,
    #[arg(long)]
    tol_res: Option<String>,
    /// anchored | recursive (alias: paper-literal)
    #[arg(long)]
    z_mode: Option<String>,
    /// ascent | descent (alias: paper-literal)
    #[arg(long)]
    dual_sign: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads for per-window work; 1 runs sequentially
    #[arg(long)]
    threads: Option<String>,
    /// Also write graph_corr.pgm
    #[arg(long)]
    heatmap: bool,
    /// Flat key=value file
    #[arg(long)]
    config: Option<PathBuf>,

    /// synth: number of nodes
    #[arg(long)]
    n_nodes: Option<String>,
    /// synth: edges per segment graph
    #[arg(long)]
    k_true: Option<String>,
    /// synth: number of segments
    #[arg(long)]
    segments: Option<String>,
    /// synth: windows per segment
    #[arg(long)]
    windows_per_segment: Option<String>,
    /// synth: noise standard deviation
    #[arg(long)]
    noise: Option<String>,
    /// synth: smoothing filter strength
    #[arg(long)]
    smooth_gamma: Option<String>,
    /// synth: fraction of silent nodes
    #[arg(long)]
    zero_fraction: Option<String>,
    /// consensus: per-trial weight threshold
    #[arg(long)]
    prob_threshold: Option<String>,
    /// consensus: an edge is kept when counted more than this many times
    #[arg(long)]
    count_threshold: Option<String>,
}

impl Args {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("mode", self.mode.clone()),
            ("input", self.input.clone()),
            ("out", self.out.clone()),
            ("window-len", self.window_len.clone()),
            ("k", self.k.clone()),
            ("gamma", self.gamma.clone()),
            ("eta", self.eta.clone()),
            ("alpha", self.alpha.clone()),
            ("lambda", self.lambda.clone()),
            ("tau1", self.tau1.clone()),
            ("tau2", self.tau2.clone()),
            ("max-iter", self.max_iter.clone()),
            ("tol-obj", self.tol_obj.clone()),
            ("tol-res", self.tol_res.clone()),
            ("z-mode", self.z_mode.clone()),
            ("dual-sign", self.dual_sign.clone()),
            ("seed", self.seed.clone()),
            ("threads", self.threads.clone()),
            ("heatmap", self.heatmap.then(|| "true".to_string())),
            ("n-nodes", self.n_nodes.clone()),
            ("k-true", self.k_true.clone()),
            ("segments", self.segments.clone()),
            ("windows-per-segment", self.windows_per_segment.clone()),
            ("noise", self.noise.clone()),
            ("smooth-gamma", self.smooth_gamma.clone()),
            ("zero-fraction", self.zero_fraction.clone()),
            ("prob-threshold", self.prob_threshold.clone()),
            ("count-threshold", self.count_threshold.clone()),
        ]
    }
}

enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::InfeasibleBudget { .. } => EXIT_USAGE,
        Error::SingularSystem { .. } | Error::Divergence { .. } => EXIT_NUMERICAL,
        Error::DimensionMismatch(_)
        | Error::InvalidInput(_)
        | Error::Parse { .. }
        | Error::Io { .. } => EXIT_DATA,
    }
}

/// Merged settings: config file first, then command-line flags.
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn load(args: &Args) -> CliResult<Self> {
        let known: Vec<&str> = args.pairs().iter().map(|(k, _)| *k).collect();
        let mut values = BTreeMap::new();
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(CliError::Usage(format!(
                        "{}: line {}: expected key=value",
                        path.display(),
                        idx + 1
                    )));
                };
                let key = key.trim().replace('_', "-");
                if !known.contains(&key.as_str()) {
                    return Err(CliError::Usage(format!(
                        "{}: line {}: unknown key {key:?}",
                        path.display(),
                        idx + 1
                    )));
                }
                values.insert(key, value.trim().to_string());
            }
        }
        for (key, value) in args.pairs() {
            if let Some(v) = value {
                values.insert(key.to_string(), v);
            }
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("invalid value {v:?} for --{key}: {e}")))
            })
            .transpose()
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str, mode: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Usage(format!("--{key} is required in {mode} mode")))
    }

    fn heatmap(&self) -> CliResult<bool> {
        self.get_or("heatmap", false)
    }

    fn seed(&self) -> CliResult<u64> {
        self.get_or("seed", DEFAULT_SEED)
    }
}

const DEFAULT_SEED: u64 = 2;

fn solver_config(
    s: &Settings,
    mode: &str,
    window_len: usize,
    parallel: bool,
) -> CliResult<SolverConfig> {
    let k: f64 = s.require("k", mode)?;
    let mut cfg = SolverConfig::new(k, window_len);
    cfg.gamma = s.get_or("gamma", cfg.gamma)?;
    cfg.eta = s.get_or("eta", cfg.eta)?;
    cfg.alpha = s.get_or("alpha", cfg.alpha)?;
    cfg.lambda = s.get_or("lambda", cfg.lambda)?;
    cfg.tau1 = s.get_or("tau1", cfg.tau1)?;
    cfg.tau2 = s.get_or("tau2", cfg.tau2)?;
    cfg.max_iter = s.get_or("max-iter", cfg.max_iter)?;
    cfg.tol_obj = s.get_or("tol-obj", cfg.tol_obj)?;
    cfg.tol_residual = s.get_or("tol-res", cfg.tol_residual)?;
    cfg.z_update = match s.raw("z-mode") {
        None | Some("anchored") => ZUpdate::Anchored,
        Some("recursive" | "paper-literal") => ZUpdate::Recursive,
        Some(v) => return Err(CliError::Usage(format!("unknown --z-mode {v:?}"))),
    };
    cfg.dual_sign = match s.raw("dual-sign") {
        None | Some("ascent") => DualSign::Ascent,
        Some("descent" | "paper-literal") => DualSign::Descent,
        Some(v) => return Err(CliError::Usage(format!("unknown --dual-sign {v:?}"))),
    };
    cfg.parallel = parallel;
    Ok(cfg)
}

fn out_dir(s: &Settings, mode: &str) -> CliResult<PathBuf> {
    let dir: PathBuf = s.require::<String>("out", mode)?.into();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Run the command line `argv` (program name first) and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&args) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", Args::command().render_usage());
            eprintln!("For more information, try '--help'.");
            EXIT_USAGE
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            if code == EXIT_USAGE {
                eprintln!("\n{}", Args::command().render_usage());
            }
            code
        }
    }
}

fn dispatch(args: &Args) -> CliResult<()> {
    let s = Settings::load(args)?;
    let threads: Option<usize> = s.get("threads")?;
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let parallel = threads != Some(1);
    with_threads(threads, || dispatch_mode(&s, parallel))
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> CliResult<R> + Send,
) -> CliResult<R> {
    match threads {
        Some(n) if n > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            pool.install(f)
        }
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R>(threads: Option<usize>, f: impl FnOnce() -> CliResult<R>) -> CliResult<R> {
    if threads.is_some_and(|n| n > 1) {
        warn!("built without the `parallel` feature; --threads is ignored");
    }
    f()
}

fn dispatch_mode(s: &Settings, parallel: bool) -> CliResult<()> {
    let mode = s
        .raw("mode")
        .ok_or_else(|| CliError::Usage("--mode is required".into()))?
        .to_string();
    match mode.as_str() {
        "synth" => run_synth(s, parallel),
        "static" => run_static(s, parallel),
        "dynamic" => run_dynamic(s, parallel),
        "analyze" => run_analyze(s, parallel),
        "consensus" => run_consensus(s),
        other => Err(CliError::Usage(format!(
            "unknown --mode {other:?} (expected static, dynamic, synth, analyze or consensus)"
        ))),
    }
}

fn run_synth(s: &Settings, parallel: bool) -> CliResult<()> {
    let spec = ScenarioSpec {
        n_nodes: s.get_or("n-nodes", 20)?,
        k_true: s.get_or("k-true", 19)?,
        n_segments: s.get_or("segments", 2)?,
        windows_per_segment: s.get_or("windows-per-segment", 4)?,
        window_len: s.get_or("window-len", 200)?,
        noise_sigma: s.get_or("noise", 0.1)?,
        smooth_gamma: s.get_or("smooth-gamma", 0.5)?,
        zero_node_fraction: s.get_or("zero-fraction", 0.0)?,
        seed: s.seed()?,
    };
    let dir = out_dir(s, "synth")?;
    let truth = generate_with(&spec, parallel)?;
    io::write_signals_csv(dir.join("signals.csv"), &truth.signals)?;
    io::write_signals_csv(dir.join("clean.csv"), &truth.clean)?;
    for (i, g) in truth.segments.iter().enumerate() {
        io::write_graph_csv(dir.join(format!("truth_{}.csv", i + 1)), g)?;
    }
    io::write_scenario(
        dir.join("scenario.json"),
        &ScenarioFile {
            spec: &spec,
            boundaries: &truth.boundaries,
            zero_nodes: &truth.zero_nodes,
        },
    )?;
    info!("wrote synthetic record to {}", dir.display());
    Ok(())
}

fn run_static(s: &Settings, parallel: bool) -> CliResult<()> {
    let input: String = s.require("input", "static")?;
    let dir = out_dir(s, "static")?;
    let y = io::ingest_csv(&input)?;
    let cfg = solver_config(s, "static", y.n_samples(), parallel)?;
    let fit = fit_static(&y, &cfg)?;
    let graphs = GraphSequence::new(vec![fit.graph], y.n_samples())?;
    let signals = WindowedSignals {
        windows: vec![fit.signals],
        window_len: y.n_samples(),
    };
    io::emit_results(
        &FitOutputs {
            mode: "static",
            seed: s.seed()?,
            graphs: &graphs,
            signals: &signals,
            report: &fit.report,
            config: &cfg,
        },
        &dir,
    )?;
    log_fit(&fit.report, &dir);
    Ok(())
}

fn run_dynamic(s: &Settings, parallel: bool) -> CliResult<()> {
    let input: String = s.require("input", "dynamic")?;
    let window_len: usize = s.require("window-len", "dynamic")?;
    let dir = out_dir(s, "dynamic")?;
    let y = io::ingest_csv(&input)?;
    let cfg = solver_config(s, "dynamic", window_len, parallel)?;
    let fit = fit_dynamic(&y, &cfg)?;
    io::emit_results(
        &FitOutputs {
            mode: "dynamic",
            seed: s.seed()?,
            graphs: &fit.graphs,
            signals: &fit.signals,
            report: &fit.report,
            config: &cfg,
        },
        &dir,
    )?;
    if fit.graphs.len() >= 2 {
        let corr = graph_correlation_matrix_with(&fit.graphs, parallel)?;
        io::emit_correlation(&corr, &dir, s.heatmap()?)?;
    } else if s.heatmap()? {
        warn!("a single window has no correlation matrix; skipping the heatmap");
    }
    log_fit(&fit.report, &dir);
    Ok(())
}

fn log_fit(report: &crate::solver::FitReport, dir: &Path) {
    if report.converged {
        info!(
            "converged after {} iterations, objective {}",
            report.iterations, report.final_objective
        );
    } else {
        warn!(
            "stopped at the iteration limit ({}) without converging; residual {}",
            report.iterations, report.final_residual
        );
    }
    info!("results written to {}", dir.display());
}

fn run_analyze(s: &Settings, parallel: bool) -> CliResult<()> {
    let input: String = s.require("input", "analyze")?;
    let dir = out_dir(s, "analyze")?;
    let seq = io::read_graph_sequence(&input)?;
    let profile = change_profile(&seq)?;
    io::write_text(
        dir.join("change_profile.csv"),
        &io::change_profile_csv(&profile),
    )?;
    let corr = graph_correlation_matrix_with(&seq, parallel)?;
    io::emit_correlation(&corr, &dir, s.heatmap()?)?;
    Ok(())
}

fn run_consensus(s: &Settings) -> CliResult<()> {
    let input: PathBuf = s.require::<String>("input", "consensus")?.into();
    let prob_threshold: f64 = s.get_or("prob-threshold", 0.5)?;
    let count_threshold: usize = s.get_or("count-threshold", 5)?;
    let dir = out_dir(s, "consensus")?;

    let mut trial_dirs: Vec<PathBuf> = fs::read_dir(&input)
        .map_err(|e| Error::io(&input, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    trial_dirs.sort();
    if trial_dirs.is_empty() {
        return Err(
            Error::InvalidInput(format!("{}: no trial directories", input.display())).into(),
        );
    }
    let trials = trial_dirs
        .iter()
        .map(io::read_graph_sequence)
        .collect::<crate::Result<Vec<_>>>()?;
    let n_windows = trials[0].len();
    if let Some(i) = trials.iter().position(|t| t.len() != n_windows) {
        return Err(Error::DimensionMismatch(format!(
            "{} has {} graphs, {} has {n_windows}",
            trial_dirs[i].display(),
            trials[i].len(),
            trial_dirs[0].display()
        ))
        .into());
    }
    for t in 0..n_windows {
        let graphs: Vec<EdgeVector> = trials.iter().map(|seq| seq.graphs[t].clone()).collect();
        let c = consensus(&graphs, prob_threshold, count_threshold)?;
        io::write_text(
            dir.join(format!("consensus_{}.csv", t + 1)),
            &io::consensus_csv(&c),
        )?;
    }
    info!(
        "consensus over {} trials written to {}",
        trials.len(),
        dir.display()
    );
    Ok(())
}
