//! `globalvote` command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
//! run fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use globalvote::config::{AnalysisOptions, ConfigFile, NoiseMode, NoiseSpec};
use globalvote::dynamics::MagnetizationUpdate;
use globalvote::ingest::ColumnSpec;
use globalvote::measures::AcfCentring;
use globalvote::pipeline::{self, CellStatus};
use globalvote::{Error, Execution};

#[derive(Parser, Debug)]
#[command(
    name = "globalvote",
    version,
    about = "Global-vote market model simulator and return-series analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one market and write its artifacts.
    Run(RunArgs),
    /// Simulate every (<k>, q, f, replica) cell of a sweep.
    Sweep(SweepArgs),
    /// Analyze a returns, magnetization or daily-price CSV.
    Analyze(AnalyzeArgs),
    /// Pool degree distributions of random networks and test them against Poisson.
    GraphCheck(GraphCheckArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file with [simulation], [sweep] and [analysis] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; artifacts go to <out>/<run-id>.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Directory name under --out; defaults to a UTC timestamp.
    #[arg(long)]
    run_id: Option<String>,
}

#[derive(Args, Debug)]
struct AnalysisFlags {
    /// Histogram bins.
    #[arg(long)]
    bins: Option<usize>,
    /// Largest autocorrelation lag (default T - 2).
    #[arg(long)]
    max_lag: Option<usize>,
    /// Also run the binned least-squares Student's t fit.
    #[arg(long)]
    binned: bool,
    /// Level subtracted from |r| in the autocorrelation.
    #[arg(long, value_enum)]
    acf_centring: Option<CentringArg>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CentringArg {
    AbsOfMean,
    MeanOfAbs,
}

impl AnalysisFlags {
    fn apply(&self, opts: &mut AnalysisOptions) {
        if let Some(b) = self.bins {
            opts.bins = b;
        }
        if self.max_lag.is_some() {
            opts.max_lag = self.max_lag;
        }
        if self.binned {
            opts.binned_student_t = true;
        }
        if let Some(c) = self.acf_centring {
            opts.acf_centring = match c {
                CentringArg::AbsOfMean => AcfCentring::AbsOfMean,
                CentringArg::MeanOfAbs => AcfCentring::MeanOfAbs,
            };
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum UpdateArg {
    Frozen,
    Running,
}

#[derive(Args, Debug)]
struct SimFlags {
    #[arg(long)]
    seed: Option<u64>,
    /// Number of agents.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    mean_degree: Option<f64>,
    /// Noise parameter.
    #[arg(long)]
    q: Option<f64>,
    /// Contrarian fraction.
    #[arg(long)]
    f: Option<f64>,
    #[arg(long)]
    transient_mcs: Option<usize>,
    #[arg(long)]
    measure_mcs: Option<usize>,
    /// When contrarians see the global magnetization change.
    #[arg(long, value_enum)]
    magnetization_update: Option<UpdateArg>,
}

impl SimFlags {
    fn apply(&self, cfg: &mut globalvote::dynamics::SimConfig) {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.mean_degree {
            cfg.mean_degree = v;
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        if let Some(v) = self.f {
            cfg.f = v;
        }
        if let Some(v) = self.transient_mcs {
            cfg.transient_mcs = v;
        }
        if let Some(v) = self.measure_mcs {
            cfg.measure_mcs = v;
        }
        if let Some(v) = self.magnetization_update {
            cfg.magnetization_update = match v {
                UpdateArg::Frozen => MagnetizationUpdate::Frozen,
                UpdateArg::Running => MagnetizationUpdate::Running,
            };
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sim: SimFlags,
    #[command(flatten)]
    analysis: AnalysisFlags,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NoiseArg {
    AtQc,
    BelowQc,
    AboveQc,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sim: SimFlags,
    #[command(flatten)]
    analysis: AnalysisFlags,
    /// Comma-separated mean degrees.
    #[arg(long, value_delimiter = ',')]
    mean_degrees: Option<Vec<f64>>,
    /// Comma-separated contrarian fractions.
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    /// Noise relative to the critical value of each mean degree.
    #[arg(long, value_enum, conflicts_with = "q_values")]
    noise: Option<NoiseArg>,
    /// Explicit comma-separated noise values, used for every mean degree.
    #[arg(long, value_delimiter = ',')]
    q_values: Option<Vec<f64>>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Concurrent cells; 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Returns (`r` column), magnetization (`M` column) or price CSV.
    input: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    analysis: AnalysisFlags,
    #[arg(long, default_value = "Date")]
    date_column: String,
    #[arg(long, default_value = "Close")]
    close_column: String,
    /// strftime pattern for dates, e.g. %m/%d/%Y (default ISO-8601).
    #[arg(long)]
    date_format: Option<String>,
}

#[derive(Args, Debug)]
struct GraphCheckArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    run_id: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "6,8,10,20")]
    mean_degrees: Vec<f64>,
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    /// Networks pooled per mean degree.
    #[arg(long, default_value_t = 10)]
    networks: usize,
    /// Also write the first network's edge list per mean degree.
    #[arg(long)]
    edges: bool,
}

fn load_config(path: Option<&Path>) -> globalvote::Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn target_dir(common: &Common) -> PathBuf {
    let id = common.run_id.clone().unwrap_or_else(pipeline::timestamp_run_id);
    common.out.join(id)
}

fn run(args: RunArgs) -> globalvote::Result<()> {
    let file = load_config(args.common.config.as_deref())?;
    let mut cfg = file.simulation();
    args.sim.apply(&mut cfg);
    let mut opts = file.analysis();
    args.analysis.apply(&mut opts);
    cfg.validate()?;
    let dir = target_dir(&args.common);
    let summary = pipeline::run_single(&cfg, &opts, &dir)?;
    println!("{}", summary.dir.display());
    Ok(())
}

fn sweep(args: SweepArgs) -> globalvote::Result<()> {
    let file = load_config(args.common.config.as_deref())?;
    let mut spec = file.sweep();
    args.sim.apply(&mut spec.base);
    if let Some(v) = args.mean_degrees {
        spec.mean_degrees = v;
    }
    if let Some(v) = args.fractions {
        spec.fractions = v;
    }
    if let Some(v) = args.replicas {
        spec.replicas = v;
    }
    if let Some(v) = args.q_values {
        spec.noise = NoiseSpec::Explicit(v);
    }
    if let Some(v) = args.noise {
        spec.noise = NoiseSpec::Mode(match v {
            NoiseArg::AtQc => NoiseMode::AtQc,
            NoiseArg::BelowQc => NoiseMode::BelowQc,
            NoiseArg::AboveQc => NoiseMode::AboveQc,
        });
    }
    let mut opts = file.analysis();
    args.analysis.apply(&mut opts);
    if args.workers == Some(0) {
        return Err(Error::InvalidParameter("--workers must be at least 1".into()));
    }
    // Validate the grid before touching the filesystem.
    spec.cells()?;
    let dir = target_dir(&args.common);
    let manifest = pipeline::run_sweep(&spec, &opts, &dir, Execution::with_workers(args.workers))?;
    let failed = manifest.cells.iter().filter(|c| c.status == CellStatus::Failed).count();
    println!("{}", dir.display());
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see manifest.json", manifest.cells.len());
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> globalvote::Result<()> {
    let file = load_config(args.common.config.as_deref())?;
    let mut opts = file.analysis();
    args.analysis.apply(&mut opts);
    let spec = ColumnSpec {
        date_column: args.date_column,
        close_column: args.close_column,
        date_format: args.date_format,
    };
    let dir = target_dir(&args.common);
    let analysis = pipeline::analyze(&args.input, &spec, &opts, &dir)?;
    println!("{}", dir.display());
    if let Ok(fit) = &analysis.student_t {
        eprintln!(
            "student-t: nu = {:.4}, sigma = {:.6}",
            fit.param("nu"),
            fit.param("sigma")
        );
    }
    Ok(())
}

fn graph_check(args: GraphCheckArgs) -> globalvote::Result<()> {
    if args.workers == Some(0) {
        return Err(Error::InvalidParameter("--workers must be at least 1".into()));
    }
    let id = args.run_id.unwrap_or_else(pipeline::timestamp_run_id);
    let dir = args.out.join(id);
    let report = pipeline::graph_check(
        &args.mean_degrees,
        args.n,
        args.networks,
        args.seed,
        &dir,
        args.edges,
        Execution::with_workers(args.workers),
    )?;
    println!("{}", dir.display());
    for c in &report.checks {
        eprintln!(
            "<k> = {}: chi2 = {:.2}, dof = {}, p = {:.4}",
            c.mean_degree, c.chi_square.statistic, c.chi_square.dof, c.chi_square.p_value
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Analyze(a) => analyze(a),
        Command::GraphCheck(a) => graph_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
