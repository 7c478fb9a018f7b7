mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use g2flow::coflow::{
    self, classify_regime, classify_singularity, integrate, tmax_serde, AnsatzParams, RegimeReport,
    SingularityType, Termination,
};
use g2flow::report::VerificationReport;
use g2flow::verify::{run_suite, Suite, VerifyOptions, EPSILONS, REGIME_ROWS};
use serde::Serialize;

use config::{Config, ConfigError};

const THREADS_ENV: &str = "G2FLOW_THREADS";

#[derive(Parser)]
#[command(name = "g2flow", version, about = "Coflows of G2-structures: Ansatz flows, sweeps and verification corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Ansatz flow; writes a trajectory CSV and a JSON summary.
    Flow(FlowArgs),
    /// Integrate and classify a grid of parameters in parallel; writes JSON.
    Sweep(SweepArgs),
    /// Run a verification suite; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Classify the solution regime for (ε, A), or re-read a trajectory CSV.
    Classify(ClassifyArgs),
}

#[derive(Args, Default)]
struct Common {
    /// JSON config file (see schema/config.schema.json).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    #[arg(long = "A", allow_hyphen_values = true)]
    a_mod: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    rm0_sq: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Output file.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<Config, ConfigError> {
        Config::load_or_default(self.config.as_deref())?.merged(Config {
            epsilon: self.epsilon,
            a_mod: self.a_mod,
            c0: self.c0,
            rm0_sq: self.rm0_sq,
            t_end: self.t_end,
            tol: self.tol,
            output_path: self.output.clone(),
            ..Default::default()
        })
    }
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Values of ε (default 0.5, 1, 2).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    epsilons: Vec<f64>,
    /// Values of A (default −ε, 0, ε/2, ε, 2ε for each ε).
    #[arg(long = "A-values", value_delimiter = ',', allow_hyphen_values = true)]
    a_values: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Algebra,
    G2,
    Torus,
    Ode,
}

#[derive(Args)]
struct VerifyArgs {
    suite: SuiteArg,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random cases for pointwise checks.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    grid_n: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    /// Trajectory CSV written by `flow`.
    #[arg(long, conflicts_with_all = ["epsilon", "a_mod"])]
    from_csv: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    /// A check failed; the report was still written.
    Check,
    Usage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(anyhow::anyhow!("config error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Flow(args) => cmd_flow(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Classify(args) => cmd_classify(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value.trim().parse().with_context(|| format!("{THREADS_ENV}={value:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    Ok(())
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct FlowSummary {
    params: AnsatzParams,
    regime: String,
    behaviour: String,
    #[serde(rename = "T_max", with = "tmax_serde")]
    t_max: Option<f64>,
    #[serde(rename = "type")]
    kind: SingularityType,
    termination: Termination,
    steady_state: Option<f64>,
    final_state: coflow::AnsatzState,
    /// `d(vol)/dt` at the first and last states.
    volume_rate: [f64; 2],
}

fn regime_label(r: &RegimeReport) -> String {
    serde_json::to_value(r.regime).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

fn cmd_flow(args: &FlowArgs) -> Result<(), Failure> {
    let config = args.common.config()?;
    let p = config.params()?;
    let traj = integrate(&p, config.t_end.unwrap_or(10.0), config.tol.unwrap_or(1e-10)).map_err(anyhow::Error::from)?;
    let regime = classify_regime(&p);
    let sing = classify_singularity(&traj, &p).map_err(anyhow::Error::from)?;
    let csv_path = config.output_path.clone().unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    let file = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    coflow::write_csv(&traj, &p, BufWriter::new(file)).map_err(anyhow::Error::from)?;
    let rates = traj.volume_rates(&p);
    let summary = FlowSummary {
        params: p,
        regime: regime_label(&regime),
        behaviour: regime.behaviour.clone(),
        t_max: sing.t_max,
        kind: sing.kind,
        termination: traj.termination,
        steady_state: regime.steady_state,
        final_state: *traj.last(),
        volume_rate: [rates[0], *rates.last().unwrap_or(&rates[0])],
    };
    write_json(Some(&summary_path(&csv_path)), &summary)?;
    write_json(None, &summary)?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let config = args.common.config()?;
    let base = AnsatzParams {
        epsilon: 1.0,
        a_mod: 0.0,
        c0: config.c0.unwrap_or(0.0),
        rm0_sq: config.rm0_sq.unwrap_or(0.0),
    };
    let epsilons = if args.epsilons.is_empty() { config.epsilon.map_or(EPSILONS.to_vec(), |e| vec![e]) } else { args.epsilons.clone() };
    let mut grid = Vec::new();
    for e in epsilons {
        let values: Vec<f64> = if !args.a_values.is_empty() {
            args.a_values.clone()
        } else if let Some(a) = config.a_mod {
            vec![a]
        } else {
            REGIME_ROWS.iter().map(|(k, _, _)| k * e).collect()
        };
        for a in values {
            let p = AnsatzParams { epsilon: e, a_mod: a, ..base };
            p.validate().map_err(|err| Failure::Usage(anyhow::anyhow!("config error: {err}")))?;
            grid.push(p);
        }
    }
    let entries = coflow::sweep(&grid, config.t_end.unwrap_or(10.0), config.tol.unwrap_or(1e-10))
        .map_err(anyhow::Error::from)?;
    write_json(config.output_path.as_deref(), &entries)?;
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let file = Config::load_or_default(args.config.as_deref())?;
    let config = file.merged(Config {
        seed: args.seed,
        modes: args.modes,
        amplitude: args.amplitude,
        grid_n: args.grid_n,
        output_path: args.output.clone(),
        ..Default::default()
    })?;
    let defaults = VerifyOptions::default();
    let opts = VerifyOptions {
        seed: config.seed.unwrap_or(defaults.seed),
        cases: args.cases,
        amplitude: config.amplitude.unwrap_or(defaults.amplitude),
        grid_n: config.grid_n.unwrap_or(defaults.grid_n),
        modes: config.modes.unwrap_or(defaults.modes),
        model: config.model,
    };
    let suite = match args.suite {
        SuiteArg::Algebra => Suite::Algebra,
        SuiteArg::G2 => Suite::G2,
        SuiteArg::Torus => Suite::Torus,
        SuiteArg::Ode => Suite::Ode,
    };
    let report: VerificationReport = run_suite(suite, &opts);
    eprintln!("{}", report.summary());
    write_json(config.output_path.as_deref(), &report)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

#[derive(Serialize)]
struct CsvClassification {
    params: AnsatzParams,
    regime: String,
    report: RegimeReport,
    #[serde(rename = "T_max", with = "tmax_serde")]
    t_max: Option<f64>,
    #[serde(rename = "type")]
    kind: SingularityType,
}

fn cmd_classify(args: &ClassifyArgs) -> Result<(), Failure> {
    let config = args.common.config()?;
    if let Some(path) = &args.from_csv {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let recovered = coflow::read_csv(BufReader::new(file)).map_err(anyhow::Error::from)?;
        let report = classify_regime(&recovered.params);
        let sing = classify_singularity(&recovered.trajectory, &recovered.params).map_err(anyhow::Error::from)?;
        let out = CsvClassification {
            params: recovered.params,
            regime: regime_label(&report),
            report,
            t_max: sing.t_max,
            kind: sing.kind,
        };
        write_json(config.output_path.as_deref(), &out)?;
    } else {
        let p = config.params()?;
        write_json(config.output_path.as_deref(), &classify_regime(&p))?;
    }
    std::io::stdout().flush().ok();
    Ok(())
}
