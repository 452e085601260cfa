use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use fits_sim::experiment::{default_alphas, emit, emit_wide, sweep_preference, PlanMode};
use fits_sim::fleet::{run_fleet, write_rounds_csv, AvSpec, FleetError, FleetSpec};
use fits_sim::planning::{plan, write_plans_csv};
use fits_sim::pricing::snapshot;
use fits_sim::selftest::run_selftest;
use fits_sim::{
    compute_prices, generate_network, validate, FlowParams, Network, NodeId, PlanError, QLearningConfig,
    RewardModel, ScenarioConfig, Scheme,
};

const DEFAULT_SEED: u64 = 42;
const SEED_ENV: &str = "FITS_SIM_SEED";

#[derive(Debug, Parser)]
#[command(name = "fits-sim", version, about = "Price-guided route planning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random scenario network as JSON.
    Generate(ScenarioArgs),
    /// Price every section of a network; writes CSV.
    Price {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan one route on a network; writes a one-row CSV.
    Plan(PlanArgs),
    /// Sweep the preference weight across all schemes; writes CSV.
    Sweep(SweepArgs),
    /// Run the pricing-feedback fleet loop; writes per-round CSV.
    Fleet(FleetArgs),
    /// Run invariant checks on small instances.
    Selftest,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sections: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    origin: Option<u32>,
    #[arg(long)]
    destination: Option<u32>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated preference weights.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    mode: Option<PlanMode>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Also write the alpha-by-scheme utility table here.
    #[arg(long)]
    wide_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct FleetArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Use this network instead of generating one.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Number of randomly drawn vehicles when the config lists none.
    #[arg(long)]
    avs: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FleetSection {
    n_avs: Option<usize>,
    avs: Vec<AvSpec>,
    av_density_vpk: Option<f64>,
    max_rounds: Option<usize>,
    damping: Option<f64>,
}

/// Contents of `--config`. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    scenario: Option<ScenarioConfig>,
    qlearning: Option<QLearningConfig>,
    alphas: Option<Vec<f64>>,
    alpha: Option<f64>,
    scheme: Option<Scheme>,
    mode: Option<PlanMode>,
    fleet: Option<FleetSection>,
    #[serde(skip)]
    scenario_seed: Option<u64>,
}

impl RunConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(RunConfig::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let scenario_seed = value.pointer("/scenario/seed").and_then(serde_json::Value::as_u64);
        let mut cfg: RunConfig =
            serde_json::from_value(value).with_context(|| format!("reading config {}", path.display()))?;
        cfg.scenario_seed = scenario_seed;
        Ok(cfg)
    }

    /// Flag, then config file, then `FITS_SIM_SEED`, then the default.
    fn seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(seed) = flag.or(self.seed).or(self.scenario_seed) {
            return Ok(seed);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v} is not a 64-bit seed")),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    fn qlearning(&self, episodes: Option<usize>) -> QLearningConfig {
        let mut ql = self.qlearning.clone().unwrap_or_default();
        if let Some(e) = episodes {
            ql.episodes = e;
        }
        ql
    }
}

fn scenario_config(args: &ScenarioArgs, run: &RunConfig) -> Result<ScenarioConfig> {
    let mut cfg = run.scenario.clone().unwrap_or_default();
    cfg.seed = run.seed(args.seed)?;
    if let Some(n) = args.sections {
        cfg.n_sections = n;
    }
    if let Some(n) = args.nodes {
        cfg.n_nodes = n;
    }
    cfg.check()?;
    Ok(cfg)
}

/// Writes to `path`, or standard output when absent.
fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?);
            body(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn load_network(path: &Path) -> Result<Network> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let net: Network = serde_json::from_str(&text).with_context(|| format!("parsing network {}", path.display()))?;
    let violations = validate(&net);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
        bail!("invalid network {}:\n  {}", path.display(), lines.join("\n  "));
    }
    Ok(net)
}

fn with_jobs<T: Send>(jobs: usize, body: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(body)
}

fn cmd_generate(args: &ScenarioArgs) -> Result<()> {
    let run = RunConfig::load(args.config.as_deref())?;
    let cfg = scenario_config(args, &run)?;
    let net = generate_network(&cfg)?;
    with_output(args.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &net)?;
        writeln!(w)?;
        Ok(())
    })
}

fn cmd_price(network: &Path, out: Option<&Path>) -> Result<()> {
    let net = load_network(network)?;
    let table = compute_prices(&net, &FlowParams::default());
    with_output(out, |w| Ok(table.write_csv(w)?))
}

fn cmd_plan(args: &PlanArgs) -> Result<()> {
    let run = RunConfig::load(args.config.as_deref())?;
    let net = load_network(&args.network)?;
    let endpoints = ScenarioConfig {
        origin: args.origin.map(NodeId).or(run.scenario.as_ref().and_then(|s| s.origin)),
        destination: args.destination.map(NodeId).or(run.scenario.as_ref().and_then(|s| s.destination)),
        ..Default::default()
    };
    let (origin, destination) = endpoints.endpoints(&net)?;
    let snap = snapshot(&net, &FlowParams::default(), 0);
    let rm = RewardModel::for_snapshot(args.alpha.or(run.alpha).unwrap_or(0.5), &snap)?;
    let scheme = args.scheme.or(run.scheme).unwrap_or(Scheme::Proposal);
    let seed = run.seed(args.seed)?;
    let result = plan(scheme, &rm, &snap, origin, destination, &run.qlearning(args.episodes), seed)?;
    with_output(args.out.as_deref(), |w| Ok(write_plans_csv([&result], w)?))
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let run = RunConfig::load(args.scenario.config.as_deref())?;
    let cfg = scenario_config(&args.scenario, &run)?;
    let alphas = args.alphas.clone().or(run.alphas.clone()).unwrap_or_else(default_alphas);
    let mode = args.mode.or(run.mode).unwrap_or(PlanMode::Qlearning);
    let ql = run.qlearning(args.episodes);
    let table = with_jobs(args.jobs, || Ok(sweep_preference(&cfg, &alphas, &ql, mode)?))?;
    match args.scenario.out.as_deref() {
        Some(path) => emit(&table, path)?,
        None => with_output(None, |w| Ok(table.write_csv(w)?))?,
    }
    if let Some(path) = &args.wide_out {
        emit_wide(&table, path)?;
    }
    Ok(())
}

fn cmd_fleet(args: &FleetArgs) -> Result<()> {
    let run = RunConfig::load(args.scenario.config.as_deref())?;
    let cfg = scenario_config(&args.scenario, &run)?;
    let net = match &args.network {
        Some(path) => load_network(path)?,
        None => generate_network(&cfg)?,
    };
    let section = run.fleet.unwrap_or_default();
    let mut spec = if section.avs.is_empty() {
        FleetSpec::random(&net, args.avs.or(section.n_avs).unwrap_or(200), cfg.seed)
    } else {
        FleetSpec { avs: section.avs, seed: cfg.seed, ..Default::default() }
    };
    spec.av_density_vpk = section.av_density_vpk;
    if let Some(r) = args.rounds.or(section.max_rounds) {
        spec.max_rounds = r;
    }
    if let Some(d) = args.damping.or(section.damping) {
        spec.damping = d;
    }
    let reports = with_jobs(args.jobs, || Ok(run_fleet(&net, &spec, &FlowParams::default())?))?;
    with_output(args.scenario.out.as_deref(), |w| Ok(write_rounds_csv(&reports, w)?))
}

fn cmd_selftest() -> Result<bool> {
    let checks = run_selftest();
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

/// Unreachable destinations and unconverged learners exit with 2; every
/// other failure is a validation error.
fn exit_code(err: &anyhow::Error) -> u8 {
    let planner_failure = err.chain().any(|cause| {
        let plan_err = cause
            .downcast_ref::<PlanError>()
            .or_else(|| match cause.downcast_ref::<FleetError>() {
                Some(FleetError::Vehicle { source, .. }) => Some(source),
                _ => None,
            });
        matches!(plan_err, Some(PlanError::Unreachable { .. } | PlanError::NotConverged { .. }))
    });
    if planner_failure {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Price { network, out } => cmd_price(network, out.as_deref()),
        Command::Plan(args) => cmd_plan(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Fleet(args) => cmd_fleet(args),
        Command::Selftest => match cmd_selftest() {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fits-sim: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
