use std::fs;
use std::io::{self, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use tracing_subscriber::EnvFilter;
use trustkit::behavior::Kappa;
use trustkit::domain::{generate_mission, MissionConfig};
use trustkit::sim::{run_experiment, transcript_to_jsonl, ExperimentConfig, ExperimentTable, FeedbackMode, Metric};
use trustkit::{Mission, RewardWeights, SimulatedHuman, StrategyKind, TrustParams};
use trustkit_service::{AppState, EventStore, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "trustkit", version, about = "Trust-aware robot recommendations: missions, simulations, experiments and a session server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a mission file.
    Generate(GenerateArgs),
    /// Run one simulated human through a mission.
    Run(RunArgs),
    /// Run a batch experiment and compare strategies.
    Experiment(ExperimentArgs),
    /// Serve the HTTP session API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Random seed; drawn from entropy and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 40)]
    sites: usize,
    #[arg(long)]
    out: PathBuf,
    /// Mission generation settings (JSON); `--sites` overrides its site count.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overwrite an existing file.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FeedbackArg {
    Mean,
    Sampled,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    mission: PathBuf,
    /// non_learner, non_adaptive_learner or adaptive_learner.
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Engine and human settings (JSON); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// The human's true health weight in [0, 1].
    #[arg(long)]
    human_weight: Option<f64>,
    /// The human's rationality coefficient.
    #[arg(long)]
    human_kappa: Option<f64>,
    /// The human's trust dynamics as alpha0,beta0,ws,wf.
    #[arg(long, value_delimiter = ',')]
    human_trust: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    feedback: Option<FeedbackArg>,
    /// Session seed; drawn from entropy and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Transcript destination (JSON lines). Defaults to stdout.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Metrics destination (JSON). Defaults to a summary on stderr.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_humans: Option<usize>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    /// Directory for session event logs. Sessions are kept in memory only when omitted.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Engine and mission settings (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of static files (the web client) served outside `/v1`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<trustkit::Error> for CliError {
    fn from(e: trustkit::Error) -> Self {
        match e {
            trustkit::Error::Config(m) | trustkit::Error::InvalidArgument(m) => CliError::Config(m),
            trustkit::Error::State(m) => CliError::Runtime(m),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_config(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(io_err(p)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let mut cfg: MissionConfig = match &args.config {
        Some(p) => parse_json(p)?,
        None => MissionConfig::default(),
    };
    cfg.n_sites = args.sites;
    cfg.validate()?;
    if args.out.exists() && !args.force {
        return Err(CliError::Config(format!("{} exists; pass --force to overwrite", args.out.display())));
    }
    let mission = generate_mission(seed_or_entropy(args.seed), &cfg)?;
    fs::write(&args.out, mission.to_json() + "\n").map_err(io_err(&args.out))?;
    tracing::info!(path = %args.out.display(), sites = mission.n_sites(), "mission written");
    Ok(())
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HumanSpec {
    health_weight: f64,
    kappa: Kappa,
    trust_params: TrustParams,
    feedback_mode: FeedbackMode,
}

impl Default for HumanSpec {
    fn default() -> Self {
        Self {
            health_weight: 0.5,
            kappa: Kappa::default(),
            trust_params: TrustParams::default(),
            feedback_mode: FeedbackMode::Mean,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    strategy: Option<StrategyKind>,
    seed: Option<u64>,
    engine: ServiceConfig,
    human: HumanSpec,
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg: RunConfig = match &args.config {
        Some(p) => parse_json(p)?,
        None => RunConfig::default(),
    };
    cfg.engine.validate()?;
    if let Some(w) = args.human_weight {
        cfg.human.health_weight = w;
    }
    if let Some(k) = args.human_kappa {
        cfg.human.kappa = Kappa::new(k)?;
    }
    if let Some(t) = &args.human_trust {
        if t.len() != 4 {
            return Err(CliError::Config(format!("--human-trust takes four values, got {}", t.len())));
        }
        cfg.human.trust_params = TrustParams::new(t[0], t[1], t[2], t[3])?;
    }
    if let Some(f) = args.feedback {
        cfg.human.feedback_mode = match f {
            FeedbackArg::Mean => FeedbackMode::Mean,
            FeedbackArg::Sampled => FeedbackMode::Sampled,
        };
    }
    cfg.human.trust_params.validate()?;
    let strategy = args
        .strategy
        .or(cfg.strategy)
        .ok_or_else(|| CliError::Config("--strategy is required".into()))?;
    let human = SimulatedHuman {
        true_weights: RewardWeights::from_health(cfg.human.health_weight)?,
        trust_params: cfg.human.trust_params,
        kappa: cfg.human.kappa,
        feedback_mode: cfg.human.feedback_mode,
    };
    let mission = Mission::from_json(&read_config(&args.mission)?)?;
    let seed = seed_or_entropy(args.seed.or(cfg.seed));

    let result = trustkit::sim::run_session(
        &human,
        &cfg.engine.agent_config(strategy),
        &mission,
        seed,
        cfg.engine.base_search_time,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    write_output(args.transcript.as_deref(), &transcript_to_jsonl(&result.records))?;
    let m = &result.metrics;
    match &args.metrics {
        Some(p) => {
            let json = serde_json::to_string_pretty(m).expect("metrics serialize");
            fs::write(p, json + "\n").map_err(io_err(p))?;
        }
        None => eprintln!(
            "{strategy}: agreements {}/{}, average trust {:.3}, end trust {:.3}, health {}, time {}",
            m.agreements,
            mission.n_sites(),
            m.average_trust,
            m.end_trust,
            m.final_health,
            m.total_time
        ),
    }
    Ok(())
}

fn summary_text(table: &ExperimentTable) -> Result<String, CliError> {
    use std::fmt::Write as _;
    let mut s = String::new();
    let strategies = table.strategies();
    let _ = writeln!(s, "{:<22} {:<14} {:>10} {:>10}", "strategy", "metric", "mean", "se");
    for row in table.summary() {
        let _ = writeln!(
            s,
            "{:<22} {:<14} {:>10.4} {:>10.4}",
            row.strategy.as_str(),
            row.metric.name(),
            row.mean,
            row.standard_error
        );
    }
    let _ = writeln!(s, "\npaired t-tests (a - b)");
    let _ = writeln!(s, "{:<14} {:<22} {:<22} {:>10} {:>9} {:>10}", "metric", "a", "b", "mean diff", "t", "p");
    for metric in Metric::ALL {
        for (i, &a) in strategies.iter().enumerate() {
            for &b in &strategies[i + 1..] {
                let t = table.paired_comparison(metric, b, a)?;
                let _ = writeln!(
                    s,
                    "{:<14} {:<22} {:<22} {:>10.4} {:>9.3} {:>10.3e}",
                    metric.name(),
                    b.as_str(),
                    a.as_str(),
                    t.mean_diff,
                    t.t,
                    t.p_value
                );
            }
        }
    }
    Ok(s)
}

fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::from_json(&read_config(&args.config)?)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.n_humans {
        cfg.n_humans = n;
    }
    cfg.validate()?;
    if args.jobs == Some(0) {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let table = run_experiment(&cfg, args.jobs).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_output(args.out.as_deref(), &table.to_csv()?)?;
    let summary = if table.rows.len() >= 2 * table.strategies().len() { summary_text(&table)? } else { String::new() };
    if args.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let cfg = match &args.config {
        Some(p) => ServiceConfig::from_json(&read_config(p)?)?,
        None => ServiceConfig::default(),
    };
    if let Some(dir) = &args.static_dir {
        if !dir.is_dir() {
            return Err(CliError::Config(format!("static dir {} is not a directory", dir.display())));
        }
    }
    let store = match &args.data_dir {
        Some(d) => EventStore::open(d).map_err(|e| CliError::Runtime(e.to_string()))?,
        None => {
            tracing::warn!("no --data-dir given; sessions will not survive a restart");
            EventStore::ephemeral()
        }
    };
    let state = AppState::new(cfg, store).map_err(|e| CliError::Runtime(e.to_string()))?;
    let addr = SocketAddr::new(args.bind, args.port);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    rt.block_on(trustkit_service::serve(addr, state, args.static_dir))
        .map_err(|e| CliError::Runtime(format!("server on {addr}: {e}")))
}

fn init_logging(default: &str) {
    let filter = EnvFilter::try_from_env("TRUSTKIT_LOG").unwrap_or_else(|_| EnvFilter::new(default));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(io::stderr).init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" });
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Experiment(a) => experiment(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
