mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_window, BuildKind, RunConfig};
use output::{Meta, OutputDir, VERSION};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, or inputs.
    Config(String),
    Io(String),
    Core(rigidmix::Error),
}

impl From<rigidmix::Error> for CliError {
    fn from(e: rigidmix::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use rigidmix::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(E::Budget { .. }) => 3,
            CliError::Core(E::NoWitness(_) | E::HorizonNotReached(_) | E::Invariant(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

/// Exact cutting-and-stacking constructions and their mixing diagnostics.
#[derive(Parser)]
#[command(name = "rigidmix", version)]
struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    q_cap: Option<u64>,
    #[arg(long, global = true)]
    realize_budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a construction plan and its report.
    Build(BuildArgs),
    /// Realize a plan to a depth and report column heights and measures.
    Realize(RealizeArgs),
    /// Sweep correlations along an index set.
    Analyze(AnalyzeArgs),
    /// Fourier coefficients, support verdicts and Gaussian samples of a Riesz product.
    Spectral(SpectralArgs),
    /// Thickness and multiplicative-avoidance diagnostics of an index set.
    Sets(SetsArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    kind: Option<BuildKind>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct RealizeArgs {
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    depth: Option<usize>,
    /// `LO,HI`, inclusive.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<[i64; 2]>,
    #[arg(long)]
    k: Option<String>,
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<[i64; 2]>,
    #[arg(long)]
    gaussian_length: Option<usize>,
}

#[derive(Args)]
struct SetsArgs {
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<[i64; 2]>,
    #[arg(long)]
    radius: Option<u64>,
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    factor: Option<i64>,
}

/// Flag paths are relative to the working directory, not to the config file.
fn flag_path(p: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
}

fn missing(name: &str) -> CliError {
    CliError::Config(format!("[{name}] is needed; give it in --config"))
}

/// Folds flags into the config file's values.
fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig { output: PathBuf::from("out"), ..RunConfig::default() },
    };
    if let Some(o) = &cli.output {
        cfg.output = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(q) = cli.q_cap {
        cfg.caps.q_cap = q;
    }
    if let Some(b) = cli.realize_budget {
        cfg.caps.realize_budget = b;
    }
    match &cli.command {
        Command::Build(a) => {
            if cfg.build.is_none() {
                let kind = a.kind.ok_or_else(|| missing("build"))?;
                cfg.build = Some(config::BuildSection {
                    kind,
                    set: None,
                    epsilon: None,
                    segments: 2,
                    r: 1,
                    depth: 8,
                    growth: None,
                    epsilons: Vec::new(),
                    t: Vec::new(),
                });
            }
            let b = cfg.build.as_mut().expect("set above");
            if let Some(k) = a.kind {
                b.kind = k;
            }
            if let Some(s) = a.segments {
                b.segments = s;
            }
            if let Some(r) = a.r {
                b.r = r;
            }
            if let Some(d) = a.depth {
                b.depth = d;
            }
        }
        Command::Realize(a) => {
            if cfg.realize.is_none() {
                let plan = a.plan.as_deref().map(flag_path).transpose()?.ok_or_else(|| missing("realize"))?;
                cfg.realize = Some(config::RealizeSection { plan, depth: None });
            }
            let r = cfg.realize.as_mut().expect("set above");
            if let Some(p) = &a.plan {
                r.plan = flag_path(p)?;
            }
            if a.depth.is_some() {
                r.depth = a.depth;
            }
        }
        Command::Analyze(a) => {
            let s = cfg.analyze.as_mut().ok_or_else(|| missing("analyze"))?;
            if let Some(p) = &a.plan {
                s.plan = flag_path(p)?;
            }
            if a.depth.is_some() {
                s.depth = a.depth;
            }
            if let Some(w) = a.window {
                s.window = w;
            }
            if a.k.is_some() {
                s.k = a.k.clone();
            }
        }
        Command::Spectral(a) => {
            let s = cfg.spectral.as_mut().ok_or_else(|| missing("spectral"))?;
            if let Some(w) = a.window {
                s.window = w;
            }
            if a.gaussian_length.is_some() {
                s.gaussian_length = a.gaussian_length;
            }
        }
        Command::Sets(a) => {
            let s = cfg.sets.as_mut().ok_or_else(|| missing("sets"))?;
            if let Some(w) = a.window {
                s.window = w;
            }
            if a.radius.is_some() {
                s.radius = a.radius;
            }
            if let Some(r) = a.r {
                s.r = r;
            }
            if a.factor.is_some() {
                s.factor = a.factor;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    let cfg = effective_config(cli)?;
    // Relative input paths resolve against the config file's directory.
    let base = cli
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let name = match cli.command {
        Command::Build(_) => "build",
        Command::Realize(_) => "realize",
        Command::Analyze(_) => "analyze",
        Command::Spectral(_) => "spectral",
        Command::Sets(_) => "sets",
    };
    let meta = Meta {
        tool: "rigidmix",
        version: VERSION,
        command: name,
        config_hash: cfg.hash(),
        seed: cfg.seed,
    };
    let mut out = OutputDir::create(&cfg.output, meta)?;
    out.write("config.toml", &cfg.to_toml())?;
    match cli.command {
        Command::Build(_) => commands::build(&cfg, &base, &mut out),
        Command::Realize(_) => commands::realize(&cfg, &base, &mut out),
        Command::Analyze(_) => commands::analyze(&cfg, &base, &mut out),
        Command::Spectral(_) => commands::spectral(&cfg, &base, &mut out),
        Command::Sets(_) => commands::sets(&cfg, &base, &mut out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            ExitCode::from(u8::from(outcome.negative))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
