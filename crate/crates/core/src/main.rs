//! Command-line front end: flag parsing and config-file merging. Flags
//! override config-file values, which override built-in defaults.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use randswitch::harness::{
    self, CommandKind, ExperimentConfig, OutputFormat, EXIT_IO, EXIT_VALIDATION,
};

#[derive(Parser)]
#[command(
    name = "randswitch",
    version,
    about = "Random switched linear systems: simulation, Lyapunov exponents, stabilization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a switching path and emit its steps
    Simulate(CommonArgs),
    /// Estimate the maximal Lyapunov exponent, spectrum, and trace residual
    Lyapunov(CommonArgs),
    /// Estimate the Lyapunov spectrum with multiplicities
    Spectrum(CommonArgs),
    /// Certify almost-sure stability from Monte Carlo trials
    Certify(CertifyArgs),
    /// Report per-mode occupation fractions against their stationary values
    Occupation(OccupationArgs),
    /// Check persistent-excitation windows over sampled paths
    Pe(PeArgs),
    /// Sweep feedback gains until a target decay rate is met
    Stabilize(StabilizeArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file with `key value` lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Switching model file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Generator file (one matrix per mode)
    #[arg(long)]
    generators: Option<PathBuf>,
    /// Steps per path
    #[arg(long)]
    n: Option<usize>,
    /// Monte Carlo trials
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; all per-trial seeds derive from it
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or structured-text
    #[arg(long)]
    format: Option<String>,
    /// Treat inconclusive certificates as failures (exit 4)
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scan horizons 8, 16, ... up to n instead of testing n alone
    #[arg(long)]
    scan: bool,
}

#[derive(Args)]
struct OccupationArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Horizon to measure over (defaults to the full sampled path)
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct PeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mode whose activity defines the excitation signal
    #[arg(long)]
    active_mode: Option<usize>,
    /// Window length T
    #[arg(long)]
    window: Option<f64>,
    /// Required activity mu per window
    #[arg(long)]
    mu: Option<f64>,
    /// Horizon to verify (defaults to each sampled path's length)
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct StabilizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Plant file with the per-mode subsystems
    #[arg(long)]
    plant: Option<PathBuf>,
    /// Target continuous-time decay rate
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Largest placement rate tried by the doubling sweep
    #[arg(long)]
    gamma_max: Option<f64>,
}

struct FileDefaults(std::collections::HashMap<String, String>);

impl FileDefaults {
    fn load(path: Option<&PathBuf>) -> Result<Self, String> {
        match path {
            None => Ok(Self(Default::default())),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("reading config {}: {e}", p.display()))?;
                Ok(Self(harness::parse_config_file(&text)))
            }
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.0.get(key).map(PathBuf::from)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key `{key}`: cannot parse `{raw}`")),
        }
    }

    fn flag(&self, key: &str) -> Result<bool, String> {
        Ok(self.parse::<bool>(key)?.unwrap_or(false))
    }
}

fn resolve(
    kind: CommandKind,
    common: &CommonArgs,
    system_flag: Option<&PathBuf>,
    system_key: &str,
) -> Result<ExperimentConfig, String> {
    let file = FileDefaults::load(common.config.as_ref())?;
    let model = common
        .model
        .clone()
        .or_else(|| file.path("model"))
        .ok_or("a model file is required (--model)")?;
    let mut config = ExperimentConfig::new(kind, model);
    config.system_path = system_flag.cloned().or_else(|| file.path(system_key));
    if let Some(n) = common.n.or(file.parse("n")?) {
        config.n = n;
    }
    if let Some(trials) = common.trials.or(file.parse("trials")?) {
        config.trials = trials;
    }
    if let Some(seed) = common.seed.or(file.parse("seed")?) {
        config.seed = seed;
    }
    config.out = common.out.clone().or_else(|| file.path("out"));
    let format = match &common.format {
        Some(f) => Some(f.clone()),
        None => file.parse::<String>("format")?,
    };
    if let Some(f) = format {
        config.format = f.parse::<OutputFormat>()?;
    }
    config.strict = common.strict || file.flag("strict")?;
    Ok(config)
}

fn build_config(command: &Command) -> Result<ExperimentConfig, String> {
    match command {
        Command::Simulate(c) => resolve(
            CommandKind::Simulate,
            c,
            c.generators.as_ref(),
            "generators",
        ),
        Command::Lyapunov(c) => resolve(
            CommandKind::Lyapunov,
            c,
            c.generators.as_ref(),
            "generators",
        ),
        Command::Spectrum(c) => resolve(
            CommandKind::Spectrum,
            c,
            c.generators.as_ref(),
            "generators",
        ),
        Command::Certify(args) => {
            let file = FileDefaults::load(args.common.config.as_ref())?;
            let mut config = resolve(
                CommandKind::Certify,
                &args.common,
                args.common.generators.as_ref(),
                "generators",
            )?;
            config.scan = args.scan || file.flag("scan")?;
            Ok(config)
        }
        Command::Occupation(args) => {
            let file = FileDefaults::load(args.common.config.as_ref())?;
            let mut config = resolve(
                CommandKind::Occupation,
                &args.common,
                args.common.generators.as_ref(),
                "generators",
            )?;
            config.horizon = match args.horizon {
                Some(h) => Some(h),
                None => file.parse("horizon")?,
            };
            Ok(config)
        }
        Command::Pe(args) => {
            let file = FileDefaults::load(args.common.config.as_ref())?;
            let mut config = resolve(
                CommandKind::Pe,
                &args.common,
                args.common.generators.as_ref(),
                "generators",
            )?;
            config.active_mode = match args.active_mode {
                Some(m) => m,
                None => file.parse("active-mode")?.unwrap_or(0),
            };
            config.window = match args.window {
                Some(w) => Some(w),
                None => file.parse("window")?,
            };
            config.mu = match args.mu {
                Some(m) => Some(m),
                None => file.parse("mu")?,
            };
            config.horizon = match args.horizon {
                Some(h) => Some(h),
                None => file.parse("horizon")?,
            };
            // A single path is the natural default for window checks.
            if args.common.trials.is_none() && file.parse::<usize>("trials")?.is_none() {
                config.trials = 1;
            }
            Ok(config)
        }
        Command::Stabilize(args) => {
            let file = FileDefaults::load(args.common.config.as_ref())?;
            let mut config = resolve(
                CommandKind::Stabilize,
                &args.common,
                args.plant.as_ref(),
                "plant",
            )?;
            config.lambda_target = match args.lambda {
                Some(l) => Some(l),
                None => file.parse("lambda")?,
            };
            if let Some(g) = args.gamma_max.or(file.parse("gamma-max")?) {
                config.gamma_max = g;
            }
            Ok(config)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli.command) {
        Ok(c) => c,
        Err(message) => {
            eprintln!("randswitch: {message}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    match harness::run(&config) {
        Ok(outcome) => {
            eprintln!("randswitch: {}", outcome.summary);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(err) => {
            eprintln!("randswitch: error: {err}");
            let code = err.exit_code();
            debug_assert!(code == EXIT_VALIDATION || code == EXIT_IO);
            ExitCode::from(code as u8)
        }
    }
}
