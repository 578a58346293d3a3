//! Experiment orchestration behind the command-line interface: input
//! loading, command dispatch, deterministic seeding, output rendering, and
//! run manifests.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::cocycle::GeneratorSet;
use crate::formats::{self, format_real, FormatError};
use crate::lyapunov::{self, LyapunovError, LyapunovReport, StabilityCertificate, Verdict};
use crate::pe::{self, PeError};
use crate::stabilization::{self, ControlError, StabilizeOptions, StabilizeOutcome};
use crate::switching::{PathError, SwitchingModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_BUDGET_EXHAUSTED: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Lyapunov,
    Spectrum,
    Certify,
    Occupation,
    Pe,
    Stabilize,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Lyapunov => "lyapunov",
            CommandKind::Spectrum => "spectrum",
            CommandKind::Certify => "certify",
            CommandKind::Occupation => "occupation",
            CommandKind::Pe => "pe",
            CommandKind::Stabilize => "stabilize",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Csv,
    #[default]
    StructuredText,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "structured-text" | "text" => Ok(OutputFormat::StructuredText),
            other => Err(format!(
                "unknown format `{other}` (expected csv or structured-text)"
            )),
        }
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub model_path: PathBuf,
    /// Generator file for analysis commands, plant file for `stabilize`.
    pub system_path: Option<PathBuf>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub lambda_target: Option<f64>,
    pub gamma_max: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub strict: bool,
    pub scan: bool,
    pub active_mode: usize,
    pub window: Option<f64>,
    pub mu: Option<f64>,
    pub horizon: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(command: CommandKind, model_path: impl Into<PathBuf>) -> Self {
        Self {
            command,
            model_path: model_path.into(),
            system_path: None,
            n: 64,
            trials: 200,
            seed: 0,
            lambda_target: None,
            gamma_max: 64.0,
            out: None,
            format: OutputFormat::StructuredText,
            strict: false,
            scan: false,
            active_mode: 0,
            window: None,
            mu: None,
            horizon: None,
        }
    }
}

/// Key-value pairs from a config file; CLI flags take precedence over these.
pub fn parse_config_file(text: &str) -> HashMap<String, String> {
    let mut map = HashMap::new();
    for raw in text.lines() {
        let stripped = raw.split('#').next().unwrap_or("");
        let mut tokens = stripped.split_whitespace();
        if let Some(key) = tokens.next() {
            let value = tokens.collect::<Vec<_>>().join(" ");
            map.insert(key.to_string(), value);
        }
    }
    map
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("reading {path}: {source}")]
    ReadInput {
        path: String,
        source: std::io::Error,
    },
    #[error("writing {path}: {source}")]
    WriteOutput {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] FormatError),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Lyapunov(#[from] LyapunovError),
    #[error("{0}")]
    Pe(#[from] PeError),
    #[error("{0}")]
    Path(#[from] PathError),
    #[error("{0}")]
    Control(ControlError),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ReadInput { .. } | HarnessError::WriteOutput { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }
}

/// Result of a completed run; the exit code distinguishes conclusive
/// successes from budget exhaustion and strict-mode inconclusive verdicts.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: String,
}

/// Executes a config end to end: reads inputs, dispatches, writes the output
/// atomically, and records a run manifest next to it.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    let started = Instant::now();
    let model_text = read_input(&config.model_path)?;
    let model = formats::parse_model(&model_text)?;
    let system_text = config
        .system_path
        .as_ref()
        .map(|p| read_input(p))
        .transpose()?;

    let (body, exit_code, summary) = dispatch(config, &model, system_text.as_deref())?;

    if let Some(out) = &config.out {
        write_output(out, &body)?;
        let manifest = render_manifest(config, &model_text, system_text.as_deref(), started);
        let manifest_path = manifest_path(out);
        write_output(&manifest_path, &manifest)?;
    } else {
        print!("{body}");
    }
    Ok(RunOutcome { exit_code, summary })
}

fn dispatch(
    config: &ExperimentConfig,
    model: &SwitchingModel,
    system_text: Option<&str>,
) -> Result<(String, i32, String), HarnessError> {
    if config.n == 0 || config.trials == 0 {
        return Err(HarnessError::Invalid(
            "n and trials must be at least 1".into(),
        ));
    }
    match config.command {
        CommandKind::Simulate => {
            let path = model.sample_path(config.n, config.seed);
            let body = render_simulate(&path, config.format);
            Ok((body, EXIT_OK, format!("sampled {} steps", path.len())))
        }
        CommandKind::Lyapunov => {
            let gen = parse_required_generators(system_text)?;
            let report = lyapunov::analyze(&gen, model, config.n, config.trials, config.seed)?;
            let body = render_report(&report, config.format);
            let summary = format!(
                "lambda_max_continuous = {}",
                format_real(report.lambda_max_continuous)
            );
            Ok((body, EXIT_OK, summary))
        }
        CommandKind::Spectrum => {
            let gen = parse_required_generators(system_text)?;
            let spectrum = lyapunov::lyap_spectrum(&gen, model, config.n, config.seed)?;
            let body = render_spectrum(&spectrum, config.format);
            Ok((
                body,
                EXIT_OK,
                format!("{} distinct exponents", spectrum.len()),
            ))
        }
        CommandKind::Certify => {
            let gen = parse_required_generators(system_text)?;
            let cert = if config.scan {
                lyapunov::certificate_scan(&gen, model, config.n, config.trials, config.seed)?
            } else {
                lyapunov::stability_certificate(&gen, model, config.n, config.trials, config.seed)?
            };
            let code = if config.strict && cert.verdict == Verdict::Inconclusive {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            };
            let summary = format!("verdict = {}", cert.verdict);
            Ok((render_certificate(&cert, config.format), code, summary))
        }
        CommandKind::Occupation => {
            let path = model.sample_path(config.n, config.seed);
            let horizon = config.horizon.unwrap_or_else(|| path.total_time());
            let body = render_occupation(model, &path, horizon, config.format)?;
            Ok((body, EXIT_OK, format!("horizon {}", format_real(horizon))))
        }
        CommandKind::Pe => {
            let window = config
                .window
                .ok_or_else(|| HarnessError::Invalid("pe requires --window".into()))?;
            let mu = config
                .mu
                .ok_or_else(|| HarnessError::Invalid("pe requires --mu".into()))?;
            let mut rows = Vec::with_capacity(config.trials);
            for trial in 0..config.trials {
                let path =
                    model.sample_path(config.n, crate::rng::derive_seed(config.seed, trial as u64));
                let horizon = config.horizon.unwrap_or_else(|| path.total_time());
                let check = pe::is_pe_on_horizon(&path, config.active_mode, window, mu, horizon)?;
                let average = pe::empirical_pe_average(&path, config.active_mode, horizon)?;
                rows.push((trial, check, average));
            }
            let passed = rows.iter().filter(|(_, c, _)| c.is_pe()).count();
            let body = render_pe(&rows, config.format);
            Ok((
                body,
                EXIT_OK,
                format!(
                    "{passed}/{} paths satisfied the window condition",
                    rows.len()
                ),
            ))
        }
        CommandKind::Stabilize => {
            let plant_text = system_text
                .ok_or_else(|| HarnessError::Invalid("stabilize requires --plant".into()))?;
            let subsystems = formats::parse_plant(plant_text)?;
            let plant = stabilization::build_plant(subsystems).map_err(HarnessError::Control)?;
            let lambda = config.lambda_target.ok_or_else(|| {
                HarnessError::Invalid("stabilize requires --lambda <target>".into())
            })?;
            let options = StabilizeOptions {
                gamma_max: config.gamma_max,
                n: config.n,
                trials: config.trials,
                seed: config.seed,
            };
            match stabilization::stabilize_to_rate(&plant, model, lambda, options) {
                Ok(outcome) => {
                    let summary = format!(
                        "gamma = {} achieves upper bound {}",
                        outcome.gamma,
                        format_real(outcome.achieved_upper_continuous)
                    );
                    Ok((render_gains(&outcome, config.format), EXIT_OK, summary))
                }
                Err(ControlError::BudgetExhausted { best, gamma_max }) => {
                    let summary = format!(
                        "gamma budget {gamma_max} exhausted; best upper bound {} at gamma = {}",
                        format_real(best.achieved_upper_continuous),
                        best.gamma
                    );
                    Ok((
                        render_gains(&best, config.format),
                        EXIT_BUDGET_EXHAUSTED,
                        summary,
                    ))
                }
                Err(other) => Err(HarnessError::Control(other)),
            }
        }
    }
}

fn parse_required_generators(system_text: Option<&str>) -> Result<GeneratorSet, HarnessError> {
    let text = system_text
        .ok_or_else(|| HarnessError::Invalid("this command requires --generators".into()))?;
    Ok(formats::parse_generators(text)?)
}

fn read_input(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::ReadInput {
        path: path.display().to_string(),
        source,
    })
}

fn write_output(path: &Path, content: &str) -> Result<(), HarnessError> {
    formats::write_atomic(path, content).map_err(|source| HarnessError::WriteOutput {
        path: path.display().to_string(),
        source,
    })
}

/// `<out>.manifest`, alongside the output file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    name.push_str(".manifest");
    out.with_file_name(name)
}

fn render_manifest(
    config: &ExperimentConfig,
    model_text: &str,
    system_text: Option<&str>,
    started: Instant,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("command {}\n", config.command.name()));
    out.push_str(&format!(
        "model_hash {:016x}\n",
        formats::fnv1a64(model_text.as_bytes())
    ));
    if let Some(text) = system_text {
        out.push_str(&format!(
            "system_hash {:016x}\n",
            formats::fnv1a64(text.as_bytes())
        ));
    }
    out.push_str(&format!("seed {}\n", config.seed));
    out.push_str(&format!("n {}\n", config.n));
    out.push_str(&format!("trials {}\n", config.trials));
    out.push_str(&format!("wall_ms {}\n", started.elapsed().as_millis()));
    out
}

fn render_simulate(path: &crate::switching::SwitchPath, format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str("step,mode,dwell,switch_time\n");
            for k in 0..path.len() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    k,
                    path.mode(k),
                    format_real(path.dwell(k)),
                    format_real(path.switch_time(k + 1))
                ));
            }
        }
        OutputFormat::StructuredText => {
            for k in 0..path.len() {
                out.push_str(&format!(
                    "step {} {} {} {}\n",
                    k,
                    path.mode(k),
                    format_real(path.dwell(k)),
                    format_real(path.switch_time(k + 1))
                ));
            }
        }
    }
    out
}

fn render_report(report: &LyapunovReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("trial,n,log_norm,lambda_d,lambda_c\n");
            for (trial, log_norm) in report.mc.log_norms.iter().enumerate() {
                let lambda_d = log_norm / report.mc.n as f64;
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    trial,
                    report.mc.n,
                    format_real(*log_norm),
                    format_real(lambda_d),
                    format_real(lambda_d / report.mean_dwell)
                ));
            }
            out
        }
        OutputFormat::StructuredText => {
            let mut out = String::new();
            out.push_str(&format!(
                "lambda_max_discrete {}\n",
                format_real(report.lambda_max_discrete)
            ));
            out.push_str(&format!(
                "lambda_max_continuous {}\n",
                format_real(report.lambda_max_continuous)
            ));
            out.push_str(&format!("mean_dwell {}\n", format_real(report.mean_dwell)));
            out.push_str(&format!(
                "trace_residual {}\n",
                format_real(report.trace_residual)
            ));
            out.push_str(&format!("mc_mean {}\n", format_real(report.mc.mean)));
            out.push_str(&format!(
                "mc_half_width {}\n",
                format_real(report.mc.half_width)
            ));
            out.push_str(&format!("mc_n {}\n", report.mc.n));
            out.push_str(&format!("mc_trials {}\n", report.mc.trials));
            for entry in &report.spectrum {
                out.push_str(&format!(
                    "spectrum {} {}\n",
                    format_real(entry.exponent),
                    entry.multiplicity
                ));
            }
            out
        }
    }
}

fn render_spectrum(entries: &[lyapunov::SpectrumEntry], format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str("index,exponent,multiplicity\n");
            for (i, e) in entries.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    i,
                    format_real(e.exponent),
                    e.multiplicity
                ));
            }
        }
        OutputFormat::StructuredText => {
            for e in entries {
                out.push_str(&format!(
                    "spectrum {} {}\n",
                    format_real(e.exponent),
                    e.multiplicity
                ));
            }
        }
    }
    out
}

fn render_certificate(cert: &StabilityCertificate, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("verdict,n,trials,mean_log_norm,confidence_half_width\n");
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                cert.verdict,
                cert.n,
                cert.trials,
                format_real(cert.mean_log_norm),
                format_real(cert.confidence_half_width)
            ));
            out
        }
        OutputFormat::StructuredText => format!(
            "verdict {}\nn {}\ntrials {}\nmean_log_norm {}\nconfidence_half_width {}\n",
            cert.verdict,
            cert.n,
            cert.trials,
            format_real(cert.mean_log_norm),
            format_real(cert.confidence_half_width)
        ),
    }
}

fn render_occupation(
    model: &SwitchingModel,
    path: &crate::switching::SwitchPath,
    horizon: f64,
    format: OutputFormat,
) -> Result<String, HarnessError> {
    let m = model.mean_dwell();
    let mut rows = Vec::with_capacity(model.modes());
    for mode in 0..model.modes() {
        let fraction = path.occupation_fraction(horizon, mode)?;
        let stationary = model.invariant_vector()[mode] * model.dwell()[mode].mean() / m;
        rows.push((mode, fraction, stationary));
    }
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str("mode,fraction,stationary_fraction\n");
            for (mode, fraction, stationary) in rows {
                out.push_str(&format!(
                    "{},{},{}\n",
                    mode,
                    format_real(fraction),
                    format_real(stationary)
                ));
            }
        }
        OutputFormat::StructuredText => {
            for (mode, fraction, stationary) in rows {
                out.push_str(&format!(
                    "mode {} fraction {} stationary {}\n",
                    mode,
                    format_real(fraction),
                    format_real(stationary)
                ));
            }
        }
    }
    Ok(out)
}

fn render_pe(rows: &[(usize, pe::PEWindowCheck, f64)], format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str("path_id,T,mu,pe_pass,first_violation_time,empirical_average\n");
            for (id, check, average) in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    id,
                    format_real(check.t_window),
                    format_real(check.mu),
                    check.is_pe(),
                    check.violated_at.map(format_real).unwrap_or_default(),
                    format_real(*average)
                ));
            }
        }
        OutputFormat::StructuredText => {
            for (id, check, average) in rows {
                out.push_str(&format!(
                    "path {} pe {} violation {} average {}\n",
                    id,
                    check.is_pe(),
                    check
                        .violated_at
                        .map(format_real)
                        .unwrap_or_else(|| "none".into()),
                    format_real(*average)
                ));
            }
        }
    }
    out
}

fn render_gains(outcome: &StabilizeOutcome, format: OutputFormat) -> String {
    let verdict = if outcome.report.mc.upper() < 0.0 {
        Verdict::AlmostSurelyStable
    } else if outcome.report.mc.lower() > 0.0 {
        Verdict::LikelyUnstable
    } else {
        Verdict::Inconclusive
    };
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("mode,row,col,value\n");
            for (mode, k) in outcome.gains.gains.iter().enumerate() {
                for i in 0..k.rows() {
                    for j in 0..k.cols() {
                        out.push_str(&format!("{mode},{i},{j},{}\n", format_real(k.get(i, j))));
                    }
                }
            }
            out
        }
        OutputFormat::StructuredText => {
            let mut out = String::new();
            out.push_str(&format!("gamma {}\n", format_real(outcome.gamma)));
            out.push_str(&format!(
                "achieved_lambda {}\n",
                format_real(outcome.report.lambda_max_continuous)
            ));
            out.push_str(&format!(
                "achieved_upper {}\n",
                format_real(outcome.achieved_upper_continuous)
            ));
            out.push_str(&format!("certificate {verdict}\n"));
            out.push_str(&format!(
                "envelope_c {}\n",
                format_real(outcome.gains.envelope.c_emp)
            ));
            out.push_str(&format!("envelope_d {}\n", outcome.gains.envelope.d_used));
            for k in &outcome.gains.gains {
                out.push_str(&format!("gain {} {}", k.rows(), k.cols()));
                for v in k.data() {
                    out.push(' ');
                    out.push_str(&format_real(*v));
                }
                out.push('\n');
            }
            out
        }
    }
}
