//! Lyapunov exponent estimation for the random switched system: maximal
//! exponent along paths, Monte Carlo bounds with confidence intervals, the
//! full spectrum with multiplicities, almost-sure stability certificates,
//! and the trace-sum identity.

use thiserror::Error;

use crate::cocycle::{self, CocycleError, FactorCache, GeneratorSet};
use crate::linalg::{qr, symmetric_eigen, Matrix};
use crate::parallel;
use crate::rng::derive_seed;
use crate::switching::{SwitchPath, SwitchingModel};

/// Stream index reserved for the spectrum path inside a report, clear of the
/// per-trial indices `0..trials`.
const SPECTRUM_STREAM: u64 = u64::MAX - 0xA5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("{0}")]
    Cocycle(#[from] CocycleError),
    #[error("generator count {generators} does not match the model's {modes} modes")]
    ModelMismatch { generators: usize, modes: usize },
    #[error("{got} trials given, at least {needed} required")]
    TooFewTrials { got: usize, needed: usize },
    #[error("n must be at least 1")]
    EmptyHorizon,
}

/// One merged spectrum entry: an exponent and its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry {
    pub exponent: f64,
    pub multiplicity: usize,
}

/// Monte Carlo estimate of the per-step log-norm growth rate.
#[derive(Debug, Clone)]
pub struct McEstimate {
    /// Sample mean of `(1/n) log ||Phi(n, omega)||` over trials.
    pub mean: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub n: usize,
    pub trials: usize,
    /// Per-trial `log ||Phi(n, omega)||`, in trial order.
    pub log_norms: Vec<f64>,
}

impl McEstimate {
    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    AlmostSurelyStable,
    Inconclusive,
    LikelyUnstable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::AlmostSurelyStable => "AlmostSurelyStable",
            Verdict::Inconclusive => "Inconclusive",
            Verdict::LikelyUnstable => "LikelyUnstable",
        };
        f.write_str(s)
    }
}

/// Monte Carlo stability certificate based on the sign of
/// `E[log ||Phi(n, omega)||]`.
#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    pub verdict: Verdict,
    pub n: usize,
    pub trials: usize,
    pub mean_log_norm: f64,
    pub confidence_half_width: f64,
}

/// Bundled estimation results for one generator set and model.
#[derive(Debug, Clone)]
pub struct LyapunovReport {
    /// Headline discrete-time maximal exponent (the Monte Carlo mean).
    pub lambda_max_discrete: f64,
    /// `lambda_max_discrete / mean_dwell`, by construction.
    pub lambda_max_continuous: f64,
    /// Estimated exponents with multiplicities, strictly decreasing.
    pub spectrum: Vec<SpectrumEntry>,
    pub mc: McEstimate,
    /// Absolute defect of the weighted exponent sum against the dwell- and
    /// probability-weighted generator traces.
    pub trace_residual: f64,
    pub mean_dwell: f64,
}

fn check_compatible(gen: &GeneratorSet, model: &SwitchingModel) -> Result<(), LyapunovError> {
    if gen.count() != model.modes() {
        return Err(LyapunovError::ModelMismatch {
            generators: gen.count(),
            modes: model.modes(),
        });
    }
    Ok(())
}

/// Maximal exponent along one freshly sampled path: returns the discrete
/// rate `log ||Phi(n)|| / n` and its continuous companion (divided by the
/// mean dwell).
pub fn max_lyap_path(
    gen: &GeneratorSet,
    model: &SwitchingModel,
    n: usize,
    seed: u64,
) -> Result<(f64, f64), LyapunovError> {
    check_compatible(gen, model)?;
    if n == 0 {
        return Err(LyapunovError::EmptyHorizon);
    }
    let path = model.sample_path(n, seed);
    let lambda_d = cocycle::cocycle_log_norm(gen, &path, n)? / n as f64;
    Ok((lambda_d, lambda_d / model.mean_dwell()))
}

fn mc_log_norms(
    gen: &GeneratorSet,
    model: &SwitchingModel,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, LyapunovError> {
    let workers = parallel::worker_count();
    let results = parallel::run_indexed(trials, workers, |trial| {
        let path = model.sample_path(n, derive_seed(seed, trial as u64));
        cocycle::cocycle_log_norm(gen, &path, n)
    });
    results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(LyapunovError::from)
}

fn mean_and_half_width(samples: &[f64]) -> (f64, f64) {
    let t = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / t;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (t - 1.0);
    (mean, 1.96 * (var / t).sqrt())
}

/// Monte Carlo estimate of `(1/n) E[log ||Phi(n, omega)||]` over independent
/// trials; trial seeds derive from `(seed, trial)` so any worker count gives
/// bit-identical results.
pub fn max_lyap_mc(
    gen: &GeneratorSet,
    model: &SwitchingModel,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate, LyapunovError> {
    check_compatible(gen, model)?;
    if n == 0 {
        return Err(LyapunovError::EmptyHorizon);
    }
    if trials < 2 {
        return Err(LyapunovError::TooFewTrials {
            got: trials,
            needed: 2,
        });
    }
    let log_norms = mc_log_norms(gen, model, n, trials, seed)?;
    let rates: Vec<f64> = log_norms.iter().map(|l| l / n as f64).collect();
    let (mean, half_width) = mean_and_half_width(&rates);
    Ok(McEstimate {
        mean,
        half_width,
        n,
        trials,
        log_norms,
    })
}

/// Options for the spectrum estimator.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    /// Steps between reorthonormalizations of the propagated frame.
    pub cadence: usize,
    /// Merge tolerance for nearby exponents; `None` uses `10/n + 1e-6`, the
    /// finite-horizon resolution limit.
    pub cluster_tol: Option<f64>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            cadence: 10,
            cluster_tol: None,
        }
    }
}

/// Full Lyapunov spectrum (discrete-time exponents) along one sampled path.
pub fn lyap_spectrum(
    gen: &GeneratorSet,
    model: &SwitchingModel,
    n: usize,
    seed: u64,
) -> Result<Vec<SpectrumEntry>, LyapunovError> {
    lyap_spectrum_with(gen, model, n, seed, SpectrumOptions::default())
}

pub fn lyap_spectrum_with(
    gen: &GeneratorSet,
    model: &SwitchingModel,
    n: usize,
    seed: u64,
    options: SpectrumOptions,
) -> Result<Vec<SpectrumEntry>, LyapunovError> {
    check_compatible(gen, model)?;
    if n == 0 {
        return Err(LyapunovError::EmptyHorizon);
    }
    let path = model.sample_path(n, seed);
    spectrum_along_path(gen, &path, n, options)
}

/// Spectrum of singular-value growth rates of the product along `path`,
/// via a propagated frame that is reorthonormalized by QR every `cadence`
/// steps, with per-step scalar rescaling in between.
///
/// The initial frame is the eigenframe of `sum_i L_i^T L_i`. Any fixed
/// orthogonal frame yields the same limits; this one transforms covariantly
/// under an orthogonal change of basis of the generators, so estimates at
/// finite horizon are already basis-independent.
pub fn spectrum_along_path(
    gen: &GeneratorSet,
    path: &SwitchPath,
    n: usize,
    options: SpectrumOptions,
) -> Result<Vec<SpectrumEntry>, LyapunovError> {
    if n == 0 {
        return Err(LyapunovError::EmptyHorizon);
    }
    let d = gen.dimension();
    let cadence = options.cadence.max(1);

    let mut gram = Matrix::zeros(d, d);
    for g in gen.generators() {
        gram = gram.add(&g.transpose().matmul(g));
    }
    let (_, frame) = symmetric_eigen(&gram);
    let traces: Vec<f64> = gen.generators().iter().map(Matrix::trace).collect();

    let mut basis = frame;
    let mut log_r = vec![0.0f64; d];
    let mut pending_scale = 0.0f64;
    // Upper bound on log kappa of the product accumulated since the last
    // reorthonormalization: each factor contributes -log|det core| =
    // d*log_scale - t*trace(L). Stiff generators exhaust the budget in a
    // step or two and force an early QR, which keeps the frame's smallest
    // direction representable.
    let mut conditioning_budget = 0.0f64;
    const CONDITIONING_LIMIT: f64 = 30.0;
    let mut cache = FactorCache::new(gen);

    for k in 0..n {
        let f = cache.factor(path.mode(k), path.dwell(k))?;
        basis = f.core().matmul(&basis);
        pending_scale += f.log_scale();
        conditioning_budget += d as f64 * f.log_scale() - path.dwell(k) * traces[path.mode(k)];
        let c = basis.max_abs();
        if c == 0.0 || !c.is_finite() {
            return Err(LyapunovError::Cocycle(CocycleError::NumericalDegeneracy));
        }
        basis = basis.scale(1.0 / c);
        pending_scale += c.ln();

        if (k + 1).is_multiple_of(cadence) || k + 1 == n || conditioning_budget > CONDITIONING_LIMIT
        {
            let (q, r) = qr(&basis);
            for (i, acc) in log_r.iter_mut().enumerate() {
                let rii = r.get(i, i);
                if rii <= 0.0 {
                    return Err(LyapunovError::Cocycle(CocycleError::NumericalDegeneracy));
                }
                *acc += rii.ln() + pending_scale;
            }
            pending_scale = 0.0;
            conditioning_budget = 0.0;
            basis = q;
        }
    }

    let mut exponents: Vec<f64> = log_r.iter().map(|l| l / n as f64).collect();
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let tol = options.cluster_tol.unwrap_or(10.0 / n as f64 + 1e-6);
    let mut entries: Vec<SpectrumEntry> = Vec::new();
    let mut group: Vec<f64> = Vec::new();
    for &x in &exponents {
        if let Some(&last) = group.last() {
            if last - x > tol {
                entries.push(merge_group(&group));
                group.clear();
            }
        }
        group.push(x);
    }
    if !group.is_empty() {
        entries.push(merge_group(&group));
    }
    debug_assert_eq!(entries.iter().map(|e| e.multiplicity).sum::<usize>(), d);
    Ok(entries)
}

fn merge_group(group: &[f64]) -> SpectrumEntry {
    SpectrumEntry {
        exponent: group.iter().sum::<f64>() / group.len() as f64,
        multiplicity: group.len(),
    }
}

/// Certifies almost-sure stability from the sign of the Monte Carlo
/// confidence interval for `E[log ||Phi(n, omega)||]`.
pub fn stability_certificate(
    gen: &GeneratorSet,
    model: &SwitchingModel,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<StabilityCertificate, LyapunovError> {
    check_compatible(gen, model)?;
    if n == 0 {
        return Err(LyapunovError::EmptyHorizon);
    }
    if trials < 30 {
        return Err(LyapunovError::TooFewTrials {
            got: trials,
            needed: 30,
        });
    }
    let log_norms = mc_log_norms(gen, model, n, trials, seed)?;
    let (mean, half_width) = mean_and_half_width(&log_norms);
    let verdict = if mean + half_width < 0.0 {
        Verdict::AlmostSurelyStable
    } else if mean - half_width > 0.0 {
        Verdict::LikelyUnstable
    } else {
        Verdict::Inconclusive
    };
    Ok(StabilityCertificate {
        verdict,
        n,
        trials,
        mean_log_norm: mean,
        confidence_half_width: half_width,
    })
}

/// Runs certificates over a doubling horizon schedule `8, 16, ..., n_max`
/// and returns the first conclusive one (or the last, at `n_max`).
pub fn certificate_scan(
    gen: &GeneratorSet,
    model: &SwitchingModel,
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<StabilityCertificate, LyapunovError> {
    let mut n = 8.min(n_max.max(1));
    let mut stage = 0u64;
    loop {
        let cert = stability_certificate(gen, model, n, trials, derive_seed(seed, stage))?;
        if cert.verdict != Verdict::Inconclusive || n >= n_max {
            return Ok(cert);
        }
        n = (n * 2).min(n_max);
        stage += 1;
    }
}

/// Absolute residual of the trace identity: the multiplicity-weighted sum of
/// discrete exponents against `sum_i p_i tau_i trace(L_i)`.
pub fn trace_identity_residual(
    gen: &GeneratorSet,
    model: &SwitchingModel,
    spectrum: &[SpectrumEntry],
) -> Result<f64, LyapunovError> {
    check_compatible(gen, model)?;
    let weighted: f64 = spectrum
        .iter()
        .map(|e| e.exponent * e.multiplicity as f64)
        .sum();
    let traces: f64 = model
        .invariant_vector()
        .iter()
        .zip(model.dwell())
        .zip(gen.generators())
        .map(|((p, d), l)| p * d.mean() * l.trace())
        .sum();
    Ok((weighted - traces).abs())
}

/// Assembles the full report: Monte Carlo bound, spectrum, trace residual,
/// and the discrete/continuous maximal exponents.
pub fn analyze(
    gen: &GeneratorSet,
    model: &SwitchingModel,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovReport, LyapunovError> {
    let mc = max_lyap_mc(gen, model, n, trials, seed)?;
    let spectrum = lyap_spectrum(gen, model, n, derive_seed(seed, SPECTRUM_STREAM))?;
    let trace_residual = trace_identity_residual(gen, model, &spectrum)?;
    let mean_dwell = model.mean_dwell();
    let lambda_max_discrete = mc.mean;
    Ok(LyapunovReport {
        lambda_max_discrete,
        lambda_max_continuous: lambda_max_discrete / mean_dwell,
        spectrum,
        mc,
        trace_residual,
        mean_dwell,
    })
}
