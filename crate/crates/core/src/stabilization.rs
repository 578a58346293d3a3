//! Feedback synthesis for the randomly switched control system: the
//! augmented block plant, per-mode pole placement, and a doubling sweep over
//! the placement rate until the estimated closed-loop exponent reaches a
//! prescribed decay target.

use thiserror::Error;

use crate::cocycle::GeneratorSet;
use crate::linalg::{self, eigenvalues, expm_normalized, svd, Lu, Matrix};
use crate::lyapunov::{self, LyapunovError, LyapunovReport};
use crate::rng::{derive_seed, Stream};
use crate::switching::SwitchingModel;

/// Pole-placement verification tolerance (relative to the pole magnitude).
const PLACEMENT_TOL: f64 = 1e-6;
/// Allowed excess of closed-loop spectral abscissa over `-gamma`.
const ABSCISSA_TOL: f64 = 1e-8;
/// Attempts at a Heymann reduction before giving up on a multi-input pair.
const HEYMANN_ATTEMPTS: usize = 64;
/// Grid used when measuring the empirical decay envelope.
const ENVELOPE_T_MAX: f64 = 10.0;
const ENVELOPE_GRID: usize = 200;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("subsystem {mode} is not controllable")]
    Uncontrollable { mode: usize },
    #[error("placement rate gamma must be at least 1, got {0}")]
    InvalidGamma(f64),
    #[error("closed-loop spectral abscissa {max_real} exceeds -gamma = {}", -gamma)]
    SpectrumViolation { max_real: f64, gamma: f64 },
    #[error("pole placement failed for subsystem {mode}")]
    PlacementFailed { mode: usize },
    #[error("plant must contain a subsystem with positive dimension")]
    EmptyPlant,
    #[error("gamma budget {gamma_max} exhausted; best achieved upper bound {}",
            best.achieved_upper_continuous)]
    BudgetExhausted {
        gamma_max: f64,
        best: Box<StabilizeOutcome>,
    },
    #[error("{0}")]
    Lyapunov(#[from] LyapunovError),
    #[error("{0}")]
    Linalg(#[from] linalg::LinalgError),
}

/// One controlled subsystem `(A_i, B_i)`. Zero-dimensional subsystems are
/// allowed and represent modes during which no state is controlled.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsystem {
    a: Matrix,
    b: Matrix,
}

impl Subsystem {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self, ControlError> {
        if !a.is_square() {
            return Err(ControlError::DimensionMismatch(format!(
                "state matrix is {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != a.rows() {
            return Err(ControlError::DimensionMismatch(format!(
                "input matrix has {} rows for a {}-dimensional state",
                b.rows(),
                a.rows()
            )));
        }
        Ok(Self { a, b })
    }

    /// The empty subsystem with no state and no input.
    pub fn trivial() -> Self {
        Self {
            a: Matrix::zeros(0, 0),
            b: Matrix::zeros(0, 0),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }
}

/// The augmented plant: block-diagonal drift, per-mode input injections, and
/// the canonical projections onto each block.
#[derive(Debug, Clone)]
pub struct ControlPlant {
    subsystems: Vec<Subsystem>,
    total_dim: usize,
    a_hat: Matrix,
    b_hat: Vec<Matrix>,
    projections: Vec<Matrix>,
}

impl ControlPlant {
    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn modes(&self) -> usize {
        self.subsystems.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn a_hat(&self) -> &Matrix {
        &self.a_hat
    }

    pub fn b_hat(&self, mode: usize) -> &Matrix {
        &self.b_hat[mode]
    }

    pub fn projection(&self, mode: usize) -> &Matrix {
        &self.projections[mode]
    }
}

/// Assembles the augmented plant from per-mode subsystems.
pub fn build_plant(subsystems: Vec<Subsystem>) -> Result<ControlPlant, ControlError> {
    if subsystems.is_empty() {
        return Err(ControlError::EmptyPlant);
    }
    let total_dim: usize = subsystems.iter().map(Subsystem::state_dim).sum();
    if total_dim == 0 {
        return Err(ControlError::EmptyPlant);
    }
    let mut a_hat = Matrix::zeros(total_dim, total_dim);
    let mut b_hat = Vec::with_capacity(subsystems.len());
    let mut projections = Vec::with_capacity(subsystems.len());
    let mut offset = 0;
    for sub in &subsystems {
        let d = sub.state_dim();
        a_hat.set_block(offset, offset, sub.a());
        let mut inj = Matrix::zeros(total_dim, sub.input_dim());
        inj.set_block(offset, 0, sub.b());
        b_hat.push(inj);
        let mut proj = Matrix::zeros(d, total_dim);
        for i in 0..d {
            proj.set(i, offset + i, 1.0);
        }
        projections.push(proj);
        offset += d;
    }
    Ok(ControlPlant {
        subsystems,
        total_dim,
        a_hat,
        b_hat,
        projections,
    })
}

/// Rank of the Kalman controllability matrix `[B, AB, ..., A^{d-1}B]`.
pub fn controllability_rank(a: &Matrix, b: &Matrix) -> Result<usize, ControlError> {
    if !a.is_square() || b.rows() != a.rows() {
        return Err(ControlError::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let d = a.rows();
    if d == 0 || b.cols() == 0 {
        return Ok(0);
    }
    let mut kalman = Matrix::zeros(d, d * b.cols());
    let mut power = b.clone();
    for block in 0..d {
        kalman.set_block(0, block * b.cols(), &power);
        power = a.matmul(&power);
    }
    let sigma = svd(&kalman).sigma;
    let tol = sigma[0] * (d.max(d * b.cols()) as f64) * f64::EPSILON * 16.0;
    Ok(sigma.iter().filter(|&&s| s > tol).count())
}

fn is_controllable(a: &Matrix, b: &Matrix) -> Result<bool, ControlError> {
    Ok(controllability_rank(a, b)? == a.rows())
}

/// Target poles `{-gamma, -gamma-1, ..., -gamma-(d-1)}`: distinct and real,
/// which keeps the placed system diagonalizable.
fn target_poles(gamma: f64, d: usize) -> Vec<f64> {
    (0..d).map(|k| -gamma - k as f64).collect()
}

/// Places the spectrum of `A + B K` at `{-gamma-k}` and returns `K`.
///
/// Single-input pairs go through Ackermann's formula on the controllability
/// matrix; multi-input pairs are first reduced to single-input form by a
/// seeded Heymann search.
pub fn place_gain(a: &Matrix, b: &Matrix, gamma: f64) -> Result<Matrix, ControlError> {
    if !a.is_square() || b.rows() != a.rows() {
        return Err(ControlError::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if !(gamma >= 1.0) {
        return Err(ControlError::InvalidGamma(gamma));
    }
    let d = a.rows();
    let m = b.cols();
    if d == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    if !is_controllable(a, b)? {
        return Err(ControlError::Uncontrollable { mode: 0 });
    }

    // Poles already at the targets: keep the open loop.
    let zero_gain = Matrix::zeros(m, d);
    if verify_placement(a, b, &zero_gain, gamma).is_ok() {
        return Ok(zero_gain);
    }

    if m == 1 {
        let k = ackermann(a, b, gamma).ok_or(ControlError::PlacementFailed { mode: 0 })?;
        verify_placement(a, b, &k, gamma)?;
        return Ok(k);
    }

    // Heymann reduction: find v and F with (A + B F, B v) controllable,
    // place single-input, then fold back as K = F + v k.
    let mut rng = Stream::new(0x0048_4945_594D_414Eu64 ^ ((d as u64) << 8) ^ m as u64);
    for attempt in 0..HEYMANN_ATTEMPTS {
        let v = if attempt < m {
            Matrix::from_fn(m, 1, |i, _| if i == attempt { 1.0 } else { 0.0 })
        } else {
            Matrix::from_fn(m, 1, |_, _| 2.0 * rng.next_f64() - 1.0)
        };
        let f = if attempt == 0 {
            Matrix::zeros(m, d)
        } else {
            Matrix::from_fn(m, d, |_, _| 2.0 * rng.next_f64() - 1.0)
        };
        let a_mod = a.add(&b.matmul(&f));
        let b_single = b.matmul(&v);
        if b_single.max_abs() == 0.0 || !is_controllable(&a_mod, &b_single)? {
            continue;
        }
        let Some(k_row) = ackermann(&a_mod, &b_single, gamma) else {
            continue;
        };
        let k = f.add(&v.matmul(&k_row));
        if verify_placement(a, b, &k, gamma).is_ok() {
            return Ok(k);
        }
    }
    Err(ControlError::PlacementFailed { mode: 0 })
}

/// Ackermann's formula for a single-input pair: `k = -e_d^T C^{-1} q(A)`
/// with `q` the desired characteristic polynomial.
fn ackermann(a: &Matrix, b: &Matrix, gamma: f64) -> Option<Matrix> {
    let d = a.rows();
    let mut ctrb = Matrix::zeros(d, d);
    let mut power = b.clone();
    for col in 0..d {
        for row in 0..d {
            ctrb.set(row, col, power.get(row, 0));
        }
        power = a.matmul(&power);
    }
    let mut e_last = vec![0.0; d];
    e_last[d - 1] = 1.0;
    let r = Lu::new(&ctrb.transpose()).ok()?.solve(&e_last);

    let mut q = Matrix::identity(d);
    for pole in target_poles(gamma, d) {
        q = q.matmul(&a.sub(&Matrix::identity(d).scale(pole)));
    }
    let mut k = Matrix::zeros(1, d);
    for j in 0..d {
        let mut acc = 0.0;
        for (i, ri) in r.iter().enumerate() {
            acc += ri * q.get(i, j);
        }
        k.set(0, j, -acc);
    }
    Some(k)
}

/// Checks that the spectrum of `A + B K` matches the target poles and stays
/// left of `-gamma`.
fn verify_placement(a: &Matrix, b: &Matrix, k: &Matrix, gamma: f64) -> Result<(), ControlError> {
    let closed = a.add(&b.matmul(k));
    let mut eigs = eigenvalues(&closed)?;
    eigs.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap());
    let targets = target_poles(gamma, a.rows());
    for (eig, target) in eigs.iter().zip(&targets) {
        let tol = PLACEMENT_TOL * target.abs().max(1.0);
        if (eig.re - target).abs() > tol || eig.im.abs() > tol {
            return Err(ControlError::PlacementFailed { mode: 0 });
        }
    }
    let max_real = eigs.first().map_or(f64::NEG_INFINITY, |e| e.re);
    if max_real > -gamma + ABSCISSA_TOL {
        return Err(ControlError::SpectrumViolation { max_real, gamma });
    }
    Ok(())
}

/// Empirical decay envelope data: the observed constant in front of
/// `gamma^D e^{-gamma t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub c_emp: f64,
    pub d_used: usize,
}

/// Measures `sup_t ||e^{A_cl t}|| e^{gamma t} / gamma^D` over a uniform grid
/// on `[0, t_max]`, with `D` the state dimension.
///
/// Diagnostic only: gamma acceptance in the sweep is decided by the
/// estimated closed-loop exponent, never by this bound.
pub fn decay_envelope(
    a_cl: &Matrix,
    gamma: f64,
    t_max: f64,
    grid: usize,
) -> Result<DecayEnvelope, ControlError> {
    if !a_cl.is_square() || a_cl.rows() == 0 {
        return Err(ControlError::DimensionMismatch(format!(
            "closed-loop matrix is {}x{}",
            a_cl.rows(),
            a_cl.cols()
        )));
    }
    let max_real = eigenvalues(a_cl)?
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_real > -gamma + ABSCISSA_TOL {
        return Err(ControlError::SpectrumViolation { max_real, gamma });
    }
    let d_used = a_cl.rows();
    let points = if t_max > 0.0 && grid > 0 { grid } else { 0 };
    let mut log_sup = f64::NEG_INFINITY;
    for j in 0..=points {
        let t = if points == 0 {
            0.0
        } else {
            t_max * j as f64 / points as f64
        };
        let (_, log_norm) = expm_normalized(a_cl, t)?;
        let value = log_norm + gamma * t - d_used as f64 * gamma.ln();
        log_sup = log_sup.max(value);
    }
    Ok(DecayEnvelope {
        c_emp: log_sup.exp(),
        d_used,
    })
}

/// Per-mode gains with the rate they were placed at and the observed
/// envelope constant.
#[derive(Debug, Clone)]
pub struct GainSet {
    pub gains: Vec<Matrix>,
    pub gamma: f64,
    pub envelope: DecayEnvelope,
}

/// Closed-loop generators `L_i = A_hat + B_hat_i K_i P_i`: block-diagonal
/// with block `i` replaced by `A_i + B_i K_i` and every other block left at
/// its drift.
pub fn closed_loop_generators(
    plant: &ControlPlant,
    gains: &[Matrix],
) -> Result<GeneratorSet, ControlError> {
    if gains.len() != plant.modes() {
        return Err(ControlError::DimensionMismatch(format!(
            "{} gains for {} modes",
            gains.len(),
            plant.modes()
        )));
    }
    let mut generators = Vec::with_capacity(plant.modes());
    for (i, k) in gains.iter().enumerate() {
        let sub = &plant.subsystems()[i];
        if k.rows() != sub.input_dim() || k.cols() != sub.state_dim() {
            return Err(ControlError::DimensionMismatch(format!(
                "gain {i} is {}x{}, expected {}x{}",
                k.rows(),
                k.cols(),
                sub.input_dim(),
                sub.state_dim()
            )));
        }
        let feedback = plant.b_hat(i).matmul(k).matmul(plant.projection(i));
        generators.push(plant.a_hat().add(&feedback));
    }
    GeneratorSet::new(generators).map_err(|e| ControlError::DimensionMismatch(e.to_string()))
}

/// Options for the gamma sweep.
#[derive(Debug, Clone, Copy)]
pub struct StabilizeOptions {
    pub gamma_max: f64,
    /// Steps per Monte Carlo trial.
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for StabilizeOptions {
    fn default() -> Self {
        Self {
            gamma_max: 64.0,
            n: 64,
            trials: 200,
            seed: 0,
        }
    }
}

/// A successful (or best-effort) stabilization stage.
#[derive(Debug, Clone)]
pub struct StabilizeOutcome {
    pub gains: GainSet,
    pub gamma: f64,
    pub report: LyapunovReport,
    /// Upper confidence bound on the continuous-time maximal exponent.
    pub achieved_upper_continuous: f64,
}

/// Sweeps `gamma = 1, 2, 4, ...` up to `gamma_max`, placing gains and
/// estimating the closed-loop maximal exponent at each stage; returns the
/// first stage whose upper confidence bound meets `lambda_target`.
///
/// On an exhausted budget the error carries the best stage observed.
pub fn stabilize_to_rate(
    plant: &ControlPlant,
    model: &SwitchingModel,
    lambda_target: f64,
    options: StabilizeOptions,
) -> Result<StabilizeOutcome, ControlError> {
    if model.modes() != plant.modes() {
        return Err(ControlError::DimensionMismatch(format!(
            "model has {} modes, plant has {}",
            model.modes(),
            plant.modes()
        )));
    }
    for (i, sub) in plant.subsystems().iter().enumerate() {
        if sub.state_dim() > 0 && !is_controllable(sub.a(), sub.b())? {
            return Err(ControlError::Uncontrollable { mode: i });
        }
    }

    let mean_dwell = model.mean_dwell();
    let mut gamma = 1.0f64;
    let mut stage = 0u64;
    let mut best: Option<StabilizeOutcome> = None;
    while gamma <= options.gamma_max {
        let outcome = run_stage(plant, model, gamma, stage, mean_dwell, &options)?;
        if outcome.achieved_upper_continuous <= lambda_target {
            return Ok(outcome);
        }
        let better = best
            .as_ref()
            .is_none_or(|b| outcome.achieved_upper_continuous < b.achieved_upper_continuous);
        if better {
            best = Some(outcome);
        }
        gamma *= 2.0;
        stage += 1;
    }
    Err(ControlError::BudgetExhausted {
        gamma_max: options.gamma_max,
        best: Box::new(best.expect("at least one stage ran")),
    })
}

fn run_stage(
    plant: &ControlPlant,
    model: &SwitchingModel,
    gamma: f64,
    stage: u64,
    mean_dwell: f64,
    options: &StabilizeOptions,
) -> Result<StabilizeOutcome, ControlError> {
    let mut gains = Vec::with_capacity(plant.modes());
    let mut c_emp: f64 = 0.0;
    let mut d_used = 0usize;
    for (i, sub) in plant.subsystems().iter().enumerate() {
        if sub.state_dim() == 0 {
            gains.push(Matrix::zeros(0, 0));
            continue;
        }
        let k = place_gain(sub.a(), sub.b(), gamma).map_err(|e| match e {
            ControlError::Uncontrollable { .. } => ControlError::Uncontrollable { mode: i },
            ControlError::PlacementFailed { .. } => ControlError::PlacementFailed { mode: i },
            other => other,
        })?;
        let closed = sub.a().add(&sub.b().matmul(&k));
        let env = decay_envelope(&closed, gamma, ENVELOPE_T_MAX, ENVELOPE_GRID)?;
        c_emp = c_emp.max(env.c_emp);
        d_used = d_used.max(env.d_used);
        gains.push(k);
    }
    let generators = closed_loop_generators(plant, &gains)?;
    let report = lyapunov::analyze(
        &generators,
        model,
        options.n,
        options.trials,
        derive_seed(options.seed, stage),
    )?;
    let achieved_upper_continuous = report.mc.upper() / mean_dwell;
    Ok(StabilizeOutcome {
        gains: GainSet {
            gains,
            gamma,
            envelope: DecayEnvelope { c_emp, d_used },
        },
        gamma,
        report,
        achieved_upper_continuous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;
    use crate::rng::Stream;
    use crate::switching::{DwellDistribution, SwitchingModel};

    fn double_integrator() -> Subsystem {
        Subsystem::new(
            Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
            Matrix::from_rows(&[&[0.0], &[1.0]]),
        )
        .unwrap()
    }

    fn swap_model_dirac() -> SwitchingModel {
        let m = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        SwitchingModel::new(
            m,
            vec![
                DwellDistribution::Dirac { value: 1.0 },
                DwellDistribution::Dirac { value: 1.0 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn controllability_rank_examples() {
        let di = double_integrator();
        assert_eq!(controllability_rank(di.a(), di.b()).unwrap(), 2);

        let b0 = Matrix::zeros(2, 1);
        assert_eq!(controllability_rank(di.a(), &b0).unwrap(), 0);

        let a = Matrix::from_diag(&[1.0, 2.0]);
        let b = Matrix::from_rows(&[&[1.0], &[0.0]]);
        assert_eq!(controllability_rank(&a, &b).unwrap(), 1);
    }

    #[test]
    fn ackermann_double_integrator_hand_check() {
        // Desired polynomial (s+1)(s+2): K = [-2, -3].
        let di = double_integrator();
        let k = place_gain(di.a(), di.b(), 1.0).unwrap();
        assert!((k.get(0, 0) + 2.0).abs() < 1e-9, "{:?}", k);
        assert!((k.get(0, 1) + 3.0).abs() < 1e-9, "{:?}", k);
    }

    #[test]
    fn scalar_placement_closed_form() {
        let a = Matrix::from_rows(&[&[0.7]]);
        let b = Matrix::from_rows(&[&[2.0]]);
        let g = 3.0;
        let k = place_gain(&a, &b, g).unwrap();
        assert!((k.get(0, 0) - (-(g + 0.7) / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn already_placed_system_keeps_zero_gain() {
        let g = 2.0;
        let a = Matrix::from_diag(&[-g, -g - 1.0]);
        let b = Matrix::identity(2);
        let k = place_gain(&a, &b, g).unwrap();
        assert_eq!(k, Matrix::zeros(2, 2));
    }

    #[test]
    fn multi_input_heymann_reduction() {
        let a = Matrix::from_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.3, -0.2, 0.1]]);
        let b = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]);
        let gamma = 2.0;
        let k = place_gain(&a, &b, gamma).unwrap();
        let closed = a.add(&b.matmul(&k));
        let eigs = eigenvalues(&closed).unwrap();
        let mut re: Vec<f64> = eigs.iter().map(|e| e.re).collect();
        re.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (got, want) in re.iter().zip([-2.0, -3.0, -4.0]) {
            assert!((got - want).abs() < 1e-6, "{re:?}");
        }
    }

    #[test]
    fn uncontrollable_pairs_are_rejected() {
        let a = Matrix::from_diag(&[1.0, 2.0]);
        let b = Matrix::from_rows(&[&[1.0], &[0.0]]);
        assert!(matches!(
            place_gain(&a, &b, 1.0),
            Err(ControlError::Uncontrollable { .. })
        ));
        assert!(matches!(
            place_gain(&a, &b.scale(0.0), 1.0),
            Err(ControlError::Uncontrollable { .. })
        ));
    }

    #[test]
    fn gamma_below_one_is_rejected() {
        let di = double_integrator();
        assert!(matches!(
            place_gain(di.a(), di.b(), 0.5),
            Err(ControlError::InvalidGamma(_))
        ));
    }

    #[test]
    fn decay_envelope_closed_forms() {
        let g = 4.0;
        let a = Matrix::from_diag(&[-g]);
        let env = decay_envelope(&a, g, 10.0, 100).unwrap();
        assert_eq!(env.d_used, 1);
        assert!((env.c_emp - 1.0 / g).abs() < 1e-12, "{}", env.c_emp);

        // Only t = 0 on the grid: C_emp = 1 / gamma^D.
        let a2 = Matrix::from_rows(&[&[-1.5, 1.0], &[0.0, -2.5]]);
        let env = decay_envelope(&a2, 1.0, 0.0, 0).unwrap();
        assert!((env.c_emp - 1.0).abs() < 1e-12);

        let env = decay_envelope(&a2, 1.0, 10.0, 200).unwrap();
        assert!(env.c_emp.is_finite() && env.c_emp >= 1.0);
    }

    #[test]
    fn envelope_rejects_spectrum_violation() {
        let a = Matrix::from_diag(&[-0.5]);
        assert!(matches!(
            decay_envelope(&a, 1.0, 1.0, 10),
            Err(ControlError::SpectrumViolation { .. })
        ));
    }

    #[test]
    fn build_plant_shapes() {
        // Single subsystem: the augmented system is the subsystem itself.
        let plant = build_plant(vec![double_integrator()]).unwrap();
        assert_eq!(plant.total_dim(), 2);
        assert_eq!(plant.a_hat(), double_integrator().a());
        assert_eq!(plant.projection(0), &Matrix::identity(2));

        // Two scalar subsystems: block-diagonal drift.
        let s1 =
            Subsystem::new(Matrix::from_rows(&[&[1.0]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        let s2 =
            Subsystem::new(Matrix::from_rows(&[&[-2.0]]), Matrix::from_rows(&[&[0.5]])).unwrap();
        let plant = build_plant(vec![s1, s2]).unwrap();
        assert_eq!(plant.a_hat(), &Matrix::from_diag(&[1.0, -2.0]));

        // A trivial second subsystem leaves the drift untouched.
        let plant = build_plant(vec![double_integrator(), Subsystem::trivial()]).unwrap();
        assert_eq!(plant.total_dim(), 2);
        assert_eq!(plant.a_hat(), double_integrator().a());
        assert_eq!(plant.b_hat(1).cols(), 0);
    }

    #[test]
    fn projections_partition_identity() {
        let s1 = double_integrator();
        let s2 =
            Subsystem::new(Matrix::from_rows(&[&[1.0]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        let plant = build_plant(vec![s1, s2, Subsystem::trivial()]).unwrap();
        let d = plant.total_dim();
        let mut sum = Matrix::zeros(d, d);
        for i in 0..plant.modes() {
            let p = plant.projection(i);
            sum = sum.add(&p.transpose().matmul(p));
            for j in 0..plant.modes() {
                if i != j {
                    let cross = p.matmul(&plant.projection(j).transpose());
                    assert_eq!(cross.max_abs(), 0.0);
                }
            }
        }
        assert_eq!(sum, Matrix::identity(d));
    }

    #[test]
    fn closed_loop_block_structure() {
        let s1 =
            Subsystem::new(Matrix::from_rows(&[&[1.0]]), Matrix::from_rows(&[&[2.0]])).unwrap();
        let s2 =
            Subsystem::new(Matrix::from_rows(&[&[-0.5]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        let plant = build_plant(vec![s1, s2]).unwrap();

        // Zero gains reproduce the open-loop drift in every mode.
        let zero = vec![Matrix::zeros(1, 1), Matrix::zeros(1, 1)];
        let gens = closed_loop_generators(&plant, &zero).unwrap();
        for i in 0..2 {
            assert_eq!(gens.generator(i), plant.a_hat());
        }

        // A gain in mode 0 only alters block (0,0).
        let k = vec![Matrix::from_rows(&[&[3.0]]), Matrix::zeros(1, 1)];
        let gens = closed_loop_generators(&plant, &k).unwrap();
        assert_eq!(
            gens.generator(0),
            &Matrix::from_diag(&[1.0 + 2.0 * 3.0, -0.5])
        );
        assert_eq!(gens.generator(1), plant.a_hat());
    }

    #[test]
    fn closed_loop_exponential_is_block_diagonal() {
        let mut rng = Stream::new(21);
        for _ in 0..5 {
            let s1 = Subsystem::new(
                Matrix::from_fn(2, 2, |_, _| rng.next_f64() - 0.5),
                Matrix::from_fn(2, 1, |_, _| rng.next_f64() + 0.1),
            )
            .unwrap();
            let s2 = Subsystem::new(
                Matrix::from_fn(1, 1, |_, _| rng.next_f64() - 0.5),
                Matrix::from_fn(1, 1, |_, _| rng.next_f64() + 0.1),
            )
            .unwrap();
            let plant = build_plant(vec![s1.clone(), s2.clone()]).unwrap();
            let gains = vec![
                Matrix::from_fn(1, 2, |_, _| rng.next_f64() - 0.5),
                Matrix::from_fn(1, 1, |_, _| rng.next_f64() - 0.5),
            ];
            let gens = closed_loop_generators(&plant, &gains).unwrap();
            let t = 0.8;

            for (active, gen_idx) in [(0usize, 0usize), (1, 1)] {
                let full = crate::linalg::expm(gens.generator(gen_idx), t).unwrap();
                for (i, sub) in [&s1, &s2].iter().enumerate() {
                    let block = if i == active {
                        sub.a().add(&sub.b().matmul(&gains[i]))
                    } else {
                        sub.a().clone()
                    };
                    let expected = crate::linalg::expm(&block, t).unwrap();
                    let p = plant.projection(i);
                    let got = p.matmul(&full).matmul(&p.transpose());
                    assert!(
                        operator_norm(&got.sub(&expected)) < 1e-9,
                        "block {i} mismatch"
                    );
                }
            }
        }
    }

    #[test]
    fn scalar_sweep_reaches_target() {
        let plant = build_plant(vec![Subsystem::new(
            Matrix::from_rows(&[&[1.0]]),
            Matrix::from_rows(&[&[1.0]]),
        )
        .unwrap()])
        .unwrap();
        let m = Matrix::from_rows(&[&[1.0]]);
        let model = SwitchingModel::new(m, vec![DwellDistribution::Dirac { value: 1.0 }]).unwrap();
        let out = stabilize_to_rate(&plant, &model, -5.0, StabilizeOptions::default()).unwrap();
        // Doubling schedule: -1, -2, -4 miss the target, gamma = 8 lands.
        assert_eq!(out.gamma, 8.0);
        assert!(out.achieved_upper_continuous <= -5.0);
        assert!((out.report.lambda_max_continuous + 8.0).abs() < 0.2);
    }

    #[test]
    fn loose_target_accepts_first_stage() {
        let plant = build_plant(vec![Subsystem::new(
            Matrix::from_rows(&[&[1.0]]),
            Matrix::from_rows(&[&[1.0]]),
        )
        .unwrap()])
        .unwrap();
        let m = Matrix::from_rows(&[&[1.0]]);
        let model = SwitchingModel::new(m, vec![DwellDistribution::Dirac { value: 1.0 }]).unwrap();
        let out = stabilize_to_rate(&plant, &model, 10.0, StabilizeOptions::default()).unwrap();
        assert_eq!(out.gamma, 1.0);
    }

    #[test]
    fn budget_exhaustion_reports_best_stage() {
        let plant = build_plant(vec![Subsystem::new(
            Matrix::from_rows(&[&[1.0]]),
            Matrix::from_rows(&[&[1.0]]),
        )
        .unwrap()])
        .unwrap();
        let m = Matrix::from_rows(&[&[1.0]]);
        let model = SwitchingModel::new(m, vec![DwellDistribution::Dirac { value: 1.0 }]).unwrap();
        let options = StabilizeOptions {
            gamma_max: 4.0,
            ..Default::default()
        };
        match stabilize_to_rate(&plant, &model, -5.0, options) {
            Err(ControlError::BudgetExhausted { best, gamma_max }) => {
                assert_eq!(gamma_max, 4.0);
                assert_eq!(best.gamma, 4.0);
                assert!(best.achieved_upper_continuous > -5.0);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn sweep_rejects_uncontrollable_subsystems() {
        let bad = Subsystem::new(
            Matrix::from_diag(&[1.0, 2.0]),
            Matrix::from_rows(&[&[1.0], &[0.0]]),
        )
        .unwrap();
        let plant = build_plant(vec![bad]).unwrap();
        let m = Matrix::from_rows(&[&[1.0]]);
        let model = SwitchingModel::new(m, vec![DwellDistribution::Dirac { value: 1.0 }]).unwrap();
        assert!(matches!(
            stabilize_to_rate(&plant, &model, -1.0, StabilizeOptions::default()),
            Err(ControlError::Uncontrollable { mode: 0 })
        ));
    }

    #[test]
    fn two_subsystem_sweep_with_scalar_oracle() {
        // Diagonal closed loops make per-coordinate exponents exact: mode
        // blocks alternate between -gamma-k (active) and the open-loop value.
        let s1 =
            Subsystem::new(Matrix::from_rows(&[&[1.0]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        let s2 =
            Subsystem::new(Matrix::from_rows(&[&[0.5]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        let plant = build_plant(vec![s1, s2]).unwrap();
        let model = swap_model_dirac();
        let target = -2.0;
        let out = stabilize_to_rate(&plant, &model, target, StabilizeOptions::default()).unwrap();
        assert!(out.achieved_upper_continuous <= target);

        // Scalar closed form: block 1 alternates -gamma and 1, block 2
        // alternates 0.5 and -gamma; the max exponent is the larger mean.
        let g = out.gamma;
        let expected = 0.5f64.max(1.0 / 2.0 + -g / 2.0).max((0.5 - g) / 2.0);
        let expected = ((1.0 - g) / 2.0).max((0.5 - g) / 2.0).min(expected);
        assert!(
            (out.report.lambda_max_continuous - expected).abs() < 0.1,
            "{} vs {expected}",
            out.report.lambda_max_continuous
        );
    }

    #[test]
    fn estimated_exponent_declines_across_doubling_stages() {
        // Diagonalizable plant: scalar blocks, so the closed-loop generators
        // are diagonal and the exponent is monotone in gamma.
        let s1 =
            Subsystem::new(Matrix::from_rows(&[&[1.0]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        let s2 =
            Subsystem::new(Matrix::from_rows(&[&[0.5]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        let plant = build_plant(vec![s1, s2]).unwrap();
        let model = swap_model_dirac();
        let mut prev: Option<f64> = None;
        let mut prev_hw = 0.0;
        for (stage, gamma) in [1.0f64, 2.0, 4.0, 8.0].iter().enumerate() {
            let out = run_stage(
                &plant,
                &model,
                *gamma,
                stage as u64,
                model.mean_dwell(),
                &StabilizeOptions::default(),
            )
            .unwrap();
            let lam = out.report.lambda_max_continuous;
            if let Some(p) = prev {
                let slack = 3.0 * (out.report.mc.half_width.max(prev_hw)) / model.mean_dwell();
                assert!(lam <= p + slack, "gamma {gamma}: {lam} vs {p}");
            }
            prev = Some(lam);
            prev_hw = out.report.mc.half_width;
        }
    }
}
