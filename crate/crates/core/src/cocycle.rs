//! The matrix cocycle of the switched system: ordered products of per-step
//! matrix exponentials `e^{L_{i_k} t_k}`, kept in a scaled representation so
//! arbitrarily long products neither overflow nor underflow.

use std::collections::HashMap;

use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::switching::SwitchPath;

/// Allowed deviation of the core's operator norm from 1.
const CORE_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CocycleError {
    #[error("generator set: {0}")]
    BadGenerators(String),
    #[error("path visits mode {mode} but only {modes} generators are defined")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("requested {wanted} steps but the path has {available}")]
    StepsOutOfRange { wanted: usize, available: usize },
    #[error("time {t} is outside the sampled horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("initial state must be nonzero")]
    ZeroInitialState,
    #[error("state dimension {got} does not match generator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix exponential failed: {0}")]
    Linalg(#[from] linalg::LinalgError),
    #[error("flow collapsed to zero, which exponential factors cannot produce")]
    NumericalDegeneracy,
}

/// The family `L_1, ..., L_N` of square generators, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    dimension: usize,
    generators: Vec<Matrix>,
}

impl GeneratorSet {
    pub fn new(generators: Vec<Matrix>) -> Result<Self, CocycleError> {
        let first = generators
            .first()
            .ok_or_else(|| CocycleError::BadGenerators("at least one generator required".into()))?;
        if !first.is_square() {
            return Err(CocycleError::BadGenerators(format!(
                "generator 0 is {}x{}, not square",
                first.rows(),
                first.cols()
            )));
        }
        let dimension = first.rows();
        for (i, g) in generators.iter().enumerate() {
            if g.rows() != dimension || g.cols() != dimension {
                return Err(CocycleError::BadGenerators(format!(
                    "generator {i} is {}x{}, expected {dimension}x{dimension}",
                    g.rows(),
                    g.cols()
                )));
            }
        }
        Ok(Self {
            dimension,
            generators,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn count(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, mode: usize) -> &Matrix {
        &self.generators[mode]
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }
}

/// A matrix held as `e^{log_scale} * core` with `core` of unit operator norm
/// (or the zero matrix).
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    core: Matrix,
    log_scale: f64,
}

impl ScaledMatrix {
    pub fn identity(dimension: usize) -> Self {
        Self {
            core: Matrix::identity(dimension),
            log_scale: 0.0,
        }
    }

    /// Normalizes an arbitrary matrix into scaled form.
    pub fn from_matrix(m: &Matrix) -> Self {
        let norm = linalg::operator_norm(m);
        if norm == 0.0 {
            return Self {
                core: m.clone(),
                log_scale: 0.0,
            };
        }
        Self {
            core: m.scale(1.0 / norm),
            log_scale: norm.ln(),
        }
    }

    pub(crate) fn from_parts(core: Matrix, log_scale: f64) -> Self {
        debug_assert!({
            let n = linalg::operator_norm(&core);
            n == 0.0 || (n - 1.0).abs() <= CORE_NORM_TOL
        });
        Self { core, log_scale }
    }

    pub fn core(&self) -> &Matrix {
        &self.core
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// `log ||value||`; equals `log_scale` because the core has unit norm.
    pub fn log_norm(&self) -> f64 {
        if self.core.max_abs() == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.log_scale
        }
    }

    /// The represented dense matrix. Overflows to infinities when the scale
    /// exceeds the f64 range; prefer working in scaled form.
    pub fn value(&self) -> Matrix {
        self.core.scale(self.log_scale.exp())
    }

    /// `self * rhs`, renormalized.
    pub fn compose(&self, rhs: &ScaledMatrix) -> ScaledMatrix {
        let (core, log_scale) =
            linalg::scaled_mul(&self.core, self.log_scale, &rhs.core, rhs.log_scale);
        ScaledMatrix { core, log_scale }
    }

    /// Applies the represented matrix to a scaled vector.
    fn apply(&self, v: &ScaledVector) -> Result<ScaledVector, CocycleError> {
        let raw = self.core.mul_vec(&v.unit);
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(CocycleError::NumericalDegeneracy);
        }
        Ok(ScaledVector {
            unit: raw.iter().map(|x| x / norm).collect(),
            log_norm: v.log_norm + self.log_scale + norm.ln(),
        })
    }
}

/// A nonzero vector stored as a unit direction plus the log of its norm.
#[derive(Debug, Clone)]
pub struct ScaledVector {
    unit: Vec<f64>,
    log_norm: f64,
}

impl ScaledVector {
    pub fn from_vec(v: &[f64]) -> Option<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        Some(Self {
            unit: v.iter().map(|x| x / norm).collect(),
            log_norm: norm.ln(),
        })
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn unit(&self) -> &[f64] {
        &self.unit
    }

    /// Dense value; may overflow for extreme log norms.
    pub fn value(&self) -> Vec<f64> {
        let s = self.log_norm.exp();
        self.unit.iter().map(|x| x * s).collect()
    }
}

/// Per-call memo of matrix exponentials keyed by `(mode, dwell bits)`.
///
/// Dirac dwell laws repeat the same `(mode, t)` pairs for the whole path, so
/// this turns most walks over such paths into table lookups.
pub(crate) struct FactorCache<'a> {
    gen: &'a GeneratorSet,
    map: HashMap<(usize, u64), ScaledMatrix>,
}

impl<'a> FactorCache<'a> {
    pub fn new(gen: &'a GeneratorSet) -> Self {
        Self {
            gen,
            map: HashMap::new(),
        }
    }

    pub fn factor(&mut self, mode: usize, t: f64) -> Result<ScaledMatrix, CocycleError> {
        if mode >= self.gen.count() {
            return Err(CocycleError::ModeOutOfRange {
                mode,
                modes: self.gen.count(),
            });
        }
        if let Some(hit) = self.map.get(&(mode, t.to_bits())) {
            return Ok(hit.clone());
        }
        let (core, log_scale) = linalg::expm_normalized(self.gen.generator(mode), t)?;
        let f = ScaledMatrix::from_parts(core, log_scale);
        self.map.insert((mode, t.to_bits()), f.clone());
        Ok(f)
    }
}

fn check_steps(path: &SwitchPath, n: usize) -> Result<(), CocycleError> {
    if n > path.len() {
        return Err(CocycleError::StepsOutOfRange {
            wanted: n,
            available: path.len(),
        });
    }
    Ok(())
}

fn check_state(gen: &GeneratorSet, x0: &[f64]) -> Result<(), CocycleError> {
    if x0.len() != gen.dimension() {
        return Err(CocycleError::DimensionMismatch {
            expected: gen.dimension(),
            got: x0.len(),
        });
    }
    Ok(())
}

/// The cocycle `Phi(n, omega) = e^{L_{i_n} t_n} ... e^{L_{i_1} t_1}`,
/// renormalized after every factor.
pub fn cocycle_matrix(
    gen: &GeneratorSet,
    path: &SwitchPath,
    n: usize,
) -> Result<ScaledMatrix, CocycleError> {
    check_steps(path, n)?;
    let mut cache = FactorCache::new(gen);
    let mut acc = ScaledMatrix::identity(gen.dimension());
    for k in 0..n {
        let f = cache.factor(path.mode(k), path.dwell(k))?;
        acc = f.compose(&acc);
    }
    Ok(acc)
}

/// `log ||Phi(n, omega)||` directly from the scaled product.
pub fn cocycle_log_norm(
    gen: &GeneratorSet,
    path: &SwitchPath,
    n: usize,
) -> Result<f64, CocycleError> {
    Ok(cocycle_matrix(gen, path, n)?.log_norm())
}

fn scaled_flow_discrete(
    gen: &GeneratorSet,
    path: &SwitchPath,
    x0: &[f64],
    n: usize,
) -> Result<ScaledVector, CocycleError> {
    check_steps(path, n)?;
    check_state(gen, x0)?;
    let mut state = ScaledVector::from_vec(x0).ok_or(CocycleError::ZeroInitialState)?;
    let mut cache = FactorCache::new(gen);
    for k in 0..n {
        let f = cache.factor(path.mode(k), path.dwell(k))?;
        state = f.apply(&state)?;
    }
    Ok(state)
}

/// Discrete flow: the solution sampled at the n-th switch time.
pub fn flow_discrete(
    gen: &GeneratorSet,
    path: &SwitchPath,
    x0: &[f64],
    n: usize,
) -> Result<Vec<f64>, CocycleError> {
    check_steps(path, n)?;
    check_state(gen, x0)?;
    if n == 0 || x0.iter().all(|&x| x == 0.0) {
        return Ok(x0.to_vec());
    }
    Ok(scaled_flow_discrete(gen, path, x0, n)?.value())
}

/// Continuous flow at time `t` within the sampled horizon.
///
/// On `(s_{k-1}, s_k]` the state is `e^{L_{i_k} (t - s_{k-1})}` applied to
/// the discrete flow at step `k-1`; at a switch time the result coincides
/// exactly with the discrete flow.
pub fn flow_continuous(
    gen: &GeneratorSet,
    path: &SwitchPath,
    x0: &[f64],
    t: f64,
) -> Result<Vec<f64>, CocycleError> {
    check_state(gen, x0)?;
    if !(0.0..=path.total_time()).contains(&t) {
        return Err(CocycleError::HorizonExceeded {
            t,
            horizon: path.total_time(),
        });
    }
    if t == 0.0 {
        return Ok(x0.to_vec());
    }
    if x0.iter().all(|&x| x == 0.0) {
        return Ok(x0.to_vec());
    }
    match locate(path, t) {
        Location::AtSwitch(k) => flow_discrete(gen, path, x0, k),
        Location::Interior { step, elapsed } => {
            let state = scaled_flow_discrete(gen, path, x0, step)?;
            let (core, log_scale) =
                linalg::expm_normalized(gen.generator(path.mode(step)), elapsed)?;
            let state = ScaledMatrix::from_parts(core, log_scale).apply(&state)?;
            Ok(state.value())
        }
    }
}

enum Location {
    /// `t` equals the stored switch time `s_k`.
    AtSwitch(usize),
    /// `t` lies strictly inside step `step` (zero-based), `elapsed` past its
    /// start.
    Interior { step: usize, elapsed: f64 },
}

fn locate(path: &SwitchPath, t: f64) -> Location {
    let times = path.switch_times();
    match times.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
        Ok(k) => Location::AtSwitch(k + 1),
        Err(idx) => Location::Interior {
            step: idx,
            elapsed: t - path.switch_time(idx),
        },
    }
}

/// Finite-horizon discrete Lyapunov estimate
/// `(1/n) log (||phi_rd(n)|| / ||x0||)`, accumulated in log space so huge
/// norms are never formed.
pub fn lyap_estimate_discrete(
    gen: &GeneratorSet,
    path: &SwitchPath,
    x0: &[f64],
    n: usize,
) -> Result<f64, CocycleError> {
    if n == 0 {
        return Err(CocycleError::StepsOutOfRange {
            wanted: 0,
            available: path.len(),
        });
    }
    check_state(gen, x0)?;
    let start = ScaledVector::from_vec(x0).ok_or(CocycleError::ZeroInitialState)?;
    let state = scaled_flow_discrete(gen, path, x0, n)?;
    Ok((state.log_norm() - start.log_norm()) / n as f64)
}

/// Finite-horizon continuous Lyapunov estimate
/// `(1/t) log (||phi_rc(t)|| / ||x0||)`.
pub fn lyap_estimate_continuous(
    gen: &GeneratorSet,
    path: &SwitchPath,
    x0: &[f64],
    t: f64,
) -> Result<f64, CocycleError> {
    check_state(gen, x0)?;
    if !(t > 0.0) || t > path.total_time() {
        return Err(CocycleError::HorizonExceeded {
            t,
            horizon: path.total_time(),
        });
    }
    let start = ScaledVector::from_vec(x0).ok_or(CocycleError::ZeroInitialState)?;
    let state = match locate(path, t) {
        Location::AtSwitch(k) => scaled_flow_discrete(gen, path, x0, k)?,
        Location::Interior { step, elapsed } => {
            let state = scaled_flow_discrete(gen, path, x0, step)?;
            let (core, log_scale) =
                linalg::expm_normalized(gen.generator(path.mode(step)), elapsed)?;
            ScaledMatrix::from_parts(core, log_scale).apply(&state)?
        }
    };
    Ok((state.log_norm() - start.log_norm()) / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;
    use crate::rng::Stream;
    use crate::switching::{DwellDistribution, SwitchingModel};

    fn gens(mats: &[Matrix]) -> GeneratorSet {
        GeneratorSet::new(mats.to_vec()).unwrap()
    }

    fn scalar_gens(values: &[f64]) -> GeneratorSet {
        gens(
            &values
                .iter()
                .map(|&v| Matrix::from_rows(&[&[v]]))
                .collect::<Vec<_>>(),
        )
    }

    /// Relative difference of two scaled matrices, evaluated in log space.
    fn rel_diff(a: &ScaledMatrix, b: &ScaledMatrix) -> f64 {
        let shift = a.log_scale().max(b.log_scale());
        let da = a.core().scale((a.log_scale() - shift).exp());
        let db = b.core().scale((b.log_scale() - shift).exp());
        operator_norm(&da.sub(&db)) / operator_norm(&da).max(operator_norm(&db))
    }

    #[test]
    fn zero_generators_give_identity_cocycle() {
        let g = gens(&[Matrix::zeros(2, 2), Matrix::zeros(2, 2)]);
        let path = crate::switching::SwitchPath::from_steps(&[(0, 1.0), (1, 2.5)]).unwrap();
        let phi = cocycle_matrix(&g, &path, 2).unwrap();
        assert!(phi.core().sub(&Matrix::identity(2)).max_abs() < 1e-14);
        assert!(phi.log_scale().abs() < 1e-14);
    }

    #[test]
    fn scalar_cancellation() {
        let g = scalar_gens(&[-1.0, 2.0]);
        let path = crate::switching::SwitchPath::from_steps(&[(0, 1.0), (1, 0.5)]).unwrap();
        let phi = cocycle_matrix(&g, &path, 2).unwrap();
        // e^{-1} * e^{1} = 1.
        assert!(phi.log_norm().abs() < 1e-12, "log norm {}", phi.log_norm());
    }

    #[test]
    fn cocycle_property_on_random_instances() {
        let trans = Matrix::from_rows(&[&[0.3, 0.7], &[0.6, 0.4]]);
        let model = SwitchingModel::new(
            trans,
            vec![
                DwellDistribution::Exponential { rate: 1.5 },
                DwellDistribution::Uniform {
                    lower: 0.1,
                    upper: 1.2,
                },
            ],
        )
        .unwrap();
        let mut rng = Stream::new(404);
        for trial in 0..50 {
            let d = 2 + (trial % 2);
            let g = gens(&[
                Matrix::from_fn(d, d, |_, _| 2.0 * rng.next_f64() - 1.0),
                Matrix::from_fn(d, d, |_, _| 2.0 * rng.next_f64() - 1.0),
            ]);
            let path = model.sample_path(40, 1000 + trial as u64);
            let n = 5 + (trial % 10);
            let m = 3 + (trial % 7);
            let whole = cocycle_matrix(&g, &path, n + m).unwrap();
            let tail = cocycle_matrix(&g, &path.shift(m).unwrap(), n).unwrap();
            let head = cocycle_matrix(&g, &path, m).unwrap();
            let split = tail.compose(&head);
            assert!(
                rel_diff(&whole, &split) <= 1e-8,
                "trial {trial}: relative deviation {}",
                rel_diff(&whole, &split)
            );
        }
    }

    #[test]
    fn long_products_stay_normalized() {
        // Entries in [-5, 5]: the naive product norm would reach exp(~1e4),
        // far beyond f64 range, while the scaled core stays unit-norm.
        let mut rng = Stream::new(99);
        let g = gens(&[
            Matrix::from_fn(3, 3, |_, _| 10.0 * rng.next_f64() - 5.0),
            Matrix::from_fn(3, 3, |_, _| 10.0 * rng.next_f64() - 5.0),
        ]);
        let trans = Matrix::from_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let model = SwitchingModel::new(
            trans,
            vec![
                DwellDistribution::Exponential { rate: 1.0 },
                DwellDistribution::Dirac { value: 0.7 },
            ],
        )
        .unwrap();
        let n = 10_000;
        let path = model.sample_path(n, 2121);
        let phi = cocycle_matrix(&g, &path, n).unwrap();
        assert!(phi.log_scale().is_finite());
        assert!((operator_norm(phi.core()) - 1.0).abs() < 1e-12);
        // The exponent is far past what a naive dense product could hold.
        assert!(
            phi.log_scale().abs() > 709.0,
            "log scale {}",
            phi.log_scale()
        );
    }

    #[test]
    fn determinant_identity_along_path() {
        let mut rng = Stream::new(55);
        let g = gens(&[
            Matrix::from_fn(3, 3, |_, _| 2.0 * rng.next_f64() - 1.0),
            Matrix::from_fn(3, 3, |_, _| 2.0 * rng.next_f64() - 1.0),
        ]);
        let trans = Matrix::from_rows(&[&[0.2, 0.8], &[0.7, 0.3]]);
        let model = SwitchingModel::new(
            trans,
            vec![
                DwellDistribution::Uniform {
                    lower: 0.2,
                    upper: 1.0,
                },
                DwellDistribution::Exponential { rate: 2.0 },
            ],
        )
        .unwrap();
        let n = 20;
        let path = model.sample_path(n, 31007);
        let phi = cocycle_matrix(&g, &path, n).unwrap();
        let log_det = 3.0 * phi.log_scale() + crate::linalg::det(phi.core()).unwrap().abs().ln();
        let expected: f64 = (0..n)
            .map(|k| path.dwell(k) * g.generator(path.mode(k)).trace())
            .sum();
        assert!(
            (log_det - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
            "{log_det} vs {expected}"
        );
    }

    #[test]
    fn flow_discrete_basics() {
        let g = scalar_gens(&[-1.0, 2.0]);
        let path = crate::switching::SwitchPath::from_steps(&[(0, 1.0), (1, 0.5)]).unwrap();
        assert_eq!(flow_discrete(&g, &path, &[3.0], 0).unwrap(), vec![3.0]);
        let out = flow_discrete(&g, &path, &[3.0], 2).unwrap();
        assert!((out[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn flow_matches_cocycle_application() {
        let mut rng = Stream::new(8);
        let g = gens(&[
            Matrix::from_fn(2, 2, |_, _| rng.next_f64() - 0.5),
            Matrix::from_fn(2, 2, |_, _| rng.next_f64() - 0.5),
        ]);
        let trans = Matrix::from_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let model = SwitchingModel::new(
            trans,
            vec![
                DwellDistribution::Exponential { rate: 1.0 },
                DwellDistribution::Exponential { rate: 1.0 },
            ],
        )
        .unwrap();
        for seed in 0..10 {
            let path = model.sample_path(12, seed);
            let x0 = [rng.next_f64() + 0.1, rng.next_f64() - 0.6];
            let via_flow = flow_discrete(&g, &path, &x0, 12).unwrap();
            let via_matrix = cocycle_matrix(&g, &path, 12).unwrap().value().mul_vec(&x0);
            let scale = via_matrix.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
            for (a, b) in via_flow.iter().zip(&via_matrix) {
                assert!((a - b).abs() <= 1e-10 * scale.max(1e-300));
            }
        }
    }

    #[test]
    fn continuous_flow_agrees_at_switch_times_exactly() {
        let g = gens(&[
            Matrix::from_rows(&[&[0.1, 1.0], &[0.0, -0.3]]),
            Matrix::from_rows(&[&[-0.2, 0.0], &[0.5, 0.4]]),
        ]);
        let trans = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let model = SwitchingModel::new(
            trans,
            vec![
                DwellDistribution::Uniform {
                    lower: 0.3,
                    upper: 0.9,
                },
                DwellDistribution::Exponential { rate: 1.1 },
            ],
        )
        .unwrap();
        let path = model.sample_path(8, 606);
        let x0 = [1.0, -0.5];
        assert_eq!(flow_continuous(&g, &path, &x0, 0.0).unwrap(), x0.to_vec());
        for k in 1..=8 {
            let at_switch = flow_continuous(&g, &path, &x0, path.switch_time(k)).unwrap();
            let discrete = flow_discrete(&g, &path, &x0, k).unwrap();
            assert_eq!(at_switch, discrete, "k = {k}");
        }
    }

    #[test]
    fn nilpotent_single_mode_flow() {
        let g = gens(&[Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]])]);
        let path = crate::switching::SwitchPath::from_steps(&[(0, 3.0)]).unwrap();
        let out = flow_continuous(&g, &path, &[0.0, 1.0], 2.0).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-12 && (out[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_times_match_dense_products() {
        let l0 = Matrix::from_rows(&[&[0.2, -0.7], &[0.4, -0.1]]);
        let l1 = Matrix::from_rows(&[&[-0.5, 0.3], &[0.0, 0.6]]);
        let g = gens(&[l0.clone(), l1.clone()]);
        let path =
            crate::switching::SwitchPath::from_steps(&[(0, 1.25), (1, 0.75), (0, 2.0)]).unwrap();
        let x0 = [0.8, -1.3];
        // t = 1.6 sits inside the second step: 0.35 past its start.
        let direct = crate::linalg::expm(&l1, 0.35)
            .unwrap()
            .matmul(&crate::linalg::expm(&l0, 1.25).unwrap())
            .mul_vec(&x0);
        let flowed = flow_continuous(&g, &path, &x0, 1.6).unwrap();
        for (a, b) in flowed.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn discrete_estimates_scalar_closed_forms() {
        // Single scalar mode a with unit dwells: the estimate is a exactly.
        let g = scalar_gens(&[-0.7]);
        let path = crate::switching::SwitchPath::from_steps(&[(0, 1.0); 50]).unwrap();
        let est = lyap_estimate_discrete(&g, &path, &[1.0], 50).unwrap();
        assert!((est + 0.7).abs() < 1e-12);

        // Alternating -1 / +2 with unit dwells: (a + b)/2 = 0.5 at even n.
        let g = scalar_gens(&[-1.0, 2.0]);
        let steps: Vec<(usize, f64)> = (0..40).map(|k| (k % 2, 1.0)).collect();
        let path = crate::switching::SwitchPath::from_steps(&steps).unwrap();
        let est = lyap_estimate_discrete(&g, &path, &[1.0], 40).unwrap();
        assert!((est - 0.5).abs() < 1e-12);

        // Zero generators give a zero exponent.
        let g = gens(&[Matrix::zeros(2, 2)]);
        let path = crate::switching::SwitchPath::from_steps(&[(0, 1.0); 10]).unwrap();
        let est = lyap_estimate_discrete(&g, &path, &[1.0, 1.0], 10).unwrap();
        assert!(est.abs() < 1e-13);
    }

    #[test]
    fn continuous_estimate_and_ratio() {
        let g = gens(&[Matrix::from_diag(&[-2.0, -2.0])]);
        let path = crate::switching::SwitchPath::from_steps(&[(0, 0.8); 12]).unwrap();
        let est = lyap_estimate_continuous(&g, &path, &[1.0, 0.3], 5.0).unwrap();
        assert!((est + 2.0).abs() < 1e-10);

        // At t = s_n the discrete and continuous estimates differ exactly by
        // the factor s_n / n.
        let g = scalar_gens(&[0.4, -1.3]);
        let steps: Vec<(usize, f64)> = (0..30)
            .map(|k| (k % 2, 0.5 + 0.1 * (k % 3) as f64))
            .collect();
        let path = crate::switching::SwitchPath::from_steps(&steps).unwrap();
        let d = lyap_estimate_discrete(&g, &path, &[1.0], 30).unwrap();
        let c = lyap_estimate_continuous(&g, &path, &[1.0], path.total_time()).unwrap();
        let ratio = path.total_time() / 30.0;
        assert!((d - ratio * c).abs() < 1e-12);
    }

    #[test]
    fn zero_initial_state_is_rejected() {
        let g = scalar_gens(&[1.0]);
        let path = crate::switching::SwitchPath::from_steps(&[(0, 1.0)]).unwrap();
        assert!(matches!(
            lyap_estimate_discrete(&g, &path, &[0.0], 1),
            Err(CocycleError::ZeroInitialState)
        ));
    }

    #[test]
    fn mismatched_generator_count_is_an_error() {
        let g = scalar_gens(&[1.0]);
        let path = crate::switching::SwitchPath::from_steps(&[(1, 1.0)]).unwrap();
        assert!(matches!(
            cocycle_matrix(&g, &path, 1),
            Err(CocycleError::ModeOutOfRange { .. })
        ));
    }
}
