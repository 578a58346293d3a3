//! The random switching model: an irreducible row-stochastic transition
//! matrix over N modes, a dwell-time distribution per mode, and the induced
//! invariant vector. Sampled paths record the visited modes and the time
//! spent in each.
//!
//! Mode indices are zero-based throughout the crate.

use thiserror::Error;

use crate::linalg::{Lu, Matrix};
use crate::rng::Stream;

/// Tolerance for accepting a row sum as 1 before renormalization.
const ROW_SUM_TOL: f64 = 1e-9;
/// Entries above this threshold count as edges of the positivity graph.
const POSITIVITY_TOL: f64 = 1e-14;
/// Required residual for the invariant vector.
const INVARIANT_TOL: f64 = 1e-12;
/// Above this mode count the invariant vector falls back to damped power
/// iteration instead of dense elimination.
const ELIMINATION_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("transition matrix must be square and match the dwell count (got {rows}x{cols} with {dwell} dwell laws)")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        dwell: usize,
    },
    #[error("row {row} of the transition matrix sums to {sum}, not 1")]
    RowSum { row: usize, sum: f64 },
    #[error("negative transition probability at ({row},{col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("transition matrix is not irreducible")]
    NotIrreducible,
    #[error("invalid dwell distribution parameter for mode {mode}: {reason}")]
    BadDwellParameter { mode: usize, reason: String },
    #[error("model must have at least one mode")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("index {index} out of range for a path of length {len}")]
    OutOfRange { index: usize, len: usize },
    #[error("time {t} is beyond the sampled horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("time argument {0} must be positive")]
    NonpositiveTime(f64),
    #[error("mode index {mode} out of range for {modes} modes")]
    BadMode { mode: usize, modes: usize },
    #[error("dwell times must be positive (step {index})")]
    NonpositiveDwell { index: usize },
}

/// Dwell-time law on (0, inf) with a closed-form mean.
///
/// Every catalogued law has finite moments of all orders in (1, 2], which is
/// what the stability criterion's moment hypothesis needs; this holds by
/// construction and is not rechecked at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum DwellDistribution {
    Dirac { value: f64 },
    Exponential { rate: f64 },
    Uniform { lower: f64, upper: f64 },
    LogNormal { location: f64, scale: f64 },
}

impl DwellDistribution {
    pub fn validate(&self, mode: usize) -> Result<(), ModelError> {
        let bad = |reason: &str| ModelError::BadDwellParameter {
            mode,
            reason: reason.to_string(),
        };
        match *self {
            DwellDistribution::Dirac { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(bad("dirac value must be positive and finite"));
                }
            }
            DwellDistribution::Exponential { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(bad("exponential rate must be positive and finite"));
                }
            }
            DwellDistribution::Uniform { lower, upper } => {
                if !(lower > 0.0 && upper > lower && upper.is_finite()) {
                    return Err(bad("uniform bounds must satisfy 0 < lower < upper"));
                }
            }
            DwellDistribution::LogNormal { location, scale } => {
                if !(scale > 0.0 && scale.is_finite() && location.is_finite()) {
                    return Err(bad("lognormal scale must be positive and finite"));
                }
            }
        }
        Ok(())
    }

    /// Expected value, in closed form.
    pub fn mean(&self) -> f64 {
        match *self {
            DwellDistribution::Dirac { value } => value,
            DwellDistribution::Exponential { rate } => 1.0 / rate,
            DwellDistribution::Uniform { lower, upper } => 0.5 * (lower + upper),
            DwellDistribution::LogNormal { location, scale } => {
                (location + 0.5 * scale * scale).exp()
            }
        }
    }

    /// Draws one dwell time; strictly positive for every stream state.
    pub fn sample(&self, stream: &mut Stream) -> f64 {
        match *self {
            DwellDistribution::Dirac { value } => value,
            DwellDistribution::Exponential { rate } => -stream.next_open01().ln() / rate,
            DwellDistribution::Uniform { lower, upper } => {
                lower + (upper - lower) * stream.next_f64()
            }
            DwellDistribution::LogNormal { location, scale } => {
                (location + scale * stream.next_gaussian()).exp()
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DwellDistribution::Dirac { .. } => "dirac",
            DwellDistribution::Exponential { .. } => "exponential",
            DwellDistribution::Uniform { .. } => "uniform",
            DwellDistribution::LogNormal { .. } => "lognormal",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            DwellDistribution::Dirac { value } => vec![value],
            DwellDistribution::Exponential { rate } => vec![rate],
            DwellDistribution::Uniform { lower, upper } => vec![lower, upper],
            DwellDistribution::LogNormal { location, scale } => vec![location, scale],
        }
    }

    pub fn from_parts(kind: &str, params: &[f64]) -> Option<Self> {
        match (kind, params) {
            ("dirac", [v]) => Some(DwellDistribution::Dirac { value: *v }),
            ("exponential", [r]) => Some(DwellDistribution::Exponential { rate: *r }),
            ("uniform", [a, b]) => Some(DwellDistribution::Uniform {
                lower: *a,
                upper: *b,
            }),
            ("lognormal", [m, s]) => Some(DwellDistribution::LogNormal {
                location: *m,
                scale: *s,
            }),
            _ => None,
        }
    }
}

/// Validated switching model: irreducible stochastic matrix, dwell laws,
/// and the unique invariant probability vector.
///
/// Immutable after construction; sampling is pure given `(model, seed, n)`.
#[derive(Debug, Clone)]
pub struct SwitchingModel {
    transition: Matrix,
    dwell: Vec<DwellDistribution>,
    invariant: Vec<f64>,
}

impl SwitchingModel {
    /// Validates and builds a model. Rows off 1 by at most 1e-9 are accepted
    /// and renormalized to sum to 1 exactly.
    pub fn new(transition: Matrix, dwell: Vec<DwellDistribution>) -> Result<Self, ModelError> {
        let n = dwell.len();
        if n == 0 {
            return Err(ModelError::Empty);
        }
        if transition.rows() != n || transition.cols() != n {
            return Err(ModelError::ShapeMismatch {
                rows: transition.rows(),
                cols: transition.cols(),
                dwell: n,
            });
        }
        let mut m = transition;
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let v = m.get(i, j);
                if v < -POSITIVITY_TOL {
                    return Err(ModelError::NegativeEntry { row: i, col: j });
                }
                sum += v.max(0.0);
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(ModelError::RowSum { row: i, sum });
            }
            for j in 0..n {
                let v = m.get(i, j).max(0.0) / sum;
                m.set(i, j, v);
            }
        }
        if !is_irreducible(&m) {
            return Err(ModelError::NotIrreducible);
        }
        for (mode, d) in dwell.iter().enumerate() {
            d.validate(mode)?;
        }
        let invariant = invariant_vector(&m)?;
        Ok(Self {
            transition: m,
            dwell,
            invariant,
        })
    }

    pub fn modes(&self) -> usize {
        self.dwell.len()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn dwell(&self) -> &[DwellDistribution] {
        &self.dwell
    }

    /// The unique probability vector with `p M = p`.
    pub fn invariant_vector(&self) -> &[f64] {
        &self.invariant
    }

    /// Mean dwell time under the invariant distribution: sum of p_i tau_i.
    pub fn mean_dwell(&self) -> f64 {
        self.invariant
            .iter()
            .zip(&self.dwell)
            .map(|(p, d)| p * d.mean())
            .sum()
    }

    /// Samples a path of `steps` switches, fully determined by `seed`.
    ///
    /// The first mode is drawn from the invariant vector, each dwell from the
    /// current mode's law, and each successor from the current row of the
    /// transition matrix.
    pub fn sample_path(&self, steps: usize, seed: u64) -> SwitchPath {
        let mut stream = Stream::new(seed);
        let mut modes = Vec::with_capacity(steps);
        let mut dwells = Vec::with_capacity(steps);
        let mut switch_times = Vec::with_capacity(steps);
        let mut total = 0.0;
        let mut mode = sample_index(&self.invariant, &mut stream);
        for _ in 0..steps {
            modes.push(mode);
            let t = self.dwell[mode].sample(&mut stream);
            dwells.push(t);
            total += t;
            switch_times.push(total);
            mode = sample_index(self.transition.row(mode), &mut stream);
        }
        SwitchPath {
            modes,
            dwells,
            switch_times,
        }
    }
}

fn sample_index(weights: &[f64], stream: &mut Stream) -> usize {
    let u = stream.next_f64();
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    weights.len() - 1
}

/// Strong connectivity of the positivity graph, by forward and backward
/// breadth-first search from node 0.
fn is_irreducible(m: &Matrix) -> bool {
    let n = m.rows();
    let reach = |forward: bool| -> usize {
        let mut seen = vec![false; n];
        let mut queue = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop() {
            for j in 0..n {
                let w = if forward { m.get(i, j) } else { m.get(j, i) };
                if w > POSITIVITY_TOL && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push(j);
                }
            }
        }
        count
    };
    reach(true) == n && reach(false) == n
}

/// Solves `p M = p`, `sum p = 1` for a validated stochastic matrix.
///
/// Dense elimination with iterative refinement at small sizes; damped power
/// iteration beyond 64 modes.
pub fn invariant_vector(m: &Matrix) -> Result<Vec<f64>, ModelError> {
    let n = m.rows();
    if n != m.cols() || n == 0 {
        return Err(ModelError::ShapeMismatch {
            rows: m.rows(),
            cols: m.cols(),
            dwell: n,
        });
    }
    if !is_irreducible(m) {
        return Err(ModelError::NotIrreducible);
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }

    let mut p = if n <= ELIMINATION_LIMIT {
        // (M^T - I) p = 0 with the last equation replaced by sum p = 1.
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, m.get(j, i) - if i == j { 1.0 } else { 0.0 });
            }
        }
        for j in 0..n {
            a.set(n - 1, j, 1.0);
        }
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let lu = Lu::new(&a).map_err(|_| ModelError::NotIrreducible)?;
        let mut p = lu.solve(&b);
        // Two rounds of iterative refinement in the original system.
        for _ in 0..2 {
            let mut r = b.clone();
            for i in 0..n {
                for j in 0..n {
                    r[i] -= a.get(i, j) * p[j];
                }
            }
            let dp = lu.solve(&r);
            for i in 0..n {
                p[i] += dp[i];
            }
        }
        p
    } else {
        // Lazy chain p <- (p + pM)/2 shares the fixed point but has no
        // eigenvalue at -1, so it converges for periodic chains too.
        let mut p = vec![1.0 / n as f64; n];
        for _ in 0..200_000 {
            let next: Vec<f64> = (0..n)
                .map(|j| 0.5 * (p[j] + (0..n).map(|i| p[i] * m.get(i, j)).sum::<f64>()))
                .collect();
            let delta = p
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            p = next;
            if delta < 1e-15 {
                break;
            }
        }
        p
    };

    let sum: f64 = p.iter().sum();
    for x in &mut p {
        *x /= sum;
    }
    if p.iter().any(|&x| !(x > 0.0)) {
        return Err(ModelError::NotIrreducible);
    }
    let residual = (0..n)
        .map(|j| ((0..n).map(|i| p[i] * m.get(i, j)).sum::<f64>() - p[j]).abs())
        .fold(0.0f64, f64::max);
    if residual > INVARIANT_TOL {
        return Err(ModelError::NotIrreducible);
    }
    Ok(p)
}

/// A finite realization of the switching signal: modes visited, dwell times,
/// and cumulative switch times.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchPath {
    modes: Vec<usize>,
    dwells: Vec<f64>,
    switch_times: Vec<f64>,
}

impl SwitchPath {
    /// Builds a path from `(mode, dwell)` steps, checking positivity.
    pub fn from_steps(steps: &[(usize, f64)]) -> Result<Self, PathError> {
        let mut modes = Vec::with_capacity(steps.len());
        let mut dwells = Vec::with_capacity(steps.len());
        let mut switch_times = Vec::with_capacity(steps.len());
        let mut total = 0.0;
        for (index, &(mode, t)) in steps.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(PathError::NonpositiveDwell { index });
            }
            modes.push(mode);
            dwells.push(t);
            total += t;
            switch_times.push(total);
        }
        Ok(Self {
            modes,
            dwells,
            switch_times,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode(&self, k: usize) -> usize {
        self.modes[k]
    }

    pub fn dwell(&self, k: usize) -> f64 {
        self.dwells[k]
    }

    pub fn modes_slice(&self) -> &[usize] {
        &self.modes
    }

    pub fn dwells_slice(&self) -> &[f64] {
        &self.dwells
    }

    /// Cumulative switch time `s_k` for `k` in `0..=len` (`s_0 = 0`).
    pub fn switch_time(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.switch_times[k - 1]
        }
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    /// Total sampled horizon `s_n`.
    pub fn total_time(&self) -> f64 {
        self.switch_time(self.len())
    }

    /// Drops the first `m` steps and reindexes from zero.
    pub fn shift(&self, m: usize) -> Result<SwitchPath, PathError> {
        if m >= self.len() {
            return Err(PathError::OutOfRange {
                index: m,
                len: self.len(),
            });
        }
        let steps: Vec<(usize, f64)> = (m..self.len())
            .map(|k| (self.modes[k], self.dwells[k]))
            .collect();
        SwitchPath::from_steps(&steps)
    }

    /// The signal value at time `t`: the mode active on `[s_{k-1}, s_k)`.
    ///
    /// Right-continuous: at a switch time the new mode is reported.
    pub fn signal_at(&self, t: f64) -> Result<usize, PathError> {
        if !(t >= 0.0) || t >= self.total_time() {
            return Err(PathError::HorizonExceeded {
                t,
                horizon: self.total_time(),
            });
        }
        let idx = self.switch_times.partition_point(|&s| s <= t);
        Ok(self.modes[idx])
    }

    /// Fraction of `[0, horizon]` during which `mode` is active.
    ///
    /// Compensated summation keeps the fractions over all modes summing to 1
    /// to machine precision even on very long paths.
    pub fn occupation_fraction(&self, horizon: f64, mode: usize) -> Result<f64, PathError> {
        if !(horizon > 0.0) {
            return Err(PathError::NonpositiveTime(horizon));
        }
        if horizon > self.total_time() {
            return Err(PathError::HorizonExceeded {
                t: horizon,
                horizon: self.total_time(),
            });
        }
        let n_modes = self.modes.iter().copied().max().map_or(0, |m| m + 1);
        if mode >= n_modes.max(1) {
            return Err(PathError::BadMode {
                mode,
                modes: n_modes,
            });
        }
        let mut sum = 0.0;
        let mut comp = 0.0;
        for k in 0..self.len() {
            let start = self.switch_time(k);
            if start >= horizon {
                break;
            }
            if self.modes[k] != mode {
                continue;
            }
            let end = self.switch_time(k + 1).min(horizon);
            let term = end - start;
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        Ok(sum / horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_mode_swap(d1: DwellDistribution, d2: DwellDistribution) -> SwitchingModel {
        let m = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        SwitchingModel::new(m, vec![d1, d2]).unwrap()
    }

    fn dirac(v: f64) -> DwellDistribution {
        DwellDistribution::Dirac { value: v }
    }

    #[test]
    fn swap_model_has_uniform_invariant() {
        let model = two_mode_swap(dirac(1.0), dirac(1.0));
        let p = model.invariant_vector();
        assert!((p[0] - 0.5).abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn disconnected_chain_is_rejected() {
        let m = Matrix::identity(2);
        let err = SwitchingModel::new(m, vec![dirac(1.0), dirac(1.0)]).unwrap_err();
        assert_eq!(err, ModelError::NotIrreducible);
    }

    #[test]
    fn bad_row_sum_is_rejected() {
        let m = Matrix::from_rows(&[&[0.5, 0.4], &[1.0, 0.0]]);
        let err = SwitchingModel::new(m, vec![dirac(1.0), dirac(1.0)]).unwrap_err();
        assert!(matches!(err, ModelError::RowSum { row: 0, .. }));
    }

    #[test]
    fn bad_dwell_parameters_are_rejected() {
        let m = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        for d in [
            dirac(0.0),
            DwellDistribution::Exponential { rate: -1.0 },
            DwellDistribution::Uniform {
                lower: 2.0,
                upper: 1.0,
            },
            DwellDistribution::Uniform {
                lower: 0.0,
                upper: 1.0,
            },
            DwellDistribution::LogNormal {
                location: 0.0,
                scale: 0.0,
            },
        ] {
            let err = SwitchingModel::new(m.clone(), vec![d, dirac(1.0)]).unwrap_err();
            assert!(matches!(err, ModelError::BadDwellParameter { mode: 0, .. }));
        }
    }

    #[test]
    fn invariant_vector_three_cycle() {
        let m = Matrix::from_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        let p = invariant_vector(&m).unwrap();
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn invariant_vector_asymmetric_two_state() {
        // Hand solve of p M = p for M = [[0.9, 0.1], [0.5, 0.5]]:
        // p = (5/6, 1/6).
        let m = Matrix::from_rows(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let p = invariant_vector(&m).unwrap();
        assert!((p[0] - 5.0 / 6.0).abs() < 1e-13);
        assert!((p[1] - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn mean_dwell_closed_forms() {
        let m = two_mode_swap(dirac(1.0), dirac(1.0));
        assert!((m.mean_dwell() - 1.0).abs() < 1e-14);
        let m = two_mode_swap(dirac(1.0), dirac(3.0));
        assert!((m.mean_dwell() - 2.0).abs() < 1e-14);
        // p = (5/6, 1/6) with means 0.5 and 2.0 gives 0.75.
        let trans = Matrix::from_rows(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let model = SwitchingModel::new(
            trans,
            vec![
                DwellDistribution::Exponential { rate: 2.0 },
                DwellDistribution::Uniform {
                    lower: 1.0,
                    upper: 3.0,
                },
            ],
        )
        .unwrap();
        assert!((model.mean_dwell() - 0.75).abs() < 1e-13);
    }

    #[test]
    fn swap_model_paths_alternate() {
        let model = two_mode_swap(
            DwellDistribution::Exponential { rate: 1.0 },
            DwellDistribution::Exponential { rate: 2.0 },
        );
        let path = model.sample_path(100, 7);
        for k in 1..path.len() {
            assert_ne!(path.mode(k), path.mode(k - 1));
        }
    }

    #[test]
    fn dirac_dwells_make_arithmetic_switch_times() {
        let model = two_mode_swap(dirac(2.0), dirac(2.0));
        let path = model.sample_path(10, 3);
        for k in 0..10 {
            assert_eq!(path.dwell(k), 2.0);
            assert!((path.switch_time(k + 1) - 2.0 * (k + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_path_distinct_seeds_differ() {
        let model = two_mode_swap(
            DwellDistribution::Exponential { rate: 1.0 },
            DwellDistribution::Exponential { rate: 1.0 },
        );
        assert_eq!(model.sample_path(50, 11), model.sample_path(50, 11));
        let mut differing = 0;
        for pair in 0..100u64 {
            let a = model.sample_path(10, crate::rng::derive_seed(99, 2 * pair));
            let b = model.sample_path(10, crate::rng::derive_seed(99, 2 * pair + 1));
            if a != b {
                differing += 1;
            }
        }
        assert!(differing > 99, "only {differing}/100 seed pairs differed");
    }

    #[test]
    fn shift_reindexes_and_composes() {
        let path = SwitchPath::from_steps(&[(0, 1.0), (1, 0.5), (0, 2.0)]).unwrap();
        assert_eq!(path.shift(0).unwrap(), path);
        let shifted = path.shift(1).unwrap();
        assert_eq!(shifted.modes_slice(), &[1, 0]);
        assert_eq!(shifted.dwells_slice(), &[0.5, 2.0]);
        let twice = path.shift(1).unwrap().shift(1).unwrap();
        assert_eq!(twice, path.shift(2).unwrap());
        assert!(matches!(path.shift(3), Err(PathError::OutOfRange { .. })));
    }

    #[test]
    fn signal_is_right_continuous() {
        let path = SwitchPath::from_steps(&[(0, 1.0), (1, 0.5)]).unwrap();
        assert_eq!(path.signal_at(0.0).unwrap(), 0);
        assert_eq!(path.signal_at(1.2).unwrap(), 1);
        // Exactly at the first switch time the new mode is active.
        assert_eq!(path.signal_at(1.0).unwrap(), 1);
        assert!(matches!(
            path.signal_at(1.5),
            Err(PathError::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn occupation_single_mode_is_one() {
        let m = Matrix::from_rows(&[&[1.0]]);
        let model = SwitchingModel::new(m, vec![dirac(1.0)]).unwrap();
        let path = model.sample_path(20, 1);
        assert!((path.occupation_fraction(15.0, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn occupation_alternating_cases() {
        let even = two_mode_swap(dirac(1.0), dirac(1.0));
        let path = even.sample_path(20, 5);
        assert!((path.occupation_fraction(10.0, 0).unwrap() - 0.5).abs() < 1e-12);
        assert!((path.occupation_fraction(10.0, 1).unwrap() - 0.5).abs() < 1e-12);

        // Dwell 1 in mode 0, dwell 3 in mode 1: fractions 1/4 and 3/4 at
        // multiples of the period, matching p_i tau_i / m.
        let skewed = two_mode_swap(dirac(1.0), dirac(3.0));
        let path = skewed.sample_path(40, 5);
        let t = 16.0;
        assert!((path.occupation_fraction(t, 0).unwrap() - 0.25).abs() < 1e-12);
        assert!((path.occupation_fraction(t, 1).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn embedded_chain_frequencies_match_invariant() {
        let trans = Matrix::from_rows(&[&[0.2, 0.5, 0.3], &[0.4, 0.1, 0.5], &[0.25, 0.25, 0.5]]);
        let model = SwitchingModel::new(trans, vec![dirac(1.0), dirac(1.0), dirac(1.0)]).unwrap();
        let n = 100_000;
        let path = model.sample_path(n, 12345);
        let mut counts = [0usize; 3];
        for k in 0..n {
            counts[path.mode(k)] += 1;
        }
        for i in 0..3 {
            let freq = counts[i] as f64 / n as f64;
            assert!(
                (freq - model.invariant_vector()[i]).abs() < 0.01,
                "mode {i}: {freq} vs {}",
                model.invariant_vector()[i]
            );
        }
    }

    #[test]
    fn mean_switch_time_obeys_ergodic_limit() {
        let trans = Matrix::from_rows(&[&[0.3, 0.7], &[0.6, 0.4]]);
        let model = SwitchingModel::new(
            trans,
            vec![
                DwellDistribution::Exponential { rate: 0.5 },
                DwellDistribution::Uniform {
                    lower: 0.5,
                    upper: 1.5,
                },
            ],
        )
        .unwrap();
        let n = 100_000;
        let path = model.sample_path(n, 777);
        let ratio = path.total_time() / n as f64;
        let m = model.mean_dwell();
        assert!((ratio - m).abs() < 0.01 * m, "s_n/n {ratio} vs m {m}");
    }

    #[test]
    fn occupation_converges_to_stationary_fractions() {
        let trans = Matrix::from_rows(&[&[0.1, 0.9], &[0.8, 0.2]]);
        let model = SwitchingModel::new(
            trans,
            vec![
                DwellDistribution::Exponential { rate: 1.0 },
                DwellDistribution::LogNormal {
                    location: 0.0,
                    scale: 0.5,
                },
            ],
        )
        .unwrap();
        let m = model.mean_dwell();
        let horizon = 1e4 * m;
        let path = model.sample_path(30_000, 4242);
        assert!(path.total_time() >= horizon, "sampled path too short");
        let p = model.invariant_vector();
        let taus: Vec<f64> = model.dwell().iter().map(|d| d.mean()).collect();
        let mut frac_sum = 0.0;
        for i in 0..2 {
            let frac = path.occupation_fraction(horizon, i).unwrap();
            frac_sum += frac;
            let expected = p[i] * taus[i] / m;
            assert!(
                (frac - expected).abs() < 0.01,
                "mode {i}: {frac} vs {expected}"
            );
        }
        assert!((frac_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_matches_time_shift_at_switch_times() {
        let trans = Matrix::from_rows(&[&[0.4, 0.6], &[0.5, 0.5]]);
        let model = SwitchingModel::new(
            trans,
            vec![
                DwellDistribution::Exponential { rate: 1.0 },
                DwellDistribution::Uniform {
                    lower: 0.2,
                    upper: 2.0,
                },
            ],
        )
        .unwrap();
        let path = model.sample_path(200, 909);
        let m = 37;
        let shifted = path.shift(m).unwrap();
        let offset = path.switch_time(m);
        // Probe strictly inside each dwell interval of the shifted path.
        for k in 0..shifted.len() {
            let s = 0.5 * (shifted.switch_time(k) + shifted.switch_time(k + 1));
            assert_eq!(
                shifted.signal_at(s).unwrap(),
                path.signal_at(offset + s).unwrap()
            );
        }
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_dwell() -> impl Strategy<Value = DwellDistribution> {
        prop_oneof![
            (0.1f64..5.0).prop_map(|value| DwellDistribution::Dirac { value }),
            (0.2f64..4.0).prop_map(|rate| DwellDistribution::Exponential { rate }),
            (0.1f64..2.0, 0.1f64..3.0).prop_map(|(a, w)| DwellDistribution::Uniform {
                lower: a,
                upper: a + w,
            }),
            ((-1.0f64..1.0), (0.1f64..1.0))
                .prop_map(|(location, scale)| { DwellDistribution::LogNormal { location, scale } }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn occupation_fractions_partition_unity(
            d1 in arb_dwell(),
            d2 in arb_dwell(),
            seed in 0u64..1000,
            frac in 0.1f64..1.0,
        ) {
            let m = Matrix::from_rows(&[&[0.3, 0.7], &[0.9, 0.1]]);
            let model = SwitchingModel::new(m, vec![d1, d2]).unwrap();
            let path = model.sample_path(200, seed);
            let horizon = frac * path.total_time();
            let total: f64 = (0..2)
                .map(|i| path.occupation_fraction(horizon, i).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn dwell_samples_are_positive_with_correct_mean(d in arb_dwell(), seed in 0u64..500) {
            let mut stream = crate::rng::Stream::new(seed);
            let n = 20_000;
            let mut sum = 0.0;
            for _ in 0..n {
                let t = d.sample(&mut stream);
                prop_assert!(t > 0.0);
                sum += t;
            }
            let mean = sum / n as f64;
            // Lognormal tails are heavy; keep the bound loose.
            prop_assert!((mean - d.mean()).abs() < 0.15 * d.mean() + 0.05);
        }

        #[test]
        fn shift_composition(a in 0usize..5, b in 0usize..5, seed in 0u64..100) {
            let m = Matrix::from_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
            let model = SwitchingModel::new(
                m,
                vec![
                    DwellDistribution::Exponential { rate: 1.0 },
                    DwellDistribution::Exponential { rate: 2.0 },
                ],
            )
            .unwrap();
            let path = model.sample_path(20, seed);
            let once = path.shift(a).unwrap().shift(b).unwrap();
            let direct = path.shift(a + b).unwrap();
            prop_assert_eq!(once.modes_slice(), direct.modes_slice());
            prop_assert_eq!(once.dwells_slice(), direct.dwells_slice());
        }
    }
}
