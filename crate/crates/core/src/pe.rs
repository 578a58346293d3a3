//! Persistent excitation analysis of switching signals: finite-horizon
//! window checks and the asymptotic excitation constant of the two-mode
//! no-trivial-switch model.
//!
//! The activity signal is the indicator of a designated active mode.

use thiserror::Error;

use crate::switching::{PathError, SwitchPath, SwitchingModel};

/// Slack when comparing window integrals against mu, absorbing prefix-sum
/// rounding on long paths. Window integrals are otherwise exact: they are
/// piecewise linear in the start time, so checking the breakpoints decides
/// the whole horizon.
const WINDOW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PeError {
    #[error("window must satisfy 0 < mu <= T <= horizon (T = {t_window}, mu = {mu}, horizon = {horizon})")]
    BadWindow {
        t_window: f64,
        mu: f64,
        horizon: f64,
    },
    #[error("horizon {horizon} exceeds the sampled path length {available}")]
    HorizonExceeded { horizon: f64, available: f64 },
    #[error("model shape not supported: {0}")]
    ModelShape(String),
    #[error("{0}")]
    Path(#[from] PathError),
}

/// Result of a `(T, mu)` window check over a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PEWindowCheck {
    pub t_window: f64,
    pub mu: f64,
    pub horizon: f64,
    /// Earliest checked window start whose integral falls below `mu`.
    pub violated_at: Option<f64>,
}

impl PEWindowCheck {
    pub fn is_pe(&self) -> bool {
        self.violated_at.is_none()
    }
}

/// Cumulative time spent in `active_mode` on `[0, t]`, evaluated exactly
/// from the path's switch structure.
struct Occupation<'a> {
    path: &'a SwitchPath,
    active: usize,
    /// prefix[k] = active time in [0, s_k].
    prefix: Vec<f64>,
}

impl<'a> Occupation<'a> {
    fn new(path: &'a SwitchPath, active: usize) -> Self {
        let mut prefix = Vec::with_capacity(path.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for k in 0..path.len() {
            if path.mode(k) == active {
                acc += path.dwell(k);
            }
            prefix.push(acc);
        }
        Self {
            path,
            active,
            prefix,
        }
    }

    fn at(&self, t: f64) -> f64 {
        let idx = self
            .path
            .switch_times()
            .partition_point(|&s| s <= t)
            .min(self.path.len().saturating_sub(1));
        let base = self.prefix[idx];
        if self.path.mode(idx) == self.active {
            base + (t - self.path.switch_time(idx)).max(0.0)
        } else {
            base
        }
    }
}

/// Verifies the window condition over every start in `[0, horizon - T]`.
///
/// The integral of a {0,1} signal over a sliding window is piecewise linear
/// in the start time with breakpoints where the window edges cross switch
/// times, so evaluating at those finitely many starts is an exact check.
pub fn is_pe_on_horizon(
    path: &SwitchPath,
    active_mode: usize,
    t_window: f64,
    mu: f64,
    horizon: f64,
) -> Result<PEWindowCheck, PeError> {
    if !(mu > 0.0 && mu <= t_window && t_window <= horizon) {
        return Err(PeError::BadWindow {
            t_window,
            mu,
            horizon,
        });
    }
    if horizon > path.total_time() {
        return Err(PeError::HorizonExceeded {
            horizon,
            available: path.total_time(),
        });
    }

    let occupation = Occupation::new(path, active_mode);
    let last_start = horizon - t_window;
    let mut starts = vec![0.0, last_start];
    for &s in path.switch_times() {
        if s > 0.0 && s < last_start {
            starts.push(s);
        }
        let shifted = s - t_window;
        if shifted > 0.0 && shifted < last_start {
            starts.push(shifted);
        }
    }
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    starts.dedup();

    let threshold = mu - WINDOW_TOL * mu.max(1.0);
    let violated_at = starts
        .into_iter()
        .find(|&t| occupation.at(t + t_window) - occupation.at(t) < threshold);
    Ok(PEWindowCheck {
        t_window,
        mu,
        horizon,
        violated_at,
    })
}

/// Long-run average activity of the two-mode alternating model:
/// `tau_1 / (tau_1 + tau_2)` with mode 0 active.
///
/// Requires exactly two modes and the anti-diagonal transition matrix, the
/// convention under which no trivial switches occur.
pub fn asymptotic_pe_constant(model: &SwitchingModel) -> Result<f64, PeError> {
    if model.modes() != 2 {
        return Err(PeError::ModelShape(format!(
            "expected 2 modes, got {}",
            model.modes()
        )));
    }
    let m = model.transition();
    let anti = (m.get(0, 1) - 1.0).abs() <= 1e-12
        && (m.get(1, 0) - 1.0).abs() <= 1e-12
        && m.get(0, 0).abs() <= 1e-12
        && m.get(1, 1).abs() <= 1e-12;
    if !anti {
        return Err(PeError::ModelShape(
            "transition matrix must alternate the two modes".into(),
        ));
    }
    let tau1 = model.dwell()[0].mean();
    let tau2 = model.dwell()[1].mean();
    Ok(tau1 / (tau1 + tau2))
}

/// Time average of the activity signal over `[0, horizon]`; identical to the
/// occupation fraction of the active mode.
pub fn empirical_pe_average(
    path: &SwitchPath,
    active_mode: usize,
    horizon: f64,
) -> Result<f64, PeError> {
    Ok(path.occupation_fraction(horizon, active_mode)?)
}
