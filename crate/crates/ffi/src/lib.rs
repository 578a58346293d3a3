//! C ABI for the randswitch library.
//!
//! Handles are opaque pointers owned by Rust; every constructor has a
//! matching `_free`, and all functions return an [`RsStatus`] code with
//! results written through out-pointers. The most recent error message is
//! retrievable per thread via [`rs_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use randswitch::cocycle::GeneratorSet;
use randswitch::formats;
use randswitch::lyapunov::{self, Verdict};
use randswitch::stabilization::{self, ControlError, StabilizeOptions, StabilizeOutcome};
use randswitch::switching::SwitchingModel;

/// Status codes returned by every FFI call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Invalid = 5,
    Uncontrollable = 6,
    BudgetExhausted = 7,
    Numeric = 8,
    BufferTooSmall = 9,
}

/// Certificate verdicts as stable integers.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsVerdict {
    AlmostSurelyStable = 0,
    Inconclusive = 1,
    LikelyUnstable = 2,
}

impl From<Verdict> for RsVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::AlmostSurelyStable => RsVerdict::AlmostSurelyStable,
            Verdict::Inconclusive => RsVerdict::Inconclusive,
            Verdict::LikelyUnstable => RsVerdict::LikelyUnstable,
        }
    }
}

/// Opaque switching model handle.
pub struct RsModel {
    inner: SwitchingModel,
}

/// Opaque generator-set handle.
pub struct RsGenerators {
    inner: GeneratorSet,
}

/// Opaque plant handle.
pub struct RsPlant {
    inner: stabilization::ControlPlant,
}

/// Opaque stabilization result handle.
pub struct RsGains {
    inner: StabilizeOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<Vec<u8>>) {
    let c = CString::new(message).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn fail(status: RsStatus, message: impl std::fmt::Display) -> RsStatus {
    set_error(message.to_string());
    status
}

/// Most recent error message on this thread; valid until the next failing
/// call from the same thread.
#[no_mangle]
pub extern "C" fn rs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn guard(body: impl FnOnce() -> RsStatus) -> RsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(RsStatus::Numeric, "internal panic"),
    }
}

/// # Safety
/// `text` must be a valid NUL-terminated string.
unsafe fn utf8_in<'a>(text: *const c_char) -> Result<&'a str, RsStatus> {
    if text.is_null() {
        return Err(fail(RsStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|e| fail(RsStatus::InvalidUtf8, e))
}

unsafe fn out_slot<'a, T>(ptr: *mut T) -> Result<&'a mut T, RsStatus> {
    ptr.as_mut()
        .ok_or_else(|| fail(RsStatus::NullArgument, "null out-pointer"))
}

// ---------------------------------------------------------------------------
// Model

/// Parses a switching-model file body.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_model_parse(text: *const c_char, out: *mut *mut RsModel) -> RsStatus {
    guard(|| {
        let out = match out_slot(out) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let text = match utf8_in(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match formats::parse_model(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RsModel { inner }));
                RsStatus::Ok
            }
            Err(e) => fail(RsStatus::Parse, e),
        }
    })
}

/// Reads and parses a model file from disk.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_model_load(path: *const c_char, out: *mut *mut RsModel) -> RsStatus {
    guard(|| {
        let out_ptr = out;
        let path = match utf8_in(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match std::fs::read_to_string(path) {
            Ok(text) => {
                let c = CString::new(text).unwrap_or_default();
                rs_model_parse(c.as_ptr(), out_ptr)
            }
            Err(e) => fail(RsStatus::Io, e),
        }
    })
}

/// # Safety
/// `model` must be a pointer returned by a model constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rs_model_free(model: *mut RsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_model_modes(model: *const RsModel, out: *mut u32) -> RsStatus {
    guard(|| {
        let (Some(model), Ok(out)) = (model.as_ref(), out_slot(out)) else {
            return fail(RsStatus::NullArgument, "null argument");
        };
        *out = model.inner.modes() as u32;
        RsStatus::Ok
    })
}

/// # Safety
/// `model` must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_model_mean_dwell(model: *const RsModel, out: *mut f64) -> RsStatus {
    guard(|| {
        let (Some(model), Ok(out)) = (model.as_ref(), out_slot(out)) else {
            return fail(RsStatus::NullArgument, "null argument");
        };
        *out = model.inner.mean_dwell();
        RsStatus::Ok
    })
}

/// Copies the invariant probability vector into `buffer`.
///
/// # Safety
/// `buffer` must point to at least `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn rs_model_invariant_vector(
    model: *const RsModel,
    buffer: *mut f64,
    capacity: usize,
) -> RsStatus {
    guard(|| {
        let Some(model) = model.as_ref() else {
            return fail(RsStatus::NullArgument, "null model");
        };
        if buffer.is_null() {
            return fail(RsStatus::NullArgument, "null buffer");
        }
        let p = model.inner.invariant_vector();
        if capacity < p.len() {
            return fail(
                RsStatus::BufferTooSmall,
                format!("need {} slots, got {capacity}", p.len()),
            );
        }
        std::ptr::copy_nonoverlapping(p.as_ptr(), buffer, p.len());
        RsStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Generators

/// Parses a generator file body.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_generators_parse(
    text: *const c_char,
    out: *mut *mut RsGenerators,
) -> RsStatus {
    guard(|| {
        let out = match out_slot(out) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let text = match utf8_in(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match formats::parse_generators(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RsGenerators { inner }));
                RsStatus::Ok
            }
            Err(e) => fail(RsStatus::Parse, e),
        }
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_generators_load(
    path: *const c_char,
    out: *mut *mut RsGenerators,
) -> RsStatus {
    guard(|| {
        let path = match utf8_in(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match std::fs::read_to_string(path) {
            Ok(text) => {
                let c = CString::new(text).unwrap_or_default();
                rs_generators_parse(c.as_ptr(), out)
            }
            Err(e) => fail(RsStatus::Io, e),
        }
    })
}

/// # Safety
/// `gens` must be a pointer returned by a generator constructor.
#[no_mangle]
pub unsafe extern "C" fn rs_generators_free(gens: *mut RsGenerators) {
    if !gens.is_null() {
        drop(Box::from_raw(gens));
    }
}

/// # Safety
/// `gens` must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_generators_dimension(
    gens: *const RsGenerators,
    out: *mut u32,
) -> RsStatus {
    guard(|| {
        let (Some(gens), Ok(out)) = (gens.as_ref(), out_slot(out)) else {
            return fail(RsStatus::NullArgument, "null argument");
        };
        *out = gens.inner.dimension() as u32;
        RsStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Lyapunov analysis

fn lyap_status(e: &lyapunov::LyapunovError) -> RsStatus {
    match e {
        lyapunov::LyapunovError::Cocycle(_) => RsStatus::Numeric,
        _ => RsStatus::Invalid,
    }
}

/// Maximal exponent along one sampled path: discrete and continuous rates.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rs_max_lyap_path(
    gens: *const RsGenerators,
    model: *const RsModel,
    n: usize,
    seed: u64,
    lambda_discrete: *mut f64,
    lambda_continuous: *mut f64,
) -> RsStatus {
    guard(|| {
        let (Some(gens), Some(model)) = (gens.as_ref(), model.as_ref()) else {
            return fail(RsStatus::NullArgument, "null handle");
        };
        if lambda_discrete.is_null() || lambda_continuous.is_null() {
            return fail(RsStatus::NullArgument, "null out-pointer");
        }
        match lyapunov::max_lyap_path(&gens.inner, &model.inner, n, seed) {
            Ok((d, c)) => {
                *lambda_discrete = d;
                *lambda_continuous = c;
                RsStatus::Ok
            }
            Err(e) => {
                let status = lyap_status(&e);
                fail(status, e)
            }
        }
    })
}

/// Monte Carlo estimate of the discrete growth rate with a 95% half-width.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rs_max_lyap_mc(
    gens: *const RsGenerators,
    model: *const RsModel,
    n: usize,
    trials: usize,
    seed: u64,
    mean: *mut f64,
    half_width: *mut f64,
) -> RsStatus {
    guard(|| {
        let (Some(gens), Some(model)) = (gens.as_ref(), model.as_ref()) else {
            return fail(RsStatus::NullArgument, "null handle");
        };
        if mean.is_null() || half_width.is_null() {
            return fail(RsStatus::NullArgument, "null out-pointer");
        }
        match lyapunov::max_lyap_mc(&gens.inner, &model.inner, n, trials, seed) {
            Ok(est) => {
                *mean = est.mean;
                *half_width = est.half_width;
                RsStatus::Ok
            }
            Err(e) => {
                let status = lyap_status(&e);
                fail(status, e)
            }
        }
    })
}

/// Lyapunov spectrum with multiplicities. On entry `*count` is the capacity
/// of both buffers; on success it holds the number of distinct exponents.
///
/// # Safety
/// `exponents` and `multiplicities` must point to at least `*count` slots.
#[no_mangle]
pub unsafe extern "C" fn rs_lyap_spectrum(
    gens: *const RsGenerators,
    model: *const RsModel,
    n: usize,
    seed: u64,
    exponents: *mut f64,
    multiplicities: *mut u32,
    count: *mut usize,
) -> RsStatus {
    guard(|| {
        let (Some(gens), Some(model)) = (gens.as_ref(), model.as_ref()) else {
            return fail(RsStatus::NullArgument, "null handle");
        };
        let Ok(count) = out_slot(count) else {
            return fail(RsStatus::NullArgument, "null count");
        };
        if exponents.is_null() || multiplicities.is_null() {
            return fail(RsStatus::NullArgument, "null buffer");
        }
        match lyapunov::lyap_spectrum(&gens.inner, &model.inner, n, seed) {
            Ok(spectrum) => {
                if *count < spectrum.len() {
                    return fail(
                        RsStatus::BufferTooSmall,
                        format!("need {} slots, got {}", spectrum.len(), *count),
                    );
                }
                for (i, entry) in spectrum.iter().enumerate() {
                    *exponents.add(i) = entry.exponent;
                    *multiplicities.add(i) = entry.multiplicity as u32;
                }
                *count = spectrum.len();
                RsStatus::Ok
            }
            Err(e) => {
                let status = lyap_status(&e);
                fail(status, e)
            }
        }
    })
}

/// Monte Carlo stability certificate.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rs_stability_certificate(
    gens: *const RsGenerators,
    model: *const RsModel,
    n: usize,
    trials: usize,
    seed: u64,
    verdict: *mut RsVerdict,
    mean_log_norm: *mut f64,
    half_width: *mut f64,
) -> RsStatus {
    guard(|| {
        let (Some(gens), Some(model)) = (gens.as_ref(), model.as_ref()) else {
            return fail(RsStatus::NullArgument, "null handle");
        };
        if verdict.is_null() || mean_log_norm.is_null() || half_width.is_null() {
            return fail(RsStatus::NullArgument, "null out-pointer");
        }
        match lyapunov::stability_certificate(&gens.inner, &model.inner, n, trials, seed) {
            Ok(cert) => {
                *verdict = cert.verdict.into();
                *mean_log_norm = cert.mean_log_norm;
                *half_width = cert.confidence_half_width;
                RsStatus::Ok
            }
            Err(e) => {
                let status = lyap_status(&e);
                fail(status, e)
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Plant and stabilization

/// Parses a plant file body.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_plant_parse(text: *const c_char, out: *mut *mut RsPlant) -> RsStatus {
    guard(|| {
        let out = match out_slot(out) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let text = match utf8_in(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let subsystems = match formats::parse_plant(text) {
            Ok(s) => s,
            Err(e) => return fail(RsStatus::Parse, e),
        };
        match stabilization::build_plant(subsystems) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RsPlant { inner }));
                RsStatus::Ok
            }
            Err(e) => fail(RsStatus::Invalid, e),
        }
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_plant_load(path: *const c_char, out: *mut *mut RsPlant) -> RsStatus {
    guard(|| {
        let path = match utf8_in(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match std::fs::read_to_string(path) {
            Ok(text) => {
                let c = CString::new(text).unwrap_or_default();
                rs_plant_parse(c.as_ptr(), out)
            }
            Err(e) => fail(RsStatus::Io, e),
        }
    })
}

/// # Safety
/// `plant` must be a pointer returned by a plant constructor.
#[no_mangle]
pub unsafe extern "C" fn rs_plant_free(plant: *mut RsPlant) {
    if !plant.is_null() {
        drop(Box::from_raw(plant));
    }
}

/// Sweeps the placement rate until the target decay rate is met.
///
/// Returns `Ok` with a gains handle on success and `BudgetExhausted` (with
/// the best stage's gains still written to `out`) when the sweep runs out.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rs_stabilize(
    plant: *const RsPlant,
    model: *const RsModel,
    lambda_target: f64,
    gamma_max: f64,
    n: usize,
    trials: usize,
    seed: u64,
    out: *mut *mut RsGains,
) -> RsStatus {
    guard(|| {
        let (Some(plant), Some(model)) = (plant.as_ref(), model.as_ref()) else {
            return fail(RsStatus::NullArgument, "null handle");
        };
        let Ok(out) = out_slot(out) else {
            return fail(RsStatus::NullArgument, "null out-pointer");
        };
        let options = StabilizeOptions {
            gamma_max,
            n,
            trials,
            seed,
        };
        match stabilization::stabilize_to_rate(&plant.inner, &model.inner, lambda_target, options) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(RsGains { inner: outcome }));
                RsStatus::Ok
            }
            Err(ControlError::BudgetExhausted { best, gamma_max }) => {
                *out = Box::into_raw(Box::new(RsGains { inner: *best }));
                fail(
                    RsStatus::BudgetExhausted,
                    format!("gamma budget {gamma_max} exhausted"),
                )
            }
            Err(e @ ControlError::Uncontrollable { .. }) => fail(RsStatus::Uncontrollable, e),
            Err(e) => fail(RsStatus::Invalid, e),
        }
    })
}

/// # Safety
/// `gains` must be a pointer returned by `rs_stabilize`.
#[no_mangle]
pub unsafe extern "C" fn rs_gains_free(gains: *mut RsGains) {
    if !gains.is_null() {
        drop(Box::from_raw(gains));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rs_gains_summary(
    gains: *const RsGains,
    gamma: *mut f64,
    achieved_lambda: *mut f64,
    achieved_upper: *mut f64,
) -> RsStatus {
    guard(|| {
        let Some(gains) = gains.as_ref() else {
            return fail(RsStatus::NullArgument, "null gains");
        };
        if gamma.is_null() || achieved_lambda.is_null() || achieved_upper.is_null() {
            return fail(RsStatus::NullArgument, "null out-pointer");
        }
        *gamma = gains.inner.gamma;
        *achieved_lambda = gains.inner.report.lambda_max_continuous;
        *achieved_upper = gains.inner.achieved_upper_continuous;
        RsStatus::Ok
    })
}

/// Dimensions of the gain for `mode`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rs_gains_dims(
    gains: *const RsGains,
    mode: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> RsStatus {
    guard(|| {
        let Some(gains) = gains.as_ref() else {
            return fail(RsStatus::NullArgument, "null gains");
        };
        if rows.is_null() || cols.is_null() {
            return fail(RsStatus::NullArgument, "null out-pointer");
        }
        let Some(k) = gains.inner.gains.gains.get(mode) else {
            return fail(RsStatus::Invalid, format!("no gain for mode {mode}"));
        };
        *rows = k.rows();
        *cols = k.cols();
        RsStatus::Ok
    })
}

/// Copies the row-major gain matrix for `mode` into `buffer`.
///
/// # Safety
/// `buffer` must point to at least `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn rs_gains_copy(
    gains: *const RsGains,
    mode: usize,
    buffer: *mut f64,
    capacity: usize,
) -> RsStatus {
    guard(|| {
        let Some(gains) = gains.as_ref() else {
            return fail(RsStatus::NullArgument, "null gains");
        };
        if buffer.is_null() {
            return fail(RsStatus::NullArgument, "null buffer");
        }
        let Some(k) = gains.inner.gains.gains.get(mode) else {
            return fail(RsStatus::Invalid, format!("no gain for mode {mode}"));
        };
        let needed = k.rows() * k.cols();
        if capacity < needed {
            return fail(
                RsStatus::BufferTooSmall,
                format!("need {needed} slots, got {capacity}"),
            );
        }
        std::ptr::copy_nonoverlapping(k.data().as_ptr(), buffer, needed);
        RsStatus::Ok
    })
}
