//! C ABI over `corisk`.
//!
//! Models live behind opaque handles created by `corisk_*_new`/`corisk_*_load` style
//! constructors and released by the matching `*_free`. Every fallible call returns a
//! [`CoriskStatus`]; on failure `corisk_last_error_message` describes the error on the
//! calling thread. Out-parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use corisk::cli::pipeline::FittedModel;
use corisk::copulas::{Copula, CopulaModel};
use corisk::marginals::MarginalModel;
use corisk::measures::{self, MeasureRequest, MedianPolicy};
use corisk::models::JointModel;
use corisk::CoriskError;

/// Result of every fallible call. `Ok` is zero.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoriskStatus {
    Ok = 0,
    InvalidParameter = 1,
    DimensionMismatch = 2,
    OutOfDomain = 3,
    ZeroProbabilityEvent = 4,
    NonMonotoneDistortion = 5,
    NonintegrableTail = 6,
    InsufficientExcesses = 7,
    NumericFailure = 8,
    NonConvergence = 9,
    NonpositiveBenchmark = 10,
    RareEvent = 11,
    Unsupported = 12,
    Input = 13,
    Validation = 14,
    NullPointer = 100,
    InvalidUtf8 = 101,
    Panic = 102,
}

impl From<&CoriskError> for CoriskStatus {
    fn from(e: &CoriskError) -> Self {
        match e {
            CoriskError::InvalidParameter(_) => CoriskStatus::InvalidParameter,
            CoriskError::DimensionMismatch { .. } => CoriskStatus::DimensionMismatch,
            CoriskError::OutOfDomain(_) => CoriskStatus::OutOfDomain,
            CoriskError::ZeroProbabilityEvent => CoriskStatus::ZeroProbabilityEvent,
            CoriskError::NonMonotoneDistortion(_) => CoriskStatus::NonMonotoneDistortion,
            CoriskError::NonintegrableTail(_) => CoriskStatus::NonintegrableTail,
            CoriskError::InsufficientExcesses { .. } => CoriskStatus::InsufficientExcesses,
            CoriskError::NumericFailure(_) => CoriskStatus::NumericFailure,
            CoriskError::NonConvergence(_) => CoriskStatus::NonConvergence,
            CoriskError::NonpositiveBenchmark { .. } => CoriskStatus::NonpositiveBenchmark,
            CoriskError::RareEvent { .. } => CoriskStatus::RareEvent,
            CoriskError::Unsupported(_) => CoriskStatus::Unsupported,
            CoriskError::Input(_) => CoriskStatus::Input,
            CoriskError::Validation(_) => CoriskStatus::Validation,
        }
    }
}

/// Opaque copula handle.
pub struct CoriskCopula(CopulaModel);

/// Opaque univariate loss distribution handle.
pub struct CoriskMarginal(MarginalModel);

/// Opaque joint model handle: a copula with its marginals.
pub struct CoriskModel(JointModel);

/// Measures and contribution measures for one target. Median-type fields are NaN
/// when `has_median` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CoriskRiskReport {
    pub var: f64,
    pub es: f64,
    pub mcovar: f64,
    pub mcoes: f64,
    pub mmme: f64,
    pub mmme_threshold: f64,
    pub stop_loss: f64,
    pub delta_mcovar: f64,
    pub delta_r_mcovar: f64,
    pub delta_mcoes: f64,
    pub delta_r_mcoes: f64,
    pub delta_mmme: f64,
    pub delta_r_mmme: f64,
    pub has_median: bool,
    pub delta_med_mcovar: f64,
    pub delta_r_med_mcovar: f64,
    pub delta_med_mcoes: f64,
    pub delta_r_med_mcoes: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CoriskStatus, String);

impl From<CoriskError> for Failure {
    fn from(e: CoriskError) -> Self {
        Failure(CoriskStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CoriskStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CoriskStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CoriskStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            CoriskStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn string<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Failure(CoriskStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn corr_rows(dim: usize, corr: *const f64) -> Result<Vec<Vec<f64>>, Failure> {
    let flat = slice(corr, dim * dim, "correlation matrix")?;
    Ok(flat.chunks(dim.max(1)).map(<[f64]>::to_vec).collect())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn corisk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn corisk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

const STATUS_NAMES: [(CoriskStatus, &str); 18] = [
    (CoriskStatus::Ok, "ok\0"),
    (CoriskStatus::InvalidParameter, "invalid_parameter\0"),
    (CoriskStatus::DimensionMismatch, "dimension_mismatch\0"),
    (CoriskStatus::OutOfDomain, "out_of_domain\0"),
    (CoriskStatus::ZeroProbabilityEvent, "zero_probability_event\0"),
    (CoriskStatus::NonMonotoneDistortion, "non_monotone_distortion\0"),
    (CoriskStatus::NonintegrableTail, "nonintegrable_tail\0"),
    (CoriskStatus::InsufficientExcesses, "insufficient_excesses\0"),
    (CoriskStatus::NumericFailure, "numeric_failure\0"),
    (CoriskStatus::NonConvergence, "non_convergence\0"),
    (CoriskStatus::NonpositiveBenchmark, "nonpositive_benchmark\0"),
    (CoriskStatus::RareEvent, "rare_event\0"),
    (CoriskStatus::Unsupported, "unsupported\0"),
    (CoriskStatus::Input, "input\0"),
    (CoriskStatus::Validation, "validation\0"),
    (CoriskStatus::NullPointer, "null_pointer\0"),
    (CoriskStatus::InvalidUtf8, "invalid_utf8\0"),
    (CoriskStatus::Panic, "panic\0"),
];

/// Stable lowercase name of a status code, e.g. `"out_of_domain"`; NULL for unknown codes.
/// Error-kind names match the `error` field of CLI error records.
#[no_mangle]
pub extern "C" fn corisk_status_name(status: i32) -> *const c_char {
    STATUS_NAMES
        .iter()
        .find(|(s, _)| *s as i32 == status)
        .map_or(std::ptr::null(), |(_, n)| n.as_ptr().cast())
}

// ---- copulas ----

unsafe fn new_copula(out: *mut *mut CoriskCopula, make: impl FnOnce() -> Result<CopulaModel, Failure>) -> CoriskStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let c = make()?;
        write(out, boxed(CoriskCopula(c)))
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn corisk_copula_independence(dim: usize, out: *mut *mut CoriskCopula) -> CoriskStatus {
    new_copula(out, || Ok(CopulaModel::independence(dim)?))
}

/// Gaussian copula from a row-major `dim × dim` correlation matrix.
///
/// # Safety
/// `corr` must point to `dim * dim` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_copula_gaussian(dim: usize, corr: *const f64, out: *mut *mut CoriskCopula) -> CoriskStatus {
    new_copula(out, || Ok(CopulaModel::gaussian(corr_rows(dim, corr)?)?))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn corisk_copula_gumbel(dim: usize, theta: f64, out: *mut *mut CoriskCopula) -> CoriskStatus {
    new_copula(out, || Ok(CopulaModel::gumbel(dim, theta)?))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn corisk_copula_clayton(dim: usize, theta: f64, out: *mut *mut CoriskCopula) -> CoriskStatus {
    new_copula(out, || Ok(CopulaModel::clayton(dim, theta)?))
}

/// `w_gaussian·Gaussian + w_gumbel·Gumbel + (1 − w_gaussian − w_gumbel)·Clayton`.
///
/// # Safety
/// `corr` must point to `dim * dim` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_copula_mixture(
    dim: usize,
    w_gaussian: f64,
    w_gumbel: f64,
    corr: *const f64,
    gumbel_theta: f64,
    clayton_theta: f64,
    out: *mut *mut CoriskCopula,
) -> CoriskStatus {
    new_copula(out, || Ok(CopulaModel::mixture([w_gaussian, w_gumbel], corr_rows(dim, corr)?, gumbel_theta, clayton_theta)?))
}

/// # Safety
/// `c` must be NULL or a handle from a `corisk_copula_*` constructor, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn corisk_copula_free(c: *mut CoriskCopula) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Dimension of the copula, or 0 for NULL.
///
/// # Safety
/// `c` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn corisk_copula_dim(c: *const CoriskCopula) -> usize {
    c.as_ref().map_or(0, |c| c.0.dim())
}

/// `C(u)`.
///
/// # Safety
/// `u` must point to `len` doubles; `c` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_copula_cdf(c: *const CoriskCopula, u: *const f64, len: usize, out: *mut f64) -> CoriskStatus {
    guard(|| {
        let c = handle(c, "copula")?;
        let v = c.0.cdf(slice(u, len, "u")?)?;
        write(out, v)
    })
}

/// `P(U_1 > p_1, …, U_n > p_n)`.
///
/// # Safety
/// `p` must point to `len` doubles; `c` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_copula_survival(c: *const CoriskCopula, p: *const f64, len: usize, out: *mut f64) -> CoriskStatus {
    guard(|| {
        let c = handle(c, "copula")?;
        let v = c.0.survival(slice(p, len, "p")?)?;
        write(out, v)
    })
}

// ---- marginals ----

unsafe fn new_marginal(out: *mut *mut CoriskMarginal, m: MarginalModel) -> CoriskStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        m.validate()?;
        write(out, boxed(CoriskMarginal(m)))
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn corisk_marginal_exponential(rate: f64, out: *mut *mut CoriskMarginal) -> CoriskStatus {
    new_marginal(out, MarginalModel::Exponential { rate })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn corisk_marginal_gamma(shape: f64, scale: f64, out: *mut *mut CoriskMarginal) -> CoriskStatus {
    new_marginal(out, MarginalModel::Gamma { shape, scale })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn corisk_marginal_weibull(shape: f64, scale: f64, out: *mut *mut CoriskMarginal) -> CoriskStatus {
    new_marginal(out, MarginalModel::Weibull { shape, scale })
}

/// Pareto type I with support `[scale, ∞)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn corisk_marginal_pareto(scale: f64, shape: f64, out: *mut *mut CoriskMarginal) -> CoriskStatus {
    new_marginal(out, MarginalModel::ParetoI { scale, shape })
}

/// Generalized Pareto with shape `xi` and scale `beta`, location 0.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn corisk_marginal_gpd(xi: f64, beta: f64, out: *mut *mut CoriskMarginal) -> CoriskStatus {
    new_marginal(out, MarginalModel::Gpd { xi, beta })
}

/// # Safety
/// `m` must be NULL or a handle from a `corisk_marginal_*` constructor, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn corisk_marginal_free(m: *mut CoriskMarginal) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_marginal_cdf(m: *const CoriskMarginal, x: f64, out: *mut f64) -> CoriskStatus {
    guard(|| {
        let m = handle(m, "marginal")?;
        write(out, m.0.cdf(x))
    })
}

/// # Safety
/// `m` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_marginal_quantile(m: *const CoriskMarginal, p: f64, out: *mut f64) -> CoriskStatus {
    guard(|| {
        let m = handle(m, "marginal")?;
        let v = m.0.quantile(p)?;
        write(out, v)
    })
}

// ---- joint models ----

/// Joint model from a copula and `n` marginals. The inputs are copied; the caller
/// keeps ownership of them.
///
/// # Safety
/// `marginals` must point to `n` live marginal handles; `copula` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_model_new(
    copula: *const CoriskCopula,
    marginals: *const *const CoriskMarginal,
    n: usize,
    out: *mut *mut CoriskModel,
) -> CoriskStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let c = handle(copula, "copula")?;
        if n > 0 && marginals.is_null() {
            return Err(null("marginals"));
        }
        let ms = (0..n)
            .map(|i| handle(*marginals.add(i), "marginal").map(|m| m.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let joint = JointModel::from_copula(c.0.clone(), ms)?;
        write(out, boxed(CoriskModel(joint)))
    })
}

fn parse_model(text: &str) -> Result<JointModel, Failure> {
    if let Ok(fitted) = serde_json::from_str::<FittedModel>(text) {
        return Ok(fitted.joint);
    }
    serde_json::from_str::<JointModel>(text).map_err(|e| Failure(CoriskStatus::Input, format!("model JSON: {e}")))
}

/// Model from JSON text: either a `model.json` written by `corisk fit` or a bare
/// serialized joint model.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_model_from_json(json: *const c_char, out: *mut *mut CoriskModel) -> CoriskStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let joint = parse_model(string(json, "json")?)?;
        write(out, boxed(CoriskModel(joint)))
    })
}

/// Reads a model file; see [`corisk_model_from_json`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_model_load(path: *const c_char, out: *mut *mut CoriskModel) -> CoriskStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let p = string(path, "path")?;
        let text = std::fs::read_to_string(Path::new(p)).map_err(|e| Failure(CoriskStatus::Input, format!("{p}: {e}")))?;
        let joint = parse_model(&text)?;
        write(out, boxed(CoriskModel(joint)))
    })
}

/// # Safety
/// `m` must be NULL or a handle from a `corisk_model_*` constructor, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn corisk_model_free(m: *mut CoriskModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of assets, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn corisk_model_dim(m: *const CoriskModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// `P(X_1 > x_1, …, X_n > x_n)` under the model.
///
/// # Safety
/// `x` must point to `len` doubles; `m` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_model_survival(m: *const CoriskModel, x: *const f64, len: usize, out: *mut f64) -> CoriskStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let v = m.0.implied_survival(slice(x, len, "x")?)?;
        write(out, v)
    })
}

// ---- measures ----
// `target` is 0-based; `p_tail` holds the levels of the other assets in their natural order.

/// MCoVaR of asset `target` at level `p1` given the other assets exceed their `p_tail` quantiles.
///
/// # Safety
/// `p_tail` must point to `n_tail` doubles; `m` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_mcovar(
    m: *const CoriskModel,
    target: usize,
    p1: f64,
    p_tail: *const f64,
    n_tail: usize,
    out: *mut f64,
) -> CoriskStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let v = measures::mcovar(&m.0, target, p1, slice(p_tail, n_tail, "p_tail")?)?;
        write(out, v)
    })
}

/// MCoES; arguments as for [`corisk_mcovar`].
///
/// # Safety
/// `p_tail` must point to `n_tail` doubles; `m` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_mcoes(
    m: *const CoriskModel,
    target: usize,
    p1: f64,
    p_tail: *const f64,
    n_tail: usize,
    out: *mut f64,
) -> CoriskStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let v = measures::mcoes(&m.0, target, p1, slice(p_tail, n_tail, "p_tail")?)?;
        write(out, v)
    })
}

unsafe fn request(
    m: &CoriskModel,
    target: usize,
    p1: f64,
    p_tail: *const f64,
    n_tail: usize,
    weights: *const f64,
    n_weights: usize,
) -> Result<MeasureRequest, Failure> {
    let tail = slice(p_tail, n_tail, "p_tail")?.to_vec();
    let w = if weights.is_null() && n_weights == 0 {
        MeasureRequest::uniform(target, m.0.dim(), p1)?.mmme_weights
    } else {
        slice(weights, n_weights, "weights")?.to_vec()
    };
    Ok(MeasureRequest::new(target, p1, tail, w)?)
}

/// MMME with weights over the non-target assets; pass NULL and 0 for equal weights.
///
/// # Safety
/// `p_tail` must point to `n_tail` doubles and `weights` to `n_weights` doubles (or be NULL
/// with `n_weights == 0`); `m` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn corisk_mmme(
    m: *const CoriskModel,
    target: usize,
    p1: f64,
    p_tail: *const f64,
    n_tail: usize,
    weights: *const f64,
    n_weights: usize,
    out: *mut f64,
) -> CoriskStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let req = request(m, target, p1, p_tail, n_tail, weights, n_weights)?;
        let v = measures::mmme(&m.0, &req)?;
        write(out, v)
    })
}

/// Every measure and contribution measure for one target. With `require_median` false,
/// tail levels at or below ½ leave the median fields NaN instead of failing.
///
/// # Safety
/// As for [`corisk_mmme`]; `out` must point to a `CoriskRiskReport`.
#[no_mangle]
pub unsafe extern "C" fn corisk_contributions(
    m: *const CoriskModel,
    target: usize,
    p1: f64,
    p_tail: *const f64,
    n_tail: usize,
    weights: *const f64,
    n_weights: usize,
    require_median: bool,
    out: *mut CoriskRiskReport,
) -> CoriskStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let req = request(m, target, p1, p_tail, n_tail, weights, n_weights)?;
        let policy = if require_median { MedianPolicy::Require } else { MedianPolicy::Skip };
        let r = measures::contributions(&m.0, &req, policy)?;
        let nan = f64::NAN;
        write(
            out,
            CoriskRiskReport {
                var: r.var,
                es: r.es,
                mcovar: r.mcovar,
                mcoes: r.mcoes,
                mmme: r.mmme,
                mmme_threshold: r.mmme_threshold,
                stop_loss: r.stop_loss,
                delta_mcovar: r.delta_mcovar,
                delta_r_mcovar: r.delta_r_mcovar,
                delta_mcoes: r.delta_mcoes,
                delta_r_mcoes: r.delta_r_mcoes,
                delta_mmme: r.delta_mmme,
                delta_r_mmme: r.delta_r_mmme,
                has_median: r.delta_med_mcovar.is_some(),
                delta_med_mcovar: r.delta_med_mcovar.unwrap_or(nan),
                delta_r_med_mcovar: r.delta_r_med_mcovar.unwrap_or(nan),
                delta_med_mcoes: r.delta_med_mcoes.unwrap_or(nan),
                delta_r_med_mcoes: r.delta_r_med_mcoes.unwrap_or(nan),
            },
        )
    })
}
