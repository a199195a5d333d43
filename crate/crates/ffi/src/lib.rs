//! C ABI for `qembed`.
//!
//! Objects cross the boundary as opaque heap handles, created by the
//! `_random`, `_from_array`, `_builtin` and `_train` functions and released
//! by the matching `_free`. Every fallible call returns a [`QembedStatus`]; on failure a
//! message is kept per thread and can be read with [`qembed_last_error`].
//! Panics are caught and reported as [`QembedStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use qembed::cli::default_subspaces;
use qembed::embedding::PARAM_COUNT;
use qembed::noise::builtin_noise_model_by_name;
use qembed::objectives::classifying_vector;
use qembed::optim::{train, Objective};
use qembed::{ClassEnsemble, EmbeddingParams, Error, FeatureVector, Model, NoiseModel, OverlapKind, OverlapMethod, TrainConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QembedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownDevice = 3,
    BufferTooSmall = 4,
    RuntimeError = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QembedMethod {
    Exact = 0,
    SwapTest = 1,
    InversionTest = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QembedApproach {
    Implicit = 0,
    Explicit = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QembedTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub fd_step: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    pub seed: u64,
}

impl From<QembedTrainConfig> for TrainConfig {
    fn from(c: QembedTrainConfig) -> Self {
        TrainConfig {
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            fd_step: c.fd_step,
            rmsprop_decay: c.rmsprop_decay,
            rmsprop_epsilon: c.rmsprop_epsilon,
            seed: c.seed,
        }
    }
}

/// Embedding parameters.
pub struct QembedParams(EmbeddingParams);

/// Device noise model.
pub struct QembedNoiseModel(NoiseModel);

/// Trained parameters together with the readout they were trained for.
pub struct QembedModel {
    params: EmbeddingParams,
    model: Model,
    cost_history: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(QembedStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownDevice(_) => QembedStatus::UnknownDevice,
            Error::InvalidArgument(_)
            | Error::ParamCount { .. }
            | Error::DimensionMismatch { .. }
            | Error::QubitCount(_)
            | Error::InvalidTargets { .. }
            | Error::EmptyEnsemble(_) => QembedStatus::InvalidArgument,
            _ => QembedStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QembedStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(QembedStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QembedStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QembedStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            QembedStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn feature(x: *const f64, what: &str) -> Result<FeatureVector, Failure> {
    if x.is_null() {
        return Err(null(what));
    }
    Ok(FeatureVector::from_slice(slice::from_raw_parts(x, 2))?)
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn method(kind: QembedMethod, shots: u64, seed: u64, noise: *const QembedNoiseModel) -> Result<OverlapMethod, Failure> {
    let noise = noise.as_ref().map(|n| n.0.clone());
    let kind = match kind {
        QembedMethod::Exact => OverlapKind::Exact,
        QembedMethod::SwapTest => OverlapKind::SwapTest,
        QembedMethod::InversionTest => OverlapKind::InversionTest,
    };
    if kind == OverlapKind::Exact {
        if noise.is_some() {
            return Err(invalid("noise needs a sampled method"));
        }
        return Ok(OverlapMethod::exact());
    }
    Ok(OverlapMethod::sampled(kind, shots, seed, noise)?)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next `qembed_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qembed_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Number of trainable parameters of the embedding circuit.
#[no_mangle]
pub extern "C" fn qembed_param_count() -> usize {
    PARAM_COUNT
}

#[no_mangle]
pub extern "C" fn qembed_train_config_default() -> QembedTrainConfig {
    let d = TrainConfig::default();
    QembedTrainConfig {
        epochs: d.epochs,
        learning_rate: d.learning_rate,
        fd_step: d.fd_step,
        rmsprop_decay: d.rmsprop_decay,
        rmsprop_epsilon: d.rmsprop_epsilon,
        seed: d.seed,
    }
}

/// Parameters drawn uniformly from `[0, 2π)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qembed_params_random(seed: u64, out: *mut *mut QembedParams) -> QembedStatus {
    guard(|| write_handle(out, QembedParams(EmbeddingParams::random(seed))))
}

/// # Safety
/// `values` must point to `len` readable doubles; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn qembed_params_from_array(
    values: *const f64,
    len: usize,
    out: *mut *mut QembedParams,
) -> QembedStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let p = EmbeddingParams::new(slice::from_raw_parts(values, len))?;
        write_handle(out, QembedParams(p))
    })
}

/// Copies the parameters into `out`, which must hold `qembed_param_count()` values.
///
/// # Safety
/// `params` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qembed_params_copy_to(params: *const QembedParams, out: *mut f64, len: usize) -> QembedStatus {
    guard(|| {
        let p = deref(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len < PARAM_COUNT {
            return Err(Failure(QembedStatus::BufferTooSmall, format!("need {PARAM_COUNT} values, got {len}")));
        }
        slice::from_raw_parts_mut(out, PARAM_COUNT).copy_from_slice(p.0.as_slice());
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qembed_params_free(params: *mut QembedParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Built-in device model: "melbourne", "yorktown", "bogota" or "rome".
///
/// # Safety
/// `name` must be a nul-terminated string; `out` as for other constructors.
#[no_mangle]
pub unsafe extern "C" fn qembed_noise_model_builtin(name: *const c_char, out: *mut *mut QembedNoiseModel) -> QembedStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name).to_str().map_err(|_| invalid("name is not UTF-8"))?;
        write_handle(out, QembedNoiseModel(builtin_noise_model_by_name(name)?))
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qembed_noise_model_free(model: *mut QembedNoiseModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Embedded state of `x` (2 features) as real and imaginary parts of the 4 amplitudes.
///
/// # Safety
/// `x` must point to 2 doubles, `re` and `im` to 4 writable doubles each.
#[no_mangle]
pub unsafe extern "C" fn qembed_embed(
    x: *const f64,
    params: *const QembedParams,
    re: *mut f64,
    im: *mut f64,
) -> QembedStatus {
    guard(|| {
        let x = feature(x, "x")?;
        let p = deref(params, "params")?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let s = qembed::embed(&x, &p.0);
        let (re, im) = (slice::from_raw_parts_mut(re, 4), slice::from_raw_parts_mut(im, 4));
        for (k, a) in s.amplitudes().iter().enumerate() {
            re[k] = a.re;
            im[k] = a.im;
        }
        Ok(())
    })
}

/// Overlap `|<x1|x2>|²`, exact or estimated. `noise` may be null.
///
/// # Safety
/// `x1` and `x2` must point to 2 doubles; `noise` must be null or live;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qembed_overlap(
    x1: *const f64,
    x2: *const f64,
    params: *const QembedParams,
    kind: QembedMethod,
    shots: u64,
    seed: u64,
    noise: *const QembedNoiseModel,
    out: *mut f64,
) -> QembedStatus {
    guard(|| {
        let (a, b) = (feature(x1, "x1")?, feature(x2, "x2")?);
        let p = deref(params, "params")?;
        let m = method(kind, shots, seed, noise)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = qembed::overlap::estimate_overlap(&a, &b, &p.0, &m)?;
        Ok(())
    })
}

/// Trains on `n` points with features `features[2i], features[2i+1]` and
/// labels `0..L`. A null `config` uses the defaults.
///
/// # Safety
/// `features` must hold `2 n` doubles, `labels` `n` values; `config` must be
/// null or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qembed_model_train(
    features: *const f64,
    labels: *const usize,
    n: usize,
    approach: QembedApproach,
    config: *const QembedTrainConfig,
    out: *mut *mut QembedModel,
) -> QembedStatus {
    guard(|| {
        if features.is_null() || labels.is_null() {
            return Err(null("training data"));
        }
        let xs = slice::from_raw_parts(features, 2 * n);
        let ys = slice::from_raw_parts(labels, n);
        let n_classes = ys.iter().max().map_or(0, |&m| m + 1);
        let mut members: Vec<Vec<FeatureVector>> = vec![Vec::new(); n_classes];
        for (x, &y) in xs.chunks_exact(2).zip(ys) {
            members[y].push(FeatureVector::from_slice(x)?);
        }
        let ensembles = members
            .into_iter()
            .enumerate()
            .map(|(c, m)| ClassEnsemble::new(c, m))
            .collect::<qembed::Result<Vec<_>>>()?;
        if ensembles.len() < 2 {
            return Err(invalid("training needs at least 2 classes"));
        }
        let config: TrainConfig = config.as_ref().copied().unwrap_or_else(|| qembed_train_config_default()).into();
        let (objective, model) = match approach {
            QembedApproach::Implicit => (Objective::Implicit, Model::Implicit(ensembles.clone())),
            QembedApproach::Explicit => {
                let s = default_subspaces(n_classes)?;
                (Objective::Explicit(s.clone()), Model::Explicit(s))
            }
        };
        let record = train(&objective, &ensembles, &config)?;
        write_handle(out, QembedModel { params: record.final_params, model, cost_history: record.cost_history })
    })
}

/// Number of classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn qembed_model_n_classes(model: *const QembedModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_classes())
}

/// Copies the cost before training and after each epoch (`epochs + 1`
/// values) and stores the count in `written`.
///
/// # Safety
/// `model` must be live; `out` must hold `len` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qembed_model_cost_history(
    model: *const QembedModel,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> QembedStatus {
    guard(|| {
        let m = deref(model, "model")?;
        if out.is_null() || written.is_null() {
            return Err(null("output buffer"));
        }
        let h = &m.cost_history;
        *written = h.len();
        if len < h.len() {
            return Err(Failure(QembedStatus::BufferTooSmall, format!("need {} values, got {len}", h.len())));
        }
        slice::from_raw_parts_mut(out, h.len()).copy_from_slice(h);
        Ok(())
    })
}

/// Per-class likelihoods of `x` into `out` (`qembed_model_n_classes` values).
///
/// # Safety
/// `model` must be live; `x` must point to 2 doubles; `noise` null or live;
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qembed_model_classifying_vector(
    model: *const QembedModel,
    x: *const f64,
    kind: QembedMethod,
    shots: u64,
    seed: u64,
    noise: *const QembedNoiseModel,
    out: *mut f64,
    len: usize,
) -> QembedStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let x = feature(x, "x")?;
        let method = method(kind, shots, seed, noise)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let f = classifying_vector(&x, &m.params, &m.model, &method)?;
        if len < f.len() {
            return Err(Failure(QembedStatus::BufferTooSmall, format!("need {} values, got {len}", f.len())));
        }
        slice::from_raw_parts_mut(out, f.len()).copy_from_slice(f.values());
        Ok(())
    })
}

/// Predicted label of `x`.
///
/// # Safety
/// As for [`qembed_model_classifying_vector`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qembed_model_predict(
    model: *const QembedModel,
    x: *const f64,
    kind: QembedMethod,
    shots: u64,
    seed: u64,
    noise: *const QembedNoiseModel,
    out: *mut usize,
) -> QembedStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let x = feature(x, "x")?;
        let method = method(kind, shots, seed, noise)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = qembed::objectives::predict(&x, &m.params, &m.model, &method)?;
        Ok(())
    })
}

/// New parameter handle holding the trained parameters.
///
/// # Safety
/// `model` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qembed_model_copy_params(model: *const QembedModel, out: *mut *mut QembedParams) -> QembedStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write_handle(out, QembedParams(m.params.clone()))
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qembed_model_free(model: *mut QembedModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
