//! C ABI over `step-core`.
//!
//! Every fallible function returns a [`StepStatus`]; on failure the message
//! is kept per thread and read back with [`step_last_error_message`].
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use step_core::cells::{load_checkpoint, save_checkpoint, ModelParams, Network};
use step_core::cli::RunConfig;
use step_core::pipeline::{sliding_windows, split, windows_over, EventDataset};
use step_core::synth::{generate, SynthConfig};
use step_core::training::{evaluate, predict_windows, train};
use step_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Bad input, configuration or file contents.
    InvalidInput = 2,
    /// Training produced a non-finite loss or gradient.
    Numerical = 3,
    /// Filesystem failure.
    Io = 4,
    /// An internal panic was caught.
    Panic = 5,
}

/// Event dataset: host graph, class vocabulary and frames.
pub struct StepDataset {
    inner: EventDataset,
}

/// Trained parameters together with the vocabulary they were trained on.
pub struct StepModel {
    params: ModelParams,
    vocabulary: Vec<u64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(StepStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_numerical() {
            StepStatus::Numerical
        } else if matches!(e, Error::Io { .. }) {
            StepStatus::Io
        } else {
            StepStatus::InvalidInput
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(StepStatus::NullArgument, format!("`{name}` is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(StepStatus::InvalidInput, message.into())
}

/// Runs `body`, mapping errors and panics to a status and the last-error slot.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> StepStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => StepStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("panic: {message}"));
            StepStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the call.
unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

/// # Safety
/// `p` is null or points to a live `T` not mutated for the call's duration.
unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

fn store<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for null before doing any work.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message of the last failed call on this thread, or null if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn step_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reads a dataset directory (`meta.json`, `frames.csv`, `adjacency.csv`).
///
/// # Safety
/// `dir` is a NUL-terminated path; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn step_dataset_load(dir: *const c_char, order: usize, out: *mut *mut StepDataset) -> StepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let dir = PathBuf::from(text(dir, "dir")?);
        let inner = EventDataset::read_dir(&dir, order)?;
        store(out, StepDataset { inner });
        Ok(())
    })
}

/// Writes `dataset` as a dataset directory, creating it if needed.
///
/// # Safety
/// `dataset` is a live handle; `dir` is a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn step_dataset_save(dataset: *const StepDataset, dir: *const c_char) -> StepStatus {
    guard(|| {
        let dataset = borrow(dataset, "dataset")?;
        let dir = PathBuf::from(text(dir, "dir")?);
        dataset.inner.write_dir(&dir)?;
        Ok(())
    })
}

/// Generates a synthetic dataset. `topology` is `ring`, `grid` or
/// `erdos-renyi:<p>`.
///
/// # Safety
/// `topology` is a NUL-terminated string; `out` is writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn step_synth_generate(
    topology: *const c_char,
    n: usize,
    d: usize,
    steps: usize,
    coupling: f64,
    noise: f64,
    seed: u64,
    out: *mut *mut StepDataset,
) -> StepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let topology = text(topology, "topology")?.parse()?;
        let config = SynthConfig {
            n,
            topology,
            d,
            steps,
            coupling,
            noise,
            seed,
        };
        store(out, StepDataset { inner: generate(&config)? });
        Ok(())
    })
}

/// Host count, class count and frame count. Null outputs are skipped.
///
/// # Safety
/// `dataset` is a live handle; non-null outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn step_dataset_dims(
    dataset: *const StepDataset,
    n: *mut usize,
    d: *mut usize,
    steps: *mut usize,
) -> StepStatus {
    guard(|| {
        let ds = &borrow(dataset, "dataset")?.inner;
        for (p, v) in [(n, ds.n()), (d, ds.d()), (steps, ds.steps())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `dataset` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn step_dataset_free(dataset: *mut StepDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Trains a model on `dataset`. `config_json` uses the run-configuration
/// keys; null means all defaults. `dataset_dir` and `output_dir` are
/// ignored. `test_acc` (nullable) receives the final test accuracy.
///
/// # Safety
/// `dataset` is a live handle; `config_json` is null or NUL-terminated;
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn step_model_train(
    dataset: *const StepDataset,
    config_json: *const c_char,
    out: *mut *mut StepModel,
    test_acc: *mut f64,
) -> StepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = &borrow(dataset, "dataset")?.inner;
        let run: RunConfig = if config_json.is_null() {
            RunConfig::default()
        } else {
            serde_json::from_str(text(config_json, "config_json")?)
                .map_err(|e| invalid(format!("config_json: {e}")))?
        };
        if let Some(k) = run.k_merge.filter(|&k| k != ds.k_merge) {
            return Err(invalid(format!(
                "config asks for k_merge = {k} but the dataset was merged with k_merge = {}",
                ds.k_merge
            )));
        }
        let config = run.train_config();
        let regraphed;
        let ds = if ds.graph.order() == config.order {
            ds
        } else {
            regraphed = EventDataset {
                graph: ds.graph.with_order(config.order)?,
                ..ds.clone()
            };
            &regraphed
        };
        let outcome = train(ds, &config)?;
        if !test_acc.is_null() {
            *test_acc = outcome.final_test_acc();
        }
        store(
            out,
            StepModel {
                params: outcome.params,
                vocabulary: ds.vocabulary.clone(),
            },
        );
        Ok(())
    })
}

/// Loads a checkpoint file.
///
/// # Safety
/// `path` is a NUL-terminated path; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn step_model_load(path: *const c_char, out: *mut *mut StepModel) -> StepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ckpt = load_checkpoint(&PathBuf::from(text(path, "path")?))?;
        store(
            out,
            StepModel {
                params: ckpt.params,
                vocabulary: ckpt.vocabulary,
            },
        );
        Ok(())
    })
}

/// Writes a checkpoint file.
///
/// # Safety
/// `model` is a live handle; `path` is a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn step_model_save(model: *const StepModel, path: *const c_char) -> StepStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        save_checkpoint(&PathBuf::from(text(path, "path")?), &model.params, &model.vocabulary)?;
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn step_model_free(model: *mut StepModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

fn check_compatible(model: &StepModel, ds: &EventDataset) -> Result<(), Failure> {
    if model.vocabulary != ds.vocabulary {
        return Err(invalid("model vocabulary differs from the dataset's"));
    }
    Ok(())
}

/// Predicts frame `start + s − 1` from frames `start .. start + s − 1`,
/// writing one class index per host into `classes` (length `capacity`).
///
/// # Safety
/// `model` and `dataset` are live handles; `classes` holds `capacity` slots.
#[no_mangle]
pub unsafe extern "C" fn step_model_predict(
    model: *const StepModel,
    dataset: *const StepDataset,
    start: usize,
    s: usize,
    classes: *mut usize,
    capacity: usize,
) -> StepStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let ds = &borrow(dataset, "dataset")?.inner;
        if classes.is_null() {
            return Err(null("classes"));
        }
        check_compatible(model, ds)?;
        if capacity < ds.n() {
            return Err(invalid(format!("capacity {capacity} below host count {}", ds.n())));
        }
        let end = start
            .checked_add(s)
            .filter(|&e| e <= ds.steps())
            .ok_or_else(|| invalid(format!("window {start}+{s} exceeds {} frames", ds.steps())))?;
        let windows = windows_over(&ds.frames[start..end], s)?;
        let graph = ds.graph.with_order(model.params.shape().order)?;
        let network = Network::new(*model.params.shape(), &graph)?;
        let preds = predict_windows(&network, &model.params, &windows)?;
        std::slice::from_raw_parts_mut(classes, preds.len()).copy_from_slice(&preds);
        Ok(())
    })
}

/// Accuracy on the chronological test split of `dataset` at window length
/// `s`. A nonzero `exclude_zero_event` leaves no-event targets out.
///
/// # Safety
/// `model` and `dataset` are live handles; `accuracy` is writable.
#[no_mangle]
pub unsafe extern "C" fn step_model_evaluate(
    model: *const StepModel,
    dataset: *const StepDataset,
    s: usize,
    train_fraction: f64,
    exclude_zero_event: c_int,
    accuracy: *mut f64,
) -> StepStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let ds = &borrow(dataset, "dataset")?.inner;
        if accuracy.is_null() {
            return Err(null("accuracy"));
        }
        check_compatible(model, ds)?;
        let windows = sliding_windows(ds, s)?;
        let (_, test) = split(&windows, train_fraction)?;
        let graph = ds.graph.with_order(model.params.shape().order)?;
        *accuracy = evaluate(&model.params, &graph, &test, exclude_zero_event != 0)?;
        Ok(())
    })
}
