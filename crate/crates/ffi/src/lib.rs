//! C ABI for stagecraft.
//!
//! Datasets and models are opaque handles created by `stc_*` constructors
//! and released with the matching `*_free` function. Every fallible call
//! returns an [`StcStatus`]; on failure `stc_last_error` describes the most
//! recent error on the calling thread. Strings returned through `char **`
//! are owned by the caller and released with `stc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use stagecraft::io::{self, CsvOptions, ModelDocument};
use stagecraft::learn::{learn, Algorithm, LearnConfig};
use stagecraft::model::{compute_positions, is_simple, simplify, to_ceg, StagedTree, VariableSpec};
use stagecraft::scoring::{count_paths, score};
use stagecraft::simulate::{self, SimConfig};
use stagecraft::{Dataset, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Data = 5,
    Model = 6,
    Panic = 7,
}

/// Opaque dataset handle.
pub struct StcDataset {
    inner: Dataset,
}

/// Opaque model handle.
pub struct StcModel {
    inner: StagedTree,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> StcStatus {
    match e {
        Error::Io { .. } => StcStatus::Io,
        Error::Csv(_) | Error::Json(_) | Error::Schema(_) | Error::Version { .. } => StcStatus::Parse,
        Error::EmptyData
        | Error::InvalidData(_)
        | Error::UnknownVariable(_)
        | Error::DuplicateVariable(_)
        | Error::TooManyVariables { .. } => StcStatus::Data,
        Error::InvalidConfig(_) | Error::InvalidOrder(_) => StcStatus::InvalidArgument,
        _ => StcStatus::Model,
    }
}

struct Fail(StcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            StcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(StcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(StcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(StcStatus::NullPointer, format!("{what} is null")))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(StcStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(StcStatus::Model, "string contains a NUL byte".into()))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn stc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Reads a headed CSV file. `bins` > 0 bins numeric columns into that many
/// equal-frequency levels; 0 treats every column as categorical.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stc_dataset_read_csv(
    path: *const c_char,
    bins: usize,
    out: *mut *mut StcDataset,
) -> StcStatus {
    guard(|| {
        out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let opts = CsvOptions {
            bins: (bins > 0).then_some(bins),
            ..CsvOptions::default()
        };
        let data = io::read_csv(path, &opts)?.data;
        *out = Box::into_raw(Box::new(StcDataset { inner: data }));
        Ok(())
    })
}

/// Builds a dataset from row-major level codes. Variables are named
/// `X1..Xp` with levels `0..k`.
///
/// # Safety
/// `cells` must hold `n_rows * n_vars` values and `cardinalities` `n_vars`.
#[no_mangle]
pub unsafe extern "C" fn stc_dataset_from_codes(
    n_rows: usize,
    n_vars: usize,
    cells: *const u32,
    cardinalities: *const usize,
    out: *mut *mut StcDataset,
) -> StcStatus {
    guard(|| {
        out_arg(out, "out")?;
        if cardinalities.is_null() || (cells.is_null() && n_rows > 0) {
            return Err(Fail(StcStatus::NullPointer, "cells or cardinalities is null".into()));
        }
        let len = n_rows
            .checked_mul(n_vars)
            .ok_or_else(|| Fail(StcStatus::InvalidArgument, "dataset too large".into()))?;
        let ks = std::slice::from_raw_parts(cardinalities, n_vars);
        let variables = ks
            .iter()
            .enumerate()
            .map(|(i, &k)| VariableSpec::with_cardinality(format!("X{}", i + 1), k))
            .collect::<Result<Vec<_>, _>>()?;
        let cells = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(cells, len).to_vec()
        };
        let data = Dataset::from_cells(variables, cells)?;
        *out = Box::into_raw(Box::new(StcDataset { inner: data }));
        Ok(())
    })
}

/// # Safety
/// `data` must be a live dataset handle or null.
#[no_mangle]
pub unsafe extern "C" fn stc_dataset_n_rows(data: *const StcDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.n_rows())
}

/// # Safety
/// `data` must be a live dataset handle or null.
#[no_mangle]
pub unsafe extern "C" fn stc_dataset_n_vars(data: *const StcDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.n_vars())
}

/// # Safety
/// `data` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn stc_dataset_free(data: *mut StcDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Learns a staged tree. `algorithm` is an algorithm id such as
/// `"marginal"`; `order` is a comma-separated list of variable names, or
/// null for algorithms that choose their own order.
///
/// # Safety
/// Pointers must be valid; `order` may be null.
#[no_mangle]
pub unsafe extern "C" fn stc_learn(
    data: *const StcDataset,
    algorithm: *const c_char,
    order: *const c_char,
    alpha: f64,
    out: *mut *mut StcModel,
) -> StcStatus {
    guard(|| {
        out_arg(out, "out")?;
        let data = &ref_arg(data, "data")?.inner;
        let algorithm: Algorithm = str_arg(algorithm, "algorithm")?.parse()?;
        let mut cfg = LearnConfig::new(algorithm);
        cfg.alpha = alpha;
        if !order.is_null() {
            let names: Vec<&str> = str_arg(order, "order")?.split(',').map(str::trim).collect();
            cfg.order = Some(data.order_from_names(&names)?);
        }
        let fit = learn(data, &cfg)?;
        *out = Box::into_raw(Box::new(StcModel { inner: fit.model }));
        Ok(())
    })
}

/// Parses a model JSON document.
///
/// # Safety
/// `json` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn stc_model_from_json(json: *const c_char, out: *mut *mut StcModel) -> StcStatus {
    guard(|| {
        out_arg(out, "out")?;
        let doc = io::model_from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(StcModel { inner: doc.model }));
        Ok(())
    })
}

/// Serializes a model as a JSON document.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn stc_model_to_json(model: *const StcModel, out: *mut *mut c_char) -> StcStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = &ref_arg(model, "model")?.inner;
        *out = to_c_string(io::model_to_json(&ModelDocument::new(m.clone()))?)?;
        Ok(())
    })
}

/// Graphviz DOT text of the staged tree, or of its chain event graph when
/// `ceg` is nonzero.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn stc_model_to_dot(model: *const StcModel, ceg: c_int, out: *mut *mut c_char) -> StcStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = &ref_arg(model, "model")?.inner;
        let text = if ceg != 0 {
            io::ceg_to_dot(&to_ceg(m), m.staging())
        } else {
            io::staged_tree_to_dot(m)
        };
        *out = to_c_string(text)?;
        Ok(())
    })
}

/// BIC of the model on `data`. Data columns are matched to the model's
/// variables by name and level label.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn stc_model_bic(model: *const StcModel, data: *const StcDataset, out: *mut f64) -> StcStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = &ref_arg(model, "model")?.inner;
        let d = ref_arg(data, "data")?.inner.recode(m.tree().variables())?;
        let order: Vec<usize> = (0..d.n_vars()).collect();
        *out = score(m, &count_paths(&d, &order)?)?.bic;
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn stc_model_num_stages(model: *const StcModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_stages())
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn stc_model_num_positions(model: *const StcModel) -> usize {
    model
        .as_ref()
        .map_or(0, |m| compute_positions(&m.inner).num_positions())
}

/// 1 if stages and positions coincide, 0 otherwise (or for null).
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn stc_model_is_simple(model: *const StcModel) -> c_int {
    model.as_ref().map_or(0, |m| is_simple(&m.inner) as c_int)
}

/// New model whose stages are the positions of `model`.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn stc_model_simplify(model: *const StcModel, out: *mut *mut StcModel) -> StcStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = &ref_arg(model, "model")?.inner;
        *out = Box::into_raw(Box::new(StcModel { inner: simplify(m) }));
        Ok(())
    })
}

/// Normalized Hamming stage distance between two models on the same tree.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn stc_distance(a: *const StcModel, b: *const StcModel, out: *mut f64) -> StcStatus {
    guard(|| {
        out_arg(out, "out")?;
        let a = &ref_arg(a, "a")?.inner;
        let b = &ref_arg(b, "b")?.inner;
        *out = simulate::hamming_stage_distance(a, b)?;
        Ok(())
    })
}

/// Random simple staged tree with parameters and `n` rows sampled from it.
/// `levels` lists `p` cardinalities, or is null for binary variables.
///
/// # Safety
/// `levels` must hold `p` values when non-null; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stc_simulate(
    p: usize,
    levels: *const usize,
    q: f64,
    n: usize,
    seed: u64,
    model_out: *mut *mut StcModel,
    data_out: *mut *mut StcDataset,
) -> StcStatus {
    guard(|| {
        out_arg(model_out, "model_out")?;
        out_arg(data_out, "data_out")?;
        let levels = if levels.is_null() {
            vec![2; p]
        } else {
            std::slice::from_raw_parts(levels, p).to_vec()
        };
        let (model, data) = simulate::simulate(&SimConfig { levels, q, n, seed })?;
        *model_out = Box::into_raw(Box::new(StcModel { inner: model }));
        *data_out = Box::into_raw(Box::new(StcDataset { inner: data }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn stc_model_free(model: *mut StcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
