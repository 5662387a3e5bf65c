//! C ABI for the clusterfirst pipeline.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns a
//! [`CfStatus`]; on failure `cf_last_error` describes what went wrong on the
//! calling thread. Strings returned through out-parameters are freed with
//! [`cf_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clusterfirst::packing::{downsize_factor, DownsizeParams};
use clusterfirst::{Error, LatencyTable, Pipeline, PipelineConfig, PixelBox, Scene};
use libc::c_char;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidConfig = 4,
    InfeasibleBudget = 5,
    Unsupported = 6,
    ZoneTooLarge = 7,
    LatencyTable = 8,
    Io = 9,
    Panic = 10,
}

/// Closed-open pixel box.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CfBox {
    pub x_min: i32,
    pub y_min: i32,
    pub x_max: i32,
    pub y_max: i32,
}

impl From<CfBox> for PixelBox {
    fn from(b: CfBox) -> Self {
        PixelBox::new(b.x_min, b.y_min, b.x_max, b.y_max)
    }
}

/// A configured pipeline.
pub struct CfPipeline(Pipeline);

/// A GPU latency table.
pub struct CfLatencyTable(LatencyTable);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> CfStatus {
    match err {
        Error::Parse { .. } => CfStatus::Parse,
        Error::InvalidParameter { .. } | Error::MixedCanvasSizes(..) => CfStatus::InvalidConfig,
        Error::InfeasibleBudget { .. } => CfStatus::InfeasibleBudget,
        Error::ZoneTooLarge { .. } => CfStatus::ZoneTooLarge,
        Error::LatencyTable(_) | Error::Csv(_) => CfStatus::LatencyTable,
        Error::Io(_) => CfStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), (CfStatus, String)>) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CfStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CfStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CfStatus, String) {
    (status_of(&e), e.to_string())
}

/// # Safety
/// `s` is NULL or a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (CfStatus, String)> {
    if s.is_null() {
        return Err((CfStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (CfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn cf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` is NULL or came from this library and was not freed before.
#[no_mangle]
pub unsafe extern "C" fn cf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a pipeline from a JSON config; NULL uses the defaults.
///
/// # Safety
/// `config_json` is NULL or NUL-terminated; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_pipeline_new(config_json: *const c_char, out: *mut *mut CfPipeline) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err((CfStatus::NullPointer, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let config = if config_json.is_null() {
            PipelineConfig::default()
        } else {
            PipelineConfig::from_json(read_str(config_json, "config_json")?).map_err(lib_err)?
        };
        let p = Pipeline::new(config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CfPipeline(p)));
        Ok(())
    })
}

/// # Safety
/// `p` is NULL or a live handle from [`cf_pipeline_new`].
#[no_mangle]
pub unsafe extern "C" fn cf_pipeline_free(p: *mut CfPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Runs one frame and returns its JSON report in `*report_json`.
///
/// # Safety
/// `p` is a live pipeline handle; the strings are NUL-terminated;
/// `report_json` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_pipeline_run_scene(
    p: *const CfPipeline,
    frame_id: *const c_char,
    scene_json: *const c_char,
    report_json: *mut *mut c_char,
) -> CfStatus {
    guard(|| {
        if p.is_null() || report_json.is_null() {
            return Err((CfStatus::NullPointer, "pipeline or report_json is NULL".into()));
        }
        *report_json = ptr::null_mut();
        let id = read_str(frame_id, "frame_id")?;
        let scene = Scene::from_json(read_str(scene_json, "scene_json")?).map_err(lib_err)?;
        let run = (*p).0.run_frame(id, &scene).map_err(lib_err)?;
        let json = serde_json::to_string(&run.report).map_err(|e| (CfStatus::Panic, e.to_string()))?;
        *report_json = to_c_string(json);
        Ok(())
    })
}

/// The profiled table bundled with the library.
///
/// # Safety
/// `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_latency_table_default(out: *mut *mut CfLatencyTable) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err((CfStatus::NullPointer, "out is NULL".into()));
        }
        *out = Box::into_raw(Box::new(CfLatencyTable(LatencyTable::table_one())));
        Ok(())
    })
}

/// Parses a latency table from CSV text, rejecting non-monotone tables.
///
/// # Safety
/// `csv` is NUL-terminated; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_latency_table_from_csv(csv: *const c_char, out: *mut *mut CfLatencyTable) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err((CfStatus::NullPointer, "out is NULL".into()));
        }
        *out = ptr::null_mut();
        let t = LatencyTable::from_csv_str(read_str(csv, "csv")?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CfLatencyTable(t)));
        Ok(())
    })
}

/// # Safety
/// `t` is NULL or a live table handle.
#[no_mangle]
pub unsafe extern "C" fn cf_latency_table_free(t: *mut CfLatencyTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Latency in ms for `batch` inputs of side `size`; sizes and batches
/// round up to listed values. `CF_STATUS_UNSUPPORTED` for blank cells.
///
/// # Safety
/// `t` is a live table handle; `out_ms` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_latency_table_lookup(
    t: *const CfLatencyTable,
    size: u32,
    batch: u32,
    out_ms: *mut f64,
) -> CfStatus {
    guard(|| {
        if t.is_null() || out_ms.is_null() {
            return Err((CfStatus::NullPointer, "table or out_ms is NULL".into()));
        }
        match (*t).0.lookup(size, batch) {
            Some(ms) => {
                *out_ms = ms;
                Ok(())
            }
            None => Err((CfStatus::Unsupported, format!("no latency for size {size}, batch {batch}"))),
        }
    })
}

#[no_mangle]
pub extern "C" fn cf_iou(a: CfBox, b: CfBox) -> f64 {
    clusterfirst::iou(&a.into(), &b.into())
}

/// Downsizing factor at `depth_m` with the default parameters.
#[no_mangle]
pub extern "C" fn cf_downsize_factor(depth_m: f64) -> f64 {
    downsize_factor(depth_m, &DownsizeParams::default())
}
