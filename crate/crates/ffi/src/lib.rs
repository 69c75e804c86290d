//! C ABI for the composite-pulse toolkit.
//!
//! All functions return a `BpStatus` code; output objects come back through
//! opaque handle pointers that must be released with the matching `_free`
//! function. On error, a thread-local message is available through
//! [`bp_last_error_message`] until the next failing call on the same thread.

use blochpulse::notation::{parse_program, serialize_program};
use blochpulse::sim::{evaluate_program, EnsembleGrid, SimOptions, Target};
use blochpulse::{compile, design, DesignRecord, Method, PulseProgram, SearchOptions, Selection};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    SynthesisError = 5,
    SimulationError = 6,
}

/// Opaque design handle.
pub struct BpDesign(DesignRecord);
/// Opaque pulse-program handle.
pub struct BpProgram(PulseProgram);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into()).unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

/// Message of the most recent error on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null(), |s| s.as_ptr())
    })
}

fn method_from(code: u32) -> Option<Method> {
    match code {
        0 => Some(Method::Fsm),
        1 => Some(Method::DeltaMod),
        _ => None,
    }
}

fn selection_from(code: u32) -> Option<Selection> {
    match code {
        0 => Some(Selection::Heuristic),
        1 => Some(Selection::Greedy),
        2 => Some(Selection::Gradient),
        _ => None,
    }
}

/// Synthesizes a design. `method`: 0 = Fourier synthesis, 1 = delta
/// modulation. `selection`: 0 = heuristic, 1 = greedy, 2 = gradient.
/// Angles are degrees.
#[no_mangle]
pub extern "C" fn bp_design_new(
    method: u32,
    selection: u32,
    terms: usize,
    theta_deg: f64,
    delta: f64,
    seed: u64,
    out: *mut *mut BpDesign,
) -> BpStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return BpStatus::NullArgument;
    }
    let (Some(method), Some(selection)) = (method_from(method), selection_from(selection)) else {
        set_error("unknown method or selection code");
        return BpStatus::InvalidArgument;
    };
    let opts = SearchOptions {
        seed,
        ..SearchOptions::default()
    };
    match design(method, selection, terms, theta_deg.to_radians(), delta, &opts) {
        Ok(record) => {
            unsafe { *out = Box::into_raw(Box::new(BpDesign(record))) };
            BpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            BpStatus::SynthesisError
        }
    }
}

/// Parses a design record from TOML text.
#[no_mangle]
pub extern "C" fn bp_design_from_toml(
    text: *const c_char,
    out: *mut *mut BpDesign,
) -> BpStatus {
    if text.is_null() || out.is_null() {
        set_error("null argument");
        return BpStatus::NullArgument;
    }
    let text = match unsafe { CStr::from_ptr(text) }.to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("design text is not valid UTF-8");
            return BpStatus::InvalidUtf8;
        }
    };
    match DesignRecord::from_toml(text) {
        Ok(record) => {
            unsafe { *out = Box::into_raw(Box::new(BpDesign(record))) };
            BpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            BpStatus::ParseError
        }
    }
}

/// Serializes a design to TOML. The returned string must be released with
/// `bp_string_free`.
#[no_mangle]
pub extern "C" fn bp_design_to_toml(
    design: *const BpDesign,
    out: *mut *mut c_char,
) -> BpStatus {
    if design.is_null() || out.is_null() {
        set_error("null argument");
        return BpStatus::NullArgument;
    }
    let toml = unsafe { &*design }.0.to_toml();
    match CString::new(toml) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            BpStatus::Ok
        }
        Err(_) => {
            set_error("serialized design contains interior nul");
            BpStatus::InvalidArgument
        }
    }
}

/// Compiles a design into a pulse program using the amplitude splitter.
#[no_mangle]
pub extern "C" fn bp_compile(
    design: *const BpDesign,
    threshold_deg: f64,
    out: *mut *mut BpProgram,
) -> BpStatus {
    if design.is_null() || out.is_null() {
        set_error("null argument");
        return BpStatus::NullArgument;
    }
    match compile(&unsafe { &*design }.0, threshold_deg) {
        Ok(program) => {
            unsafe { *out = Box::into_raw(Box::new(BpProgram(program))) };
            BpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            BpStatus::InvalidArgument
        }
    }
}

/// Parses pulse program text.
#[no_mangle]
pub extern "C" fn bp_program_parse(
    text: *const c_char,
    out: *mut *mut BpProgram,
) -> BpStatus {
    if text.is_null() || out.is_null() {
        set_error("null argument");
        return BpStatus::NullArgument;
    }
    let text = match unsafe { CStr::from_ptr(text) }.to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("program text is not valid UTF-8");
            return BpStatus::InvalidUtf8;
        }
    };
    match parse_program(text) {
        Ok(program) => {
            unsafe { *out = Box::into_raw(Box::new(BpProgram(program))) };
            BpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            BpStatus::ParseError
        }
    }
}

/// Serializes a program to canonical text. Release with `bp_string_free`.
#[no_mangle]
pub extern "C" fn bp_program_serialize(
    program: *const BpProgram,
    out: *mut *mut c_char,
) -> BpStatus {
    if program.is_null() || out.is_null() {
        set_error("null argument");
        return BpStatus::NullArgument;
    }
    match serialize_program(&unsafe { &*program }.0) {
        Ok(text) => match CString::new(text) {
            Ok(s) => {
                unsafe { *out = s.into_raw() };
                BpStatus::Ok
            }
            Err(_) => {
                set_error("serialized program contains interior nul");
                BpStatus::InvalidArgument
            }
        },
        Err(e) => {
            set_error(e.to_string());
            BpStatus::InvalidArgument
        }
    }
}

/// Evaluates the ensemble L2 error and flip angles of a program against an
/// ideal `theta_deg` rotation about the phase-90 axis. `omega` is the static
/// Larmor offset in radians per radian of nominal flip. `points` must be odd.
#[no_mangle]
pub extern "C" fn bp_program_evaluate(
    program: *const BpProgram,
    theta_deg: f64,
    delta: f64,
    points: usize,
    omega: f64,
    out_l2_error: *mut f64,
    out_flip_benchmark_rad: *mut f64,
    out_flip_rf_sum_rad: *mut f64,
) -> BpStatus {
    if program.is_null()
        || out_l2_error.is_null()
        || out_flip_benchmark_rad.is_null()
        || out_flip_rf_sum_rad.is_null()
    {
        set_error("null argument");
        return BpStatus::NullArgument;
    }
    let grid = match EnsembleGrid::uniform(delta, points) {
        Ok(g) => g,
        Err(e) => {
            set_error(e.to_string());
            return BpStatus::InvalidArgument;
        }
    };
    let opts = SimOptions {
        offset_omega: omega,
    };
    let target = Target::ideal_flip(theta_deg.to_radians(), std::f64::consts::FRAC_PI_2);
    match evaluate_program(&unsafe { &*program }.0, &grid, &opts, &target) {
        Ok(report) => {
            unsafe {
                *out_l2_error = report.l2_error;
                *out_flip_benchmark_rad = report.flip_benchmark_rad;
                *out_flip_rf_sum_rad = report.flip_rf_sum_rad;
            }
            BpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            BpStatus::SimulationError
        }
    }
}

/// Releases a design handle. Null is accepted.
#[no_mangle]
pub extern "C" fn bp_design_free(design: *mut BpDesign) {
    if !design.is_null() {
        drop(unsafe { Box::from_raw(design) });
    }
}

/// Releases a program handle. Null is accepted.
#[no_mangle]
pub extern "C" fn bp_program_free(program: *mut BpProgram) {
    if !program.is_null() {
        drop(unsafe { Box::from_raw(program) });
    }
}

/// Releases a string returned by this library. Null is accepted.
#[no_mangle]
pub extern "C" fn bp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
