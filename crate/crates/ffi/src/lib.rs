//! C interface to swarm3d.
//!
//! Scenarios are built from TOML text and run into opaque handles. Every
//! fallible call returns a `Swarm3dStatus`; on failure the message can be read
//! with `swarm3d_last_error` from the same thread. Strings handed out by this
//! library are released with `swarm3d_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use swarm3d::harness::{self, RunOutput, ScenarioConfig, StopKind};
use swarm3d::{geometry, Error, LatticeKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Swarm3dStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Io = 4,
    Simulation = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Swarm3dLattice {
    TruncatedOctahedron = 0,
    Cube = 1,
    HexagonalPrism = 2,
    RhombicDodecahedron = 3,
}

impl From<Swarm3dLattice> for LatticeKind {
    fn from(l: Swarm3dLattice) -> Self {
        match l {
            Swarm3dLattice::TruncatedOctahedron => LatticeKind::TruncatedOctahedron,
            Swarm3dLattice::Cube => LatticeKind::Cube,
            Swarm3dLattice::HexagonalPrism => LatticeKind::HexagonalPrism,
            Swarm3dLattice::RhombicDodecahedron => LatticeKind::RhombicDodecahedron,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Swarm3dStopReason {
    Complete = 0,
    AllVisited = 1,
    AllTargetsFound = 2,
    Horizon = 3,
}

impl From<StopKind> for Swarm3dStopReason {
    fn from(s: StopKind) -> Self {
        match s {
            StopKind::Complete => Swarm3dStopReason::Complete,
            StopKind::AllVisited => Swarm3dStopReason::AllVisited,
            StopKind::AllTargetsFound => Swarm3dStopReason::AllTargetsFound,
            StopKind::Horizon => Swarm3dStopReason::Horizon,
        }
    }
}

/// A parsed and validated scenario.
pub struct Swarm3dScenario {
    config: ScenarioConfig,
}

/// The result of running a scenario.
pub struct Swarm3dRun {
    config: ScenarioConfig,
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: Swarm3dStatus, msg: impl Into<String>) -> Swarm3dStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> Swarm3dStatus {
    match e {
        Error::Config { .. } | Error::Parse(_) | Error::InvalidParameter(_) | Error::InvalidRegion(_) => {
            Swarm3dStatus::Config
        }
        Error::Io(_) => Swarm3dStatus::Io,
        _ => Swarm3dStatus::Simulation,
    }
}

/// Run `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Swarm3dStatus>) -> Swarm3dStatus {
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            Swarm3dStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(Swarm3dStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> Swarm3dStatus {
    fail(status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Swarm3dStatus> {
    if p.is_null() {
        return Err(fail(Swarm3dStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(Swarm3dStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), Swarm3dStatus> {
    let c = CString::new(s).map_err(|_| fail(Swarm3dStatus::Simulation, "output contains a nul byte"))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

macro_rules! non_null {
    ($p:expr, $name:literal) => {
        if $p.is_null() {
            return Err(fail(Swarm3dStatus::NullArgument, concat!("`", $name, "` is null")));
        }
    };
}

/// Library version as a static string. Do not free.
#[no_mangle]
pub extern "C" fn swarm3d_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn swarm3d_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned through an out-parameter. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse and validate a TOML scenario.
///
/// # Safety
/// `toml` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_scenario_from_toml(toml: *const c_char, out: *mut *mut Swarm3dScenario) -> Swarm3dStatus {
    guard(|| {
        non_null!(out, "out");
        let text = str_arg(toml, "toml")?;
        let config = ScenarioConfig::from_toml(text).map_err(lib_err)?;
        config.validate().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Swarm3dScenario { config }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_scenario_set_seed(scenario: *mut Swarm3dScenario, seed: u64) -> Swarm3dStatus {
    guard(|| {
        non_null!(scenario, "scenario");
        (*scenario).config.seed = seed;
        Ok(())
    })
}

/// Release a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from `swarm3d_scenario_from_toml` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_scenario_free(scenario: *mut Swarm3dScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run a scenario to its stop rule or horizon.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_run(scenario: *const Swarm3dScenario, out: *mut *mut Swarm3dRun) -> Swarm3dStatus {
    guard(|| {
        non_null!(scenario, "scenario");
        non_null!(out, "out");
        let config = (*scenario).config.clone();
        let output = harness::run_scenario(&config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(Swarm3dRun { config, output }));
        Ok(())
    })
}

/// Release a run. Null is ignored.
///
/// # Safety
/// `run` must come from `swarm3d_run` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_run_free(run: *mut Swarm3dRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle; `steps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_run_steps(run: *const Swarm3dRun, steps: *mut u64) -> Swarm3dStatus {
    guard(|| {
        non_null!(run, "run");
        non_null!(steps, "steps");
        *steps = (*run).output.metrics.steps_to_stop;
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle; `reason` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_run_stop_reason(run: *const Swarm3dRun, reason: *mut Swarm3dStopReason) -> Swarm3dStatus {
    guard(|| {
        non_null!(run, "run");
        non_null!(reason, "reason");
        *reason = (*run).output.metrics.stop_reason.into();
        Ok(())
    })
}

/// Metrics as JSON. Free the string with `swarm3d_string_free`.
///
/// # Safety
/// `run` must be a live handle; `json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_run_metrics_json(run: *const Swarm3dRun, json: *mut *mut c_char) -> Swarm3dStatus {
    guard(|| {
        non_null!(run, "run");
        non_null!(json, "json");
        let s = serde_json::to_string(&(*run).output.metrics).map_err(|e| fail(Swarm3dStatus::Simulation, e.to_string()))?;
        out_string(s, json)
    })
}

/// Number of warnings raised while validating the scenario.
///
/// # Safety
/// `run` must be a live handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_run_warning_count(run: *const Swarm3dRun, count: *mut usize) -> Swarm3dStatus {
    guard(|| {
        non_null!(run, "run");
        non_null!(count, "count");
        *count = (*run).output.warnings.len();
        Ok(())
    })
}

/// Write `trajectory.csv`, `metrics.json` and `metadata.json` into `dir`.
///
/// # Safety
/// `run` must be a live handle; `dir` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_run_write(run: *const Swarm3dRun, dir: *const c_char) -> Swarm3dStatus {
    guard(|| {
        non_null!(run, "run");
        let dir = str_arg(dir, "dir")?;
        let r = &*run;
        harness::write_outputs(Path::new(dir), &r.config, &r.output).map_err(lib_err)
    })
}

/// Volumetric quotient of the lattice's space-filling cell.
#[no_mangle]
pub extern "C" fn swarm3d_volumetric_quotient(lattice: Swarm3dLattice) -> f64 {
    geometry::volumetric_quotient(lattice.into())
}

/// Smallest `r_c / r_s` that keeps grid neighbours in range.
#[no_mangle]
pub extern "C" fn swarm3d_min_connectivity_ratio(lattice: Swarm3dLattice) -> f64 {
    geometry::min_connectivity_ratio(lattice.into())
}

/// Covering-set size of the box `[min, max]` with the lattice seeded at its centre.
///
/// # Safety
/// `min_corner` and `max_corner` must point to three doubles each; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swarm3d_covering_set_count(
    lattice: Swarm3dLattice,
    r_s: f64,
    min_corner: *const f64,
    max_corner: *const f64,
    count: *mut usize,
) -> Swarm3dStatus {
    guard(|| {
        non_null!(min_corner, "min_corner");
        non_null!(max_corner, "max_corner");
        non_null!(count, "count");
        let a = std::slice::from_raw_parts(min_corner, 3);
        let b = std::slice::from_raw_parts(max_corner, 3);
        let region = geometry::Region::new(geometry::Vec3::new(a[0], a[1], a[2]), geometry::Vec3::new(b[0], b[1], b[2]))
            .map_err(lib_err)?;
        let spec = geometry::LatticeSpec::new(lattice.into(), region.center(), r_s).map_err(lib_err)?;
        *count = geometry::covering_set(&spec, &region).map_err(lib_err)?.len();
        Ok(())
    })
}
