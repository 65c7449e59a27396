//! C ABI over the `mkg` simulator.
//!
//! Every entry point returns an [`MkgStatus`]; on failure the message is
//! available from [`mkg_last_error_message`] on the same thread. Handles are
//! opaque and must be released with [`mkg_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_complex::Complex64;

use mkg::config::{load_config, load_config_str, RunConfig};
use mkg::diagnostics::diagnose;
use mkg::dynamics::step_rk4;
use mkg::io::write_snapshot;
use mkg::kahler::KahlerFamily;
use mkg::lattice::FieldState;
use mkg::run::scenario_params;
use mkg::scenario::initial_state;
use mkg::MkgError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MkgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Validation = 4,
    NonFinite = 5,
    RadiusExceeded = 6,
    DegenerateMetric = 7,
    Io = 8,
    Panic = 9,
    Other = 10,
}

impl From<&MkgError> for MkgStatus {
    fn from(e: &MkgError) -> Self {
        match e {
            MkgError::Parse { .. } => MkgStatus::Parse,
            MkgError::Validation { .. } => MkgStatus::Validation,
            MkgError::NonFinite { .. } => MkgStatus::NonFinite,
            MkgError::RadiusExceeded { .. } => MkgStatus::RadiusExceeded,
            MkgError::DegenerateMetric { .. } => MkgStatus::DegenerateMetric,
            MkgError::Io(_) => MkgStatus::Io,
            MkgError::Shape(_) => MkgStatus::InvalidArgument,
            _ => MkgStatus::Other,
        }
    }
}

/// Scalar diagnostics at the current time.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MkgDiagnostics {
    pub t: f64,
    pub energy_e0: f64,
    pub flat_j: f64,
    pub sobolev_e0: f64,
    pub sobolev_e1: f64,
    pub gauss_res_l2: f64,
    pub gauss_res_linf: f64,
    pub bianchi_res_linf: f64,
}

/// Opaque simulation handle.
pub struct MkgSimulation {
    cfg: RunConfig,
    state: FieldState,
    steps: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn fail(e: MkgError) -> MkgStatus {
    let st = MkgStatus::from(&e);
    set_error(e.to_string());
    st
}

fn guard(f: impl FnOnce() -> MkgStatus) -> MkgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside mkg");
            MkgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, MkgStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(MkgStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        MkgStatus::InvalidArgument
    })
}

fn build(cfg: RunConfig) -> Result<MkgSimulation, MkgError> {
    let state = initial_state(cfg.scenario(), &scenario_params(&cfg), &cfg.lattice, &cfg.model)?;
    Ok(MkgSimulation { cfg, state, steps: 0 })
}

unsafe fn emit(res: Result<MkgSimulation, MkgError>, out: *mut *mut MkgSimulation) -> MkgStatus {
    match res {
        Ok(sim) => {
            *out = Box::into_raw(Box::new(sim));
            MkgStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mkg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mkg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a simulation from a TOML config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mkg_simulation_from_config(path: *const c_char, out: *mut *mut MkgSimulation) -> MkgStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output handle");
            return MkgStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        emit(load_config(Path::new(path)).and_then(build), out)
    })
}

/// Creates a simulation from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mkg_simulation_from_toml(text: *const c_char, out: *mut *mut MkgSimulation) -> MkgStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output handle");
            return MkgStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let text = match str_arg(text) {
            Ok(p) => p,
            Err(s) => return s,
        };
        emit(load_config_str(text).and_then(build), out)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `sim` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mkg_simulation_free(sim: *mut MkgSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances by `n` time steps. On `NonFinite` the state is left at the last
/// finite step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mkg_simulation_step(sim: *mut MkgSimulation, n: u64) -> MkgStatus {
    guard(|| {
        let Some(sim) = sim.as_mut() else {
            set_error("null simulation handle");
            return MkgStatus::NullPointer;
        };
        for _ in 0..n {
            let c = &sim.cfg;
            match step_rk4(&sim.state, &c.lattice, &c.model, c.dt) {
                Ok(next) if next.is_finite() => {
                    sim.state = next;
                    sim.steps += 1;
                    sim.state.t = sim.steps as f64 * c.dt;
                }
                Ok(_) => return fail(MkgError::NonFinite { step: sim.steps + 1 }),
                Err(e) => return fail(e),
            }
        }
        MkgStatus::Ok
    })
}

/// Steps taken so far and the configured step count.
///
/// # Safety
/// `sim` must be a live handle; either output may be null.
#[no_mangle]
pub unsafe extern "C" fn mkg_simulation_steps(
    sim: *const MkgSimulation,
    taken: *mut u64,
    configured: *mut u64,
) -> MkgStatus {
    let Some(sim) = sim.as_ref() else {
        set_error("null simulation handle");
        return MkgStatus::NullPointer;
    };
    if let Some(t) = taken.as_mut() {
        *t = sim.steps;
    }
    if let Some(c) = configured.as_mut() {
        *c = sim.cfg.steps;
    }
    MkgStatus::Ok
}

/// Fills `out` with the diagnostics of the current state.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mkg_simulation_diagnostics(sim: *const MkgSimulation, out: *mut MkgDiagnostics) -> MkgStatus {
    guard(|| {
        let (Some(sim), Some(out)) = (sim.as_ref(), out.as_mut()) else {
            set_error("null argument");
            return MkgStatus::NullPointer;
        };
        let c = &sim.cfg;
        match diagnose(&sim.state, &c.lattice, &c.model, c.mass_m, c.flat_c1) {
            Ok(r) => {
                *out = MkgDiagnostics {
                    t: r.t,
                    energy_e0: r.energy_E0,
                    flat_j: r.flat_J,
                    sobolev_e0: r.sobolev_E0,
                    sobolev_e1: r.sobolev_E1,
                    gauss_res_l2: r.gauss_res_l2,
                    gauss_res_linf: r.gauss_res_linf,
                    bianchi_res_linf: r.bianchi_res_linf,
                };
                MkgStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes the current state as a binary snapshot.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mkg_simulation_write_snapshot(sim: *const MkgSimulation, path: *const c_char) -> MkgStatus {
    guard(|| {
        let Some(sim) = sim.as_ref() else {
            set_error("null simulation handle");
            return MkgStatus::NullPointer;
        };
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match write_snapshot(Path::new(path), &sim.state, &sim.cfg.lattice) {
            Ok(()) => MkgStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Copies scalar component `a` into `re`/`im`, each of length `len`, which
/// must equal the site count.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mkg_simulation_copy_phi(
    sim: *const MkgSimulation,
    a: usize,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> MkgStatus {
    let Some(sim) = sim.as_ref() else {
        set_error("null simulation handle");
        return MkgStatus::NullPointer;
    };
    if re.is_null() || im.is_null() {
        set_error("null output buffer");
        return MkgStatus::NullPointer;
    }
    let st = &sim.state;
    if a >= st.n_scalar || len != st.sites {
        set_error(format!("need component < {} and len = {}", st.n_scalar, st.sites));
        return MkgStatus::InvalidArgument;
    }
    let re = std::slice::from_raw_parts_mut(re, len);
    let im = std::slice::from_raw_parts_mut(im, len);
    for (i, z) in st.phi_comp(a).iter().enumerate() {
        re[i] = z.re;
        im[i] = z.im;
    }
    MkgStatus::Ok
}

/// Kähler metric g_{ab̄} of Φ(r) = Σ coeffs[n] rⁿ at φ ∈ ℂⁿ, written
/// row-major into `out_re`/`out_im` (n² entries each).
///
/// # Safety
/// Input arrays must hold `ncoeffs` and `n` doubles, outputs `n * n`.
#[no_mangle]
pub unsafe extern "C" fn mkg_kahler_metric(
    coeffs: *const f64,
    ncoeffs: usize,
    phi_re: *const f64,
    phi_im: *const f64,
    n: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> MkgStatus {
    guard(|| {
        if coeffs.is_null() || phi_re.is_null() || phi_im.is_null() || out_re.is_null() || out_im.is_null() {
            set_error("null argument");
            return MkgStatus::NullPointer;
        }
        if n == 0 {
            set_error("need at least one component");
            return MkgStatus::InvalidArgument;
        }
        let c = std::slice::from_raw_parts(coeffs, ncoeffs).to_vec();
        let (pr, pi) = (std::slice::from_raw_parts(phi_re, n), std::slice::from_raw_parts(phi_im, n));
        let phi: Vec<Complex64> = pr.iter().zip(pi).map(|(r, i)| Complex64::new(*r, *i)).collect();
        let fam = match KahlerFamily::polynomial(c, mkg::kahler::DEFAULT_R_MAX) {
            Ok(f) => f,
            Err(e) => return fail(e),
        };
        match mkg::kahler::kahler_metric(&fam, &phi) {
            Ok(g) => {
                let (or, oi) =
                    (std::slice::from_raw_parts_mut(out_re, n * n), std::slice::from_raw_parts_mut(out_im, n * n));
                for a in 0..n {
                    for b in 0..n {
                        let z = g.get(a, b);
                        or[a * n + b] = z.re;
                        oi[a * n + b] = z.im;
                    }
                }
                MkgStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
