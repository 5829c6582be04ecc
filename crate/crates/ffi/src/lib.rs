//! C ABI over the `mfsde` engine.
//!
//! Every function returns an [`MfsdeStatus`]; on failure the message is
//! available from [`mfsde_last_error`] on the same thread. Handles are opaque
//! and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mfsde::cli::RunConfig;
use mfsde::measures::{kantorovich, EmpiricalMeasure};
use mfsde::payoff::Payoff;
use mfsde::sensitivity::{finite_difference_delta, DeltaSetup};
use mfsde::solver::{picard_solve, SolveResult};
use mfsde::stats::mean_and_se;
use mfsde::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfsdeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Internal = 5,
}

/// Delta estimator selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfsdeEstimator {
    Bel = 0,
    Pathwise = 1,
    FiniteDifference = 2,
}

/// Point estimate with its Monte Carlo standard error.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MfsdeEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Parsed run configuration.
pub struct MfsdeConfig(RunConfig);

/// Solved particle system.
pub struct MfsdeSolution(SolveResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(err: &Error) -> MfsdeStatus {
    match err {
        Error::Config(_) => MfsdeStatus::Config,
        e if e.is_numerical() => MfsdeStatus::Numerical,
        Error::Io(_) | Error::Csv(_) => MfsdeStatus::Internal,
        _ => MfsdeStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (MfsdeStatus, String)>) -> MfsdeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MfsdeStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MfsdeStatus::Internal
        }
    }
}

fn lift(err: Error) -> (MfsdeStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (MfsdeStatus, String) {
    (MfsdeStatus::NullPointer, format!("`{name}` is null"))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mfsde_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mfsde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML run configuration.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mfsde_config_from_toml(text: *const c_char, out: *mut *mut MfsdeConfig) -> MfsdeStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| (MfsdeStatus::InvalidArgument, e.to_string()))?;
        let cfg = RunConfig::from_toml(s).map_err(lift)?;
        *out = Box::into_raw(Box::new(MfsdeConfig(cfg)));
        Ok(())
    })
}

/// Replaces the configured seed.
///
/// # Safety
/// `cfg` must come from [`mfsde_config_from_toml`].
#[no_mangle]
pub unsafe extern "C" fn mfsde_config_set_seed(cfg: *mut MfsdeConfig, seed: u64) -> MfsdeStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        cfg.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from [`mfsde_config_from_toml`] or be null.
#[no_mangle]
pub unsafe extern "C" fn mfsde_config_free(cfg: *mut MfsdeConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Solves the configured model by Picard iteration.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mfsde_simulate(cfg: *const MfsdeConfig, out: *mut *mut MfsdeSolution) -> MfsdeStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = cfg.grid().map_err(lift)?;
        let res = picard_solve(&cfg.model.build(), cfg.x, &grid, cfg.particles, &cfg.picard.to_config(), cfg.seed_spec())
            .map_err(lift)?;
        *out = Box::into_raw(Box::new(MfsdeSolution(res)));
        Ok(())
    })
}

/// # Safety
/// `sol` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn mfsde_solution_particles(sol: *const MfsdeSolution, out: *mut u64) -> MfsdeStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sol.0.particles() as u64;
        Ok(())
    })
}

/// Number of time steps `M` (nodes are `0..=M`).
///
/// # Safety
/// `sol` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn mfsde_solution_steps(sol: *const MfsdeSolution, out: *mut u64) -> MfsdeStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sol.0.grid().steps() as u64;
        Ok(())
    })
}

/// # Safety
/// `sol` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn mfsde_solution_iterations(sol: *const MfsdeSolution, out: *mut u64) -> MfsdeStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sol.0.iterations as u64;
        Ok(())
    })
}

/// Copies the particle values at node `k` into `buf`, which must hold
/// exactly the number of particles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfsde_solution_node(sol: *const MfsdeSolution, k: u64, buf: *mut f64, len: usize) -> MfsdeStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let steps = sol.0.grid().steps() as u64;
        if k > steps {
            return Err(lift(Error::IndexOutOfRange {
                index: k as usize,
                len: steps as usize + 1,
            }));
        }
        let col = sol.0.ensemble.column(k as usize);
        if len != col.len() {
            return Err((
                MfsdeStatus::InvalidArgument,
                format!("buffer holds {len} values, node has {}", col.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(col);
        Ok(())
    })
}

/// Mean of the particles at node `k` with its standard error.
///
/// # Safety
/// `sol` must be a live solution handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mfsde_solution_mean(sol: *const MfsdeSolution, k: u64, out: *mut MfsdeEstimate) -> MfsdeStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let steps = sol.0.grid().steps() as u64;
        if k > steps {
            return Err(lift(Error::IndexOutOfRange {
                index: k as usize,
                len: steps as usize + 1,
            }));
        }
        let (estimate, std_error) = mean_and_se(sol.0.ensemble.column(k as usize));
        *out = MfsdeEstimate {
            estimate,
            std_error,
            samples: sol.0.particles() as u64,
        };
        Ok(())
    })
}

/// # Safety
/// `sol` must come from [`mfsde_simulate`] or be null.
#[no_mangle]
pub unsafe extern "C" fn mfsde_solution_free(sol: *mut MfsdeSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Delta `∂_x E[Φ(X_T)]` with the configured payoff.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mfsde_delta(cfg: *const MfsdeConfig, estimator: MfsdeEstimator, out: *mut MfsdeEstimate) -> MfsdeStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let spec = cfg.model.build();
        let grid = cfg.grid().map_err(lift)?;
        let phi: Payoff = cfg.delta.payoff.clone().into();
        let est = match estimator {
            MfsdeEstimator::FiniteDifference => finite_difference_delta(
                &spec,
                cfg.x,
                cfg.delta.fd_bump,
                &grid,
                cfg.particles,
                cfg.seed_spec(),
                &phi,
                &cfg.picard.to_config(),
            ),
            MfsdeEstimator::Bel | MfsdeEstimator::Pathwise => {
                DeltaSetup::prepare(&spec, cfg.x, &grid, cfg.particles, cfg.seed_spec(), cfg.delta_options()).and_then(|s| {
                    if estimator == MfsdeEstimator::Bel {
                        s.bel(&phi, cfg.delta.weight)
                    } else {
                        s.pathwise(&phi)
                    }
                })
            }
        }
        .map_err(lift)?;
        *out = MfsdeEstimate {
            estimate: est.estimate,
            std_error: est.std_error,
            samples: est.samples as u64,
        };
        Ok(())
    })
}

/// Kantorovich (W1) distance between two empirical measures.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfsde_kantorovich(a: *const f64, na: usize, b: *const f64, nb: usize, out: *mut f64) -> MfsdeStatus {
    guard(|| {
        if a.is_null() {
            return Err(null("a"));
        }
        if b.is_null() {
            return Err(null("b"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mu = EmpiricalMeasure::new(std::slice::from_raw_parts(a, na).to_vec()).map_err(lift)?;
        let nu = EmpiricalMeasure::new(std::slice::from_raw_parts(b, nb).to_vec()).map_err(lift)?;
        *out = kantorovich(&mu, &nu);
        Ok(())
    })
}
