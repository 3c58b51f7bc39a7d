//! C ABI over `survival-core`.
//!
//! Every fallible call returns an [`SgStatus`] and writes its result through
//! an out-pointer. On failure the message is kept per thread and read with
//! [`sg_last_error`]. Handles are opaque and owned by the caller until passed
//! to the matching `_free`. Panics never cross the boundary; they surface as
//! [`SgStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use survival_core::classifier::{classify_alpha, IntelligenceLevel};
use survival_core::distributions::EmpiricalDistribution;
use survival_core::powerlaw::{fit_powerlaw, fit_powerlaw_mle, FitRange};
use survival_core::sandpile::{run_simulation, SandpileConfig, SandpileState};
use survival_core::scaling::{
    fit_scaling_line, projection_from_line, HardwareAssumptions, ScalingLine, ScalingPoint,
};
use survival_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    NonExtrapolable = 4,
    OutOfBounds = 5,
    BufferTooSmall = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgFitMethod {
    LogBinLeastSquares = 0,
    MleDiscrete = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgLevel {
    Limited = 0,
    Capable = 1,
    Autonomous = 2,
}

/// Power-law fit `P(x) = 10^log_c * x^-alpha` over `[x_min, x_max]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SgFit {
    pub alpha: f64,
    pub log_c: f64,
    pub r_squared: f64,
    pub alpha_std_err: f64,
    pub x_min: u64,
    pub x_max: u64,
    pub points_used: usize,
}

/// `log10(alpha) = intercept + slope * log10(params)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SgScalingLine {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SgHardware {
    pub bytes_per_param: f64,
    pub gpu_memory_bytes: f64,
    pub gpu_unit_cost: f64,
    pub reference_market_cap: f64,
    pub doubling_months: f64,
    pub current_max_params: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SgProjection {
    pub required_params: f64,
    pub years_until: f64,
    pub gpu_count: f64,
    pub cost_ratio: f64,
    pub neuron_ratio: f64,
}

/// Opaque empirical failure-count distribution.
pub struct SgDistribution {
    inner: EmpiricalDistribution,
}

/// Opaque sandpile lattice.
pub struct SgSandpile {
    inner: SandpileState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> SgStatus {
    match err {
        Error::InsufficientData { .. } | Error::EmptyInput(_) | Error::EmptyRun(_) => {
            SgStatus::InsufficientData
        }
        Error::NonExtrapolable { .. } => SgStatus::NonExtrapolable,
        Error::OutOfBounds { .. } => SgStatus::OutOfBounds,
        Error::Io(_) => SgStatus::Io,
        _ => SgStatus::InvalidArgument,
    }
}

fn fail(status: SgStatus, msg: impl Into<String>) -> SgStatus {
    set_error(msg);
    status
}

impl From<Error> for SgStatus {
    fn from(err: Error) -> Self {
        fail(status_of(&err), err.to_string())
    }
}

/// Runs `body`, turning panics into `SgStatus::Panic`.
fn guard(body: impl FnOnce() -> Result<(), SgStatus>) -> SgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SgStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(SgStatus::Panic, "internal panic"),
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), SgStatus> {
    if p.is_null() {
        Err(fail(SgStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// `len` elements at `p`; a null pointer is allowed only when `len == 0`.
unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], SgStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(slice::from_raw_parts(p, len))
}

/// Library version, static and NUL-terminated.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a distribution from `n` failure counts. `weights` may be null for
/// unit weights.
///
/// # Safety
/// `counts` (and `weights` when non-null) must point to `n` readable values;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_distribution_from_counts(
    counts: *const u64,
    weights: *const f64,
    n: usize,
    out: *mut *mut SgDistribution,
) -> SgStatus {
    guard(|| {
        non_null(out, "out")?;
        let counts = slice_arg(counts, n, "counts")?;
        let dist = if weights.is_null() {
            EmpiricalDistribution::from_counts(counts.iter().copied())?
        } else {
            let weights = slice::from_raw_parts(weights, n);
            EmpiricalDistribution::from_weighted_counts(
                counts.iter().copied().zip(weights.iter().copied()),
            )?
        };
        *out = Box::into_raw(Box::new(SgDistribution { inner: dist }));
        Ok(())
    })
}

/// # Safety
/// `dist` must come from `sg_distribution_from_counts` and not be used after.
#[no_mangle]
pub unsafe extern "C" fn sg_distribution_free(dist: *mut SgDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Number of distinct nonzero failure counts.
///
/// # Safety
/// `dist` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sg_distribution_support_len(dist: *const SgDistribution) -> usize {
    dist.as_ref().map_or(0, |d| d.inner.support().len())
}

/// Probability mass at failure count zero.
///
/// # Safety
/// `dist` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sg_distribution_zero_mass(dist: *const SgDistribution) -> f64 {
    dist.as_ref().map_or(0.0, |d| d.inner.zero_mass())
}

/// Fits the decay rate over `[x_min, x_max]`.
///
/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_fit_powerlaw(
    dist: *const SgDistribution,
    x_min: u64,
    x_max: u64,
    bins_per_decade: u32,
    method: SgFitMethod,
    out: *mut SgFit,
) -> SgStatus {
    guard(|| {
        non_null(dist, "dist")?;
        non_null(out, "out")?;
        let range = FitRange::new(x_min, x_max)?;
        let dist = &(*dist).inner;
        let fit = match method {
            SgFitMethod::LogBinLeastSquares => fit_powerlaw(dist, range, bins_per_decade)?,
            SgFitMethod::MleDiscrete => fit_powerlaw_mle(dist, range, bins_per_decade)?,
        };
        *out = SgFit {
            alpha: fit.alpha,
            log_c: fit.log_c,
            r_squared: fit.r_squared,
            alpha_std_err: fit.alpha_std_err,
            x_min: fit.range.x_min,
            x_max: fit.range.x_max,
            points_used: fit.points_used,
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_classify_alpha(alpha: f64, out: *mut SgLevel) -> SgStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = match classify_alpha(alpha)? {
            IntelligenceLevel::Limited => SgLevel::Limited,
            IntelligenceLevel::Capable => SgLevel::Capable,
            IntelligenceLevel::Autonomous => SgLevel::Autonomous,
        };
        Ok(())
    })
}

/// Fits `log10(alpha)` against `log10(params)` over `n` observations.
///
/// # Safety
/// `params` and `alphas` must point to `n` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sg_scaling_fit(
    params: *const u64,
    alphas: *const f64,
    n: usize,
    out: *mut SgScalingLine,
) -> SgStatus {
    guard(|| {
        non_null(out, "out")?;
        let params = slice_arg(params, n, "params")?;
        let alphas = slice_arg(alphas, n, "alphas")?;
        let points = params
            .iter()
            .zip(alphas)
            .enumerate()
            .map(|(i, (&p, &a))| ScalingPoint::new(i.to_string(), p, a))
            .collect::<Result<Vec<_>, _>>()?;
        let line = fit_scaling_line(&points)?;
        *out = SgScalingLine {
            slope: line.slope,
            intercept: line.intercept,
            r_squared: line.r_squared,
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_hardware_defaults(out: *mut SgHardware) -> SgStatus {
    guard(|| {
        non_null(out, "out")?;
        let d = HardwareAssumptions::default();
        *out = SgHardware {
            bytes_per_param: d.bytes_per_param,
            gpu_memory_bytes: d.gpu_memory_bytes,
            gpu_unit_cost: d.gpu_unit_cost,
            reference_market_cap: d.reference_market_cap,
            doubling_months: d.doubling_months,
            current_max_params: d.current_max_params,
        };
        Ok(())
    })
}

/// Size, timeline and hardware needed for `line` to reach `target_alpha`.
/// `hw` may be null for the defaults.
///
/// # Safety
/// `line` must be readable, `hw` readable or null, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_scaling_project(
    line: *const SgScalingLine,
    target_alpha: f64,
    hw: *const SgHardware,
    out: *mut SgProjection,
) -> SgStatus {
    guard(|| {
        non_null(line, "line")?;
        non_null(out, "out")?;
        let l = &*line;
        let hw = match hw.as_ref() {
            None => HardwareAssumptions::default(),
            Some(h) => HardwareAssumptions {
                bytes_per_param: h.bytes_per_param,
                gpu_memory_bytes: h.gpu_memory_bytes,
                gpu_unit_cost: h.gpu_unit_cost,
                reference_market_cap: h.reference_market_cap,
                doubling_months: h.doubling_months,
                current_max_params: h.current_max_params,
            },
        };
        let core_line = ScalingLine {
            slope: l.slope,
            intercept: l.intercept,
            r_squared: l.r_squared,
            points: 0,
        };
        let p = projection_from_line(&core_line, target_alpha, &hw)?;
        *out = SgProjection {
            required_params: p.required_params,
            years_until: p.years_until,
            gpu_count: p.gpu_count,
            cost_ratio: p.cost_ratio,
            neuron_ratio: p.neuron_ratio,
        };
        Ok(())
    })
}

/// Empty `dimension`-dimensional lattice of the given side length.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_sandpile_new(
    dimension: usize,
    side: usize,
    out: *mut *mut SgSandpile,
) -> SgStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = SandpileState::new(dimension, side)?;
        *out = Box::into_raw(Box::new(SgSandpile { inner }));
        Ok(())
    })
}

/// # Safety
/// `pile` must come from `sg_sandpile_new` and not be used after.
#[no_mangle]
pub unsafe extern "C" fn sg_sandpile_free(pile: *mut SgSandpile) {
    if !pile.is_null() {
        drop(Box::from_raw(pile));
    }
}

/// Adds a grain at `coords` (length = dimension) and relaxes.
///
/// # Safety
/// `pile` must be a live handle, `coords` must point to `ndim` values and
/// `topplings` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn sg_sandpile_drive(
    pile: *mut SgSandpile,
    coords: *const usize,
    ndim: usize,
    topplings: *mut u64,
) -> SgStatus {
    guard(|| {
        non_null(pile, "pile")?;
        let coords = slice_arg(coords, ndim, "coords")?;
        let n = (*pile).inner.drive(coords)?;
        if let Some(t) = topplings.as_mut() {
            *t = n;
        }
        Ok(())
    })
}

/// Number of lattice sites.
///
/// # Safety
/// `pile` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sg_sandpile_sites(pile: *const SgSandpile) -> usize {
    pile.as_ref().map_or(0, |p| p.inner.heights().len())
}

/// Copies the heights into `buf`; site `(c0, c1, ..)` sits at
/// `c0 + c1 * side + c2 * side^2 + ..`.
///
/// # Safety
/// `pile` must be a live handle; `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn sg_sandpile_heights(
    pile: *const SgSandpile,
    buf: *mut u32,
    len: usize,
) -> SgStatus {
    guard(|| {
        non_null(pile, "pile")?;
        non_null(buf, "buf")?;
        let heights = (*pile).inner.heights();
        if len < heights.len() {
            return Err(fail(
                SgStatus::BufferTooSmall,
                format!("buffer holds {len} heights, lattice has {}", heights.len()),
            ));
        }
        ptr::copy_nonoverlapping(heights.as_ptr(), buf, heights.len());
        Ok(())
    })
}

/// Whether grains added equal grains on the lattice plus grains lost.
///
/// # Safety
/// `pile` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sg_sandpile_conserves_grains(pile: *const SgSandpile) -> bool {
    pile.as_ref().is_some_and(|p| p.inner.conserves_grains())
}

/// Seeded simulation from an empty lattice; writes `drives` avalanche sizes
/// into `sizes`. `burn_in` of `UINT64_MAX` selects the default.
///
/// # Safety
/// `sizes` must have room for `drives` values.
#[no_mangle]
pub unsafe extern "C" fn sg_sandpile_run(
    dimension: usize,
    side: usize,
    burn_in: u64,
    drives: u64,
    seed: u64,
    sizes: *mut u64,
    len: usize,
) -> SgStatus {
    guard(|| {
        non_null(sizes, "sizes")?;
        if (len as u64) < drives {
            return Err(fail(
                SgStatus::BufferTooSmall,
                format!("buffer holds {len} sizes, {drives} drives requested"),
            ));
        }
        let mut config = SandpileConfig::new(dimension, side, drives, seed);
        if burn_in != u64::MAX {
            config.burn_in_drives = burn_in;
        }
        let sim = run_simulation(&config)?;
        ptr::copy_nonoverlapping(sim.log.sizes.as_ptr(), sizes, sim.log.sizes.len());
        Ok(())
    })
}
