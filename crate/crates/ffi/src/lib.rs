//! C ABI over the hullopt library.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_load` and released by the matching `*_free`. Every fallible call
//! returns a [`HulloptStatus`]; on failure the message is available from
//! [`hullopt_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use hullopt::geometry::{hydrostatics, linspace, HullForm, OffsetGrid};
use hullopt::hydro::{friction_coefficient, HullEvaluator};
use hullopt::pca::PcaModel;
use hullopt::pipeline::hull_from_design;
use hullopt::surrogate::MlpModel;
use hullopt::Error;

/// Result codes. Values 2 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HulloptStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Io = 3,
    Numerical = 4,
    InvalidString = 5,
    Panic = 6,
}

impl From<&Error> for HulloptStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            3 => HulloptStatus::Io,
            4 => HulloptStatus::Numerical,
            _ => HulloptStatus::Validation,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), HulloptStatus>) -> HulloptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HulloptStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            HulloptStatus::Panic
        }
    }
}

fn fail(e: Error) -> HulloptStatus {
    set_error(&e.to_string());
    HulloptStatus::from(&e)
}

fn null(what: &str) -> HulloptStatus {
    set_error(&format!("null pointer: {what}"));
    HulloptStatus::NullPointer
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, HulloptStatus> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map(Path::new).map_err(|_| {
        set_error("path is not valid UTF-8");
        HulloptStatus::InvalidString
    })
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], HulloptStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hullopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hullopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// ITTC-1957 friction coefficient at Reynolds number `reynolds`.
///
/// # Safety
/// `out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn hullopt_friction_coefficient(reynolds: f64, out: *mut f64) -> HulloptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = friction_coefficient(reynolds).map_err(fail)?;
        Ok(())
    })
}

/// A hull: normalized offsets plus principal dimensions.
pub struct HulloptHull {
    hull: HullForm,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HulloptHydrostatics {
    pub displaced_volume: f64,
    pub wetted_surface: f64,
    pub midship_area: f64,
    pub block_coefficient: f64,
    pub prismatic_coefficient: f64,
    pub slenderness: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HulloptResistance {
    pub froude: f64,
    pub speed: f64,
    pub reynolds: f64,
    pub frictional: f64,
    pub wave: f64,
    pub total: f64,
    pub merit_coefficient: f64,
}

/// Build a hull from `n_stations * n_waterlines` normalized half-breadths,
/// station-major, on equispaced stations (aft to fore) and waterlines
/// (keel to waterline).
///
/// # Safety
/// `offsets` must point to `n_stations * n_waterlines` values and `out` must
/// be writable. Release the handle with [`hullopt_hull_free`].
#[no_mangle]
pub unsafe extern "C" fn hullopt_hull_new(
    offsets: *const f64,
    n_stations: usize,
    n_waterlines: usize,
    length: f64,
    length_to_beam: f64,
    beam_to_draft: f64,
    out: *mut *mut HulloptHull,
) -> HulloptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let values = slice_arg(offsets, n_stations.saturating_mul(n_waterlines), "offsets")?;
        let grid = OffsetGrid::new(
            linspace(0.0, 1.0, n_stations),
            linspace(-1.0, 0.0, n_waterlines),
            values.to_vec(),
        )
        .map_err(fail)?;
        let hull = HullForm::new(grid, length, length_to_beam, beam_to_draft).map_err(fail)?;
        *out = Box::into_raw(Box::new(HulloptHull { hull }));
        Ok(())
    })
}

/// # Safety
/// `hull` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hullopt_hull_free(hull: *mut HulloptHull) {
    if !hull.is_null() {
        drop(Box::from_raw(hull));
    }
}

/// # Safety
/// `hull` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hullopt_hull_hydrostatics(hull: *const HulloptHull, out: *mut HulloptHydrostatics) -> HulloptStatus {
    guard(|| {
        if hull.is_null() || out.is_null() {
            return Err(null("hull or out"));
        }
        let h = hydrostatics(&(*hull).hull).map_err(fail)?;
        *out = HulloptHydrostatics {
            displaced_volume: h.displaced_volume,
            wetted_surface: h.wetted_surface,
            midship_area: h.midship_area,
            block_coefficient: h.block_coefficient,
            prismatic_coefficient: h.prismatic_coefficient,
            slenderness: h.slenderness,
        };
        Ok(())
    })
}

/// Calm-water resistance at Froude number `froude` with default fluid and
/// quadrature settings.
///
/// # Safety
/// `hull` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hullopt_hull_evaluate(hull: *const HulloptHull, froude: f64, out: *mut HulloptResistance) -> HulloptStatus {
    guard(|| {
        if hull.is_null() || out.is_null() {
            return Err(null("hull or out"));
        }
        let ev = HullEvaluator::new(&(*hull).hull, Default::default(), Default::default()).map_err(fail)?;
        let r = ev.evaluate(froude).map_err(fail)?;
        *out = HulloptResistance {
            froude: r.flow.froude,
            speed: r.flow.speed,
            reynolds: r.flow.reynolds,
            frictional: r.frictional,
            wave: r.wave,
            total: r.total,
            merit_coefficient: r.merit_coefficient,
        };
        Ok(())
    })
}

/// A fitted principal-component hull model.
pub struct HulloptPca {
    model: PcaModel,
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable. Release the
/// handle with [`hullopt_pca_free`].
#[no_mangle]
pub unsafe extern "C" fn hullopt_pca_load(path: *const c_char, out: *mut *mut HulloptPca) -> HulloptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = PcaModel::load(path_arg(path)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(HulloptPca { model }));
        Ok(())
    })
}

/// # Safety
/// `pca` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hullopt_pca_free(pca: *mut HulloptPca) {
    if !pca.is_null() {
        drop(Box::from_raw(pca));
    }
}

/// Number of retained axes, or 0 for a null handle.
///
/// # Safety
/// `pca` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hullopt_pca_n_axes(pca: *const HulloptPca) -> usize {
    pca.as_ref().map_or(0, |p| p.model.n_axes)
}

/// Hull for the design vector `params` (scaled scores, then L/B and B/T;
/// `n_axes + 2` values) at length `length`.
///
/// # Safety
/// `pca` must be a live handle, `params` must point to `n_params` values and
/// `out` must be writable. Release the result with [`hullopt_hull_free`].
#[no_mangle]
pub unsafe extern "C" fn hullopt_pca_hull(
    pca: *const HulloptPca,
    params: *const f64,
    n_params: usize,
    length: f64,
    out: *mut *mut HulloptHull,
) -> HulloptStatus {
    guard(|| {
        if pca.is_null() || out.is_null() {
            return Err(null("pca or out"));
        }
        let p = slice_arg(params, n_params, "params")?;
        if n_params != (*pca).model.n_axes + 2 {
            return Err(fail(Error::ShapeMismatch {
                expected: (*pca).model.n_axes + 2,
                got: n_params,
            }));
        }
        let hull = hull_from_design(&(*pca).model, p, length).map_err(fail)?;
        *out = Box::into_raw(Box::new(HulloptHull { hull }));
        Ok(())
    })
}

/// A trained surrogate network.
pub struct HulloptModel {
    model: MlpModel,
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable. Release the
/// handle with [`hullopt_model_free`].
#[no_mangle]
pub unsafe extern "C" fn hullopt_model_load(path: *const c_char, out: *mut *mut HulloptModel) -> HulloptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = MlpModel::load(path_arg(path)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(HulloptModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hullopt_model_free(model: *mut HulloptModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Surrogate merit coefficient for the design vector `params` at length
/// `length` and Froude number `froude`. `out_of_range` (may be null) is set
/// to 1 when the inputs lie outside the training range.
///
/// # Safety
/// `model` must be a live handle, `params` must point to `n_params` values
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hullopt_model_predict(
    model: *const HulloptModel,
    params: *const f64,
    n_params: usize,
    length: f64,
    froude: f64,
    out: *mut f64,
    out_of_range: *mut i32,
) -> HulloptStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            return Err(null("model or out"));
        }
        let m = &(*model).model;
        let p = slice_arg(params, n_params, "params")?;
        if n_params != m.n_axes() + 2 {
            return Err(fail(Error::ShapeMismatch {
                expected: m.n_axes() + 2,
                got: n_params,
            }));
        }
        let pred = m.predict(p, length, froude).map_err(fail)?;
        *out = pred.value;
        if !out_of_range.is_null() {
            *out_of_range = i32::from(pred.out_of_range);
        }
        Ok(())
    })
}
