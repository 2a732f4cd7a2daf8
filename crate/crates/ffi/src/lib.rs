//! C interface. Objects are opaque handles returned through out-pointers
//! and released with the matching `*_free`. Every call returns
//! a [`CwStatus`]; on failure `cw_last_error_message` describes the error
//! raised on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chaoswave::bim::{self, BoundaryCurve};
use chaoswave::correlation::{self, CorrelationGrid};
use chaoswave::randwave::WaveEnsemble;
use chaoswave::specfun;
use chaoswave::symmetry::{self, ImageSet, Isometry};
use chaoswave::{Error, Point};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    InvalidArgument = 1,
    Domain = 2,
    UndefinedMetric = 3,
    Parse = 4,
    Io = 5,
    NullPointer = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Image group (wedge or corridor) with its frame.
pub struct CwImageSet(ImageSet);

/// Correlation grid, row-major with rows along r_y.
pub struct CwGrid(CorrelationGrid);

/// Closed billiard boundary.
pub struct CwBoundary(BoundaryCurve);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CwStatus {
    match e {
        Error::InvalidArgument(_) => CwStatus::InvalidArgument,
        Error::Domain(_) => CwStatus::Domain,
        Error::UndefinedMetric => CwStatus::UndefinedMetric,
        Error::Parse(_) => CwStatus::Parse,
        Error::Io(_) => CwStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Small(usize),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CwStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CwStatus::NullPointer
        }
        Ok(Err(Fail::Small(need))) => {
            set_error(format!("buffer too small: {need} elements needed"));
            CwStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("internal panic".into());
            CwStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length plus one. Returns
/// 0 if no error has been recorded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_bessel_j0(x: f64, out: *mut f64) -> CwStatus {
    guard(|| put(out, specfun::bessel_j0(x)?, "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_bessel_y0(x: f64, out: *mut f64) -> CwStatus {
    guard(|| put(out, specfun::bessel_y0(x)?, "out"))
}

/// Dihedral group of the wedge of opening π/n with edges at `−frame_angle`
/// and `π/n − frame_angle`; n = 3 with `frame_angle = π/6` gives edges at ±30°.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_wedge_group(n: u32, frame_angle: f64, out: *mut *mut CwImageSet) -> CwStatus {
    guard(|| {
        let g = symmetry::wedge_group(n)?;
        let g = if frame_angle == 0.0 { g } else { g.in_frame(Isometry::rotation(frame_angle)) };
        put_box(out, CwImageSet(g))
    })
}

/// Corridor images `{x ≥ 0, |y − center_y| ≤ width/2}` within `cutoff`
/// of the probe.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_corridor_images(
    width: f64,
    center_y: f64,
    probe_x: f64,
    probe_y: f64,
    cutoff: f64,
    out: *mut *mut CwImageSet,
) -> CwStatus {
    guard(|| {
        let frame = Isometry::translation(Point::new(0.0, -center_y));
        let set = symmetry::corridor_images(width, frame.apply(Point::new(probe_x, probe_y)), cutoff)?.in_frame(frame);
        put_box(out, CwImageSet(set))
    })
}

/// # Safety
/// `set` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_image_set_len(set: *const CwImageSet, out: *mut usize) -> CwStatus {
    guard(|| put(out, get(set, "set")?.0.len(), "out"))
}

/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_image_set_free(set: *mut CwImageSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// `C(x, y)` from the signed Bessel sum.
///
/// # Safety
/// `set` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_theory_value(
    set: *const CwImageSet,
    k: f64,
    x_x: f64,
    x_y: f64,
    y_x: f64,
    y_y: f64,
    out: *mut f64,
) -> CwStatus {
    guard(|| {
        let v = correlation::theory_value(&get(set, "set")?.0, k, Point::new(x_x, x_y), Point::new(y_x, y_y))?;
        put(out, v, "out")
    })
}

/// # Safety
/// `set` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_theory_grid(
    set: *const CwImageSet,
    k: f64,
    probe_x: f64,
    probe_y: f64,
    side: f64,
    resolution: usize,
    out: *mut *mut CwGrid,
) -> CwStatus {
    guard(|| {
        let g = correlation::theory_correlation(&get(set, "set")?.0, k, Point::new(probe_x, probe_y), side, resolution)?;
        put_box(out, CwGrid(g))
    })
}

/// Random-wave ensemble estimate of the adapted correlation.
///
/// # Safety
/// `set` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_ensemble_grid(
    set: *const CwImageSet,
    k: f64,
    waves_per_member: usize,
    members: usize,
    seed: u64,
    probe_x: f64,
    probe_y: f64,
    side: f64,
    resolution: usize,
    out: *mut *mut CwGrid,
) -> CwStatus {
    guard(|| {
        let ens = WaveEnsemble::new(k, waves_per_member, members, seed)?;
        let g = correlation::ensemble_correlation(&ens, &get(set, "set")?.0, Point::new(probe_x, probe_y), side, resolution)?;
        put_box(out, CwGrid(g))
    })
}

/// # Safety
/// `grid` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_grid_resolution(grid: *const CwGrid, out: *mut usize) -> CwStatus {
    guard(|| put(out, get(grid, "grid")?.0.resolution, "out"))
}

/// Copies the `resolution²` values into `buf`.
///
/// # Safety
/// `grid` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cw_grid_values(grid: *const CwGrid, buf: *mut f64, len: usize) -> CwStatus {
    guard(|| {
        let v = &get(grid, "grid")?.0.values;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        if len < v.len() {
            return Err(Fail::Small(v.len()));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_grid_free(grid: *mut CwGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Relative squared error of `numerical` against `theory`.
///
/// # Safety
/// Both grids must be live handles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_error_metric(numerical: *const CwGrid, theory: *const CwGrid, out: *mut f64) -> CwStatus {
    guard(|| put(out, correlation::error_metric(&get(numerical, "numerical")?.0, &get(theory, "theory")?.0)?, "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_boundary_cone(diameter: f64, out: *mut *mut CwBoundary) -> CwStatus {
    guard(|| put_box(out, CwBoundary(bim::make_cone(diameter)?)))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_boundary_quarter_stadium(radius: f64, straight: f64, out: *mut *mut CwBoundary) -> CwStatus {
    guard(|| put_box(out, CwBoundary(bim::make_quarter_stadium(radius, straight)?)))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_boundary_circle(radius: f64, out: *mut *mut CwBoundary) -> CwStatus {
    guard(|| put_box(out, CwBoundary(BoundaryCurve::circle(radius)?)))
}

/// # Safety
/// `boundary` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_boundary_length(boundary: *const CwBoundary, out: *mut f64) -> CwStatus {
    guard(|| put(out, get(boundary, "boundary")?.0.total_length(), "out"))
}

/// # Safety
/// `boundary` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_boundary_free(boundary: *mut CwBoundary) {
    if !boundary.is_null() {
        drop(Box::from_raw(boundary));
    }
}

/// Eigen-wavenumbers in `[k_min, k_max]`. The number found is written to
/// `count`; if it exceeds `capacity`, the first `capacity` are copied and
/// `CW_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `boundary` must be a live handle; `buf` valid for `capacity` writes;
/// `count` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_eigen_scan(
    boundary: *const CwBoundary,
    k_min: f64,
    k_max: f64,
    dk: f64,
    buf: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> CwStatus {
    guard(|| {
        let ks = bim::eigen_scan(&get(boundary, "boundary")?.0, k_min, k_max, dk)?;
        put(count, ks.len(), "count")?;
        if capacity > 0 && buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let n = ks.len().min(capacity);
        if n > 0 {
            ptr::copy_nonoverlapping(ks.as_ptr(), buf, n);
        }
        if ks.len() > capacity {
            return Err(Fail::Small(ks.len()));
        }
        Ok(())
    })
}
