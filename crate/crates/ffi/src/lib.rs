//! C ABI over `nrrt-core`.
//!
//! Objects cross the boundary as opaque handles created by `nrrt_*_new` /
//! `nrrt_*_load` style functions and released with the matching `*_free`.
//! Every fallible call returns an [`NrrtStatus`]; on failure a description is
//! available from [`nrrt_last_error`] on the same thread. Panics are caught
//! and reported as `NRRT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nrrt_core::grid::{self, Cell, Density, OccupancyGrid, PlanningProblem, Point2};
use nrrt_core::planner::{self, PlanOutcome, PlannerConfig, PlannerKind};
use nrrt_core::prior::{self, ProbabilityMap};
use nrrt_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrrtStatus {
    Ok = 0,
    InvalidArgument = 1,
    Format = 2,
    InfeasibleProblem = 3,
    EmptyPrior = 4,
    EmptyFreeSpace = 5,
    EllipseExhausted = 6,
    Configuration = 7,
    Io = 8,
    NullPointer = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Planner selector for [`nrrt_plan`].
pub const NRRT_PLANNER_RRT_STAR: u32 = 0;
pub const NRRT_PLANNER_NEURAL: u32 = 1;
pub const NRRT_PLANNER_NEURAL_INFORMED: u32 = 2;

/// Density selector for [`nrrt_grid_generate`].
pub const NRRT_DENSITY_SPARSE: u32 = 0;
pub const NRRT_DENSITY_MEDIUM: u32 = 1;
pub const NRRT_DENSITY_DENSE: u32 = 2;

/// Opaque occupancy grid.
pub struct NrrtGrid(OccupancyGrid);

/// Opaque sampling prior, tied to the grid it was built for.
pub struct NrrtPrior(ProbabilityMap);

/// Opaque planning result.
pub struct NrrtOutcome(PlanOutcome);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NrrtPlannerConfig {
    pub iterations: usize,
    pub step: f64,
    pub rewire_radius: f64,
    pub alpha: f64,
    pub goal_tolerance: f64,
    pub seed: u64,
    pub max_rejections: usize,
}

impl From<NrrtPlannerConfig> for PlannerConfig {
    fn from(c: NrrtPlannerConfig) -> Self {
        PlannerConfig {
            iterations: c.iterations,
            step: c.step,
            rewire_radius: c.rewire_radius,
            alpha: c.alpha,
            goal_tolerance: c.goal_tolerance,
            seed: c.seed,
            max_rejections: c.max_rejections,
            record_trace: false,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> NrrtStatus {
    match err {
        Error::InvalidArgument(_) => NrrtStatus::InvalidArgument,
        Error::Format { .. } => NrrtStatus::Format,
        Error::InfeasibleProblem(_) => NrrtStatus::InfeasibleProblem,
        Error::EmptyPrior => NrrtStatus::EmptyPrior,
        Error::EmptyFreeSpace => NrrtStatus::EmptyFreeSpace,
        Error::EllipseExhausted => NrrtStatus::EllipseExhausted,
        Error::Configuration(_) => NrrtStatus::Configuration,
        Error::Io(_) => NrrtStatus::Io,
    }
}

/// Failure raised inside an entry point before it is mapped to a status.
enum Fail {
    Core(Error),
    Status(NrrtStatus, String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NrrtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NrrtStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside nrrt".into());
            NrrtStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(NrrtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    // SAFETY: the caller guarantees a non-null `p` points to a live `T`.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    // SAFETY: the caller guarantees a NUL-terminated string.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str()
        .map(str::to_owned)
        .map_err(|_| Fail::Status(NrrtStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` is non-null and writable per the caller's contract.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn problem(grid: &OccupancyGrid, sx: f64, sy: f64, gx: f64, gy: f64) -> Result<PlanningProblem, Fail> {
    Ok(PlanningProblem::new(grid.clone(), Point2::new(sx, sy), Point2::new(gx, gy))?)
}

fn invalid(msg: String) -> Fail {
    Fail::Status(NrrtStatus::InvalidArgument, msg)
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nrrt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library defaults for planner settings.
#[no_mangle]
pub extern "C" fn nrrt_config_default() -> NrrtPlannerConfig {
    let c = PlannerConfig::default();
    NrrtPlannerConfig {
        iterations: c.iterations,
        step: c.step,
        rewire_radius: c.rewire_radius,
        alpha: c.alpha,
        goal_tolerance: c.goal_tolerance,
        seed: c.seed,
        max_rejections: c.max_rejections,
    }
}

/// Builds a grid from `width * height` row-major cells, 0 = free,
/// nonzero = occupied.
///
/// # Safety
/// `cells` must point to `width * height` readable bytes and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nrrt_grid_new(
    width: usize,
    height: usize,
    cells: *const u8,
    out: *mut *mut NrrtGrid,
) -> NrrtStatus {
    guard(|| {
        if cells.is_null() {
            return Err(null("cells"));
        }
        let n = width.checked_mul(height).ok_or_else(|| invalid("grid size overflows".into()))?;
        // SAFETY: the caller guarantees `n` readable bytes.
        let raw = unsafe { std::slice::from_raw_parts(cells, n) };
        let cells = raw.iter().map(|&b| if b == 0 { Cell::Free } else { Cell::Occupied }).collect();
        let g = OccupancyGrid::new(width, height, cells)?;
        unsafe { write_out(out, NrrtGrid(g)) }
    })
}

/// Loads a map JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrrt_grid_load(path: *const c_char, out: *mut *mut NrrtGrid) -> NrrtStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        let g = grid::load_map(path)?;
        unsafe { write_out(out, NrrtGrid(g)) }
    })
}

/// Generates a procedural map; `density` is one of the `NRRT_DENSITY_*`
/// constants.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nrrt_grid_generate(
    seed: u64,
    density: u32,
    width: usize,
    height: usize,
    out: *mut *mut NrrtGrid,
) -> NrrtStatus {
    guard(|| {
        let density = match density {
            NRRT_DENSITY_SPARSE => Density::Sparse,
            NRRT_DENSITY_MEDIUM => Density::Medium,
            NRRT_DENSITY_DENSE => Density::Dense,
            d => return Err(invalid(format!("unknown density {d}"))),
        };
        let g = grid::generate_map(seed, density, width, height)?;
        unsafe { write_out(out, NrrtGrid(g)) }
    })
}

/// # Safety
/// `grid` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nrrt_grid_width(grid: *const NrrtGrid) -> usize {
    unsafe { grid.as_ref() }.map_or(0, |g| g.0.width())
}

/// # Safety
/// `grid` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nrrt_grid_height(grid: *const NrrtGrid) -> usize {
    unsafe { grid.as_ref() }.map_or(0, |g| g.0.height())
}

/// Whether the point lies in a free cell; false for NULL or out of bounds.
///
/// # Safety
/// `grid` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nrrt_grid_is_free(grid: *const NrrtGrid, x: f64, y: f64) -> bool {
    unsafe { grid.as_ref() }.is_some_and(|g| g.0.is_free(Point2::new(x, y)))
}

/// # Safety
/// `grid` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nrrt_grid_free(grid: *mut NrrtGrid) {
    if !grid.is_null() {
        // SAFETY: allocated by `write_out` and released once by contract.
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Oracle prior: the normalized dilated A* path mask of the problem.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrrt_prior_oracle(
    grid: *const NrrtGrid,
    start_x: f64,
    start_y: f64,
    goal_x: f64,
    goal_y: f64,
    out: *mut *mut NrrtPrior,
) -> NrrtStatus {
    guard(|| {
        let g = unsafe { as_ref(grid, "grid") }?;
        let p = prior::oracle_prior(&problem(&g.0, start_x, start_y, goal_x, goal_y)?)?;
        unsafe { write_out(out, NrrtPrior(p)) }
    })
}

/// Loads and validates an NPRI prior against `grid`.
///
/// # Safety
/// `grid` must be a live handle, `path` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrrt_prior_load(
    grid: *const NrrtGrid,
    path: *const c_char,
    out: *mut *mut NrrtPrior,
) -> NrrtStatus {
    guard(|| {
        let g = unsafe { as_ref(grid, "grid") }?;
        let path = unsafe { path_arg(path) }?;
        let p = prior::load_prior(path, &g.0)?;
        unsafe { write_out(out, NrrtPrior(p)) }
    })
}

/// Writes the prior as an NPRI file.
///
/// # Safety
/// `prior` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nrrt_prior_save(prior: *const NrrtPrior, path: *const c_char) -> NrrtStatus {
    guard(|| {
        let p = unsafe { as_ref(prior, "prior") }?;
        let path = unsafe { path_arg(path) }?;
        Ok(prior::save_prior(&p.0, path)?)
    })
}

/// # Safety
/// `prior` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nrrt_prior_free(prior: *mut NrrtPrior) {
    if !prior.is_null() {
        // SAFETY: allocated by `write_out` and released once by contract.
        drop(unsafe { Box::from_raw(prior) });
    }
}

/// Runs one planner. `planner` is one of the `NRRT_PLANNER_*` constants;
/// `prior` may be NULL only for RRT*. A run that finds no path still returns
/// `NRRT_STATUS_OK` with an unsuccessful outcome.
///
/// # Safety
/// `grid` and `config` must be valid, `prior` valid or NULL, `out` writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn nrrt_plan(
    grid: *const NrrtGrid,
    planner: u32,
    start_x: f64,
    start_y: f64,
    goal_x: f64,
    goal_y: f64,
    config: *const NrrtPlannerConfig,
    prior: *const NrrtPrior,
    out: *mut *mut NrrtOutcome,
) -> NrrtStatus {
    guard(|| {
        let g = unsafe { as_ref(grid, "grid") }?;
        let cfg: PlannerConfig = (*unsafe { as_ref(config, "config") }?).into();
        let kind = match planner {
            NRRT_PLANNER_RRT_STAR => PlannerKind::RrtStar,
            NRRT_PLANNER_NEURAL => PlannerKind::NeuralRrtStar,
            NRRT_PLANNER_NEURAL_INFORMED => PlannerKind::NeuralInformed,
            p => return Err(invalid(format!("unknown planner {p}"))),
        };
        let prior = unsafe { prior.as_ref() }.map(|p| &p.0);
        let outcome = planner::plan(kind, &problem(&g.0, start_x, start_y, goal_x, goal_y)?, &cfg, prior)?;
        unsafe { write_out(out, NrrtOutcome(outcome)) }
    })
}

/// # Safety
/// `outcome` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nrrt_outcome_success(outcome: *const NrrtOutcome) -> bool {
    unsafe { outcome.as_ref() }.is_some_and(|o| o.0.success)
}

/// Path cost, or +infinity when unsuccessful or NULL.
///
/// # Safety
/// `outcome` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nrrt_outcome_cost(outcome: *const NrrtOutcome) -> f64 {
    unsafe { outcome.as_ref() }.map_or(f64::INFINITY, |o| o.0.cost)
}

/// Number of path vertices.
///
/// # Safety
/// `outcome` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nrrt_outcome_path_len(outcome: *const NrrtOutcome) -> usize {
    unsafe { outcome.as_ref() }.map_or(0, |o| o.0.path.len())
}

/// Copies the path as interleaved `x, y` pairs into `xy`, which holds
/// `capacity` doubles. Needs `2 * nrrt_outcome_path_len` slots.
///
/// # Safety
/// `outcome` must be a live handle and `xy` writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn nrrt_outcome_path(outcome: *const NrrtOutcome, xy: *mut f64, capacity: usize) -> NrrtStatus {
    guard(|| {
        let o = unsafe { as_ref(outcome, "outcome") }?;
        let need = 2 * o.0.path.len();
        if need == 0 {
            return Ok(());
        }
        if xy.is_null() {
            return Err(null("xy"));
        }
        if capacity < need {
            return Err(Fail::Status(
                NrrtStatus::BufferTooSmall,
                format!("path needs {need} doubles, buffer holds {capacity}"),
            ));
        }
        // SAFETY: `xy` holds at least `need` doubles per the check above.
        let dst = unsafe { std::slice::from_raw_parts_mut(xy, need) };
        for (pair, p) in dst.chunks_exact_mut(2).zip(&o.0.path) {
            pair[0] = p.x;
            pair[1] = p.y;
        }
        Ok(())
    })
}

/// Serializes the outcome to a newly allocated JSON string, released with
/// [`nrrt_string_free`].
///
/// # Safety
/// `outcome` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrrt_outcome_to_json(outcome: *const NrrtOutcome, out: *mut *mut c_char) -> NrrtStatus {
    guard(|| {
        let o = unsafe { as_ref(outcome, "outcome") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(o.0.to_json()).expect("JSON has no NUL bytes");
        // SAFETY: `out` is non-null and writable per the caller's contract.
        unsafe { *out = s.into_raw() };
        Ok(())
    })
}

/// # Safety
/// `outcome` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nrrt_outcome_free(outcome: *mut NrrtOutcome) {
    if !outcome.is_null() {
        // SAFETY: allocated by `write_out` and released once by contract.
        drop(unsafe { Box::from_raw(outcome) });
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nrrt_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}
