//! C ABI for `comono`.
//!
//! Problems and reports are opaque heap handles released with their `_free`
//! function. Every call returns a [`ComonoStatus`]; on failure a message is
//! available from [`comono_last_error_message`] on the same thread. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use comono::outer::{self, Algorithm, OuterParams};
use comono::problems::{self, RatioGameSpec, Regularizer, RotationSpec};
use comono::{verify, Error, InclusionProblem, Matrix, Point, SolveReport};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComonoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericFailure = 3,
    DimensionMismatch = 4,
    MissingSampler = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComonoAlgorithm {
    Halpern = 0,
    Km = 1,
    HalpernStoch = 2,
    KmMlmc = 3,
}

fn algorithm(code: u32) -> Result<Algorithm, Failure> {
    Ok(match code {
        c if c == ComonoAlgorithm::Halpern as u32 => Algorithm::Halpern,
        c if c == ComonoAlgorithm::Km as u32 => Algorithm::Km,
        c if c == ComonoAlgorithm::HalpernStoch as u32 => Algorithm::HalpernStoch,
        c if c == ComonoAlgorithm::KmMlmc as u32 => Algorithm::KmMlmc,
        _ => {
            return Err(Failure(
                ComonoStatus::InvalidArgument,
                format!("unknown algorithm code {code}"),
            ))
        }
    })
}

/// Outer-loop parameters. `budget_scale = 1` runs the full inner budgets.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ComonoParams {
    /// A `ComonoAlgorithm` value.
    pub algorithm: u32,
    pub eta: f64,
    pub rho: f64,
    pub k_max: usize,
    pub seed: u64,
    pub budget_scale: f64,
}

/// One outer iteration. Absent optional values are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ComonoTraceRow {
    pub k: usize,
    pub inner_iters: u64,
    pub cum_oracle_calls: u64,
    pub residual_estimate: f64,
    pub dist_to_solution: f64,
}

/// Inner budget at one outer step. `draws` is 0 and `alpha_ratio` NaN except
/// for `KmMlmc`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ComonoBudget {
    pub inner: u64,
    pub draws: u64,
    pub alpha_ratio: f64,
}

/// Opaque problem handle.
pub struct ComonoProblem {
    inner: InclusionProblem,
}

/// Opaque solve report handle.
pub struct ComonoReport {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(ComonoStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::DimensionMismatch { .. } => ComonoStatus::DimensionMismatch,
            Error::NonFinite { .. } | Error::SingularSystem { .. } => ComonoStatus::NumericFailure,
            Error::StepTooLarge { .. } | Error::InvalidParameter { .. } => ComonoStatus::InvalidArgument,
            Error::MissingSampler => ComonoStatus::MissingSampler,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(ComonoStatus::NullPointer, format!("`{name}` is null"))
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ComonoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            ComonoStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            ComonoStatus::Panic
        }
    }
}

unsafe fn read_slice<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn write_point(p: &Point, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: len,
        }
        .into());
    }
    slice::from_raw_parts_mut(out, len).copy_from_slice(p.as_slice());
    Ok(())
}

unsafe fn emit_problem(out: *mut *mut ComonoProblem, p: InclusionProblem) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(ComonoProblem { inner: p }));
    Ok(())
}

unsafe fn problem_ref<'a>(p: *const ComonoProblem) -> Result<&'a InclusionProblem, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("problem"))
}

unsafe fn report_ref<'a>(r: *const ComonoReport) -> Result<&'a SolveReport, Failure> {
    r.as_ref().map(|h| &h.inner).ok_or_else(|| null("report"))
}

/// `F(x) = L·Q_θ·x` with block-diagonal planar rotations; `dim` must be even.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn comono_problem_rotation(
    lipschitz: f64,
    theta: f64,
    dim: usize,
    out: *mut *mut ComonoProblem,
) -> ComonoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        emit_problem(out, problems::make_rotation(&RotationSpec::new(lipschitz, theta, dim))?)
    })
}

/// Bilinear game `min_x max_y xᵀAy` over two simplices, with `A` given
/// row-major as `rows × cols`.
///
/// # Safety
/// `a` must point to `rows * cols` doubles and `out` to storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn comono_problem_matrix_game(
    a: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut ComonoProblem,
) -> ComonoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = read_slice(a, rows.saturating_mul(cols), "a")?;
        let m = Matrix::from_row_major(rows, cols, data.to_vec())?;
        emit_problem(out, problems::make_matrix_game(&m, None)?)
    })
}

/// `F(x) = Mx + b` plus `λ‖x‖₁` (no regularizer when `l1_lambda = 0`), with
/// `M` given row-major as `dim × dim`.
///
/// # Safety
/// `m` must point to `dim * dim` doubles, `b` to `dim` doubles and `out` to
/// storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn comono_problem_affine(
    m: *const f64,
    b: *const f64,
    dim: usize,
    l1_lambda: f64,
    out: *mut *mut ComonoProblem,
) -> ComonoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mat = Matrix::from_row_major(dim, dim, read_slice(m, dim.saturating_mul(dim), "m")?.to_vec())?;
        let offset = read_slice(b, dim, "b")?;
        let reg = if l1_lambda == 0.0 {
            Regularizer::None
        } else {
            Regularizer::L1 { lambda: l1_lambda }
        };
        emit_problem(out, problems::make_affine(&mat, offset, &reg)?)
    })
}

/// The bundled 2×2 ratio game.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn comono_problem_ratio_game_shipped(out: *mut *mut ComonoProblem) -> ComonoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        emit_problem(out, problems::make_ratio_game(&RatioGameSpec::shipped())?)
    })
}

/// Attaches Gaussian oracle noise with `E‖F̃(x) − F(x)‖² = σ²`; `σ = 0`
/// gives an exact sampler.
///
/// # Safety
/// `problem` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn comono_problem_set_noise(problem: *mut ComonoProblem, sigma: f64) -> ComonoStatus {
    guard(|| {
        let h = problem.as_mut().ok_or_else(|| null("problem"))?;
        h.inner = h.inner.clone().with_noise(sigma)?;
        Ok(())
    })
}

/// Dimension of the problem, or 0 for a null handle.
///
/// # Safety
/// `problem` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn comono_problem_dim(problem: *const ComonoProblem) -> usize {
    problem.as_ref().map_or(0, |h| h.inner.dim())
}

/// Lipschitz constant of `F`, or NaN for a null handle.
///
/// # Safety
/// `problem` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn comono_problem_lipschitz(problem: *const ComonoProblem) -> f64 {
    problem.as_ref().map_or(f64::NAN, |h| h.inner.lipschitz())
}

/// Structure constant `ρ` attached to the problem, or NaN for a null handle.
///
/// # Safety
/// `problem` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn comono_problem_rho(problem: *const ComonoProblem) -> f64 {
    problem.as_ref().map_or(f64::NAN, |h| h.inner.assumption.rho())
}

/// # Safety
/// `problem` must be a handle from this library or null, and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn comono_problem_free(problem: *mut ComonoProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs an outer loop from `x0` and stores the report in `*out`.
///
/// # Safety
/// `problem` must be a live handle, `params` valid, `x0` must point to `dim`
/// doubles and `out` to storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn comono_solve(
    problem: *const ComonoProblem,
    params: *const ComonoParams,
    x0: *const f64,
    dim: usize,
    out: *mut *mut ComonoReport,
) -> ComonoStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x0 = Point::new(read_slice(x0, dim, "x0")?.to_vec())?;
        let op = OuterParams::new(params.eta, params.rho, params.k_max)
            .with_seed(params.seed)
            .with_budget_scale(params.budget_scale);
        let report = outer::solve(algorithm(params.algorithm)?, p, &op, &x0)?;
        *out = Box::into_raw(Box::new(ComonoReport { inner: report }));
        Ok(())
    })
}

/// Number of trace rows (`K`), or 0 for a null handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn comono_report_len(report: *const ComonoReport) -> usize {
    report.as_ref().map_or(0, |h| h.inner.rows.len())
}

/// # Safety
/// `report` must be a live handle and `out` valid for one row.
#[no_mangle]
pub unsafe extern "C" fn comono_report_row(
    report: *const ComonoReport,
    index: usize,
    out: *mut ComonoTraceRow,
) -> ComonoStatus {
    guard(|| {
        let r = report_ref(report)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let row = r.rows.get(index).ok_or_else(|| {
            Failure(
                ComonoStatus::InvalidArgument,
                format!("row {index} out of range (len {})", r.rows.len()),
            )
        })?;
        *out = ComonoTraceRow {
            k: row.k,
            inner_iters: row.inner_iters,
            cum_oracle_calls: row.cum_oracle_calls,
            residual_estimate: row.residual_estimate.unwrap_or(f64::NAN),
            dist_to_solution: row.dist_to_solution.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Copies `x_k` for `k ∈ [0, K]` into `out`.
///
/// # Safety
/// `report` must be a live handle and `out` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn comono_report_iterate(
    report: *const ComonoReport,
    k: usize,
    out: *mut f64,
    dim: usize,
) -> ComonoStatus {
    guard(|| {
        let r = report_ref(report)?;
        let x = r.iterate(k).ok_or_else(|| {
            Failure(
                ComonoStatus::InvalidArgument,
                format!("iterate {k} out of range (K = {})", r.rows.len()),
            )
        })?;
        write_point(x, out, dim)
    })
}

/// Copies `x_K` into `out`.
///
/// # Safety
/// `report` must be a live handle and `out` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn comono_report_final_iterate(
    report: *const ComonoReport,
    out: *mut f64,
    dim: usize,
) -> ComonoStatus {
    guard(|| write_point(&report_ref(report)?.final_iterate, out, dim))
}

/// # Safety
/// `report` must be a handle from this library or null, and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn comono_report_free(report: *mut ComonoReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Fixed-point residual `‖x − J(x)‖/η` with the resolvent computed to `tol`.
///
/// # Safety
/// `problem` must be a live handle, `x` must point to `dim` doubles and `out`
/// to one double.
#[no_mangle]
pub unsafe extern "C" fn comono_residual(
    problem: *const ComonoProblem,
    x: *const f64,
    dim: usize,
    eta: f64,
    tol: f64,
    out: *mut f64,
) -> ComonoStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let x = Point::new(read_slice(x, dim, "x")?.to_vec())?;
        *out = verify::residual(p, &x, eta, tol)?;
        Ok(())
    })
}

/// Inner budget of `algorithm` (a `ComonoAlgorithm` value) at outer step
/// `k` for `ηL ∈ [0, 1)`.
///
/// # Safety
/// `out` must be valid for one budget.
#[no_mangle]
pub unsafe extern "C" fn comono_budget(algorithm: u32, k: u64, eta_l: f64, out: *mut ComonoBudget) -> ComonoStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (inner, mlmc) = outer::budget_row(self::algorithm(algorithm)?, k, eta_l)?;
        *out = ComonoBudget {
            inner,
            draws: mlmc.map_or(0, |b| b.draws),
            alpha_ratio: mlmc.map_or(f64::NAN, |b| b.alpha_ratio),
        };
        Ok(())
    })
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn comono_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn comono_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}
