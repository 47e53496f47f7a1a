//! C ABI for the gdpa solver.
//!
//! Problems and results are opaque heap handles owned by the caller and
//! released with `gdpa_problem_free` / `gdpa_result_free`. Every fallible
//! function returns a [`GdpaStatus`]; on failure a description is available
//! from `gdpa_last_error_message` on the same thread.
//!
//! Callback problems may be evaluated from any thread the caller solves on;
//! the callbacks and `user_data` must tolerate that.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gdpa_core::gdpa::{self, GdpaConfig, SolveResult, Termination};
use gdpa_core::metrics::IterationRecord;
use gdpa_core::problem::{check_gradients, ConstrainedProblem};
use gdpa_core::problems::{build_analytic, AnalyticId};
use gdpa_core::{Error, Projection};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdpaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    Unsupported = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdpaTermination {
    FeasibilityStop = 0,
    BudgetExhausted = 1,
    NumericalFailure = 2,
}

impl From<Termination> for GdpaTermination {
    fn from(t: Termination) -> Self {
        match t {
            Termination::FeasibilityStop => GdpaTermination::FeasibilityStop,
            Termination::BudgetExhausted => GdpaTermination::BudgetExhausted,
            Termination::NumericalFailure => GdpaTermination::NumericalFailure,
        }
    }
}

/// Solver parameters; obtain defaults from `gdpa_config_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdpaSolverConfig {
    pub tau: f64,
    pub beta0: f64,
    pub alpha01: f64,
    pub alpha02: f64,
    pub alpha03: f64,
    pub max_iters: u64,
    pub eps_feas: f64,
    pub eps_stat: f64,
    pub record_every: u64,
    pub record_dense_until: u64,
    pub seed: u64,
}

impl From<&GdpaSolverConfig> for GdpaConfig {
    fn from(c: &GdpaSolverConfig) -> Self {
        GdpaConfig {
            tau: c.tau,
            beta0: c.beta0,
            alpha01: c.alpha01,
            alpha02: c.alpha02,
            alpha03: c.alpha03,
            max_iters: c.max_iters as usize,
            eps_feas: c.eps_feas,
            eps_stat: c.eps_stat,
            record_every: c.record_every as usize,
            record_dense_until: c.record_dense_until as usize,
            seed: c.seed,
        }
    }
}

/// One trace row.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdpaIterationRecord {
    pub r: u64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub f: f64,
    pub f_beta: f64,
    pub stationarity_sq: f64,
    pub feasibility: f64,
    pub slackness: f64,
    pub lambda_norm: f64,
}

impl From<&IterationRecord> for GdpaIterationRecord {
    fn from(r: &IterationRecord) -> Self {
        GdpaIterationRecord {
            r: r.r,
            alpha: r.alpha,
            beta: r.beta,
            gamma: r.gamma,
            f: r.f,
            f_beta: r.f_beta,
            stationarity_sq: r.stationarity_sq,
            feasibility: r.feasibility,
            slackness: r.slackness,
            lambda_norm: r.lambda_norm,
        }
    }
}

/// Returns `f(x)`; `x` has `dim` entries.
pub type GdpaScalarFn = Option<unsafe extern "C" fn(x: *const f64, dim: usize, user_data: *mut c_void) -> f64>;
/// Writes `out_len` values into `out`: the gradient (`dim`), the constraint
/// values (`m`) or the row-major Jacobian (`m * dim`).
pub type GdpaVectorFn =
    Option<unsafe extern "C" fn(x: *const f64, dim: usize, out: *mut f64, out_len: usize, user_data: *mut c_void)>;

struct CallbackProblem {
    dim: usize,
    m: usize,
    f: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    grad: unsafe extern "C" fn(*const f64, usize, *mut f64, usize, *mut c_void),
    g: GdpaVectorFn,
    jac: GdpaVectorFn,
    user_data: *mut c_void,
}

// The caller guarantees the callbacks and user_data are thread-safe.
unsafe impl Send for CallbackProblem {}
unsafe impl Sync for CallbackProblem {}

impl CallbackProblem {
    fn call_vec(&self, cb: unsafe extern "C" fn(*const f64, usize, *mut f64, usize, *mut c_void), x: &[f64], len: usize) -> Vec<f64> {
        let mut out = vec![f64::NAN; len];
        // SAFETY: x has dim entries and out has len entries, as documented for the callback.
        unsafe { cb(x.as_ptr(), x.len(), out.as_mut_ptr(), len, self.user_data) };
        out
    }
}

impl ConstrainedProblem for CallbackProblem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn num_constraints(&self) -> usize {
        self.m
    }
    fn objective(&self, x: &[f64]) -> f64 {
        // SAFETY: see call_vec.
        unsafe { (self.f)(x.as_ptr(), x.len(), self.user_data) }
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.call_vec(self.grad, x, self.dim)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        match self.g {
            Some(cb) => self.call_vec(cb, x, self.m),
            None => Vec::new(),
        }
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        match self.jac {
            Some(cb) => self.call_vec(cb, x, self.m * self.dim),
            None => Vec::new(),
        }
    }
}

struct Projected<'a> {
    inner: &'a dyn ConstrainedProblem,
    projection: Projection,
}

impl ConstrainedProblem for Projected<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn num_constraints(&self) -> usize {
        self.inner.num_constraints()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.inner.objective(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.inner.constraints(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        self.inner.jacobian(x)
    }
    fn projection(&self) -> &Projection {
        &self.projection
    }
}

/// Opaque problem handle.
pub struct GdpaProblem {
    inner: Box<dyn ConstrainedProblem>,
    projection: Option<Projection>,
}

impl GdpaProblem {
    fn with_projection(&self) -> Projected<'_> {
        Projected {
            inner: self.inner.as_ref(),
            projection: self.projection.clone().unwrap_or_else(|| self.inner.projection().clone()),
        }
    }
}

/// Opaque result handle.
pub struct GdpaResult {
    inner: SolveResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> GdpaStatus {
    match err {
        Error::NumericalFailure { .. } | Error::NonFinite { .. } => GdpaStatus::NumericalFailure,
        Error::Unsupported(_) => GdpaStatus::Unsupported,
        _ => GdpaStatus::InvalidArgument,
    }
}

fn guarded(body: impl FnOnce() -> Result<(), (GdpaStatus, String)>) -> GdpaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GdpaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GdpaStatus::Panic
        }
    }
}

fn fail(err: Error) -> (GdpaStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (GdpaStatus, String) {
    (GdpaStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `ptr` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], (GdpaStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gdpa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn gdpa_config_default() -> GdpaSolverConfig {
    let d = GdpaConfig::default();
    GdpaSolverConfig {
        tau: d.tau,
        beta0: d.beta0,
        alpha01: d.alpha01,
        alpha02: d.alpha02,
        alpha03: d.alpha03,
        max_iters: d.max_iters as u64,
        eps_feas: d.eps_feas,
        eps_stat: d.eps_stat,
        record_every: d.record_every as u64,
        record_dense_until: d.record_dense_until as u64,
        seed: d.seed,
    }
}

/// Builds a bundled analytic problem: `"halfspace-quadratic"`,
/// `"circle-exterior"` or `"scaled-1d"`.
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gdpa_problem_analytic(id: *const c_char, out: *mut *mut GdpaProblem) -> GdpaStatus {
    guarded(|| {
        if id.is_null() {
            return Err(null("id"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let name = CStr::from_ptr(id)
            .to_str()
            .map_err(|_| (GdpaStatus::InvalidArgument, "id is not UTF-8".to_string()))?;
        let id: AnalyticId = name.parse().map_err(fail)?;
        let handle = GdpaProblem {
            inner: Box::new(build_analytic(id).problem),
            projection: None,
        };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// Builds a problem from callbacks. `constraints` and `jacobian` may be null
/// only when `num_constraints` is 0.
///
/// # Safety
/// The callbacks must be valid for the lifetime of the handle and safe to
/// call with `user_data`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gdpa_problem_from_callbacks(
    dim: usize,
    num_constraints: usize,
    objective: GdpaScalarFn,
    gradient: GdpaVectorFn,
    constraints: GdpaVectorFn,
    jacobian: GdpaVectorFn,
    user_data: *mut c_void,
    out: *mut *mut GdpaProblem,
) -> GdpaStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let f = objective.ok_or_else(|| null("objective"))?;
        let grad = gradient.ok_or_else(|| null("gradient"))?;
        if num_constraints > 0 && (constraints.is_none() || jacobian.is_none()) {
            return Err(null("constraint callback"));
        }
        if dim == 0 {
            return Err((GdpaStatus::InvalidArgument, "dim must be positive".into()));
        }
        let p = CallbackProblem {
            dim,
            m: num_constraints,
            f,
            grad,
            g: constraints,
            jac: jacobian,
            user_data,
        };
        *out = Box::into_raw(Box::new(GdpaProblem {
            inner: Box::new(p),
            projection: None,
        }));
        Ok(())
    })
}

/// Restricts the problem to the box `[lower, upper]`; infinite bounds are allowed.
///
/// # Safety
/// `problem` must be a live handle and both arrays must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn gdpa_problem_set_box(
    problem: *mut GdpaProblem,
    lower: *const f64,
    upper: *const f64,
    dim: usize,
) -> GdpaStatus {
    guarded(|| {
        let p = problem.as_mut().ok_or_else(|| null("problem"))?;
        let lo = slice(lower, dim, "lower")?.to_vec();
        let hi = slice(upper, dim, "upper")?.to_vec();
        let proj = Projection::new_box(lo, hi).map_err(fail)?;
        proj.check_dim(p.inner.dim()).map_err(fail)?;
        p.projection = Some(proj);
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gdpa_problem_free(problem: *mut GdpaProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs the solver from `x0` (length `dim`) with zero initial multipliers.
/// A numerical failure during the iterations still yields a result whose
/// termination is `GDPA_TERMINATION_NUMERICAL_FAILURE`.
///
/// # Safety
/// Pointers must be valid; `out` receives a handle to free with `gdpa_result_free`.
#[no_mangle]
pub unsafe extern "C" fn gdpa_solve(
    problem: *const GdpaProblem,
    config: *const GdpaSolverConfig,
    x0: *const f64,
    dim: usize,
    out: *mut *mut GdpaResult,
) -> GdpaStatus {
    guarded(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x0 = slice(x0, dim, "x0")?;
        let res = gdpa::solve(&p.with_projection(), &GdpaConfig::from(cfg), x0, None).map_err(fail)?;
        *out = Box::into_raw(Box::new(GdpaResult { inner: res }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gdpa_result_free(result: *mut GdpaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (GdpaStatus, String)> {
    if len != src.len() {
        return Err((
            GdpaStatus::InvalidArgument,
            format!("buffer holds {len} values, {} required", src.len()),
        ));
    }
    if len > 0 {
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, len);
    }
    Ok(())
}

/// Which vector `gdpa_result_vector` copies.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdpaVector {
    XFinal = 0,
    LambdaFinal = 1,
    XAverage = 2,
    LambdaAverage = 3,
}

/// Length of the requested vector, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gdpa_result_vector_len(result: *const GdpaResult, which: GdpaVector) -> usize {
    result.as_ref().map_or(0, |r| pick(&r.inner, which).len())
}

fn pick(r: &SolveResult, which: GdpaVector) -> &[f64] {
    match which {
        GdpaVector::XFinal => &r.x_final,
        GdpaVector::LambdaFinal => &r.lambda_final,
        GdpaVector::XAverage => &r.x_avg,
        GdpaVector::LambdaAverage => &r.lambda_avg,
    }
}

/// Copies a result vector into `out`, which must hold exactly
/// `gdpa_result_vector_len` values.
///
/// # Safety
/// `result` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gdpa_result_vector(
    result: *const GdpaResult,
    which: GdpaVector,
    out: *mut f64,
    len: usize,
) -> GdpaStatus {
    guarded(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        copy_out(pick(&r.inner, which), out, len)
    })
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gdpa_result_termination(result: *const GdpaResult, out: *mut GdpaTermination) -> GdpaStatus {
    guarded(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = r.inner.termination.into();
        Ok(())
    })
}

/// First iteration at which the squared violation fell below `eps_feas`,
/// or -1 if it never did. Returns -1 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gdpa_result_t_eps(result: *const GdpaResult) -> i64 {
    result
        .as_ref()
        .and_then(|r| r.inner.t_eps)
        .map_or(-1, |t| t as i64)
}

/// Iterations executed, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gdpa_result_iterations(result: *const GdpaResult) -> u64 {
    result.as_ref().map_or(0, |r| r.inner.iterations as u64)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gdpa_result_trace_len(result: *const GdpaResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.trace.len())
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gdpa_result_trace_record(
    result: *const GdpaResult,
    index: usize,
    out: *mut GdpaIterationRecord,
) -> GdpaStatus {
    guarded(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rec = r.inner.trace.get(index).ok_or_else(|| {
            (
                GdpaStatus::InvalidArgument,
                format!("trace index {index} out of range ({} records)", r.inner.trace.len()),
            )
        })?;
        *out = rec.into();
        Ok(())
    })
}

/// Central-difference check at `num_points` points stored row-major in
/// `points`. Writes the largest relative gradient error, and the largest
/// Jacobian error (0 without constraints).
///
/// # Safety
/// `points` must hold `num_points * dim` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gdpa_check_gradients(
    problem: *const GdpaProblem,
    points: *const f64,
    num_points: usize,
    h: f64,
    gradient_error: *mut f64,
    jacobian_error: *mut f64,
) -> GdpaStatus {
    guarded(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let ge = gradient_error.as_mut().ok_or_else(|| null("gradient_error"))?;
        let je = jacobian_error.as_mut().ok_or_else(|| null("jacobian_error"))?;
        let d = p.inner.dim();
        let flat = slice(points, num_points * d, "points")?;
        let pts: Vec<Vec<f64>> = flat.chunks_exact(d.max(1)).map(<[f64]>::to_vec).collect();
        let report = check_gradients(&p.with_projection(), &pts, h).map_err(fail)?;
        *ge = report.gradient_max_rel_error;
        *je = report.jacobian_max_rel_error.unwrap_or(0.0);
        Ok(())
    })
}
