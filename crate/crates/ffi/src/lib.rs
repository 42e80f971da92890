//! C interface to the tepcomp engine.
//!
//! Every function returns a [`TepStatus`]. On failure the message of the last
//! error on the calling thread can be copied out with
//! [`tep_last_error_message`]. Handles returned through out-pointers are owned
//! by the caller and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use tepcomp::analytic::{self, LinearCurve, TwoNodeInput};
use tepcomp::cli::{RunArgs, RunConfig};
use tepcomp::equilibrium::{self, DispatchSolution, ExpansionMask};
use tepcomp::ingest::load_network;
use tepcomp::model::{Network, ScenarioSet};
use tepcomp::{risk, Error};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TepStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Arguments or input data were rejected.
    InvalidInput = 2,
    /// A file could not be read or parsed.
    Io = 3,
    /// The solver or a calibration failed numerically.
    Numerical = 4,
    /// The quantity is undefined for these inputs, e.g. a correlation with a
    /// constant series.
    Undefined = 5,
    /// An internal panic was caught at the boundary.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> TepStatus {
    match err {
        Error::Io { .. } | Error::Csv { .. } | Error::Parse { .. } => TepStatus::Io,
        Error::Degenerate(_) => TepStatus::Undefined,
        e if e.is_numerical() => TepStatus::Numerical,
        _ => TepStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (TepStatus, String)>) -> TepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TepStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TepStatus::Internal
        }
    }
}

fn fail(err: Error) -> (TepStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (TepStatus, String) {
    (TepStatus::NullPointer, format!("{name} is null"))
}

unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, (TepStatus, String)> {
    if ptr.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| (TepStatus::InvalidInput, format!("{name} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], (TepStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tep_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Closed-form two-node market with a line of fixed capacity.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TepTwoNode {
    pub autarky_price: [f64; 2],
    pub price: [f64; 2],
    /// Flow from node 2 to node 1.
    pub flow: f64,
    pub welfare_gain: [f64; 2],
    pub congestion_rent: f64,
}

/// Linear curve `price = intercept + slope * quantity`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TepCurve {
    pub intercept: f64,
    pub slope: f64,
}

impl From<TepCurve> for LinearCurve {
    fn from(c: TepCurve) -> Self {
        LinearCurve::new(c.intercept, c.slope)
    }
}

/// # Safety
/// `out` must be null or point to a writable `TepTwoNode`.
#[no_mangle]
pub unsafe extern "C" fn tep_analytic_two_node(
    d1: TepCurve,
    s1: TepCurve,
    d2: TepCurve,
    s2: TepCurve,
    capacity: f64,
    out: *mut TepTwoNode,
) -> TepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sol = analytic::solve_two_node(d1.into(), s1.into(), d2.into(), s2.into(), TwoNodeInput::Capacity(capacity))
            .map_err(fail)?;
        *out = TepTwoNode {
            autarky_price: sol.autarky,
            price: sol.prices,
            flow: sol.flow,
            welfare_gain: sol.welfare_gain,
            congestion_rent: sol.congestion_rent,
        };
        Ok(())
    })
}

/// Conditional value at risk of the upper `1 - alpha` tail of `x` under the
/// probabilities `p`.
///
/// # Safety
/// `x` and `p` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tep_cvar(x: *const f64, p: *const f64, n: usize, alpha: f64, out: *mut f64) -> TepStatus {
    guard(|| {
        let (x, p) = (slice_arg(x, n, "x")?, slice_arg(p, n, "p")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = risk::cvar(x, p, alpha).map_err(fail)?;
        Ok(())
    })
}

/// Probability-weighted population standard deviation.
///
/// # Safety
/// `x` and `p` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tep_std_dev(x: *const f64, p: *const f64, n: usize, out: *mut f64) -> TepStatus {
    guard(|| {
        let (x, p) = (slice_arg(x, n, "x")?, slice_arg(p, n, "p")?);
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 {
            return Err((TepStatus::InvalidInput, "empty series".into()));
        }
        *out = risk::std_dev(x, p);
        Ok(())
    })
}

/// Probability-weighted Pearson correlation. Returns `Undefined` when either
/// series is constant.
///
/// # Safety
/// `x`, `y` and `p` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tep_correlation(
    x: *const f64,
    y: *const f64,
    p: *const f64,
    n: usize,
    out: *mut f64,
) -> TepStatus {
    guard(|| {
        let (x, y, p) = (slice_arg(x, n, "x")?, slice_arg(y, n, "y")?, slice_arg(p, n, "p")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = risk::correlation(x, y, p).map_err(fail)?;
        Ok(())
    })
}

/// A loaded instance: network, scenarios and run settings.
pub struct TepModel {
    config: RunConfig,
    network: Network,
    scenarios: ScenarioSet,
}

/// A solved plan.
pub struct TepSolution {
    node_ids: Vec<String>,
    line_ids: Vec<String>,
    solution: DispatchSolution,
}

/// Loads the instance described by a key/value config file.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tep_model_load(config_path: *const c_char, out: *mut *mut TepModel) -> TepStatus {
    guard(|| {
        let path = str_arg(config_path, "config_path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = RunConfig::load(&RunArgs {
            config: PathBuf::from(path),
            ..Default::default()
        })
        .map_err(fail)?;
        let (network, scenarios) = load_network(&config.data_dir, &config.raw).map_err(fail)?;
        *out = Box::into_raw(Box::new(TepModel {
            config,
            network,
            scenarios,
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`tep_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tep_model_free(model: *mut TepModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the number of nodes, scenarios and periods.
///
/// # Safety
/// `model` must be a live handle; the out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tep_model_dims(
    model: *const TepModel,
    n_nodes: *mut usize,
    n_scenarios: *mut usize,
    n_periods: *mut usize,
) -> TepStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        for (ptr, v) in [
            (n_nodes, m.network.nodes.len()),
            (n_scenarios, m.scenarios.n_scenarios()),
            (n_periods, m.scenarios.n_periods),
        ] {
            if !ptr.is_null() {
                *ptr = v;
            }
        }
        Ok(())
    })
}

/// Solves the planner problem. When `deny_line` is non-null that line may not
/// be expanded; otherwise every expandable asset is open.
///
/// # Safety
/// `model` must be a live handle, `deny_line` null or a NUL-terminated string,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tep_model_solve(
    model: *const TepModel,
    deny_line: *const c_char,
    out: *mut *mut TepSolution,
) -> TepStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut mask = ExpansionMask::allow_all(&m.network);
        for id in &m.config.deny_lines {
            mask.set_line(&m.network, id, false).map_err(fail)?;
        }
        if !deny_line.is_null() {
            let id = str_arg(deny_line, "deny_line")?;
            mask.set_line(&m.network, id, false).map_err(fail)?;
        }
        let problem = equilibrium::assemble(&m.network, &m.scenarios, &mask).map_err(fail)?;
        let solution = equilibrium::solve(&problem, &m.config.tolerances).map_err(fail)?;
        *out = Box::into_raw(Box::new(TepSolution {
            node_ids: m.network.nodes.iter().map(|n| n.id.clone()).collect(),
            line_ids: m.network.lines.iter().map(|l| l.id.clone()).collect(),
            solution,
        }));
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a handle from [`tep_model_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tep_solution_free(solution: *mut TepSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Expected net total welfare (EUR/yr) and the largest relative KKT residual.
///
/// # Safety
/// `solution` must be a live handle; the out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tep_solution_objective(
    solution: *const TepSolution,
    objective: *mut f64,
    kkt_residual: *mut f64,
) -> TepStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if !objective.is_null() {
            *objective = s.solution.objective;
        }
        if !kkt_residual.is_null() {
            *kkt_residual = s.solution.kkt_residual;
        }
        Ok(())
    })
}

/// Nodal price in EUR/MWh.
///
/// # Safety
/// `solution` must be a live handle, `node_id` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tep_solution_price(
    solution: *const TepSolution,
    node_id: *const c_char,
    scenario: usize,
    period: usize,
    out: *mut f64,
) -> TepStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let id = str_arg(node_id, "node_id")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = s
            .node_ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| (TepStatus::InvalidInput, format!("unknown node '{id}'")))?;
        if scenario >= s.solution.n_scenarios() || period >= s.solution.n_periods() {
            return Err((TepStatus::InvalidInput, format!("index ({scenario}, {period}) out of range")));
        }
        *out = s.solution.price[scenario][n][period];
        Ok(())
    })
}

/// Capacity added to a line, MW.
///
/// # Safety
/// `solution` must be a live handle, `line_id` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tep_solution_line_expansion(
    solution: *const TepSolution,
    line_id: *const c_char,
    out: *mut f64,
) -> TepStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let id = str_arg(line_id, "line_id")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let l = s
            .line_ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| (TepStatus::InvalidInput, format!("unknown line '{id}'")))?;
        *out = s.solution.x[l];
        Ok(())
    })
}
