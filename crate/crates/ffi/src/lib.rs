//! C ABI over `di_decomp`.
//!
//! Every entry point returns a [`DdStatus`]. On failure the message is kept
//! per thread and can be read with [`dd_last_error_message`]. Models are
//! handed out as opaque pointers and must be released with the matching
//! `*_free` function. Matrices are column-major: column `j` of an `n`-row
//! matrix starts at `x + j * n`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use di_decomp::cds::split_cds_aligned;
use di_decomp::decomposition::{
    accumulate, contributions, fit_joined, variance_shares, ContributionFrame, CumulativeFrame,
    DecompositionModel, VarianceShares, D_DI5Y,
};
use di_decomp::cds::{CDS_DOM, CDS_GLOB};
use di_decomp::pipeline::{run_pipeline, PipelineConfig};
use di_decomp::pls::{pls1_fit_columns, PlsModel, MACRO_FACTOR};
use di_decomp::regression::{ols_fit_columns, OlsFit};
use di_decomp::series::{Frame, TradingDate};
use di_decomp::stats::student_t_two_sided_p;
use di_decomp::{Error, ErrorKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdStatus {
    Ok = 0,
    /// Null pointer, zero length or an otherwise unusable argument.
    InvalidArgument = 1,
    Config = 2,
    Data = 3,
    Numerical = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

pub struct DdOlsFit {
    fit: OlsFit,
}

pub struct DdPlsModel {
    model: PlsModel,
}

pub struct DdDecomposition {
    model: DecompositionModel,
    contributions: ContributionFrame,
    cumulative: CumulativeFrame,
    shares: VarianceShares,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Invalid(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult = Result<(), Failure>;

fn invalid(msg: &str) -> Failure {
    Failure::Invalid(msg.to_string())
}

fn guard(f: impl FnOnce() -> FfiResult) -> DdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DdStatus::Ok,
        Ok(Err(Failure::Invalid(m))) => {
            set_error(m);
            DdStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            match e.kind() {
                ErrorKind::Config => DdStatus::Config,
                ErrorKind::Data => DdStatus::Data,
                ErrorKind::Numerical => DdStatus::Numerical,
            }
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DdStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Invalid(format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn columns<'a>(x: *const f64, n: usize, k: usize) -> Result<Vec<&'a [f64]>, Failure> {
    let all = slice(x, n.checked_mul(k).ok_or_else(|| invalid("n * k overflows"))?, "x")?;
    Ok((0..k).map(|j| &all[j * n..(j + 1) * n]).collect())
}

unsafe fn write_out(dst: *mut f64, src: &[f64]) {
    if !dst.is_null() {
        std::ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
}

fn names(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("x{j}")).collect()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn dd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Two-sided Student-t p-value.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dd_student_t_two_sided_p(t: f64, dof: usize, out: *mut f64) -> DdStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = student_t_two_sided_p(t, dof)?;
        Ok(())
    })
}

/// OLS of `y` (length `n`) on the `k` columns of `x`, optionally with an intercept.
///
/// # Safety
/// `y` must hold `n` values, `x` must hold `n * k` values, `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dd_ols_fit(
    y: *const f64,
    x: *const f64,
    n: usize,
    k: usize,
    intercept: bool,
    out: *mut *mut DdOlsFit,
) -> DdStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let y = slice(y, n, "y")?;
        let cols = columns(x, n, k)?;
        let fit = ols_fit_columns(y, &names(k), &cols, intercept)?;
        *out = Box::into_raw(Box::new(DdOlsFit { fit }));
        Ok(())
    })
}

/// Number of estimated coefficients (intercept first when present).
///
/// # Safety
/// `fit` must come from [`dd_ols_fit`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn dd_ols_n_coefficients(fit: *const DdOlsFit) -> usize {
    fit.as_ref().map_or(0, |f| f.fit.coefficients.len())
}

/// Copies coefficient statistics into caller buffers of length `len`, which
/// must equal [`dd_ols_n_coefficients`]. Any output pointer may be NULL.
///
/// # Safety
/// Non-null outputs must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dd_ols_coefficients(
    fit: *const DdOlsFit,
    coefficients: *mut f64,
    std_errors: *mut f64,
    t_statistics: *mut f64,
    p_values: *mut f64,
    len: usize,
) -> DdStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or_else(|| invalid("fit is null"))?.fit;
        if len != f.coefficients.len() {
            return Err(Failure::Invalid(format!(
                "buffer length {len} does not match {} coefficients",
                f.coefficients.len()
            )));
        }
        write_out(coefficients, &f.coefficients);
        write_out(std_errors, &f.std_errors);
        write_out(t_statistics, &f.t_statistics);
        write_out(p_values, &f.p_values);
        Ok(())
    })
}

/// # Safety
/// Non-null outputs must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dd_ols_r_squared(
    fit: *const DdOlsFit,
    r_squared: *mut f64,
    adj_r_squared: *mut f64,
) -> DdStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or_else(|| invalid("fit is null"))?.fit;
        write_out(r_squared, &[f.r_squared]);
        write_out(adj_r_squared, &[f.adj_r_squared]);
        Ok(())
    })
}

/// # Safety
/// `fit` must come from [`dd_ols_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dd_ols_free(fit: *mut DdOlsFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// One-component PLS of `y` on the `k` columns of `x`.
///
/// # Safety
/// `x` must hold `n * k` values, `y` `n` values; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dd_pls_fit(
    x: *const f64,
    n: usize,
    k: usize,
    y: *const f64,
    out: *mut *mut DdPlsModel,
) -> DdStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let cols = columns(x, n, k)?;
        let y = slice(y, n, "y")?;
        let model = pls1_fit_columns(&names(k), &cols, y)?;
        *out = Box::into_raw(Box::new(DdPlsModel { model }));
        Ok(())
    })
}

/// Copies the `len` unit-norm weights (one per input column).
///
/// # Safety
/// `weights` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dd_pls_weights(model: *const DdPlsModel, weights: *mut f64, len: usize) -> DdStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| invalid("model is null"))?.model;
        if weights.is_null() || len != m.weights.len() {
            return Err(invalid("weights buffer must be non-null with one slot per column"));
        }
        write_out(weights, &m.weights);
        Ok(())
    })
}

/// Applies the fitted model to `n` new rows; writes the factor into `out`.
///
/// # Safety
/// `x` must hold `n * k` values and `out` must be valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn dd_pls_apply(
    model: *const DdPlsModel,
    x: *const f64,
    n: usize,
    k: usize,
    out: *mut f64,
) -> DdStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| invalid("model is null"))?.model;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let cols = columns(x, n, k)?;
        let f = m.apply_columns(&cols)?;
        write_out(out, &f);
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`dd_pls_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dd_pls_free(model: *mut DdPlsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Splits date-aligned CDS returns into global (fitted, intercept included)
/// and domestic (residual) parts. `coefficients` receives alpha followed by
/// the DXY, CRB, VIX and UST10 loadings and may be NULL.
///
/// # Safety
/// Inputs must hold `n` values; `glob` and `dom` must be valid for `n`
/// writes; `coefficients`, if non-null, for 5.
#[no_mangle]
pub unsafe extern "C" fn dd_cds_split(
    cds: *const f64,
    dxy: *const f64,
    crb: *const f64,
    vix: *const f64,
    ust10: *const f64,
    n: usize,
    glob: *mut f64,
    dom: *mut f64,
    coefficients: *mut f64,
) -> DdStatus {
    guard(|| {
        if glob.is_null() || dom.is_null() {
            return Err(invalid("glob and dom must be non-null"));
        }
        let regs = [
            slice(dxy, n, "dxy")?,
            slice(crb, n, "crb")?,
            slice(vix, n, "vix")?,
            slice(ust10, n, "ust10")?,
        ];
        let (model, g, d) = split_cds_aligned(slice(cds, n, "cds")?, regs)?;
        write_out(glob, &g);
        write_out(dom, &d);
        let mut c = [model.alpha; 5];
        c[1..].copy_from_slice(&model.gamma);
        write_out(coefficients, &c);
        Ok(())
    })
}

/// Fits the decomposition on aligned arrays of daily bps changes and the
/// three factors, and derives contributions and running sums.
///
/// # Safety
/// Inputs must hold `n` values; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dd_decomposition_fit(
    d_di5y_bps: *const f64,
    macro_factor: *const f64,
    cds_dom: *const f64,
    cds_glob: *const f64,
    n: usize,
    out: *mut *mut DdDecomposition,
) -> DdStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let mut day = TradingDate::from_ymd(2000, 1, 3).expect("valid date");
        let dates = (0..n)
            .map(|_| {
                let d = day;
                day = day.next_weekday();
                d
            })
            .collect();
        let col = |p: *const f64, what: &str| slice(p, n, what).map(<[f64]>::to_vec);
        let frame = Frame::new(
            dates,
            vec![
                (D_DI5Y.to_string(), col(d_di5y_bps, "d_di5y_bps")?),
                (MACRO_FACTOR.to_string(), col(macro_factor, "macro_factor")?),
                (CDS_DOM.to_string(), col(cds_dom, "cds_dom")?),
                (CDS_GLOB.to_string(), col(cds_glob, "cds_glob")?),
            ],
        )?;
        let model = fit_joined(&frame)?;
        let contributions = contributions(&model, &frame)?;
        let cumulative = accumulate(&contributions);
        let shares = variance_shares(&contributions)?;
        *out = Box::into_raw(Box::new(DdDecomposition {
            model,
            contributions,
            cumulative,
            shares,
        }));
        Ok(())
    })
}

/// Number of rows in the decomposition.
///
/// # Safety
/// `h` must come from [`dd_decomposition_fit`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn dd_decomposition_len(h: *const DdDecomposition) -> usize {
    h.as_ref().map_or(0, |h| h.contributions.len())
}

/// Writes `[beta0, beta_macro, beta_dom, beta_glob]`.
///
/// # Safety
/// `betas` must be valid for 4 writes.
#[no_mangle]
pub unsafe extern "C" fn dd_decomposition_betas(h: *const DdDecomposition, betas: *mut f64) -> DdStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| invalid("handle is null"))?;
        if betas.is_null() {
            return Err(invalid("betas is null"));
        }
        let m = &h.model;
        write_out(betas, &[m.beta0, m.beta_macro, m.beta_dom, m.beta_glob]);
        Ok(())
    })
}

/// Daily contributions in bps. Buffers hold `len` values (the decomposition
/// length); any of them may be NULL.
///
/// # Safety
/// Non-null outputs must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dd_decomposition_contributions(
    h: *const DdDecomposition,
    constant: *mut f64,
    macro_contrib: *mut f64,
    riscobr: *mut f64,
    global: *mut f64,
    residual: *mut f64,
    len: usize,
) -> DdStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| invalid("handle is null"))?;
        let c = &h.contributions;
        if len != c.len() {
            return Err(invalid("buffer length must equal dd_decomposition_len"));
        }
        write_out(constant, &c.constant);
        write_out(macro_contrib, &c.macro_contrib);
        write_out(riscobr, &c.riscobr_contrib);
        write_out(global, &c.global_contrib);
        write_out(residual, &c.residual);
        Ok(())
    })
}

/// Running sums of the change and of each contribution.
///
/// # Safety
/// Non-null outputs must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dd_decomposition_cumulative(
    h: *const DdDecomposition,
    total: *mut f64,
    constant: *mut f64,
    macro_contrib: *mut f64,
    riscobr: *mut f64,
    global: *mut f64,
    residual: *mut f64,
    len: usize,
) -> DdStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| invalid("handle is null"))?;
        let k = &h.cumulative;
        if len != k.len() {
            return Err(invalid("buffer length must equal dd_decomposition_len"));
        }
        write_out(total, &k.di5y_change_cum);
        write_out(constant, &k.const_cum);
        write_out(macro_contrib, &k.macro_cum);
        write_out(riscobr, &k.riscobr_cum);
        write_out(global, &k.global_cum);
        write_out(residual, &k.residual_cum);
        Ok(())
    })
}

/// Variance shares of the macro, domestic and global contributions.
///
/// # Safety
/// `shares` must be valid for 3 writes.
#[no_mangle]
pub unsafe extern "C" fn dd_decomposition_variance_shares(
    h: *const DdDecomposition,
    shares: *mut f64,
) -> DdStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| invalid("handle is null"))?;
        if shares.is_null() {
            return Err(invalid("shares is null"));
        }
        write_out(shares, &h.shares.shares);
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`dd_decomposition_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dd_decomposition_free(h: *mut DdDecomposition) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Runs the full pipeline from a TOML config file. `out_dir` overrides the
/// configured output directory when non-NULL.
///
/// # Safety
/// Both arguments must be NUL-terminated UTF-8 strings or (for `out_dir`) NULL.
#[no_mangle]
pub unsafe extern "C" fn dd_run_pipeline(config_path: *const c_char, out_dir: *const c_char) -> DdStatus {
    guard(|| {
        if config_path.is_null() {
            return Err(invalid("config_path is null"));
        }
        let path = CStr::from_ptr(config_path)
            .to_str()
            .map_err(|_| invalid("config_path is not UTF-8"))?;
        let mut cfg = PipelineConfig::load(Some(PathBuf::from(path).as_path()))?;
        if !out_dir.is_null() {
            let o = CStr::from_ptr(out_dir)
                .to_str()
                .map_err(|_| invalid("out_dir is not UTF-8"))?;
            cfg.output.dir = PathBuf::from(o);
        }
        run_pipeline(&cfg)?;
        Ok(())
    })
}
