//! C ABI over `isingzero`.
//!
//! Every function returns an [`IzStatus`]; on failure the message is available
//! from [`iz_last_error`] on the same thread. Graphs are opaque handles owned
//! by the caller and released with [`iz_graph_free`]. Strings returned through
//! `char **` out-parameters are released with [`iz_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use isingzero::certify::{certify_nonvanishing, Verdict};
use isingzero::dynamics::{critical_b, solve_alpha, solve_parabolic};
use isingzero::partition::{xi_polynomial, z_exact, DEFAULT_CAP};
use isingzero::zeros::polynomial_roots;
use isingzero::{BoundaryCondition, Error, Graph, ModelParams, SpherePoint, XiPolynomial};
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IzStatus {
    Ok = 0,
    /// Null pointer, short buffer or non-UTF-8 string.
    InvalidArgument = 1,
    Validation = 2,
    Resource = 3,
    Indeterminate = 4,
    Domain = 5,
    Numerical = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IzVerdict {
    Pass = 0,
    Fail = 1,
    OutOfDomain = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IzComplex {
    pub re: f64,
    pub im: f64,
}

/// A point of the Riemann sphere; `value` is ignored when `is_infinity` is nonzero.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IzSpherePoint {
    pub value: IzComplex,
    pub is_infinity: i32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IzCriticalData {
    pub b_c: f64,
    pub theta_b: f64,
    /// NaN for `b < 1`.
    pub alpha_b: f64,
    pub parabolic_r: IzComplex,
    pub parabolic_xi: IzComplex,
    pub parabolic_residual: f64,
}

/// Opaque graph handle.
pub struct IzGraph {
    inner: Graph,
}

impl From<IzComplex> for Complex64 {
    fn from(z: IzComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for IzComplex {
    fn from(z: Complex64) -> Self {
        IzComplex { re: z.re, im: z.im }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IzStatus {
    match e {
        Error::Validation(_) | Error::Parse(_) => IzStatus::Validation,
        Error::Io(_) => IzStatus::Io,
        Error::Resource(_) => IzStatus::Resource,
        Error::IndeterminateRatio(_) => IzStatus::Indeterminate,
        Error::Domain(_) | Error::NoAttractingPoint(_) => IzStatus::Domain,
        Error::Numerical(_) | Error::InvarianceViolation(_) => IzStatus::Numerical,
    }
}

struct Failure(IzStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Failure {
    Failure(IzStatus::InvalidArgument, msg.to_string())
}

/// Runs `f`, converting errors and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            IzStatus::Ok
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
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal panic: {msg}"));
            IzStatus::Panic
        }
    }
}

unsafe fn graph_ref<'a>(g: *const IzGraph) -> Result<&'a Graph, Failure> {
    g.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| invalid("graph handle is null"))
}

unsafe fn out_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| invalid(&format!("{what} is null")))
}

fn put_graph(out: &mut *mut IzGraph, g: Graph) {
    *out = Box::into_raw(Box::new(IzGraph { inner: g }));
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next `iz_*` call on the same thread.
#[no_mangle]
pub extern "C" fn iz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a graph on `n` vertices from `edge_count` pairs stored flat in `edges`.
///
/// # Safety
/// `edges` must point to `2 * edge_count` values (may be null when `edge_count` is 0);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_graph_new(
    n: usize,
    edges: *const usize,
    edge_count: usize,
    out: *mut *mut IzGraph,
) -> IzStatus {
    guard(|| {
        let out = out_mut(out, "out")?;
        let flat: &[usize] = if edge_count == 0 {
            &[]
        } else if edges.is_null() {
            return Err(invalid("edges is null"));
        } else {
            std::slice::from_raw_parts(edges, 2 * edge_count)
        };
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        put_graph(out, Graph::new(n, &pairs)?);
        Ok(())
    })
}

/// Parses `{"n": int, "edges": [[u, v], ...]}`.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_graph_from_json(json: *const c_char, out: *mut *mut IzGraph) -> IzStatus {
    guard(|| {
        let out = out_mut(out, "out")?;
        if json.is_null() {
            return Err(invalid("json is null"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| invalid("json is not UTF-8"))?;
        put_graph(out, Graph::from_json_str(text)?);
        Ok(())
    })
}

/// # Safety
/// `g` must come from `iz_graph_new`/`iz_graph_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn iz_graph_free(g: *mut IzGraph) {
    if !g.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(g))));
    }
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iz_graph_vertex_count(g: *const IzGraph) -> usize {
    g.as_ref().map_or(0, |h| h.inner.vertex_count())
}

/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iz_graph_max_degree(g: *const IzGraph) -> usize {
    g.as_ref().map_or(0, |h| h.inner.max_degree())
}

/// `Z_G(xi, b)` by enumeration (at most 24 vertices).
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_z_exact(g: *const IzGraph, xi: IzComplex, b: f64, out: *mut IzComplex) -> IzStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let out = out_mut(out, "out")?;
        *out = z_exact(g, &ModelParams::new(xi.into(), b), &BoundaryCondition::new())?.into();
        Ok(())
    })
}

/// Coefficients `a_0..a_n` of `Z_G(., b)`; `coeffs` must hold `n + 1` values.
///
/// # Safety
/// `g` must be a live handle; `coeffs` must point to `len` writable values; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_xi_polynomial(
    g: *const IzGraph,
    b: f64,
    coeffs: *mut f64,
    len: usize,
    written: *mut usize,
) -> IzStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let written = out_mut(written, "written")?;
        let p = xi_polynomial(g, b, DEFAULT_CAP)?;
        *written = p.coeffs.len();
        if coeffs.is_null() || len < p.coeffs.len() {
            return Err(invalid(&format!("coefficient buffer needs {} entries", p.coeffs.len())));
        }
        std::slice::from_raw_parts_mut(coeffs, p.coeffs.len()).copy_from_slice(&p.coeffs);
        Ok(())
    })
}

/// `(d - 1) / (d + 1)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_critical_b(d: usize, out: *mut f64) -> IzStatus {
    guard(|| {
        if d < 2 {
            return Err(invalid("d must be at least 2"));
        }
        *out_mut(out, "out")? = critical_b(d);
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_solve_parabolic(d: usize, b: f64, out: *mut IzCriticalData) -> IzStatus {
    guard(|| {
        let out = out_mut(out, "out")?;
        let c = solve_parabolic(d, b)?;
        *out = IzCriticalData {
            b_c: c.b_c,
            theta_b: c.theta_b,
            alpha_b: c.alpha_b.unwrap_or(f64::NAN),
            parabolic_r: c
                .parabolic_r
                .finite()
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
                .into(),
            parabolic_xi: c.parabolic_xi.into(),
            parabolic_residual: c.parabolic_residual,
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_solve_alpha(d: usize, b: f64, out: *mut f64) -> IzStatus {
    guard(|| {
        *out_mut(out, "out")? = solve_alpha(d, b)?;
        Ok(())
    })
}

/// Ratio `Z(v = 1) / Z(v = 0)` on the self-avoiding-walk tree rooted at `v`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_ratio_via_saw(
    g: *const IzGraph,
    v: usize,
    xi: IzComplex,
    b: f64,
    out: *mut IzSpherePoint,
) -> IzStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let out = out_mut(out, "out")?;
        let r = isingzero::sawtree::ratio_via_saw(g, v, &ModelParams::new(xi.into(), b), &BoundaryCondition::new())?;
        *out = match r {
            SpherePoint::Infinity => IzSpherePoint {
                value: IzComplex::default(),
                is_infinity: 1,
            },
            SpherePoint::Finite(z) => IzSpherePoint {
                value: z.into(),
                is_infinity: 0,
            },
        };
        Ok(())
    })
}

/// Certifies `Z_G(r xi, b) != 0` for degree bound `d`. When `json_out` is not
/// null it receives the certificate JSON, to be released with `iz_string_free`.
///
/// # Safety
/// `g` must be a live handle; `verdict` must be writable; `json_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn iz_certify(
    g: *const IzGraph,
    d: usize,
    xi: IzComplex,
    b: f64,
    r: f64,
    verdict: *mut IzVerdict,
    json_out: *mut *mut c_char,
) -> IzStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let verdict = out_mut(verdict, "verdict")?;
        let cert = certify_nonvanishing(g, d, &ModelParams::new(xi.into(), b).with_scale(r))?;
        *verdict = match cert.verdict {
            Verdict::Pass => IzVerdict::Pass,
            Verdict::Fail => IzVerdict::Fail,
            Verdict::OutOfDomain => IzVerdict::OutOfDomain,
        };
        if let Some(slot) = json_out.as_mut() {
            let text = cert.to_json(false).to_string();
            *slot = CString::new(text)
                .map_err(|_| invalid("certificate contains nul"))?
                .into_raw();
        }
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn iz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Roots of `coeffs[0] + coeffs[1] x + ... `; `roots` must hold `degree` values.
///
/// # Safety
/// `coeffs` must point to `len` values; `roots` to `roots_len` writable values; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_polynomial_roots(
    coeffs: *const f64,
    len: usize,
    roots: *mut IzComplex,
    roots_len: usize,
    written: *mut usize,
) -> IzStatus {
    guard(|| {
        if coeffs.is_null() {
            return Err(invalid("coeffs is null"));
        }
        let written = out_mut(written, "written")?;
        let poly = XiPolynomial {
            b: f64::NAN,
            coeffs: std::slice::from_raw_parts(coeffs, len).to_vec(),
        };
        let set = polynomial_roots(&poly)?;
        *written = set.roots.len();
        if roots.is_null() || roots_len < set.roots.len() {
            return Err(invalid(&format!("root buffer needs {} entries", set.roots.len())));
        }
        let dst = std::slice::from_raw_parts_mut(roots, set.roots.len());
        for (d, z) in dst.iter_mut().zip(&set.roots) {
            *d = (*z).into();
        }
        Ok(())
    })
}

/// Relative `epsilon`-approximation of `Z_G(r xi, b)`. `log_error` receives
/// `|Log(approx / exact)|`, or NaN when no exact value was computed.
///
/// # Safety
/// `g` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn iz_approx_partition(
    g: *const IzGraph,
    d: usize,
    xi: IzComplex,
    b: f64,
    r: f64,
    epsilon: f64,
    approx: *mut IzComplex,
    m_used: *mut usize,
    log_error: *mut f64,
) -> IzStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let (approx, m_used, log_error) = (
            out_mut(approx, "approx")?,
            out_mut(m_used, "m_used")?,
            out_mut(log_error, "log_error")?,
        );
        let a = isingzero::approx::approx_partition(g, d, &ModelParams::new(xi.into(), b).with_scale(r), epsilon)?;
        *approx = a.value.into();
        *m_used = a.m_used;
        *log_error = a.log_error.unwrap_or(f64::NAN);
        Ok(())
    })
}
