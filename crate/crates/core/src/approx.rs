//! Taylor truncation of `log Z` and relative approximations of `Z`.
//!
//! The series of `log P` around 0 has radius 1 when the zeros of `P` sit on the
//! unit circle, so it is evaluated through a polynomial map: with
//! `phi(0) = 0`, `phi(1) = 1` and `phi` mapping the disk `|z| < beta` (`beta > 1`)
//! into the zero-free region, `q(z) = P(r xi phi(z))` is zero-free on that disk
//! and the series of `log q` at `z = 1` converges geometrically.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::certify::{antiferro_origin_disk, certify_nonvanishing, Verdict};
use crate::dynamics::{solve_alpha, solve_parabolic};
use crate::error::{Error, Result};
use crate::graph::{BoundaryCondition, Graph};
use crate::partition::{xi_polynomial, z_exact, ModelParams, XiPolynomial};
use crate::zeros::polynomial_roots;

const MAP_ALPHAS: [f64; 5] = [0.5, 0.7, 0.8, 0.9, 0.95];
const MAP_DEGREES: [usize; 4] = [4, 8, 16, 32];
const BINOMIAL_DEGREES: [usize; 8] = [2, 3, 4, 6, 8, 12, 16, 24];
const CURVE_SAMPLES: usize = 2048;
const REGION_MARGIN: f64 = 1e-6;
const MAX_RADIUS: f64 = 4.0;
const MAX_ORDER: usize = 2000;
/// Extra coefficients kept beyond the chosen order for error sweeps.
const SWEEP_EXTRA: usize = 20;

/// Log-series coefficients `l_1..l_m` of a polynomial with `a_0 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorTruncation {
    pub m: usize,
    pub l_coeffs: Vec<f64>,
    pub epsilon_target: Option<f64>,
}

impl TaylorTruncation {
    /// `sum_{k <= m} l_k x^k`.
    pub fn log_at(&self, x: Complex64) -> Complex64 {
        self.l_coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &l| (acc + l) * x)
    }

    /// `exp(sum_{k <= m} l_k x^k)`.
    pub fn evaluate(&self, x: Complex64) -> Complex64 {
        self.log_at(x).exp()
    }
}

/// Solves `k a_k = sum_{j=1..k} j l_j a_{k-j}` forward for `k = 1..m`.
///
/// `m` may exceed the degree; higher coefficients continue the series.
pub fn log_z_coefficients(p: &XiPolynomial, m: usize) -> Result<TaylorTruncation> {
    let a0 = *p
        .coeffs
        .first()
        .ok_or_else(|| Error::Validation("empty polynomial".into()))?;
    if a0 == 0.0 {
        return Err(Error::Validation("log series needs a_0 != 0".into()));
    }
    let a: Vec<f64> = p.coeffs.iter().map(|c| c / a0).collect();
    Ok(TaylorTruncation {
        m,
        l_coeffs: log_series(&a, m),
        epsilon_target: None,
    })
}

fn log_series<T>(a: &[T], m: usize) -> Vec<T>
where
    T: Copy
        + std::ops::Mul<f64, Output = T>
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Mul<Output = T>
        + Default,
{
    let coeff = |k: usize| a.get(k).copied().unwrap_or_default();
    let mut l: Vec<T> = Vec::with_capacity(m);
    for k in 1..=m {
        let mut s = coeff(k) * k as f64;
        for j in 1..k {
            s = s - l[j - 1] * coeff(k - j) * j as f64;
        }
        l.push(s * (1.0 / k as f64));
    }
    l
}

/// Coefficients `e_0..e_n` of `exp(sum l_k x^k)` modulo `x^{n+1}`.
pub fn exp_series(l: &[f64], n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut s = 0.0;
        for j in 1..=k.min(l.len()) {
            s += j as f64 * l[j - 1] * e[k - j];
        }
        e[k] = s / k as f64;
    }
    e
}

/// Region known to contain no zeros of `Z_G(., b)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ZeroFreeRegion {
    /// Complement of the arc `{ e^{i phi} : |phi| >= theta }` (`b < 1`).
    CircleGap { theta: f64 },
    /// Sector `|Arg| < alpha` together with the disk `|x| < mu_max` (`b > 1`).
    SectorDisk { alpha: f64, mu_max: f64 },
    /// Complement of numerically located zeros.
    AvoidPoints { zeros: Vec<Complex64> },
}

impl ZeroFreeRegion {
    pub fn for_params(d: usize, b: f64) -> Result<Self> {
        if b < 1.0 {
            Ok(Self::CircleGap {
                theta: solve_parabolic(d, b)?.theta_b,
            })
        } else {
            Ok(Self::SectorDisk {
                alpha: solve_alpha(d, b)?,
                mu_max: antiferro_origin_disk(d, b)?.mu_max,
            })
        }
    }

    /// True when the closed curve (sampled densely) bounds a set inside the region.
    fn encloses_only_safe_points(&self, curve: &[Complex64]) -> bool {
        match *self {
            Self::AvoidPoints { ref zeros } => zeros.iter().all(|&z| {
                let winding: f64 = (0..curve.len())
                    .map(|i| ((curve[(i + 1) % curve.len()] - z) / (curve[i] - z)).arg())
                    .sum();
                winding.abs() < PI
            }),
            Self::SectorDisk { alpha, mu_max } => curve
                .iter()
                .all(|u| u.arg().abs() < alpha - REGION_MARGIN || u.norm() < mu_max * (1.0 - REGION_MARGIN)),
            Self::CircleGap { theta } => {
                let n = curve.len();
                for i in 0..n {
                    let (u, v) = (curve[i], curve[(i + 1) % n]);
                    let (su, sv) = (u.norm() - 1.0, v.norm() - 1.0);
                    if su == 0.0 || su * sv < 0.0 {
                        let t = if su == sv { 0.0 } else { su / (su - sv) };
                        let hit = u + (v - u) * t;
                        if hit.arg().abs() >= theta - REGION_MARGIN {
                            return false;
                        }
                    }
                }
                // the forbidden arc is connected, so one winding number decides it
                let winding: f64 = (0..n)
                    .map(|i| ((curve[(i + 1) % n] + 1.0) / (curve[i] + 1.0)).arg())
                    .sum();
                winding.abs() < PI
            }
        }
    }
}

/// Normalized truncation of `-log(1 - alpha z)`: `phi(0) = 0`, `phi(1) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolynomialMap {
    pub alpha: f64,
    /// `coeffs[k - 1]` multiplies `z^k`.
    pub coeffs: Vec<f64>,
}

impl PolynomialMap {
    pub fn new(alpha: f64, degree: usize) -> Self {
        let raw: Vec<f64> = (1..=degree).map(|k| alpha.powi(k as i32) / k as f64).collect();
        let total: f64 = raw.iter().sum();
        Self {
            alpha,
            coeffs: raw.iter().map(|c| c / total).collect(),
        }
    }

    /// `self(z)^p`, still normalized at 1.
    pub fn power(&self, p: usize) -> Self {
        let mut out = vec![1.0];
        for _ in 0..p {
            let mut next = vec![0.0; out.len() + self.coeffs.len()];
            for (i, &a) in out.iter().enumerate() {
                for (j, &c) in self.coeffs.iter().enumerate() {
                    next[i + j + 1] += a * c;
                }
            }
            out = next;
        }
        out.remove(0);
        Self {
            alpha: self.alpha,
            coeffs: out,
        }
    }

    /// `((1 + z)^K - 1) / (2^K - 1)`; `alpha` is reported as 0.
    pub fn binomial(k: usize) -> Self {
        let mut row = vec![1.0f64];
        for _ in 0..k {
            let mut next = vec![1.0; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        let total: f64 = row[1..].iter().sum();
        Self {
            alpha: 0.0,
            coeffs: row[1..].iter().map(|c| c / total).collect(),
        }
    }

    /// The identity map.
    pub fn identity() -> Self {
        Self {
            alpha: 0.0,
            coeffs: vec![1.0],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| (acc + c) * z)
    }

    /// Largest radius in `[1, MAX_RADIUS]` whose disk maps into `region`
    /// after scaling by `point`; `None` when not even radius 1 qualifies.
    pub fn zero_free_radius(&self, point: Complex64, region: &ZeroFreeRegion) -> Option<f64> {
        let ok = |rho: f64| {
            let curve: Vec<Complex64> = (0..CURVE_SAMPLES)
                .map(|j| point * self.eval(Complex64::from_polar(rho, 2.0 * PI * j as f64 / CURVE_SAMPLES as f64)))
                .collect();
            region.encloses_only_safe_points(&curve)
        };
        let (mut lo, mut hi) = (1.0 + 1e-9, MAX_RADIUS);
        if !ok(lo) {
            return None;
        }
        if ok(hi) {
            return Some(hi);
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }
}

/// `sum_{k > m} N beta^{-k} / k`, bounded by `N beta^{-(m+1)} / ((m+1)(1 - 1/beta))`.
pub fn tail_bound(zeros: usize, beta: f64, m: usize) -> f64 {
    zeros as f64 * beta.powi(-(m as i32 + 1)) / ((m as f64 + 1.0) * (1.0 - 1.0 / beta))
}

fn order_for(zeros: usize, beta: f64, epsilon: f64) -> Option<usize> {
    (0..=MAX_ORDER).find(|&m| tail_bound(zeros, beta, m) < epsilon / 2.0)
}

/// Coefficients `c_1..c_m` of `log P(point * phi(z))`, by composing the log
/// series of `P` with `phi`.
fn composed_log_series(l: &[f64], point: Complex64, map: &PolynomialMap, m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    // power holds phi(z)^k truncated at z^m; index 0 is z^1
    let mut power: Vec<f64> = vec![0.0; m];
    for (i, &c) in map.coeffs.iter().enumerate().take(m) {
        power[i] = c;
    }
    let mut scale = point;
    for k in 1..=m {
        let weight = scale * l[k - 1];
        for (o, &p) in out.iter_mut().zip(&power) {
            *o += weight * p;
        }
        if k == m {
            break;
        }
        let mut next = vec![0.0; m];
        for (i, &p) in power.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, &c) in map.coeffs.iter().enumerate() {
                let idx = i + j + 1;
                if idx >= m {
                    break;
                }
                next[idx] += p * c;
            }
        }
        power = next;
        scale *= point;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Approximation {
    pub value: Complex64,
    pub m_used: usize,
    pub epsilon: f64,
    pub map: PolynomialMap,
    /// Zero-free radius of `q` in the map variable.
    pub beta: f64,
    /// `"theorem"` when `beta` comes from the proven zero-free region, `"roots"`
    /// when from located zeros.
    pub beta_source: &'static str,
    pub tail_bound: f64,
    pub exact: Option<Complex64>,
    /// `|Log(approx / exact)|`.
    pub log_error: Option<f64>,
    /// `c_1, c_2, ...` of `log q`, a few beyond `m_used`.
    pub log_coeffs: Vec<Complex64>,
}

impl Approximation {
    /// `exp(c_1 + ... + c_m)`.
    pub fn value_at(&self, m: usize) -> Complex64 {
        self.log_coeffs.iter().take(m).sum::<Complex64>().exp()
    }

    /// `|Log(value_at(m) / exact)|` when the exact value is known.
    pub fn log_error_at(&self, m: usize) -> Option<f64> {
        self.exact.map(|z| (self.value_at(m) / z).ln().norm())
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "m_used": self.m_used,
            "approx": [self.value.re, self.value.im],
            "exact": self.exact.map(|z| [z.re, z.im]),
            "log_error": self.log_error,
            "epsilon": self.epsilon,
            "map": {"alpha": self.map.alpha, "degree": self.map.degree(), "beta": self.beta, "beta_source": self.beta_source},
            "tail_bound": self.tail_bound,
        })
    }
}

fn best_map(point: Complex64, region: &ZeroFreeRegion, n: usize, epsilon: f64) -> Option<(usize, PolynomialMap, f64)> {
    let candidates = MAP_ALPHAS
        .iter()
        .flat_map(|&a| MAP_DEGREES.iter().map(move |&k| PolynomialMap::new(a, k)))
        .chain(BINOMIAL_DEGREES.iter().map(|&k| PolynomialMap::binomial(k)))
        .chain([PolynomialMap::identity()]);
    let mut best: Option<(usize, PolynomialMap, f64)> = None;
    for map in candidates {
        let Some(beta) = map.zero_free_radius(point, region) else {
            continue;
        };
        let Some(m) = order_for(n * map.degree(), beta, epsilon) else {
            continue;
        };
        if best.as_ref().map_or(true, |(bm, _, _)| m < *bm) {
            best = Some((m, map, beta));
        }
    }
    best
}

/// Relative `epsilon`-approximation of `Z_G(r xi, b)` from the truncated log series.
///
/// Parameters must pass [`certify_nonvanishing`]; otherwise a domain error is
/// returned. The order `m` is the first with a rigorous tail bound below `epsilon / 2`.
pub fn approx_partition(g: &Graph, d: usize, params: &ModelParams, epsilon: f64) -> Result<Approximation> {
    if !(epsilon > 0.0) {
        return Err(Error::Validation(format!("epsilon must be positive, got {epsilon}")));
    }
    let cert = certify_nonvanishing(g, d, params)?;
    if cert.verdict != Verdict::Pass {
        return Err(Error::Domain(format!(
            "{}: {}",
            cert.verdict,
            cert.reason.unwrap_or_default()
        )));
    }
    let poly = xi_polynomial(g, params.b, params.cap)?;
    let n = poly.degree();
    let point = params.xi * params.scale;
    let exact = Some(z_exact(g, params, &BoundaryCondition::new())?);
    if n == 0 || point.norm_sqr() == 0.0 {
        let value = Complex64::new(poly.coeffs[0], 0.0);
        return Ok(Approximation {
            value,
            m_used: 0,
            epsilon,
            map: PolynomialMap::identity(),
            beta: f64::INFINITY,
            beta_source: "theorem",
            tail_bound: 0.0,
            exact,
            log_error: exact.map(|z| (value / z).ln().norm()),
            log_coeffs: Vec::new(),
        });
    }
    let region = ZeroFreeRegion::for_params(d, params.b)?;
    let (m, map, beta, source) = match best_map(point, &region, n, epsilon) {
        Some((m, map, beta)) => (m, map, beta, "theorem"),
        None => {
            // near the origin the antiferromagnetic region is too thin for any map
            let zeros = ZeroFreeRegion::AvoidPoints {
                zeros: polynomial_roots(&poly)?.roots,
            };
            let (m, map, beta) = best_map(point, &zeros, n, epsilon)
                .ok_or_else(|| Error::Numerical("no polynomial map keeps a disk of radius > 1 free of zeros".into()))?;
            (m, map, beta, "roots")
        }
    };
    let a0 = poly.coeffs[0];
    let t = log_z_coefficients(&poly, m + SWEEP_EXTRA)?;
    let log_coeffs = composed_log_series(&t.l_coeffs, point, &map, m + SWEEP_EXTRA);
    let value = log_coeffs.iter().take(m).sum::<Complex64>().exp() * a0;
    Ok(Approximation {
        value,
        m_used: m,
        epsilon,
        tail_bound: tail_bound(n * map.degree(), beta, m),
        beta,
        beta_source: source,
        map,
        exact,
        log_error: exact.map(|z| (value / z).ln().norm()),
        log_coeffs,
    })
}
