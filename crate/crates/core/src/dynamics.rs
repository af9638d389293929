//! The rational map `f(R) = xi * g(R)^d` with `g(R) = (R + b) / (b R + 1)` and
//! the unit-circle dynamics that decides where the Cayley-tree ratios can hit
//! `-1`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::SpherePoint;

/// Tolerance for "exactly on the unit circle" input checks.
pub const UNIT_TOL: f64 = 1e-10;
/// Chordal distance at which an orbit counts as hitting `-1`.
pub const HIT_TOL: f64 = 1e-9;
pub const DEFAULT_N_MAX: usize = 200;

const NEWTON_MAX_ITER: usize = 200;
const PARABOLIC_FLAG: f64 = 1e-6;
const INVARIANCE_SAMPLES: usize = 1000;
const INVARIANCE_SLACK: f64 = 1e-9;
const ALPHA_SCAN: usize = 4096;
const LIFT_STEP: f64 = PI / 4.0;
const MAX_ARC_SAMPLES: usize = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsParams {
    pub xi: Complex64,
    pub b: f64,
    pub d: usize,
}

impl DynamicsParams {
    pub fn new(xi: Complex64, b: f64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Validation(format!("d must be >= 2, got {d}")));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Validation(format!("b must be a positive real, got {b}")));
        }
        if b == 1.0 {
            return Err(Error::Validation("b = 1 is excluded".into()));
        }
        if !xi.re.is_finite() || !xi.im.is_finite() {
            return Err(Error::Validation("xi must be finite".into()));
        }
        Ok(Self { xi, b, d })
    }

    /// `xi = e^{i angle}`.
    pub fn on_circle(angle: f64, b: f64, d: usize) -> Result<Self> {
        Self::new(Complex64::from_polar(1.0, angle), b, d)
    }

    pub fn with_xi(self, xi: Complex64) -> Self {
        Self { xi, ..self }
    }

    fn require_unit_xi(&self) -> Result<()> {
        if (self.xi.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!("|xi| = {} is not 1", self.xi.norm())));
        }
        Ok(())
    }
}

/// `g(R) = (R + b) / (b R + 1)` on the Riemann sphere.
pub fn mobius_g(r: SpherePoint, b: f64) -> SpherePoint {
    match r {
        SpherePoint::Infinity => {
            if b == 0.0 {
                SpherePoint::Infinity
            } else {
                SpherePoint::real(1.0 / b)
            }
        }
        SpherePoint::Finite(z) => {
            let den = z * b + 1.0;
            if den.norm_sqr() == 0.0 {
                SpherePoint::Infinity
            } else {
                SpherePoint::from_complex((z + b) / den)
            }
        }
    }
}

fn g_finite(z: Complex64, b: f64) -> Complex64 {
    (z + b) / (z * b + 1.0)
}

pub fn apply_f(r: SpherePoint, p: &DynamicsParams) -> SpherePoint {
    if p.xi.norm_sqr() == 0.0 {
        return SpherePoint::ZERO;
    }
    match mobius_g(r, p.b) {
        SpherePoint::Infinity => SpherePoint::Infinity,
        SpherePoint::Finite(w) => SpherePoint::from_complex(p.xi * w.powu(p.d as u32)),
    }
}

/// `f'(R) = xi d g(R)^{d-1} (1 - b^2) / (b R + 1)^2`.
pub fn f_derivative(r: Complex64, p: &DynamicsParams) -> Result<Complex64> {
    let den = r * p.b + 1.0;
    if den.norm() < 1e-300 {
        return Err(Error::Domain(format!("f' has a pole at R = -1/b = {}", -1.0 / p.b)));
    }
    let g = (r + p.b) / den;
    Ok(p.xi * p.d as f64 * g.powu(p.d as u32 - 1) * (1.0 - p.b * p.b) / (den * den))
}

/// `b_c = (d - 1) / (d + 1)`.
pub fn critical_b(d: usize) -> f64 {
    (d as f64 - 1.0) / (d as f64 + 1.0)
}

/// True when `b` lies in `(b_c, 1) U (1, 1/b_c)`.
pub fn in_parabolic_range(d: usize, b: f64) -> bool {
    let bc = critical_b(d);
    b > bc && b < 1.0 / bc && b != 1.0
}

fn check_range(d: usize, b: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::Validation(format!("d must be >= 2, got {d}")));
    }
    if !in_parabolic_range(d, b) {
        let bc = critical_b(d);
        return Err(Error::Domain(format!(
            "b = {b} is outside ({bc}, 1) U (1, {}) for d = {d}",
            1.0 / bc
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalData {
    pub d: usize,
    pub b: f64,
    pub b_c: f64,
    pub theta_b: f64,
    /// Only for `b > 1`.
    pub alpha_b: Option<f64>,
    pub parabolic_r: SpherePoint,
    pub parabolic_xi: Complex64,
    /// `|f(R) - R| + |f'(R) -+ 1|` at the parabolic point.
    pub parabolic_residual: f64,
    pub alpha_residual: Option<f64>,
}

/// Parabolic fixed point on the circle and the boundary angle `theta_b`.
pub fn solve_parabolic(d: usize, b: f64) -> Result<CriticalData> {
    check_range(d, b)?;
    let df = d as f64;
    let c = if b < 1.0 {
        (df * (b * b - 1.0) + (1.0 + b * b)) / b
    } else {
        (df * (1.0 - b * b) + (1.0 + b * b)) / b
    };
    let mut disc = 4.0 - c * c;
    if disc < 0.0 {
        if disc > -1e-12 {
            disc = 0.0;
        } else {
            return Err(Error::Numerical(format!(
                "parabolic quadratic has no unit-circle roots (c = {c})"
            )));
        }
    }
    let mut r = Complex64::new(-c / 2.0, disc.sqrt() / 2.0);
    if (r.norm() - 1.0).abs() <= 1e-8 {
        r /= r.norm();
    }
    let xi = r / g_finite(r, b).powu(d as u32);
    let xi = xi / xi.norm();
    let p = DynamicsParams::new(xi, b, d)?;
    let fr = apply_f(SpherePoint::Finite(r), &p)
        .finite()
        .unwrap_or(Complex64::new(f64::NAN, 0.0));
    let target = if b < 1.0 { 1.0 } else { -1.0 };
    let residual = (fr - r).norm() + (f_derivative(r, &p)? - target).norm();
    let (alpha_b, alpha_residual) = if b > 1.0 {
        let a = solve_alpha(d, b)?;
        (Some(a), Some(alpha_residual(d, b, a)))
    } else {
        (None, None)
    };
    Ok(CriticalData {
        d,
        b,
        b_c: critical_b(d),
        theta_b: xi.arg().abs(),
        alpha_b,
        parabolic_r: SpherePoint::Finite(r),
        parabolic_xi: xi,
        parabolic_residual: residual,
        alpha_residual,
    })
}

pub fn theta_b(d: usize, b: f64) -> Result<f64> {
    solve_parabolic(d, b).map(|c| c.theta_b)
}

/// `alpha + d * Arg g(e^{i alpha})`, continuous on `[0, pi]` for `b > 1`.
fn alpha_h(d: usize, b: f64, alpha: f64) -> f64 {
    let (s, c) = alpha.sin_cos();
    let lifted = s.atan2(c + b) - (b * s).atan2(b * c + 1.0);
    alpha + d as f64 * lifted
}

/// `|e^{i alpha} g(e^{i alpha})^d - 1|`.
pub fn alpha_residual(d: usize, b: f64, alpha: f64) -> f64 {
    let z = Complex64::from_polar(1.0, alpha);
    (z * g_finite(z, b).powu(d as u32) - 1.0).norm()
}

/// Smallest `alpha` in `(0, pi)` with `e^{i alpha} g(e^{i alpha})^d = 1`.
pub fn solve_alpha(d: usize, b: f64) -> Result<f64> {
    check_range(d, b)?;
    if b < 1.0 {
        return Err(Error::Domain(format!("alpha_b needs b > 1, got {b}")));
    }
    let h = |a: f64| alpha_h(d, b, a);
    let mut lo = 0.0;
    let mut found = None;
    for i in 1..=ALPHA_SCAN {
        let a = PI * i as f64 / ALPHA_SCAN as f64;
        if h(a) <= 0.0 {
            found = Some((lo, a));
            break;
        }
        lo = a;
    }
    let (mut lo, mut hi) = found.ok_or_else(|| Error::Domain(format!("no alpha_b in (0, pi) for d = {d}, b = {b}")))?;
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = if h(hi).abs() < h(lo).abs() { hi } else { lo };
    if a <= 0.0 || a >= PI {
        return Err(Error::Domain(format!("alpha_b degenerate for d = {d}, b = {b}")));
    }
    Ok(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AttractingPoint {
    pub point: SpherePoint,
    pub multiplier: Complex64,
    /// `|f'|` within 1e-6 of 1.
    pub parabolic: bool,
    pub residual: f64,
}

/// Continuous argument of `f(e^{i phi})` with value `Arg xi` at `phi = 0`.
fn lifted_f_arg(p: &DynamicsParams, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let gl = s.atan2(c + p.b) - (p.b * s).atan2(p.b * c + 1.0);
    p.xi.arg() + p.d as f64 * gl
}

/// Unit-circle fixed point of `f` with `|f'| < 1`, or the parabolic one at the
/// boundary of the range.
pub fn attracting_fixed_point(p: &DynamicsParams) -> Result<AttractingPoint> {
    p.require_unit_xi()?;
    check_range(p.d, p.b).map_err(|e| match e {
        Error::Domain(m) => Error::NoAttractingPoint(m),
        other => other,
    })?;
    let vartheta = p.xi.arg();
    let mult = |phi: f64| f_derivative(Complex64::from_polar(1.0, phi), p);
    if vartheta == 0.0 {
        let m = mult(0.0)?;
        return Ok(AttractingPoint {
            point: SpherePoint::ONE,
            multiplier: m,
            parabolic: m.norm() > 1.0 - PARABOLIC_FLAG,
            residual: 0.0,
        });
    }
    let crit = solve_parabolic(p.d, p.b)?;
    if vartheta.abs() > crit.theta_b + 1e-12 {
        return Err(Error::NoAttractingPoint(format!(
            "|Arg xi| = {} exceeds theta_b = {}",
            vartheta.abs(),
            crit.theta_b
        )));
    }
    let phi_par = crit.parabolic_r.finite().expect("finite parabolic point").arg().abs() * vartheta.signum();
    let big_f = |phi: f64| lifted_f_arg(p, phi) - phi;
    let (mut lo, mut hi) = if phi_par > 0.0 { (0.0, phi_par) } else { (phi_par, 0.0) };
    // F is decreasing on the bracket: F(0) = Arg xi, F(phi_par) = Arg xi -+ theta_b
    let end_val = big_f(phi_par);
    let mut phi = if end_val * vartheta.signum() >= 0.0 {
        phi_par
    } else {
        let mut x = 0.5 * (lo + hi);
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let fx = big_f(x);
            if fx.abs() < 1e-15 {
                converged = true;
                break;
            }
            if fx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let slope = if p.b < 1.0 {
                mult(x)?.norm() - 1.0
            } else {
                -mult(x)?.norm() - 1.0
            };
            let mut next = if slope != 0.0 { x - fx / slope } else { f64::NAN };
            if !(next >= lo && next <= hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < 1e-16 || hi - lo < 1e-15 {
                x = next;
                converged = true;
                break;
            }
            x = next;
        }
        if !converged {
            return Err(Error::NoAttractingPoint(format!(
                "Newton did not converge in {NEWTON_MAX_ITER} iterations"
            )));
        }
        x
    };
    if !phi.is_finite() {
        phi = phi_par;
    }
    let r = Complex64::from_polar(1.0, phi);
    let m = mult(phi)?;
    let residual = apply_f(SpherePoint::Finite(r), p).chordal_distance(&SpherePoint::Finite(r));
    if m.norm() > 1.0 + 1e-9 {
        return Err(Error::NoAttractingPoint(format!("fixed point has |f'| = {}", m.norm())));
    }
    Ok(AttractingPoint {
        point: SpherePoint::Finite(r),
        multiplier: m,
        parabolic: m.norm() > 1.0 - PARABOLIC_FLAG,
        residual,
    })
}

/// Closed arc of the unit circle: counterclockwise from `start` through `sweep`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CircularInterval {
    pub start: f64,
    pub sweep: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

impl CircularInterval {
    /// Counterclockwise arc from angle `start` of length `sweep` (in `[0, 2 pi]`).
    pub fn new(start: f64, sweep: f64) -> Result<Self> {
        if !start.is_finite() || !(0.0..=TAU).contains(&sweep) {
            return Err(Error::Validation(format!("bad arc start {start}, sweep {sweep}")));
        }
        Ok(Self {
            start: wrap_angle(start),
            sweep,
        })
    }

    pub fn point(angle: f64) -> Self {
        Self {
            start: wrap_angle(angle),
            sweep: 0.0,
        }
    }

    /// Arc between two angles, either direction, whichever is shorter.
    pub fn shortest(a: f64, b: f64) -> Self {
        let delta = wrap_angle(b - a);
        if delta >= 0.0 {
            Self {
                start: wrap_angle(a),
                sweep: delta,
            }
        } else {
            Self {
                start: wrap_angle(b),
                sweep: -delta,
            }
        }
    }

    /// Shortest arc between two unit-modulus points.
    pub fn between(z: Complex64, w: Complex64) -> Self {
        Self::shortest(z.arg(), w.arg())
    }

    pub fn end(&self) -> f64 {
        wrap_angle(self.start + self.sweep)
    }

    pub fn endpoints(&self) -> (Complex64, Complex64) {
        (
            Complex64::from_polar(1.0, self.start),
            Complex64::from_polar(1.0, self.end()),
        )
    }

    pub fn is_degenerate(&self) -> bool {
        self.sweep == 0.0
    }

    /// Angle at fraction `t` in `[0, 1]` along the arc.
    pub fn angle_at(&self, t: f64) -> f64 {
        wrap_angle(self.start + t * self.sweep)
    }

    /// Angular test, with `slack` radians allowed at both ends.
    pub fn contains_angle(&self, angle: f64, slack: f64) -> bool {
        let delta = (angle - self.start).rem_euclid(TAU);
        delta <= self.sweep + slack || delta >= TAU - slack
    }

    /// Signed distance (radians) by which `angle` sits inside the arc; negative outside.
    pub fn margin(&self, angle: f64) -> f64 {
        let delta = (angle - self.start).rem_euclid(TAU);
        if delta <= self.sweep {
            delta.min(self.sweep - delta)
        } else {
            -(delta - self.sweep).min(TAU - delta)
        }
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        (z.norm() - 1.0).abs() <= slack.max(UNIT_TOL) && self.contains_angle(z.arg(), slack)
    }
}

/// Forward-invariant arc `I_b`: from 1 to the attracting point for `b < 1`,
/// from 1 to `xi` for `b > 1`.
pub fn invariant_interval(p: &DynamicsParams) -> Result<CircularInterval> {
    p.require_unit_xi()?;
    let arc = if p.b < 1.0 {
        let r0 = attracting_fixed_point(p)?.point.finite().expect("finite");
        CircularInterval::shortest(0.0, r0.arg())
    } else {
        check_range(p.d, p.b)?;
        CircularInterval::shortest(0.0, p.xi.arg())
    };
    for i in 0..=INVARIANCE_SAMPLES {
        let phi = arc.angle_at(i as f64 / INVARIANCE_SAMPLES as f64);
        let image = apply_f(SpherePoint::Finite(Complex64::from_polar(1.0, phi)), p);
        let ok = image
            .finite()
            .is_some_and(|w| arc.contains_angle(w.arg(), INVARIANCE_SLACK));
        if !ok {
            return Err(Error::InvarianceViolation(format!(
                "f(e^(i {phi})) = {image} leaves the arc [{}, {}]",
                arc.start,
                arc.end()
            )));
        }
    }
    Ok(arc)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Orbit {
    /// `points[0]` is the start.
    pub points: Vec<SpherePoint>,
    /// First index within chordal distance [`HIT_TOL`] of `-1`.
    pub hit_minus_one: Option<usize>,
}

pub fn orbit(start: SpherePoint, p: &DynamicsParams, n: usize) -> Orbit {
    let mut points = Vec::with_capacity(n + 1);
    let mut hit = None;
    let mut cur = start;
    for i in 0..=n {
        if hit.is_none() && cur.chordal_distance(&SpherePoint::MINUS_ONE) < HIT_TOL {
            hit = Some(i);
        }
        points.push(cur);
        if i < n {
            cur = apply_f(cur, p);
        }
    }
    Orbit {
        points,
        hit_minus_one: hit,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZeroParameter {
    pub xi: Complex64,
    /// `f^n(xi) = -1`.
    pub n: usize,
    pub residual: f64,
}

fn iterate_circle(xi: Complex64, b: f64, d: usize, n: usize) -> Complex64 {
    let mut r = xi;
    for _ in 0..n {
        r = xi * g_finite(r, b).powu(d as u32);
        r /= r.norm();
    }
    r
}

/// Searches `arc` for `xi` with `f_xi^n(xi) = -1`, `n <= n_max`, by following the
/// lifted argument of `R_n(xi)` along a sampled arc and bisecting where it
/// crosses an odd multiple of `pi`.
pub fn find_zero_param_in_arc(arc: &CircularInterval, b: f64, d: usize, n_max: usize) -> Result<Option<ZeroParameter>> {
    DynamicsParams::new(Complex64::new(1.0, 0.0), b, d)?;
    if arc.is_degenerate() {
        return Err(Error::Validation("arc must be nondegenerate".into()));
    }
    let xi_at = |s: f64| Complex64::from_polar(1.0, arc.start + s * arc.sweep);
    let mut samples = 64usize;
    let mut svals: Vec<f64> = (0..=samples).map(|j| j as f64 / samples as f64).collect();
    let mut rvals: Vec<Complex64> = svals.iter().map(|&s| xi_at(s)).collect();
    for n in 0..=n_max {
        if n > 0 {
            for (r, &s) in rvals.iter_mut().zip(&svals) {
                let xi = xi_at(s);
                *r = xi * g_finite(*r, b).powu(d as u32);
                *r /= r.norm();
            }
        }
        // refine until neighbouring arguments differ by less than LIFT_STEP
        loop {
            let aliased = rvals.windows(2).any(|w| (w[1] / w[0]).arg().abs() >= LIFT_STEP);
            if !aliased {
                break;
            }
            if samples * 2 > MAX_ARC_SAMPLES {
                return Ok(None);
            }
            samples *= 2;
            svals = (0..=samples).map(|j| j as f64 / samples as f64).collect();
            rvals = svals.par_iter().map(|&s| iterate_circle(xi_at(s), b, d, n)).collect();
        }
        let mut lifted = Vec::with_capacity(rvals.len());
        let mut acc = rvals[0].arg();
        lifted.push(acc);
        for w in rvals.windows(2) {
            acc += (w[1] / w[0]).arg();
            lifted.push(acc);
        }
        let branch = |l: f64| ((l - PI) / TAU).floor();
        for j in 0..samples {
            let on_left = (lifted[j] - PI).rem_euclid(TAU) == 0.0;
            if branch(lifted[j]) == branch(lifted[j + 1]) && !on_left {
                continue;
            }
            let (mut lo, mut hi) = (svals[j], svals[j + 1]);
            // sign of Arg(-R_n) flips across the crossing
            let side = |s: f64| (-iterate_circle(xi_at(s), b, d, n)).arg();
            let lo_side = side(lo);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if side(mid).signum() == lo_side.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            for s in [lo, hi] {
                let xi = xi_at(s);
                let residual = (iterate_circle(xi, b, d, n) + 1.0).norm();
                if residual < 1e-8 {
                    return Ok(Some(ZeroParameter { xi, n, residual }));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub b: f64,
    pub theta_b: Option<f64>,
    pub alpha_b: Option<f64>,
    pub parabolic_residual: Option<f64>,
    pub alpha_residual: Option<f64>,
}

/// `theta_b` and `alpha_b` over a grid of `b`; undefined entries are `None`.
pub fn curve_rows(d: usize, grid: &[f64]) -> Vec<CurveRow> {
    grid.par_iter()
        .map(|&b| match solve_parabolic(d, b) {
            Ok(c) => CurveRow {
                b,
                theta_b: Some(c.theta_b),
                alpha_b: c.alpha_b,
                parabolic_residual: Some(c.parabolic_residual),
                alpha_residual: c.alpha_residual,
            },
            Err(_) => CurveRow {
                b,
                theta_b: None,
                alpha_b: None,
                parabolic_residual: None,
                alpha_residual: None,
            },
        })
        .collect()
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
