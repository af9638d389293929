//! Zero-freeness certificates built from cone-invariance of ratios on
//! self-avoiding-walk trees.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::dynamics::{
    critical_b, invariant_interval, solve_alpha, solve_parabolic, CircularInterval, DynamicsParams, HIT_TOL,
};
use crate::error::{Error, Result};
use crate::graph::{canonical_edge_ordering, BoundaryCondition, Graph};
use crate::partition::{z_scaled, ModelParams};
use crate::sawtree::{build_saw_tree, SawTree, DEFAULT_NODE_CAP};
use crate::sphere::SpherePoint;

/// Angular slack for cone membership.
pub const CONE_SLACK: f64 = 1e-12;
/// Distance kept from the parameter-domain boundaries.
pub const DOMAIN_GUARD: f64 = 1e-10;
/// Graphs up to this size get a brute-force `|Z|` cross-check.
pub const BRUTE_FORCE_CAP: usize = 16;

/// `{ t e^{i phi} : 0 <= t <= inf, phi in I_b }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cone {
    pub arc: CircularInterval,
}

impl Cone {
    pub fn new(arc: CircularInterval) -> Self {
        Self { arc }
    }

    pub fn contains(&self, r: &SpherePoint) -> bool {
        cone_contains(r, self)
    }

    /// Angular distance inside the generating arc; `None` for 0 and infinity.
    pub fn margin(&self, r: &SpherePoint) -> Option<f64> {
        match r {
            SpherePoint::Infinity => None,
            SpherePoint::Finite(z) if z.norm_sqr() == 0.0 => None,
            SpherePoint::Finite(z) => Some(self.arc.margin(z.arg())),
        }
    }
}

pub fn cone_contains(r: &SpherePoint, cone: &Cone) -> bool {
    match r {
        SpherePoint::Infinity => true,
        SpherePoint::Finite(z) if z.norm_sqr() == 0.0 => true,
        SpherePoint::Finite(z) => cone.arc.contains_angle(z.arg(), CONE_SLACK),
    }
}

/// `F(R_1, ..., R_k) = mu * prod g(R_i)` on the sphere.
pub fn multivariate_f(rs: &[SpherePoint], mu: Complex64, b: f64) -> Result<SpherePoint> {
    let mut zeros = usize::from(mu.norm_sqr() == 0.0);
    let mut infinities = 0;
    let mut prod = if zeros == 0 { mu } else { Complex64::new(1.0, 0.0) };
    for r in rs {
        match crate::dynamics::mobius_g(*r, b) {
            SpherePoint::Infinity => infinities += 1,
            SpherePoint::Finite(w) if w.norm_sqr() == 0.0 => zeros += 1,
            SpherePoint::Finite(w) => prod *= w,
        }
    }
    match (zeros, infinities) {
        (0, 0) => Ok(SpherePoint::from_complex(prod)),
        (0, _) => Ok(SpherePoint::Infinity),
        (_, 0) => Ok(SpherePoint::ZERO),
        _ => Err(Error::IndeterminateRatio("0 * infinity in F".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "OUT_OF_DOMAIN")]
    OutOfDomain,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::OutOfDomain => "OUT_OF_DOMAIN",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    /// `"theta_b"` or `"alpha_b"`.
    pub kind: &'static str,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    /// SAW-tree node id.
    pub node: usize,
    /// Graph vertex at the end of the node's walk.
    pub vertex: usize,
    pub ratio: SpherePoint,
    /// `None` when the node is fixed or is a root with `d + 1` children.
    pub in_cone: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentTrace {
    /// Base vertex in the original graph.
    pub base: usize,
    pub vertices: Vec<usize>,
    pub saw_nodes: usize,
    pub final_ratio: SpherePoint,
    pub min_cone_margin: Option<f64>,
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub verdict: Verdict,
    pub d: usize,
    pub b: f64,
    pub xi: Complex64,
    pub r: f64,
    pub bound_used: Option<Bound>,
    pub cone: Option<Cone>,
    pub components: Vec<ComponentTrace>,
    pub brute_force_abs_z: Option<f64>,
    /// Violated bound or first failing check.
    pub reason: Option<String>,
}

impl Certificate {
    pub fn is_pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// JSON report; `detail` adds per-node traces.
    pub fn to_json(&self, detail: bool) -> serde_json::Value {
        let components: Vec<serde_json::Value> = self
            .components
            .iter()
            .map(|c| {
                let mut v = json!({
                    "base": c.base,
                    "saw_nodes": c.saw_nodes,
                    "final_ratio": c.final_ratio.to_json(),
                    "min_cone_margin": c.min_cone_margin,
                });
                if detail {
                    v["trace"] = serde_json::to_value(&c.trace).expect("trace serialization");
                }
                v
            })
            .collect();
        json!({
            "verdict": self.verdict,
            "d": self.d,
            "b": self.b,
            "xi": [self.xi.re, self.xi.im],
            "r": self.r,
            "bound_used": self.bound_used,
            "components": components,
            "brute_force_abs_Z": self.brute_force_abs_z,
            "reason": self.reason,
        })
    }
}

fn domain_bound(g: &Graph, d: usize, params: &ModelParams) -> std::result::Result<Bound, String> {
    if d < 2 {
        return Err(format!("d = {d} must be at least 2"));
    }
    if g.max_degree() > d + 1 {
        return Err(format!("max degree {} exceeds d + 1 = {}", g.max_degree(), d + 1));
    }
    if !params.overrides.is_empty() {
        return Err("per-vertex fields are not covered by the certificate".into());
    }
    if !(params.scale >= 0.0) || !params.scale.is_finite() {
        return Err(format!("r = {} must be finite and >= 0", params.scale));
    }
    if (params.xi.norm() - 1.0).abs() > DOMAIN_GUARD {
        return Err(format!("|xi| = {} is not 1", params.xi.norm()));
    }
    let b = params.b;
    let bc = critical_b(d);
    let in_ferro = b > bc + DOMAIN_GUARD && b < 1.0 - DOMAIN_GUARD;
    let in_anti = b > 1.0 + DOMAIN_GUARD && b < 1.0 / bc - DOMAIN_GUARD;
    if !in_ferro && !in_anti {
        return Err(format!("b = {b} outside ({bc}, 1) U (1, {})", 1.0 / bc));
    }
    let angle = params.xi.arg().abs();
    let bound = if in_ferro {
        let theta = solve_parabolic(d, b).map_err(|e| e.to_string())?.theta_b;
        Bound {
            kind: "theta_b",
            value: theta,
        }
    } else {
        let alpha = solve_alpha(d, b).map_err(|e| e.to_string())?;
        Bound {
            kind: "alpha_b",
            value: alpha,
        }
    };
    if angle >= bound.value - DOMAIN_GUARD {
        return Err(format!(
            "|Arg xi| = {angle} is not below {} = {}",
            bound.kind, bound.value
        ));
    }
    Ok(bound)
}

/// Certifies `Z_G(r xi, b) != 0` for max degree `<= d + 1`.
///
/// Each component is expanded into its SAW tree at its lowest vertex; ratios are
/// computed bottom-up with missing children padded by `R = 1` and every free
/// node with at most `d` children is checked to lie in the cone over `I_b`.
pub fn certify_nonvanishing(g: &Graph, d: usize, params: &ModelParams) -> Result<Certificate> {
    let mut cert = Certificate {
        verdict: Verdict::OutOfDomain,
        d,
        b: params.b,
        xi: params.xi,
        r: params.scale,
        bound_used: None,
        cone: None,
        components: Vec::new(),
        brute_force_abs_z: None,
        reason: None,
    };
    let bound = match domain_bound(g, d, params) {
        Ok(bound) => bound,
        Err(reason) => {
            cert.reason = Some(reason);
            return Ok(cert);
        }
    };
    cert.bound_used = Some(bound);
    let dp = DynamicsParams::new(params.xi / params.xi.norm(), params.b, d)?;
    let arc = match invariant_interval(&dp) {
        Ok(arc) => arc,
        Err(e) => {
            cert.verdict = Verdict::Fail;
            cert.reason = Some(format!("invariant arc: {e}"));
            return Ok(cert);
        }
    };
    let cone = Cone::new(arc);
    cert.cone = Some(cone);
    let mu = params.xi * params.scale;

    let mut failure = None;
    for comp in g.connected_components() {
        let ord = canonical_edge_ordering(&comp.graph);
        let tree = build_saw_tree(&comp.graph, 0, &ord, &BoundaryCondition::new(), DEFAULT_NODE_CAP)?;
        let (trace, err) = evaluate_component(&tree, &comp.original, d, params.b, mu, &cone);
        if failure.is_none() {
            failure = err;
        }
        cert.components.push(trace);
    }

    if failure.is_none() && g.vertex_count() <= BRUTE_FORCE_CAP {
        let z = z_scaled(g, &params.clone().with_cap(BRUTE_FORCE_CAP), &BoundaryCondition::new())?;
        cert.brute_force_abs_z = Some(z.value.norm());
        if z.is_negligible() {
            failure = Some(format!("brute force gives |Z| = {:e}", z.value.norm()));
        }
    }
    match failure {
        None => cert.verdict = Verdict::Pass,
        Some(reason) => {
            cert.verdict = Verdict::Fail;
            cert.reason = Some(reason);
        }
    }
    Ok(cert)
}

fn evaluate_component(
    tree: &SawTree,
    original: &[usize],
    d: usize,
    b: f64,
    mu: Complex64,
    cone: &Cone,
) -> (ComponentTrace, Option<String>) {
    let n = tree.len();
    let mut ratios = vec![SpherePoint::ONE; n];
    let mut trace = Vec::with_capacity(n);
    let mut failure: Option<String> = None;
    let mut min_margin: Option<f64> = None;
    let mut final_ratio = SpherePoint::ONE;
    // children always carry larger ids than their parent
    for t in (0..n).rev() {
        let vertex = original[tree.last[t]];
        let kids: Vec<SpherePoint> = tree.children[t].iter().map(|&c| ratios[c]).collect();
        let (ratio, in_cone) = if let Some(s) = tree.tau[t] {
            (if s { SpherePoint::Infinity } else { SpherePoint::ZERO }, None)
        } else if kids.len() <= d {
            let mut padded = kids.clone();
            padded.resize(d, SpherePoint::ONE);
            match multivariate_f(&padded, mu, b) {
                Ok(r) => (r, Some(cone.contains(&r))),
                Err(e) => {
                    failure.get_or_insert(format!("node {t} (vertex {vertex}): {e}"));
                    (SpherePoint::ONE, Some(false))
                }
            }
        } else {
            // root with d + 1 children
            let inner = multivariate_f(&kids[..d], mu, b);
            let last = crate::dynamics::mobius_g(kids[d], b);
            match (inner, last) {
                (Ok(SpherePoint::Finite(f)), SpherePoint::Finite(w)) => {
                    let prod = f * w;
                    if prod.norm_sqr() != 0.0 && (prod.arg().abs() >= std::f64::consts::PI - CONE_SLACK) {
                        failure.get_or_insert(format!(
                            "root step has Arg(g(R) F) = {} on the negative axis",
                            prod.arg()
                        ));
                    }
                    (SpherePoint::from_complex(prod), None)
                }
                (Ok(f), w) => match multivariate_f(&kids, mu, b) {
                    Ok(r) => (r, None),
                    Err(e) => {
                        failure.get_or_insert(format!("root step {f} * {w}: {e}"));
                        (SpherePoint::ONE, None)
                    }
                },
                (Err(e), _) => {
                    failure.get_or_insert(format!("root step: {e}"));
                    (SpherePoint::ONE, None)
                }
            }
        };
        if in_cone == Some(false) && failure.is_none() {
            failure = Some(format!("node {t} (vertex {vertex}) has ratio {ratio} outside the cone"));
        }
        if in_cone.is_some() {
            if let Some(m) = cone.margin(&ratio) {
                min_margin = Some(min_margin.map_or(m, |x: f64| x.min(m)));
            }
        }
        ratios[t] = ratio;
        trace.push(TraceEntry {
            node: t,
            vertex,
            ratio,
            in_cone,
        });
        if t == 0 {
            final_ratio = ratio;
        }
    }
    if failure.is_none() && final_ratio.chordal_distance(&SpherePoint::MINUS_ONE) <= HIT_TOL {
        failure = Some(format!("final ratio {final_ratio} is -1"));
    }
    trace.reverse();
    (
        ComponentTrace {
            base: original[0],
            vertices: original.to_vec(),
            saw_nodes: n,
            final_ratio,
            min_cone_margin: min_margin,
            trace,
        },
        failure,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OriginDisk {
    /// Radius of the invariant disk around 0.
    pub r: f64,
    /// Largest `|mu|` mapping the disk (and infinity) into itself.
    pub mu_max: f64,
}

/// Disk `|R| <= r` with `F_{mu,b}` mapping it and infinity into itself for
/// every `|mu| <= mu_max`, from `|g(R)| <= (r + b) / (1 - b r)`.
pub fn antiferro_origin_disk(d: usize, b: f64) -> Result<OriginDisk> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::Domain(format!("origin disk needs b > 1, got {b}")));
    }
    if d < 1 {
        return Err(Error::Validation("d must be positive".into()));
    }
    let phi = |r: f64| r * ((1.0 - b * r) / (r + b)).powi(d as i32);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0 / b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    while hi - lo > 1e-12 * (1.0 / b) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = phi(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = phi(x1);
        }
    }
    let r = 0.5 * (lo + hi);
    Ok(OriginDisk { r, mu_max: phi(r) })
}
