//! Roots of `Z_G(., b)` and zero atlases over graph families.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{critical_b, theta_b};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::{xi_polynomial, RootedTree, XiPolynomial, DEFAULT_CAP};

pub const MAX_SWEEPS: usize = 500;
pub const RESIDUAL_TOL: f64 = 1e-10;
const POLISH_STEPS: usize = 3;
const CLUSTER_RADIUS: f64 = 1e-4;
const SNAP_TOL: f64 = 1e-8;
const FLAG_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// `|P(root)|` over the sum of the moduli of the terms of `P` at the root.
    pub residuals: Vec<f64>,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Horner evaluation of `P` and its first derivative.
fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Evaluation of a polynomial inside the root iteration.
trait Evaluator: Sync {
    fn degree(&self) -> usize;
    /// `P(z) / P'(z)`.
    fn newton_ratio(&self, z: Complex64) -> Complex64;
    /// `|P(z)|` over the sum of the moduli of its terms at `z`.
    fn residual(&self, z: Complex64) -> f64;
}

struct Coefficients<'a>(&'a [f64]);

impl Evaluator for Coefficients<'_> {
    fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn newton_ratio(&self, z: Complex64) -> Complex64 {
        let c = self.0;
        if z.norm() <= 1.0 {
            let (p, dp) = horner(c, z);
            p / dp
        } else {
            // through the reversed polynomial
            let n = self.degree() as f64;
            let w = z.inv();
            let rev: Vec<f64> = c.iter().rev().copied().collect();
            let (q, dq) = horner(&rev, w);
            z / (n - w * dq / q)
        }
    }

    fn residual(&self, z: Complex64) -> f64 {
        let abs: Vec<f64> = self.0.iter().map(|a| a.abs()).collect();
        let m = Complex64::new(z.norm(), 0.0);
        if z.norm() <= 1.0 {
            horner(self.0, z).0.norm() / horner(&abs, m).0.re
        } else {
            let rev: Vec<f64> = self.0.iter().rev().copied().collect();
            let rev_abs: Vec<f64> = abs.iter().rev().copied().collect();
            horner(&rev, z.inv()).0.norm() / horner(&rev_abs, m.inv()).0.re
        }
    }
}

/// `Z_T(z, b)` of a tree through the rooted recursion, carrying the
/// derivative in `z` and a logarithmic scale so that large trees neither
/// overflow nor lose the cancellation near the unit circle.
struct TreeEvaluator {
    b: f64,
    children: Vec<Vec<usize>>,
    postorder: Vec<usize>,
    root: usize,
}

#[derive(Clone, Copy)]
struct Jet {
    one: Complex64,
    zero: Complex64,
    d_one: Complex64,
    d_zero: Complex64,
    log_scale: f64,
}

impl TreeEvaluator {
    fn new(tree: &Graph, b: f64) -> Result<Self> {
        let rooted = RootedTree::from_graph(tree, 0)?;
        Ok(Self {
            b,
            postorder: rooted.postorder(),
            children: rooted.children,
            root: rooted.root,
        })
    }

    /// Returns `(Z, Z', log scale)` with the true values `e^{scale} * (Z, Z')`.
    fn eval(&self, z: Complex64) -> (Complex64, Complex64, f64) {
        let b = self.b;
        let zero = Complex64::new(0.0, 0.0);
        let unit = Complex64::new(1.0, 0.0);
        let mut jets: Vec<Option<Jet>> = vec![None; self.children.len()];
        for &u in &self.postorder {
            let (mut pa, mut dpa, mut pe, mut dpe) = (unit, zero, unit, zero);
            let mut log_scale = 0.0;
            for &c in &self.children[u] {
                let j = jets[c].take().expect("child before parent");
                let a = j.one + j.zero * b;
                let da = j.d_one + j.d_zero * b;
                let e = j.one * b + j.zero;
                let de = j.d_one * b + j.d_zero;
                dpa = dpa * a + pa * da;
                pa *= a;
                dpe = dpe * e + pe * de;
                pe *= e;
                log_scale += j.log_scale;
            }
            let mut jet = Jet {
                one: z * pa,
                zero: pe,
                d_one: pa + z * dpa,
                d_zero: dpe,
                log_scale,
            };
            let m = [jet.one, jet.zero, jet.d_one, jet.d_zero]
                .iter()
                .fold(0.0f64, |m, x| m.max(x.norm()));
            if m > 0.0 && m.is_finite() {
                jet.one /= m;
                jet.zero /= m;
                jet.d_one /= m;
                jet.d_zero /= m;
                jet.log_scale += m.ln();
            }
            jets[u] = Some(jet);
        }
        let j = jets[self.root].take().expect("root evaluated");
        (j.one + j.zero, j.d_one + j.d_zero, j.log_scale)
    }
}

impl Evaluator for TreeEvaluator {
    fn degree(&self) -> usize {
        self.children.len()
    }

    fn newton_ratio(&self, z: Complex64) -> Complex64 {
        let (p, dp, _) = self.eval(z);
        p / dp
    }

    fn residual(&self, z: Complex64) -> f64 {
        let (p, _, s) = self.eval(z);
        let (q, _, t) = self.eval(Complex64::new(z.norm(), 0.0));
        (p.norm().ln() + s - q.norm().ln() - t).exp()
    }
}

/// Simultaneous Aberth iteration from a perturbed circle of the given radius.
fn aberth<E: Evaluator>(e: &E, radius: f64) -> (Vec<Complex64>, bool) {
    let m = e.degree();
    let mut z: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(radius, (2.0 * PI * k as f64 + 0.4) / m as f64 + 0.1 / (k as f64 + 2.0)))
        .collect();
    let mut converged = vec![false; m];
    for _ in 0..MAX_SWEEPS {
        if converged.iter().all(|&c| c) {
            break;
        }
        for i in 0..m {
            if converged[i] {
                continue;
            }
            let ratio = e.newton_ratio(z[i]);
            let repulsion: Complex64 = (0..m).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                if step.norm() <= 1e-15 * z[i].norm().max(1e-300) {
                    converged[i] = true;
                }
            } else {
                converged[i] = true;
            }
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..POLISH_STEPS {
            let step = e.newton_ratio(*zi);
            if step.re.is_finite() && step.im.is_finite() {
                let cand = *zi - step;
                if e.residual(cand) <= e.residual(*zi) {
                    *zi = cand;
                }
            }
        }
    }
    let done = converged.iter().all(|&c| c);
    (z, done)
}

fn finish<E: Evaluator>(e: &E, mut roots: Vec<Complex64>, converged: bool, extra: Vec<Complex64>) -> Result<RootSet> {
    let worst = roots.iter().map(|&r| e.residual(r)).fold(0.0, f64::max);
    if !converged && worst > RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "root iteration did not converge in {MAX_SWEEPS} sweeps (worst residual {worst:e})"
        )));
    }
    let mut all = extra;
    all.append(&mut roots);
    let residuals = all
        .iter()
        .map(|&r| if r.norm_sqr() == 0.0 { 0.0 } else { e.residual(r) })
        .collect();
    Ok(RootSet { roots: all, residuals })
}

/// `k`-th derivative coefficients.
fn derivative(c: &[f64], k: usize) -> Vec<f64> {
    (k..c.len())
        .map(|i| c[i] * ((i - k + 1)..=i).map(|j| j as f64).product::<f64>())
        .collect()
}

/// All roots with multiplicity by simultaneous Aberth iteration on the coefficients.
pub fn polynomial_roots(poly: &XiPolynomial) -> Result<RootSet> {
    let mut c = poly.coeffs.clone();
    while c.len() > 1 && *c.last().expect("non-empty") == 0.0 {
        c.pop();
    }
    if c.len() < 2 {
        return Err(Error::Validation("polynomial has degree 0".into()));
    }
    if c.iter().any(|a| !a.is_finite()) {
        return Err(Error::Validation("non-finite coefficient".into()));
    }
    // zeros at the origin are split off
    let zero_roots = c.iter().take_while(|&&a| a == 0.0).count();
    let reduced = Coefficients(&c[zero_roots..]);
    let origin = vec![Complex64::new(0.0, 0.0); zero_roots];
    let m = reduced.degree();
    if m == 0 {
        return Ok(RootSet {
            residuals: vec![0.0; zero_roots],
            roots: origin,
        });
    }
    let radius = (reduced.0[0].abs() / reduced.0[m].abs()).powf(1.0 / m as f64);
    let (mut z, converged) = aberth(&reduced, radius);
    refine_clusters(reduced.0, &mut z);
    finish(&reduced, z, converged, origin)
}

/// Roots of `Z_T(., b)` for a tree, evaluated through the tree recursion.
pub fn tree_roots(tree: &Graph, b: f64) -> Result<RootSet> {
    if tree.vertex_count() == 0 {
        return Err(Error::Validation("empty tree".into()));
    }
    let e = TreeEvaluator::new(tree, b)?;
    let (z, converged) = aberth(&e, 1.0);
    finish(&e, z, converged, Vec::new())
}

/// Replaces tight groups of `k` roots by a single root of multiplicity `k`,
/// found by Newton's method on `P^{(k-1)}`, when that lowers the residual.
fn refine_clusters(c: &[f64], z: &mut [Complex64]) {
    let e = Coefficients(c);
    let m = z.len();
    let mut seen = vec![false; m];
    for i in 0..m {
        if seen[i] {
            continue;
        }
        let members: Vec<usize> = (i..m)
            .filter(|&j| !seen[j] && (z[j] - z[i]).norm() <= CLUSTER_RADIUS * z[i].norm().max(1.0))
            .collect();
        for &j in &members {
            seen[j] = true;
        }
        let k = members.len();
        if k < 2 {
            continue;
        }
        let centre = members.iter().map(|&j| z[j]).sum::<Complex64>() / k as f64;
        let dc = derivative(c, k - 1);
        let mut w = centre;
        for _ in 0..50 {
            let (p, dp) = horner(&dc, w);
            if dp.norm_sqr() == 0.0 {
                break;
            }
            let step = p / dp;
            w -= step;
            if step.norm() <= 1e-16 * w.norm().max(1.0) {
                break;
            }
        }
        let before = members.iter().map(|&j| e.residual(z[j])).fold(0.0, f64::max);
        if (w - centre).norm() <= CLUSTER_RADIUS && e.residual(w) <= before {
            for &j in &members {
                z[j] = w;
            }
        }
    }
}

/// `max ||root| - 1|`.
pub fn lee_yang_deviation(rs: &RootSet) -> f64 {
    rs.roots.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
}

/// Roots of `Z_G(., b)`: trees go through the tree recursion, other graphs
/// through enumerated coefficients when `n <= cap`.
pub fn graph_roots(g: &Graph, b: f64, cap: usize) -> Result<RootSet> {
    if g.vertex_count() > 0 && g.is_tree() {
        tree_roots(g, b)
    } else if g.vertex_count() <= cap {
        polynomial_roots(&xi_polynomial(g, b, cap)?)
    } else {
        Err(Error::Resource(format!(
            "graph with {} vertices exceeds the enumeration cap of {cap}",
            g.vertex_count()
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtlasRoot {
    pub graph_id: String,
    pub root: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atlas {
    pub b: f64,
    pub roots: Vec<AtlasRoot>,
    /// `(bin centre, count)` over `(-pi, pi]`.
    pub histogram: Vec<(f64, usize)>,
    pub theta_b: Option<f64>,
    /// Roots with `|Arg| < theta_b - 1e-6`.
    pub flagged: Vec<AtlasRoot>,
    pub lee_yang_max: f64,
    pub max_residual: f64,
}

/// Root dump and argument histogram for a family of graphs.
///
/// With `d` given and `b` in `(b_c, 1)`, roots inside the zero-free arc are flagged.
pub fn zero_atlas(family: &[(String, Graph)], b: f64, bins: usize, d: Option<usize>, cap: usize) -> Result<Atlas> {
    if bins == 0 {
        return Err(Error::Validation("bins must be positive".into()));
    }
    let sets: Vec<(String, RootSet)> = family
        .par_iter()
        .map(|(id, g)| Ok((id.clone(), graph_roots(g, b, cap)?)))
        .collect::<Result<_>>()?;
    let theta = match d {
        Some(d) if b > critical_b(d) && b < 1.0 => Some(theta_b(d, b)?),
        _ => None,
    };
    let mut histogram: Vec<(f64, usize)> = (0..bins)
        .map(|k| (-PI + (k as f64 + 0.5) * 2.0 * PI / bins as f64, 0))
        .collect();
    let mut roots = Vec::new();
    let mut flagged = Vec::new();
    let mut lee_yang_max = 0.0f64;
    let mut max_residual = 0.0f64;
    for (id, set) in sets {
        lee_yang_max = lee_yang_max.max(lee_yang_deviation(&set));
        max_residual = max_residual.max(set.max_residual());
        for &z in &set.roots {
            let snapped = if (z.norm() - 1.0).abs() <= SNAP_TOL {
                z / z.norm()
            } else {
                z
            };
            let arg = snapped.arg();
            let idx = (((arg + PI) / (2.0 * PI)) * bins as f64).ceil() as usize;
            histogram[idx.clamp(1, bins) - 1].1 += 1;
            let entry = AtlasRoot {
                graph_id: id.clone(),
                root: z,
            };
            if theta.is_some_and(|t| arg.abs() < t - FLAG_MARGIN) {
                flagged.push(entry.clone());
            }
            roots.push(entry);
        }
    }
    Ok(Atlas {
        b,
        roots,
        histogram,
        theta_b: theta,
        flagged,
        lee_yang_max,
        max_residual,
    })
}

impl Atlas {
    /// `graph_id,re,im,modulus,arg`.
    pub fn roots_csv(&self) -> String {
        let mut out = String::from("graph_id,re,im,modulus,arg\n");
        for r in &self.roots {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.graph_id,
                r.root.re,
                r.root.im,
                r.root.norm(),
                r.root.arg()
            );
        }
        out
    }

    /// `bin_center,count`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_center,count\n");
        for (centre, count) in &self.histogram {
            let _ = writeln!(out, "{centre},{count}");
        }
        out
    }

    /// Number of roots whose argument falls strictly inside `(-limit, limit)`.
    pub fn count_within(&self, limit: f64) -> usize {
        self.roots.iter().filter(|r| r.root.arg().abs() < limit).count()
    }
}

/// Cayley trees `T_{1..=kmax, d}` labelled `cayley_d{d}_k{k}`.
pub fn cayley_family(d: usize, kmax: usize) -> Result<Vec<(String, Graph)>> {
    (1..=kmax)
        .map(|k| Ok((format!("cayley_d{d}_k{k}"), crate::graph::cayley_tree(k, d)?.graph)))
        .collect()
}

pub const DEFAULT_ATLAS_CAP: usize = DEFAULT_CAP;
