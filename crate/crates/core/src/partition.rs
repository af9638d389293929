//! Exact Ising partition functions by subset enumeration, their ratios, and the
//! tree recursion for ratios.
//!
//! The partition function of a graph with per-vertex fields `x_v` and edge
//! interaction `b` is `Z = sum_U prod_{u in U} x_u * b^{|cut(U)|}`, the sum
//! running over vertex subsets compatible with the boundary condition.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BoundaryCondition, Graph};
use crate::sphere::SpherePoint;

/// Default limit on the number of free vertices for brute-force enumeration.
pub const DEFAULT_CAP: usize = 24;

/// Relative size below which a sum is treated as cancelled to zero.
pub const CANCELLATION_TOL: f64 = 1e-14;

const CHUNK_BITS: u32 = 14;
const PARALLEL_MIN_FREE: usize = 16;
const RESYNC_EVERY: usize = 4096;

/// Edge interaction, external fields and enumeration limits.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub b: f64,
    /// Global field used at every vertex without an override.
    pub xi: Complex64,
    /// Nonnegative factor applied to every field.
    pub scale: f64,
    pub overrides: BTreeMap<usize, Complex64>,
    /// Maximum number of free vertices for enumeration.
    pub cap: usize,
}

impl ModelParams {
    pub fn new(xi: Complex64, b: f64) -> Self {
        Self {
            b,
            xi,
            scale: 1.0,
            overrides: BTreeMap::new(),
            cap: DEFAULT_CAP,
        }
    }

    pub fn real(xi: f64, b: f64) -> Self {
        Self::new(Complex64::new(xi, 0.0), b)
    }

    /// `xi = e^{i angle}`.
    pub fn on_circle(angle: f64, b: f64) -> Self {
        Self::new(Complex64::from_polar(1.0, angle), b)
    }

    pub fn with_scale(mut self, r: f64) -> Self {
        self.scale = r;
        self
    }

    pub fn with_field(mut self, v: usize, field: Complex64) -> Self {
        self.overrides.insert(v, field);
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    /// Effective field at vertex `v`.
    pub fn field(&self, v: usize) -> Complex64 {
        self.overrides.get(&v).copied().unwrap_or(self.xi) * self.scale
    }

    fn check(&self) -> Result<()> {
        if !self.b.is_finite() || !self.xi.re.is_finite() || !self.xi.im.is_finite() {
            return Err(Error::Validation("b and xi must be finite".into()));
        }
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(Error::Validation(format!(
                "scale must be finite and >= 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// Physical parametrization: coupling `J`, field `h`, temperature `T > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub coupling: f64,
    pub field: f64,
    pub temperature: f64,
}

/// Result of [`physical_to_model`]. The spin-sum partition function equals
/// `exp(edge_log_weight * |E| + vertex_log_weight * |V|) * Z(xi, b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelMapping {
    pub xi: f64,
    pub b: f64,
    /// `J / T`, contributed once per edge.
    pub edge_log_weight: f64,
    /// `h / T`, contributed once per vertex.
    pub vertex_log_weight: f64,
}

impl ModelMapping {
    pub fn log_prefactor(&self, g: &Graph) -> f64 {
        self.edge_log_weight * g.edge_count() as f64 + self.vertex_log_weight * g.vertex_count() as f64
    }
}

pub fn physical_to_model(p: PhysicalParams) -> Result<ModelMapping> {
    if !(p.temperature > 0.0) {
        return Err(Error::Validation(format!(
            "temperature must be > 0, got {}",
            p.temperature
        )));
    }
    Ok(ModelMapping {
        xi: (-2.0 * p.field / p.temperature).exp(),
        b: (-2.0 * p.coupling / p.temperature).exp(),
        edge_log_weight: p.coupling / p.temperature,
        vertex_log_weight: p.field / p.temperature,
    })
}

/// `Z_G(., b)` as a polynomial in the uniform field, lowest degree first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiPolynomial {
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl XiPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("polynomial serialization")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("polynomial JSON: {e}")))
    }
}

/// A complex sum together with the sum of the moduli of its terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledSum {
    pub value: Complex64,
    pub scale: f64,
}

impl ScaledSum {
    const ZERO: ScaledSum = ScaledSum {
        value: Complex64 { re: 0.0, im: 0.0 },
        scale: 0.0,
    };

    /// True when the sum is empty or cancelled below [`CANCELLATION_TOL`].
    pub fn is_negligible(&self) -> bool {
        self.scale == 0.0 || self.value.norm() <= CANCELLATION_TOL * self.scale
    }
}

/// Enumeration state for one boundary-conditioned graph.
struct Enumeration<'a> {
    g: &'a Graph,
    free: Vec<usize>,
    base_in: Vec<bool>,
    base_cut: usize,
    fixed_weight: Complex64,
}

impl<'a> Enumeration<'a> {
    fn new(g: &'a Graph, params: &ModelParams, tau: &BoundaryCondition) -> Result<Option<Self>> {
        params.check()?;
        tau.validate_for(g.vertex_count())?;
        if tau.is_infeasible() {
            return Ok(None);
        }
        let free: Vec<usize> = (0..g.vertex_count()).filter(|&v| !tau.is_fixed(v)).collect();
        if free.len() > params.cap {
            return Err(Error::Resource(format!(
                "{} free vertices exceed the enumeration cap of {}",
                free.len(),
                params.cap
            )));
        }
        let mut base_in = vec![false; g.vertex_count()];
        let mut fixed_weight = Complex64::new(1.0, 0.0);
        for (v, s) in tau.iter() {
            if s {
                base_in[v] = true;
                fixed_weight *= params.field(v);
            }
        }
        let base_cut = g.edges().iter().filter(|&&(u, v)| base_in[u] != base_in[v]).count();
        Ok(Some(Self {
            g,
            free,
            base_in,
            base_cut,
            fixed_weight,
        }))
    }

    fn chunks(&self) -> Vec<(u64, u64)> {
        let total = 1u64 << self.free.len();
        let size = 1u64 << CHUNK_BITS.min(self.free.len() as u32);
        (0..total / size).map(|c| (c * size, (c + 1) * size)).collect()
    }

    /// Walks the Gray-code indices `start..end`, calling `visit(walker)` at each subset.
    fn walk<F: FnMut(&Walker)>(&self, start: u64, end: u64, mut visit: F) {
        let mut w = Walker::new(self, start ^ (start >> 1));
        visit(&w);
        for i in start + 1..end {
            w.toggle(self, i.trailing_zeros() as usize);
            visit(&w);
        }
    }

    fn uniform_field(&self, params: &ModelParams) -> Option<Complex64> {
        let first = self.free.first().map(|&v| params.field(v))?;
        self.free.iter().all(|&v| params.field(v) == first).then_some(first)
    }

    /// `counts[k * (m + 1) + c]` = number of compatible subsets with `k` free
    /// members and cut size `c`.
    fn count_table(&self) -> Vec<u64> {
        let width = self.g.edge_count() + 1;
        let len = (self.free.len() + 1) * width;
        let run = |(start, end): (u64, u64)| {
            let mut t = vec![0u64; len];
            self.walk(start, end, |w| t[w.k * width + w.cut] += 1);
            t
        };
        let chunks = self.chunks();
        let tables: Vec<Vec<u64>> = if self.free.len() >= PARALLEL_MIN_FREE {
            chunks.into_par_iter().map(run).collect()
        } else {
            chunks.into_iter().map(run).collect()
        };
        let mut total = vec![0u64; len];
        for t in tables {
            for (a, b) in total.iter_mut().zip(t) {
                *a += b;
            }
        }
        total
    }

    fn sum(&self, params: &ModelParams) -> ScaledSum {
        let b = params.b;
        let m = self.g.edge_count();
        let b_pow: Vec<f64> = (0..=m)
            .scan(1.0, |acc, _| {
                let cur = *acc;
                *acc *= b;
                Some(cur)
            })
            .collect();
        let fw = self.fixed_weight;
        if let Some(x) = self
            .uniform_field(params)
            .or_else(|| self.free.is_empty().then_some(Complex64::new(1.0, 0.0)))
        {
            let counts = self.count_table();
            let width = m + 1;
            let mut value = Complex64::new(0.0, 0.0);
            let mut scale = 0.0;
            let mut x_pow = Complex64::new(1.0, 0.0);
            for k in 0..=self.free.len() {
                let mut row = 0.0;
                let mut row_abs = 0.0;
                for c in 0..=m {
                    let n = counts[k * width + c];
                    if n != 0 {
                        row += n as f64 * b_pow[c];
                        row_abs += n as f64 * b_pow[c].abs();
                    }
                }
                value += x_pow * row;
                scale += x_pow.norm() * row_abs;
                x_pow *= x;
            }
            return ScaledSum {
                value: value * fw,
                scale: scale * fw.norm(),
            };
        }
        let fields: Vec<Complex64> = self.free.iter().map(|&v| params.field(v)).collect();
        let run = |(start, end): (u64, u64)| {
            let mut acc = ScaledSum::ZERO;
            let mut product = FieldProduct::default();
            let mut synced = false;
            let mut since = 0usize;
            self.walk(start, end, |w| {
                if !synced || since >= RESYNC_EVERY {
                    product = FieldProduct::from_walker(w, &self.free, &fields);
                    synced = true;
                    since = 0;
                } else {
                    product.apply(w.last_toggled.expect("toggled"), w, &self.free, &fields);
                }
                since += 1;
                if product.zeros == 0 {
                    let term = product.value * b_pow[w.cut];
                    acc.value += term;
                    acc.scale += term.norm();
                }
            });
            acc
        };
        let chunks = self.chunks();
        let parts: Vec<ScaledSum> = if self.free.len() >= PARALLEL_MIN_FREE {
            chunks.into_par_iter().map(run).collect()
        } else {
            chunks.into_iter().map(run).collect()
        };
        let total = parts.into_iter().fold(ScaledSum::ZERO, |a, p| ScaledSum {
            value: a.value + p.value,
            scale: a.scale + p.scale,
        });
        ScaledSum {
            value: total.value * fw,
            scale: total.scale * fw.norm(),
        }
    }
}

struct Walker {
    in_u: Vec<bool>,
    bits: Vec<bool>,
    k: usize,
    cut: usize,
    last_toggled: Option<usize>,
}

impl Walker {
    fn new(e: &Enumeration<'_>, mask: u64) -> Self {
        let mut in_u = e.base_in.clone();
        let mut bits = vec![false; e.free.len()];
        let mut k = 0;
        for (j, &v) in e.free.iter().enumerate() {
            if mask >> j & 1 == 1 {
                in_u[v] = true;
                bits[j] = true;
                k += 1;
            }
        }
        let cut = if k == 0 {
            e.base_cut
        } else {
            e.g.edges().iter().filter(|&&(u, v)| in_u[u] != in_u[v]).count()
        };
        Self {
            in_u,
            bits,
            k,
            cut,
            last_toggled: None,
        }
    }

    fn toggle(&mut self, e: &Enumeration<'_>, j: usize) {
        let v = e.free[j];
        let (inside, outside) =
            e.g.neighbors(v).iter().fold(
                (0usize, 0usize),
                |(i, o), &w| {
                    if self.in_u[w] {
                        (i + 1, o)
                    } else {
                        (i, o + 1)
                    }
                },
            );
        if self.bits[j] {
            self.cut = self.cut + inside - outside;
            self.k -= 1;
        } else {
            self.cut = self.cut + outside - inside;
            self.k += 1;
        }
        self.bits[j] = !self.bits[j];
        self.in_u[v] = self.bits[j];
        self.last_toggled = Some(j);
    }
}

/// Running product of the fields in `U`, tracking zero factors separately.
#[derive(Clone, Copy, Debug)]
struct FieldProduct {
    value: Complex64,
    zeros: usize,
}

impl Default for FieldProduct {
    fn default() -> Self {
        Self {
            value: Complex64::new(1.0, 0.0),
            zeros: 0,
        }
    }
}

impl FieldProduct {
    fn from_walker(w: &Walker, _free: &[usize], fields: &[Complex64]) -> Self {
        let mut p = Self::default();
        for (j, &on) in w.bits.iter().enumerate() {
            if on {
                p.include(fields[j]);
            }
        }
        p
    }

    fn include(&mut self, f: Complex64) {
        if f.norm_sqr() == 0.0 {
            self.zeros += 1;
        } else {
            self.value *= f;
        }
    }

    fn apply(&mut self, j: usize, w: &Walker, _free: &[usize], fields: &[Complex64]) {
        let f = fields[j];
        if w.bits[j] {
            self.include(f);
        } else if f.norm_sqr() == 0.0 {
            self.zeros -= 1;
        } else {
            self.value /= f;
        }
    }
}

/// Boundary-conditioned partition function with the scale of its terms.
pub fn z_scaled(g: &Graph, params: &ModelParams, tau: &BoundaryCondition) -> Result<ScaledSum> {
    Ok(match Enumeration::new(g, params, tau)? {
        None => ScaledSum::ZERO,
        Some(e) => e.sum(params),
    })
}

/// Exact `Z_{G,tau}` by enumeration over the free vertices.
pub fn z_exact(g: &Graph, params: &ModelParams, tau: &BoundaryCondition) -> Result<Complex64> {
    z_scaled(g, params, tau).map(|s| s.value)
}

/// Coefficients `a_k = sum_{|U| = k} b^{|cut(U)|}` of `Z_G(., b)`.
pub fn xi_polynomial(g: &Graph, b: f64, cap: usize) -> Result<XiPolynomial> {
    let params = ModelParams::real(1.0, b).with_cap(cap);
    let e = Enumeration::new(g, &params, &BoundaryCondition::new())?.expect("empty condition is feasible");
    let counts = e.count_table();
    let width = g.edge_count() + 1;
    let coeffs = (0..=g.vertex_count())
        .map(|k| {
            let mut acc = 0.0;
            let mut bp = 1.0;
            for c in 0..width {
                let n = counts[k * width + c];
                if n != 0 {
                    acc += n as f64 * bp;
                }
                bp *= b;
            }
            acc
        })
        .collect();
    Ok(XiPolynomial { b, coeffs })
}

/// `Z_G(., b)` for a tree of any size, by the rooted recursion on polynomials.
pub fn xi_polynomial_tree(tree: &Graph, b: f64) -> Result<XiPolynomial> {
    if !tree.is_tree() {
        return Err(Error::Validation("xi_polynomial_tree needs a tree".into()));
    }
    let rooted = RootedTree::from_graph(tree, 0)?;
    let mut polys: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; tree.vertex_count()];
    for &u in rooted.postorder().iter() {
        let mut in_poly = vec![0.0, 1.0];
        let mut out_poly = vec![1.0];
        for &c in &rooted.children[u] {
            let (p1, p0) = polys[c].take().expect("child before parent");
            let len = p1.len().max(p0.len());
            let get = |p: &[f64], i: usize| p.get(i).copied().unwrap_or(0.0);
            let a: Vec<f64> = (0..len).map(|i| get(&p1, i) + b * get(&p0, i)).collect();
            let e: Vec<f64> = (0..len).map(|i| b * get(&p1, i) + get(&p0, i)).collect();
            in_poly = poly_mul(&in_poly, &a);
            out_poly = poly_mul(&out_poly, &e);
        }
        polys[u] = Some((in_poly, out_poly));
    }
    let (p1, p0) = polys[rooted.root].take().expect("root evaluated");
    let n = tree.vertex_count();
    let coeffs = (0..=n)
        .map(|i| p1.get(i).copied().unwrap_or(0.0) + p0.get(i).copied().unwrap_or(0.0))
        .collect();
    Ok(XiPolynomial { b, coeffs })
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `R = Z_{tau_{v,1}} / Z_{tau_{v,0}}` by direct enumeration.
///
/// Returns `Infinity` when the denominator vanishes and an indeterminate-ratio
/// error when numerator and denominator both cancel to zero.
pub fn ratio_direct(g: &Graph, tau: &BoundaryCondition, v: usize, params: &ModelParams) -> Result<SpherePoint> {
    if v >= g.vertex_count() {
        return Err(Error::Validation(format!("vertex {v} outside 0..{}", g.vertex_count())));
    }
    let num = z_scaled(g, params, &tau.with(v, true))?;
    let den = z_scaled(g, params, &tau.with(v, false))?;
    match (num.is_negligible(), den.is_negligible()) {
        (true, true) => Err(Error::IndeterminateRatio(format!(
            "both Z(v=1) and Z(v=0) vanish at vertex {v} (|num| = {:.3e}, |den| = {:.3e})",
            num.value.norm(),
            den.value.norm()
        ))),
        (false, true) => Ok(SpherePoint::Infinity),
        _ => Ok(SpherePoint::from_complex(num.value / den.value)),
    }
}

/// A tree with a designated root, stored as child lists.
#[derive(Clone, Debug)]
pub struct RootedTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl RootedTree {
    /// Orients a tree graph away from `root`; children keep adjacency order.
    pub fn from_graph(g: &Graph, root: usize) -> Result<Self> {
        if root >= g.vertex_count() {
            return Err(Error::Validation(format!(
                "root {root} outside 0..{}",
                g.vertex_count()
            )));
        }
        if !g.is_tree() {
            return Err(Error::Validation("graph is not a tree".into()));
        }
        let n = g.vertex_count();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    children[u].push(w);
                    stack.push(w);
                }
            }
        }
        Ok(Self { root, parent, children })
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    /// Vertices with every child before its parent.
    pub fn postorder(&self) -> Vec<usize> {
        let mut pre = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            pre.push(u);
            stack.extend(self.children[u].iter().rev());
        }
        pre.reverse();
        pre
    }
}

/// Homogeneous coordinates `[Z(v=1) : Z(v=0)]` of a subtree ratio.
#[derive(Clone, Copy, Debug)]
struct Pair {
    one: Complex64,
    zero: Complex64,
}

impl Pair {
    fn normalized(self) -> Self {
        let m = self.one.norm().max(self.zero.norm());
        if m == 0.0 || !m.is_finite() {
            self
        } else {
            Pair {
                one: self.one / m,
                zero: self.zero / m,
            }
        }
    }
}

fn snap(value: Complex64, scale: f64) -> Complex64 {
    if value.norm() <= CANCELLATION_TOL * scale {
        Complex64::new(0.0, 0.0)
    } else {
        value
    }
}

/// Root ratio of a rooted tree using `R = x_v prod (R_i + b) / (b R_i + 1)` in
/// homogeneous form.
///
/// `children(u)` lists the children of `u`, `field(u)` its external field and
/// `fixed(u)` its boundary value. Traversal keeps only the current root-to-leaf
/// frontier in memory.
pub fn evaluate_rooted<C, F, X>(root: usize, b: f64, children: C, field: F, fixed: X) -> Result<SpherePoint>
where
    C: Fn(usize) -> Vec<usize>,
    F: Fn(usize) -> Complex64,
    X: Fn(usize) -> Option<bool>,
{
    struct Frame {
        node: usize,
        pending: Vec<usize>,
        one: Complex64,
        zero: Complex64,
    }
    let open = |node: usize| {
        let mut pending = children(node);
        pending.reverse();
        Frame {
            node,
            pending,
            one: Complex64::new(1.0, 0.0),
            zero: Complex64::new(1.0, 0.0),
        }
    };
    let mut stack = vec![open(root)];
    loop {
        let top = stack.last_mut().expect("non-empty frontier");
        if let Some(c) = top.pending.pop() {
            stack.push(open(c));
            continue;
        }
        let frame = stack.pop().expect("frame");
        let u = frame.node;
        let mut pair = Pair {
            one: field(u) * frame.one,
            zero: frame.zero,
        };
        match fixed(u) {
            Some(true) => pair.zero = Complex64::new(0.0, 0.0),
            Some(false) => pair.one = Complex64::new(0.0, 0.0),
            None => {}
        }
        if pair.one.norm_sqr() == 0.0 && pair.zero.norm_sqr() == 0.0 {
            return Err(Error::IndeterminateRatio(format!(
                "Z(v=1) and Z(v=0) both vanish for the subtree rooted at {u}"
            )));
        }
        let pair = pair.normalized();
        match stack.last_mut() {
            None => {
                return Ok(SpherePoint::from_ratio(pair.one, pair.zero).expect("non-degenerate pair"));
            }
            Some(parent) => {
                let a = snap(pair.one + pair.zero * b, pair.one.norm() + b.abs() * pair.zero.norm());
                let e = snap(pair.one * b + pair.zero, b.abs() * pair.one.norm() + pair.zero.norm());
                parent.one *= a;
                parent.zero *= e;
                // keep the running products in range
                let m = parent.one.norm().max(parent.zero.norm());
                if m > 1e100 || (m < 1e-100 && m > 0.0) {
                    parent.one /= m;
                    parent.zero /= m;
                }
            }
        }
    }
}

/// Ratio at `v` of a tree graph via the tree recursion.
pub fn ratio_tree(t: &Graph, tau: &BoundaryCondition, v: usize, params: &ModelParams) -> Result<SpherePoint> {
    params.check()?;
    tau.validate_for(t.vertex_count())?;
    if tau.is_infeasible() {
        return Err(Error::IndeterminateRatio("infeasible boundary condition".into()));
    }
    let rooted = RootedTree::from_graph(t, v)?;
    evaluate_rooted(
        v,
        params.b,
        |u| rooted.children[u].clone(),
        |u| params.field(u),
        |u| tau.get(u),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::cayley_tree;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    /// Plain subset sum, independent of the Gray-code walk.
    fn naive_z(g: &Graph, params: &ModelParams, tau: &BoundaryCondition) -> Complex64 {
        let n = g.vertex_count();
        let mut total = c(0.0, 0.0);
        for mask in 0u32..(1 << n) {
            let inside = |v: usize| mask >> v & 1 == 1;
            if tau.is_infeasible() || tau.iter().any(|(v, s)| inside(v) != s) {
                continue;
            }
            let mut w = c(1.0, 0.0);
            for v in 0..n {
                if inside(v) {
                    w *= params.field(v);
                }
            }
            let cut = g.edges().iter().filter(|&&(u, v)| inside(u) != inside(v)).count();
            total += w * params.b.powi(cut as i32);
        }
        total
    }

    #[test]
    fn z_examples() {
        let xi = c(0.3, -0.7);
        let b = 0.37;
        let k1 = Graph::empty(1);
        let p = ModelParams::new(xi, b);
        let none = BoundaryCondition::new();
        assert!(close(z_exact(&k1, &p, &none).unwrap(), xi + 1.0, 1e-15));
        let k2 = Graph::complete(2);
        let expect = 1.0 + xi * 2.0 * b + xi * xi;
        assert!(close(z_exact(&k2, &p, &none).unwrap(), expect, 1e-15));
        let fixed = BoundaryCondition::from_pairs(&[(0, true)]);
        assert!(close(z_exact(&k1, &p, &fixed).unwrap(), xi, 1e-15));
        let conflict = fixed.with(0, false);
        assert_eq!(z_exact(&k1, &p, &conflict).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn cap_is_enforced() {
        let g = Graph::empty(6);
        let p = ModelParams::real(1.0, 0.5).with_cap(5);
        let err = z_exact(&g, &p, &BoundaryCondition::new()).unwrap_err();
        assert!(matches!(err, Error::Resource(ref m) if m.contains("6 free")), "{err}");
        let tau = BoundaryCondition::from_pairs(&[(0, false)]);
        assert!(z_exact(&g, &p, &tau).is_ok());
    }

    #[test]
    fn polynomial_examples() {
        let b = 0.4;
        assert_eq!(
            xi_polynomial(&Graph::complete(2), b, 24).unwrap().coeffs,
            vec![1.0, 2.0 * b, 1.0]
        );
        let k3 = xi_polynomial(&Graph::complete(3), b, 24).unwrap();
        for (got, want) in k3.coeffs.iter().zip([1.0, 3.0 * b * b, 3.0 * b * b, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        // star with two leaves: enumerated by hand
        let t1 = xi_polynomial(&cayley_tree(1, 2).unwrap().graph, b, 24).unwrap();
        let mid = b * b + 2.0 * b;
        for (got, want) in t1.coeffs.iter().zip([1.0, mid, mid, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn gray_walk_matches_naive_sum() {
        let g = Graph::new(7, &[(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5), (5, 6), (2, 6)]).unwrap();
        let tau = BoundaryCondition::from_pairs(&[(5, true), (1, false)]);
        let uniform = ModelParams::new(c(0.2, 0.9), 1.7);
        assert!(close(
            z_exact(&g, &uniform, &tau).unwrap(),
            naive_z(&g, &uniform, &tau),
            1e-13
        ));
        let mixed = ModelParams::new(c(0.2, 0.9), 0.6)
            .with_field(0, c(-1.0, 0.5))
            .with_field(3, c(0.0, 0.0))
            .with_field(5, c(2.0, 0.0))
            .with_scale(1.3);
        assert!(close(
            z_exact(&g, &mixed, &tau).unwrap(),
            naive_z(&g, &mixed, &tau),
            1e-13
        ));
        let none = BoundaryCondition::new();
        assert!(close(
            z_exact(&g, &mixed, &none).unwrap(),
            naive_z(&g, &mixed, &none),
            1e-13
        ));
    }

    #[test]
    fn large_enumeration_uses_chunks() {
        // 18 free vertices runs the parallel path; compare against the tree polynomial
        let g = Graph::path(18);
        let poly = xi_polynomial(&g, 0.3, 24).unwrap();
        let tree = xi_polynomial_tree(&g, 0.3).unwrap();
        for (a, b) in poly.coeffs.iter().zip(&tree.coeffs) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let p = ModelParams::new(c(0.1, 0.8), 0.3).with_field(4, c(0.5, 0.5));
        let direct = z_exact(&g, &p, &BoundaryCondition::new()).unwrap();
        let split = ratio_tree(&g, &BoundaryCondition::new(), 0, &p).unwrap();
        let z1 = z_exact(&g, &p, &BoundaryCondition::from_pairs(&[(0, true)])).unwrap();
        let z0 = z_exact(&g, &p, &BoundaryCondition::from_pairs(&[(0, false)])).unwrap();
        assert!(close(z1 + z0, direct, 1e-12));
        assert!(close(split.finite().unwrap(), z1 / z0, 1e-10));
    }

    #[test]
    fn ratio_examples() {
        let xi = c(0.6, 0.8);
        let b = 0.45;
        let p = ModelParams::new(xi, b);
        let none = BoundaryCondition::new();
        let k1 = Graph::empty(1);
        assert_eq!(ratio_direct(&k1, &none, 0, &p).unwrap(), SpherePoint::Finite(xi));
        let k2 = Graph::complete(2);
        let r = ratio_direct(&k2, &none, 0, &p).unwrap().finite().unwrap();
        assert!(close(r, xi * (xi + b) / (xi * b + 1.0), 1e-14));
        let zero = BoundaryCondition::from_pairs(&[(0, false)]);
        assert_eq!(ratio_direct(&k1, &zero, 0, &p).unwrap(), SpherePoint::ZERO);
        let one = BoundaryCondition::from_pairs(&[(0, true)]);
        assert_eq!(ratio_direct(&k1, &one, 0, &p).unwrap(), SpherePoint::Infinity);
    }

    #[test]
    fn ratio_indeterminate() {
        // xi = -1 on a single vertex fixed to 1: Z(v=1) = -1, fine; but a fixed-1
        // vertex with zero field makes both sides vanish.
        let k1 = Graph::empty(1);
        let p = ModelParams::real(1.0, 0.5).with_field(0, c(0.0, 0.0));
        let one = BoundaryCondition::from_pairs(&[(0, true)]);
        assert!(matches!(
            ratio_direct(&k1, &one, 0, &p),
            Err(Error::IndeterminateRatio(_))
        ));
        assert!(matches!(
            ratio_tree(&k1, &one, 0, &p),
            Err(Error::IndeterminateRatio(_))
        ));
    }

    #[test]
    fn tree_recursion_examples() {
        let xi = Complex64::from_polar(1.0, 0.7);
        let p = ModelParams::new(xi, 0.6);
        let none = BoundaryCondition::new();
        for d in 2..=3 {
            let t0 = cayley_tree(0, d).unwrap();
            assert_eq!(ratio_tree(&t0.graph, &none, 0, &p).unwrap(), SpherePoint::Finite(xi));
            let mut r = xi;
            for k in 1..=4 {
                r = xi * ((r + 0.6) / (r * 0.6 + 1.0)).powu(d as u32);
                let t = cayley_tree(k, d).unwrap();
                let got = ratio_tree(&t.graph, &none, t.root, &p).unwrap();
                assert!(got.chordal_distance(&SpherePoint::Finite(r)) < 1e-12);
            }
        }
    }

    #[test]
    fn tree_rejects_non_tree() {
        let p = ModelParams::real(1.0, 0.5);
        assert!(ratio_tree(&Graph::cycle(4), &BoundaryCondition::new(), 0, &p).is_err());
    }

    #[test]
    fn physical_mapping() {
        let m = physical_to_model(PhysicalParams {
            coupling: 0.7,
            field: 0.0,
            temperature: 1.3,
        })
        .unwrap();
        assert_eq!(m.xi, 1.0);
        assert!(m.b < 1.0);
        let m = physical_to_model(PhysicalParams {
            coupling: -0.7,
            field: 0.2,
            temperature: 1.3,
        })
        .unwrap();
        assert!(m.b > 1.0);
        assert!(physical_to_model(PhysicalParams {
            coupling: 1.0,
            field: 0.0,
            temperature: 0.0
        })
        .is_err());
    }

    #[test]
    fn physical_mapping_reproduces_spin_sum() {
        let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 1)]).unwrap();
        let phys = PhysicalParams {
            coupling: 0.4,
            field: -0.3,
            temperature: 0.9,
        };
        let m = physical_to_model(phys).unwrap();
        let mut spin_sum = 0.0;
        for mask in 0u32..16 {
            let s = |v: usize| if mask >> v & 1 == 1 { -1.0 } else { 1.0 };
            let e: f64 = g.edges().iter().map(|&(u, v)| s(u) * s(v)).sum();
            let h: f64 = (0..4).map(s).sum();
            spin_sum += (phys.coupling / phys.temperature * e + phys.field / phys.temperature * h).exp();
        }
        let z = z_exact(&g, &ModelParams::real(m.xi, m.b), &BoundaryCondition::new()).unwrap();
        let rebuilt = z.re * m.log_prefactor(&g).exp();
        assert!((rebuilt - spin_sum).abs() < 1e-12 * spin_sum);
    }

    #[test]
    fn polynomial_json_round_trip() {
        let p = xi_polynomial(&Graph::complete(3), 0.5, 24).unwrap();
        let text = p.to_json_string();
        assert!(text.starts_with("{\"b\":0.5,\"coeffs\":["));
        assert_eq!(XiPolynomial::from_json_str(&text).unwrap(), p);
    }
}
