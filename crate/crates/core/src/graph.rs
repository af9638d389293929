//! Simple undirected graphs, boundary conditions, Cayley trees and loaders.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph on the dense vertex set `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list, normalizing every pair to `(min, max)`.
    ///
    /// Self-loops, repeated edges and out-of-range endpoints are rejected.
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) has an endpoint outside 0..{vertex_count}"
                )));
            }
            if u == v {
                return Err(Error::Validation(format!("edge ({u}, {v}) is a self-loop")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::Validation(format!("edge ({u}, {v}) is a duplicate")));
            }
            normalized.push(e);
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self {
            n: vertex_count,
            edges: normalized,
            adjacency,
        })
    }

    /// Graph with `n` vertices and no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); n],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as normalized `(min, max)` pairs in insertion order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].contains(&v)
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components_raw().len() == 1
    }

    /// A graph is a tree when it is connected and has exactly `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.n >= 1 && self.edges.len() + 1 == self.n && self.is_connected()
    }

    fn components_raw(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            label[s] = id;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adjacency[u] {
                    if label[w] == usize::MAX {
                        label[w] = id;
                        members.push(w);
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Splits the graph into connected components, ordered by their lowest vertex id.
    pub fn connected_components(&self) -> Vec<Component> {
        self.components_raw()
            .into_iter()
            .map(|members| self.induced(&members))
            .collect()
    }

    /// Subgraph induced by `members` (sorted ascending), relabelled densely.
    pub fn induced(&self, members: &[usize]) -> Component {
        let mut local = BTreeMap::new();
        for (i, &v) in members.iter().enumerate() {
            local.insert(v, i);
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter_map(|&(u, v)| Some((*local.get(&u)?, *local.get(&v)?)))
            .collect();
        let graph = Graph::new(members.len(), &edges).expect("induced subgraph of a valid graph");
        Component {
            graph,
            original: members.to_vec(),
        }
    }

    /// Disjoint union; vertices of `other` are shifted by `self.vertex_count()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(u, v)| (u + shift, v + shift)));
        Graph::new(self.n + other.n, &edges).expect("disjoint union of valid graphs")
    }

    /// Random connected graph with maximum degree at most `max_degree`: a random
    /// tree plus up to `extra_edges` random chords.
    pub fn random_connected<R: Rng + ?Sized>(
        n: usize,
        max_degree: usize,
        extra_edges: usize,
        rng: &mut R,
    ) -> Result<Graph> {
        if n > 2 && max_degree < 2 || n == 2 && max_degree < 1 {
            return Err(Error::Validation(format!(
                "no connected graph on {n} vertices with max degree {max_degree}"
            )));
        }
        let mut deg = vec![0usize; n];
        let mut edges = Vec::new();
        for v in 1..n {
            let open: Vec<usize> = (0..v).filter(|&u| deg[u] < max_degree).collect();
            let u = open[rng.gen_range(0..open.len())];
            deg[u] += 1;
            deg[v] += 1;
            edges.push((u, v));
        }
        let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
        for _ in 0..extra_edges {
            if n < 2 {
                break;
            }
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let key = (u.min(v), u.max(v));
            if u == v || deg[u] >= max_degree || deg[v] >= max_degree || present.contains(&key) {
                continue;
            }
            present.insert(key);
            deg[u] += 1;
            deg[v] += 1;
            edges.push(key);
        }
        Graph::new(n, &edges)
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::new(n, &edges).expect("complete graph")
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &edges).expect("path graph")
    }

    pub fn cycle(n: usize) -> Graph {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n >= 3 {
            edges.push((n - 1, 0));
        }
        Graph::new(n, &edges).expect("cycle graph")
    }

    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::new(leaves + 1, &edges).expect("star graph")
    }

    /// The Petersen graph: outer 5-cycle `0..5`, inner pentagram `5..10`.
    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::new(10, &edges).expect("petersen graph")
    }

    pub fn from_json_str(text: &str) -> Result<Graph> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("graph JSON, line {}: {e}", e.line())))?;
        let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(file.n, &edges)
    }

    pub fn to_json_string(&self) -> String {
        let file = GraphFile {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        };
        serde_json::to_string(&file).expect("graph serialization")
    }

    /// Parses the plain edge-list format: first non-comment line is `n`, then one
    /// `u v` pair per line. Text after `#` is ignored.
    pub fn from_edge_list_str(text: &str) -> Result<Graph> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match n {
                None => {
                    if fields.len() != 1 {
                        return Err(Error::Parse(format!(
                            "line {lineno}: expected vertex count, found {line:?}"
                        )));
                    }
                    n =
                        Some(fields[0].parse().map_err(|_| {
                            Error::Parse(format!("line {lineno}: invalid vertex count {:?}", fields[0]))
                        })?);
                }
                Some(count) => {
                    if fields.len() != 2 {
                        return Err(Error::Parse(format!("line {lineno}: expected \"u v\", found {line:?}")));
                    }
                    let parse = |s: &str| -> Result<usize> {
                        s.parse()
                            .map_err(|_| Error::Parse(format!("line {lineno}: invalid vertex id {s:?}")))
                    };
                    let (u, v) = (parse(fields[0])?, parse(fields[1])?);
                    if u >= count || v >= count || u == v {
                        return Err(Error::Parse(format!(
                            "line {lineno}: invalid edge ({u}, {v}) for n = {count}"
                        )));
                    }
                    edges.push((u, v));
                }
            }
        }
        let n = n.ok_or_else(|| Error::Parse("empty edge list: missing vertex count".into()))?;
        Graph::new(n, &edges).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Loads a graph, choosing the JSON loader for `.json` files and the edge-list
    /// loader otherwise.
    pub fn load(path: &Path) -> Result<Graph> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .map(|ext| ext.eq_ignore_ascii_case("json"))
            .unwrap_or(false);
        if is_json {
            Graph::from_json_str(&text)
        } else {
            Graph::from_edge_list_str(&text)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

/// A connected component together with the original ids of its vertices.
#[derive(Clone, Debug)]
pub struct Component {
    pub graph: Graph,
    /// `original[i]` is the id in the parent graph of local vertex `i`.
    pub original: Vec<usize>,
}

/// Rooted Cayley tree `T_{k,d}`: root of degree `d`, internal vertices of degree `d + 1`.
#[derive(Clone, Debug)]
pub struct CayleyTree {
    pub graph: Graph,
    pub root: usize,
    pub depth: usize,
    pub branching: usize,
}

/// Vertex count of `T_{k,d}` via `n(0) = 1`, `n(k) = 1 + d n(k-1)`.
pub fn cayley_vertex_count(k: usize, d: usize) -> usize {
    (0..k).fold(1usize, |acc, _| 1 + d * acc)
}

pub fn cayley_tree(k: usize, d: usize) -> Result<CayleyTree> {
    if d < 2 {
        return Err(Error::Validation(format!(
            "Cayley tree branching must be >= 2, got {d}"
        )));
    }
    let n = cayley_vertex_count(k, d);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    // Breadth-first labelling: children of vertex i are consecutive.
    let mut frontier = vec![0usize];
    let mut next_id = 1usize;
    for _ in 0..k {
        let mut next = Vec::with_capacity(frontier.len() * d);
        for &parent in &frontier {
            for _ in 0..d {
                edges.push((parent, next_id));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    debug_assert_eq!(next_id, n);
    Ok(CayleyTree {
        graph: Graph::new(n, &edges)?,
        root: 0,
        depth: k,
        branching: d,
    })
}

/// Spin value assigned by a boundary condition; `One` means "in U".
pub type Spin = bool;

/// Partial assignment of vertices to spins. Assigning two different values to the
/// same vertex marks the condition infeasible: no subset is compatible with it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    assignments: BTreeMap<usize, bool>,
    infeasible: bool,
}

impl BoundaryCondition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(usize, bool)]) -> Self {
        let mut bc = Self::new();
        for &(v, s) in pairs {
            bc.fix(v, s);
        }
        bc
    }

    /// Fixes `v` to `spin`. A conflicting value makes the condition infeasible.
    pub fn fix(&mut self, v: usize, spin: bool) {
        match self.assignments.get(&v) {
            Some(&old) if old != spin => self.infeasible = true,
            _ => {
                self.assignments.insert(v, spin);
            }
        }
    }

    /// Copy of `self` with `v` additionally fixed to `spin` (the `tau_{v,s}` extension).
    pub fn with(&self, v: usize, spin: bool) -> Self {
        let mut bc = self.clone();
        bc.fix(v, spin);
        bc
    }

    pub fn get(&self, v: usize) -> Option<bool> {
        self.assignments.get(&v).copied()
    }

    pub fn is_fixed(&self, v: usize) -> bool {
        self.assignments.contains_key(&v)
    }

    pub fn is_infeasible(&self) -> bool {
        self.infeasible
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty() && !self.infeasible
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.assignments.iter().map(|(&v, &s)| (v, s))
    }

    /// Checks every fixed vertex is a vertex of a graph on `n` vertices.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        match self.assignments.keys().find(|&&v| v >= n) {
            Some(v) => Err(Error::Validation(format!(
                "boundary condition fixes vertex {v} outside 0..{n}"
            ))),
            None => Ok(()),
        }
    }

    /// Restriction to the vertices of a component, relabelled to local ids.
    pub fn restrict(&self, component: &Component) -> Self {
        let mut bc = Self::new();
        for (local, &orig) in component.original.iter().enumerate() {
            if let Some(s) = self.get(orig) {
                bc.fix(local, s);
            }
        }
        bc.infeasible = self.infeasible;
        bc
    }
}

/// Per-vertex total order on incident edges. `rank(u, w)` is the position of edge
/// `{u, w}` in `u`'s order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeOrdering {
    ranks: Vec<BTreeMap<usize, usize>>,
}

impl EdgeOrdering {
    /// Rank of the edge `{u, w}` at vertex `u`.
    pub fn rank(&self, u: usize, w: usize) -> Option<usize> {
        self.ranks.get(u)?.get(&w).copied()
    }

    /// Builds an ordering from explicit neighbor sequences, one per vertex.
    pub fn from_neighbor_orders(g: &Graph, orders: &[Vec<usize>]) -> Result<Self> {
        if orders.len() != g.vertex_count() {
            return Err(Error::Validation("edge ordering needs one list per vertex".into()));
        }
        let mut ranks = Vec::with_capacity(orders.len());
        for (u, order) in orders.iter().enumerate() {
            let mut expected: Vec<usize> = g.neighbors(u).to_vec();
            let mut given = order.clone();
            expected.sort_unstable();
            given.sort_unstable();
            if expected != given {
                return Err(Error::Validation(format!(
                    "edge ordering at vertex {u} is not a permutation of its incident edges"
                )));
            }
            ranks.push(order.iter().enumerate().map(|(i, &w)| (w, i)).collect());
        }
        Ok(Self { ranks })
    }
}

/// Ranks the edges at each vertex by their `(min endpoint, max endpoint)` pair.
pub fn canonical_edge_ordering(g: &Graph) -> EdgeOrdering {
    let ranks = (0..g.vertex_count())
        .map(|u| {
            let mut keyed: Vec<((usize, usize), usize)> =
                g.neighbors(u).iter().map(|&w| ((u.min(w), u.max(w)), w)).collect();
            keyed.sort_unstable();
            keyed.into_iter().enumerate().map(|(i, (_, w))| (w, i)).collect()
        })
        .collect();
    EdgeOrdering { ranks }
}
