//! Self-avoiding-walk trees with cycle-closing boundary values.
//!
//! Node `t` stands for a walk `(v = w_0, ..., w_k)` in the graph, recorded
//! through `parent` links and the last vertex `last[t] = w_k`. A walk that
//! steps back onto `w_i` becomes a leaf fixed to 0 when the closing edge
//! `(w_i, w_k)` ranks above the starting edge `(w_i, w_{i+1})` at `w_i`, and
//! to 1 otherwise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{canonical_edge_ordering, BoundaryCondition, EdgeOrdering, Graph};
use crate::partition::{evaluate_rooted, ModelParams};
use crate::sphere::SpherePoint;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SawTree {
    pub root_vertex: usize,
    /// `parent[0]` is `None`; node 0 is the root walk `(v)`.
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Last graph vertex of each node's walk.
    pub last: Vec<usize>,
    pub depth: Vec<usize>,
    /// Boundary value of each node, from a closed cycle or inherited from `sigma`.
    pub tau: Vec<Option<bool>>,
    /// True for walks that close a cycle.
    pub closes_cycle: Vec<bool>,
}

#[derive(Serialize)]
struct NodeDump {
    id: usize,
    parent: Option<usize>,
    walk: Vec<usize>,
    tau: Option<u8>,
}

#[derive(Serialize)]
struct TreeDump {
    root_vertex: usize,
    node_count: usize,
    nodes: Vec<NodeDump>,
}

impl SawTree {
    pub fn len(&self) -> usize {
        self.last.len()
    }

    pub fn is_empty(&self) -> bool {
        self.last.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    /// The walk of node `t`, root first.
    pub fn walk_of(&self, t: usize) -> Vec<usize> {
        let mut walk = Vec::with_capacity(self.depth[t] + 1);
        let mut cur = Some(t);
        while let Some(u) = cur {
            walk.push(self.last[u]);
            cur = self.parent[u];
        }
        walk.reverse();
        walk
    }

    /// External field of node `t`: that of its walk's last vertex.
    pub fn field_of(&self, t: usize, params: &ModelParams) -> num_complex::Complex64 {
        params.field(self.last[t])
    }

    /// The tree as a graph on node ids.
    pub fn tree_graph(&self) -> Graph {
        let edges: Vec<(usize, usize)> = (1..self.len())
            .map(|t| (self.parent[t].expect("non-root"), t))
            .collect();
        Graph::new(self.len(), &edges).expect("tree edges are valid")
    }

    /// Boundary condition on node ids.
    pub fn boundary(&self) -> BoundaryCondition {
        let mut b = BoundaryCondition::new();
        for (t, s) in self.tau.iter().enumerate() {
            if let Some(s) = s {
                b.fix(t, *s);
            }
        }
        b
    }

    pub fn to_json_string(&self) -> String {
        let nodes = (0..self.len())
            .map(|t| NodeDump {
                id: t,
                parent: self.parent[t],
                walk: self.walk_of(t),
                tau: self.tau[t].map(u8::from),
            })
            .collect();
        serde_json::to_string_pretty(&TreeDump {
            root_vertex: self.root_vertex,
            node_count: self.len(),
            nodes,
        })
        .expect("tree serialization")
    }
}

/// Builds `T_SAW(G, v)` with edge ranks from `ord` and leaf values from `sigma`.
pub fn build_saw_tree(
    g: &Graph,
    v: usize,
    ord: &EdgeOrdering,
    sigma: &BoundaryCondition,
    node_cap: usize,
) -> Result<SawTree> {
    let n = g.vertex_count();
    if v >= n {
        return Err(Error::Validation(format!("root {v} outside 0..{n}")));
    }
    if !g.is_connected() {
        return Err(Error::Validation("SAW tree needs a connected graph".into()));
    }
    sigma.validate_for(n)?;
    if sigma.is_infeasible() {
        return Err(Error::Validation("boundary condition is infeasible".into()));
    }
    for (u, _) in sigma.iter() {
        if u == v {
            return Err(Error::Validation(format!("root {v} must not be fixed")));
        }
        if g.degree(u) != 1 {
            return Err(Error::Validation(format!(
                "boundary condition fixes vertex {u} of degree {}, only leaves allowed",
                g.degree(u)
            )));
        }
    }
    let rank = |a: usize, b: usize| {
        ord.rank(a, b)
            .ok_or_else(|| Error::Validation(format!("edge ordering has no rank for ({a}, {b})")))
    };

    let mut tree = SawTree {
        root_vertex: v,
        parent: vec![None],
        children: vec![Vec::new()],
        last: vec![v],
        depth: vec![0],
        tau: vec![None],
        closes_cycle: vec![false],
    };
    // position of each graph vertex on the current walk
    let mut on_path: Vec<Option<usize>> = vec![None; n];
    let mut path = vec![v];
    on_path[v] = Some(0);
    // (tree node, index of next neighbour to try)
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    while let Some(&mut (node, ref mut next)) = stack.last_mut() {
        let u = tree.last[node];
        let prev = if path.len() >= 2 {
            Some(path[path.len() - 2])
        } else {
            None
        };
        let nbrs = g.neighbors(u);
        if *next >= nbrs.len() {
            stack.pop();
            path.pop();
            on_path[u] = None;
            continue;
        }
        let x = nbrs[*next];
        *next += 1;
        if Some(x) == prev {
            continue;
        }
        if tree.len() >= node_cap {
            return Err(Error::Resource(format!("SAW tree exceeds {node_cap} nodes")));
        }
        let child = tree.len();
        tree.parent.push(Some(node));
        tree.children.push(Vec::new());
        tree.children[node].push(child);
        tree.last.push(x);
        tree.depth.push(path.len());
        if let Some(i) = on_path[x] {
            let start = rank(x, path[i + 1])?;
            let closing = rank(x, u)?;
            tree.tau.push(Some(closing <= start));
            tree.closes_cycle.push(true);
        } else {
            tree.tau.push(sigma.get(x));
            tree.closes_cycle.push(false);
            on_path[x] = Some(path.len());
            path.push(x);
            stack.push((child, 0));
        }
    }
    Ok(tree)
}

/// Ratio at `v` computed on the SAW tree with the canonical edge ordering.
pub fn ratio_via_saw(g: &Graph, v: usize, params: &ModelParams, sigma: &BoundaryCondition) -> Result<SpherePoint> {
    let ord = canonical_edge_ordering(g);
    let tree = build_saw_tree(g, v, &ord, sigma, DEFAULT_NODE_CAP)?;
    evaluate_saw(&tree, params)
}

pub fn evaluate_saw(tree: &SawTree, params: &ModelParams) -> Result<SpherePoint> {
    evaluate_rooted(
        tree.root(),
        params.b,
        |t| tree.children[t].clone(),
        |t| tree.field_of(t, params),
        |t| tree.tau[t],
    )
}
