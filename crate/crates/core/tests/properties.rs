use std::f64::consts::PI;

use isingzero::graph::{cayley_tree, BoundaryCondition, Graph};
use isingzero::partition::{
    physical_to_model, ratio_tree, xi_polynomial, z_exact, ModelParams, PhysicalParams, XiPolynomial,
};
use isingzero::sawtree::{build_saw_tree, ratio_via_saw};
use isingzero::zeros::{graph_roots, lee_yang_deviation};
use isingzero::SpherePoint;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn naive_coeffs(g: &Graph, b: f64) -> Vec<f64> {
    let n = g.vertex_count();
    let mut c = vec![0.0; n + 1];
    for mask in 0u32..1 << n {
        let cut = g
            .edges()
            .iter()
            .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
            .count();
        c[mask.count_ones() as usize] += b.powi(cut as i32);
    }
    c
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..=11, 2usize..=4, 0usize..12, any::<u64>()).prop_map(|(n, deg, extra, seed)| {
        Graph::random_connected(n, deg, extra, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn polynomial_matches_naive(g in graph_strategy(), b in 0.05f64..3.0) {
        let p = xi_polynomial(&g, b, 24).unwrap();
        let want = naive_coeffs(&g, b);
        for (k, (a, w)) in p.coeffs.iter().zip(&want).enumerate() {
            prop_assert!((a - w).abs() <= 1e-12 * w.abs().max(1.0), "k = {}", k);
            // palindromic
            let mirror = p.coeffs[g.vertex_count() - k];
            prop_assert!((a - mirror).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn union_multiplies(g in graph_strategy(), h in graph_strategy(), phi in -PI..PI, b in 0.1f64..2.0) {
        let p = ModelParams::on_circle(phi, b);
        let none = BoundaryCondition::new();
        let joint = z_exact(&g.disjoint_union(&h), &p, &none).unwrap();
        let split = z_exact(&g, &p, &none).unwrap() * z_exact(&h, &p, &none).unwrap();
        let scale = xi_polynomial(&g, b, 24).unwrap().coeffs.iter().sum::<f64>()
            * xi_polynomial(&h, b, 24).unwrap().coeffs.iter().sum::<f64>();
        prop_assert!((joint - split).norm() <= 1e-12 * scale);
    }

    #[test]
    fn pinning_decomposes(g in graph_strategy(), phi in -PI..PI, b in 0.1f64..2.0, v in 0usize..2) {
        let p = ModelParams::on_circle(phi, b);
        let none = BoundaryCondition::new();
        let whole = z_exact(&g, &p, &none).unwrap();
        let parts = z_exact(&g, &p, &none.with(v, true)).unwrap() + z_exact(&g, &p, &none.with(v, false)).unwrap();
        prop_assert!((whole - parts).norm() <= 1e-12 * (1.0 + whole.norm()) * 2f64.powi(g.vertex_count() as i32));
    }

    #[test]
    fn lee_yang_for_ferromagnets(g in graph_strategy(), b in 0.05f64..0.95) {
        let roots = graph_roots(&g, b, 24).unwrap();
        prop_assert!(lee_yang_deviation(&roots) < 1e-8);
    }
}

#[test]
fn triangle_saw_dump_is_golden() {
    let k3 = Graph::complete(3);
    let ord = isingzero::graph::canonical_edge_ordering(&k3);
    let tree = build_saw_tree(&k3, 0, &ord, &BoundaryCondition::new(), 100).unwrap();
    let v: serde_json::Value = serde_json::from_str(&tree.to_json_string()).unwrap();
    let walks: Vec<(Vec<u64>, Option<u64>)> = v["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| {
            let w = n["walk"]
                .as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_u64().unwrap())
                .collect();
            (w, n["tau"].as_u64())
        })
        .collect();
    assert_eq!(
        walks,
        vec![
            (vec![0], None),
            (vec![0, 1], None),
            (vec![0, 1, 2], None),
            (vec![0, 1, 2, 0], Some(0)),
            (vec![0, 2], None),
            (vec![0, 2, 1], None),
            (vec![0, 2, 1, 0], Some(1)),
        ]
    );
}

#[test]
fn saw_and_tree_recursion_agree_on_cayley_trees() {
    for d in [2, 3] {
        let t = cayley_tree(4, d).unwrap();
        let p = ModelParams::on_circle(1.1, 1.7);
        let a = ratio_tree(&t.graph, &BoundaryCondition::new(), t.root, &p).unwrap();
        let b = ratio_via_saw(&t.graph, t.root, &p, &BoundaryCondition::new()).unwrap();
        assert!(a.chordal_distance(&b) < 1e-12);
    }
}

#[test]
fn physical_parametrization_reconstructs_energy_sum() {
    // Z_phys = sum over spins of exp((J sum s_u s_v + h sum s_v) / T)
    let g = Graph::cycle(5);
    let (j, h, t) = (0.7, -0.3, 1.3);
    let m = physical_to_model(PhysicalParams {
        coupling: j,
        field: h,
        temperature: t,
    })
    .unwrap();
    let mut phys = 0.0;
    for mask in 0u32..1 << 5 {
        let s = |v: usize| if mask >> v & 1 == 1 { 1.0 } else { -1.0 };
        let e: f64 =
            g.edges().iter().map(|&(u, v)| j * s(u) * s(v)).sum::<f64>() + (0..5).map(|v| h * s(v)).sum::<f64>();
        phys += (e / t).exp();
    }
    let z = z_exact(&g, &ModelParams::real(m.xi, m.b), &BoundaryCondition::new()).unwrap();
    let rebuilt = z.re * m.log_prefactor(&g).exp();
    assert!((rebuilt - phys).abs() < 1e-10 * phys);
}

#[test]
fn polynomial_json_round_trip() {
    let p = xi_polynomial(&Graph::petersen(), 0.4, 24).unwrap();
    let back = XiPolynomial::from_json_str(&p.to_json_string()).unwrap();
    assert_eq!(p, back);
    let x = Complex64::from_polar(1.0, 0.2);
    let z = z_exact(&Graph::petersen(), &ModelParams::new(x, 0.4), &BoundaryCondition::new()).unwrap();
    assert!((back.eval(x) - z).norm() < 1e-10 * z.norm());
    assert!(matches!(
        ratio_via_saw(&Graph::star(3), 0, &ModelParams::real(0.0, 0.5), &BoundaryCondition::new()).unwrap(),
        SpherePoint::Finite(z) if z.norm() == 0.0
    ));
}
