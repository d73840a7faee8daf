mod common;

use common::*;
use proptest::prelude::*;
use simmatch::polytope::*;
use simmatch::{MatchVector, RngStream};

fn dot(g: &[f64], p: &MatchVector) -> f64 {
    g.iter().zip(p.as_slice()).map(|(a, b)| a * b).sum()
}

#[test]
fn positive_costs_give_empty_matching() {
    let r = lp_oracle(&[0.5; 12], 3, 4);
    assert_eq!(r.objective, 0.0);
    assert!(r.matched_pairs.is_empty());
    assert_eq!(r.vertex.total(), 0.0);
}

#[test]
fn single_profitable_edge() {
    let mut g = vec![1.0; 9];
    g[0] = -1.0;
    let r = lp_oracle(&g, 3, 3);
    assert_eq!(r.objective, -1.0);
    assert_eq!(r.matched_pairs, vec![(0, 0)]);
}

#[test]
fn feasibility_examples() {
    let id = MatchVector::from_pairs(4, 4, &[(0, 0), (1, 1), (2, 2), (3, 3)]);
    assert!(is_feasible(&id));
    let mut v = vec![0.0; 9];
    v[0] = 0.75;
    v[1] = 0.75;
    assert!(!is_feasible(&MatchVector::from_values(3, 3, v).unwrap()));
    for (m, n) in [(1, 1), (3, 7), (7, 3), (5, 5)] {
        assert!(is_feasible(&MatchVector::uniform(m, n)));
    }
    let mut neg = vec![0.0; 4];
    neg[3] = -0.1;
    assert!(!is_feasible(&MatchVector::from_values(2, 2, neg).unwrap()));
}

#[test]
fn enumeration_counts() {
    assert_eq!(enumerate_vertices(4, 4).len(), 209);
    assert_eq!(enumerate_vertices(3, 5).len(), 136);
}

#[test]
fn oracle_agrees_with_enumeration_up_to_six() {
    let mut rng = RngStream::new(200);
    for &(m, n) in &[(1, 4), (2, 2), (3, 3), (4, 2), (4, 5), (5, 5), (6, 4), (6, 6)] {
        let verts = enumerate_vertices(m, n);
        let trials = if m * n >= 30 { 60 } else { 200 };
        for _ in 0..trials {
            let g: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
            let r = lp_oracle(&g, m, n);
            assert!(r.vertex.is_vertex() && is_feasible(&r.vertex));
            assert!(r.objective <= 0.0);
            assert!((dot(&g, &r.vertex) - r.objective).abs() < 1e-12);
            let best = verts
                .iter()
                .map(|v| v.iter().map(|&(i, j)| g[i * n + j]).sum::<f64>())
                .fold(0.0f64, f64::min);
            assert!((best - r.objective).abs() <= 1e-9, "{m}x{n}: {best} vs {}", r.objective);
        }
    }
}

#[test]
fn rounding_examples() {
    let v1 = MatchVector::from_pairs(3, 3, &[(0, 0), (1, 1), (2, 2)]);
    assert_eq!(round_to_vertex(&v1).vertex, v1);
    let v2 = MatchVector::from_pairs(3, 3, &[(0, 1), (1, 2), (2, 0)]);
    let mix: Vec<f64> = v1
        .as_slice()
        .iter()
        .zip(v2.as_slice())
        .map(|(a, b)| 0.6 * a + 0.4 * b)
        .collect();
    let mixed = MatchVector::from_values(3, 3, mix).unwrap();
    assert_eq!(round_to_vertex(&mixed).vertex, v1);
    let u = round_to_vertex(&MatchVector::uniform(4, 4));
    assert_eq!(u.matched_pairs.len(), 4);
    assert_eq!(u.vertex, round_to_vertex(&MatchVector::uniform(4, 4)).vertex);
}

#[test]
fn rectangular_shapes_and_degenerate_sizes() {
    let r = lp_oracle(&[-1.0, -2.0, -3.0], 1, 3);
    assert_eq!(r.matched_pairs, vec![(0, 2)]);
    let r = lp_oracle(&[-1.0, -2.0, -3.0], 3, 1);
    assert_eq!(r.matched_pairs, vec![(2, 0)]);
    let r = lp_oracle(&[-1.0, -1.0, -1.0, -1.0], 2, 2);
    assert_eq!(r.objective, -2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn oracle_is_a_lower_bound_over_the_polytope(
        m in 1usize..6,
        n in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed);
        let g: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
        let r = lp_oracle(&g, m, n);
        prop_assert!(r.vertex.is_vertex());
        prop_assert!(is_feasible(&r.vertex));
        for _ in 0..20 {
            let p = random_feasible(&mut rng, m, n);
            prop_assert!(is_feasible(&p));
            prop_assert!(r.objective <= dot(&g, &p) + 1e-12);
        }
    }

    #[test]
    fn shifting_costs_up_never_adds_pairs(
        m in 1usize..6,
        n in 1usize..6,
        shift in 0.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed);
        let g: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
        let shifted: Vec<f64> = g.iter().map(|v| v + shift).collect();
        let a = lp_oracle(&g, m, n).matched_pairs.len();
        let b = lp_oracle(&shifted, m, n).matched_pairs.len();
        prop_assert!(b <= a);
    }

    #[test]
    fn rounding_is_idempotent(m in 1usize..6, n in 1usize..6, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let p = random_feasible(&mut rng, m, n);
        let v = round_to_vertex(&p).vertex;
        prop_assert!(v.is_vertex());
        prop_assert_eq!(round_to_vertex(&v).vertex, v);
    }
}
