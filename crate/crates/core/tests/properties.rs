use proptest::collection::vec;
use proptest::prelude::*;

use sprinkle_core::directed::{
    bipartite_double, cycle_cover, in_extend, max_matching, ncc_init, out_extend, BipartiteDouble, NearCycleCover,
};
use sprinkle_core::graph::{Digraph, UndirectedGraph};
use sprinkle_core::merge::{cycle_partition, longest_cycle, merge_run, CycleMode};
use sprinkle_core::oracles::{brute_hamiltonian, exhaustive_matching};
use sprinkle_core::rotation::{
    end_closure, end_closure_exhaustive, end_pairs, maximal_path, rotate, sprinkle, verify_hamilton_cycle, PathState,
};
use sprinkle_core::sample::{EdgeStream, Ground, SampleMode};

fn graph(max_n: usize) -> impl Strategy<Value = UndirectedGraph> {
    (3..=max_n).prop_flat_map(|n| {
        vec((0..n, 0..n), 0..n * n).prop_map(move |pairs| {
            let mut g = UndirectedGraph::new(n);
            for (u, v) in pairs {
                if u != v {
                    g.add_edge(u, v);
                }
            }
            g
        })
    })
}

fn digraph(max_n: usize) -> impl Strategy<Value = Digraph> {
    (2..=max_n).prop_flat_map(|n| {
        vec((0..n, 0..n), 0..2 * n * n).prop_map(move |pairs| {
            let mut d = Digraph::new(n);
            for (u, v) in pairs {
                if u != v {
                    d.add_arc(u, v);
                }
            }
            d
        })
    })
}

fn with(g: &UndirectedGraph, extra: &[(usize, usize)]) -> UndirectedGraph {
    let mut out = g.clone();
    for &(u, v) in extra {
        out.add_edge(u, v);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn adjacency_is_symmetric(g in graph(30)) {
        let mut degree_sum = 0;
        for u in 0..g.n() {
            prop_assert!(g.neighbors(u).windows(2).all(|w| w[0] < w[1]));
            degree_sum += g.degree(u);
            for v in 0..g.n() {
                prop_assert_eq!(g.has_edge(u, v), g.has_edge(v, u));
            }
        }
        prop_assert_eq!(degree_sum, 2 * g.edge_count());
        prop_assert_eq!(g.edges().count(), g.edge_count());
    }

    #[test]
    fn rotations_keep_the_vertex_set(g in graph(14), seed in any::<u64>()) {
        let p = maximal_path(&g, seed);
        prop_assert!(p.is_valid_in(&g));
        let y = p.end();
        for &v in g.neighbors(y) {
            if let Ok(q) = rotate(&g, &p, y, v) {
                prop_assert!(q.is_valid_in(&g));
                prop_assert_eq!(q.x0(), p.x0());
                let mut a = p.vertices().to_vec();
                let mut b = q.vertices().to_vec();
                a.sort_unstable();
                b.sort_unstable();
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn maximal_paths_cannot_be_extended(g in graph(20), seed in any::<u64>()) {
        let p = maximal_path(&g, seed);
        let on: std::collections::HashSet<_> = p.vertices().iter().copied().collect();
        for e in [p.x0(), p.end()] {
            prop_assert!(g.neighbors(e).iter().all(|u| on.contains(u)));
        }
    }

    #[test]
    fn closure_witnesses_are_sound(g in graph(12), seed in any::<u64>()) {
        let p = maximal_path(&g, seed);
        let c = end_closure(&g, &p, p.x0()).unwrap();
        let exhaustive = end_closure_exhaustive(&g, &p, p.x0()).unwrap();
        for &e in &c.ends {
            let w = c.witness(e).unwrap();
            prop_assert!(w.is_valid_in(&g));
            prop_assert_eq!(w.x0(), p.x0());
            prop_assert_eq!(w.end(), e);
            prop_assert_eq!(w.vertex_count(), p.vertex_count());
            prop_assert!(exhaustive.binary_search(&e).is_ok());
        }
    }

    #[test]
    fn end_pairs_close_cycles_through_the_path(g in graph(11), seed in any::<u64>()) {
        let p = maximal_path(&g, seed);
        for (a, (qa, bs)) in end_pairs(&g, &p) {
            prop_assert_eq!(qa.end(), a);
            let second = end_closure(&g, &qa, a).unwrap();
            for b in bs {
                let w = second.witness(b).unwrap();
                prop_assert_eq!(w.x0(), a);
                prop_assert_eq!(w.end(), b);
                let closed = with(&g, &[(a, b)]);
                let cycle = w.vertices();
                prop_assert!((0..cycle.len()).all(|i| closed.has_edge(cycle[i], cycle[(i + 1) % cycle.len()])));
            }
        }
    }

    #[test]
    fn sprinkle_certificates_verify(g in graph(10), seed in any::<u64>()) {
        let mut stream = EdgeStream::replacement(Ground::Edges(&g), seed);
        let out = sprinkle(&g, &mut stream, 200);
        prop_assert_eq!(out.phase_costs.iter().sum::<u64>(), out.edges_consumed);
        prop_assert_eq!(out.consumed.len() as u64, out.edges_consumed);
        let aug = with(&g, &out.consumed);
        if let Some(c) = &out.cycle {
            prop_assert!(verify_hamilton_cycle(&aug, c));
            prop_assert!(brute_hamiltonian(&aug).unwrap().is_some());
        }
        if out.edges_consumed == 0 && brute_hamiltonian(&g).unwrap().is_none() {
            prop_assert!(out.cycle.is_none());
        }
    }

    #[test]
    fn exact_samples_nest(g in graph(16), seed in any::<u64>(), m in 0u64..40) {
        let size = g.complement_size();
        let (m, m2) = (m.min(size), (m + 7).min(size));
        let a = EdgeStream::new(Ground::Edges(&g), SampleMode::ExactM(m), seed).unwrap().collect_all();
        let b = EdgeStream::new(Ground::Edges(&g), SampleMode::ExactM(m2), seed).unwrap().collect_all();
        prop_assert_eq!(&b[..m as usize], &a[..]);
        let distinct: std::collections::HashSet<_> = b.iter().collect();
        prop_assert_eq!(distinct.len(), b.len());
        prop_assert!(b.iter().all(|&(u, v)| u < v && !g.has_edge(u, v)));
    }

    #[test]
    fn matching_is_maximum(adj in (0usize..=6).prop_flat_map(|n| vec(vec(0..n.max(1), 0..=n), n))) {
        let n = adj.len();
        let adj: Vec<Vec<usize>> = adj
            .into_iter()
            .map(|mut r| {
                r.retain(|&x| x < n);
                r.sort_unstable();
                r.dedup();
                r
            })
            .collect();
        let b = BipartiteDouble::from_adjacency(adj);
        let m = max_matching(&b);
        prop_assert_eq!(m.size(), exhaustive_matching(&b).unwrap());
        let mut used = vec![false; n];
        for (x, r) in m.pair_of_left.iter().enumerate() {
            if let Some(r) = *r {
                prop_assert!(b.right_of(x).contains(&r));
                prop_assert!(!std::mem::replace(&mut used[r], true));
            }
        }
    }

    #[test]
    fn covers_and_surgery_keep_every_vertex(d in digraph(12)) {
        let m = max_matching(&bipartite_double(&d));
        if m.is_perfect() {
            let cover = cycle_cover(&d, &m).unwrap();
            prop_assert!(cover.verify(&d));
            prop_assert_eq!(cover.to_matching(d.n()), m);
            if let Ok(mut ncc) = ncc_init(&d, &cover) {
                prop_assert!(ncc.verify(&d));
                prop_assert_eq!(ncc.cycles.len() + 2, cover.len());
                let mut guard = 0;
                while let Some(next) = out_extend(&d, &ncc).or_else(|| in_extend(&d, &ncc)) {
                    prop_assert!(next.verify(&d));
                    prop_assert_eq!(next.cycles.len() + 1, ncc.cycles.len());
                    ncc = next;
                    guard += 1;
                    prop_assert!(guard <= d.n());
                }
                let _: &NearCycleCover = &ncc;
            }
        }
    }

    #[test]
    fn digraph_certificates_verify(d in digraph(9), seed in any::<u64>()) {
        let out = sprinkle_core::directed::hamilton(&d, 0.3, seed, 0.5, 30.0);
        if let Some(c) = &out.cycle {
            let mut aug = d.clone();
            for &(u, v) in out.r1.iter().chain(&out.consumed) {
                aug.add_arc(u, v);
            }
            prop_assert!(sprinkle_core::directed::verify_directed_hamilton_cycle(&aug, c));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partitions_are_covers(g in graph(12)) {
        let p = cycle_partition(&g, 0.3, CycleMode::Exact).unwrap();
        let covered: usize = p.cycles.iter().map(Vec::len).sum::<usize>() + p.leftover.len();
        prop_assert_eq!(covered, g.n());
        if p.is_complete() {
            prop_assert!(p.verify(&g));
        }
        if let Some(c) = longest_cycle(&g, CycleMode::Exact).unwrap() {
            prop_assert!(p.cycles[0].len() == c.len());
        }
    }

    #[test]
    fn merge_certificates_verify(g in graph(12), m in 0u64..60, seed in any::<u64>()) {
        let p = cycle_partition(&g, 0.3, CycleMode::Exact).unwrap();
        if p.is_complete() {
            let out = merge_run(&g, &p, m, seed).unwrap();
            prop_assert!(out.rounds_used <= out.schedule.max_rounds);
            if let Some(c) = &out.cycle {
                prop_assert!(verify_hamilton_cycle(&with(&g, &out.consumed), c));
            }
            prop_assert_eq!(out.hamiltonian, out.failure.is_none());
        }
    }
}

#[test]
fn path_state_checks_edges() {
    let g = UndirectedGraph::from_edge_list(3, &[(0, 1)]).unwrap();
    assert!(PathState::checked(&g, vec![0, 1]).is_ok());
    assert!(PathState::checked(&g, vec![0, 1, 2]).is_err());
}
