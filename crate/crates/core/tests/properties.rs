mod common;

use common::{dense_h, norm_inf, ref_spectrum, sign_domains};
use nalgebra::DMatrix;
use proptest::prelude::*;

use nodal_core::ensemble::{EnsembleConfig, Family, Instance};
use nodal_core::equipartition::{ChartRule, ManifoldChart};
use nodal_core::morse::{morse_index_hessian_with, sequential_index_for_chart};
use nodal_core::nodal::{analyze_nodal, courant_bounds_report};
use nodal_core::surgery::{interlacing_slack, parametrized_hamiltonian, PerturbationB};
use nodal_core::{Edge, Execution, Hamiltonian};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Tree),
        Just(Family::CyclePlusChords),
        Just(Family::ErdosRenyiConnected)
    ]
}

fn instance() -> impl Strategy<Value = Instance> {
    (family(), any::<u64>()).prop_map(|(family, seed)| {
        EnsembleConfig {
            family,
            v_min: 3,
            v_max: 9,
            beta_cap: 3,
            potential_scale: 1.0,
            seed,
            count: 1,
        }
        .instance(0)
        .unwrap()
    })
}

fn hamiltonian(inst: &Instance) -> Hamiltonian {
    Hamiltonian::new(&inst.graph, &inst.potential).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn nodal_identity_on_random_vectors(inst in instance(), raw in prop::collection::vec(0.05f64..1.0, 9), signs in any::<u16>()) {
        let g = &inst.graph;
        let f: Vec<f64> = (0..g.vertex_count())
            .map(|v| if signs >> v & 1 == 1 { raw[v] } else { -raw[v] })
            .collect();
        let a = analyze_nodal(g, &f).unwrap();
        prop_assert_eq!((a.nu, a.zeta, a.ell), sign_domains(g, &f));
        prop_assert_eq!(a.nu as i64, a.identity_rhs());
        prop_assert_eq!(a.partition.eta(), a.zeta + 1 - a.nu);
        prop_assert_eq!(a.partition.eta(), g.betti() - a.ell);
    }

    #[test]
    fn jacobi_matches_reference(inst in instance()) {
        let h = hamiltonian(&inst);
        let s = h.spectrum().unwrap();
        let dense = dense_h(&inst.graph, &inst.potential.0);
        let r = ref_spectrum(&dense);
        let scale = norm_inf(&dense).max(1.0);
        for (a, b) in s.values().iter().zip(&r.values) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
        let trace: f64 = inst.potential.0.iter().sum();
        prop_assert!((s.values().iter().sum::<f64>() - trace).abs() <= 1e-10 * scale);
        let n = s.len();
        let v = s.vectors();
        let gram = v.transpose() * v;
        prop_assert!((gram - DMatrix::<f64>::identity(n, n)).amax() <= 1e-12);
        for k in 1..=n {
            prop_assert!(common::residual(&dense, s.vector(k), s.value(k)) <= 1e-10 * scale);
        }
    }

    #[test]
    fn courant_bounds_hold(inst in instance()) {
        let h = hamiltonian(&inst);
        let s = h.spectrum().unwrap();
        for n in 1..=s.len() {
            if s.require_nondegenerate(n).is_err() {
                continue;
            }
            let b = courant_bounds_report(&inst.graph, &s, n).unwrap();
            prop_assert!(b.all_hold(), "n={} {:?}", n, b);
        }
    }

    #[test]
    fn rank_one_family_interlaces(inst in instance(), pick in any::<prop::sample::Index>(), exp in -3.0f64..3.0, negative in any::<bool>()) {
        let h = hamiltonian(&inst);
        let g = &inst.graph;
        let edge = g.edges()[pick.index(g.edge_count())];
        let alpha = if negative { -(10f64.powf(exp)) } else { 10f64.powf(exp) };
        let hp = parametrized_hamiltonian(&h, edge, alpha).unwrap();
        let sg = h.spectrum().unwrap();
        let sp = hp.spectrum().unwrap();
        let scale = hp.norm_inf().max(1.0);
        prop_assert!(interlacing_slack(&sg, &sp, alpha) >= -1e-9 * scale);

        // G' = G + B(α), with B built by hand from the edge
        let mut b = DMatrix::<f64>::zeros(g.vertex_count(), g.vertex_count());
        b[(edge.i, edge.i)] = -alpha;
        b[(edge.j, edge.j)] = -1.0 / alpha;
        b[(edge.i, edge.j)] = 1.0;
        b[(edge.j, edge.i)] = 1.0;
        let pb = PerturbationB::new(edge, alpha);
        prop_assert!((pb.dense(g.vertex_count()) - &b).amax() == 0.0);
        let rb = ref_spectrum(&b);
        let extreme = if alpha > 0.0 { rb.values[0] } else { rb.values[rb.values.len() - 1] };
        prop_assert!((pb.nonzero_eigenvalue() - extreme).abs() <= 1e-12 * (alpha.abs() + 1.0 / alpha.abs()));
        let r = ref_spectrum(&(dense_h(g, &inst.potential.0) + &b));
        for (a, c) in sp.values().iter().zip(&r.values) {
            prop_assert!((a - c).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn morse_index_is_chart_invariant(inst in instance(), shuffle in any::<u64>()) {
        let h = hamiltonian(&inst);
        let s = h.spectrum().unwrap();
        for n in 1..=s.len() {
            let Ok(first) = ManifoldChart::at_eigenvector(&h, &s, n, ChartRule::LexFirst) else {
                continue;
            };
            let eta = first.eta();
            let Ok(a) = morse_index_hessian_with(Execution::Sequential, &first) else {
                continue;
            };
            prop_assert!(a.index <= eta);
            let last = ManifoldChart::at_eigenvector(&h, &s, n, ChartRule::LexLast).unwrap();
            prop_assert_eq!(last.eta(), eta);
            if let Ok(b) = morse_index_hessian_with(Execution::Sequential, &last) {
                prop_assert_eq!(a.index, b.index, "n={}", n);
            }
            // re-adding the chart edges in any order gives the same count
            let mut order: Vec<usize> = (0..eta).collect();
            let mut x = shuffle | 1;
            for k in (1..order.len()).rev() {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                order.swap(k, (x % (k as u64 + 1)) as usize);
            }
            let forward: Vec<usize> = (0..eta).collect();
            if let (Ok(p), Ok(q)) = (
                sequential_index_for_chart(&first, &forward),
                sequential_index_for_chart(&first, &order),
            ) {
                prop_assert_eq!(p.index, q.index, "n={} order={:?}", n, order);
                prop_assert_eq!(p.index, a.index, "n={}", n);
            }
        }
    }
}

#[test]
fn single_edge_spectrum() {
    let g = nodal_core::Graph::path(2);
    let h = Hamiltonian::new(&g, &nodal_core::Potential(vec![0.0, 0.0])).unwrap();
    let s = h.spectrum().unwrap();
    assert!((s.value(1) + 1.0).abs() < 1e-14 && (s.value(2) - 1.0).abs() < 1e-14);
    let e = Edge::new(0, 1);
    assert!(h.has_edge(e));
}
