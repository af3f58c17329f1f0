use qcmdo_core::maxcut::cut_value;
use qcmdo_core::pde::build_qcmdo_from_pde;
use qcmdo_core::solvers::solve_exhaustive;
use qcmdo_core::{
    assemble_qubo, bits, maxcut_to_pde_instance, maxcut_to_qubo, reduce, reduce_pde, EncodingPolicy, Graph,
};

fn graphs(n: usize) -> impl Iterator<Item = Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    (0u32..1 << pairs.len()).map(move |mask| {
        let edges = pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e);
        Graph::new(n, edges).unwrap()
    })
}

fn brute_cut(g: &Graph, s: &[bool]) -> i64 {
    g.edges().iter().filter(|&&(u, v)| s[u] != s[v]).count() as i64
}

#[test]
fn energy_is_minus_cut_for_all_small_graphs() {
    for n in 1..=5 {
        for g in graphs(n) {
            let (qubo, red) = maxcut_to_qubo::<f64>(&g);
            for code in 0..1u64 << n {
                let s = bits::from_code(code, n);
                let cut = brute_cut(&g, &s);
                assert_eq!(red.energy(&s), -cut);
                assert_eq!(cut_value(&g, &s), cut);
                assert_eq!(qubo.value(&s), -cut as f64);
            }
        }
    }
}

#[test]
fn pde_route_recovers_maximum_cut() {
    for n in 2..=5 {
        for g in graphs(n) {
            let best = (0..1u64 << n).map(|c| brute_cut(&g, &bits::from_code(c, n))).max().unwrap();
            let inst = maxcut_to_pde_instance::<f64>(&g);
            let qubo = assemble_qubo(&reduce_pde(&inst).unwrap(), EncodingPolicy::default()).unwrap();
            let sol = solve_exhaustive(&qubo).unwrap();
            assert_eq!(brute_cut(&g, &sol.state), best);
            let (_, red) = maxcut_to_qubo::<f64>(&g);
            let constant = red.q.sum() as f64 / 4.0;
            assert!((sol.value - (constant - best as f64)).abs() < 1e-9);
        }
    }
}

#[test]
fn generic_route_agrees_with_fast_route() {
    for g in graphs(4).step_by(7) {
        let inst = maxcut_to_pde_instance::<f64>(&g);
        let fast =
            solve_exhaustive(&assemble_qubo(&reduce_pde(&inst).unwrap(), EncodingPolicy::default()).unwrap()).unwrap();
        let problem = build_qcmdo_from_pde(&inst).unwrap();
        let slow =
            solve_exhaustive(&assemble_qubo(&reduce(&problem).unwrap(), EncodingPolicy::default()).unwrap()).unwrap();
        assert!((fast.value - slow.value).abs() < 1e-8);
    }
}

#[test]
fn invalid_graphs() {
    assert!(Graph::new(2, [(0, 0)]).is_err());
    assert!(Graph::new(2, [(0, 1), (1, 0)]).is_err());
    assert!(Graph::new(2, [(0, 2)]).is_err());
}
