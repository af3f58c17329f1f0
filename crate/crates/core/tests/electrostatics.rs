use std::f64::consts::PI;

use nalgebra::{Complex, DVector};
use qcmdo_core::electrostatics::{
    ensemble_stats, gen_poisson, poisson_qubo, potential_field, reconstruct, EnsembleOptions, InstanceSelection,
    PoissonSpec,
};
use qcmdo_core::solvers::solve_exhaustive;
use qcmdo_core::{bits, solve_sa, FieldModel, SaSchedule};

fn all_states(p: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u64 << p).map(move |c| bits::from_code(c, p))
}

#[test]
fn dimensions_follow_the_lattice() {
    for (n, p, n2a, n2b) in [(2, 5, 4, 361), (3, 13, 9, 841), (4, 25, 16, 1521)] {
        let spec = PoissonSpec::new(n).unwrap();
        let (inst, labels) = gen_poisson::<f64>(&spec).unwrap();
        assert_eq!((inst.n1(), inst.n2a(), inst.n2b()), (p, n2a, n2b));
        assert_eq!((labels.sites.len(), labels.grid.len(), labels.modes.len()), (p, n2b, n2a));
    }
    assert!(PoissonSpec::new(1).is_err());
}

#[test]
fn matrix_entries_match_kernels() {
    let spec = PoissonSpec::new(3).unwrap();
    let (inst, labels) = gen_poisson::<f64>(&spec).unwrap();
    let FieldModel::Response(r) = &inst.field else { panic!("response form expected") };
    for &(gi, si) in &[(0, 0), (100, 4), (420, 12), (840, 7)] {
        let (x, y) = labels.grid[gi];
        let (a, b) = labels.sites[si];
        let expected = 0.1 * (25.0 / PI) * (-25.0 * ((x - a).powi(2) + (y - b).powi(2))).exp();
        assert!((inst.j[(gi, si)].re - expected).abs() < 1e-14);
    }
    for (mi, &(m, n)) in labels.modes.iter().enumerate() {
        for gi in [0, 37, 500, 840] {
            let (x, y) = labels.grid[gi];
            let phi = (m as f64 * PI * x / 3.0).sin() * (n as f64 * PI * y / 3.0).sin();
            let lambda = -PI * PI * ((m * m + n * n) as f64) / 9.0;
            assert!((r[(mi, gi)].re - 0.1 * phi / lambda).abs() < 1e-14);
        }
    }
}

#[test]
fn noiseless_recovery_for_every_small_instance() {
    let spec = PoissonSpec::new(2).unwrap();
    for true_s in all_states(5) {
        let spec = spec.clone().with_true_s(true_s.clone()).unwrap();
        let (inst, _) = gen_poisson::<f64>(&spec).unwrap();
        let qubo = poisson_qubo(&inst).unwrap();
        let sol = solve_exhaustive(&qubo).unwrap();
        assert!(sol.value.abs() < 1e-9);
        assert!(qubo.value(&true_s).abs() < 1e-9);
        if sol.is_unique {
            assert_eq!(sol.state, true_s);
        }
        let rec = reconstruct(&spec, &inst.y).unwrap();
        assert_eq!(rec.state, sol.state);
        assert!(rec.hamming >= 1);
    }
}

#[test]
fn zero_configuration_has_zero_design() {
    let spec = PoissonSpec::new(2).unwrap().with_true_s(vec![false; 5]).unwrap();
    let (inst, _) = gen_poisson::<f64>(&spec).unwrap();
    assert!(inst.y.iter().all(|z| *z == Complex::new(0.0, 0.0)));
    let rec = reconstruct(&spec, &inst.y).unwrap();
    assert_eq!(rec.state, vec![false; 5]);
    assert!(rec.value.abs() < 1e-12);
}

#[test]
fn response_rank_is_bounded_by_measured_modes() {
    for n in 2..=4 {
        let spec = PoissonSpec::new(n).unwrap();
        let (inst, _) = gen_poisson::<f64>(&spec).unwrap();
        let (rj, _) = inst.response_products().unwrap();
        assert!(rj.rank(1e-12 * rj.norm()) <= n * n);
    }
}

/// Site index permutation for the reflection `(x1, x2) -> (x2, x1)`.
fn reflect_sites(spec: &PoissonSpec) -> Vec<usize> {
    let sites = spec.sites();
    sites
        .iter()
        .map(|&(a, b)| sites.iter().position(|&(c, d)| (c - b).abs() < 1e-12 && (d - a).abs() < 1e-12).unwrap())
        .collect()
}

#[test]
fn reflection_symmetric_charges_give_symmetric_field() {
    for n in [2, 3] {
        let spec = PoissonSpec::new(n).unwrap();
        let perm = reflect_sites(&spec);
        let side = 10 * n - 1;
        for code in [0b1u64, 0b10110, 0b1_0110_0101_1010] {
            let raw = bits::from_code(code, spec.p());
            let s: Vec<bool> = (0..spec.p()).map(|k| raw[k] || raw[perm[k]]).collect();
            let field = potential_field::<f64>(&spec, &s).unwrap();
            let scale = field.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..side {
                for j in 0..side {
                    let (a, b) = (field.values[j * side + i], field.values[i * side + j]);
                    assert!((a - b).abs() <= 1e-10 * scale.max(1.0));
                }
            }
        }
    }
}

#[test]
fn field_is_linear_in_disjoint_charges() {
    let spec = PoissonSpec::new(3).unwrap();
    let p = spec.p();
    let zero = potential_field::<f64>(&spec, &vec![false; p]).unwrap();
    assert!(zero.values.iter().all(|&v| v == 0.0));
    let a = bits::from_code(0b0_0101_0010_1001, p);
    let b = bits::from_code(0b1_0010_1000_0100, p);
    let both: Vec<bool> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
    let (fa, fb, fab) = (
        potential_field::<f64>(&spec, &a).unwrap(),
        potential_field::<f64>(&spec, &b).unwrap(),
        potential_field::<f64>(&spec, &both).unwrap(),
    );
    for k in 0..fab.values.len() {
        assert!((fa.values[k] + fb.values[k] - fab.values[k]).abs() < 1e-12);
    }
    assert!(potential_field::<f64>(&spec, &a[..4]).is_err());
}

#[test]
fn small_ensemble_properties() {
    let rows = ensemble_stats::<f64>(2, InstanceSelection::All, &EnsembleOptions::default()).unwrap();
    assert_eq!(rows.len(), 32);
    for r in &rows {
        let (min, fin) = (r.min_gap.unwrap(), r.final_gap.unwrap());
        assert!(min >= 0.0 && fin >= 0.0 && min <= fin);
        assert!(r.hamming >= 1);
        assert_eq!(bits::code(&r.true_s), r.instance);
    }
    let classical = ensemble_stats::<f64>(
        4,
        InstanceSelection::Sample { count: 3, seed: 1 },
        &EnsembleOptions { classical_only: true, ..Default::default() },
    )
    .unwrap();
    assert_eq!(classical.len(), 3);
    assert!(classical.iter().all(|r| r.min_gap.is_none() && r.hamming >= 1));
}

#[test]
fn annealing_heuristic_finds_most_small_minima() {
    let spec = PoissonSpec::new(2).unwrap();
    let mut hits = 0;
    for true_s in all_states(5) {
        let (inst, _) = gen_poisson::<f64>(&spec.clone().with_true_s(true_s).unwrap()).unwrap();
        let qubo = poisson_qubo(&inst).unwrap();
        let exact = solve_exhaustive(&qubo).unwrap().value;
        let schedule = SaSchedule::for_problem(&qubo, 200, 10, 7).unwrap();
        let (_, value) = solve_sa(&qubo, &schedule);
        assert!(value >= exact - 1e-12);
        if (value - exact).abs() <= 1e-9 {
            hits += 1;
        }
    }
    assert!(hits * 100 >= 95 * 32, "{hits}/32");
}

#[test]
fn design_vector_override() {
    let spec = PoissonSpec::new(2).unwrap();
    let y = DVector::from_element(4, Complex::new(1.0, 0.0));
    let rec = reconstruct(&spec, &y).unwrap();
    assert_eq!(rec.state.len(), 5);
    assert!(rec.runner_up_value >= rec.value);
}
