mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qcmdo_core::reduction::Recovery;
use qcmdo_core::solvers::solve_exhaustive;
use qcmdo_core::{assemble_qubo, reduce, EncodingPolicy, Error, QcmdoProblem, VariableDomain};

#[test]
fn qubo_minimum_matches_mixed_oracle() {
    let mut rng = rng(11);
    for _ in 0..40 {
        let problem = random_qcmdo(&mut rng);
        let (want, _) = oracle_minimum(&problem);
        let qudo = reduce(&problem).unwrap();
        for policy in [EncodingPolicy::PreferBinaryExpansionElseOneHot, EncodingPolicy::ForceOneHot] {
            let qubo = assemble_qubo(&qudo, policy).unwrap();
            let got = solve_exhaustive(&qubo).unwrap();
            assert!(rel_close(got.value, want, 1e-8), "{} vs {want}", got.value);
        }
    }
}

#[test]
fn recovered_solution_is_feasible_and_optimal() {
    let mut rng = rng(12);
    for _ in 0..40 {
        let problem = random_qcmdo(&mut rng);
        let qudo = reduce(&problem).unwrap();
        let qubo = assemble_qubo(&qudo, EncodingPolicy::default()).unwrap();
        let best = solve_exhaustive(&qubo).unwrap();
        let (x1, valid) = qubo.decode(&best.state).unwrap();
        assert!(valid);
        let Recovery::Dense(rec) = &qudo.recovery else { panic!("dense recovery expected") };
        let x = rec.assemble_full(&x1).unwrap();
        let tol = 1e-9 * 1f64.max(problem.d().norm());
        assert!(problem.constraint_residual(&x).unwrap() <= tol);
        assert!(rel_close(objective_loops(&problem, &x), best.value, 1e-8));
        // The recovered continuous part is the KKT solution for these discrete values.
        let disc: Vec<_> = (0..problem.n()).filter(|&i| problem.domains()[i].is_discrete()).map(|i| x[i]).collect();
        let oracle = kkt_completion(&problem, &disc).unwrap();
        assert!((oracle - &x).norm() <= 1e-7 * 1f64.max(x.norm()));
    }
}

#[test]
fn indefinite_continuous_block_is_unbounded() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-1.0)]));
    let b = DVector::from_vec(vec![c(0.0), c(0.0)]);
    let problem =
        QcmdoProblem::unconstrained(a, b, 0.0, vec![VariableDomain::binary(), VariableDomain::Continuous]).unwrap();
    assert!(matches!(reduce(&problem), Err(Error::UnboundedBelow { .. })));
}

#[test]
fn linear_term_along_nullspace_is_unbounded() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(0.0)]));
    let b = DVector::from_vec(vec![c(0.0), c(1.0)]);
    let problem =
        QcmdoProblem::unconstrained(a, b, 0.0, vec![VariableDomain::binary(), VariableDomain::Continuous]).unwrap();
    assert!(matches!(reduce(&problem), Err(Error::UnboundedLinear { .. })));
}

#[test]
fn rank_deficient_constraints_are_rejected() {
    let n = 3;
    let a = DMatrix::identity(n, n).map(|v: f64| c(v));
    let b = DVector::zeros(n);
    // Both rows act on the continuous block identically.
    let f = DMatrix::from_row_slice(2, n, &[c(1.0), c(1.0), c(1.0), c(0.0), c(1.0), c(1.0)]);
    let d = DVector::from_vec(vec![c(1.0), c(1.0)]);
    let domains = vec![VariableDomain::binary(), VariableDomain::Continuous, VariableDomain::Continuous];
    let problem = QcmdoProblem::new(a, b, c(0.0), f, d, domains).unwrap();
    let err = reduce(&problem).unwrap_err();
    assert!(matches!(err, Error::RankDeficientF2 { .. }));
    assert!(err.to_string().contains("rank(F2) = m"));
}

#[test]
fn single_precision_pipeline() {
    let mut rng = rng(13);
    for _ in 0..10 {
        let p64 = random_qcmdo(&mut rng);
        let (want, _) = oracle_minimum(&p64);
        let cast = |m: &DMatrix<C>| m.map(|z| nalgebra::Complex::new(z.re as f32, z.im as f32));
        let castv = |v: &DVector<C>| v.map(|z| nalgebra::Complex::new(z.re as f32, z.im as f32));
        let domains = p64
            .domains()
            .iter()
            .map(|d| match d.values() {
                None => VariableDomain::Continuous,
                Some(v) => VariableDomain::discrete(
                    v.iter().map(|z| nalgebra::Complex::new(z.re as f32, z.im as f32)).collect(),
                ),
            })
            .collect();
        let p32 = QcmdoProblem::<f32>::new(
            cast(p64.a()),
            castv(p64.b()),
            nalgebra::Complex::new(p64.c() as f32, 0.0),
            cast(p64.f()),
            castv(p64.d()),
            domains,
        )
        .unwrap();
        let qubo = assemble_qubo(&reduce(&p32).unwrap(), EncodingPolicy::default()).unwrap();
        let got = solve_exhaustive(&qubo).unwrap().value as f64;
        assert!(rel_close(got, want, 2e-3), "{got} vs {want}");
    }
}

fn c(v: f64) -> C {
    C::new(v, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qudo_value_equals_mixed_objective_at_recovered_point(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let problem = random_qcmdo(&mut rng);
        let qudo = reduce(&problem).unwrap();
        let Recovery::Dense(rec) = &qudo.recovery else { panic!("dense recovery expected") };
        // Every discrete assignment, not only the optimum.
        let sets: Vec<Vec<C>> = qudo.domains.iter().map(|d| d.values().unwrap().to_vec()).collect();
        for vals in assignments(&sets) {
            let x1 = DVector::from_vec(vals);
            let x = rec.assemble_full(&x1).unwrap();
            let v = qudo.value(&x1).unwrap();
            prop_assert!(rel_close(v, objective_loops(&problem, &x), 1e-8));
        }
    }

    #[test]
    fn qubo_value_matches_qudo_on_valid_codes(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let problem = random_qcmdo(&mut rng);
        let qudo = reduce(&problem).unwrap();
        let qubo = assemble_qubo(&qudo, EncodingPolicy::default()).unwrap();
        let p = qubo.p();
        for code in 0..(1u64 << p) {
            let s = qcmdo_core::bits::from_code(code, p);
            let (x1, valid) = qubo.decode(&s).unwrap();
            if valid {
                prop_assert!(rel_close(qubo.value(&s), qudo.value(&x1).unwrap(), 1e-9));
            }
        }
    }
}
