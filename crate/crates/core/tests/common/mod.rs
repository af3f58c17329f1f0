//! Random instances and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use qcmdo_core::{FieldModel, LinearOperator, PdeInstance, QcmdoProblem, QudoProblem, VariableDomain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cplx(rng: &mut impl Rng) -> C {
    C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_cmatrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<C> {
    DMatrix::from_fn(r, c, |_, _| cplx(rng))
}

pub fn random_cvector(rng: &mut impl Rng, n: usize) -> DVector<C> {
    DVector::from_fn(n, |_, _| cplx(rng))
}

/// Evenly spaced complex set of size `2^k` half the time when possible,
/// otherwise scattered points.
pub fn random_domain(rng: &mut impl Rng, size: usize) -> VariableDomain<f64> {
    if size.is_power_of_two() && rng.random_bool(0.5) {
        let start = cplx(rng);
        let step = cplx(rng) * 0.7 + C::new(0.2, 0.0);
        VariableDomain::discrete((0..size).map(|k| start + step * k as f64).collect())
    } else {
        VariableDomain::discrete((0..size).map(|_| cplx(rng) * 1.5).collect())
    }
}

/// `n <= 8`, `n1 <= 3`, set sizes `<= 4`, `m <= 3`, `A = B^H B + eps I`.
pub fn random_qcmdo(rng: &mut impl Rng) -> QcmdoProblem<f64> {
    let n1 = rng.random_range(1..=3usize);
    let m = rng.random_range(0..=3usize);
    let n2 = rng.random_range(m.max(1)..=(8 - n1));
    let n = n1 + n2;
    let b_mat = random_cmatrix(rng, n, n);
    let a = b_mat.adjoint() * &b_mat + DMatrix::identity(n, n) * C::new(0.1, 0.0);
    let b = random_cvector(rng, n);
    let c = C::new(rng.random_range(-1.0..1.0), 0.0);
    let f = random_cmatrix(rng, m, n);
    let d = random_cvector(rng, m);
    let mut domains: Vec<VariableDomain<f64>> = (0..n1)
        .map(|_| {
            let size = rng.random_range(1..=4usize);
            random_domain(rng, size)
        })
        .chain((0..n2).map(|_| VariableDomain::Continuous))
        .collect();
    // Interleave discrete and continuous positions.
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let a = DMatrix::from_fn(n, n, |i, j| a[(perm[i], perm[j])]);
    let b = DVector::from_fn(n, |i, _| b[perm[i]]);
    let f = DMatrix::from_fn(m, n, |i, j| f[(i, perm[j])]);
    domains = perm.iter().map(|&p| domains[p].clone()).collect();
    QcmdoProblem::new(a, b, c, f, d, domains).expect("well-formed")
}

/// `x^H A x + Re(x^H b) + Re(c)` with explicit loops.
pub fn objective_loops(p: &QcmdoProblem<f64>, x: &DVector<C>) -> f64 {
    let n = p.n();
    let mut total = C::new(p.c(), 0.0);
    for i in 0..n {
        for j in 0..n {
            total += x[i].conj() * p.a()[(i, j)] * x[j];
        }
        total += C::new((x[i].conj() * p.b()[i]).re, 0.0);
    }
    total.re
}

/// Optimal continuous variables for fixed discrete values, from the KKT
/// system `[[A22, F2^H], [F2, 0]] [x2; mu] = [-A21 x1 - b2/2; d - F1 x1]`
/// solved by LU. Returns the full vector.
pub fn kkt_completion(p: &QcmdoProblem<f64>, discrete_values: &[C]) -> Option<DVector<C>> {
    let n = p.n();
    let m = p.m();
    let disc: Vec<usize> = (0..n).filter(|&i| p.domains()[i].is_discrete()).collect();
    let cont: Vec<usize> = (0..n).filter(|&i| !p.domains()[i].is_discrete()).collect();
    let n2 = cont.len();
    let mut kkt = DMatrix::<C>::zeros(n2 + m, n2 + m);
    let mut rhs = DVector::<C>::zeros(n2 + m);
    for (r, &i) in cont.iter().enumerate() {
        for (c, &j) in cont.iter().enumerate() {
            kkt[(r, c)] = p.a()[(i, j)];
        }
        for k in 0..m {
            kkt[(r, n2 + k)] = p.f()[(k, i)].conj();
        }
        let mut v = -p.b()[i] * 0.5;
        for (t, &j) in disc.iter().enumerate() {
            v -= p.a()[(i, j)] * discrete_values[t];
        }
        rhs[r] = v;
    }
    for k in 0..m {
        for (c, &j) in cont.iter().enumerate() {
            kkt[(n2 + k, c)] = p.f()[(k, j)];
        }
        let mut v = p.d()[k];
        for (t, &j) in disc.iter().enumerate() {
            v -= p.f()[(k, j)] * discrete_values[t];
        }
        rhs[n2 + k] = v;
    }
    let sol = kkt.lu().solve(&rhs)?;
    let mut x = DVector::<C>::zeros(n);
    for (t, &i) in disc.iter().enumerate() {
        x[i] = discrete_values[t];
    }
    for (r, &i) in cont.iter().enumerate() {
        x[i] = sol[r];
    }
    Some(x)
}

/// Every assignment of the discrete variables, in mixed-radix order.
pub fn assignments(sets: &[Vec<C>]) -> Vec<Vec<C>> {
    let mut out = vec![Vec::new()];
    for set in sets {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                set.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

/// Brute-force minimum of the mixed problem over all discrete assignments.
pub fn oracle_minimum(p: &QcmdoProblem<f64>) -> (f64, DVector<C>) {
    let sets: Vec<Vec<C>> = p.domains().iter().filter_map(|d| d.values().map(|v| v.to_vec())).collect();
    assignments(&sets)
        .into_iter()
        .map(|vals| {
            let x = kkt_completion(p, &vals).expect("nonsingular KKT system");
            (objective_loops(p, &x), x)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one assignment")
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Random QUDO with at most three variables and `max_bits` total set size.
pub fn random_qudo(rng: &mut impl Rng, max_bits: usize) -> QudoProblem<f64> {
    let mut sizes = Vec::new();
    loop {
        let s = rng.random_range(1..=4);
        if sizes.iter().sum::<usize>() + s > max_bits || sizes.len() == 3 {
            break;
        }
        sizes.push(s);
    }
    if sizes.is_empty() {
        sizes.push(1);
    }
    let n1 = sizes.len();
    let b = random_cmatrix(rng, n1, n1);
    let h = (&b + b.adjoint()) * C::new(0.5, 0.0);
    let g = random_cvector(rng, n1);
    let domains = sizes.iter().map(|&s| random_domain(rng, s)).collect();
    QudoProblem::new(h, g, rng.random_range(-1.0..1.0), domains).unwrap()
}

/// Random PDE instance; `response` selects the composed form `K^H E^-1`.
pub fn random_pde_instance(rng: &mut impl Rng, n1: usize, n2a: usize, n2b: usize, response: bool) -> PdeInstance<f64> {
    let e = random_cmatrix(rng, n2b, n2b) + DMatrix::identity(n2b, n2b) * C::new(4.0, 0.0);
    let k = random_cmatrix(rng, n2b, n2a);
    let j = random_cmatrix(rng, n2b, n1);
    let f = random_cvector(rng, n2b);
    let y = random_cvector(rng, n2a);
    let gb = random_cmatrix(rng, n2a, n2a);
    let g = gb.adjoint() * &gb + DMatrix::identity(n2a, n2a) * C::new(0.5, 0.0);
    let domains = (0..n1)
        .map(|_| {
            let size = rng.random_range(2..=4);
            random_domain(rng, size)
        })
        .collect();
    let field = if response {
        FieldModel::Response(k.adjoint() * e.clone().try_inverse().unwrap())
    } else {
        FieldModel::Operator { e: Arc::new(LinearOperator::dense(e).unwrap()), k }
    };
    PdeInstance::new(field, j, f, y, g, domains).unwrap()
}
