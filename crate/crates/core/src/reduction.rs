//! Constraint elimination and continuous minimization.
//!
//! The continuous block is written as `x2 = x2* + Vbar xbar2` with
//! `x2* = F2^P (d - F1 x1)` from the SVD of `F2`, which turns the problem into
//! an unconstrained one over `[x1; xbar2]`. Minimizing out `xbar2` in closed
//! form leaves a quadratic unconstrained discrete problem over `x1` alone.

use nalgebra::{Complex, ComplexField};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, hermitian_eigen, hermitize, max_abs};
use crate::pde::PdeRecovery;
use crate::problem::{f2_rank_margin, BlockPartition, QcmdoProblem, VariableDomain, ViolationCode};
use crate::scalar::{CMatrix, CVector, Real};

/// Result of removing the linear constraints.
#[derive(Debug, Clone)]
pub struct ConstraintElimination<T: Real> {
    pub partition: BlockPartition<T>,
    /// Left singular vectors of `F2` (m x m).
    pub u: CMatrix<T>,
    /// Singular values of `F2`, descending.
    pub singular_values: Vec<T>,
    /// Right singular vectors for the nonzero singular values (n2 x m).
    pub v: CMatrix<T>,
    /// Orthonormal basis of the nullspace of `F2` (n2 x (n2 - m)).
    pub vbar: CMatrix<T>,
    pub f2_pinv: CMatrix<T>,
    /// Maps `[x1; xbar2]` to the partition-ordered `[x1; x2 - F2^P d]`.
    pub w: CMatrix<T>,
    pub abar: CMatrix<T>,
    pub bbar: CVector<T>,
    pub cbar: T,
    /// `F2^P d`.
    pub x2_particular_const: CVector<T>,
    /// `-F2^P F1`.
    pub x2_particular_lin: CMatrix<T>,
}

impl<T: Real> ConstraintElimination<T> {
    pub fn n1(&self) -> usize {
        self.partition.n1()
    }

    /// Dimension of the free continuous remainder, `n2 - m`.
    pub fn free_dim(&self) -> usize {
        self.vbar.ncols()
    }

    /// Continuous block for the given discrete part and free coordinates.
    pub fn continuous_part(&self, x1: &CVector<T>, xbar2: &CVector<T>) -> Result<CVector<T>> {
        check_len("x1", self.n1(), x1.len())?;
        check_len("xbar2", self.free_dim(), xbar2.len())?;
        Ok(&self.x2_particular_const + &self.x2_particular_lin * x1 + &self.vbar * xbar2)
    }

    /// Full vector in the original variable order.
    pub fn assemble(&self, x1: &CVector<T>, xbar2: &CVector<T>) -> Result<CVector<T>> {
        let x2 = self.continuous_part(x1, xbar2)?;
        self.partition.assemble(x1, &x2)
    }

    /// `xbar^H Abar xbar + Re(xbar^H bbar) + cbar`.
    pub fn reduced_objective(&self, x1: &CVector<T>, xbar2: &CVector<T>) -> Result<T> {
        check_len("x1", self.n1(), x1.len())?;
        check_len("xbar2", self.free_dim(), xbar2.len())?;
        let xbar = stack(x1, xbar2);
        Ok(linalg::quadratic_form(&self.abar, &xbar).re + xbar.dotc(&self.bbar).re + self.cbar)
    }
}

fn stack<T: Real>(top: &CVector<T>, bottom: &CVector<T>) -> CVector<T> {
    CVector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).copied())
}

/// Removes `F x = d` through the SVD of the continuous block `F2`.
///
/// With no constraints this is a pass-through with `W = I`.
pub fn eliminate_constraints<T: Real>(problem: &QcmdoProblem<T>) -> Result<ConstraintElimination<T>> {
    let report = problem.validate();
    if report.has(ViolationCode::RankDeficientF2) {
        let f2 = BlockPartition::new(problem).f2;
        let (sigma_min, cutoff) = f2_rank_margin(&f2);
        return Err(Error::RankDeficientF2 { sigma_min: sigma_min.as_f64(), cutoff: cutoff.as_f64() });
    }
    if !report.is_valid() {
        return Err(Error::InvalidProblem(report));
    }
    let part = BlockPartition::new(problem);
    let (n1, n2, m) = (part.n1(), part.n2(), problem.m());

    let (u, singular_values, v) = linalg::svd(&part.f2);
    let vbar = linalg::orthonormal_complement(&v);
    let mut f2_pinv = CMatrix::zeros(n2, m);
    for (k, s) in singular_values.iter().enumerate() {
        f2_pinv += (v.column(k) * u.column(k).adjoint()).map(|z| z.unscale(*s));
    }
    let x2_particular_const = &f2_pinv * problem.d();
    let x2_particular_lin = -(&f2_pinv * &part.f1);

    let free = vbar.ncols();
    let mut w = CMatrix::zeros(n1 + n2, n1 + free);
    w.view_mut((0, 0), (n1, n1)).fill_with_identity();
    w.view_mut((n1, 0), (n2, n1)).copy_from(&x2_particular_lin);
    w.view_mut((n1, n1), (n2, free)).copy_from(&vbar);

    let mut a_part = CMatrix::zeros(n1 + n2, n1 + n2);
    a_part.view_mut((0, 0), (n1, n1)).copy_from(&part.a11);
    a_part.view_mut((0, n1), (n1, n2)).copy_from(&part.a12);
    a_part.view_mut((n1, 0), (n2, n1)).copy_from(&part.a21);
    a_part.view_mut((n1, n1), (n2, n2)).copy_from(&part.a22);
    let b_part = stack(&part.b1, &part.b2);
    let shift = stack(&CVector::zeros(n1), &x2_particular_const);

    let w_adj = w.adjoint();
    let abar = hermitize(&(&w_adj * &a_part * &w));
    let two = T::lit(2.0);
    let bbar = &w_adj * &b_part + (&w_adj * (&a_part * &shift)).map(|z| z.scale(two));
    let cbar = problem.c()
        + linalg::quadratic_form(&part.a22, &x2_particular_const).re
        + part.b2.dotc(&x2_particular_const).re;

    Ok(ConstraintElimination {
        partition: part,
        u,
        singular_values,
        v,
        vbar,
        f2_pinv,
        w,
        abar,
        bbar,
        cbar,
        x2_particular_const,
        x2_particular_lin,
    })
}

/// Everything needed to rebuild the optimal continuous variables for a
/// given discrete assignment.
#[derive(Debug, Clone)]
pub struct ContinuousRecovery<T: Real> {
    pub a22bar_pinv: CMatrix<T>,
    pub bbar2: CVector<T>,
    pub abar21: CMatrix<T>,
    pub x2_particular_const: CVector<T>,
    pub x2_particular_lin: CMatrix<T>,
    pub vbar: CMatrix<T>,
    pub discrete_indices: Vec<usize>,
    pub continuous_indices: Vec<usize>,
}

impl<T: Real> ContinuousRecovery<T> {
    /// Minimizing free coordinates `xbar2 = -Abar22^P (bbar2 / 2 + Abar21 x1)`.
    pub fn free_minimizer(&self, x1: &CVector<T>) -> Result<CVector<T>> {
        check_len("x1", self.discrete_indices.len(), x1.len())?;
        let half = T::lit(0.5);
        let rhs = self.bbar2.map(|z| z.scale(half)) + &self.abar21 * x1;
        Ok(-(&self.a22bar_pinv * rhs))
    }

    /// Optimal continuous block (in continuous-index order) for `x1`.
    pub fn recover_continuous(&self, x1: &CVector<T>) -> Result<CVector<T>> {
        let xbar2 = self.free_minimizer(x1)?;
        Ok(&self.x2_particular_const + &self.x2_particular_lin * x1 + &self.vbar * xbar2)
    }

    /// Full vector in the original variable order.
    pub fn assemble_full(&self, x1: &CVector<T>) -> Result<CVector<T>> {
        let x2 = self.recover_continuous(x1)?;
        let n = self.discrete_indices.len() + self.continuous_indices.len();
        let mut x = CVector::zeros(n);
        for (k, &i) in self.discrete_indices.iter().enumerate() {
            x[i] = x1[k];
        }
        for (k, &i) in self.continuous_indices.iter().enumerate() {
            x[i] = x2[k];
        }
        Ok(x)
    }
}

/// How continuous variables are rebuilt after the discrete problem is solved.
#[derive(Debug, Clone)]
pub enum Recovery<T: Real> {
    /// No continuous variables were eliminated.
    None,
    Dense(Box<ContinuousRecovery<T>>),
    Pde(Box<PdeRecovery<T>>),
}

/// `min x1^H H x1 + Re(x1^H g) + f` over the discrete sets.
#[derive(Debug, Clone)]
pub struct QudoProblem<T: Real> {
    pub h: CMatrix<T>,
    pub g: CVector<T>,
    pub f: T,
    pub domains: Vec<VariableDomain<T>>,
    pub recovery: Recovery<T>,
}

impl<T: Real> QudoProblem<T> {
    /// A directly specified problem; `h` is Hermitian-symmetrized.
    pub fn new(h: CMatrix<T>, g: CVector<T>, f: T, domains: Vec<VariableDomain<T>>) -> Result<Self> {
        let n1 = domains.len();
        check_len("H rows", n1, h.nrows())?;
        check_len("H columns", n1, h.ncols())?;
        check_len("g", n1, g.len())?;
        if domains.iter().any(|d| !d.is_discrete()) {
            return Err(Error::InvalidParameter("QUDO domains must all be discrete".into()));
        }
        Ok(Self { h: hermitize(&h), g, f, domains, recovery: Recovery::None })
    }

    pub fn n1(&self) -> usize {
        self.domains.len()
    }

    /// `x1^H H x1 + Re(x1^H g) + f`.
    pub fn value(&self, x1: &CVector<T>) -> Result<T> {
        check_len("x1", self.n1(), x1.len())?;
        Ok(linalg::quadratic_form(&self.h, x1).re + x1.dotc(&self.g).re + self.f)
    }

    /// Exhaustive minimum over the product of the discrete sets.
    ///
    /// Intended for small instances; returns the first minimizer in
    /// mixed-radix order over the canonical set orders.
    pub fn brute_force_minimum(&self) -> Result<(CVector<T>, T)> {
        let sets: Vec<&[Complex<T>]> = self.domains.iter().map(|d| d.values().unwrap_or(&[])).collect();
        if sets.iter().any(|s| s.is_empty()) {
            return Err(Error::EmptyDomain);
        }
        let mut idx = vec![0usize; sets.len()];
        let mut best: Option<(CVector<T>, T)> = None;
        loop {
            let x = CVector::from_iterator(sets.len(), idx.iter().zip(&sets).map(|(&i, s)| s[i]));
            let v = self.value(&x)?;
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((x, v));
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return Ok(best.expect("at least one assignment"));
                }
                idx[k] += 1;
                if idx[k] < sets[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Minimizes out the free continuous coordinates.
///
/// Fails with [`Error::UnboundedBelow`] if the free block of `Abar` has a
/// negative eigenvalue, and with [`Error::UnboundedLinear`] if its nullspace is
/// not orthogonal to the linear terms.
pub fn to_qudo<T: Real>(elim: &ConstraintElimination<T>, problem: &QcmdoProblem<T>) -> Result<QudoProblem<T>> {
    let n1 = elim.n1();
    let r = elim.free_dim();
    let abar = &elim.abar;
    let a11 = abar.view((0, 0), (n1, n1)).into_owned();
    let a12 = abar.view((0, n1), (n1, r)).into_owned();
    let a21 = abar.view((n1, 0), (r, n1)).into_owned();
    let a22 = abar.view((n1, n1), (r, r)).into_owned();
    let b1 = elim.bbar.rows(0, n1).into_owned();
    let b2 = elim.bbar.rows(n1, r).into_owned();

    let (values, vectors) = hermitian_eigen(&a22);
    let norm = values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let band = T::lit(T::PSD_TOL) * norm;
    if let Some(&min) = values.first() {
        if min < -band {
            return Err(Error::UnboundedBelow { min_eigenvalue: min.as_f64() });
        }
    }
    let scale = T::one().max(elim.bbar.norm()).max(max_abs(abar));
    let null_tol = T::lit(T::NULLSPACE_TOL) * scale;
    let mut pinv = CMatrix::zeros(r, r);
    for (k, &lambda) in values.iter().enumerate() {
        let nu = vectors.column(k);
        if lambda > band && !lambda.is_zero() {
            pinv += (nu * nu.adjoint()).map(|z| z.unscale(lambda));
        } else {
            let along_b = nu.dotc(&b2).modulus();
            let along_a = (nu.adjoint() * &a21).norm();
            let overlap = along_b.max(along_a);
            if overlap > null_tol {
                return Err(Error::UnboundedLinear { overlap: overlap.as_f64() });
            }
        }
    }
    let pinv = hermitize(&pinv);

    let h = hermitize(&(&a11 - &a12 * &pinv * &a21));
    let g = &b1 - &a12 * (&pinv * &b2);
    let f = elim.cbar - T::lit(0.25) * linalg::quadratic_form(&pinv, &b2).re;

    let domains = elim.partition.discrete_indices.iter().map(|&i| problem.domains()[i].clone()).collect();
    let recovery = ContinuousRecovery {
        a22bar_pinv: pinv,
        bbar2: b2,
        abar21: a21,
        x2_particular_const: elim.x2_particular_const.clone(),
        x2_particular_lin: elim.x2_particular_lin.clone(),
        vbar: elim.vbar.clone(),
        discrete_indices: elim.partition.discrete_indices.clone(),
        continuous_indices: elim.partition.continuous_indices.clone(),
    };
    Ok(QudoProblem { h, g, f, domains, recovery: Recovery::Dense(Box::new(recovery)) })
}

/// Convenience: validation, elimination and continuous minimization.
pub fn reduce<T: Real>(problem: &QcmdoProblem<T>) -> Result<QudoProblem<T>> {
    let elim = eliminate_constraints(problem)?;
    to_qudo(&elim, problem)
}

/// Optimal continuous block for a discrete assignment.
pub fn recover_continuous<T: Real>(recovery: &ContinuousRecovery<T>, x1: &CVector<T>) -> Result<CVector<T>> {
    recovery.recover_continuous(x1)
}

#[allow(dead_code)]
fn _assert_send_sync<T: Real>() {
    fn check<S: Send + Sync>() {}
    check::<QudoProblem<T>>();
}
