//! PDE-constrained fast path.
//!
//! An observation `x2a = K^H x2b` of a field satisfying `E x2b = f + J x1` is
//! fitted to a design vector `y` in the metric `G`. With `R = K^H E^-1` the
//! discrete problem is
//!
//! ```text
//! H = (R J)^H G (R J),   g = 2 (R J)^H G (R f - y),   f = (R f - y)^H G (R f - y)
//! ```
//!
//! which only needs `min(n1 + 1, n2a)` solves with `E`.

mod operator;

use std::sync::Arc;

use nalgebra::{Complex, ComplexField};
use num_traits::Zero;

pub use operator::{gmres, CallbackOperator, LinearOperator, OperatorKind, VectorFn, VectorMap};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, hermitian_eigen, hermitize, max_abs};
use crate::problem::{QcmdoProblem, VariableDomain};
use crate::reduction::{QudoProblem, Recovery};
use crate::scalar::{CMatrix, CVector, Real};

/// How observations depend on the field.
#[derive(Debug, Clone)]
pub enum FieldModel<T: Real> {
    /// Field operator `E` (n2b x n2b) and measurement matrix `K` (n2b x n2a).
    Operator { e: Arc<LinearOperator<T>>, k: CMatrix<T> },
    /// The composed response `K^H E^-1` (n2a x n2b), when only that is known.
    Response(CMatrix<T>),
}

/// A PDE-constrained fitting problem over discrete controls.
#[derive(Debug, Clone)]
pub struct PdeInstance<T: Real> {
    pub field: FieldModel<T>,
    /// Control-to-source map, n2b x n1.
    pub j: CMatrix<T>,
    /// Uncontrolled source, length n2b.
    pub f: CVector<T>,
    /// Design vector, length n2a.
    pub y: CVector<T>,
    /// Metric, n2a x n2a.
    pub g: CMatrix<T>,
    pub domains: Vec<VariableDomain<T>>,
}

impl<T: Real> PdeInstance<T> {
    /// Checks dimensions and that `G` is Hermitian positive definite.
    pub fn new(
        field: FieldModel<T>,
        j: CMatrix<T>,
        f: CVector<T>,
        y: CVector<T>,
        g: CMatrix<T>,
        domains: Vec<VariableDomain<T>>,
    ) -> Result<Self> {
        let inst = Self::unchecked_metric(field, j, f, y, g, domains)?;
        if !metric_is_positive(&inst.g, true) {
            return Err(Error::MetricNotPositiveDefinite);
        }
        Ok(inst)
    }

    fn unchecked_metric(
        field: FieldModel<T>,
        j: CMatrix<T>,
        f: CVector<T>,
        y: CVector<T>,
        g: CMatrix<T>,
        domains: Vec<VariableDomain<T>>,
    ) -> Result<Self> {
        let (n2a, n2b) = match &field {
            FieldModel::Operator { e, k } => {
                check_len("K rows", e.dim(), k.nrows())?;
                (k.ncols(), e.dim())
            }
            FieldModel::Response(r) => (r.nrows(), r.ncols()),
        };
        check_len("J rows", n2b, j.nrows())?;
        check_len("J columns", domains.len(), j.ncols())?;
        check_len("f", n2b, f.len())?;
        check_len("y", n2a, y.len())?;
        check_len("G rows", n2a, g.nrows())?;
        check_len("G columns", n2a, g.ncols())?;
        if domains.iter().any(|d| !d.is_discrete()) {
            return Err(Error::InvalidParameter("control variables must be discrete".into()));
        }
        Ok(Self { field, j, f, y, g: hermitize(&g), domains })
    }

    /// Replaces the metric. Positive semidefinite metrics are accepted here,
    /// which is what the diagonalizing metric is when `n1 < n2a`.
    pub fn with_metric(&self, g: CMatrix<T>) -> Result<Self> {
        let inst = Self::unchecked_metric(
            self.field.clone(),
            self.j.clone(),
            self.f.clone(),
            self.y.clone(),
            g,
            self.domains.clone(),
        )?;
        if !metric_is_positive(&inst.g, false) {
            return Err(Error::MetricNotPositiveDefinite);
        }
        Ok(inst)
    }

    pub fn n1(&self) -> usize {
        self.domains.len()
    }

    pub fn n2a(&self) -> usize {
        self.y.len()
    }

    pub fn n2b(&self) -> usize {
        self.f.len()
    }

    /// `(R J, R f)` with `R = K^H E^-1`.
    ///
    /// Solves on `[f J]` or adjoint solves on the columns of `K`, whichever
    /// needs fewer.
    pub fn response_products(&self) -> Result<(CMatrix<T>, CVector<T>)> {
        match &self.field {
            FieldModel::Response(r) => Ok((r * &self.j, r * &self.f)),
            FieldModel::Operator { e, k } => {
                let (n1, n2a) = (self.n1(), self.n2a());
                if n2a < n1 + 1 && e.supports_adjoint() {
                    let mut r_adj = CMatrix::zeros(self.n2b(), n2a);
                    for i in 0..n2a {
                        let col = e.solve_adjoint(&k.column(i).into_owned())?;
                        r_adj.set_column(i, &col);
                    }
                    let r = r_adj.adjoint();
                    Ok((&r * &self.j, &r * &self.f))
                } else {
                    let k_adj = k.adjoint();
                    let rf = &k_adj * e.solve(&self.f)?;
                    let mut rj = CMatrix::zeros(n2a, n1);
                    for i in 0..n1 {
                        let z = e.solve(&self.j.column(i).into_owned())?;
                        rj.set_column(i, &(&k_adj * z));
                    }
                    Ok((rj, rf))
                }
            }
        }
    }
}

fn metric_is_positive<T: Real>(g: &CMatrix<T>, strict: bool) -> bool {
    if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return false;
    }
    if linalg::hermiticity_defect(g) > T::lit(T::HERMITIAN_TOL) * max_abs(g) {
        return false;
    }
    let (values, _) = hermitian_eigen(&hermitize(g));
    let norm = values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let band = T::lit(T::PSD_TOL) * norm;
    match values.first() {
        None => true,
        Some(&min) if strict => min > band,
        Some(&min) => min >= -band,
    }
}

/// Field operator, `K`, `f` and `J`, kept when the field can be solved for.
type FieldData<T> = (Arc<LinearOperator<T>>, CMatrix<T>, CVector<T>, CMatrix<T>);

/// Continuous recovery for the fast path.
#[derive(Debug, Clone)]
pub struct PdeRecovery<T: Real> {
    /// `R f`.
    pub observation_const: CVector<T>,
    /// `R J`.
    pub observation_lin: CMatrix<T>,
    field: Option<FieldData<T>>,
}

impl<T: Real> PdeRecovery<T> {
    /// Observation `x2a` and, when the field operator is known, the field
    /// `x2b = E^-1 (f + J x1)` with `x2a = K^H x2b`.
    pub fn recover(&self, x1: &CVector<T>) -> Result<(CVector<T>, Option<CVector<T>>)> {
        check_len("x1", self.observation_lin.ncols(), x1.len())?;
        match &self.field {
            Some((e, k, f, j)) => {
                let x2b = e.solve(&(f + j * x1))?;
                Ok((k.adjoint() * &x2b, Some(x2b)))
            }
            None => Ok((&self.observation_const + &self.observation_lin * x1, None)),
        }
    }
}

/// Builds the discrete problem directly from the PDE data.
pub fn reduce_pde<T: Real>(inst: &PdeInstance<T>) -> Result<QudoProblem<T>> {
    let (rj, rf) = inst.response_products()?;
    let residual = &rf - &inst.y;
    let g_rj = &inst.g * &rj;
    let h = hermitize(&(rj.adjoint() * &g_rj));
    let two = T::lit(2.0);
    let g = (g_rj.adjoint() * &residual).map(|z| z.scale(two));
    let f = linalg::quadratic_form(&inst.g, &residual).re;
    let field = match &inst.field {
        FieldModel::Operator { e, k } => Some((Arc::clone(e), k.clone(), inst.f.clone(), inst.j.clone())),
        FieldModel::Response(_) => None,
    };
    let recovery = PdeRecovery { observation_const: rf, observation_lin: rj, field };
    Ok(QudoProblem { h, g, f, domains: inst.domains.clone(), recovery: Recovery::Pde(Box::new(recovery)) })
}

/// The same instance in the general constrained form.
///
/// With an explicit operator the variables are `[x1; x2a; x2b]` with
/// constraints `x2a - K^H x2b = 0` and `E x2b - J x1 = f`. With only the
/// composed response the field is already eliminated, so the variables are
/// `[x1; x2a]` with the single block constraint `x2a - R J x1 = R f`.
pub fn build_qcmdo_from_pde<T: Real>(inst: &PdeInstance<T>) -> Result<QcmdoProblem<T>> {
    let (n1, n2a) = (inst.n1(), inst.n2a());
    let zero = Complex::<T>::zero();
    let two = T::lit(2.0);
    let gy = &inst.g * &inst.y;
    let c = Complex::new(inst.y.dotc(&gy).re, T::zero());

    let (n2b, f_mat, d) = match &inst.field {
        FieldModel::Operator { e, k } => {
            let e_dense = e.to_dense()?;
            let n2b = e.dim();
            let n = n1 + n2a + n2b;
            let mut f_mat = CMatrix::from_element(n2a + n2b, n, zero);
            f_mat.view_mut((0, n1), (n2a, n2a)).fill_with_identity();
            f_mat.view_mut((0, n1 + n2a), (n2a, n2b)).copy_from(&(-k.adjoint()));
            f_mat.view_mut((n2a, 0), (n2b, n1)).copy_from(&(-&inst.j));
            f_mat.view_mut((n2a, n1 + n2a), (n2b, n2b)).copy_from(&e_dense);
            let mut d = CVector::from_element(n2a + n2b, zero);
            d.rows_mut(n2a, n2b).copy_from(&inst.f);
            (n2b, f_mat, d)
        }
        FieldModel::Response(r) => {
            let rj = r * &inst.j;
            let mut f_mat = CMatrix::from_element(n2a, n1 + n2a, zero);
            f_mat.view_mut((0, 0), (n2a, n1)).copy_from(&(-rj));
            f_mat.view_mut((0, n1), (n2a, n2a)).fill_with_identity();
            (0, f_mat, r * &inst.f)
        }
    };
    let n = n1 + n2a + n2b;
    let mut a = CMatrix::from_element(n, n, zero);
    a.view_mut((n1, n1), (n2a, n2a)).copy_from(&inst.g);
    let mut b = CVector::from_element(n, zero);
    b.rows_mut(n1, n2a).copy_from(&gy.map(|z| -z.scale(two)));
    let mut domains = inst.domains.clone();
    domains.extend(std::iter::repeat_n(VariableDomain::Continuous, n2a + n2b));
    QcmdoProblem::new(a, b, c, f_mat, d, domains)
}

/// Metric `G = (R J)^{P H} D (R J)^P` that makes `H` equal to `D`.
pub fn design_metric_for_diagonal_h<T: Real>(inst: &PdeInstance<T>, dbar: &[T]) -> Result<CMatrix<T>> {
    let (n1, n2a) = (inst.n1(), inst.n2a());
    check_len("Dbar", n1, dbar.len())?;
    if n1 > n2a {
        return Err(Error::TooManyDiscrete { n1, n2a });
    }
    if dbar.iter().any(|&d| d <= T::zero() || !d.is_finite()) {
        return Err(Error::InvalidParameter("Dbar must be positive".into()));
    }
    let (rj, _) = inst.response_products()?;
    let (pinv, rank) = linalg::pinv(&rj);
    if rank < n1 {
        return Err(Error::RankDeficientResponse { rank, n1 });
    }
    let d = CVector::from_iterator(n1, dbar.iter().map(|&v| Complex::new(v, T::zero())));
    let scaled = CMatrix::from_fn(n1, n2a, |i, j| pinv[(i, j)] * d[i]);
    Ok(hermitize(&(pinv.adjoint() * scaled)))
}

/// Minimizes a problem with diagonal `H` one variable at a time.
pub fn minimize_separable<T: Real>(qudo: &QudoProblem<T>) -> Result<(CVector<T>, T)> {
    let n1 = qudo.n1();
    let scale = max_abs(&qudo.h);
    let tol = T::lit(1e-8) * scale;
    for i in 0..n1 {
        for j in 0..n1 {
            if i != j && qudo.h[(i, j)].modulus() > tol {
                return Err(Error::NotDiagonal);
            }
        }
    }
    let mut x = CVector::zeros(n1);
    let mut total = qudo.f;
    for i in 0..n1 {
        let hii = qudo.h[(i, i)].re;
        let gi = qudo.g[i];
        let values = qudo.domains[i].values().ok_or(Error::EmptyDomain)?;
        let (best, cost) = values
            .iter()
            .map(|&v| (v, hii * v.norm_sqr() + (v.conj() * gi).re))
            .min_by(|a, b| a.1.as_f64().total_cmp(&b.1.as_f64()))
            .ok_or(Error::EmptyDomain)?;
        x[i] = best;
        total += cost;
    }
    Ok((x, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;

    fn eye(n: usize) -> CMatrix<f64> {
        CMatrix::identity(n, n)
    }

    fn identity_instance(j: CMatrix<f64>, y: CVector<f64>) -> PdeInstance<f64> {
        let n = j.nrows();
        let n1 = j.ncols();
        PdeInstance::new(
            FieldModel::Operator { e: Arc::new(LinearOperator::identity(n)), k: eye(n) },
            j,
            CVector::zeros(n),
            y,
            eye(n),
            vec![VariableDomain::binary(); n1],
        )
        .unwrap()
    }

    #[test]
    fn zero_controls_make_every_assignment_tie() {
        let y = CVector::from_vec(vec![re(1.0), re(-2.0)]);
        let inst = identity_instance(CMatrix::zeros(2, 2), y);
        let q = reduce_pde(&inst).unwrap();
        assert_eq!(q.h, CMatrix::zeros(2, 2));
        assert_eq!(q.g, CVector::zeros(2));
        assert!((q.f - 5.0).abs() < 1e-15);
    }

    #[test]
    fn identity_operators_give_gram_matrix() {
        let j = CMatrix::from_row_slice(3, 2, &[re(1.0), re(2.0), re(0.5), re(-1.0), re(0.0), re(3.0)]);
        let y = CVector::from_vec(vec![re(0.3), re(-0.7), re(1.1)]);
        let q = reduce_pde(&identity_instance(j.clone(), y.clone())).unwrap();
        assert!((&q.h - j.adjoint() * &j).norm() < 1e-14);
        assert!((&q.g + (j.adjoint() * &y).map(|z| z * 2.0)).norm() < 1e-14);
    }

    #[test]
    fn scalar_instance_in_general_form() {
        let j = CMatrix::from_element(1, 1, re(1.0));
        let inst = identity_instance(j, CVector::zeros(1));
        let p = build_qcmdo_from_pde(&inst).unwrap();
        let expected = CMatrix::from_row_slice(2, 3, &[re(0.0), re(1.0), re(-1.0), re(-1.0), re(0.0), re(1.0)]);
        assert_eq!(p.f(), &expected);
        assert_eq!(p.d(), &CVector::zeros(2));
        assert_eq!(p.c(), 0.0);
    }

    #[test]
    fn callback_operator_is_not_materializable() {
        let apply: VectorMap<f64> = Arc::new(|v: &CVector<f64>| v.clone());
        let op = LinearOperator::callback(CallbackOperator {
            dim: 1,
            apply,
            apply_adjoint: None,
            preconditioner: None,
            max_iterations: None,
        });
        let inst = PdeInstance::new(
            FieldModel::Operator { e: Arc::new(op), k: eye(1) },
            eye(1),
            CVector::zeros(1),
            CVector::zeros(1),
            eye(1),
            vec![VariableDomain::binary()],
        )
        .unwrap();
        assert_eq!(build_qcmdo_from_pde(&inst).unwrap_err(), Error::OperatorNotMaterializable);
        assert!(reduce_pde(&inst).is_ok());
    }

    #[test]
    fn square_response_with_unit_weights_gives_identity() {
        let j = CMatrix::from_row_slice(2, 2, &[re(2.0), re(1.0), re(0.0), re(1.0)]);
        let inst = identity_instance(j, CVector::zeros(2));
        let g = design_metric_for_diagonal_h(&inst, &[1.0, 1.0]).unwrap();
        let q = reduce_pde(&inst.with_metric(g).unwrap()).unwrap();
        assert!((&q.h - eye(2)).norm() < 1e-12);
    }

    #[test]
    fn metric_errors() {
        let inst = identity_instance(CMatrix::from_element(1, 2, re(1.0)), CVector::zeros(1));
        assert!(matches!(design_metric_for_diagonal_h(&inst, &[1.0, 1.0]), Err(Error::TooManyDiscrete { .. })));
        let inst =
            identity_instance(CMatrix::from_row_slice(2, 2, &[re(1.0), re(1.0), re(1.0), re(1.0)]), CVector::zeros(2));
        assert!(matches!(
            design_metric_for_diagonal_h(&inst, &[1.0, 1.0]),
            Err(Error::RankDeficientResponse { rank: 1, n1: 2 })
        ));
        let bad = PdeInstance::new(
            FieldModel::Response(eye(2)),
            eye(2),
            CVector::zeros(2),
            CVector::zeros(2),
            CMatrix::from_diagonal(&CVector::from_vec(vec![re(1.0), re(0.0)])),
            vec![VariableDomain::binary(); 2],
        );
        assert_eq!(bad.unwrap_err(), Error::MetricNotPositiveDefinite);
    }

    #[test]
    fn separable_minimization_rejects_coupled_problems() {
        let q = QudoProblem::new(
            CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.5), re(0.5), re(1.0)]),
            CVector::zeros(2),
            0.0,
            vec![VariableDomain::binary(); 2],
        )
        .unwrap();
        assert_eq!(minimize_separable(&q).unwrap_err(), Error::NotDiagonal);
    }
}
