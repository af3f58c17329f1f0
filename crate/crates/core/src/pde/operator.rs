//! Invertible linear operators for the field equation `E x = rhs`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, ComplexField, Dyn, LU};
use num_traits::Zero;

use crate::error::{check_len, Error, Result};
use crate::scalar::{CMatrix, CVector, Real};

pub type VectorFn<T> = dyn Fn(&CVector<T>) -> CVector<T> + Send + Sync;

/// Action of a linear map on a vector.
pub type VectorMap<T> = Arc<VectorFn<T>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    DenseMatrix,
    SpectralDiagonal,
    Callback,
}

/// Matrix-free operator solved with restarted GMRES.
#[derive(Clone)]
pub struct CallbackOperator<T: Real> {
    pub dim: usize,
    pub apply: VectorMap<T>,
    /// Action of `E^H`; enables adjoint solves.
    pub apply_adjoint: Option<VectorMap<T>>,
    /// Approximate inverse used as a right preconditioner.
    pub preconditioner: Option<VectorMap<T>>,
    /// Iteration cap; defaults to `10 * dim`.
    pub max_iterations: Option<usize>,
}

impl<T: Real> fmt::Debug for CallbackOperator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallbackOperator")
            .field("dim", &self.dim)
            .field("adjoint", &self.apply_adjoint.is_some())
            .field("preconditioner", &self.preconditioner.is_some())
            .finish()
    }
}

/// An invertible operator with `apply` and `solve`.
#[derive(Debug, Clone)]
pub enum LinearOperator<T: Real> {
    Dense {
        matrix: CMatrix<T>,
        lu: LU<Complex<T>, Dyn, Dyn>,
        adjoint_lu: LU<Complex<T>, Dyn, Dyn>,
    },
    /// Diagonal in the working basis; solves are exact divisions.
    SpectralDiagonal {
        eigenvalues: CVector<T>,
    },
    Callback(CallbackOperator<T>),
}

impl<T: Real> LinearOperator<T> {
    /// Dense operator; fails if the matrix is not square or is singular.
    pub fn dense(matrix: CMatrix<T>) -> Result<Self> {
        check_len("E columns", matrix.nrows(), matrix.ncols())?;
        let lu = matrix.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::InvalidParameter("field operator E is singular".into()));
        }
        let adjoint_lu = matrix.adjoint().lu();
        Ok(LinearOperator::Dense { matrix, lu, adjoint_lu })
    }

    pub fn spectral_diagonal(eigenvalues: CVector<T>) -> Result<Self> {
        if eigenvalues.iter().any(|z| z.is_zero()) {
            return Err(Error::InvalidParameter("spectral operator has a zero eigenvalue".into()));
        }
        Ok(LinearOperator::SpectralDiagonal { eigenvalues })
    }

    pub fn identity(n: usize) -> Self {
        LinearOperator::SpectralDiagonal { eigenvalues: CVector::from_element(n, Complex::new(T::one(), T::zero())) }
    }

    pub fn callback(op: CallbackOperator<T>) -> Self {
        LinearOperator::Callback(op)
    }

    pub fn kind(&self) -> OperatorKind {
        match self {
            LinearOperator::Dense { .. } => OperatorKind::DenseMatrix,
            LinearOperator::SpectralDiagonal { .. } => OperatorKind::SpectralDiagonal,
            LinearOperator::Callback(_) => OperatorKind::Callback,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LinearOperator::Dense { matrix, .. } => matrix.nrows(),
            LinearOperator::SpectralDiagonal { eigenvalues } => eigenvalues.len(),
            LinearOperator::Callback(op) => op.dim,
        }
    }

    pub fn apply(&self, v: &CVector<T>) -> Result<CVector<T>> {
        check_len("operator input", self.dim(), v.len())?;
        Ok(match self {
            LinearOperator::Dense { matrix, .. } => matrix * v,
            LinearOperator::SpectralDiagonal { eigenvalues } => eigenvalues.component_mul(v),
            LinearOperator::Callback(op) => (op.apply)(v),
        })
    }

    /// `E^-1 v`.
    pub fn solve(&self, v: &CVector<T>) -> Result<CVector<T>> {
        check_len("operator rhs", self.dim(), v.len())?;
        match self {
            LinearOperator::Dense { lu, .. } => {
                lu.solve(v).ok_or_else(|| Error::InvalidParameter("field operator E is singular".into()))
            }
            LinearOperator::SpectralDiagonal { eigenvalues } => Ok(v.component_div(eigenvalues)),
            LinearOperator::Callback(op) => gmres(
                op.apply.as_ref(),
                op.preconditioner.as_deref(),
                v,
                T::lit(T::SOLVE_TOL),
                op.max_iterations.unwrap_or(10 * op.dim.max(1)),
            ),
        }
    }

    pub fn supports_adjoint(&self) -> bool {
        match self {
            LinearOperator::Callback(op) => op.apply_adjoint.is_some(),
            _ => true,
        }
    }

    /// `E^-H v`, when available.
    pub fn solve_adjoint(&self, v: &CVector<T>) -> Result<CVector<T>> {
        check_len("operator rhs", self.dim(), v.len())?;
        match self {
            LinearOperator::Dense { adjoint_lu, .. } => {
                adjoint_lu.solve(v).ok_or_else(|| Error::InvalidParameter("field operator E is singular".into()))
            }
            LinearOperator::SpectralDiagonal { eigenvalues } => Ok(v.component_div(&eigenvalues.map(|z| z.conj()))),
            LinearOperator::Callback(op) => {
                let adj = op.apply_adjoint.as_ref().ok_or(Error::OperatorNotMaterializable)?;
                gmres(adj.as_ref(), None, v, T::lit(T::SOLVE_TOL), op.max_iterations.unwrap_or(10 * op.dim.max(1)))
            }
        }
    }

    /// Dense matrix of the operator, when it has one.
    pub fn to_dense(&self) -> Result<CMatrix<T>> {
        match self {
            LinearOperator::Dense { matrix, .. } => Ok(matrix.clone()),
            LinearOperator::SpectralDiagonal { eigenvalues } => Ok(CMatrix::from_diagonal(eigenvalues)),
            LinearOperator::Callback(_) => Err(Error::OperatorNotMaterializable),
        }
    }
}

/// Complex Givens rotation zeroing `b` against `a`; returns `(c, s)` with
/// `c` real and `[c s; -conj(s) c] [a; b] = [r; 0]`.
fn givens<T: Real>(a: Complex<T>, b: Complex<T>) -> (T, Complex<T>) {
    let (na, nb) = (a.modulus(), b.modulus());
    if nb.is_zero() {
        return (T::one(), Complex::zero());
    }
    if na.is_zero() {
        return (T::zero(), b.conj().unscale(nb));
    }
    let r = (na * na + nb * nb).sqrt();
    (na / r, a.unscale(na) * b.conj().unscale(r))
}

/// Restarted GMRES with optional right preconditioning.
///
/// Stops when `||b - A x|| <= tol * ||b||`; fails with
/// [`Error::SolverFailure`] once `max_iterations` inner steps are spent.
pub fn gmres<T: Real>(
    apply: &(dyn Fn(&CVector<T>) -> CVector<T> + Send + Sync),
    preconditioner: Option<&VectorFn<T>>,
    b: &CVector<T>,
    tol: T,
    max_iterations: usize,
) -> Result<CVector<T>> {
    let n = b.len();
    let bnorm = b.norm();
    let mut x = CVector::zeros(n);
    if bnorm.is_zero() {
        return Ok(x);
    }
    let restart = n.clamp(1, 60);
    let mut iterations = 0;
    loop {
        let r = b - apply(&x);
        let beta = r.norm();
        if beta <= tol * bnorm {
            return Ok(x);
        }
        if iterations >= max_iterations {
            return Err(Error::SolverFailure { residual: (beta / bnorm).as_f64(), iterations });
        }
        let mut basis = vec![r.unscale(beta)];
        let mut directions: Vec<CVector<T>> = Vec::with_capacity(restart);
        let mut hess = vec![vec![Complex::<T>::zero(); restart]; restart + 1];
        let mut rotations: Vec<(T, Complex<T>)> = Vec::with_capacity(restart);
        let mut rhs = vec![Complex::<T>::zero(); restart + 1];
        rhs[0] = Complex::new(beta, T::zero());
        let mut steps = 0;
        for j in 0..restart {
            let z = match preconditioner {
                Some(pc) => pc(&basis[j]),
                None => basis[j].clone(),
            };
            let mut w = apply(&z);
            directions.push(z);
            for (i, v) in basis.iter().enumerate() {
                let h = v.dotc(&w);
                hess[i][j] = h;
                w -= v * h;
            }
            let wnorm = w.norm();
            hess[j + 1][j] = Complex::new(wnorm, T::zero());
            for (i, &(c, s)) in rotations.iter().enumerate() {
                let (hi, hk) = (hess[i][j], hess[i + 1][j]);
                hess[i][j] = hi.scale(c) + s * hk;
                hess[i + 1][j] = -s.conj() * hi + hk.scale(c);
            }
            let (c, s) = givens(hess[j][j], hess[j + 1][j]);
            hess[j][j] = hess[j][j].scale(c) + s * hess[j + 1][j];
            hess[j + 1][j] = Complex::zero();
            rhs[j + 1] = -s.conj() * rhs[j];
            rhs[j] = rhs[j].scale(c);
            rotations.push((c, s));
            iterations += 1;
            steps = j + 1;
            let breakdown = wnorm <= T::machine_eps() * bnorm;
            if rhs[j + 1].modulus() <= tol * bnorm || iterations >= max_iterations || breakdown {
                break;
            }
            basis.push(w.unscale(wnorm));
        }
        let mut y = vec![Complex::<T>::zero(); steps];
        for i in (0..steps).rev() {
            let mut acc = rhs[i];
            for k in i + 1..steps {
                acc -= hess[i][k] * y[k];
            }
            y[i] = if hess[i][i].is_zero() { Complex::zero() } else { acc / hess[i][i] };
        }
        for (k, yk) in y.iter().enumerate() {
            x += &directions[k] * *yk;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn test_matrix(n: usize) -> CMatrix<f64> {
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(4.0 + i as f64 * 0.1, 0.5)
            } else if i.abs_diff(j) == 1 {
                c(-1.0, 0.2 * (i as f64 - j as f64))
            } else {
                c(0.0, 0.0)
            }
        })
    }

    #[test]
    fn gmres_matches_dense_solve() {
        let n = 80;
        let a = test_matrix(n);
        let b = CVector::from_fn(n, |i, _| c((i as f64).sin(), (i as f64 * 0.3).cos()));
        let a2 = a.clone();
        let apply: VectorMap<f64> = Arc::new(move |v: &CVector<f64>| &a2 * v);
        let op = LinearOperator::callback(CallbackOperator {
            dim: n,
            apply,
            apply_adjoint: None,
            preconditioner: None,
            max_iterations: None,
        });
        let x = op.solve(&b).unwrap();
        let exact = a.lu().solve(&b).unwrap();
        assert!((&x - &exact).norm() <= 1e-8 * exact.norm());
        assert!((op.apply(&x).unwrap() - &b).norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn preconditioner_reduces_iterations() {
        let n = 60;
        let a = test_matrix(n);
        let diag_inv = a.diagonal().map(|z| z.inv());
        let b = CVector::from_element(n, c(1.0, 0.0));
        let a2 = a.clone();
        let apply = move |v: &CVector<f64>| &a2 * v;
        let pc = move |v: &CVector<f64>| v.component_mul(&diag_inv);
        let x = gmres(&apply, Some(&pc), &b, 1e-10, 600).unwrap();
        assert!((&a * &x - &b).norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let n = 50;
        let a = test_matrix(n);
        let apply = move |v: &CVector<f64>| &a * v;
        let b = CVector::from_fn(n, |i, _| c(i as f64, 0.0));
        assert!(matches!(gmres(&apply, None, &b, 1e-14, 2), Err(Error::SolverFailure { .. })));
    }

    #[test]
    fn solve_inverts_apply_for_every_kind() {
        let n = 12;
        let probe = CVector::from_fn(n, |i, _| c(1.0 + i as f64, -(i as f64) * 0.5));
        let dense = LinearOperator::dense(test_matrix(n)).unwrap();
        let spectral =
            LinearOperator::spectral_diagonal(CVector::from_fn(n, |i, _| c(-(i as f64) - 1.0, 0.3))).unwrap();
        for op in [dense, spectral] {
            let back = op.solve(&op.apply(&probe).unwrap()).unwrap();
            assert!((&back - &probe).norm() <= 1e-8 * probe.norm());
            let adj = op.to_dense().unwrap().adjoint();
            let back = op.solve_adjoint(&(&adj * &probe)).unwrap();
            assert!((&back - &probe).norm() <= 1e-8 * probe.norm());
        }
    }

    #[test]
    fn singular_dense_operator_is_rejected() {
        assert!(LinearOperator::dense(CMatrix::<f64>::zeros(3, 3)).is_err());
    }
}
