//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen, SVD};

use crate::scalar::{CMatrix, CVector, Real};

/// `(A + A^H) / 2`.
pub fn hermitize<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let half = T::lit(0.5);
    let mut out = a.clone();
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (a[(i, j)] + a[(j, i)].conj()).scale(half);
        }
    }
    out
}

/// `(M + M^T) / 2` for real matrices.
pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::lit(0.5);
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)]) * half)
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

pub fn max_abs_real<T: Real>(a: &DMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc.max(z.abs()))
}

pub fn to_complex<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

pub fn to_complex_vec<T: Real>(v: &DVector<T>) -> CVector<T> {
    v.map(|x| Complex::new(x, T::zero()))
}

/// Real part of `x^H A x` for Hermitian `A`, with the imaginary residue.
pub fn quadratic_form<T: Real>(a: &CMatrix<T>, x: &CVector<T>) -> Complex<T> {
    x.dotc(&(a * x))
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].as_f64().total_cmp(&eig.eigenvalues[j].as_f64()));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigen-decomposition of a real symmetric matrix, ascending.
pub fn symmetric_eigen<T: Real>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].as_f64().total_cmp(&eig.eigenvalues[j].as_f64()));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Spectral norm of a real symmetric matrix.
///
/// Uses a full eigensolve up to 64 rows, otherwise 200 power iterations
/// stopped early at relative change 1e-6.
pub fn symmetric_spectral_norm<T: Real>(m: &DMatrix<T>) -> T {
    let n = m.nrows();
    if n == 0 {
        return T::zero();
    }
    if n <= 64 {
        let (values, _) = symmetric_eigen(m);
        return values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    }
    let mut x = DVector::from_fn(n, |i, _| T::one() + T::lit(0.01) * T::from_usize_lossy(i % 7));
    let mut estimate = T::zero();
    for _ in 0..200 {
        let norm = x.norm();
        if norm == T::zero() {
            return T::zero();
        }
        x /= norm;
        let y = m * &x;
        let next = y.norm();
        let converged = (next - estimate).abs() <= T::lit(1e-6) * next;
        estimate = next;
        x = y;
        if converged {
            break;
        }
    }
    estimate
}

/// Symmetric PSD square root with negative eigenvalues clamped to zero.
pub fn psd_sqrt<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let (values, vectors) = symmetric_eigen(m);
    let n = m.nrows();
    let roots: Vec<T> = values.iter().map(|&v| v.max(T::zero()).sqrt()).collect();
    let mut out = DMatrix::zeros(n, n);
    for (k, r) in roots.iter().enumerate() {
        if r.is_zero() {
            continue;
        }
        let col = vectors.column(k);
        out += (col * col.transpose()) * *r;
    }
    symmetrize(&out)
}

/// Thin SVD with singular values sorted descending. Returns `(U, sigma, V)`
/// with `A = U diag(sigma) V^H`.
pub fn svd<T: Real>(a: &CMatrix<T>) -> (CMatrix<T>, Vec<T>, CMatrix<T>) {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return (CMatrix::zeros(r, 0), Vec::new(), CMatrix::zeros(c, 0));
    }
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    let sigma = svd.singular_values.iter().copied().collect();
    (u, sigma, v_t.adjoint())
}

/// Numerical-rank cutoff `max(rows, cols) * eps * sigma_max`.
pub fn rank_cutoff<T: Real>(rows: usize, cols: usize, sigma_max: T) -> T {
    T::from_usize_lossy(rows.max(cols)) * T::machine_eps() * sigma_max
}

/// Moore-Penrose pseudoinverse with the standard rank cutoff, and the rank.
pub fn pinv<T: Real>(a: &CMatrix<T>) -> (CMatrix<T>, usize) {
    let (r, c) = a.shape();
    let (u, sigma, v) = svd(a);
    let smax = sigma.first().copied().unwrap_or_else(T::zero);
    let cutoff = rank_cutoff(r, c, smax);
    let mut out = CMatrix::zeros(c, r);
    let mut rank = 0;
    for (k, s) in sigma.iter().enumerate() {
        if *s > cutoff && !s.is_zero() {
            rank += 1;
            let vk = v.column(k);
            let uk = u.column(k);
            out += (vk * uk.adjoint()).map(|z| z.unscale(*s));
        }
    }
    (out, rank)
}

/// Orthonormal basis of the complement of the orthonormal columns of `v`
/// inside `C^n`.
pub fn orthonormal_complement<T: Real>(v: &CMatrix<T>) -> CMatrix<T> {
    let n = v.nrows();
    let k = v.ncols();
    if k == 0 {
        return CMatrix::identity(n, n);
    }
    if k >= n {
        return CMatrix::zeros(n, 0);
    }
    let projector = CMatrix::identity(n, n) - v * v.adjoint();
    let (values, vectors) = hermitian_eigen(&hermitize(&projector));
    let half = T::lit(0.5);
    let keep: Vec<usize> = (0..n).filter(|&i| values[i] > half).collect();
    let mut out = CMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &vectors.column(i));
    }
    out
}

/// Max-modulus deviation of a matrix from Hermitian, relative to its max entry.
pub fn hermiticity_defect<T: Real>(a: &CMatrix<T>) -> T {
    let n = a.nrows();
    let mut defect = T::zero();
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((a[(i, j)] - a[(j, i)].conj()).modulus());
        }
    }
    defect
}
