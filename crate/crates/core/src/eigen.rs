//! Lowest two eigenpairs of a large real symmetric operator.
//!
//! Block Davidson iteration with identity preconditioner (so the search space
//! is a block Krylov space of the Ritz vectors), thick restarts, and warm
//! starts from previously converged vectors. A block of three vectors is
//! carried so a degenerate ground space is resolved: the second eigenvalue
//! is counted with multiplicity.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::scalar::Real;

const BLOCK: usize = 3;
const MAX_BASIS: usize = 24;
const KEEP: usize = 6;
const MAX_ITERATIONS: usize = 2000;

#[derive(Debug, Clone)]
pub struct LowestPair<T: Real> {
    pub e0: T,
    pub e1: T,
    /// Ritz vectors of the lowest `BLOCK` values, reusable as a warm start.
    pub vectors: Vec<Vec<T>>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Orthogonalizes `v` against `basis` (two passes) and normalizes it.
/// Returns `None` when `v` lies in the span numerically.
fn orthonormalize<T: Real>(mut v: Vec<T>, basis: &[Vec<T>]) -> Option<Vec<T>> {
    let before = norm(&v);
    if before == T::zero() {
        return None;
    }
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &v);
            axpy(-c, q, &mut v);
        }
    }
    let after = norm(&v);
    if after <= T::lit(1e-10) * before {
        return None;
    }
    let inv = T::one() / after;
    v.iter_mut().for_each(|x| *x *= inv);
    Some(v)
}

/// Bound on `|theta_i - lambda|` from the residual and the distance to the
/// neighbouring Ritz values: `min(|r|, |r|^2 / delta)`.
fn error_estimate<T: Real>(theta: &[T], res: &[T], i: usize) -> T {
    let r = res[i];
    let mut delta: Option<T> = None;
    for j in 0..theta.len() {
        if j != i {
            let d = (theta[i] - theta[j]).abs() - res[j];
            delta = Some(delta.map_or(d, |x: T| x.min(d)));
        }
    }
    match delta {
        Some(d) if d > r => r.min(r * r / (d - r)),
        _ => r,
    }
}

/// Lowest two eigenvalues (with multiplicity) of the symmetric operator `apply`.
///
/// Converged when the estimated error of both Ritz values is at most `tol`.
pub fn lowest_two<T: Real, F>(apply: F, dim: usize, warm: Option<&[Vec<T>]>, tol: T) -> Result<LowestPair<T>>
where
    F: Fn(&[T], &mut [T]),
{
    lowest_two_preconditioned(apply, |_: T, _: &mut [T]| {}, dim, warm, tol)
}

/// As [`lowest_two`], with a correction-equation preconditioner:
/// `precondition(theta, r)` replaces the residual `r` of a Ritz pair with
/// value `theta` by an approximation of `(H - theta)^-1 r`.
pub fn lowest_two_preconditioned<T: Real, F, P>(
    apply: F,
    precondition: P,
    dim: usize,
    warm: Option<&[Vec<T>]>,
    tol: T,
) -> Result<LowestPair<T>>
where
    F: Fn(&[T], &mut [T]),
    P: Fn(T, &mut [T]),
{
    if dim < 2 {
        return Err(Error::EigensolverFailure("need at least two dimensions".into()));
    }
    let block = BLOCK.min(dim);
    let max_basis = MAX_BASIS.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut images: Vec<Vec<T>> = Vec::new();
    let mut seeds: Vec<Vec<T>> = warm.map(|w| w.to_vec()).unwrap_or_default();
    while seeds.len() < block {
        seeds.push((0..dim).map(|_| T::lit(rng.random::<f64>() - 0.5)).collect());
    }
    for s in seeds {
        if let Some(q) = orthonormalize(s, &basis) {
            let mut hq = vec![T::zero(); dim];
            apply(&q, &mut hq);
            basis.push(q);
            images.push(hq);
        }
    }
    // Projected matrix basis^T H basis, grown incrementally.
    let mut proj = DMatrix::from_fn(basis.len(), basis.len(), |i, j| dot(&basis[i], &images[j]));

    for _ in 0..MAX_ITERATIONS {
        let k = basis.len();
        let sym = (&proj + proj.transpose()) * T::lit(0.5);
        let (theta, y) = symmetric_eigen(&sym);
        let nb = block.min(k);
        let mut ritz = Vec::with_capacity(nb);
        let mut residuals = Vec::with_capacity(nb);
        for c in 0..nb {
            let mut u = vec![T::zero(); dim];
            let mut hu = vec![T::zero(); dim];
            for i in 0..k {
                axpy(y[(i, c)], &basis[i], &mut u);
                axpy(y[(i, c)], &images[i], &mut hu);
            }
            let mut r = hu.clone();
            axpy(-theta[c], &u, &mut r);
            residuals.push(r);
            ritz.push((u, hu));
        }
        let res: Vec<T> = residuals.iter().map(|r| norm(r)).collect();
        let converged = k >= 2 && (0..2).all(|i| error_estimate(&theta[..nb], &res, i) <= tol);
        if converged {
            return Ok(LowestPair { e0: theta[0], e1: theta[1], vectors: ritz.into_iter().map(|(u, _)| u).collect() });
        }

        if k + block > max_basis {
            let keep = KEEP.min(k);
            let mut new_basis = Vec::with_capacity(keep);
            let mut new_images = Vec::with_capacity(keep);
            for c in 0..keep {
                let mut u = vec![T::zero(); dim];
                let mut hu = vec![T::zero(); dim];
                for i in 0..k {
                    axpy(y[(i, c)], &basis[i], &mut u);
                    axpy(y[(i, c)], &images[i], &mut hu);
                }
                new_basis.push(u);
                new_images.push(hu);
            }
            basis = new_basis;
            images = new_images;
            proj = DMatrix::from_fn(keep, keep, |i, j| if i == j { theta[i] } else { T::zero() });
        }

        let mut added = 0;
        for (c, mut r) in residuals.into_iter().enumerate() {
            if error_estimate(&theta[..nb], &res, c) <= tol {
                continue;
            }
            precondition(theta[c], &mut r);
            if let Some(q) = orthonormalize(r, &basis) {
                let mut hq = vec![T::zero(); dim];
                apply(&q, &mut hq);
                basis.push(q);
                images.push(hq);
                added += 1;
            }
        }
        if added == 0 {
            // Invariant subspace or stagnation: inject a fresh direction.
            let fresh: Vec<T> = (0..dim).map(|_| T::lit(rng.random::<f64>() - 0.5)).collect();
            match orthonormalize(fresh, &basis) {
                Some(q) if basis.len() < dim => {
                    let mut hq = vec![T::zero(); dim];
                    apply(&q, &mut hq);
                    basis.push(q);
                    images.push(hq);
                    added = 1;
                }
                _ => {
                    return Ok(LowestPair {
                        e0: theta[0],
                        e1: theta[1],
                        vectors: ritz.into_iter().map(|(u, _)| u).collect(),
                    })
                }
            }
        }
        let k_new = basis.len();
        let mut grown = DMatrix::zeros(k_new, k_new);
        let old = k_new - added;
        grown.view_mut((0, 0), (old, old)).copy_from(&proj);
        for j in old..k_new {
            for i in 0..k_new {
                let v = dot(&basis[i], &images[j]);
                grown[(i, j)] = v;
                grown[(j, i)] = v;
            }
        }
        proj = grown;
    }
    Err(Error::EigensolverFailure(format!("no convergence after {MAX_ITERATIONS} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_apply(m: &DMatrix<f64>) -> impl Fn(&[f64], &mut [f64]) + '_ {
        move |x, y| {
            for i in 0..m.nrows() {
                y[i] = (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum();
            }
        }
    }

    #[test]
    fn matches_dense_eigensolver() {
        let n = 300;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        m = (&m + m.transpose()) * 0.5;
        let (values, _) = symmetric_eigen(&m);
        let pair = lowest_two(dense_apply(&m), n, None, 1e-9).unwrap();
        assert!((pair.e0 - values[0]).abs() < 1e-8);
        assert!((pair.e1 - values[1]).abs() < 1e-8);
    }

    #[test]
    fn resolves_degenerate_ground_space() {
        let n = 200;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i != j {
                0.0
            } else if i < 2 {
                -1.0
            } else {
                i as f64 * 0.01
            }
        });
        let pair = lowest_two(dense_apply(&m), n, None, 1e-10).unwrap();
        assert!((pair.e0 + 1.0).abs() < 1e-10);
        assert!((pair.e1 + 1.0).abs() < 1e-10);
    }
}
