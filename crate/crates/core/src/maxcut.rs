//! Max-Cut as QUBO and as a PDE-constrained fitting problem.
//!
//! With Laplacian `L` and maximum degree `d`, `Q = 2 d I - L` is positive
//! semidefinite and `s^T Q s + s^T v` with `v = -Q 1` equals minus the cut
//! size of the bipartition `s`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::encoding::{encode_binary_expansion, QuboProblem};
use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, to_complex, to_complex_vec};
use crate::pde::{FieldModel, LinearOperator, PdeInstance};
use crate::problem::VariableDomain;
use crate::scalar::{CMatrix, CVector, Real};

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Rejects self-loops, duplicate edges and out-of-range endpoints.
    /// Edges are stored with the smaller endpoint first.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            let e = (u.min(v), u.max(v));
            if out.contains(&e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            out.push(e);
        }
        Ok(Self { n, edges: out })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::new(n, edges).expect("complete graph is simple")
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<i64> {
        let mut deg = vec![0i64; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }
}

/// Degree matrix minus adjacency matrix.
pub fn laplacian(g: &Graph) -> DMatrix<i64> {
    let mut l = DMatrix::zeros(g.n, g.n);
    for &(u, v) in &g.edges {
        l[(u, v)] -= 1;
        l[(v, u)] -= 1;
        l[(u, u)] += 1;
        l[(v, v)] += 1;
    }
    l
}

/// Number of edges whose endpoints lie on different sides.
pub fn cut_value(g: &Graph, s: &[bool]) -> i64 {
    debug_assert_eq!(s.len(), g.n);
    g.edges.iter().filter(|&&(u, v)| s[u] != s[v]).count() as i64
}

/// Affine map from an energy to a cut size: `cut = scale * (energy - offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyToCut {
    pub scale: f64,
    pub offset: f64,
}

impl EnergyToCut {
    pub fn cut(&self, energy: f64) -> f64 {
        self.scale * (energy - self.offset)
    }
}

/// Integer data of the reduction.
#[derive(Debug, Clone)]
pub struct MaxCutReduction {
    pub laplacian: DMatrix<i64>,
    pub d_max: i64,
    /// `2 d I - L`.
    pub q: DMatrix<i64>,
    /// `-Q 1`.
    pub v: Vec<i64>,
    pub energy_to_cut: EnergyToCut,
}

impl MaxCutReduction {
    pub fn new(g: &Graph) -> Self {
        let laplacian = laplacian(g);
        let d_max = g.degrees().into_iter().max().unwrap_or(0);
        let n = g.n;
        let q = DMatrix::from_fn(n, n, |i, j| if i == j { 2 * d_max } else { 0 } - laplacian[(i, j)]);
        let v = (0..n).map(|i| -q.row(i).sum()).collect();
        Self { laplacian, d_max, q, v, energy_to_cut: EnergyToCut { scale: -1.0, offset: 0.0 } }
    }

    /// `s^T Q s + s^T v` in exact integer arithmetic.
    pub fn energy(&self, s: &[bool]) -> i64 {
        let on: Vec<usize> = (0..s.len()).filter(|&i| s[i]).collect();
        let mut e = 0;
        for &i in &on {
            e += self.v[i];
            for &j in &on {
                e += self.q[(i, j)];
            }
        }
        e
    }

    pub fn q_real<T: Real>(&self) -> DMatrix<T> {
        self.q.map(|x| T::lit(x as f64))
    }
}

fn binary_encodings<T: Real>(n: usize) -> Vec<crate::encoding::VariableEncoding<T>> {
    let enc = encode_binary_expansion(&VariableDomain::<T>::binary()).expect("{0,1} is a binary expansion");
    vec![enc; n]
}

/// QUBO whose value at `s` is `-cut(s)`: `M = Q + diag(v)`, `k = 0`.
pub fn maxcut_to_qubo<T: Real>(g: &Graph) -> (QuboProblem<T>, MaxCutReduction) {
    let red = MaxCutReduction::new(g);
    let mut m = red.q_real::<T>();
    for i in 0..g.n {
        m[(i, i)] += T::lit(red.v[i] as f64);
    }
    let qubo = QuboProblem::new(m, T::zero())
        .and_then(|q| q.with_encodings(binary_encodings(g.n)))
        .expect("square finite matrix");
    (qubo, red)
}

/// Fitting instance with `E = K = G = I`, `J = Q^{1/2}`, `f = 0`, `y = J 1 / 2`.
///
/// Its discrete problem has `H = Q` and `g = v`; the constant is `1^T Q 1 / 4`.
pub fn maxcut_to_pde_instance<T: Real>(g: &Graph) -> PdeInstance<T> {
    let red = MaxCutReduction::new(g);
    let n = g.n;
    let j_real = psd_sqrt(&red.q_real::<T>());
    let half = T::lit(0.5);
    let y_real = (&j_real * nalgebra::DVector::from_element(n, T::one())) * half;
    PdeInstance::new(
        FieldModel::Operator { e: Arc::new(LinearOperator::identity(n)), k: CMatrix::identity(n, n) },
        to_complex(&j_real),
        CVector::zeros(n),
        to_complex_vec(&y_real),
        CMatrix::identity(n, n),
        vec![VariableDomain::binary(); n],
    )
    .expect("identity metric is positive definite")
}
