//! Transverse-field annealing Hamiltonian and its low-lying spectrum.
//!
//! Basis state index = [`bits::code`] of the bitstring, so `s[0]` is the least
//! significant bit. Spin convention `s_i = (1 + z_i) / 2`.

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::bits;
use crate::eigen::{lowest_two_preconditioned, LowestPair};
use crate::encoding::QuboProblem;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::scalar::Real;
use crate::solvers::{bottom_states, DEFAULT_EXHAUSTIVE_CAP};

/// Default largest qubit count for spectrum computations.
pub const DEFAULT_QUBIT_CAP: usize = 20;

/// Largest `p` handled by a dense eigensolver.
pub const DENSE_MAX_QUBITS: usize = 8;

/// Eigenvalue tolerance relative to `max(1, ‖H‖)`.
const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct IsingProgram<T: Real> {
    pub p: usize,
    /// `[M 1]_i`.
    pub linear: Vec<T>,
    /// `(i, j, M_ij)` for `i < j` with `M_ij != 0`.
    pub quadratic: Vec<(usize, usize, T)>,
    pub lambda: T,
}

pub fn build_ising<T: Real>(qubo: &QuboProblem<T>) -> Result<IsingProgram<T>> {
    let p = qubo.p();
    if p == 0 {
        return Err(Error::InvalidParameter("Ising program needs at least one qubit".into()));
    }
    let m = qubo.m();
    let linear: Vec<T> = (0..p).map(|i| m.row(i).iter().fold(T::zero(), |a, &x| a + x)).collect();
    let mut quadratic = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if m[(i, j)] != T::zero() {
                quadratic.push((i, j, m[(i, j)]));
            }
        }
    }
    let mut lambda = T::zero();
    for &l in &linear {
        lambda = lambda.max(l.abs());
    }
    for &(_, _, q) in &quadratic {
        lambda = lambda.max(q.abs());
    }
    if lambda == T::zero() {
        lambda = T::one();
    }
    Ok(IsingProgram { p, linear, quadratic, lambda })
}

impl<T: Real> IsingProgram<T> {
    pub fn dim(&self) -> usize {
        1usize << self.p
    }

    /// Problem energies `(1/Λ)(Σ l_i z_i + Σ q_ij z_i z_j)` of every basis state.
    pub fn diagonal(&self) -> Vec<T> {
        let inv = T::one() / self.lambda;
        (0..self.dim())
            .map(|code| {
                let z = |i: usize| if (code >> i) & 1 == 1 { T::one() } else { -T::one() };
                let mut e = T::zero();
                for (i, &l) in self.linear.iter().enumerate() {
                    e += l * z(i);
                }
                for &(i, j, q) in &self.quadratic {
                    e += q * z(i) * z(j);
                }
                e * inv
            })
            .collect()
    }
}

/// `H(w)` stored as its diagonal plus a uniform transverse field on every
/// bit-flip band.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian<T: Real> {
    pub p: usize,
    pub diag: Vec<T>,
    /// Coefficient `w - 1` of `Σ σ_x`.
    pub field: T,
}

impl<T: Real> SparseHamiltonian<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[T], y: &mut [T]) {
        for (b, yb) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for i in 0..self.p {
                acc += x[b ^ (1 << i)];
            }
            *yb = self.diag[b] * x[b] + self.field * acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let n = self.dim();
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diag.clone()));
        for b in 0..n {
            for i in 0..self.p {
                h[(b, b ^ (1 << i))] = self.field;
            }
        }
        h
    }

    /// Bound on the spectral radius.
    fn scale(&self) -> T {
        let dmax = self.diag.iter().fold(T::zero(), |a, &d| a.max(d.abs()));
        dmax + self.field.abs() * T::from_usize_lossy(self.p)
    }
}

fn check_cap(p: usize, cap: usize) -> Result<()> {
    if p > cap {
        return Err(Error::QubitCapExceeded { p, cap });
    }
    Ok(())
}

fn check_w<T: Real>(w: T) -> Result<()> {
    if !(w >= T::zero() && w <= T::one()) {
        return Err(Error::InvalidParameter(format!("w = {w} outside [0, 1]")));
    }
    Ok(())
}

pub fn hamiltonian_at<T: Real>(prog: &IsingProgram<T>, w: T) -> Result<SparseHamiltonian<T>> {
    hamiltonian_at_capped(prog, w, DEFAULT_QUBIT_CAP)
}

pub fn hamiltonian_at_capped<T: Real>(prog: &IsingProgram<T>, w: T, cap: usize) -> Result<SparseHamiltonian<T>> {
    check_cap(prog.p, cap)?;
    check_w(w)?;
    Ok(scaled(prog.p, &prog.diagonal(), w))
}

fn scaled<T: Real>(p: usize, problem_diag: &[T], w: T) -> SparseHamiltonian<T> {
    SparseHamiltonian { p, diag: problem_diag.iter().map(|&d| d * w).collect(), field: w - T::one() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample<T: Real> {
    pub w: T,
    pub e0: T,
    pub e1: T,
}

impl<T: Real> GapSample<T> {
    pub fn gap(&self) -> T {
        self.e1 - self.e0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSweep<T: Real> {
    /// Sorted by `w`; the first sample is `w = 0` and the last `w = 1`.
    pub samples: Vec<GapSample<T>>,
    pub min_gap: T,
    pub argmin_w: T,
    pub final_gap: T,
}

impl<T: Real> GapSweep<T> {
    pub fn initial_gap(&self) -> T {
        self.samples[0].gap()
    }

    /// Gap CSV: header `w,E0,E1,gap`, one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "w,E0,E1,gap")?;
        for s in &self.samples {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                s.w.as_f64(),
                s.e0.as_f64(),
                s.e1.as_f64(),
                s.gap().as_f64()
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub n_grid: usize,
    pub refine: bool,
    /// Width of the final golden-section bracket.
    pub refine_tol: f64,
    pub qubit_cap: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { n_grid: 101, refine: true, refine_tol: 1e-5, qubit_cap: DEFAULT_QUBIT_CAP }
    }
}

type RitzPair<T> = (Vec<Vec<T>>, Vec<Vec<T>>);

/// Computes `(E0, E1)` of `H(w)` for one program, reusing eigenvectors
/// between nearby `w`.
struct Spectrum<T: Real> {
    p: usize,
    problem_diag: Vec<T>,
    /// Ritz vectors at the last two points.
    warm: Option<RitzPair<T>>,
}

impl<T: Real> Spectrum<T> {
    fn new(prog: &IsingProgram<T>) -> Self {
        Spectrum { p: prog.p, problem_diag: prog.diagonal(), warm: None }
    }

    fn at(&mut self, w: T) -> Result<GapSample<T>> {
        let h = scaled(self.p, &self.problem_diag, w);
        let p_t = T::from_usize_lossy(self.p);
        if h.field == T::zero() {
            let mut d = h.diag.clone();
            d.sort_by(|a, b| a.as_f64().total_cmp(&b.as_f64()));
            return Ok(GapSample { w, e0: d[0], e1: d[1] });
        }
        if h.diag.iter().all(|&d| d == T::zero()) {
            // (w - 1) Σ σ_x has eigenvalues (w - 1)(p - 2k).
            return Ok(GapSample { w, e0: h.field * p_t, e1: h.field * (p_t - T::lit(2.0)) });
        }
        if self.p <= DENSE_MAX_QUBITS {
            let (values, _) = symmetric_eigen(&h.to_dense());
            return Ok(GapSample { w, e0: values[0], e1: values[1] });
        }
        let tol = T::lit(EIGEN_TOL) * T::one().max(h.scale());
        let warm: Option<Vec<Vec<T>>> = self.warm.as_ref().map(|(last, before)| {
            // The span of both previous blocks contains their linear extrapolation.
            last.iter().chain(before.iter().take(2)).cloned().collect()
        });
        let precondition = Preconditioner::choose(&h);
        let LowestPair { e0, e1, vectors } = lowest_two_preconditioned(
            |x: &[T], y: &mut [T]| h.apply(x, y),
            |theta: T, r: &mut [T]| precondition.apply(&h, theta, r),
            h.dim(),
            warm.as_deref(),
            tol,
        )?;
        let before = self.warm.take().map(|(last, _)| last).unwrap_or_default();
        self.warm = Some((vectors, before));
        Ok(GapSample { w, e0: e0.min(e1), e1: e0.max(e1) })
    }
}

/// Approximate `(H - theta)^-1` used to precondition the eigensolver.
///
/// When the diagonal dominates, `(D - theta)^-1`; when the transverse field
/// dominates, the inverse of `field * Σσx + mean(D) - theta`, which is
/// diagonal after a Walsh-Hadamard transform.
#[derive(Debug, Clone, Copy)]
enum Preconditioner<T: Real> {
    Diagonal,
    Transverse { mean: T },
}

impl<T: Real> Preconditioner<T> {
    fn choose(h: &SparseHamiltonian<T>) -> Self {
        let (lo, hi) = h.diag.iter().fold((h.diag[0], h.diag[0]), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        if h.field.abs() * T::from_usize_lossy(h.p) > (hi - lo) * T::lit(0.5) {
            let mean = h.diag.iter().fold(T::zero(), |a, &d| a + d) / T::from_usize_lossy(h.dim());
            Preconditioner::Transverse { mean }
        } else {
            Preconditioner::Diagonal
        }
    }

    fn apply(&self, h: &SparseHamiltonian<T>, theta: T, r: &mut [T]) {
        let floor = T::lit(1e-2);
        let safe = |d: T| {
            if d.abs() < floor {
                if d < T::zero() {
                    -floor
                } else {
                    floor
                }
            } else {
                d
            }
        };
        match *self {
            Preconditioner::Diagonal => {
                for (x, &d) in r.iter_mut().zip(&h.diag) {
                    *x /= safe(d - theta);
                }
            }
            Preconditioner::Transverse { mean } => {
                walsh_hadamard(r);
                let n = T::from_usize_lossy(r.len());
                let p = T::from_usize_lossy(h.p);
                for (k, x) in r.iter_mut().enumerate() {
                    let ones = T::from_usize_lossy(k.count_ones() as usize);
                    *x /= safe(h.field * (p - T::lit(2.0) * ones) + mean - theta) * n;
                }
                walsh_hadamard(r);
            }
        }
    }
}

/// Unnormalized in-place Walsh-Hadamard transform; `a.len()` is a power of two.
fn walsh_hadamard<T: Real>(a: &mut [T]) {
    let mut h = 1;
    while h < a.len() {
        for block in a.chunks_mut(2 * h) {
            let (x, y) = block.split_at_mut(h);
            for (u, v) in x.iter_mut().zip(y.iter_mut()) {
                let (s, d) = (*u + *v, *u - *v);
                *u = s;
                *v = d;
            }
        }
        h *= 2;
    }
}

pub fn sweep_gaps<T: Real>(prog: &IsingProgram<T>, n_grid: usize, refine: bool) -> Result<GapSweep<T>> {
    sweep_gaps_with(prog, &SweepOptions { n_grid, refine, ..SweepOptions::default() })
}

pub fn sweep_gaps_with<T: Real>(prog: &IsingProgram<T>, opts: &SweepOptions) -> Result<GapSweep<T>> {
    check_cap(prog.p, opts.qubit_cap)?;
    if opts.n_grid < 2 {
        return Err(Error::InvalidParameter("n_grid must be at least 2".into()));
    }
    let mut spectrum = Spectrum::new(prog);
    let last = opts.n_grid - 1;
    let mut samples = Vec::with_capacity(opts.n_grid + 40);
    for k in 0..=last {
        let w = if k == last { T::one() } else { T::from_usize_lossy(k) / T::from_usize_lossy(last) };
        samples.push(spectrum.at(w)?);
    }
    let argmin = |s: &[GapSample<T>]| (0..s.len()).fold(0, |best, i| if s[i].gap() < s[best].gap() { i } else { best });
    if opts.refine {
        let k = argmin(&samples);
        let lo = samples[k.saturating_sub(1)].w;
        let hi = samples[(k + 1).min(last)].w;
        spectrum.warm = None;
        let extra = golden_section(&mut spectrum, lo, hi, T::lit(opts.refine_tol))?;
        samples.extend(extra);
        samples.sort_by(|a, b| a.w.as_f64().total_cmp(&b.w.as_f64()));
        samples.dedup_by(|a, b| a.w == b.w);
    }
    let k = argmin(&samples);
    let final_gap = samples.last().map(GapSample::gap).unwrap_or_else(T::zero);
    Ok(GapSweep { min_gap: samples[k].gap(), argmin_w: samples[k].w, final_gap, samples })
}

fn golden_section<T: Real>(spectrum: &mut Spectrum<T>, mut a: T, mut b: T, tol: T) -> Result<Vec<GapSample<T>>> {
    let ratio = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut out = Vec::new();
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = spectrum.at(c)?;
    let mut fd = spectrum.at(d)?;
    out.push(fc);
    out.push(fd);
    while b - a > tol {
        if fc.gap() <= fd.gap() {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = spectrum.at(c)?;
            out.push(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = spectrum.at(d)?;
            out.push(fd);
        }
    }
    Ok(out)
}

/// The `count` lowest bitstrings by `sᵀMs + k`, ties in lexicographic order.
pub fn classical_bottom_states<T: Real>(qubo: &QuboProblem<T>, count: usize) -> Result<Vec<(Vec<bool>, T)>> {
    bottom_states(qubo, count, DEFAULT_EXHAUSTIVE_CAP)
}

/// Bitstring of basis state `index`.
pub fn basis_state(index: usize, p: usize) -> Vec<bool> {
    bits::from_code(index as u64, p)
}
