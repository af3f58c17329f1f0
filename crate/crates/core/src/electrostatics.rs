//! Charge reconstruction from low-pass measurements of a 2D Poisson problem.
//!
//! The domain is `[0, N]^2`. Charges are Gaussians on two interleaved
//! lattices; the potential is measured through the lowest `N^2` sine
//! eigenmodes of the Laplacian.
//!
//! Orderings used throughout:
//! - sites: `(i - 0.5, j - 0.5)` at `(i-1) + N(j-1)` for `i, j in 1..=N`,
//!   then `(i, j)` at `N^2 + (i-1) + (N-1)(j-1)` for `i, j in 1..N`;
//! - modes: `(m, n)` at `(m-1) + N(n-1)`;
//! - grid: `(0.1 i, 0.1 j)` at `(i-1) + (10N-1)(j-1)` for `i, j in 1..10N`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::annealer::{build_ising, classical_bottom_states, sweep_gaps_with, SweepOptions};
use crate::bits;
use crate::encoding::{assemble_qubo, EncodingPolicy, QuboProblem};
use crate::error::{Error, Result};
use crate::pde::{reduce_pde, FieldModel, PdeInstance};
use crate::problem::VariableDomain;
use crate::scalar::{CMatrix, CVector, Real};

pub const GRID_SPACING: f64 = 0.1;
pub const GAUSSIAN_EXPONENT: f64 = 25.0;
pub const GAUSSIAN_AMPLITUDE: f64 = 25.0 / PI;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoissonSpec {
    pub n: usize,
    pub true_s: Option<Vec<bool>>,
}

impl PoissonSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("N must be at least 2, got {n}")));
        }
        Ok(PoissonSpec { n, true_s: None })
    }

    pub fn with_true_s(mut self, s: Vec<bool>) -> Result<Self> {
        if s.len() != self.p() {
            return Err(Error::DimensionMismatch { what: "true_s", expected: self.p(), found: s.len() });
        }
        self.true_s = Some(s);
        Ok(self)
    }

    pub fn p(&self) -> usize {
        2 * self.n * self.n - 2 * self.n + 1
    }

    pub fn n2a(&self) -> usize {
        self.n * self.n
    }

    pub fn n2b(&self) -> usize {
        let side = 10 * self.n - 1;
        side * side
    }

    pub fn sites(&self) -> Vec<(f64, f64)> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.p());
        for j in 1..=n {
            for i in 1..=n {
                out.push((i as f64 - 0.5, j as f64 - 0.5));
            }
        }
        for j in 1..n {
            for i in 1..n {
                out.push((i as f64, j as f64));
            }
        }
        out
    }

    pub fn grid_points(&self) -> Vec<(f64, f64)> {
        let side = 10 * self.n - 1;
        let mut out = Vec::with_capacity(self.n2b());
        for j in 1..=side {
            for i in 1..=side {
                out.push((GRID_SPACING * i as f64, GRID_SPACING * j as f64));
            }
        }
        out
    }

    /// Mode numbers `(m, n)` of the measured eigenmodes.
    pub fn modes(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (1..=n).flat_map(|b| (1..=n).map(move |a| (a, b))).collect()
    }

    fn mode_value(&self, (m, n): (usize, usize), (x1, x2): (f64, f64)) -> f64 {
        let l = self.n as f64;
        (m as f64 * PI * x1 / l).sin() * (n as f64 * PI * x2 / l).sin()
    }

    fn mode_eigenvalue(&self, (m, n): (usize, usize)) -> f64 {
        let l = self.n as f64;
        -PI * PI * ((m * m + n * n) as f64) / (l * l)
    }

    fn response<T: Real>(&self) -> CMatrix<T> {
        let modes = self.modes();
        let grid = self.grid_points();
        CMatrix::from_fn(modes.len(), grid.len(), |i, j| {
            let v = GRID_SPACING * self.mode_value(modes[i], grid[j]) / self.mode_eigenvalue(modes[i]);
            Complex::new(T::lit(v), T::zero())
        })
    }

    fn source<T: Real>(&self) -> CMatrix<T> {
        let sites = self.sites();
        let grid = self.grid_points();
        CMatrix::from_fn(grid.len(), sites.len(), |i, j| {
            let (dx, dy) = (grid[i].0 - sites[j].0, grid[i].1 - sites[j].1);
            let v = GRID_SPACING * GAUSSIAN_AMPLITUDE * (-GAUSSIAN_EXPONENT * (dx * dx + dy * dy)).exp();
            Complex::new(T::lit(v), T::zero())
        })
    }
}

/// Coordinates behind the rows and columns of a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonLabels {
    pub sites: Vec<(f64, f64)>,
    pub grid: Vec<(f64, f64)>,
    pub modes: Vec<(usize, usize)>,
}

fn bits_to_vector<T: Real>(s: &[bool]) -> CVector<T> {
    CVector::from_iterator(
        s.len(),
        s.iter().map(|&b| if b { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::zero()) }),
    )
}

/// Builds the instance. The design vector is the noiseless measurement of
/// `true_s`, or zero when no configuration is given.
pub fn gen_poisson<T: Real>(spec: &PoissonSpec) -> Result<(PdeInstance<T>, PoissonLabels)> {
    gen_poisson_with_design(spec, None)
}

/// Builds the instance with an explicit design vector `y` (length `N^2`).
pub fn gen_poisson_with_design<T: Real>(
    spec: &PoissonSpec,
    y: Option<CVector<T>>,
) -> Result<(PdeInstance<T>, PoissonLabels)> {
    PoissonSpec::new(spec.n)?;
    let r = spec.response::<T>();
    let j = spec.source::<T>();
    let y = match (y, &spec.true_s) {
        (Some(y), _) => y,
        (None, Some(s)) => &r * (&j * bits_to_vector::<T>(s)),
        (None, None) => CVector::zeros(spec.n2a()),
    };
    let inst = PdeInstance::new(
        FieldModel::Response(r),
        j,
        CVector::zeros(spec.n2b()),
        y,
        CMatrix::identity(spec.n2a(), spec.n2a()),
        vec![VariableDomain::binary(); spec.p()],
    )?;
    let labels = PoissonLabels { sites: spec.sites(), grid: spec.grid_points(), modes: spec.modes() };
    Ok((inst, labels))
}

/// QUBO of a generated instance.
pub fn poisson_qubo<T: Real>(inst: &PdeInstance<T>) -> Result<QuboProblem<T>> {
    assemble_qubo(&reduce_pde(inst)?, EncodingPolicy::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction<T: Real> {
    pub state: Vec<bool>,
    pub value: T,
    pub runner_up: Vec<bool>,
    pub runner_up_value: T,
    pub hamming: usize,
}

/// Exhaustive reconstruction from the measurement `y`.
pub fn reconstruct<T: Real>(spec: &PoissonSpec, y: &CVector<T>) -> Result<Reconstruction<T>> {
    let (inst, _) = gen_poisson_with_design(spec, Some(y.clone()))?;
    reconstruct_qubo(&poisson_qubo(&inst)?)
}

fn reconstruct_qubo<T: Real>(qubo: &QuboProblem<T>) -> Result<Reconstruction<T>> {
    let bottom = classical_bottom_states(qubo, 2)?;
    let (state, value) = bottom[0].clone();
    let (runner_up, runner_up_value) = bottom[1].clone();
    let hamming = bits::hamming(&state, &runner_up);
    Ok(Reconstruction { state, value, runner_up, runner_up_value, hamming })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid<T: Real> {
    pub n: usize,
    pub points: Vec<(f64, f64)>,
    pub values: Vec<T>,
}

impl<T: Real> FieldGrid<T> {
    /// CSV with header `x1,x2,value`, in grid order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x1,x2,value")?;
        for (&(x1, x2), v) in self.points.iter().zip(&self.values) {
            writeln!(out, "{x1:.1},{x2:.1},{:.16e}", v.as_f64())?;
        }
        Ok(())
    }
}

/// Potential reconstructed from the measured modes of configuration `s`.
pub fn potential_field<T: Real>(spec: &PoissonSpec, s: &[bool]) -> Result<FieldGrid<T>> {
    PoissonSpec::new(spec.n)?;
    if s.len() != spec.p() {
        return Err(Error::DimensionMismatch { what: "s", expected: spec.p(), found: s.len() });
    }
    let coeffs = spec.response::<T>() * (spec.source::<T>() * bits_to_vector::<T>(s));
    let modes = spec.modes();
    let points = spec.grid_points();
    let values = points
        .iter()
        .map(|&x| {
            modes
                .iter()
                .zip(coeffs.iter())
                .fold(T::zero(), |acc, (&mode, c)| acc + c.re * T::lit(spec.mode_value(mode, x)))
        })
        .collect();
    Ok(FieldGrid { n: spec.n, points, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceSelection {
    /// Every configuration; the instance id is the code of `true_s`.
    All,
    /// `count` uniform draws; instance `id` uses seed `seed ^ id`.
    Sample { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnsembleOptions {
    pub sweep: SweepOptions,
    /// Skip the spectrum sweep; only the Hamming distance is reported.
    pub classical_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRow<T: Real> {
    pub instance: u64,
    pub true_s: Vec<bool>,
    /// `None` when the sweep was skipped.
    pub min_gap: Option<T>,
    pub final_gap: Option<T>,
    pub hamming: usize,
}

/// Configurations selected for an ensemble, with their ids.
pub fn ensemble_instances(n: usize, selection: InstanceSelection) -> Result<Vec<(u64, Vec<bool>)>> {
    let p = PoissonSpec::new(n)?.p();
    match selection {
        InstanceSelection::All => {
            if p > 30 {
                return Err(Error::QubitCapExceeded { p, cap: 30 });
            }
            Ok((0..1u64 << p).map(|code| (code, bits::from_code(code, p))).collect())
        }
        InstanceSelection::Sample { count, seed } => Ok((0..count as u64)
            .map(|id| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ id);
                (id, (0..p).map(|_| rng.random::<bool>()).collect())
            })
            .collect()),
    }
}

pub fn ensemble_stats<T: Real>(
    n: usize,
    selection: InstanceSelection,
    opts: &EnsembleOptions,
) -> Result<Vec<EnsembleRow<T>>> {
    let spec = PoissonSpec::new(n)?;
    // J and R do not depend on the configuration; build them once.
    let (base, _) = gen_poisson::<T>(&spec)?;
    let rj = match &base.field {
        FieldModel::Response(r) => r * &base.j,
        FieldModel::Operator { .. } => unreachable!("Poisson instances use the composed response"),
    };
    ensemble_instances(n, selection)?
        .into_par_iter()
        .map(|(instance, true_s)| {
            let mut inst = base.clone();
            inst.y = &rj * bits_to_vector::<T>(&true_s);
            let qubo = poisson_qubo(&inst)?;
            let bottom = reconstruct_qubo(&qubo)?;
            let (min_gap, final_gap) = if opts.classical_only {
                (None, None)
            } else {
                let sweep = sweep_gaps_with(&build_ising(&qubo)?, &opts.sweep)?;
                (Some(sweep.min_gap), Some(sweep.final_gap))
            };
            Ok(EnsembleRow { instance, true_s, min_gap, final_gap, hamming: bottom.hamming })
        })
        .collect()
}

/// Ensemble CSV with header `instance,min_gap,final_gap,hamming`. Missing
/// gaps are written as empty fields.
pub fn write_ensemble_csv<T: Real, W: Write>(rows: &[EnsembleRow<T>], mut out: W) -> io::Result<()> {
    writeln!(out, "instance,min_gap,final_gap,hamming")?;
    for r in rows {
        let cell = |g: Option<T>| g.map(|g| format!("{:.16e}", g.as_f64())).unwrap_or_default();
        writeln!(out, "{},{},{},{}", r.instance, cell(r.min_gap), cell(r.final_gap), r.hamming)?;
    }
    Ok(())
}

/// Mean minimum gap of the `hamming > 1` and `hamming == 1` populations.
pub fn population_mean_min_gaps<T: Real>(rows: &[EnsembleRow<T>]) -> (Option<f64>, Option<f64>) {
    let mean = |pred: &dyn Fn(usize) -> bool| {
        let gaps: Vec<f64> =
            rows.iter().filter(|r| pred(r.hamming)).filter_map(|r| r.min_gap.map(|g| g.as_f64())).collect();
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
    };
    (mean(&|h| h > 1), mean(&|h| h == 1))
}
