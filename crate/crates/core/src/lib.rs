//! Quadratic continuous-discrete optimization with linear equality
//! constraints, reduced to QUBO form for annealing.
//!
//! Pipeline: [`QcmdoProblem`] → [`reduce`] (constraint elimination and
//! continuous minimization) → [`QudoProblem`] → [`assemble_qubo`] →
//! [`QuboProblem`] → classical solvers or the annealing spectrum in
//! [`annealer`].
//!
//! Everything is generic over `f32`/`f64` through [`Real`]; the aliases
//! below fix the scalar for the common cases.

pub mod annealer;
pub mod bits;
pub mod eigen;
pub mod electrostatics;
pub mod encoding;
pub mod error;
pub mod linalg;
pub mod maxcut;
pub mod pde;
pub mod problem;
pub mod reduction;
pub mod scalar;
pub mod solvers;

pub use annealer::{build_ising, classical_bottom_states, hamiltonian_at, sweep_gaps, GapSweep, IsingProgram};
pub use encoding::{assemble_qubo, assemble_qubo_with, EncodingPolicy, EncodingScheme, QuboProblem, VariableEncoding};
pub use error::{Error, Result};
pub use maxcut::{maxcut_to_pde_instance, maxcut_to_qubo, Graph, MaxCutReduction};
pub use pde::{reduce_pde, FieldModel, LinearOperator, PdeInstance};
pub use problem::{QcmdoProblem, ValidationReport, VariableDomain, ViolationCode};
pub use reduction::{eliminate_constraints, reduce, to_qudo, ConstraintElimination, QudoProblem};
pub use scalar::{CMatrix, CVector, Real};
pub use solvers::{solve_exhaustive, solve_sa, SaSchedule};

pub type Qcmdo = QcmdoProblem<f64>;
pub type Qudo = QudoProblem<f64>;
pub type Qubo = QuboProblem<f64>;
pub type Pde = PdeInstance<f64>;
pub type Ising = IsingProgram<f64>;
pub type Domain = VariableDomain<f64>;

pub type Qcmdo32 = QcmdoProblem<f32>;
pub type Qudo32 = QudoProblem<f32>;
pub type Qubo32 = QuboProblem<f32>;
pub type Pde32 = PdeInstance<f32>;
pub type Ising32 = IsingProgram<f32>;
pub type Domain32 = VariableDomain<f32>;
