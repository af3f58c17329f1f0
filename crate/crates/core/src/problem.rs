//! The mixed discrete/continuous problem
//!
//! ```text
//! min  x^H A x + Re(x^H b) + c    subject to  F x = d,  x_i in S_i
//! ```
//!
//! where each `S_i` is either all of C or a finite set. The types here are the
//! ground truth every reduction is checked against: [`QcmdoProblem::evaluate_objective`]
//! and [`QcmdoProblem::check_constraints`] work directly on the original form.

use std::fmt;

use nalgebra::{Complex, ComplexField};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, hermitize, max_abs};
use crate::scalar::{canonical_cmp, CMatrix, CVector, Real};

/// Domain of a single variable.
#[derive(Debug, Clone, PartialEq)]
pub enum VariableDomain<T: Real> {
    Continuous,
    /// Finite set of admissible values, kept in canonical `(re, im)` order.
    Discrete(Vec<Complex<T>>),
}

impl<T: Real> VariableDomain<T> {
    /// A finite domain. Values are sorted into canonical order; duplicates are
    /// kept so that validation can report them.
    pub fn discrete(mut values: Vec<Complex<T>>) -> Self {
        values.sort_by(canonical_cmp);
        VariableDomain::Discrete(values)
    }

    /// A finite domain of real values.
    pub fn real_set(values: &[T]) -> Self {
        Self::discrete(values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    pub fn binary() -> Self {
        Self::real_set(&[T::zero(), T::one()])
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, VariableDomain::Discrete(_))
    }

    pub fn values(&self) -> Option<&[Complex<T>]> {
        match self {
            VariableDomain::Continuous => None,
            VariableDomain::Discrete(v) => Some(v),
        }
    }

    fn contains_within(&self, z: Complex<T>, tol: T) -> bool {
        match self {
            VariableDomain::Continuous => true,
            VariableDomain::Discrete(values) => {
                values.iter().any(|&v| (v - z).modulus() <= tol * T::one().max(v.modulus()))
            }
        }
    }
}

/// Kind of structural violation found by [`QcmdoProblem::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    NonFinite,
    NotHermitian,
    ComplexConstant,
    EmptyDomain,
    DuplicateDomainValue,
    TooFewContinuous,
    RankDeficientF2,
}

impl ViolationCode {
    /// Short stable identifier.
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NonFinite => "finite",
            ViolationCode::NotHermitian => "A Hermitian",
            ViolationCode::ComplexConstant => "c real",
            ViolationCode::EmptyDomain => "domain nonempty",
            ViolationCode::DuplicateDomainValue => "domain distinct",
            ViolationCode::TooFewContinuous => "n2 ≥ m",
            ViolationCode::RankDeficientF2 => "rank(F2) = m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

/// Outcome of validation; empty when every structural assumption holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, message: String) {
        self.violations.push(Violation { code, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "[{}] {}", v.code.as_str(), v.message)?;
        }
        Ok(())
    }
}

/// A complete problem instance.
///
/// `A` is stored Hermitian-symmetrized; the defect of the matrix that was
/// supplied is remembered for validation. The constant term is stored real,
/// with its imaginary part kept only for validation.
#[derive(Debug, Clone)]
pub struct QcmdoProblem<T: Real> {
    a: CMatrix<T>,
    b: CVector<T>,
    c: T,
    c_imag: T,
    f: CMatrix<T>,
    d: CVector<T>,
    domains: Vec<VariableDomain<T>>,
    hermiticity_defect: T,
}

impl<T: Real> QcmdoProblem<T> {
    /// Builds an instance. Only shapes are checked here; everything else is
    /// reported by [`validate`](Self::validate).
    pub fn new(
        a: CMatrix<T>,
        b: CVector<T>,
        c: Complex<T>,
        f: CMatrix<T>,
        d: CVector<T>,
        domains: Vec<VariableDomain<T>>,
    ) -> Result<Self> {
        let n = domains.len();
        check_len("A rows", n, a.nrows())?;
        check_len("A columns", n, a.ncols())?;
        check_len("b", n, b.len())?;
        check_len("F columns", n, f.ncols())?;
        check_len("d", f.nrows(), d.len())?;
        let defect = linalg::hermiticity_defect(&a);
        Ok(Self { a: hermitize(&a), b, c: c.re, c_imag: c.im, f, d, domains, hermiticity_defect: defect })
    }

    /// Unconstrained instance.
    pub fn unconstrained(a: CMatrix<T>, b: CVector<T>, c: T, domains: Vec<VariableDomain<T>>) -> Result<Self> {
        let n = domains.len();
        Self::new(a, b, Complex::new(c, T::zero()), CMatrix::zeros(0, n), CVector::zeros(0), domains)
    }

    pub fn a(&self) -> &CMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &CVector<T> {
        &self.b
    }
    pub fn c(&self) -> T {
        self.c
    }
    /// Imaginary part of the constant as supplied (zero for well-formed input).
    pub fn c_imag(&self) -> T {
        self.c_imag
    }
    pub fn f(&self) -> &CMatrix<T> {
        &self.f
    }
    pub fn d(&self) -> &CVector<T> {
        &self.d
    }
    pub fn domains(&self) -> &[VariableDomain<T>] {
        &self.domains
    }
    pub fn n(&self) -> usize {
        self.domains.len()
    }
    pub fn m(&self) -> usize {
        self.f.nrows()
    }
    pub fn n1(&self) -> usize {
        self.domains.iter().filter(|d| d.is_discrete()).count()
    }
    pub fn n2(&self) -> usize {
        self.n() - self.n1()
    }

    /// Checks every structural assumption. Never panics; violations are data.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        let all_finite = self
            .a
            .iter()
            .chain(self.b.iter())
            .chain(self.f.iter())
            .chain(self.d.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
            && self.c.is_finite()
            && self.c_imag.is_finite()
            && self.domains.iter().filter_map(|d| d.values()).flatten().all(|z| z.re.is_finite() && z.im.is_finite());
        if !all_finite {
            report.push(ViolationCode::NonFinite, "problem data contains NaN or infinite entries".into());
        }

        let scale = max_abs(&self.a);
        if self.hermiticity_defect > T::lit(T::HERMITIAN_TOL) * scale {
            report.push(
                ViolationCode::NotHermitian,
                format!(
                    "A is not Hermitian: max |A - A^H| = {:e} exceeds {:e} * max |A|",
                    self.hermiticity_defect.as_f64(),
                    T::HERMITIAN_TOL
                ),
            );
        }

        if self.c_imag.abs() > T::lit(T::CONST_IMAG_TOL) {
            report.push(
                ViolationCode::ComplexConstant,
                format!("constant c has imaginary part {:e}", self.c_imag.as_f64()),
            );
        }

        for (i, domain) in self.domains.iter().enumerate() {
            if let VariableDomain::Discrete(values) = domain {
                if values.is_empty() {
                    report.push(ViolationCode::EmptyDomain, format!("variable {i} has an empty discrete set"));
                }
                if values.windows(2).any(|w| w[0] == w[1]) {
                    report.push(
                        ViolationCode::DuplicateDomainValue,
                        format!("variable {i} lists a value more than once"),
                    );
                }
            }
        }

        let (m, n2) = (self.m(), self.n2());
        if n2 < m {
            report.push(
                ViolationCode::TooFewContinuous,
                format!("n2 ≥ m violated: {n2} continuous variables but {m} constraints"),
            );
        } else if m > 0 && all_finite {
            let f2 = self.continuous_columns();
            let (sigma_min, cutoff) = f2_rank_margin(&f2);
            if sigma_min <= cutoff {
                report.push(
                    ViolationCode::RankDeficientF2,
                    format!(
                        "rank(F2) = m violated: rows of F2 are not linearly independent (sigma_min = {:e})",
                        sigma_min.as_f64()
                    ),
                );
            }
        }
        report
    }

    fn continuous_columns(&self) -> CMatrix<T> {
        let cols: Vec<usize> = (0..self.n()).filter(|&i| !self.domains[i].is_discrete()).collect();
        self.f.select_columns(cols.iter())
    }

    /// Splits the instance into its discrete and continuous blocks.
    pub fn partition(&self) -> Result<BlockPartition<T>> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(Error::InvalidProblem(report));
        }
        Ok(BlockPartition::new(self))
    }

    /// `x^H A x + Re(x^H b) + c`.
    pub fn evaluate_objective(&self, x: &CVector<T>) -> Result<T> {
        check_len("x", self.n(), x.len())?;
        let quad = linalg::quadratic_form(&self.a, x);
        debug_assert!(
            !quad.im.is_finite() || quad.im.abs() <= T::lit(T::IMAG_TOL) * (T::one() + quad.re.abs()) * T::lit(1e3),
            "imaginary residue of a Hermitian form"
        );
        Ok(quad.re + x.dotc(&self.b).re + self.c)
    }

    /// `||F x - d||_2`.
    pub fn constraint_residual(&self, x: &CVector<T>) -> Result<T> {
        check_len("x", self.n(), x.len())?;
        Ok((&self.f * x - &self.d).norm())
    }

    /// True iff `||F x - d|| <= tol * max(1, ||d||)` and every discrete
    /// coordinate lies within `tol` of an element of its set.
    pub fn check_constraints(&self, x: &CVector<T>, tol: T) -> Result<bool> {
        let residual = self.constraint_residual(x)?;
        if residual > tol * T::one().max(self.d.norm()) {
            return Ok(false);
        }
        Ok(self.domains.iter().zip(x.iter()).all(|(dom, &z)| dom.contains_within(z, tol)))
    }
}

/// `(sigma_min, cutoff)` of the continuous constraint block.
pub(crate) fn f2_rank_margin<T: Real>(f2: &CMatrix<T>) -> (T, T) {
    let (u, sigma, _) = linalg::svd(f2);
    drop(u);
    let smax = sigma.first().copied().unwrap_or_else(T::zero);
    let smin = if sigma.len() < f2.nrows() { T::zero() } else { sigma.last().copied().unwrap_or_else(T::zero) };
    (smin, linalg::rank_cutoff(f2.nrows(), f2.ncols(), smax))
}

/// Discrete/continuous block structure of a problem.
///
/// Index lists are sorted and refer to positions in the original problem.
#[derive(Debug, Clone)]
pub struct BlockPartition<T: Real> {
    pub discrete_indices: Vec<usize>,
    pub continuous_indices: Vec<usize>,
    pub a11: CMatrix<T>,
    pub a12: CMatrix<T>,
    pub a21: CMatrix<T>,
    pub a22: CMatrix<T>,
    pub b1: CVector<T>,
    pub b2: CVector<T>,
    pub f1: CMatrix<T>,
    pub f2: CMatrix<T>,
}

impl<T: Real> BlockPartition<T> {
    pub(crate) fn new(problem: &QcmdoProblem<T>) -> Self {
        let (discrete_indices, continuous_indices): (Vec<usize>, Vec<usize>) =
            (0..problem.n()).partition(|&i| problem.domains[i].is_discrete());
        let a = &problem.a;
        let pick = |rows: &[usize], cols: &[usize]| a.select_rows(rows.iter()).select_columns(cols.iter());
        Self {
            a11: pick(&discrete_indices, &discrete_indices),
            a12: pick(&discrete_indices, &continuous_indices),
            a21: pick(&continuous_indices, &discrete_indices),
            a22: pick(&continuous_indices, &continuous_indices),
            b1: problem.b.select_rows(discrete_indices.iter()),
            b2: problem.b.select_rows(continuous_indices.iter()),
            f1: problem.f.select_columns(discrete_indices.iter()),
            f2: problem.f.select_columns(continuous_indices.iter()),
            discrete_indices,
            continuous_indices,
        }
    }

    pub fn n1(&self) -> usize {
        self.discrete_indices.len()
    }

    pub fn n2(&self) -> usize {
        self.continuous_indices.len()
    }

    /// Places discrete and continuous parts back at their original positions.
    pub fn assemble(&self, x1: &CVector<T>, x2: &CVector<T>) -> Result<CVector<T>> {
        check_len("x1", self.n1(), x1.len())?;
        check_len("x2", self.n2(), x2.len())?;
        let mut x = CVector::zeros(self.n1() + self.n2());
        for (k, &i) in self.discrete_indices.iter().enumerate() {
            x[i] = x1[k];
        }
        for (k, &i) in self.continuous_indices.iter().enumerate() {
            x[i] = x2[k];
        }
        Ok(x)
    }

    /// Rebuilds `(A, b, F)` from the blocks.
    pub fn reassemble(&self) -> (CMatrix<T>, CVector<T>, CMatrix<T>) {
        let n = self.n1() + self.n2();
        let m = self.f1.nrows().max(self.f2.nrows());
        let mut a = CMatrix::zeros(n, n);
        let mut b = CVector::zeros(n);
        let mut f = CMatrix::zeros(m, n);
        let blocks = [
            (&self.discrete_indices, &self.discrete_indices, &self.a11),
            (&self.discrete_indices, &self.continuous_indices, &self.a12),
            (&self.continuous_indices, &self.discrete_indices, &self.a21),
            (&self.continuous_indices, &self.continuous_indices, &self.a22),
        ];
        for (rows, cols, block) in blocks {
            for (r, &i) in rows.iter().enumerate() {
                for (c, &j) in cols.iter().enumerate() {
                    a[(i, j)] = block[(r, c)];
                }
            }
        }
        for (k, &i) in self.discrete_indices.iter().enumerate() {
            b[i] = self.b1[k];
            for r in 0..m {
                f[(r, i)] = self.f1[(r, k)];
            }
        }
        for (k, &i) in self.continuous_indices.iter().enumerate() {
            b[i] = self.b2[k];
            for r in 0..m {
                f[(r, i)] = self.f2[(r, k)];
            }
        }
        (a, b, f)
    }
}
