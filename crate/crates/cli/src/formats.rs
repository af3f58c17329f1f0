//! On-disk formats: JSON problem files, text QUBO files and the JSON
//! encodings sidecar.
//!
//! Problem and QUBO files round-trip byte-identically through
//! `parse` → `to_text`.

use std::fmt::Write as _;

use nalgebra::{Complex, DMatrix, DVector};
use qcmdo_core::encoding::Penalty;
use qcmdo_core::{EncodingScheme, QcmdoProblem, QuboProblem, VariableDomain, VariableEncoding};
use serde::{Deserialize, Serialize};

pub type Pair = [f64; 2];

fn to_pair(z: Complex<f64>) -> Pair {
    [z.re, z.im]
}

fn from_pair(p: Pair) -> Complex<f64> {
    Complex::new(p[0], p[1])
}

/// Constant term: a bare number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Constant {
    Real(f64),
    Complex(Pair),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainSpec {
    Continuous,
    Discrete(Vec<Pair>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Pair>>,
    pub b: Vec<Pair>,
    pub c: Constant,
    #[serde(rename = "F")]
    pub f: Vec<Vec<Pair>>,
    pub d: Vec<Pair>,
    pub domains: Vec<DomainSpec>,
}

fn json<S: Serialize>(value: &S) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

fn push_rows(out: &mut String, key: &str, rows: &[String], last: bool) {
    let tail = if last { "" } else { "," };
    if rows.is_empty() {
        let _ = writeln!(out, "  \"{key}\": []{tail}");
        return;
    }
    let _ = writeln!(out, "  \"{key}\": [");
    for (i, row) in rows.iter().enumerate() {
        let sep = if i + 1 == rows.len() { "" } else { "," };
        let _ = writeln!(out, "    {row}{sep}");
    }
    let _ = writeln!(out, "  ]{tail}");
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        file.check_shapes()?;
        Ok(file)
    }

    fn check_shapes(&self) -> Result<(), String> {
        let (n, m) = (self.n, self.m);
        let rows_ok = |rows: &[Vec<Pair>], r: usize| rows.len() == r && rows.iter().all(|row| row.len() == n);
        if !rows_ok(&self.a, n) {
            return Err(format!("A must be {n} x {n}"));
        }
        if !rows_ok(&self.f, m) {
            return Err(format!("F must be {m} x {n}"));
        }
        if self.b.len() != n || self.domains.len() != n {
            return Err(format!("b and domains must have length {n}"));
        }
        if self.d.len() != m {
            return Err(format!("d must have length {m}"));
        }
        Ok(())
    }

    /// One matrix row per line, everything else compact.
    pub fn to_text(&self) -> String {
        let mut out = String::from("{\n");
        let _ = writeln!(out, "  \"n\": {},", self.n);
        let _ = writeln!(out, "  \"m\": {},", self.m);
        push_rows(&mut out, "A", &self.a.iter().map(json).collect::<Vec<_>>(), false);
        let _ = writeln!(out, "  \"b\": {},", json(&self.b));
        let _ = writeln!(out, "  \"c\": {},", json(&self.c));
        push_rows(&mut out, "F", &self.f.iter().map(json).collect::<Vec<_>>(), false);
        let _ = writeln!(out, "  \"d\": {},", json(&self.d));
        push_rows(&mut out, "domains", &self.domains.iter().map(json).collect::<Vec<_>>(), true);
        out.push_str("}\n");
        out
    }

    pub fn to_problem(&self) -> qcmdo_core::Result<QcmdoProblem<f64>> {
        let (n, m) = (self.n, self.m);
        let a = DMatrix::from_fn(n, n, |i, j| from_pair(self.a[i][j]));
        let f = DMatrix::from_fn(m, n, |i, j| from_pair(self.f[i][j]));
        let b = DVector::from_iterator(n, self.b.iter().map(|&p| from_pair(p)));
        let d = DVector::from_iterator(m, self.d.iter().map(|&p| from_pair(p)));
        let c = match self.c {
            Constant::Real(v) => Complex::new(v, 0.0),
            Constant::Complex(p) => from_pair(p),
        };
        let domains = self
            .domains
            .iter()
            .map(|spec| match spec {
                DomainSpec::Continuous => VariableDomain::Continuous,
                DomainSpec::Discrete(values) => {
                    VariableDomain::discrete(values.iter().map(|&p| from_pair(p)).collect())
                }
            })
            .collect();
        QcmdoProblem::new(a, b, c, f, d, domains)
    }

    pub fn from_problem(problem: &QcmdoProblem<f64>) -> Self {
        let rows = |mat: &DMatrix<Complex<f64>>| {
            (0..mat.nrows()).map(|i| (0..mat.ncols()).map(|j| to_pair(mat[(i, j)])).collect()).collect()
        };
        let c = if problem.c_imag() == 0.0 {
            Constant::Real(problem.c())
        } else {
            Constant::Complex([problem.c(), problem.c_imag()])
        };
        let domains = problem
            .domains()
            .iter()
            .map(|d| match d.values() {
                None => DomainSpec::Continuous,
                Some(values) => DomainSpec::Discrete(values.iter().map(|&z| to_pair(z)).collect()),
            })
            .collect();
        ProblemFile {
            n: problem.n(),
            m: problem.m(),
            a: rows(problem.a()),
            b: problem.b().iter().map(|&z| to_pair(z)).collect(),
            c,
            f: rows(problem.f()),
            d: problem.d().iter().map(|&z| to_pair(z)).collect(),
            domains,
        }
    }
}

/// Line-oriented QUBO file.
///
/// ```text
/// c free comment
/// p qubo 0 <p> <nDiag> <nOffDiag>
/// i i <M_ii>
/// i j <M_ij + M_ji>
/// c offset <k>
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct QuboFile {
    /// Comment lines other than the offset, verbatim.
    pub comments: Vec<String>,
    pub p: usize,
    pub diagonal: Vec<(usize, f64)>,
    pub off_diagonal: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_float(token: &str, line: usize) -> Result<f64, String> {
    let v: f64 = token.parse().map_err(|_| format!("line {line}: bad number {token:?}"))?;
    if !v.is_finite() {
        return Err(format!("line {line}: non-finite value"));
    }
    Ok(v)
}

fn parse_index(token: &str, line: usize) -> Result<usize, String> {
    token.parse().map_err(|_| format!("line {line}: bad index {token:?}"))
}

impl QuboFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut comments = Vec::new();
        let mut header: Option<(usize, usize, usize)> = None;
        let mut offset = None;
        let mut diagonal = Vec::new();
        let mut off_diagonal = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            match tokens.as_slice() {
                [] => return Err(format!("line {line}: blank line")),
                ["c", "offset", v] => {
                    if offset.replace(parse_float(v, line)?).is_some() {
                        return Err(format!("line {line}: second offset line"));
                    }
                }
                [first, ..] if *first == "c" => comments.push(raw.to_string()),
                ["p", "qubo", "0", p, nd, no] => {
                    if header.is_some() {
                        return Err(format!("line {line}: second program line"));
                    }
                    header = Some((parse_index(p, line)?, parse_index(nd, line)?, parse_index(no, line)?));
                }
                [i, j, v] => {
                    let (p, _, _) = header.ok_or(format!("line {line}: entry before program line"))?;
                    let (i, j, v) = (parse_index(i, line)?, parse_index(j, line)?, parse_float(v, line)?);
                    if i >= p || j >= p {
                        return Err(format!("line {line}: index out of range for p = {p}"));
                    }
                    match i.cmp(&j) {
                        std::cmp::Ordering::Equal => diagonal.push((i, v)),
                        std::cmp::Ordering::Less => off_diagonal.push((i, j, v)),
                        std::cmp::Ordering::Greater => return Err(format!("line {line}: expected i <= j")),
                    }
                }
                _ => return Err(format!("line {line}: unrecognized line")),
            }
        }
        let (p, nd, no) = header.ok_or("missing program line")?;
        if diagonal.len() != nd || off_diagonal.len() != no {
            return Err(format!(
                "program line announces {nd} diagonal and {no} off-diagonal entries, found {} and {}",
                diagonal.len(),
                off_diagonal.len()
            ));
        }
        let mut seen: Vec<(usize, usize)> =
            diagonal.iter().map(|&(i, _)| (i, i)).chain(off_diagonal.iter().map(|&(i, j, _)| (i, j))).collect();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err("duplicate entry".into());
        }
        Ok(QuboFile { comments, p, diagonal, off_diagonal, offset: offset.unwrap_or(0.0) })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "{c}");
        }
        let _ = writeln!(out, "p qubo 0 {} {} {}", self.p, self.diagonal.len(), self.off_diagonal.len());
        for &(i, v) in &self.diagonal {
            let _ = writeln!(out, "{i} {i} {}", fmt_float(v));
        }
        for &(i, j, v) in &self.off_diagonal {
            let _ = writeln!(out, "{i} {j} {}", fmt_float(v));
        }
        let _ = writeln!(out, "c offset {}", fmt_float(self.offset));
        out
    }

    pub fn to_qubo(&self) -> qcmdo_core::Result<QuboProblem<f64>> {
        let mut m = DMatrix::zeros(self.p, self.p);
        for &(i, v) in &self.diagonal {
            m[(i, i)] = v;
        }
        for &(i, j, v) in &self.off_diagonal {
            m[(i, j)] = v / 2.0;
            m[(j, i)] = v / 2.0;
        }
        QuboProblem::new(m, self.offset)
    }

    /// Nonzero entries of `M` in row-major order.
    pub fn from_qubo(qubo: &QuboProblem<f64>, comments: Vec<String>) -> Self {
        let (m, p) = (qubo.m(), qubo.p());
        let diagonal = (0..p).filter(|&i| m[(i, i)] != 0.0).map(|i| (i, m[(i, i)])).collect();
        let off_diagonal = (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .filter(|&(i, j)| m[(i, j)] != 0.0)
            .map(|(i, j)| (i, j, 2.0 * m[(i, j)]))
            .collect();
        QuboFile { comments, p, diagonal, off_diagonal, offset: qubo.k() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    BinaryExpansion,
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedVariable {
    pub scheme: SchemeName,
    pub offset: Pair,
    pub coeffs: Vec<Pair>,
    pub values: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub lambda: f64,
    /// Half-open bit ranges `[start, end)`.
    pub blocks: Vec<[usize; 2]>,
}

/// Decode data stored next to a QUBO file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingFile {
    pub variables: Vec<EncodedVariable>,
    pub penalty: Option<PenaltySpec>,
}

impl EncodingFile {
    pub fn from_qubo(qubo: &QuboProblem<f64>) -> Self {
        let variables = qubo
            .encodings
            .iter()
            .map(|e| EncodedVariable {
                scheme: match e.scheme {
                    EncodingScheme::BinaryExpansion => SchemeName::BinaryExpansion,
                    EncodingScheme::OneHot => SchemeName::OneHot,
                },
                offset: to_pair(e.offset),
                coeffs: e.coeffs.iter().map(|&z| to_pair(z)).collect(),
                values: e.values.iter().map(|&z| to_pair(z)).collect(),
            })
            .collect();
        let penalty = qubo
            .penalty
            .as_ref()
            .map(|p| PenaltySpec { lambda: p.lambda, blocks: p.blocks.iter().map(|r| [r.start, r.end]).collect() });
        EncodingFile { variables, penalty }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    /// Attaches the decode data to `qubo`.
    pub fn attach(&self, qubo: QuboProblem<f64>) -> qcmdo_core::Result<QuboProblem<f64>> {
        let encodings = self
            .variables
            .iter()
            .map(|v| VariableEncoding {
                scheme: match v.scheme {
                    SchemeName::BinaryExpansion => EncodingScheme::BinaryExpansion,
                    SchemeName::OneHot => EncodingScheme::OneHot,
                },
                offset: from_pair(v.offset),
                coeffs: v.coeffs.iter().map(|&p| from_pair(p)).collect(),
                values: v.values.iter().map(|&p| from_pair(p)).collect(),
            })
            .collect();
        let mut qubo = qubo.with_encodings(encodings)?;
        qubo.penalty = self
            .penalty
            .as_ref()
            .map(|p| Penalty { lambda: p.lambda, blocks: p.blocks.iter().map(|b| b[0]..b[1]).collect() });
        Ok(qubo)
    }
}
