//! Discrete-to-binary encodings and assembly of the final QUBO.
//!
//! Each discrete variable gets its own block of bits with an affine map
//! `x_i = offset_i + sum_j coeff_ij s_ij`. Evenly spaced sets of size `2^p`
//! use a binary expansion; anything else falls back to one bit per value plus
//! a penalty that forces exactly one bit of the block to be set.

use std::ops::Range;

use nalgebra::{Complex, ComplexField, DMatrix};
use num_traits::Zero;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, symmetrize};
use crate::problem::VariableDomain;
use crate::reduction::QudoProblem;
use crate::scalar::{CMatrix, CVector, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingScheme {
    BinaryExpansion,
    OneHot,
}

/// Binary encoding of one discrete variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableEncoding<T: Real> {
    pub scheme: EncodingScheme,
    pub offset: Complex<T>,
    pub coeffs: Vec<Complex<T>>,
    /// Set elements indexed by code: for a binary expansion `values[k]` is the
    /// element at `offset + k * spacing`, for one-hot `values[j]` is selected by bit `j`.
    pub values: Vec<Complex<T>>,
}

impl<T: Real> VariableEncoding<T> {
    pub fn bits(&self) -> usize {
        self.coeffs.len()
    }

    /// Decodes one block. Returns the value and whether the block is valid.
    ///
    /// Valid blocks map to the exact set element; an invalid one-hot block
    /// maps to its affine image.
    pub fn decode(&self, bits: &[bool]) -> (Complex<T>, bool) {
        debug_assert_eq!(bits.len(), self.bits());
        match self.scheme {
            EncodingScheme::BinaryExpansion => {
                let code = bits.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| 1usize << j).sum::<usize>();
                (self.values[code], true)
            }
            EncodingScheme::OneHot => {
                let set: Vec<usize> = (0..bits.len()).filter(|&j| bits[j]).collect();
                if set.len() == 1 {
                    (self.values[set[0]], true)
                } else {
                    let sum = set.iter().fold(self.offset, |acc, &j| acc + self.coeffs[j]);
                    (sum, false)
                }
            }
        }
    }

    /// Bits representing an element of the set, if present.
    pub fn encode(&self, value: Complex<T>) -> Option<Vec<bool>> {
        let idx = self.values.iter().position(|&v| v == value)?;
        let p = self.bits();
        Some(match self.scheme {
            EncodingScheme::BinaryExpansion => (0..p).map(|j| (idx >> j) & 1 == 1).collect(),
            EncodingScheme::OneHot => (0..p).map(|j| j == idx).collect(),
        })
    }

    /// Every bit pattern of this block that decodes to a valid element.
    pub fn valid_state_count(&self) -> usize {
        self.values.len()
    }
}

fn discrete_values<T: Real>(domain: &VariableDomain<T>) -> Result<&[Complex<T>]> {
    match domain.values() {
        None => Err(Error::InvalidParameter("continuous variable has no binary encoding".into())),
        Some([]) => Err(Error::EmptyDomain),
        Some(v) => Ok(v),
    }
}

/// Binary expansion `offset + sum_j 2^j a s_j` for `2^p` evenly spaced,
/// collinear values.
pub fn encode_binary_expansion<T: Real>(domain: &VariableDomain<T>) -> Result<VariableEncoding<T>> {
    let values = discrete_values(domain)?;
    let size = values.len();
    if !size.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { size });
    }
    let p = size.trailing_zeros() as usize;
    if size == 1 {
        return Ok(VariableEncoding {
            scheme: EncodingScheme::BinaryExpansion,
            offset: values[0],
            coeffs: Vec::new(),
            values: values.to_vec(),
        });
    }

    // Endpoints of the line are the farthest pair; values are in canonical
    // order so the lower index is the canonically smaller endpoint.
    let (mut lo, mut hi, mut diameter) = (0, 0, T::zero());
    for i in 0..size {
        for j in i + 1..size {
            let dist = (values[i] - values[j]).modulus();
            if dist > diameter {
                (lo, hi, diameter) = (i, j, dist);
            }
        }
    }
    if diameter.is_zero() {
        return Err(Error::NotEvenlySpaced);
    }
    let start = values[lo];
    let spacing = (values[hi] - start).unscale(T::from_usize_lossy(size - 1));
    let tol = T::lit(T::FIT_TOL) * diameter;

    let mut used = vec![false; size];
    let mut by_code = Vec::with_capacity(size);
    for k in 0..size {
        let target = start + spacing.scale(T::from_usize_lossy(k));
        let hit = (0..size)
            .filter(|&i| !used[i])
            .find(|&i| (values[i] - target).modulus() <= tol)
            .ok_or(Error::NotEvenlySpaced)?;
        used[hit] = true;
        by_code.push(values[hit]);
    }
    let coeffs = (0..p).map(|j| spacing.scale(T::from_usize_lossy(1 << j))).collect();
    Ok(VariableEncoding { scheme: EncodingScheme::BinaryExpansion, offset: start, coeffs, values: by_code })
}

/// One bit per element; exactly one bit must be set.
pub fn encode_one_hot<T: Real>(domain: &VariableDomain<T>) -> Result<VariableEncoding<T>> {
    let values = discrete_values(domain)?;
    Ok(VariableEncoding {
        scheme: EncodingScheme::OneHot,
        offset: Complex::zero(),
        coeffs: values.to_vec(),
        values: values.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncodingPolicy {
    #[default]
    PreferBinaryExpansionElseOneHot,
    ForceOneHot,
}

/// Encodes a domain according to the policy.
pub fn encode_domain<T: Real>(domain: &VariableDomain<T>, policy: EncodingPolicy) -> Result<VariableEncoding<T>> {
    match policy {
        EncodingPolicy::ForceOneHot => encode_one_hot(domain),
        EncodingPolicy::PreferBinaryExpansionElseOneHot => match encode_binary_expansion(domain) {
            Ok(enc) => Ok(enc),
            Err(Error::NotPowerOfTwo { .. } | Error::NotEvenlySpaced) => encode_one_hot(domain),
            Err(e) => Err(e),
        },
    }
}

/// One-hot penalty: weight and the bit ranges it applies to.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalty<T: Real> {
    pub lambda: T,
    pub blocks: Vec<Range<usize>>,
}

/// `min s^T M s + k` over bitstrings, with the decode data of its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem<T: Real> {
    m: DMatrix<T>,
    k: T,
    pub encodings: Vec<VariableEncoding<T>>,
    pub penalty: Option<Penalty<T>>,
}

impl<T: Real> QuboProblem<T> {
    /// Bare QUBO; `m` is symmetrized.
    pub fn new(m: DMatrix<T>, k: T) -> Result<Self> {
        check_len("M columns", m.nrows(), m.ncols())?;
        if !m.iter().all(|x| x.is_finite()) || !k.is_finite() {
            return Err(Error::InvalidParameter("QUBO coefficients must be finite".into()));
        }
        Ok(Self { m: symmetrize(&m), k, encodings: Vec::new(), penalty: None })
    }

    /// Attaches decode data. Block sizes must add up to `p`.
    pub fn with_encodings(mut self, encodings: Vec<VariableEncoding<T>>) -> Result<Self> {
        let bits: usize = encodings.iter().map(|e| e.bits()).sum();
        check_len("encoded bits", self.p(), bits)?;
        self.encodings = encodings;
        Ok(self)
    }

    pub fn m(&self) -> &DMatrix<T> {
        &self.m
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn p(&self) -> usize {
        self.m.nrows()
    }

    /// `s^T M s + k`.
    pub fn value(&self, s: &[bool]) -> T {
        debug_assert_eq!(s.len(), self.p());
        let on: Vec<usize> = (0..s.len()).filter(|&i| s[i]).collect();
        let mut acc = self.k;
        for &i in &on {
            for &j in &on {
                acc += self.m[(i, j)];
            }
        }
        acc
    }

    /// Bit ranges of the encoded variables, in order.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.encodings
            .iter()
            .map(|e| {
                let r = start..start + e.bits();
                start = r.end;
                r
            })
            .collect()
    }

    /// Applies the per-block maps. `valid` is false iff a one-hot block does
    /// not have exactly one bit set.
    pub fn decode(&self, s: &[bool]) -> Result<(CVector<T>, bool)> {
        check_len("bitstring", self.p(), s.len())?;
        let mut valid = true;
        let values: Vec<Complex<T>> = self
            .encodings
            .iter()
            .zip(self.block_ranges())
            .map(|(enc, r)| {
                let (v, ok) = enc.decode(&s[r]);
                valid &= ok;
                v
            })
            .collect();
        Ok((CVector::from_vec(values), valid))
    }

    /// Bitstring for a discrete assignment, if every value is encodable.
    pub fn encode(&self, x1: &CVector<T>) -> Option<Vec<bool>> {
        if x1.len() != self.encodings.len() {
            return None;
        }
        let mut out = Vec::with_capacity(self.p());
        for (enc, &v) in self.encodings.iter().zip(x1.iter()) {
            out.extend(enc.encode(v)?);
        }
        Some(out)
    }
}

/// `s^T M s + k`.
pub fn qubo_value<T: Real>(qubo: &QuboProblem<T>, s: &[bool]) -> T {
    qubo.value(s)
}

/// Encodes every discrete variable by `policy` and assembles the QUBO.
pub fn assemble_qubo<T: Real>(qudo: &QudoProblem<T>, policy: EncodingPolicy) -> Result<QuboProblem<T>> {
    let encodings = qudo.domains.iter().map(|d| encode_domain(d, policy)).collect::<Result<Vec<_>>>()?;
    assemble_qubo_with(qudo, encodings)
}

/// Assembles `M` and `k` for explicit encodings.
///
/// Adds the one-hot penalty `lambda (||s_i||_1 - 1)^2` per one-hot block with
/// `lambda = 2 p ||M||_2` of the unpenalized matrix.
pub fn assemble_qubo_with<T: Real>(
    qudo: &QudoProblem<T>,
    encodings: Vec<VariableEncoding<T>>,
) -> Result<QuboProblem<T>> {
    let n1 = qudo.n1();
    check_len("encodings", n1, encodings.len())?;
    let p: usize = encodings.iter().map(|e| e.bits()).sum();

    let mut t = CMatrix::zeros(n1, p);
    let mut x_star = CVector::zeros(n1);
    let mut col = 0;
    let mut one_hot_blocks = Vec::new();
    for (i, enc) in encodings.iter().enumerate() {
        x_star[i] = enc.offset;
        for (j, &coef) in enc.coeffs.iter().enumerate() {
            t[(i, col + j)] = coef;
        }
        if enc.scheme == EncodingScheme::OneHot {
            one_hot_blocks.push(col..col + enc.bits());
        }
        col += enc.bits();
    }

    let h = &qudo.h;
    let t_adj = t.adjoint();
    let tht = &t_adj * h * &t;
    let two = T::lit(2.0);
    let lin = &t_adj * (&qudo.g + (h * &x_star).map(|z| z.scale(two)));
    let mut m = DMatrix::from_fn(p, p, |i, j| {
        let mut v = tht[(i, j)].re;
        if i == j {
            v += lin[i].re;
        }
        v
    });
    m = symmetrize(&m);
    let mut k = qudo.f + linalg::quadratic_form(h, &x_star).re + x_star.dotc(&qudo.g).re;

    let penalty = if one_hot_blocks.is_empty() {
        None
    } else {
        let norm = linalg::symmetric_spectral_norm(&m);
        let mut lambda = two * T::from_usize_lossy(p) * norm;
        if lambda.is_zero() {
            // All states tie without a penalty; any positive weight enforces validity.
            lambda = T::one();
        }
        for block in &one_hot_blocks {
            for i in block.clone() {
                for j in block.clone() {
                    m[(i, j)] += if i == j { -lambda } else { lambda };
                }
            }
            k += lambda;
        }
        Some(Penalty { lambda, blocks: one_hot_blocks })
    };

    Ok(QuboProblem { m, k, encodings, penalty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;

    #[test]
    fn binary_pair() {
        let enc = encode_binary_expansion(&VariableDomain::real_set(&[0.0, 1.0])).unwrap();
        assert_eq!(enc.offset, re(0.0));
        assert_eq!(enc.coeffs, vec![re(1.0)]);
    }

    #[test]
    fn four_evenly_spaced() {
        let enc = encode_binary_expansion(&VariableDomain::real_set(&[3.0, 1.0, 0.0, 2.0])).unwrap();
        assert_eq!(enc.offset, re(0.0));
        assert_eq!(enc.coeffs, vec![re(1.0), re(2.0)]);
        assert_eq!(enc.decode(&[true, true]).0, re(3.0));
    }

    #[test]
    fn spin_values() {
        let enc = encode_binary_expansion(&VariableDomain::real_set(&[1.0, -1.0])).unwrap();
        assert_eq!(enc.offset, re(-1.0));
        assert_eq!(enc.coeffs, vec![re(2.0)]);
    }

    #[test]
    fn rounding_in_loaded_sets_is_tolerated() {
        let enc = encode_binary_expansion(&VariableDomain::real_set(&[0.0, 0.1, 0.2, 0.30000000000000004])).unwrap();
        assert_eq!(enc.decode(&[true, true]).0, re(0.30000000000000004));
    }

    #[test]
    fn collinear_complex_line() {
        let vals = (0..4).map(|k| Complex::new(1.0, 0.0) + Complex::new(0.0, 0.5).scale(k as f64)).collect();
        let enc = encode_binary_expansion(&VariableDomain::discrete(vals)).unwrap();
        assert_eq!(enc.offset, Complex::new(1.0, 0.0));
        assert_eq!(enc.coeffs[1], Complex::new(0.0, 1.0));
    }

    #[test]
    fn binary_expansion_errors() {
        assert_eq!(
            encode_binary_expansion(&VariableDomain::real_set(&[0.0, 1.0, 2.0])),
            Err(Error::NotPowerOfTwo { size: 3 })
        );
        assert_eq!(
            encode_binary_expansion(&VariableDomain::real_set(&[0.0, 1.0, 2.0, 4.0])),
            Err(Error::NotEvenlySpaced)
        );
        let off_line = VariableDomain::discrete(vec![re(0.0), re(1.0), Complex::new(2.0, 0.1), re(3.0)]);
        assert_eq!(encode_binary_expansion(&off_line), Err(Error::NotEvenlySpaced));
    }

    #[test]
    fn one_hot_singleton_and_complex() {
        let enc = encode_one_hot(&VariableDomain::real_set(&[5.0])).unwrap();
        assert_eq!(enc.bits(), 1);
        assert_eq!(enc.decode(&[true]), (re(5.0), true));

        let dom = VariableDomain::discrete(vec![re(0.0), Complex::new(1.0, 1.0), re(-2.0)]);
        let enc = encode_one_hot(&dom).unwrap();
        assert_eq!(enc.bits(), 3);
        assert_eq!(enc.coeffs, vec![re(-2.0), re(0.0), Complex::new(1.0, 1.0)]);
        assert!(!enc.decode(&[true, true, false]).1);
        assert!(!enc.decode(&[false, false, false]).1);
    }

    #[test]
    fn one_hot_valid_state_count_by_enumeration() {
        for size in 1..=6usize {
            let vals: Vec<f64> = (0..size).map(|v| v as f64 * 1.5 - 2.0).collect();
            let enc = encode_one_hot(&VariableDomain::real_set(&vals)).unwrap();
            let valid = (0..1usize << size)
                .filter(|code| {
                    let bits: Vec<bool> = (0..size).map(|j| (code >> j) & 1 == 1).collect();
                    enc.decode(&bits).1
                })
                .count();
            assert_eq!(valid, size);
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let domains = [
            VariableDomain::real_set(&[-1.5, -0.5, 0.5, 1.5]),
            VariableDomain::real_set(&[2.0, 3.0, 7.0]),
            VariableDomain::discrete(vec![re(1.0), Complex::new(0.0, 1.0)]),
        ];
        for d in &domains {
            for policy in [EncodingPolicy::PreferBinaryExpansionElseOneHot, EncodingPolicy::ForceOneHot] {
                let enc = encode_domain(d, policy).unwrap();
                for &v in d.values().unwrap() {
                    let bits = enc.encode(v).unwrap();
                    assert_eq!(enc.decode(&bits), (v, true));
                }
            }
        }
    }

    #[test]
    fn constant_qudo_gives_constant_qubo() {
        let qudo =
            QudoProblem::new(CMatrix::zeros(1, 1), CVector::zeros(1), 7.0, vec![VariableDomain::binary()]).unwrap();
        let q = assemble_qubo(&qudo, EncodingPolicy::default()).unwrap();
        assert_eq!(q.m(), &DMatrix::zeros(1, 1));
        assert_eq!(q.k(), 7.0);
        assert!(q.penalty.is_none());
    }

    #[test]
    fn scalar_binary_qudo() {
        let (h, gamma, f) = (1.25f64, -3.0f64, 0.5f64);
        let qudo = QudoProblem::new(
            CMatrix::from_element(1, 1, re(h)),
            CVector::from_element(1, re(gamma)),
            f,
            vec![VariableDomain::binary()],
        )
        .unwrap();
        let q = assemble_qubo(&qudo, EncodingPolicy::default()).unwrap();
        assert_eq!(q.m()[(0, 0)], h + gamma);
        assert_eq!(q.k(), f);
        let best = q.value(&[false]).min(q.value(&[true]));
        assert_eq!(best, f.min(f + h + gamma));
    }

    #[test]
    fn value_of_small_qubo() {
        let q = QuboProblem::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]), 0.0).unwrap();
        assert_eq!(q.m()[(0, 1)], 1.0);
        assert_eq!(q.value(&[true, true]), 4.0);
        assert_eq!(q.value(&[false, false]), 0.0);
    }

    #[test]
    fn zero_bit_singleton_block() {
        let qudo = QudoProblem::new(
            CMatrix::from_element(1, 1, re(2.0)),
            CVector::from_element(1, re(1.0)),
            0.0,
            vec![VariableDomain::real_set(&[3.0])],
        )
        .unwrap();
        let q = assemble_qubo(&qudo, EncodingPolicy::default()).unwrap();
        assert_eq!(q.p(), 0);
        assert_eq!(q.k(), 2.0 * 9.0 + 3.0);
        assert_eq!(q.decode(&[]).unwrap().0[0], re(3.0));
    }
}
