//! Classical QUBO solvers: exhaustive Gray-code enumeration and simulated
//! annealing.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits;
use crate::encoding::QuboProblem;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default largest `p` accepted by exhaustive enumeration.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 30;

/// Values closer than this are treated as tied when deciding uniqueness.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Global minimum found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveSolution<T: Real> {
    pub state: Vec<bool>,
    pub value: T,
    /// False iff another state attains the minimum within [`TIE_TOLERANCE`].
    pub is_unique: bool,
}

fn cmp_entry<T: Real>(a: &(T, u64), b: &(T, u64)) -> Ordering {
    a.0.as_f64().total_cmp(&b.0.as_f64()).then(a.1.cmp(&b.1))
}

/// The `count` smallest `(value, code)` pairs seen.
struct Bottom<T: Real> {
    count: usize,
    entries: Vec<(T, u64)>,
}

impl<T: Real> Bottom<T> {
    fn new(count: usize) -> Self {
        Self { count, entries: Vec::with_capacity(count + 1) }
    }

    #[inline]
    fn offer(&mut self, value: T, code: u64) {
        if self.count == 0 {
            return;
        }
        if self.entries.len() == self.count {
            let worst = self.entries.last().expect("nonempty");
            if cmp_entry(&(value, code), worst) != Ordering::Less {
                return;
            }
            self.entries.pop();
        }
        let entry = (value, code);
        let at = self.entries.partition_point(|e| cmp_entry(e, &entry) == Ordering::Less);
        self.entries.insert(at, entry);
    }

    fn merge(mut self, other: Self) -> Self {
        for (v, c) in other.entries {
            self.offer(v, c);
        }
        self
    }
}

/// Enumerates every state with the last `fixed` variables pinned to `prefix`
/// and the rest visited in Gray-code order.
fn enumerate_chunk<T: Real>(m: &[T], k: T, p: usize, fixed: usize, prefix: u64, count: usize) -> Bottom<T> {
    let mut s = vec![false; p];
    for (i, bit) in s.iter_mut().skip(p - fixed).enumerate() {
        *bit = (prefix >> i) & 1 == 1;
    }
    let mut energy = k;
    let mut field = vec![T::zero(); p];
    for i in 0..p {
        for j in 0..p {
            if s[j] && j != i {
                field[i] += m[i * p + j];
            }
        }
        if s[i] {
            energy += m[i * p + i] + field[i];
        }
    }
    let mut code = bits::code(&s);
    let mut bottom = Bottom::new(count);
    bottom.offer(energy, code);
    let free = p - fixed;
    let two = T::lit(2.0);
    for step in 1u64..(1u64 << free) {
        let gray_bit = step.trailing_zeros() as usize;
        let i = gray_bit;
        let delta_field = m[i * p + i] + two * field[i];
        let sign = if s[i] { -T::one() } else { T::one() };
        energy += sign * delta_field;
        s[i] = !s[i];
        code ^= 1u64 << gray_bit;
        let row = &m[i * p..(i + 1) * p];
        for (j, f) in field.iter_mut().enumerate() {
            if j != i {
                *f += sign * row[j];
            }
        }
        bottom.offer(energy, code);
    }
    bottom
}

/// The `count` lowest distinct states by `s^T M s + k`, ascending, ties broken
/// by ascending [`bits::code`].
pub fn bottom_states<T: Real>(qubo: &QuboProblem<T>, count: usize, cap: usize) -> Result<Vec<(Vec<bool>, T)>> {
    let p = qubo.p();
    if p > cap || p > 62 {
        return Err(Error::QubitCapExceeded { p, cap });
    }
    let m: Vec<T> = (0..p * p).map(|idx| qubo.m()[(idx / p, idx % p)]).collect();
    let fixed = if p > 16 { 6.min(p) } else { 0 };
    let bottom = (0..1u64 << fixed)
        .into_par_iter()
        .map(|prefix| enumerate_chunk(&m, qubo.k(), p, fixed, prefix, count))
        .reduce(|| Bottom::new(count), Bottom::merge);
    // Re-evaluate exactly; incremental updates accumulate rounding.
    let mut out: Vec<(T, u64)> =
        bottom.entries.into_iter().map(|(_, c)| (qubo.value(&bits::from_code(c, p)), c)).collect();
    out.sort_by(cmp_entry);
    Ok(out.into_iter().map(|(v, c)| (bits::from_code(c, p), v)).collect())
}

pub fn solve_exhaustive<T: Real>(qubo: &QuboProblem<T>) -> Result<ExhaustiveSolution<T>> {
    solve_exhaustive_capped(qubo, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn solve_exhaustive_capped<T: Real>(qubo: &QuboProblem<T>, cap: usize) -> Result<ExhaustiveSolution<T>> {
    let best = bottom_states(qubo, 2, cap)?;
    let (state, value) = best[0].clone();
    let is_unique = match best.get(1) {
        None => true,
        Some((_, second)) => (*second - value).as_f64().abs() > TIE_TOLERANCE,
    };
    Ok(ExhaustiveSolution { state, value, is_unique })
}

/// Simulated-annealing schedule.
///
/// Temperatures fall geometrically from `t_initial` to `t_final` over
/// `sweeps` sweeps. Each restart draws from ChaCha8 seeded with `seed` on
/// stream `restart`, so results are reproducible across platforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaSchedule {
    pub sweeps: usize,
    pub t_initial: f64,
    pub t_final: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl SaSchedule {
    pub fn new(sweeps: usize, t_initial: f64, t_final: f64, restarts: usize, seed: u64) -> Result<Self> {
        if sweeps == 0 || restarts == 0 {
            return Err(Error::InvalidParameter("sweeps and restarts must be at least 1".into()));
        }
        if !(t_final > 0.0 && t_initial >= t_final && t_initial.is_finite()) {
            return Err(Error::InvalidParameter("temperatures must satisfy t_initial >= t_final > 0".into()));
        }
        Ok(Self { sweeps, t_initial, t_final, restarts, seed })
    }

    /// Starts at the largest possible single-flip energy change and ends
    /// 1000 times colder.
    pub fn for_problem<T: Real>(qubo: &QuboProblem<T>, sweeps: usize, restarts: usize, seed: u64) -> Result<Self> {
        let p = qubo.p();
        let m = qubo.m();
        let max_delta = (0..p)
            .map(|i| {
                let off: f64 = (0..p).filter(|&j| j != i).map(|j| m[(i, j)].as_f64().abs()).sum();
                m[(i, i)].as_f64().abs() + 2.0 * off
            })
            .fold(0.0, f64::max);
        let t0 = if max_delta > 0.0 { max_delta } else { 1.0 };
        Self::new(sweeps, t0, t0 * 1e-3, restarts, seed)
    }

    fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.t_final;
        }
        let frac = sweep as f64 / (self.sweeps - 1) as f64;
        self.t_initial * (self.t_final / self.t_initial).powf(frac)
    }
}

fn anneal_once<T: Real>(qubo: &QuboProblem<T>, schedule: &SaSchedule, restart: usize) -> (f64, u64) {
    let p = qubo.p();
    let m = qubo.m();
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    rng.set_stream(restart as u64);
    let mut s: Vec<bool> = (0..p).map(|_| rng.random::<bool>()).collect();
    let mut field: Vec<f64> =
        (0..p).map(|i| (0..p).filter(|&j| j != i && s[j]).map(|j| m[(i, j)].as_f64()).sum()).collect();
    let mut energy = qubo.value(&s).as_f64();
    let mut best = (energy, bits::code(&s));
    for sweep in 0..schedule.sweeps {
        let temp = schedule.temperature(sweep);
        for i in 0..p {
            let sign = if s[i] { -1.0 } else { 1.0 };
            let delta = sign * (m[(i, i)].as_f64() + 2.0 * field[i]);
            if delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp() {
                s[i] = !s[i];
                energy += delta;
                for (j, f) in field.iter_mut().enumerate() {
                    if j != i {
                        *f += sign * m[(j, i)].as_f64();
                    }
                }
                let code = bits::code(&s);
                if energy < best.0 || (energy == best.0 && code < best.1) {
                    best = (energy, code);
                }
            }
        }
    }
    best
}

/// Single-bit-flip Metropolis annealing; returns the best state seen across
/// all restarts and its exact value.
pub fn solve_sa<T: Real>(qubo: &QuboProblem<T>, schedule: &SaSchedule) -> (Vec<bool>, T) {
    let p = qubo.p();
    if p == 0 {
        return (Vec::new(), qubo.k());
    }
    let candidates: Vec<(f64, u64)> =
        (0..schedule.restarts).into_par_iter().map(|r| anneal_once(qubo, schedule, r)).collect();
    let best = candidates
        .into_iter()
        .map(|(_, code)| {
            let s = bits::from_code(code, p);
            (qubo.value(&s), code)
        })
        .min_by(cmp_entry)
        .expect("at least one restart");
    (bits::from_code(best.1, p), best.0)
}
