//! Van der Corput inequalities and the carry-propagation count, evaluated as
//! checkable `lhs ≤ rhs` pairs.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::digits::{sum_of_digits, truncated_digit_sum};
use crate::error::{LabError, Result};

/// Finite complex sequence `z_n`, `n ∈ I = [start, start + len)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSeq {
    start: i64,
    values: Vec<Complex64>,
}

impl ComplexSeq {
    pub fn new(start: i64, values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::Domain("sequence must be nonempty".into()));
        }
        Ok(Self { start, values })
    }

    pub fn from_real(start: i64, values: &[f64]) -> Result<Self> {
        Self::new(start, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn total(&self) -> f64 {
        self.values.iter().sum::<Complex64>().norm_sqr()
    }

    /// `Σ_{n, n+d ∈ I} z_{n+d}·conj(z_n)`.
    fn correlation(&self, d: i64) -> Complex64 {
        let len = self.values.len() as i64;
        if d.abs() >= len {
            return Complex64::new(0.0, 0.0);
        }
        let (lo, hi) = if d >= 0 { (0, len - d) } else { (-d, len) };
        (lo..hi)
            .map(|n| self.values[(n + d) as usize] * self.values[n as usize].conj())
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    /// `lhs ≤ rhs` up to a relative floating tolerance.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs + rel_tol * self.rhs.abs().max(self.lhs.abs()).max(1.0)
    }
}

fn check_real(sum: Complex64, scale: f64) -> Result<f64> {
    if sum.im.abs() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(LabError::Internal(format!(
            "correlation sum has imaginary residue {:e} against {scale:e}",
            sum.im
        )));
    }
    Ok(sum.re)
}

/// `|Σ z_n|² ≤ ((N+R−1)/R)·Σ_{|r|<R} (1−|r|/R)·Σ_{n,n+r∈I} z_{n+r}·conj(z_n)`.
///
/// The `r` and `−r` correlations are conjugate, so each pair is added as
/// `2·Re`; the remaining imaginary part is pure rounding and is checked.
pub fn vdc_weighted(z: &ComplexSeq, r: u64) -> Result<Inequality> {
    if r == 0 {
        return Err(LabError::Domain("R must be positive".into()));
    }
    let n = z.len() as f64;
    let rr = r as f64;
    let mut sum = z.correlation(0);
    let mut scale = sum.norm();
    for d in 1..r.min(z.len() as u64) as i64 {
        let w = 1.0 - d as f64 / rr;
        let pair = z.correlation(d) + z.correlation(-d);
        scale += 2.0 * w * z.correlation(d).norm();
        sum += pair * w;
    }
    let inner = check_real(sum, scale)?;
    Ok(Inequality {
        lhs: z.total(),
        rhs: (n + rr - 1.0) / rr * inner,
    })
}

/// `|Σ z_n|² ≤ ((N + max K − min K)/|K|²)·Σ_{k₁,k₂∈K} Σ_{n,n+k₁−k₂∈I} z_n·conj(z_{n+k₁−k₂})`.
pub fn vdc_set(z: &ComplexSeq, k: &[i64]) -> Result<Inequality> {
    let mut ks = k.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(LabError::Domain("K must be nonempty".into()));
    }
    let mut mult: BTreeMap<i64, u64> = BTreeMap::new();
    for &a in &ks {
        for &b in &ks {
            *mult.entry(a - b).or_default() += 1;
        }
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (&d, &m) in &mult {
        // Σ_n z_n·conj(z_{n+d}) = conj of correlation(d)
        let c = z.correlation(d).conj() * m as f64;
        scale += c.norm();
        sum += c;
    }
    let inner = check_real(sum, scale)?;
    let span = (ks[ks.len() - 1] - ks[0]) as f64;
    let kk = ks.len() as f64;
    Ok(Inequality {
        lhs: z.total(),
        rhs: (z.len() as f64 + span) / (kk * kk) * inner,
    })
}

/// Largest value of `α(N+r)+β` accepted by [`carry_exception_count`].
pub const CARRY_LIMIT: f64 = 4_611_686_018_427_387_904.0; // 2^62

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarryCount {
    pub count: u64,
    pub bound: f64,
}

/// `#{1 ≤ n ≤ N : s(⌊αn+αr+β⌋) − s(⌊αn+β⌋) ≠ s_λ(⌊αn+αr+β⌋) − s_λ(⌊αn+β⌋)}`
/// against `r(αN/2^λ + 2)`.
pub fn carry_exception_count(alpha: f64, beta: f64, r: u64, lambda: u32, n: u64) -> Result<CarryCount> {
    if !(alpha > 0.0) || !(beta >= 0.0) {
        return Err(LabError::Domain(format!(
            "need alpha > 0 and beta >= 0, got {alpha}, {beta}"
        )));
    }
    let top = alpha * n as f64 + alpha * r as f64 + beta;
    if !(top < CARRY_LIMIT) {
        return Err(LabError::Range(format!("alpha(N+r)+beta = {top:e} reaches 2^62")));
    }
    let shift = alpha * r as f64;
    let count = (1..=n)
        .filter(|&m| {
            let base = alpha * m as f64;
            let a = (base + shift + beta).floor() as u64;
            let b = (base + beta).floor() as u64;
            let full = sum_of_digits(a) as i64 - sum_of_digits(b) as i64;
            let low = truncated_digit_sum(a, lambda) as i64 - truncated_digit_sum(b, lambda) as i64;
            full != low
        })
        .count() as u64;
    let bound = r as f64 * (alpha * n as f64 / 2f64.powi(lambda as i32) + 2.0);
    Ok(CarryCount { count, bound })
}
