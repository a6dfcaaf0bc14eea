//! Continued fractions on certified enclosures, best rational approximation
//! of ratio powers `(q/p)^c`, and the bad-pair census.
//!
//! A real is handled as a [`RealSource`] that can produce a rational
//! enclosure `[lo, hi]` at any requested precision. Partial quotients are
//! emitted only while both ends agree, so every reported quotient is correct
//! for the true value; when they disagree the precision is doubled.

use num_complex::Complex64;
use rayon::prelude::*;
use rug::float::{Constant, Round};
use rug::ops::{DivAssignRound, Pow, SubAssignRound};
use rug::{Float, Integer, Rational};

use crate::arith::PrimeWindow;
use crate::error::{LabError, Result};
use crate::sequences::power_enclosure;

pub const START_BITS: u32 = 128;
pub const MAX_BITS: u32 = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum RealSource {
    Rational(Rational),
    /// `(1 + √5)/2`.
    Golden,
    Pi,
    /// `(q/p)^c`.
    RatioPower {
        q: u64,
        p: u64,
        c: f64,
    },
}

impl RealSource {
    /// The `f64` value, converted exactly.
    pub fn from_f64(x: f64) -> Result<Self> {
        Rational::from_f64(x)
            .map(RealSource::Rational)
            .ok_or_else(|| LabError::Domain(format!("non-finite value {x}")))
    }

    pub fn ratio_power(q: u64, p: u64, c: f64) -> Result<Self> {
        if q == 0 || p == 0 || !(c > 0.0) || !c.is_finite() {
            return Err(LabError::Domain(format!(
                "need q, p >= 1 and c > 0, got q={q}, p={p}, c={c}"
            )));
        }
        Ok(exact_ratio_power(q, p, c).map_or(RealSource::RatioPower { q, p, c }, RealSource::Rational))
    }

    /// Rational `[lo, hi]` containing the value.
    pub fn enclose(&self, bits: u32) -> (Rational, Rational) {
        let pair = |lo: Float, hi: Float| (lo.to_rational().unwrap(), hi.to_rational().unwrap());
        match self {
            RealSource::Rational(r) => (r.clone(), r.clone()),
            RealSource::Golden => {
                let mut lo = Float::with_val_round(bits, 5, Round::Down).0;
                let mut hi = lo.clone();
                lo.sqrt_round(Round::Down);
                hi.sqrt_round(Round::Up);
                // adding one and halving are exact
                pair((lo + 1u32) / 2u32, (hi + 1u32) / 2u32)
            }
            RealSource::Pi => pair(
                Float::with_val_round(bits, Constant::Pi, Round::Down).0,
                Float::with_val_round(bits, Constant::Pi, Round::Up).0,
            ),
            RealSource::RatioPower { q, p, c } => {
                let (qlo, qhi) = power_enclosure(*q, *c, bits);
                let (plo, phi) = power_enclosure(*p, *c, bits);
                let mut lo = qlo;
                lo.div_assign_round(&phi, Round::Down);
                let mut hi = qhi;
                hi.div_assign_round(&plo, Round::Up);
                pair(lo, hi)
            }
        }
    }

    /// Midpoint approximation at `bits`.
    pub fn approx(&self, bits: u32) -> Float {
        let (lo, hi) = self.enclose(bits);
        Float::with_val(bits, (lo + hi) / 2u32)
    }
}

/// `(q/p)^c` when it is rational, which an enclosure could never decide.
///
/// Write `c = a/2^e` with `a` odd and `q/p = q'/p'` in lowest terms. The
/// power is rational exactly when `q'` and `p'` are perfect `2^e`-th powers;
/// for `e ≥ 7` that forces `q' = p' = 1` within `u64`.
fn exact_ratio_power(q: u64, p: u64, c: f64) -> Option<Rational> {
    let g = Integer::from(q).gcd(&Integer::from(p));
    let (q, p) = (Integer::from(q) / &g, Integer::from(p) / &g);
    let c = Rational::from_f64(c)?;
    let (a, den) = c.into_numer_denom();
    let e = den.find_one(0)?;
    if den.significant_bits() != e + 1 || e > 6 || a > 64 {
        return (q == 1 && p == 1).then(|| Rational::from(1));
    }
    let a = a.to_u32()?;
    let root = |v: &Integer| {
        let r = v.clone().root(1 << e);
        (r.clone().pow(1 << e) == *v).then_some(r)
    };
    let (rq, rp) = (root(&q)?, root(&p)?);
    Some(Rational::from((rq.pow(a), rp.pow(a))))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CfExpansion {
    pub source: RealSource,
    pub quotients: Vec<Integer>,
    /// `(h, q)` for every convergent with `q ≤ q_max`.
    pub convergents: Vec<(Integer, Integer)>,
    /// The expansion ended exactly (rational input).
    pub terminated: bool,
    /// Precision at which the enclosure settled all quotients.
    pub bits: u32,
}

enum CfAttempt {
    Done(CfExpansion),
    Undecided,
}

fn expand(source: &RealSource, q_max: &Integer, bits: u32) -> CfAttempt {
    let (mut lo, mut hi) = source.enclose(bits);
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    // (h_{-1}, q_{-1}) = (1, 0), (h_{-2}, q_{-2}) = (0, 1)
    let (mut h1, mut k1) = (Integer::from(1), Integer::ZERO);
    let (mut h2, mut k2) = (Integer::ZERO, Integer::from(1));
    loop {
        let a = lo.clone().floor().numer().clone();
        let b = hi.clone().floor().numer().clone();
        if a != b {
            return CfAttempt::Undecided;
        }
        let h = a.clone() * &h1 + &h2;
        let k = a.clone() * &k1 + &k2;
        if k > *q_max {
            return CfAttempt::Done(CfExpansion {
                source: source.clone(),
                quotients,
                convergents,
                terminated: false,
                bits,
            });
        }
        quotients.push(a.clone());
        convergents.push((h.clone(), k.clone()));
        (h2, k2) = (h1, k1);
        (h1, k1) = (h, k);
        let flo = lo.clone() - &a;
        let fhi = hi.clone() - &a;
        if flo == 0 && fhi == 0 {
            return CfAttempt::Done(CfExpansion {
                source: source.clone(),
                quotients,
                convergents,
                terminated: true,
                bits,
            });
        }
        if flo == 0 {
            // the enclosure still straddles an integer boundary
            return CfAttempt::Undecided;
        }
        lo = fhi.recip();
        hi = flo.recip();
    }
}

/// Convergents of `x` with denominator at most `q_max`.
pub fn continued_fraction(source: &RealSource, q_max: u64) -> Result<CfExpansion> {
    if let RealSource::Rational(r) = source {
        if *r <= 0 {
            return Err(LabError::Domain(format!("need x > 0, got {r}")));
        }
    }
    if q_max == 0 {
        return Err(LabError::Domain("need q_max >= 1".into()));
    }
    let q_max = Integer::from(q_max);
    let mut bits = START_BITS;
    while bits <= MAX_BITS {
        if let CfAttempt::Done(cf) = expand(source, &q_max, bits) {
            return Ok(cf);
        }
        bits *= 2;
    }
    Err(LabError::Precision(format!(
        "continued fraction not settled at {MAX_BITS} bits for q_max = {q_max}"
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestApprox {
    pub h1: Integer,
    pub h2: Integer,
    pub err: f64,
}

fn abs_err(source: &RealSource, bits: u32, h: &Integer, q: &Integer) -> Float {
    let mut x = source.approx(bits * 2);
    x.sub_assign_round(Rational::from((h.clone(), q.clone())), Round::Nearest);
    x.abs()
}

/// `min |γ − h₁/h₂|` over `1 ≤ h₂ ≤ q_max`.
///
/// The minimizer is the last convergent `h_k/q_k` or the semiconvergent
/// `(h_{k−1} + t·h_k)/(q_{k−1} + t·q_k)` with the largest `t` that keeps the
/// denominator within `q_max`.
pub fn best_rational_error(gamma: &RealSource, q_max: u64) -> Result<BestApprox> {
    let cf = continued_fraction(gamma, q_max)?;
    let n = cf.convergents.len();
    let (hk, qk) = cf.convergents[n - 1].clone();
    if cf.terminated {
        return Ok(BestApprox {
            h1: hk,
            h2: qk,
            err: 0.0,
        });
    }
    let (hp, qp) = if n >= 2 {
        cf.convergents[n - 2].clone()
    } else {
        (Integer::from(1), Integer::ZERO)
    };
    let t = (Integer::from(q_max) - &qp) / &qk;
    let mut best = (abs_err(gamma, cf.bits, &hk, &qk), hk, qk.clone());
    if t > 0 {
        let hs = hp + t.clone() * &best.1;
        let qs = qp + t * &qk;
        let e = abs_err(gamma, cf.bits, &hs, &qs);
        if e < best.0 {
            best = (e, hs, qs);
        }
    }
    Ok(BestApprox {
        err: best.0.to_f64(),
        h1: best.1,
        h2: best.2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Census {
    pub total_pairs: u64,
    pub bad_pairs: u64,
    pub fraction: f64,
    /// Unordered pairs `{p, q}` bad in both orientations.
    pub unordered_pairs: u64,
    pub unordered_bad: u64,
}

/// Ordered pairs `(p, q)`, `p ≠ q`, from the window with
/// `min_{h₂ ≤ q_max} |(q/p)^c − h₁/h₂| < eps`.
pub fn bad_pair_census(window: &PrimeWindow, c: f64, eps: f64, q_max: u64) -> Result<Census> {
    if window.is_empty() {
        return Err(LabError::Domain("window has no primes".into()));
    }
    if !(eps > 0.0) {
        return Err(LabError::Domain(format!("need eps > 0, got {eps}")));
    }
    let primes = &window.primes;
    let len = primes.len();
    // bad[i][j] for the ordered pair (p, q) = (primes[i], primes[j])
    let rows: Vec<Vec<bool>> = (0..len)
        .into_par_iter()
        .map(|i| {
            (0..len)
                .map(|j| {
                    if i == j {
                        return Ok(false);
                    }
                    let g = RealSource::ratio_power(primes[j], primes[i], c)?;
                    Ok(best_rational_error(&g, q_max)?.err < eps)
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    let total_pairs = (len * (len - 1)) as u64;
    let bad_pairs = rows.iter().flatten().filter(|&&b| b).count() as u64;
    let unordered_bad = (0..len)
        .flat_map(|i| (i + 1..len).map(move |j| (i, j)))
        .filter(|&(i, j)| rows[i][j] && rows[j][i])
        .count() as u64;
    Ok(Census {
        total_pairs,
        bad_pairs,
        fraction: if total_pairs == 0 {
            0.0
        } else {
            bad_pairs as f64 / total_pairs as f64
        },
        unordered_pairs: total_pairs / 2,
        unordered_bad,
    })
}

/// Term guard for [`ratio_power_expsum`].
pub const MAX_EXPSUM_TERMS: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioExpSum {
    pub magnitude: f64,
    pub normalized: f64,
}

/// `|Σ_{m,n ∈ (2^k, 2^{k+1}]} e(h(n/m)^c)|` and its ratio to `2^{2k}`.
pub fn ratio_power_expsum(h: i64, k: u32, c: f64) -> Result<RatioExpSum> {
    if k >= 31 || 1u64 << (2 * (k + 1)) > MAX_EXPSUM_TERMS {
        return Err(LabError::Size(format!(
            "2^(2(k+1)) exceeds {MAX_EXPSUM_TERMS} for k = {k}"
        )));
    }
    let lo = (1u64 << k) + 1;
    let hi = 1u64 << (k + 1);
    let hf = h as f64;
    let rows: Vec<Complex64> = (lo..=hi)
        .into_par_iter()
        .map(|m| {
            (lo..=hi)
                .map(|n| {
                    let x = hf * (n as f64 / m as f64).powf(c);
                    let t = 2.0 * std::f64::consts::PI * (x - x.floor());
                    Complex64::new(t.cos(), t.sin())
                })
                .sum()
        })
        .collect();
    let magnitude = rows.into_iter().sum::<Complex64>().norm();
    Ok(RatioExpSum {
        magnitude,
        normalized: magnitude / 4f64.powi(k as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{primes_in_window, sieve};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ints(v: &[u64]) -> Vec<Integer> {
        v.iter().map(|&x| Integer::from(x)).collect()
    }

    fn check_convergents(cf: &CfExpansion) {
        let x = cf.source.approx(512);
        let mut prev = Integer::ZERO;
        for (i, (h, q)) in cf.convergents.iter().enumerate() {
            // q₀ = q₁ = 1 when a₁ = 1; strictly increasing afterwards
            assert!(*q > prev || i == 1 && *q == 1);
            prev = q.clone();
            assert_eq!(h.clone().gcd(q), 1);
            let err = (x.clone() - Rational::from((h.clone(), q.clone()))).abs();
            let bound = Float::with_val(512, 1) / Float::with_val(512, q.clone() * q);
            assert!(err < bound || (cf.terminated && i + 1 == cf.convergents.len()));
        }
    }

    #[test]
    fn cf_examples() {
        let half = continued_fraction(&RealSource::from_f64(0.5).unwrap(), 100).unwrap();
        assert_eq!(half.quotients, ints(&[0, 2]));
        assert!(half.terminated);
        let golden = continued_fraction(&RealSource::Golden, 1_000_000).unwrap();
        assert!(golden.quotients.iter().all(|a| *a == 1));
        assert!(golden.quotients.len() > 25);
        check_convergents(&golden);
        let pi = continued_fraction(&RealSource::Pi, 1000).unwrap();
        assert!(pi.convergents.contains(&(Integer::from(355), Integer::from(113))));
        assert_eq!(pi.quotients, ints(&[3, 7, 15, 1]));
        check_convergents(&pi);
        assert!(continued_fraction(&RealSource::from_f64(-1.0).unwrap(), 10).is_err());
    }

    #[test]
    fn cf_long_expansions_need_more_bits() {
        // denominators near 2^200 cannot be certified at 128 bits
        let cf = continued_fraction(&RealSource::Pi, u64::MAX).unwrap();
        check_convergents(&cf);
        let big = continued_fraction(&RealSource::ratio_power(13, 11, 1.5).unwrap(), u64::MAX).unwrap();
        check_convergents(&big);
    }

    #[test]
    fn best_examples() {
        let r = best_rational_error(&RealSource::Rational(Rational::from((22, 7))), 10).unwrap();
        assert_eq!((r.h1, r.h2, r.err), (Integer::from(22), Integer::from(7), 0.0));
        // 99/70 is the last convergent below 100, but the intermediate
        // fraction 140/99 is closer: 7.2148e-5 against 7.2152e-5
        let r = best_rational_error(&RealSource::from_f64(2f64.sqrt()).unwrap(), 100).unwrap();
        assert_eq!((r.h1.to_u64().unwrap(), r.h2.to_u64().unwrap()), (140, 99));
        assert!((r.err - (2f64.sqrt() - 140.0 / 99.0).abs()).abs() < 1e-15);
        assert!(r.err < (2f64.sqrt() - 99.0 / 70.0).abs());
        let r = best_rational_error(&RealSource::from_f64(2f64.sqrt()).unwrap(), 98).unwrap();
        assert_eq!((r.h1.to_u64().unwrap(), r.h2.to_u64().unwrap()), (99, 70));
    }

    #[test]
    fn best_is_a_true_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut sources = vec![RealSource::Golden, RealSource::Pi];
        for _ in 0..40 {
            sources.push(
                RealSource::ratio_power(rng.gen_range(2..200), rng.gen_range(2..200), rng.gen_range(1.05..2.0))
                    .unwrap(),
            );
            sources.push(RealSource::from_f64(rng.gen_range(0.01..20.0)).unwrap());
        }
        for src in &sources {
            let q_max = rng.gen_range(1..=10_000u64);
            let best = best_rational_error(src, q_max).unwrap();
            let x = src.approx(256);
            let mut scan = f64::INFINITY;
            for q in 1..=q_max {
                let h = Float::with_val(256, &x * q).round();
                let e = (x.clone() - Float::with_val(256, &h / q)).abs().to_f64();
                scan = scan.min(e);
            }
            assert!(
                (best.err - scan).abs() <= 1e-15 * scan.max(1e-300),
                "{src:?} q_max={q_max}: {} vs {scan}",
                best.err
            );
            assert!(best.h2 <= q_max);
            // Dirichlet: some h₂ ≤ q_max gives |γ − h₁/h₂| < 1/(h₂·q_max)
            assert!(best.err < 1.0 / q_max as f64);
        }
    }

    #[test]
    fn census_examples() {
        let t = sieve(1 << 8).unwrap();
        let w = primes_in_window(&t, 7, 0.9, 1e9).unwrap();
        let coarse = bad_pair_census(&w, 1.5, 1e-2, 20).unwrap();
        let fine = bad_pair_census(&w, 1.5, 1e-4, 20).unwrap();
        let tiny = bad_pair_census(&w, 1.5, 1e-12, 20).unwrap();
        assert_eq!(coarse.total_pairs, (w.len() * (w.len() - 1)) as u64);
        assert!(fine.bad_pairs <= coarse.bad_pairs);
        assert_eq!(tiny.bad_pairs, 0);
        assert!(2 * coarse.unordered_bad <= coarse.bad_pairs);
        let empty = primes_in_window(&t, 2, 0.5, 10.0).unwrap();
        assert!(bad_pair_census(&empty, 1.5, 1e-3, 20).is_err());
    }

    #[test]
    fn expsum_examples() {
        let z = ratio_power_expsum(0, 5, 1.5).unwrap();
        assert_eq!(z.magnitude, 1024.0);
        assert_eq!(z.normalized, 1.0);
        let a = ratio_power_expsum(3, 6, 1.5).unwrap();
        let b = ratio_power_expsum(-3, 6, 1.5).unwrap();
        assert!((a.magnitude - b.magnitude).abs() < 1e-9);
        let trend: Vec<f64> = [6, 8, 10]
            .iter()
            .map(|&k| ratio_power_expsum(1, k, 1.5).unwrap().normalized)
            .collect();
        assert!(trend[0] > trend[1] && trend[1] > trend[2], "{trend:?}");
        assert!(matches!(ratio_power_expsum(1, 14, 1.5), Err(LabError::Size(_))));
    }
}
