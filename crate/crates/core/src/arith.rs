//! Möbius and prime sieves, and the dyadic prime windows `ℙ_k(N, θ)`.

use crate::error::{LabError, Result};

pub const MAX_SIEVE_LIMIT: u64 = 1_000_000_000;

/// Möbius values and primality up to `limit`, from a single linear sieve pass.
#[derive(Clone, Debug)]
pub struct SieveTable {
    limit: u64,
    mobius: Vec<i8>,
    composite: Vec<u64>,
    primes: Vec<u32>,
}

impl SieveTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// `μ(n)`; `n = 0` returns 0.
    #[inline]
    pub fn mobius(&self, n: u64) -> i8 {
        self.mobius[n as usize]
    }

    pub fn mobius_values(&self) -> &[i8] {
        &self.mobius
    }

    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && (self.composite[(n >> 6) as usize] >> (n & 63)) & 1 == 0
    }

    /// All primes `<= limit`, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// `M(n) = Σ_{k≤n} μ(k)`.
    pub fn mertens(&self, n: u64) -> i64 {
        self.mobius[1..=n as usize].iter().map(|&m| m as i64).sum()
    }
}

/// Euler's linear sieve: every composite is crossed out exactly once, by its
/// least prime factor.
pub fn sieve(limit: u64) -> Result<SieveTable> {
    if !(2..=MAX_SIEVE_LIMIT).contains(&limit) {
        return Err(LabError::Config(format!(
            "sieve limit must lie in [2, {MAX_SIEVE_LIMIT}], got {limit}"
        )));
    }
    let len = limit as usize + 1;
    let mut mobius = vec![0i8; len];
    let mut composite = vec![0u64; len / 64 + 1];
    let mut primes: Vec<u32> = Vec::new();
    mobius[1] = 1;
    // 0 and 1 are not prime
    composite[0] |= 0b11;

    for i in 2..len {
        if (composite[i >> 6] >> (i & 63)) & 1 == 0 {
            primes.push(i as u32);
            mobius[i] = -1;
        }
        for &p in &primes {
            let ip = i * p as usize;
            if ip >= len {
                break;
            }
            composite[ip >> 6] |= 1 << (ip & 63);
            if i % p as usize == 0 {
                mobius[ip] = 0;
                break;
            }
            mobius[ip] = -mobius[i];
        }
    }

    Ok(SieveTable {
        limit,
        mobius,
        composite,
        primes,
    })
}

/// Primes in `(2^k, 2^{k+1}] ∩ [1, N^θ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimeWindow {
    pub k: u32,
    pub theta: f64,
    pub cap: f64,
    pub primes: Vec<u64>,
}

impl PrimeWindow {
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

/// Upper bound `N^θ` used for window membership.
///
/// The power is evaluated in `f64` and stepped one ulp down, so a prime that
/// sits within rounding distance of `N^θ` is left out. Membership is then a
/// plain `p as f64 <= bound` comparison, which is deterministic across
/// platforms with IEEE doubles.
pub fn window_cap(cap_n: f64, theta: f64) -> f64 {
    let raw = cap_n.powf(theta);
    f64::from_bits(raw.to_bits().saturating_sub(1))
}

pub fn primes_in_window(table: &SieveTable, k: u32, theta: f64, cap_n: f64) -> Result<PrimeWindow> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(LabError::Config(format!("theta must lie in (0,1), got {theta}")));
    }
    if k >= 62 || (1u64 << (k + 1)) > table.limit() {
        return Err(LabError::Config(format!(
            "window (2^{k}, 2^{}] exceeds sieve limit {}",
            k + 1,
            table.limit()
        )));
    }
    let bound = window_cap(cap_n, theta);
    let lo = 1u64 << k;
    let hi = 1u64 << (k + 1);
    let primes = table
        .primes()
        .iter()
        .map(|&p| p as u64)
        .skip_while(|&p| p <= lo)
        .take_while(|&p| p <= hi)
        .filter(|&p| p as f64 <= bound)
        .collect();
    Ok(PrimeWindow {
        k,
        theta,
        cap: cap_n,
        primes,
    })
}

/// Dyadic exponents `k` with `N^{θ/2} <= 2^k <= N^θ`.
pub fn admissible_window_range(cap_n: f64, theta: f64) -> std::ops::RangeInclusive<u32> {
    let lo = (theta / 2.0 * cap_n.log2()).ceil().max(0.0) as u32;
    let hi = (theta * cap_n.log2()).floor().max(0.0) as u32;
    lo..=hi
}
