//! Headline statistics: the Möbius–Thue–Morse sum along `⌊n^c⌋`, the bilinear
//! prime-pair harness, pattern frequencies of pairs `(⌊(pn)^c⌋, ⌊(qn)^c⌋)`,
//! the block-averaged Beatty bound, and factor statistics.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;

use crate::arith::{admissible_window_range, primes_in_window, sieve, PrimeWindow};
use crate::digits::thue_morse;
use crate::diophantine::RealSource;
use crate::error::{LabError, Result};
use crate::rng::substream;
use crate::sequences::PsSpec;

/// Work unit for parallel index-range sums.
const CHUNK: u64 = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub c: f64,
    pub n: u64,
    pub theta: f64,
    pub theta1: f64,
    /// Block length for the Beatty bound.
    pub k: u64,
    /// Pattern length.
    pub h: u32,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            c: 1.5,
            n: 1_000_000,
            theta: 0.35,
            theta1: 0.05,
            k: 1000,
            h: 4,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 1.0 && self.c < 2.0) {
            return Err(LabError::Config(format!("c must lie in (1,2), got {}", self.c)));
        }
        if self.n < 2 {
            return Err(LabError::Config(format!("N must be >= 2, got {}", self.n)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(LabError::Config(format!("theta must lie in (0,1), got {}", self.theta)));
        }
        if self.k == 0 || self.h == 0 {
            return Err(LabError::Config("K and H must be positive".into()));
        }
        Ok(())
    }
}

/// Exact value or a measured real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
}

impl Value {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Int(v) => v as f64,
            Value::Real(v) => v,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            // shortest round-trip form
            Value::Real(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub name: String,
    pub params: Vec<(String, serde_json::Value)>,
    pub value: Value,
    pub normalized: f64,
    pub runtime_ms: u64,
}

impl ResultRecord {
    pub fn new(name: impl Into<String>, value: Value, normalized: f64) -> Self {
        Self {
            name: name.into(),
            params: Vec::new(),
            value,
            normalized,
            runtime_ms: 0,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.push((key.to_string(), value.into()));
        self
    }

    /// Parameters as a JSON object in insertion order.
    pub fn param_json(&self) -> String {
        let body: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{}:{}", serde_json::Value::String(k.clone()), v))
            .collect();
        format!("{{{}}}", body.join(","))
    }
}

fn ps_parity(spec: &PsSpec, n: u64) -> Result<u8> {
    Ok(thue_morse(spec.floor_at(n)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub n: u64,
    pub sum_pm: i64,
    pub sum_01: i64,
    pub mertens: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orthogonality {
    pub sum_pm: i64,
    pub sum_01: i64,
    pub mertens: i64,
    /// Partial sums at `jN/10`, `j = 1..=10` (fewer when `N < 10`).
    pub checkpoints: Vec<Checkpoint>,
    /// Partial sum at `N/100`, when that is positive.
    pub early: Option<Checkpoint>,
}

fn decile_marks(n: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (1..=10).map(|j| n * j / 10).filter(|&x| x > 0).collect();
    v.dedup();
    v
}

/// `Σ_{n≤N} μ(n)(−1)^{t(⌊n^c⌋)}` and `Σ_{n≤N} μ(n)t(⌊n^c⌋)` with partial sums.
///
/// The identity `sum_pm = M(N) − 2·sum_01` is checked at every checkpoint.
pub fn mobius_orthogonality(c: f64, n: u64) -> Result<Orthogonality> {
    if n == 0 {
        return Err(LabError::Config("N must be >= 1".into()));
    }
    let spec = PsSpec::verified(c)?;
    let table = sieve(n.max(2))?;
    let deciles = decile_marks(n);
    let mut marks = deciles.clone();
    if n / 100 > 0 {
        marks.push(n / 100);
    }
    marks.sort_unstable();
    marks.dedup();
    let mut checkpoints = Vec::with_capacity(marks.len());
    let (mut pm, mut zo, mut m) = (0i64, 0i64, 0i64);
    let mut start = 1u64;
    for &end in &marks {
        let chunks: Vec<(u64, u64)> = (start..=end)
            .step_by(CHUNK as usize)
            .map(|a| (a, (a + CHUNK - 1).min(end)))
            .collect();
        let parts = chunks
            .into_par_iter()
            .map(|(a, b)| {
                let (mut pm, mut zo, mut m) = (0i64, 0i64, 0i64);
                for k in a..=b {
                    let mu = table.mobius(k) as i64;
                    if mu == 0 {
                        continue;
                    }
                    let t = ps_parity(&spec, k)? as i64;
                    pm += mu * (1 - 2 * t);
                    zo += mu * t;
                    m += mu;
                }
                Ok((pm, zo, m))
            })
            .collect::<Result<Vec<_>>>()?;
        for (a, b, c) in parts {
            pm += a;
            zo += b;
            m += c;
        }
        if pm != m - 2 * zo {
            return Err(LabError::Internal(format!("sum identity broken at N = {end}")));
        }
        checkpoints.push(Checkpoint {
            n: end,
            sum_pm: pm,
            sum_01: zo,
            mertens: m,
        });
        start = end + 1;
    }
    let early = checkpoints.iter().find(|cp| cp.n == n / 100).copied();
    checkpoints.retain(|cp| deciles.contains(&cp.n));
    Ok(Orthogonality {
        sum_pm: pm,
        sum_01: zo,
        mertens: m,
        checkpoints,
        early,
    })
}

/// Packed parities `t(⌊(pn)^c⌋)` for `n = 1..=len`.
fn ps_parity_bits(c: f64, p: u64, len: u64) -> Result<Vec<u64>> {
    let spec = PsSpec::verified(c)?.with_multiplier(p)?;
    let words: Vec<u64> = (0..len.div_ceil(64))
        .into_par_iter()
        .map(|w| {
            let mut word = 0u64;
            for bit in 0..64 {
                let n = w * 64 + bit + 1;
                if n > len {
                    break;
                }
                word |= (ps_parity(&spec, n)? as u64) << bit;
            }
            Ok(word)
        })
        .collect::<Result<_>>()?;
    Ok(words)
}

/// `Σ_{n≤len} (−1)^{a_n + b_n}` for packed parity streams.
fn signed_agreement(a: &[u64], b: &[u64], len: u64) -> i64 {
    let full = (len / 64) as usize;
    let mut odd: u64 = a[..full]
        .iter()
        .zip(&b[..full])
        .map(|(x, y)| (x ^ y).count_ones() as u64)
        .sum();
    let rem = len % 64;
    if rem > 0 {
        odd += ((a[full] ^ b[full]) & ((1u64 << rem) - 1)).count_ones() as u64;
    }
    len as i64 - 2 * odd as i64
}

#[derive(Clone, Debug, PartialEq)]
pub struct DdkbszRow {
    pub k: u32,
    pub primes: Vec<u64>,
    /// `Σ_{p≠q} |Σ_{n≤min(N/p,N/q)} (−1)^{t(⌊(pn)^c⌋)+t(⌊(qn)^c⌋)}|` over ordered pairs.
    pub aggregate: f64,
    /// `N·|ℙ_k|²/2^k`.
    pub budget: f64,
    /// Largest `|correlation| / min(N/p, N/q)` over off-diagonal pairs.
    pub worst_trivial_ratio: f64,
    /// `Σ_p ⌊N/p⌋`, the diagonal contribution kept out of `aggregate`.
    pub diagonal: u64,
}

impl DdkbszRow {
    pub fn ratio(&self) -> f64 {
        self.aggregate / self.budget
    }
}

/// Bilinear sums over every admissible dyadic prime window.
pub fn ddkbsz_harness(cfg: &ExperimentConfig) -> Result<Vec<DdkbszRow>> {
    cfg.validate()?;
    let ks = admissible_window_range(cfg.n as f64, cfg.theta);
    if ks.is_empty() {
        return Err(LabError::Data(format!(
            "no k with N^(theta/2) <= 2^k <= N^theta for N = {}, theta = {}",
            cfg.n, cfg.theta
        )));
    }
    let top = 1u64 << (ks.end() + 1);
    let table = sieve(top.max(2))?;
    let mut rows = Vec::new();
    for k in ks.clone() {
        let window: PrimeWindow = primes_in_window(&table, k, cfg.theta, cfg.n as f64)?;
        let streams: Vec<Vec<u64>> = window
            .primes
            .iter()
            .map(|&p| ps_parity_bits(cfg.c, p, cfg.n / p))
            .collect::<Result<_>>()?;
        let len = window.primes.len();
        let pairs: Vec<(usize, usize)> = (0..len)
            .flat_map(|i| (0..len).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        let (aggregate, worst) = pairs
            .par_iter()
            .map(|&(i, j)| {
                let m = cfg.n / window.primes[i].max(window.primes[j]);
                let corr = signed_agreement(&streams[i], &streams[j], m).unsigned_abs() as f64;
                (corr, if m == 0 { 0.0 } else { corr / m as f64 })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0f64), |acc, (c, r)| (acc.0 + c, acc.1.max(r)));
        let diagonal = window.primes.iter().map(|&p| cfg.n / p).sum();
        rows.push(DdkbszRow {
            k,
            budget: cfg.n as f64 * (len * len) as f64 / 2f64.powi(k as i32),
            primes: window.primes,
            aggregate,
            worst_trivial_ratio: worst,
            diagonal,
        });
    }
    if rows.iter().all(|r| r.primes.len() < 2) {
        return Err(LabError::Data(format!(
            "every window for k in {}..={} has fewer than two primes",
            ks.start(),
            ks.end()
        )));
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternFrequencies {
    /// `counts[2·α₁ + α₂]` over `n ∈ (N, 2N]`.
    pub counts: [u64; 4],
    pub n: u64,
    pub diagonal: bool,
}

impl PatternFrequencies {
    /// `|N⁻¹·count(α₁, α₂) − 1/4|`.
    pub fn deviation(&self, a1: u8, a2: u8) -> f64 {
        (self.counts[(2 * a1 + a2) as usize] as f64 / self.n as f64 - 0.25).abs()
    }

    pub fn max_deviation(&self) -> f64 {
        (0..4).map(|i| self.deviation(i / 2, i % 2)).fold(0.0, f64::max)
    }
}

/// Joint parities of `⌊(pn)^c⌋` and `⌊(qn)^c⌋` for `n ∈ (N, 2N]`; `p = q` is
/// allowed and flagged as the diagonal mode.
pub fn pattern_frequencies(p: u64, q: u64, c: f64, n: u64) -> Result<PatternFrequencies> {
    if n == 0 {
        return Err(LabError::Config("N must be >= 1".into()));
    }
    let sp = PsSpec::verified(c)?.with_multiplier(p)?;
    let sq = PsSpec::verified(c)?.with_multiplier(q)?;
    let chunks: Vec<(u64, u64)> = (n + 1..=2 * n)
        .step_by(CHUNK as usize)
        .map(|a| (a, (a + CHUNK - 1).min(2 * n)))
        .collect();
    let parts = chunks
        .into_par_iter()
        .map(|(a, b)| {
            let mut counts = [0u64; 4];
            for m in a..=b {
                let x = ps_parity(&sp, m)?;
                let y = if p == q { x } else { ps_parity(&sq, m)? };
                counts[(2 * x + y) as usize] += 1;
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = [0u64; 4];
    for part in parts {
        for i in 0..4 {
            counts[i] += part[i];
        }
    }
    debug_assert_eq!(counts.iter().sum::<u64>(), n);
    Ok(PatternFrequencies {
        counts,
        n,
        diagonal: p == q,
    })
}

/// Block Beatty deviation `|K⁻¹·#{0 ≤ n < K : t(⌊αn+β₁⌋) = t(⌊γαn+β₂⌋) = 1} − 1/4|`.
fn block_deviation(alpha: f64, gamma: f64, b1: f64, b2: f64, k: u64) -> f64 {
    let hits = (0..k)
        .filter(|&n| {
            thue_morse(alpha.mul_add(n as f64, b1).floor() as u64) == 1
                && thue_morse((gamma * alpha).mul_add(n as f64, b2).floor() as u64) == 1
        })
        .count();
    (hits as f64 / k as f64 - 0.25).abs()
}

pub const J_BETA_GRID: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop2Terms {
    pub lhs: f64,
    pub term1: f64,
    pub term2: f64,
    pub j_hat: f64,
    pub j_stderr: f64,
    pub gamma: f64,
    /// `N` is not a multiple of `K`.
    pub truncated_block: bool,
}

impl Prop2Terms {
    pub fn rhs(&self) -> f64 {
        self.term1 + self.term2 + self.j_hat
    }
}

/// Both sides of the pattern-(1,1) bound for a prime pair from window `k`.
///
/// `J` is estimated by `alpha_draws` uniform draws of `α` from
/// `[c·2^{kc}N^{c−1}, c·2^{kc}(2N)^{c−1}]`, each maximized over a 16×16 grid
/// `β_i = j·W/16` with `W = 2^{⌈log₂(αK)⌉}`. The grid maximum is a lower
/// bound for the true maximum over `β ≥ 0`.
pub fn prop2_rhs(p: u64, q: u64, cfg: &ExperimentConfig, k: u32, alpha_draws: u64) -> Result<Prop2Terms> {
    cfg.validate()?;
    if p == q {
        return Err(LabError::Domain("prop2 needs distinct primes".into()));
    }
    if alpha_draws == 0 {
        return Err(LabError::Domain("need at least one alpha draw".into()));
    }
    let c = cfg.c;
    let nf = cfg.n as f64;
    let lhs = pattern_frequencies(p, q, c, cfg.n)?.deviation(1, 1);
    let scale = 2f64.powf(k as f64 * c);
    let term1 = scale * nf.powf(c - 2.0) * (cfg.k as f64).powi(2);
    let term2 = nf.ln().powi(2) / cfg.k as f64;
    let gamma = RealSource::ratio_power(q, p, c)?.approx(256).to_f64();
    let (a_lo, a_hi) = (c * scale * nf.powf(c - 1.0), c * scale * (2.0 * nf).powf(c - 1.0));
    if !((a_hi * gamma.max(1.0) * cfg.k as f64) * 2.0 < 2f64.powi(62)) {
        return Err(LabError::Range("alpha·K exceeds 2^61".into()));
    }
    let maxima: Vec<f64> = (0..alpha_draws)
        .into_par_iter()
        .map(|i| {
            let alpha = a_lo + (a_hi - a_lo) * substream(cfg.seed, i).gen::<f64>();
            let w = 2f64.powi((alpha * cfg.k as f64).log2().ceil() as i32);
            let grid: Vec<f64> = (0..J_BETA_GRID).map(|j| j as f64 * w / J_BETA_GRID as f64).collect();
            let mut best: f64 = 0.0;
            for &b1 in &grid {
                for &b2 in &grid {
                    best = best.max(block_deviation(alpha, gamma, b1, b2, cfg.k));
                }
            }
            best
        })
        .collect();
    let draws = alpha_draws as f64;
    let mean = maxima.iter().sum::<f64>() / draws;
    let var = if alpha_draws > 1 {
        maxima.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (draws - 1.0)
    } else {
        0.0
    };
    // the normalized integral is (interval length / 2^{kc}N^{c-1}) times the mean
    let factor = c * (2f64.powf(c - 1.0) - 1.0);
    Ok(Prop2Terms {
        lhs,
        term1,
        term2,
        j_hat: factor * mean,
        j_stderr: factor * (var / draws).sqrt(),
        gamma,
        truncated_block: !cfg.n.is_multiple_of(cfg.k),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WordSource {
    ThueMorse,
    /// `t(⌊n^c⌋)`, `n ≥ 1`.
    PiatetskiShapiro(f64),
}

fn source_terms(source: WordSource, length: u64) -> Result<Vec<u8>> {
    match source {
        WordSource::ThueMorse => Ok((0..length).map(thue_morse).collect()),
        WordSource::PiatetskiShapiro(c) => {
            let spec = PsSpec::verified(c)?;
            (1..=length).into_par_iter().map(|n| ps_parity(&spec, n)).collect()
        }
    }
}

/// Distinct length-`H` factors among the first `length` terms, `H = 1..=H_max`.
pub fn subword_complexity(source: WordSource, h_max: u32, length: u64) -> Result<Vec<(u32, usize)>> {
    if h_max == 0 || h_max > 64 {
        return Err(LabError::Domain(format!("need 1 <= H_max <= 64, got {h_max}")));
    }
    let terms = source_terms(source, length)?;
    Ok((1..=h_max)
        .map(|h| {
            let mask = if h == 64 { u64::MAX } else { (1u64 << h) - 1 };
            let mut seen = HashSet::new();
            let mut window = 0u64;
            for (i, &t) in terms.iter().enumerate() {
                window = ((window << 1) | t as u64) & mask;
                if i + 1 >= h as usize {
                    seen.insert(window);
                }
            }
            (h, seen.len())
        })
        .collect())
}

pub const MAX_NORMALITY_H: u32 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct NormalityTable {
    pub h: u32,
    pub windows: u64,
    /// `counts[w]` for the pattern whose first letter is the top bit of `w`.
    pub counts: Vec<u64>,
}

impl NormalityTable {
    pub fn frequency(&self, pattern: usize) -> f64 {
        self.counts[pattern] as f64 / self.windows as f64
    }

    pub fn max_deviation(&self) -> f64 {
        let target = 1.0 / self.counts.len() as f64;
        (0..self.counts.len())
            .map(|w| (self.frequency(w) - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Counts of `(t(⌊n^c⌋), …, t(⌊(n+H−1)^c⌋))` for `n = 1..=N`.
pub fn normality_stats(c: f64, h: u32, n: u64) -> Result<NormalityTable> {
    if h > MAX_NORMALITY_H {
        return Err(LabError::Domain(format!("need H <= {MAX_NORMALITY_H}, got {h}")));
    }
    if n == 0 {
        return Err(LabError::Domain("need N >= 1".into()));
    }
    let spec = PsSpec::verified(c)?;
    let mask = (1usize << h) - 1;
    let chunks: Vec<(u64, u64)> = (1..=n)
        .step_by(CHUNK as usize)
        .map(|a| (a, (a + CHUNK - 1).min(n)))
        .collect();
    let parts = chunks
        .into_par_iter()
        .map(|(a, b)| {
            let mut counts = vec![0u64; 1 << h];
            let mut window = 0usize;
            // prime the register with the first H−1 letters of the first window
            for m in a..a + h.saturating_sub(1) as u64 {
                window = ((window << 1) | ps_parity(&spec, m)? as usize) & mask;
            }
            for m in a..=b {
                if h > 0 {
                    let last = m + h as u64 - 1;
                    window = ((window << 1) | ps_parity(&spec, last)? as usize) & mask;
                }
                counts[window] += 1;
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; 1 << h];
    for part in parts {
        for (acc, v) in counts.iter_mut().zip(part) {
            *acc += v;
        }
    }
    Ok(NormalityTable { h, windows: n, counts })
}
