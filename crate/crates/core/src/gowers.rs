//! Gowers uniformity norms of `f_ρ(n) = (−1)^{s_ρ(n)}` on `ℤ/2^ρ`.
//!
//! Values are reported as the `2^m`-th power of the norm. Discrete methods
//! keep an exact integer numerator over `2^{(m+1)ρ}`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::digits::{thue_morse_sign, PeriodicDigitModel};
use crate::error::{LabError, Result};
use crate::rng::substream;

/// Cost guard, in bits of work, shared by the discrete methods.
pub const MAX_WORK_BITS: u32 = 24;

/// Largest `m` accepted anywhere in this module.
pub const MAX_ORDER: u32 = 16;

/// Largest `m` for [`integral_gowers_mc`].
pub const MAX_MC_ORDER: u32 = 6;

/// Exhaustive autocorrelation fallback is used up to this `ρ`.
const MAX_DIRECT_RHO: u32 = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GowersMethod {
    Brute,
    FourierU2,
    Recursion,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GowersResult {
    pub m: u32,
    pub rho: u32,
    /// Exact numerator over `2^{(m+1)ρ}`, when the method is exact.
    pub numerator: Option<i128>,
    /// `‖f_ρ‖_{U^m}^{2^m}`.
    pub value: f64,
    pub method: GowersMethod,
}

impl GowersResult {
    fn exact(m: u32, rho: u32, numerator: i128, method: GowersMethod) -> Self {
        let value = numerator as f64 / 2f64.powi(((m + 1) * rho) as i32);
        Self {
            m,
            rho,
            numerator: Some(numerator),
            value,
            method,
        }
    }

    pub fn log2_denominator(&self) -> u32 {
        (self.m + 1) * self.rho
    }
}

fn check_order(m: u32) -> Result<()> {
    if !(2..=MAX_ORDER).contains(&m) {
        return Err(LabError::Domain(format!("need 2 <= m <= {MAX_ORDER}, got {m}")));
    }
    Ok(())
}

fn sign_table(rho: u32) -> Vec<i8> {
    (0..1u64 << rho).map(thue_morse_sign).collect()
}

/// Direct enumeration of `Σ_{n, r₁..r_m} Π_ε f(n + ⟨ε, r⟩)`.
pub fn gowers_brute(m: u32, rho: u32) -> Result<GowersResult> {
    check_order(m)?;
    if (m + 1) * rho > MAX_WORK_BITS {
        return Err(LabError::Size(format!(
            "brute force needs (m+1)·rho <= {MAX_WORK_BITS}, got {}",
            (m + 1) * rho
        )));
    }
    let size = 1usize << rho;
    let mask = size - 1;
    let f = sign_table(rho);
    let tuples = 1usize << (m * rho);
    let numerator: i128 = (0..tuples)
        .into_par_iter()
        .map(|t| {
            let r: Vec<usize> = (0..m as usize).map(|i| (t >> (i * rho as usize)) & mask).collect();
            let offsets: Vec<usize> = (0..1usize << m)
                .map(|eps| {
                    (0..m as usize)
                        .filter(|&i| eps >> i & 1 == 1)
                        .map(|i| r[i])
                        .sum::<usize>()
                        & mask
                })
                .collect();
            (0..size)
                .map(|n| {
                    let neg = offsets.iter().filter(|&&o| f[(n + o) & mask] < 0).count();
                    if neg % 2 == 0 {
                        1i64
                    } else {
                        -1
                    }
                })
                .sum::<i64>() as i128
        })
        .sum();
    Ok(GowersResult::exact(m, rho, numerator, GowersMethod::Brute))
}

/// Cyclic autocorrelation `A(r) = Σ_n g(n)·g(n+r)` of a ±1 table, exactly.
///
/// Uses the FFT and rounds; when any value is not within a quarter of an
/// integer the exhaustive sum is used instead.
fn autocorrelation(g: &[i8], planner: &mut FftPlanner<f64>) -> Result<Vec<i64>> {
    let size = g.len();
    let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v as f64, 0.0)).collect();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = size as f64;
    let mut out = Vec::with_capacity(size);
    for c in &buf {
        let v = c.re / scale;
        let r = v.round();
        if (v - r).abs() >= 0.25 {
            return direct_autocorrelation(g);
        }
        out.push(r as i64);
    }
    Ok(out)
}

fn direct_autocorrelation(g: &[i8]) -> Result<Vec<i64>> {
    let size = g.len();
    if size > 1 << MAX_DIRECT_RHO {
        return Err(LabError::Precision(format!(
            "FFT autocorrelation of length {size} did not round to integers"
        )));
    }
    Ok((0..size)
        .map(|r| (0..size).map(|n| (g[n] * g[(n + r) % size]) as i64).sum())
        .collect())
}

/// `U²` numerator `Σ_r A(r)²` for a ±1 table.
fn u2_numerator(g: &[i8], planner: &mut FftPlanner<f64>) -> Result<i128> {
    Ok(autocorrelation(g, planner)?
        .into_iter()
        .map(|a| (a as i128) * (a as i128))
        .sum())
}

/// `‖f_ρ‖_{U²}⁴` from `Σ_{n,r₁,r₂} f(n)f(n+r₁)f(n+r₂)f(n+r₁+r₂) = Σ_r A(r)²`,
/// with the autocorrelation `A` obtained from `|f̂|²`.
pub fn gowers_u2_fourier(rho: u32) -> Result<GowersResult> {
    if rho > MAX_WORK_BITS {
        return Err(LabError::Size(format!("need rho <= {MAX_WORK_BITS}, got {rho}")));
    }
    let mut planner = FftPlanner::new();
    let numerator = u2_numerator(&sign_table(rho), &mut planner)?;
    Ok(GowersResult::exact(2, rho, numerator, GowersMethod::FourierU2))
}

/// `‖f‖_{U^m}^{2^m} = E_r ‖Δ_r f‖_{U^{m−1}}^{2^{m−1}}` unrolled down to `U²`,
/// with `Δ_r f(n) = f(n+r)·f(n)`.
pub fn gowers_recursion(m: u32, rho: u32) -> Result<GowersResult> {
    check_order(m)?;
    if m == 2 {
        return gowers_u2_fourier(rho).map(|r| GowersResult {
            method: GowersMethod::Recursion,
            ..r
        });
    }
    if (m - 2) * rho > MAX_WORK_BITS || rho > MAX_WORK_BITS {
        return Err(LabError::Size(format!(
            "recursion needs (m-2)·rho <= {MAX_WORK_BITS}, got {}",
            (m - 2) * rho
        )));
    }
    let size = 1usize << rho;
    let mask = size - 1;
    let f = sign_table(rho);
    let depth = (m - 2) as usize;
    let numerator = (0..1usize << (depth * rho as usize))
        .into_par_iter()
        .map_init(FftPlanner::new, |planner, t| {
            let mut g = f.clone();
            for i in 0..depth {
                let r = (t >> (i * rho as usize)) & mask;
                g = (0..size).map(|n| g[(n + r) & mask] * g[n]).collect();
            }
            u2_numerator(&g, planner)
        })
        .collect::<Result<Vec<i128>>>()?
        .into_iter()
        .sum();
    Ok(GowersResult::exact(m, rho, numerator, GowersMethod::Recursion))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub eta_hat: f64,
    pub values: Vec<GowersResult>,
}

/// Least-squares slope of `log₂ value` against `ρ`; `eta_hat = −slope`.
pub fn decay_fit(m: u32, rho_min: u32, rho_max: u32) -> Result<DecayFit> {
    let values = (rho_min.max(1)..=rho_max)
        .map(|rho| gowers_recursion(m, rho))
        .collect::<Result<Vec<_>>>()?;
    if values.len() < 3 {
        return Err(LabError::Data(format!(
            "decay fit needs at least 3 values of rho >= 1, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| v.value <= 0.0) {
        return Err(LabError::Data("nonpositive Gowers value cannot be fitted".into()));
    }
    let k = values.len() as f64;
    let xs: Vec<f64> = values.iter().map(|v| v.rho as f64).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.value.log2()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(DecayFit {
        eta_hat: -sxy / sxx,
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

const MC_CHUNK: u64 = 4096;

/// Monte-Carlo estimate of `I_m(g_ρ) = ∫ Π_ε (−1)^{g_ρ(x + ⟨ε, y⟩)} dx dy`
/// over `(x, y₁..y_m)` uniform in `[0,1]^{m+1}`.
pub fn integral_gowers_mc(m: u32, rho: u32, samples: u64, seed: u64) -> Result<McEstimate> {
    if !(2..=MAX_MC_ORDER).contains(&m) {
        return Err(LabError::Domain(format!("need 2 <= m <= {MAX_MC_ORDER}, got {m}")));
    }
    if samples == 0 {
        return Err(LabError::Domain("need at least one sample".into()));
    }
    let model = PeriodicDigitModel::new(rho)?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let (sum, sum_sq): (i64, i64) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut y = vec![0.0f64; m as usize];
            let mut s = 0i64;
            for _ in 0..len {
                let x: f64 = rng.gen();
                for v in y.iter_mut() {
                    *v = rng.gen();
                }
                let mut parity = 0u8;
                for eps in 0..1u32 << m {
                    let shift: f64 = (0..m as usize).filter(|&i| eps >> i & 1 == 1).map(|i| y[i]).sum();
                    parity ^= model.g_rho(x + shift) & 1;
                }
                s += if parity == 0 { 1 } else { -1 };
            }
            // each term is ±1, so the sum of squares is the count
            (s, len as i64)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = sum as f64 / n;
    let var = if samples > 1 {
        (sum_sq as f64 - n * mean * mean) / (n - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: mean,
        stderr: (var.max(0.0) / n).sqrt(),
    })
}
