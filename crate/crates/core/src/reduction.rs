//! Ingredients of the reduction from the Thue–Morse sum to Gowers norms:
//! linear exponential sums, the digit-constrained shift sets `K_i(α)`, the
//! `S₀` sampler, and the exponent bookkeeping that shows the parameter
//! system is solvable.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use rug::ops::DivRounding;
use rug::{Integer, Rational};

use crate::digits::{digit_at, low_mask, thue_morse};
use crate::error::{LabError, Result};
use crate::rng::substream;

/// Distance from `x` to the nearest integer.
#[inline]
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// `|Σ_{n=1}^{N} e(xn)|` from the geometric-sum closed form.
fn dirichlet_abs(x: f64, n: u64) -> f64 {
    let r = x - x.round();
    if r == 0.0 {
        return n as f64;
    }
    let nr = n as f64 * r;
    // sin(πNr) with the argument reduced mod 1 first
    let num = (std::f64::consts::PI * (nr - 2.0 * (nr / 2.0).round())).sin();
    (num / (std::f64::consts::PI * r).sin()).abs()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearExpSum {
    pub magnitude: f64,
    /// `min(N, 1/‖x‖)`.
    pub weyl_cap: f64,
    /// `min(N, 1/(2‖x‖))`, the bound asserted against `magnitude`.
    pub sharp_cap: f64,
}

pub fn linear_expsum(alpha_t: f64, n: u64) -> Result<LinearExpSum> {
    if n == 0 {
        return Err(LabError::Domain("need N >= 1".into()));
    }
    if !alpha_t.is_finite() {
        return Err(LabError::Domain(format!("non-finite frequency {alpha_t}")));
    }
    let d = dist_to_int(alpha_t);
    let nf = n as f64;
    let (weyl_cap, sharp_cap) = if d == 0.0 {
        (nf, nf)
    } else {
        (nf.min(1.0 / d), nf.min(0.5 / d))
    };
    Ok(LinearExpSum {
        magnitude: dirichlet_abs(alpha_t, n),
        weyl_cap,
        sharp_cap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AvgExpSum {
    pub w_hat: f64,
    pub cap: f64,
    pub ratio: f64,
}

/// `∫_D^{2D} |Σ_{n≤N} e(αtn)| dα` against `max(D log N, 1/|t|)`.
///
/// The integrand is `|t|⁻¹`-periodic in `α`, so the integral is assembled
/// from whole periods of `u ↦ |Σ e(un)|` plus two partial ones; the midpoint
/// rule with `quad_points` panels per unit of `u` handles each piece.
pub fn avg_linear_expsum(d: f64, t: f64, n: u64, quad_points: u64) -> Result<AvgExpSum> {
    if !(d > 10.0) || n <= 10 {
        return Err(LabError::Domain(format!("need D, N > 10, got D={d}, N={n}")));
    }
    if !(d * t.abs() >= 1.0 / n as f64) {
        return Err(LabError::Domain(format!("need D|t| >= 1/N, got D={d}, t={t}")));
    }
    if quad_points == 0 {
        return Err(LabError::Domain("need at least one panel".into()));
    }
    let at = t.abs();
    // ∫_0^v |D_N(u)| du for v in [0,1]
    let partial = |v: f64| -> f64 {
        let panels = ((v * quad_points as f64).ceil() as u64).max(1);
        let h = v / panels as f64;
        (0..panels).map(|k| dirichlet_abs((k as f64 + 0.5) * h, n)).sum::<f64>() * h
    };
    let period = partial(1.0);
    let antiderivative = |u: f64| u.floor() * period + partial(u - u.floor());
    let w_hat = (antiderivative(2.0 * d * at) - antiderivative(d * at)) / at;
    let cap = (d * (n as f64).ln()).max(1.0 / at);
    Ok(AvgExpSum {
        w_hat,
        cap,
        ratio: w_hat / cap,
    })
}

/// Desk-scale parameters for the digit-constrained sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionParams {
    pub lambda: u32,
    pub mu: u32,
    pub sigma: u32,
    pub m: u32,
    pub l: u32,
    pub b: u64,
}

impl ReductionParams {
    /// Checks `ρ = λ − mμ ≥ 0` and `σ < μ` (unless both vanish).
    pub fn new(lambda: u32, mu: u32, sigma: u32, m: u32, l: u32, b: u64) -> Result<Self> {
        if m.checked_mul(mu).is_none_or(|x| x > lambda) {
            return Err(LabError::Domain(format!(
                "need m·mu <= lambda, got m={m}, mu={mu}, lambda={lambda}"
            )));
        }
        if sigma >= mu && !(sigma == 0 && mu == 0) {
            return Err(LabError::Domain(format!("need sigma < mu, got sigma={sigma}, mu={mu}")));
        }
        Ok(Self {
            lambda,
            mu,
            sigma,
            m,
            l,
            b,
        })
    }

    pub fn rho(&self) -> u32 {
        self.lambda - self.m * self.mu
    }

    /// `λ_i = λ − (i−1)μ`.
    pub fn lambda_i(&self, i: u32) -> Option<u32> {
        let drop = i.checked_sub(1)?.checked_mul(self.mu)?;
        self.lambda.checked_sub(drop)
    }
}

/// Largest `λ_i` accepted by [`digit_constrained_set`].
pub const MAX_SET_LAMBDA: u32 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetVariant {
    /// Both `⌊αk⌋` and `⌊γαk⌋` constrained.
    Both,
    /// Only `⌊γαk⌋` constrained.
    GammaOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DigitConstrainedSet {
    pub alpha: f64,
    pub gamma: f64,
    pub b: u64,
    pub i: u32,
    pub variant: SetVariant,
    /// Constrained bit positions (0-indexed) `lo..hi`.
    pub bits: (u32, u32),
    pub members: Vec<u64>,
    /// `B / 2^{2(μ+σ)}` or `B / 2^{μ+σ}`.
    pub expected: f64,
}

impl DigitConstrainedSet {
    pub fn ratio(&self) -> f64 {
        self.members.len() as f64 / self.expected
    }
}

/// `{k ≤ B : the digits of ⌊αk⌋ and ⌊γαk⌋ vanish at positions j ∈ (λ−iμ−σ, λ−(i−1)μ]}`.
///
/// Positions count from 1 at the units digit, so the window is bits
/// `λ_i−μ−σ ..= λ_i−1` of the 0-indexed expansion, which is the condition
/// `{αk/2^{λ_i}} < 2^{−(μ+σ)}`.
pub fn digit_constrained_set(
    alpha: f64,
    gamma: f64,
    params: &ReductionParams,
    i: u32,
    variant: SetVariant,
) -> Result<DigitConstrainedSet> {
    if i == 0 || i > params.m.max(1) {
        return Err(LabError::Domain(format!(
            "index i must lie in 1..={}, got {i}",
            params.m.max(1)
        )));
    }
    let lambda_i = params
        .lambda_i(i)
        .ok_or_else(|| LabError::Domain(format!("lambda_{i} is negative")))?;
    if lambda_i > MAX_SET_LAMBDA {
        return Err(LabError::Size(format!(
            "lambda_i must be <= {MAX_SET_LAMBDA}, got {lambda_i}"
        )));
    }
    let top = alpha.abs().max((gamma * alpha).abs()) * params.b as f64;
    if !(top < 2f64.powi(62)) || alpha < 0.0 || gamma < 0.0 {
        return Err(LabError::Range(format!(
            "need 0 <= alpha, gamma·alpha and alpha·B < 2^62, got {top:e}"
        )));
    }
    let lo = lambda_i.saturating_sub(params.mu + params.sigma);
    let window = low_mask(lambda_i) & !low_mask(lo);
    let members = (1..=params.b)
        .filter(|&k| {
            let g = (gamma * alpha * k as f64).floor() as u64 & window == 0;
            match variant {
                SetVariant::Both => g && (alpha * k as f64).floor() as u64 & window == 0,
                SetVariant::GammaOnly => g,
            }
        })
        .collect();
    let width = (lambda_i - lo) as i32;
    let expected = params.b as f64
        / match variant {
            SetVariant::Both => 2f64.powi(2 * width),
            SetVariant::GammaOnly => 2f64.powi(width),
        };
    Ok(DigitConstrainedSet {
        alpha,
        gamma,
        b: params.b,
        i,
        variant,
        bits: (lo, lambda_i),
        members,
        expected,
    })
}

/// Re-checks every member digit by digit.
pub fn verify_members(set: &DigitConstrainedSet) -> bool {
    set.members.iter().all(|&k| {
        let a = (set.alpha * k as f64).floor() as u64;
        let g = (set.gamma * set.alpha * k as f64).floor() as u64;
        (set.bits.0..set.bits.1)
            .all(|j| digit_at(g, j) == 0 && (set.variant == SetVariant::GammaOnly || digit_at(a, j) == 0))
    })
}

pub const MAX_S0_N: u64 = 1_000_000;
pub const MAX_S0_ALPHA_SAMPLES: u64 = 10_000;
pub const MAX_S0_BETA_GRID: u64 = 64;
/// Dyadic shifts `2^0 ..= 2^20` added to every β grid.
pub const S0_DYADIC_SHIFTS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct S0Sample {
    /// Lower bound for `∫_D^{2D} max_β |…| dα`: the β maximum runs over a grid.
    pub estimate: f64,
    pub ratio: f64,
}

/// Packed parities `t(⌊xn + β⌋)`, `n = 1..=N`.
fn parity_bits(x: f64, beta: f64, n: u64) -> Vec<u64> {
    let mut words = vec![0u64; n.div_ceil(64) as usize];
    for k in 1..=n {
        let v = x.mul_add(k as f64, beta).floor() as u64;
        let idx = (k - 1) as usize;
        words[idx >> 6] |= (thue_morse(v) as u64) << (idx & 63);
    }
    words
}

/// `β` grid: `beta_grid` uniform points in `[0, period)` and the powers `2^j`.
fn beta_points(period: f64, beta_grid: u64) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..beta_grid).map(|j| j as f64 * period / beta_grid as f64).collect();
    pts.extend((0..=S0_DYADIC_SHIFTS).map(|j| 2f64.powi(j as i32)));
    pts
}

/// Monte-Carlo value of `∫_D^{2D} max_{β₁,β₂} |Σ_{n≤N} (−1)^{s(⌊αn+β₁⌋)+s(⌊γαn+β₂⌋)}| dα`
/// with `α` uniform in `[D, 2D)` and the maximum over a finite β grid.
pub fn s0_sample(d: f64, n: u64, gamma: f64, alpha_samples: u64, beta_grid: u64, seed: u64) -> Result<S0Sample> {
    if n == 0 || n > MAX_S0_N {
        return Err(LabError::Domain(format!("need 1 <= N <= {MAX_S0_N}, got {n}")));
    }
    if alpha_samples == 0 || alpha_samples > MAX_S0_ALPHA_SAMPLES {
        return Err(LabError::Domain(format!(
            "need 1 <= alpha_samples <= {MAX_S0_ALPHA_SAMPLES}"
        )));
    }
    if beta_grid == 0 || beta_grid > MAX_S0_BETA_GRID {
        return Err(LabError::Domain(format!("need 1 <= beta_grid <= {MAX_S0_BETA_GRID}")));
    }
    if !(d > 0.0) || !(gamma > 0.0) {
        return Err(LabError::Domain("need D > 0 and gamma > 0".into()));
    }
    let top = 2.0 * d * gamma.max(1.0) * (n as f64 + 1.0) + 2f64.powi(S0_DYADIC_SHIFTS as i32 + 1);
    if !(top < 2f64.powi(62)) {
        return Err(LabError::Range(format!("arguments reach {top:e} >= 2^62")));
    }
    let maxima: Vec<f64> = (0..alpha_samples)
        .into_par_iter()
        .map(|s| {
            let alpha = d * (1.0 + substream(seed, s).gen::<f64>());
            let first: Vec<Vec<u64>> = beta_points(alpha, beta_grid)
                .into_iter()
                .map(|b| parity_bits(alpha, b, n))
                .collect();
            let second: Vec<Vec<u64>> = beta_points(gamma * alpha, beta_grid)
                .into_iter()
                .map(|b| parity_bits(gamma * alpha, b, n))
                .collect();
            let mut best = 0i64;
            for u in &first {
                for v in &second {
                    let odd: u32 = u.iter().zip(v).map(|(a, b)| (a ^ b).count_ones()).sum();
                    best = best.max((n as i64 - 2 * odd as i64).abs());
                }
            }
            best as f64
        })
        .collect();
    let mean = maxima.iter().sum::<f64>() / alpha_samples as f64;
    Ok(S0Sample {
        estimate: d * mean,
        ratio: mean / n as f64,
    })
}

/// Size of a parameter, as an exact integer or a power of two with rational
/// exponent.
#[derive(Clone, Debug, PartialEq)]
pub enum Magnitude {
    Exact(Integer),
    Pow2(Rational),
}

impl Magnitude {
    /// `log₂` of the value; exact integers must be powers of two or are
    /// bounded below by their bit length minus one.
    fn log2(&self) -> Rational {
        match self {
            Magnitude::Pow2(e) => e.clone(),
            Magnitude::Exact(v) => Rational::from(v.significant_bits().saturating_sub(1)),
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Magnitude::Exact(v) => write!(f, "{v}"),
            Magnitude::Pow2(e) => write!(f, "2^({e})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    /// Achieved slack; for `≪ N^{−κ}` style checks this is `κ`, otherwise
    /// the difference of `log₂` sides divided by `log₂ N`.
    pub slack: Rational,
}

/// Exponent-domain view of the parameter choice. Every size `X` is stored
/// as `log₂ X`; `log₂ N` and `D = N^d` enter symbolically.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityParams {
    pub log2_n: Rational,
    pub d: Rational,
    pub theta1: Rational,
    pub eta1: Rational,
    pub l: i64,
    pub mu: i64,
    pub rho: i64,
    pub sigma: i64,
    /// `⌊log₂ D N^{1/5}⌋`, before alignment.
    pub lambda0: Integer,
    /// `λ = ρ + mμ ≤ λ₀`.
    pub lambda: Integer,
    pub m: Integer,
    pub r0: Magnitude,
    pub h: Magnitude,
    pub b: Magnitude,
    pub h_i: Magnitude,
    pub l_small: Magnitude,
    pub l_large: Magnitude,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub params: FeasibilityParams,
    pub checks: Vec<Check>,
}

impl FeasibilityReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn floor_int(q: &Rational) -> Integer {
    q.clone().floor().numer().clone()
}

fn small(v: &Integer, what: &str) -> Result<i64> {
    v.to_i64()
        .ok_or_else(|| LabError::Range(format!("{what} = {v} does not fit in 64 bits")))
}

/// Builds the parameters from `log₂ N`, `d = log_N D`, `θ₁` and `η₁`, and
/// evaluates every constraint by comparing exact rational exponents.
///
/// `m = ⌊(λ₀ − ρ)/μ⌋` and `λ = ρ + mμ`, so `ρ = λ − mμ` holds exactly; the
/// alignment moves `λ` down by less than `μ`.
pub fn exponent_feasibility(
    log2_n: &Rational,
    d: &Rational,
    theta1: &Rational,
    eta1: &Rational,
) -> Result<FeasibilityReport> {
    if *log2_n <= 0 {
        return Err(LabError::Domain(format!("need log2 N > 0, got {log2_n}")));
    }
    if *theta1 < 0 || *eta1 < 0 {
        return Err(LabError::Domain("theta1 and eta1 must be nonnegative".into()));
    }
    let ln = log2_n.clone();
    let l: i64 = 10;
    let mu = small(&floor_int(&(theta1.clone() * &ln / 200u32)), "mu")?;
    let rho = mu.div_euclid(10);
    let sigma = small(&floor_int(&(eta1.clone() * rho / 10u32)), "sigma")?;
    let lambda0 = floor_int(&(ln.clone() * (d.clone() + Rational::from((1, 5)))));
    let (m, lambda) = if mu > 0 {
        let m = (lambda0.clone() - rho).div_floor(Integer::from(mu)).max(Integer::ZERO);
        let lambda = Integer::from(rho) + m.clone() * mu;
        (m, lambda)
    } else {
        (Integer::ZERO, lambda0.clone())
    };

    let pow = |e: Rational| Magnitude::Pow2(e);
    let r0 = pow(ln.clone() / 10u32);
    let h = pow(ln.clone() * theta1 * Rational::from((9, 10)));
    let b = pow(ln.clone() * Rational::from((4, 5)));
    let h_i = b.clone();
    let l_large = h.clone();
    let l_small = pow(Rational::from(5 * mu));

    let q = |x: i64| Rational::from(x);
    let lam = Rational::from(lambda.clone());
    let d_log = d.clone() * &ln;
    let big = q(10 * rho).max(q(10 * l * (mu + sigma)));
    let mut checks = Vec::new();
    let mut push = |name: &str, diff: Rational, strict: bool| {
        let holds = if strict { diff > 0 } else { diff >= 0 };
        checks.push(Check {
            name: name.to_string(),
            holds,
            slack: diff / &ln,
        });
    };

    // structural requirements
    push("mu > 0", q(mu), true);
    push("sigma >= 10", q(sigma - 10), false);
    push("sigma < mu", q(mu - sigma), true);
    push("rho > sigma", q(rho - sigma), true);
    push("m > l", Rational::from(m.clone() - l), true);
    push("d >= 10", d.clone() - 10u32, false);

    for (name, x) in [("R0", &r0), ("B", &b), ("H_i", &h_i)] {
        push(&format!("{name} << N^(1-kappa1)"), ln.clone() - x.log2(), true);
    }
    for (name, x) in [("R0", &r0), ("B", &b), ("H_i", &h_i), ("H", &h)] {
        push(
            &format!("{name} >> max(2^(10 rho), 2^(10 l (mu+sigma)))"),
            x.log2() - &big,
            false,
        );
    }
    push("eta1 rho >= 10 sigma", eta1.clone() * rho - 10 * sigma, false);
    push("mu >= 10 rho", q(mu - 10 * rho), false);
    push("2^sigma >> N^kappa2", q(sigma), true);
    push("2^mu >> N^kappa2", q(mu), true);
    push("R0 D << 2^lambda N^(-kappa3)", lam.clone() - r0.log2() - &d_log, true);
    push(
        "B D >> 2^(lambda+rho+2mu+sigma) N^(1/2+kappa4)",
        b.log2() + &d_log - &lam - q(rho + 2 * mu + sigma) - ln.clone() / 2u32,
        true,
    );
    push(
        "L_i >> max(2^(10 rho), 2^(10 l (mu+sigma))) for m-l < i <= m",
        l_large.log2() - &big,
        false,
    );
    push(
        "L_i << N^(1-kappa5) for m-l < i <= m",
        ln.clone() - l_large.log2(),
        true,
    );
    push(
        "L_i >> 2^(rho+4mu+4sigma) for i <= m-l",
        l_small.log2() - q(rho + 4 * mu + 4 * sigma),
        false,
    );
    push("L_i << 2^(l mu) for i <= m-l", q(l * mu) - l_small.log2(), false);
    push("H_i << N", ln.clone() - h_i.log2(), false);
    let cap = ln.clone() * theta1;
    push("H << N^theta1", cap.clone() - h.log2(), false);
    push("L_i << N^theta1 for m-l < i <= m", cap.clone() - l_large.log2(), false);
    push("L_i << N^theta1 for i <= m-l", cap - l_small.log2(), false);

    Ok(FeasibilityReport {
        params: FeasibilityParams {
            log2_n: ln,
            d: d.clone(),
            theta1: theta1.clone(),
            eta1: eta1.clone(),
            l,
            mu,
            rho,
            sigma,
            lambda0,
            lambda,
            m,
            r0,
            h,
            b,
            h_i,
            l_small,
            l_large,
        },
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Term-by-term sum with each phase `{xk}` reduced in 256-bit arithmetic.
    fn direct_sum(x: f64, n: u64) -> f64 {
        let s: Complex64 = (1..=n)
            .map(|k| {
                let prod = rug::Float::with_val(256, x) * k;
                let frac = (prod.clone() - prod.floor()).to_f64();
                let t = 2.0 * std::f64::consts::PI * frac;
                Complex64::new(t.cos(), t.sin())
            })
            .sum();
        s.norm()
    }

    #[test]
    fn linear_examples() {
        assert_eq!(linear_expsum(3.0, 17).unwrap().magnitude, 17.0);
        assert!(linear_expsum(0.5, 10).unwrap().magnitude < 1e-12);
        assert!(linear_expsum(1.0 / 3.0, 30).unwrap().magnitude < 1e-12);
        assert!(linear_expsum(0.1, 0).is_err());
    }

    #[test]
    fn linear_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = rng.gen_range(-50.0..50.0);
            let n = rng.gen_range(1..=10_000);
            let r = linear_expsum(x, n).unwrap();
            assert!((r.magnitude - direct_sum(x, n)).abs() < 1e-8, "x={x} n={n}");
            assert!(r.magnitude <= r.sharp_cap * (1.0 + 1e-12));
        }
    }

    #[test]
    fn average_examples() {
        let a = avg_linear_expsum(100.0, 0.37, 100, 4000).unwrap();
        let b = avg_linear_expsum(100.0, -0.37, 100, 4000).unwrap();
        assert_eq!(a.w_hat, b.w_hat);
        let fine = avg_linear_expsum(100.0, 0.37, 100, 8000).unwrap();
        assert!((fine.w_hat - a.w_hat).abs() < 0.05 * fine.w_hat);
        let huge = avg_linear_expsum(1e4, 123.4, 1000, 20_000).unwrap();
        assert!(huge.ratio < 2.0, "{huge:?}");
        assert!(avg_linear_expsum(5.0, 1.0, 100, 10).is_err());
        assert!(avg_linear_expsum(100.0, 1e-9, 100, 10).is_err());
    }

    #[test]
    fn average_matches_plain_midpoint() {
        let (d, t, n) = (20.0, 0.05, 50u64);
        let panels = 200_000;
        let h = d / panels as f64;
        let plain: f64 = (0..panels)
            .map(|k| dirichlet_abs((d + (k as f64 + 0.5) * h) * t, n))
            .sum::<f64>()
            * h;
        let r = avg_linear_expsum(d, t, n, 20_000).unwrap();
        assert!((r.w_hat - plain).abs() < 1e-3 * plain);
    }

    #[test]
    fn params_validation() {
        let p = ReductionParams::new(20, 4, 2, 3, 1, 100).unwrap();
        assert_eq!(p.rho(), 8);
        assert_eq!(p.lambda_i(1), Some(20));
        assert_eq!(p.lambda_i(3), Some(12));
        assert!(ReductionParams::new(10, 4, 2, 3, 1, 10).is_err());
        assert!(ReductionParams::new(20, 4, 4, 3, 1, 10).is_err());
    }

    #[test]
    fn set_examples() {
        let none = ReductionParams::new(12, 0, 0, 0, 0, 500).unwrap();
        let s = digit_constrained_set(3.7, 1.3, &none, 1, SetVariant::Both).unwrap();
        assert_eq!(s.members.len(), 500);

        let p = ReductionParams::new(16, 4, 2, 2, 1, 5000).unwrap();
        let alpha = 2f64.powi(16) * 3.0;
        let gamma = 1.2345;
        let both = digit_constrained_set(alpha, gamma, &p, 1, SetVariant::Both).unwrap();
        let only = digit_constrained_set(alpha, gamma, &p, 1, SetVariant::GammaOnly).unwrap();
        assert_eq!(both.members, only.members);
        assert!(verify_members(&both));

        let big = ReductionParams::new(60, 4, 2, 2, 1, 10).unwrap();
        assert!(matches!(
            digit_constrained_set(1.5, 1.0, &big, 1, SetVariant::Both),
            Err(LabError::Size(_))
        ));
    }

    #[test]
    fn set_size_concentrates() {
        let p = ReductionParams::new(14, 3, 1, 2, 1, 100_000).unwrap();
        let gamma = (13.0f64 / 11.0).powf(1.3);
        let d = 1000.0;
        let mut good = 0;
        for s in 0..100 {
            let alpha = d * (1.0 + substream(3, s).gen::<f64>());
            let set = digit_constrained_set(alpha, gamma, &p, 1, SetVariant::Both).unwrap();
            assert!(verify_members(&set));
            let r = set.ratio();
            if (0.25..=4.0).contains(&r) {
                good += 1;
            }
        }
        assert!(good >= 80, "{good}");
    }

    #[test]
    fn s0_examples() {
        let r = s0_sample(100.0, 1000, 1.0, 3, 4, 1).unwrap();
        // γ = 1 with equal shifts makes every term +1
        assert_eq!(r.ratio, 1.0);
        let a = s0_sample(100.0, 500, 1.27, 4, 8, 5).unwrap();
        let b = s0_sample(100.0, 500, 1.27, 4, 8, 5).unwrap();
        assert_eq!(a, b);
        assert!(s0_sample(100.0, 0, 1.2, 1, 1, 0).is_err());
        assert!(s0_sample(100.0, 10, 1.2, 1, 65, 0).is_err());
    }

    #[test]
    fn s0_bit_packing_matches_direct_sum() {
        let (alpha, gamma, b1, b2, n) = (123.456, 1.3, 7.25, 2.5, 777u64);
        let u = parity_bits(alpha, b1, n);
        let v = parity_bits(gamma * alpha, b2, n);
        let odd: u32 = u.iter().zip(&v).map(|(a, b)| (a ^ b).count_ones()).sum();
        let direct: i64 = (1..=n)
            .map(|k| {
                let x = alpha.mul_add(k as f64, b1).floor() as u64;
                let y = (gamma * alpha).mul_add(k as f64, b2).floor() as u64;
                if (x.count_ones() + y.count_ones()).is_multiple_of(2) {
                    1
                } else {
                    -1
                }
            })
            .sum();
        assert_eq!(n as i64 - 2 * odd as i64, direct);
    }

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn feasibility_feasible_regime() {
        let r = exponent_feasibility(&q("40000000"), &q("12"), &q("1/20"), &q("1/10")).unwrap();
        assert!(r.all_hold(), "{:?}", r.failures());
        let p = &r.params;
        assert_eq!((p.mu, p.rho, p.sigma), (10_000, 1000, 10));
        assert_eq!(p.lambda.clone() - (p.m.clone() * p.mu), p.rho);
        assert!(p.lambda <= p.lambda0 && p.lambda0.clone() - &p.lambda < p.mu);
    }

    #[test]
    fn feasibility_small_n_fails_by_name() {
        let r = exponent_feasibility(&q("4000"), &q("12"), &q("1/20"), &q("1/10")).unwrap();
        assert_eq!((r.params.mu, r.params.rho, r.params.sigma), (1, 0, 0));
        let f = r.failures();
        assert!(
            f.contains(&"sigma >= 10") && f.contains(&"2^sigma >> N^kappa2"),
            "{f:?}"
        );
    }

    #[test]
    fn feasibility_theta_zero() {
        let r = exponent_feasibility(&q("40000000"), &q("12"), &q("0"), &q("1/10")).unwrap();
        assert_eq!(r.params.mu, 0);
        let f = r.failures();
        assert!(f.contains(&"mu > 0") && f.contains(&"2^mu >> N^kappa2"), "{f:?}");
    }

    #[test]
    fn feasibility_mu_rho_monotone() {
        let mut prev = true;
        for k in 1..=40 {
            let theta = Rational::from((k, 400));
            let r = exponent_feasibility(&q("40000000"), &q("12"), &theta, &q("1/10")).unwrap();
            let now = r.checks.iter().find(|c| c.name == "mu >= 10 rho").unwrap().holds;
            assert!(now || !prev);
            prev = now;
        }
    }
}
