//! Piatetski-Shapiro values `⌊(pn)^c⌋`, Beatty values `⌊αn + β⌋`, and the
//! count of places where a linear (Beatty) approximation of a smooth function
//! has a different integer part.
//!
//! Piatetski-Shapiro floors are certified under [`PrecisionPolicy::Verified`]:
//! the `f64` power is trusted only when it sits clearly away from an integer.
//! Otherwise the floor is recomputed exactly (when `c` is a dyadic rational
//! with a small denominator, as `⌊(x^a)^{1/2^e}⌋` by integer roots) or with
//! MPFR directed rounding on a shrinking interval. Beatty floors are plain
//! `f64`; every consumer of them is a statistic over many `n`, and a half-ulp
//! flip at an exact integer boundary is a measure-zero event there.

use rug::float::Round;
use rug::ops::{MulAssignRound, Pow};
use rug::{Float, Integer};

use crate::equidist::{self, PointSet};
use crate::error::{LabError, Result};

/// Values of `(pn)^c` must stay below this.
pub const PS_LIMIT: f64 = 9.223_372_036_854_776e18;
const BEATTY_LIMIT: f64 = 4.611_686_018_427_388e18;

/// Absolute width of the band around an integer that triggers recomputation.
pub const GUARD_BAND: f64 = 1e-6;
/// Relative width of the band: `f64` `powf` and `u64 -> f64` rounding are each
/// within a few ulps, `2^-46` leaves a wide margin.
const RELATIVE_GUARD: f64 = 1.0 / (1u64 << 46) as f64;
const START_BITS: u32 = 128;
const MAX_BITS: u32 = 1024;
/// Largest `e` for which `c = a / 2^e` takes the integer-root path.
const MAX_DYADIC_EXPONENT: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecisionPolicy {
    FastFloat,
    Verified,
}

/// Generator for `⌊(p·n)^c⌋` with `1 < c < 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsSpec {
    c: f64,
    multiplier: u64,
    policy: PrecisionPolicy,
    dyadic: Option<(u32, u32)>,
}

impl PsSpec {
    pub fn new(c: f64, multiplier: u64, policy: PrecisionPolicy) -> Result<Self> {
        if !(c > 1.0 && c < 2.0) {
            return Err(LabError::Config(format!("exponent c must satisfy 1 < c < 2, got {c}")));
        }
        if multiplier == 0 {
            return Err(LabError::Config("multiplier must be positive".into()));
        }
        Ok(Self {
            c,
            multiplier,
            policy,
            dyadic: dyadic_parts(c),
        })
    }

    pub fn verified(c: f64) -> Result<Self> {
        Self::new(c, 1, PrecisionPolicy::Verified)
    }

    pub fn with_multiplier(self, multiplier: u64) -> Result<Self> {
        Self::new(self.c, multiplier, self.policy)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn multiplier(&self) -> u64 {
        self.multiplier
    }

    pub fn policy(&self) -> PrecisionPolicy {
        self.policy
    }

    /// `⌊(p·n)^c⌋`.
    pub fn floor_at(&self, n: u64) -> Result<u64> {
        let x = self
            .multiplier
            .checked_mul(n)
            .ok_or_else(|| LabError::Range(format!("p*n overflows for p={}, n={n}", self.multiplier)))?;
        floor_power(x, self.c, self.policy, self.dyadic)
    }
}

/// Free-function form of [`PsSpec::floor_at`].
pub fn ps_floor(spec: &PsSpec, n: u64) -> Result<u64> {
    spec.floor_at(n)
}

/// `c = a / 2^e` in lowest terms when `e <= MAX_DYADIC_EXPONENT`.
fn dyadic_parts(c: f64) -> Option<(u32, u32)> {
    (0..=MAX_DYADIC_EXPONENT).find_map(|e| {
        let scaled = c * (1u64 << e) as f64;
        (scaled.fract() == 0.0).then_some((scaled as u32, e))
    })
}

fn floor_power(x: u64, c: f64, policy: PrecisionPolicy, dyadic: Option<(u32, u32)>) -> Result<u64> {
    if x <= 1 {
        return Ok(x);
    }
    let v = (x as f64).powf(c);
    if !(v < PS_LIMIT * (1.0 - 1e-9)) {
        return Err(LabError::Range(format!("{x}^{c} exceeds 2^63")));
    }
    if policy == PrecisionPolicy::FastFloat {
        return Ok(v.floor() as u64);
    }
    let guard = GUARD_BAND.max(v * RELATIVE_GUARD);
    if (v - v.round()).abs() > guard {
        return Ok(v.floor() as u64);
    }
    match dyadic {
        Some((3, 1)) => Ok(floor_pow_three_halves(x)),
        Some((a, e)) => Ok(floor_dyadic_power(x, a, e)),
        None => floor_power_interval(x, c),
    }
}

/// `⌊x^{3/2}⌋ = ⌊√(x³)⌋` in integer arithmetic.
pub fn floor_pow_three_halves(x: u64) -> u64 {
    let cube = Integer::from(x).pow(3);
    cube.sqrt().to_u64().expect("x^(3/2) < 2^63 was checked by the caller")
}

fn floor_dyadic_power(x: u64, a: u32, e: u32) -> u64 {
    Integer::from(x)
        .pow(a)
        .root(1 << e)
        .to_u64()
        .expect("x^c < 2^63 was checked by the caller")
}

/// Encloses `x^c = exp(c·ln x)` between downward- and upward-rounded MPFR
/// evaluations, doubling the precision until both ends share a floor.
fn floor_power_interval(x: u64, c: f64) -> Result<u64> {
    let mut bits = START_BITS;
    while bits <= MAX_BITS {
        let (lo, hi) = power_enclosure(x, c, bits);
        let (flo, fhi) = (lo.floor(), hi.floor());
        if flo == fhi {
            return flo
                .to_integer()
                .and_then(|i| i.to_u64())
                .ok_or_else(|| LabError::Range(format!("{x}^{c} does not fit in u64")));
        }
        bits *= 2;
    }
    Err(LabError::Precision(format!(
        "floor of {x}^{c} still ambiguous at {MAX_BITS} bits"
    )))
}

/// Rigorous enclosure `[lo, hi] ∋ x^c` at the given working precision.
pub fn power_enclosure(x: u64, c: f64, bits: u32) -> (Float, Float) {
    let mut lo = Float::with_val(bits, x);
    let mut hi = lo.clone();
    lo.ln_round(Round::Down);
    hi.ln_round(Round::Up);
    lo.mul_assign_round(c, Round::Down);
    hi.mul_assign_round(c, Round::Up);
    lo.exp_round(Round::Down);
    hi.exp_round(Round::Up);
    (lo, hi)
}

/// `⌊(p·n)^c⌋` for `n` in `range`, evaluated in parallel.
pub fn ps_floor_range(spec: &PsSpec, range: std::ops::Range<u64>) -> Result<Vec<u64>> {
    use rayon::prelude::*;
    range.into_par_iter().map(|n| spec.floor_at(n)).collect()
}

/// Generator for `⌊αn + β⌋`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeattySpec {
    pub alpha: f64,
    pub beta: f64,
}

impl BeattySpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta >= 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(LabError::Config(format!(
                "Beatty parameters need alpha > 0, beta >= 0; got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    #[inline]
    pub fn floor_at(&self, n: u64) -> Result<u64> {
        let v = self.alpha.mul_add(n as f64, self.beta);
        if v >= BEATTY_LIMIT {
            return Err(LabError::Range(format!("alpha*n+beta = {v} exceeds 2^62")));
        }
        Ok(v.floor() as u64)
    }
}

pub fn beatty_floor(spec: &BeattySpec, n: u64) -> Result<u64> {
    spec.floor_at(n)
}

/// A twice differentiable function whose integer parts are compared with a
/// linear approximation.
pub trait SmoothProfile {
    fn value(&self, x: f64) -> f64;
    fn floor_at(&self, n: u64) -> Result<i64>;
    fn derivative(&self, x: f64) -> f64;
    /// `sup |f''|` over `[a, b]`.
    fn curvature_bound(&self, a: f64, b: f64) -> Result<f64>;
}

/// `f(x) = (2^k·x)^c`.
#[derive(Clone, Copy, Debug)]
pub struct PowerProfile {
    spec: PsSpec,
    scale_exp: u32,
}

impl PowerProfile {
    pub fn new(c: f64, scale_exp: u32) -> Result<Self> {
        if scale_exp >= 40 {
            return Err(LabError::Config(format!("scale 2^{scale_exp} too large")));
        }
        Ok(Self {
            spec: PsSpec::new(c, 1 << scale_exp, PrecisionPolicy::Verified)?,
            scale_exp,
        })
    }

    fn scale(&self) -> f64 {
        (1u64 << self.scale_exp) as f64
    }
}

impl SmoothProfile for PowerProfile {
    fn value(&self, x: f64) -> f64 {
        (self.scale() * x).powf(self.spec.c())
    }

    fn floor_at(&self, n: u64) -> Result<i64> {
        Ok(self.spec.floor_at(n)? as i64)
    }

    fn derivative(&self, x: f64) -> f64 {
        let c = self.spec.c();
        c * self.scale() * (self.scale() * x).powf(c - 1.0)
    }

    fn curvature_bound(&self, a: f64, _b: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(LabError::Domain(
                "power profile needs a > 0 for a finite f'' bound".into(),
            ));
        }
        let c = self.spec.c();
        let s = self.scale();
        // c - 2 < 0, so |f''| decreases and peaks at the left end
        Ok(c * (c - 1.0) * s * s * (s * a).powf(c - 2.0))
    }
}

/// `f(x) = slope·x + intercept`; no curvature.
#[derive(Clone, Copy, Debug)]
pub struct LinearProfile {
    pub slope: f64,
    pub intercept: f64,
}

impl SmoothProfile for LinearProfile {
    fn value(&self, x: f64) -> f64 {
        self.slope.mul_add(x, self.intercept)
    }

    fn floor_at(&self, n: u64) -> Result<i64> {
        Ok(self.value(n as f64).floor() as i64)
    }

    fn derivative(&self, _x: f64) -> f64 {
        self.slope
    }

    fn curvature_bound(&self, _a: f64, _b: f64) -> Result<f64> {
        Ok(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MismatchCount {
    pub count: u64,
    pub bound: f64,
    pub curvature: f64,
    pub discrepancy: f64,
}

/// `#{n ∈ (a,b] : ⌊f(n)⌋ ≠ ⌊α(n−a) + f(a)⌋}` together with `2BK³ + K·D_K(αn)`.
pub fn linear_approx_mismatch_count<F: SmoothProfile>(
    profile: &F,
    a: u64,
    b: u64,
    alpha: f64,
) -> Result<MismatchCount> {
    if a >= b {
        return Err(LabError::Domain(format!("need a < b, got a={a}, b={b}")));
    }
    let (fa, fb) = (profile.derivative(a as f64), profile.derivative(b as f64));
    let (lo, hi) = if fa <= fb { (fa, fb) } else { (fb, fa) };
    if !(alpha >= lo && alpha <= hi) {
        return Err(LabError::Domain(format!(
            "alpha = {alpha} lies outside f'([a,b]) = [{lo}, {hi}]"
        )));
    }
    let k = b - a;
    let f_a = profile.value(a as f64);
    let mut count = 0;
    for n in a + 1..=b {
        let approx = alpha.mul_add((n - a) as f64, f_a).floor() as i64;
        if profile.floor_at(n)? != approx {
            count += 1;
        }
    }
    let curvature = profile.curvature_bound(a as f64, b as f64)?;
    let points = PointSet::from_sequence_1d((1..=k).map(|n| alpha * n as f64))?;
    let discrepancy = equidist::discrepancy_1d(&points)?.value;
    let kf = k as f64;
    Ok(MismatchCount {
        count,
        bound: 2.0 * curvature * kf * kf * kf + kf * discrepancy,
        curvature,
        discrepancy,
    })
}
