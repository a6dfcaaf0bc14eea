//! Binary digit functions.
//!
//! Everything here works on `u64` words: `s(n)` is a population count and the
//! truncated sum `s_λ(n)` is a population count of the low `λ` bits.
//!
//! [`PeriodicDigitModel`] is the one place where reals enter. It evaluates the
//! 1-periodic staircase `g_ρ(x) = s_ρ(⌊2^ρ·{x}⌋)` and reduces `x` modulo one in
//! double precision. Callers that need exact values on integers should use
//! [`truncated_digit_sum`] directly; the model is meant for Monte-Carlo and
//! quadrature style consumers where a rounding at a cell boundary is harmless.

use crate::error::{LabError, Result};

/// Largest `ρ` for which a [`PeriodicDigitModel`] table is built.
pub const MAX_MODEL_RHO: u32 = 24;

/// `s(n)`: number of ones in the binary expansion of `n`.
#[inline]
pub fn sum_of_digits(n: u64) -> u32 {
    n.count_ones()
}

/// `t(n) = s(n) mod 2`.
#[inline]
pub fn thue_morse(n: u64) -> u8 {
    (n.count_ones() & 1) as u8
}

/// `(-1)^{t(n)}`.
#[inline]
pub fn thue_morse_sign(n: u64) -> i8 {
    1 - 2 * thue_morse(n) as i8
}

/// Low-`lambda`-bit mask; saturates to all ones for `lambda >= 64`.
#[inline]
pub fn low_mask(lambda: u32) -> u64 {
    if lambda >= 64 {
        u64::MAX
    } else {
        (1u64 << lambda) - 1
    }
}

/// `s_λ(n) = s(n mod 2^λ)`.
#[inline]
pub fn truncated_digit_sum(n: u64, lambda: u32) -> u32 {
    (n & low_mask(lambda)).count_ones()
}

/// `δ_j(n) = ⌊n / 2^j⌋ mod 2`, with `j = 0` the least significant digit.
#[inline]
pub fn digit_at(n: u64, j: u32) -> u8 {
    if j >= 64 {
        0
    } else {
        ((n >> j) & 1) as u8
    }
}

/// The `ρ`-truncated digit sum tabulated on the dyadic grid `k / 2^ρ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicDigitModel {
    rho: u32,
    table: Vec<u8>,
}

impl PeriodicDigitModel {
    pub fn new(rho: u32) -> Result<Self> {
        if rho > MAX_MODEL_RHO {
            return Err(LabError::Size(format!(
                "digit model needs rho <= {MAX_MODEL_RHO}, got {rho}"
            )));
        }
        let table = (0..1u64 << rho).map(|k| truncated_digit_sum(k, rho) as u8).collect();
        Ok(Self { rho, table })
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    /// Value of `s_ρ` at grid cell `k` (taken modulo `2^ρ`).
    #[inline]
    pub fn cell(&self, k: u64) -> u8 {
        self.table[(k & low_mask(self.rho)) as usize]
    }

    /// `g_ρ(x)` for any real `x`; the fractional part is `x - ⌊x⌋` in `f64`.
    #[inline]
    pub fn g_rho(&self, x: f64) -> u8 {
        let frac = x - x.floor();
        let cells = self.table.len();
        // frac can round up to 1.0 for tiny negative x
        let k = ((frac * cells as f64) as usize).min(cells - 1);
        self.table[k]
    }

    /// `(-1)^{g_ρ(x)}`.
    #[inline]
    pub fn sign(&self, x: f64) -> i8 {
        1 - 2 * (self.g_rho(x) & 1) as i8
    }
}

/// Free-function form of [`PeriodicDigitModel::g_rho`].
pub fn g_rho(x: f64, model: &PeriodicDigitModel) -> u8 {
    model.g_rho(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits_by_division(mut n: u64) -> u32 {
        let mut s = 0;
        while n > 0 {
            s += (n % 2) as u32;
            n /= 2;
        }
        s
    }

    #[test]
    fn digit_sum_examples() {
        assert_eq!(sum_of_digits(0), 0);
        assert_eq!(sum_of_digits(5), bits_by_division(5));
        assert_eq!(sum_of_digits(5), 2);
        assert_eq!(sum_of_digits(1 << 40), 1);
    }

    #[test]
    fn thue_morse_examples() {
        assert_eq!(thue_morse(1), 1);
        assert_eq!(thue_morse(2), 1);
        assert_eq!(thue_morse(3), 0);
        assert_eq!(thue_morse(4), 1);
        assert_eq!(thue_morse_sign(3), 1);
        assert_eq!(thue_morse_sign(4), -1);
    }

    #[test]
    fn truncated_examples() {
        assert_eq!(truncated_digit_sum(7, 2), 2);
        for n in [0, 1, 17, u64::MAX] {
            assert_eq!(truncated_digit_sum(n, 0), 0);
        }
        assert_eq!(truncated_digit_sum(5, 64), 2);
        assert_eq!(truncated_digit_sum(u64::MAX, 100), 64);
    }

    #[test]
    fn digit_at_examples() {
        assert_eq!(digit_at(5, 0), 1);
        assert_eq!(digit_at(5, 1), 0);
        assert_eq!(digit_at(5, 2), 1);
        for j in 0..70 {
            assert_eq!(digit_at(0, j), 0);
        }
    }

    #[test]
    fn model_table_invariants() {
        for rho in 0..=12 {
            let m = PeriodicDigitModel::new(rho).unwrap();
            assert_eq!(m.table().len(), 1 << rho);
            assert_eq!(m.table()[0], 0);
            for (k, &v) in m.table().iter().enumerate() {
                assert_eq!(v as u32, (k as u64).count_ones());
                assert!(v as u32 <= rho);
            }
        }
        assert!(matches!(
            PeriodicDigitModel::new(MAX_MODEL_RHO + 1),
            Err(LabError::Size(_))
        ));
    }

    #[test]
    fn g_rho_examples() {
        let m2 = PeriodicDigitModel::new(2).unwrap();
        assert_eq!(g_rho(0.75, &m2), 2);
        assert_eq!(g_rho(1.75, &m2), 2);
        assert_eq!(g_rho(-0.25, &m2), 2);
        let m0 = PeriodicDigitModel::new(0).unwrap();
        assert_eq!(g_rho(0.1, &m0), 0);
        // tiny negative input must not index past the table
        assert_eq!(g_rho(-1e-300, &m2), m2.table()[3]);
    }

    #[test]
    fn g_rho_matches_truncated_sum_on_integers() {
        let rho = 6;
        let m = PeriodicDigitModel::new(rho).unwrap();
        for t in 0..5000u64 {
            let x = t as f64 / (1u64 << rho) as f64;
            assert_eq!(m.g_rho(x) as u32, truncated_digit_sum(t, rho));
        }
    }

    proptest! {
        #[test]
        fn g_rho_is_periodic(x in -1e6f64..1e6, shift in -100i32..100, rho in 0u32..10) {
            let m = PeriodicDigitModel::new(rho).unwrap();
            // only compare away from cell boundaries, where f64 reduction is stable
            let cells = (1u64 << rho) as f64;
            let pos = (x - x.floor()) * cells;
            prop_assume!((pos - pos.round()).abs() > 1e-6);
            prop_assert_eq!(m.g_rho(x), m.g_rho(x + shift as f64));
        }

        #[test]
        fn g_rho_constant_on_cells(k in 0u64..1024, u in 0.0f64..0.999, rho in 0u32..=10) {
            let m = PeriodicDigitModel::new(rho).unwrap();
            let cells = (1u64 << rho) as f64;
            let k = k % (1u64 << rho);
            let x = (k as f64 + u) / cells;
            prop_assert_eq!(m.g_rho(x), m.cell(k));
        }

        #[test]
        fn split_digit_sum(a in 0u64..1024, b in 0u64..1024, lambda in 0u32..=10) {
            let b = b & low_mask(lambda);
            prop_assert_eq!(
                sum_of_digits((a << lambda) + b),
                sum_of_digits(a) + truncated_digit_sum(b, lambda)
            );
        }
    }
}
