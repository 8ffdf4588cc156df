//! Exact fixed-point accumulation of `f64` terms.
//!
//! Quadrature sums go through this so that the result depends only on the
//! multiset of terms, never on their order. A grid permutation (an integer
//! shift) therefore leaves every norm bit-for-bit unchanged, and ensemble
//! reductions do not depend on the worker count.

/// Bit position of the least significant mantissa bit of the smallest
/// subnormal is 0; the largest finite double needs 2046 + 53 bits.
const LIMBS: usize = 36;

#[derive(Clone, Debug)]
pub(crate) struct ExactSum {
    pos: [u64; LIMBS],
    neg: [u64; LIMBS],
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub(crate) fn new() -> Self {
        Self {
            pos: [0; LIMBS],
            neg: [0; LIMBS],
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        debug_assert!(x.is_finite());
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as usize;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, shift) = if biased == 0 {
            (frac, 0)
        } else {
            (frac | (1u64 << 52), biased - 1)
        };
        if mantissa == 0 {
            return;
        }
        let limbs = if bits >> 63 == 0 {
            &mut self.pos
        } else {
            &mut self.neg
        };
        add_shifted(limbs, mantissa, shift);
    }

    /// The accumulated sum, rounded to a nearby double.
    pub(crate) fn value(&self) -> f64 {
        if self.pos.iter().rev().ge(self.neg.iter().rev()) {
            to_f64(&difference(&self.pos, &self.neg))
        } else {
            -to_f64(&difference(&self.neg, &self.pos))
        }
    }
}

#[inline]
fn add_shifted(limbs: &mut [u64; LIMBS], mantissa: u64, shift: usize) {
    let idx = shift / 64;
    let wide = (mantissa as u128) << (shift % 64);
    let (lo, c0) = limbs[idx].overflowing_add(wide as u64);
    limbs[idx] = lo;
    let (hi, c1) = limbs[idx + 1].overflowing_add((wide >> 64) as u64);
    let (hi, c2) = hi.overflowing_add(c0 as u64);
    limbs[idx + 1] = hi;
    let mut carry = c1 || c2;
    let mut k = idx + 2;
    while carry {
        let (v, c) = limbs[k].overflowing_add(1);
        limbs[k] = v;
        carry = c;
        k += 1;
    }
}

/// `a − b` for `a ≥ b`.
fn difference(a: &[u64; LIMBS], b: &[u64; LIMBS]) -> [u64; LIMBS] {
    let mut out = [0; LIMBS];
    let mut borrow = false;
    for k in 0..LIMBS {
        let (d, b1) = a[k].overflowing_sub(b[k]);
        let (d, b2) = d.overflowing_sub(borrow as u64);
        out[k] = d;
        borrow = b1 || b2;
    }
    out
}

fn to_f64(limbs: &[u64; LIMBS]) -> f64 {
    let Some(top) = limbs.iter().rposition(|&l| l != 0) else {
        return 0.0;
    };
    if top == 0 {
        return scale(limbs[0] as f64, -1074);
    }
    // Keep the leading 64 bits and fold everything below into a sticky bit, so
    // the final integer-to-float conversion rounds once.
    let lead = 63 - limbs[top].leading_zeros();
    let pair = ((limbs[top] as u128) << 64) | limbs[top - 1] as u128;
    let drop = lead + 1;
    let window = (pair >> drop) as u64;
    let sticky = (pair & ((1u128 << drop) - 1)) != 0 || limbs[..top - 1].iter().any(|&l| l != 0);
    let exp = 64 * (top as i32 - 1) + drop as i32 - 1074;
    scale((window | sticky as u64) as f64, exp)
}

fn scale(mut x: f64, mut exp: i32) -> f64 {
    while exp > 1000 {
        x *= 2f64.powi(1000);
        exp -= 1000;
    }
    while exp < -1000 {
        x *= 2f64.powi(-1000);
        exp += 1000;
    }
    x * 2f64.powi(exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exact(terms: &[f64]) -> f64 {
        let mut s = ExactSum::new();
        for &t in terms {
            s.add(t);
        }
        s.value()
    }

    #[test]
    fn small_cases() {
        assert_eq!(exact(&[]), 0.0);
        assert_eq!(exact(&[1.5]), 1.5);
        assert_eq!(exact(&[1.0, 1e-30, -1.0]), 1e-30);
        assert_eq!(exact(&[1e300, 1e300, -1e300]), 1e300);
        assert_eq!(exact(&[f64::MIN_POSITIVE / 4.0; 4]), f64::MIN_POSITIVE);
        assert_eq!(exact(&[0.1; 10]), 1.0);
    }

    #[test]
    fn carry_propagates() {
        let mut s = ExactSum::new();
        for _ in 0..1000 {
            s.add(f64::MAX / 2.0);
        }
        assert!((s.value() / (500.0 * f64::MAX) - 1.0).abs() < 1e-15 || s.value().is_infinite());
        let mut s = ExactSum::new();
        for _ in 0..(1 << 12) {
            s.add(0.999_999_999_999_999_9);
        }
        assert!((s.value() - 4096.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn order_independent(mut terms in prop::collection::vec(-1e6f64..1e6, 0..200), seed in any::<u64>()) {
            let a = exact(&terms);
            let n = terms.len();
            if n > 1 {
                let rot = (seed as usize) % n;
                terms.rotate_left(rot);
                terms.reverse();
            }
            prop_assert_eq!(a.to_bits(), exact(&terms).to_bits());
            let naive: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
            prop_assert!((a - naive).abs() <= 1e-12 * scale);
        }
    }
}
