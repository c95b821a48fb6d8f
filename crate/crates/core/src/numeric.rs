//! Floating-point views of arbitrary-precision values.
//!
//! The exact computations in this crate produce `BigUint` / `BigRational`
//! quantities whose magnitudes routinely exceed the `f64` range (a squared
//! search radius can have thousands of bits).  These helpers extract
//! logarithms and approximate quotients without ever materializing an
//! out-of-range float, so reported values and enumeration pre-filters stay
//! finite and accurate to a few ulps of the 53-bit mantissa.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Natural logarithm of a positive big integer.
pub fn ln_biguint(n: &BigUint) -> f64 {
    assert!(!n.is_zero(), "ln of zero");
    let bits = n.bits();
    if bits <= 53 {
        return n.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 53;
    let hi = (n >> shift).to_f64().expect("53-bit value");
    hi.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Base-2 logarithm of a positive big integer.
pub fn lg2_biguint(n: &BigUint) -> f64 {
    ln_biguint(n) / std::f64::consts::LN_2
}

/// Base-2 logarithm of a positive rational.
pub fn lg2_rational(r: &BigRational) -> f64 {
    assert!(r.numer().sign() == Sign::Plus, "lg2 of non-positive rational");
    lg2_biguint(r.numer().magnitude()) - lg2_biguint(r.denom().magnitude())
}

/// `2^e` for an integer exponent, saturating to `0` / `inf` outside range.
pub fn exp2_i(e: i64) -> f64 {
    if e >= 1024 {
        f64::INFINITY
    } else if e < -1074 {
        0.0
    } else {
        f64::exp2(e as f64)
    }
}

/// Nearest-`f64` value of `n * 2^shift` for a big integer `n`.
pub fn biguint_to_f64_shifted(n: &BigUint, shift: i64) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let bits = n.bits() as i64;
    let take = bits.min(53);
    let hi = (n >> (bits - take) as u64).to_f64().expect("53-bit value");
    hi * exp2_i(bits - take + shift)
}

/// Nearest-`f64` value of `r * 2^shift` for a big rational `r`.
///
/// Computed as a quotient of 53-bit mantissas with an exact power-of-two
/// exponent adjustment, so the relative error stays at a few ulps even for
/// operands far outside the `f64` range.
pub fn rational_to_f64_shifted(r: &BigRational, shift: i64) -> f64 {
    let num = r.numer();
    if num.is_zero() {
        return 0.0;
    }
    let sign = if num.sign() == Sign::Minus { -1.0 } else { 1.0 };
    let n = num.magnitude();
    let d = r.denom().magnitude();
    let (nb, db) = (n.bits() as i64, d.bits() as i64);
    let ntake = nb.min(53);
    let dtake = db.min(53);
    let nh = (n >> (nb - ntake) as u64).to_f64().expect("53-bit value");
    let dh = (d >> (db - dtake) as u64).to_f64().expect("53-bit value");
    let e = (nb - ntake) - (db - dtake) + shift;
    sign * (nh / dh) * exp2_i(e)
}

/// Nearest-`f64` value of a big rational (saturating outside range).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    rational_to_f64_shifted(r, 0)
}

/// Largest integer `k >= 0` with `k^2 <= r`, for a non-negative rational.
pub fn rational_isqrt_floor(r: &BigRational) -> BigUint {
    assert!(r.numer().sign() != Sign::Minus, "isqrt of negative rational");
    // floor(sqrt(n/d)) = floor(sqrt(floor(n/d))) does not hold in general,
    // so take floor(sqrt(n*d))/d's integral part via n*d trick:
    // sqrt(n/d) = sqrt(n*d)/d, and floor of that is floor(isqrt(n*d)/d)
    // only approximately; correct by local search.
    let n = r.numer().magnitude();
    let d = r.denom().magnitude();
    let mut k = (n * d).sqrt() / d;
    let fits = |k: &BigUint| BigRational::from(BigInt::from(k.clone() * k.clone())) <= *r;
    while !fits(&k) {
        k -= 1u32;
    }
    loop {
        let next = &k + 1u32;
        if fits(&next) {
            k = next;
        } else {
            break;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn ln_matches_f64_for_small_values() {
        for n in [1u64, 2, 10, 12345, 1 << 52] {
            let big = BigUint::from(n);
            assert!((ln_biguint(&big) - (n as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn ln_handles_huge_values() {
        let n = BigUint::from(10u32).pow(500);
        let expect = 500.0 * 10f64.ln();
        assert!((ln_biguint(&n) - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn rational_conversion_handles_huge_ratios() {
        let num = BigInt::from(10u32).pow(400) * 3;
        let den = BigInt::from(10u32).pow(399);
        let r = BigRational::new(num, den);
        assert!((rational_to_f64(&r) - 30.0).abs() < 1e-12);
        // Values beyond f64 range saturate instead of going through inf/inf.
        let huge = BigRational::from(BigInt::from(10u32).pow(400));
        assert!(rational_to_f64(&huge).is_infinite());
        let tiny = huge.recip();
        assert_eq!(rational_to_f64(&tiny), 0.0);
    }

    #[test]
    fn shifted_conversion_rescales() {
        let r = BigRational::from(BigInt::from(48u32));
        assert!((rational_to_f64_shifted(&r, -4) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rational_isqrt_floor_exact_and_inexact() {
        let r = BigRational::new(BigInt::from(49), BigInt::one());
        assert_eq!(rational_isqrt_floor(&r), BigUint::from(7u32));
        let r = BigRational::new(BigInt::from(50), BigInt::one());
        assert_eq!(rational_isqrt_floor(&r), BigUint::from(7u32));
        let r = BigRational::new(BigInt::from(17), BigInt::from(4));
        assert_eq!(rational_isqrt_floor(&r), BigUint::from(2u32));
    }
}
