//! Exact comparisons between squared integer distances and real radii.
//!
//! Radii and slack factors arrive as `f64`; every `f64` is a dyadic rational,
//! so the comparisons below are carried out on that exact value rather than on
//! a rounded product.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

fn floor_u128(x: &BigRational) -> u128 {
    if x <= &BigRational::zero() {
        return 0;
    }
    x.floor().to_integer().to_u128().unwrap_or(u128::MAX)
}

/// `floor(((1 + eps) * radius * 2^bits)^2)`, saturating at `u128::MAX`.
pub fn radius_sq_threshold(radius: f64, eps: f64, bits: u32) -> u128 {
    let scaled = rat(radius) * (BigRational::one() + rat(eps)) * BigRational::from_integer(BigInt::one() << bits);
    floor_u128(&(&scaled * &scaled))
}

/// Same as [`radius_sq_threshold`] for a radius already in fixed-point units.
pub fn fixed_radius_sq_threshold(radius: f64, eps: f64) -> u128 {
    let scaled = rat(radius) * (BigRational::one() + rat(eps));
    floor_u128(&(&scaled * &scaled))
}

/// `d_sq <= (1 + eps)^2 * base_sq`, exactly.
pub fn within_factor(d_sq: u128, base_sq: u128, eps: f64) -> bool {
    let f = BigRational::one() + rat(eps);
    let lhs = BigRational::from_integer(BigInt::from(d_sq));
    let rhs = &f * &f * BigRational::from_integer(BigInt::from(base_sq));
    lhs <= rhs
}

/// `d_sq <= ((1 + eps) * radius)^2` with `radius` in fixed-point units.
pub fn fixed_within(d_sq: u128, radius: f64, eps: f64) -> bool {
    let r = rat(radius) * (BigRational::one() + rat(eps));
    BigRational::from_integer(BigInt::from(d_sq)) <= &r * &r
}
