//! One-parameter linear families `xᵢ = (slopeᵢ·t + offsetᵢ) / denᵢ` and the
//! search for an admissible member.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::numtheory::{mod_inverse, modp};

/// `x = (slope·t + offset) / den` with `den > 0`.
#[derive(Debug, Clone)]
pub(crate) struct LinearCoordinate {
    pub slope: BigInt,
    pub offset: BigInt,
    pub den: BigInt,
}

impl LinearCoordinate {
    pub fn new(slope: BigInt, offset: BigInt, den: BigInt) -> Self {
        if den.is_negative() {
            LinearCoordinate { slope: -slope, offset: -offset, den: -den }
        } else {
            LinearCoordinate { slope, offset, den }
        }
    }

    pub fn integer(slope: BigInt, offset: BigInt) -> Self {
        LinearCoordinate { slope, offset, den: BigInt::one() }
    }

    fn at(&self, t: &BigInt) -> BigInt {
        (&self.slope * t + &self.offset) / &self.den
    }
}

/// All `t` with `a·t ≡ r (mod n)`, as a class `(t₀, modulus)`.
fn solve_congruence(a: &BigInt, r: &BigInt, n: &BigInt) -> Option<(BigInt, BigInt)> {
    let g = a.gcd(n);
    if g.is_zero() {
        return r.is_zero().then(|| (BigInt::zero(), BigInt::one()));
    }
    if !(r % &g).is_zero() {
        return None;
    }
    let n_red = n / &g;
    let inv = mod_inverse(&(a / &g), &n_red)?;
    Some((modp(&(r / &g * inv), &n_red), n_red))
}

/// Combines `t ≡ r₁ (mod m₁)` and `t ≡ r₂ (mod m₂)` for arbitrary moduli.
pub(crate) fn crt_pair(r1: &BigInt, m1: &BigInt, r2: &BigInt, m2: &BigInt) -> Option<(BigInt, BigInt)> {
    let g = m1.gcd(m2);
    let diff = r2 - r1;
    if !(&diff % &g).is_zero() {
        return None;
    }
    let lcm = m1 / &g * m2;
    let (k, _) = solve_congruence(&(m1 / &g), &(diff / &g), &(m2 / &g))?;
    Some((modp(&(r1 + m1 * k), &lcm), lcm))
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// An admissible member of the family (integral, `xᵢ ≡ αᵢ (mod Γ)`,
/// `xᵢ ≥ 0`), choosing the smallest feasible `t` when the feasible range is
/// bounded below, else the largest, else the class representative nearest 0.
pub(crate) fn admissible_member(
    coords: &[LinearCoordinate; 2],
    gamma: &BigInt,
    alpha: &[BigInt; 2],
) -> Option<(BigInt, BigInt)> {
    let mut class = (BigInt::zero(), BigInt::one());
    for (coord, a) in coords.iter().zip(alpha) {
        // slope·t + offset ≡ den·α (mod den·Γ)
        let n = &coord.den * gamma;
        let target = modp(&(&coord.den * a - &coord.offset), &n);
        let (r, m) = solve_congruence(&modp(&coord.slope, &n), &target, &n)?;
        class = crt_pair(&class.0, &class.1, &r, &m)?;
    }
    let (r, m) = class;
    let mut lo: Option<BigInt> = None;
    let mut hi: Option<BigInt> = None;
    for coord in coords {
        // slope·t + offset ≥ 0
        if coord.slope.is_zero() {
            if coord.offset.is_negative() {
                return None;
            }
        } else if coord.slope.is_positive() {
            let bound = ceil_div(&-&coord.offset, &coord.slope);
            lo = Some(lo.map_or(bound.clone(), |l| l.max(bound)));
        } else {
            let bound = coord.offset.div_floor(&-&coord.slope);
            hi = Some(hi.map_or(bound.clone(), |h| h.min(bound)));
        }
    }
    let t = match (&lo, &hi) {
        (Some(l), _) => l + modp(&(&r - l), &m),
        (None, Some(h)) => h - modp(&(h - &r), &m),
        (None, None) => r.clone(),
    };
    if hi.as_ref().is_some_and(|h| &t > h) || lo.as_ref().is_some_and(|l| &t < l) {
        return None;
    }
    Some((coords[0].at(&t), coords[1].at(&t)))
}
