//! Exact integer utilities: integer square roots, factorization, square
//! roots modulo composites, the Chinese remainder theorem and the coprime
//! modulus splitting used by modular certificate evaluation.

mod primes;
mod sqrtmod;

pub use primes::{
    factorize, factorize_bounded, is_prime, is_prime_u64, jacobi, Factorization,
    DEFAULT_FACTOR_BITS, TRIAL_DIVISION_LIMIT,
};
pub use sqrtmod::{sqrt_mod, sqrt_mod_prime_power};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Integer square root: the `r ≥ 0` with `r² ≤ n < (r+1)²`.
pub fn isqrt(n: &BigInt) -> Result<BigInt> {
    if n.is_negative() {
        return Err(Error::domain(format!("isqrt of negative number {n}")));
    }
    Ok(n.sqrt())
}

/// Returns the root when `n` is a perfect square (negatives never are).
pub fn is_square(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

/// Nonnegative residue of `a` modulo a positive `m`.
pub fn modp(a: &BigInt, m: &BigInt) -> BigInt {
    a.mod_floor(m)
}

/// Inverse of `a` modulo `m > 0`, if it exists.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.mod_floor(m).extended_gcd(m);
    e.gcd.is_one().then(|| e.x.mod_floor(m))
}

/// Solves `r ≡ residues[i] (mod moduli[i])` for pairwise-coprime moduli,
/// returning the unique `r` in `[0, ∏ moduli)`.
pub fn crt(residues: &[BigInt], moduli: &[BigInt]) -> Result<BigInt> {
    if residues.len() != moduli.len() {
        return Err(Error::domain("crt needs as many residues as moduli"));
    }
    if moduli.iter().any(|m| !m.is_positive()) {
        return Err(Error::domain("crt moduli must be positive"));
    }
    let mut acc = BigInt::zero();
    let mut modulus = BigInt::one();
    for (r, m) in residues.iter().zip(moduli) {
        let inv = mod_inverse(&modulus, m)
            .ok_or_else(|| Error::domain(format!("crt moduli are not pairwise coprime ({m})")))?;
        // acc + modulus * t ≡ r (mod m)
        let t = ((r - &acc) * inv).mod_floor(m);
        acc += &modulus * t;
        modulus *= m;
    }
    Ok(acc)
}

/// Splits `modulus` into six pairwise-coprime factors, one per column pair
/// of a bilinear matrix, so that factor `i` is coprime to `dets[i]`.
///
/// Position `i` greedily takes the largest divisor of the still-unassigned
/// part that is coprime to `dets[i]`. No factorization is needed: the
/// coprime part is obtained by repeatedly dividing out gcds. Fails when some
/// prime of `modulus` divides all six determinants.
pub fn split_modulus(modulus: &BigInt, dets: &[BigInt; 6]) -> Result<[BigInt; 6]> {
    if !modulus.is_positive() {
        return Err(Error::domain("split_modulus needs a positive modulus"));
    }
    let mut rest = modulus.clone();
    let mut parts: [BigInt; 6] = Default::default();
    for (part, det) in parts.iter_mut().zip(dets) {
        let mut coprime = rest.clone();
        loop {
            let g = coprime.gcd(det);
            if g.is_one() {
                break;
            }
            coprime /= g;
        }
        rest /= &coprime;
        *part = coprime;
    }
    if !rest.is_one() {
        return Err(Error::invalid(format!(
            "no coprime modulus split: {rest} shares a factor with every determinant"
        )));
    }
    let product: BigInt = parts.iter().product();
    let pairwise = (0..6).all(|i| (i + 1..6).all(|j| parts[i].gcd(&parts[j]).is_one()));
    let coprime_to_det = parts.iter().zip(dets).all(|(m, d)| m.gcd(d).is_one());
    if product != *modulus || !pairwise || !coprime_to_det {
        return Err(Error::internal("split_modulus postcondition failed"));
    }
    Ok(parts)
}

/// Base-2 logarithm under the floor convention used by all size bounds:
/// `log |x|` for `|x| ≥ 4`, and `2` otherwise.
pub fn log2_floored(x: &BigInt) -> f64 {
    let mag = x.abs();
    if mag < BigInt::from(4) {
        return 2.0;
    }
    log2_big(&mag)
}

/// Natural logarithm under the same floor convention as [`log2_floored`].
pub fn ln_floored(x: f64) -> f64 {
    if x.abs() < 4.0 {
        2.0
    } else {
        x.abs().ln()
    }
}

/// `log₂ |x|` for nonzero `x`, accurate to f64 precision for any size.
pub fn log2_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.abs().to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    let top = (x.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.log2() + shift as f64
}

/// Bit length `⌈log₂(|x|+1)⌉` of an integer.
pub fn bit_length(x: &BigInt) -> u64 {
    x.bits()
}

/// Size measure `1 + bit_length(x)` used for input lengths.
pub fn int_length(x: &BigInt) -> u64 {
    1 + x.bits()
}

/// Ceiling of `log₂ |x|` for `|x| ≥ 1`, and `0` for `|x| ≤ 1`.
pub fn ceil_log2(x: &BigInt) -> u64 {
    let mag = x.abs();
    if mag <= BigInt::one() {
        return 0;
    }
    let bits = mag.bits();
    if (&mag & (&mag - 1u32)).is_zero() {
        bits - 1
    } else {
        bits
    }
}
