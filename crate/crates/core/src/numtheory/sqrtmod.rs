//! Square roots of an integer modulo a composite, built per prime power
//! (Tonelli–Shanks and Hensel lifting for odd primes, direct lifting for
//! powers of two) and combined with the Chinese remainder theorem.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{crt, jacobi, Factorization};
use crate::error::{Error, Result};

/// Tonelli–Shanks: a root of a quadratic residue `a` modulo an odd prime.
fn tonelli_shanks(a: &BigInt, p: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(p);
    if a.is_zero() {
        return Some(BigInt::zero());
    }
    if jacobi(&a, p) != 1 {
        return None;
    }
    let p_minus_one: BigInt = p - 1;
    let s = p_minus_one.trailing_zeros().unwrap_or(0);
    let q = &p_minus_one >> s;
    let mut z = BigInt::from(2);
    while jacobi(&z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = z.modpow(&q, p);
    let mut t = a.modpow(&q, p);
    let mut r = a.modpow(&((&q + 1) >> 1), p);
    while !t.is_one() {
        let mut i = 0;
        let mut t2 = t.clone();
        while !t2.is_one() {
            t2 = (&t2 * &t2).mod_floor(p);
            i += 1;
            if i == m {
                return None;
            }
        }
        let b = c.modpow(&(BigInt::one() << (m - i - 1)), p);
        m = i;
        c = (&b * &b).mod_floor(p);
        t = (&t * &c).mod_floor(p);
        r = (&r * &b).mod_floor(p);
    }
    Some(r)
}

/// Roots of `y² ≡ a (mod p^e)` for a unit `a` and odd prime `p`.
fn unit_roots_odd(a: &BigInt, p: &BigInt, e: u32) -> Vec<BigInt> {
    let Some(mut x) = tonelli_shanks(a, p) else {
        return Vec::new();
    };
    let mut pk = p.clone();
    for _ in 1..e {
        pk *= p;
        // Newton step x ← x − (x² − a)/(2x) modulo the next power.
        let inv =
            super::mod_inverse(&(&x * 2), &pk).expect("2x is a unit modulo an odd prime power");
        x = (&x - (&x * &x - a) * inv).mod_floor(&pk);
    }
    let neg = (-&x).mod_floor(&pk);
    if neg == x {
        vec![x]
    } else {
        vec![x, neg]
    }
}

/// Roots of `y² ≡ a (mod 2^e)` for odd `a`.
fn unit_roots_two(a: &BigInt, e: u32) -> Vec<BigInt> {
    let modulus = BigInt::one() << e;
    let a = a.mod_floor(&modulus);
    match e {
        0 => vec![BigInt::zero()],
        1 => vec![BigInt::one()],
        2 => {
            if (&a & BigInt::from(3)) == BigInt::one() {
                vec![BigInt::one(), BigInt::from(3)]
            } else {
                Vec::new()
            }
        }
        _ => {
            if (&a & BigInt::from(7)) != BigInt::one() {
                return Vec::new();
            }
            // Lift x with x² ≡ a (mod 2^i) to precision i+1.
            let mut x = BigInt::one();
            for i in 3..e {
                let next = BigInt::one() << (i + 1);
                if !(&x * &x - &a).mod_floor(&next).is_zero() {
                    x += BigInt::one() << (i - 1);
                }
            }
            let half = BigInt::one() << (e - 1);
            let mut roots: Vec<BigInt> = [x.clone(), -&x, &x + &half, -&x + &half]
                .iter()
                .map(|r| r.mod_floor(&modulus))
                .collect();
            roots.sort();
            roots.dedup();
            roots
        }
    }
}

/// All `y` in `[0, p^e)` with `y² ≡ d (mod p^e)`.
pub fn sqrt_mod_prime_power(d: &BigInt, p: &BigInt, e: u32) -> Vec<BigInt> {
    let modulus = num_traits::pow(p.clone(), e as usize);
    let d = d.mod_floor(&modulus);
    let mut roots = Vec::new();
    if d.is_zero() {
        // y ≡ 0 modulo p^⌈e/2⌉.
        let step = num_traits::pow(p.clone(), e.div_ceil(2) as usize);
        let mut y = BigInt::zero();
        while y < modulus {
            roots.push(y.clone());
            y += &step;
        }
        return roots;
    }
    let mut v = 0u32;
    let mut unit = d.clone();
    while (&unit % p).is_zero() {
        unit /= p;
        v += 1;
    }
    if v % 2 == 1 {
        return roots;
    }
    let rest = e - v;
    let base_roots = if *p == BigInt::from(2) {
        unit_roots_two(&unit, rest)
    } else {
        unit_roots_odd(&unit, p, rest)
    };
    let scale = num_traits::pow(p.clone(), (v / 2) as usize);
    let period = num_traits::pow(p.clone(), rest as usize);
    for r in base_roots {
        // y = p^{v/2}(r + t·p^{e−v}) for every lift t.
        let mut t = BigInt::zero();
        while t < scale {
            roots.push((&scale * (&r + &t * &period)).mod_floor(&modulus));
            t += 1;
        }
    }
    roots.sort();
    roots.dedup();
    roots
}

/// All `B` in `[0, m)` with `B² ≡ d (mod m)`, using the given factorization
/// of `m`.
pub fn sqrt_mod(d: &BigInt, m: &BigInt, fact_m: &Factorization) -> Result<Vec<BigInt>> {
    if !m.is_positive() {
        return Err(Error::domain("sqrt_mod needs a positive modulus"));
    }
    if fact_m.product() != *m {
        return Err(Error::internal(format!(
            "factorization does not match modulus {m}"
        )));
    }
    let mut combined = vec![BigInt::zero()];
    let mut modulus = BigInt::one();
    for (p, e) in &fact_m.factors {
        let pe = num_traits::pow(p.clone(), *e as usize);
        let local = sqrt_mod_prime_power(d, p, *e);
        if local.is_empty() {
            return Ok(Vec::new());
        }
        let mut next = Vec::with_capacity(combined.len() * local.len());
        for c in &combined {
            for r in &local {
                next.push(crt(
                    &[c.clone(), r.clone()],
                    &[modulus.clone(), pe.clone()],
                )?);
            }
        }
        modulus *= pe;
        combined = next;
    }
    combined.sort();
    Ok(combined)
}
