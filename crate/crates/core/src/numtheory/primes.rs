//! Primality testing and integer factorization.
//!
//! Numbers below 2⁶⁴ use a deterministic Miller–Rabin base set; larger
//! numbers use the Baillie–PSW combination of a strong base-2 test and a
//! strong Lucas test with Selfridge parameters. Factorization runs trial
//! division up to 10⁴ and then Brent's variant of Pollard rho.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Trial-division limit used before switching to Pollard rho.
pub const TRIAL_DIVISION_LIMIT: u64 = 10_000;

/// Default size bound (in bits) accepted by [`factorize`].
pub const DEFAULT_FACTOR_BITS: u64 = 128;

/// Upper bound on rho iterations per split attempt before giving up.
const RHO_ITERATION_BUDGET: u64 = 1 << 26;

/// Prime factorization of a nonzero integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    /// The factored integer, as given (possibly negative).
    pub n: BigInt,
    /// `(prime, exponent)` pairs with strictly increasing primes.
    pub factors: Vec<(BigInt, u32)>,
}

impl Factorization {
    /// Recomputes `|n|` from the prime powers.
    pub fn product(&self) -> BigInt {
        self.factors.iter().fold(BigInt::one(), |acc, (p, e)| {
            acc * num_traits::pow(p.clone(), *e as usize)
        })
    }

    /// The prime powers `p^e` of the factorization.
    pub fn prime_powers(&self) -> Vec<BigInt> {
        self.factors
            .iter()
            .map(|(p, e)| num_traits::pow(p.clone(), *e as usize))
            .collect()
    }

    /// All positive divisors of `|n|`, in increasing order.
    pub fn divisors(&self) -> Vec<BigInt> {
        let mut divs = vec![BigInt::one()];
        for (p, e) in &self.factors {
            let mut next = Vec::with_capacity(divs.len() * (*e as usize + 1));
            for d in &divs {
                let mut pk = d.clone();
                next.push(pk.clone());
                for _ in 0..*e {
                    pk *= p;
                    next.push(pk.clone());
                }
            }
            divs = next;
        }
        divs.sort();
        divs
    }
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

fn strong_probable_prime_u64(n: u64, base: u64) -> bool {
    let base = base % n;
    if base == 0 {
        return true;
    }
    let mut d = n - 1;
    let s = d.trailing_zeros();
    d >>= s;
    let mut x = pow_mod_u64(base, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod_u64(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic primality test for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
        .iter()
        .all(|&b| strong_probable_prime_u64(n, b))
}

fn strong_probable_prime_big(n: &BigUint, base: &BigUint) -> bool {
    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let mut x = base.modpow(&d, n);
    if x == one || x == n_minus_one {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_one {
            return true;
        }
    }
    false
}

/// Jacobi symbol `(a | n)` for odd positive `n`.
pub fn jacobi(a: &BigInt, n: &BigInt) -> i32 {
    assert!(
        n.is_odd() && n.sign() == Sign::Plus,
        "jacobi needs odd positive modulus"
    );
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut result = 1;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    let four = BigInt::from(4);
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = n.mod_floor(&eight);
            if r == three || r == five {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&four) == three && n.mod_floor(&four) == three {
            result = -result;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

/// Strong Lucas probable-prime test with Selfridge's parameter choice.
fn strong_lucas_probable_prime(n: &BigInt) -> bool {
    // Select D in 5, -7, 9, -11, ... with (D | n) = -1.
    let mut d = BigInt::from(5);
    loop {
        let j = jacobi(&d, n);
        if j == -1 {
            break;
        }
        if j == 0 && d.magnitude() != n.magnitude() {
            return false;
        }
        d = if d.sign() == Sign::Plus {
            -(d + 2u32)
        } else {
            -d + 2u32
        };
        if d == BigInt::from(-15) {
            // A perfect square never yields (D | n) = -1.
            if crate::numtheory::is_square(n).is_some() {
                return false;
            }
        }
    }
    let p = BigInt::one();
    let q: BigInt = (BigInt::one() - &d) / 4;
    let n_plus_one = n + 1u32;
    let s = n_plus_one.trailing_zeros().unwrap_or(0);
    let k = &n_plus_one >> s;

    let half = |x: BigInt| -> BigInt {
        let x = x.mod_floor(n);
        if x.is_odd() {
            (x + n) >> 1
        } else {
            x >> 1
        }
    };

    // Binary ladder computing U_k, V_k, Q^k mod n.
    let mut u = BigInt::zero();
    let mut v = BigInt::from(2);
    let mut qk = BigInt::one();
    let bits = k.bits();
    for i in (0..bits).rev() {
        // Doubling.
        u = (&u * &v).mod_floor(n);
        v = (&v * &v - &qk * 2u32).mod_floor(n);
        qk = (&qk * &qk).mod_floor(n);
        if k.bit(i) {
            let u_next = half(&p * &u + &v);
            let v_next = half(&d * &u + &p * &v);
            u = u_next;
            v = v_next;
            qk = (&qk * &q).mod_floor(n);
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = (&v * &v - &qk * 2u32).mod_floor(n);
        qk = (&qk * &qk).mod_floor(n);
        if v.is_zero() {
            return true;
        }
    }
    false
}

/// Primality test: deterministic below 2⁶⁴, Baillie–PSW above.
pub fn is_prime(n: &BigInt) -> bool {
    if n.sign() != Sign::Plus {
        return false;
    }
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if (n % p).is_zero() {
            return false;
        }
    }
    let mag = n.magnitude();
    strong_probable_prime_big(mag, &BigUint::from(2u32)) && strong_lucas_probable_prime(n)
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Brent's cycle-finding variant of Pollard rho on 64-bit composites.
fn rho_u64(n: u64) -> Result<u64> {
    if n % 2 == 0 {
        return Ok(2);
    }
    for c in 1..64u64 {
        let f = |x: u64| (mul_mod_u64(x, x, n) + c) % n;
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        let m = 128u64;
        let mut spent = 0u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mul_mod_u64(q, x.abs_diff(y), n);
                }
                g = gcd_u64(q, n);
                k += m;
            }
            r *= 2;
            spent += r;
            if spent > RHO_ITERATION_BUDGET {
                return Err(Error::Resource(format!(
                    "pollard rho budget exhausted on {n}"
                )));
            }
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd_u64(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return Ok(g);
        }
    }
    Err(Error::Resource(format!("pollard rho failed to split {n}")))
}

fn rho_big(n: &BigUint) -> Result<BigUint> {
    let one = BigUint::one();
    for c in 1..64u32 {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut y = BigUint::from(2u32);
        let mut r = 1u64;
        let mut q = BigUint::one();
        let mut g = BigUint::one();
        let mut x = y.clone();
        let mut ys = y.clone();
        let m = 128u64;
        let mut spent = 0u64;
        while g == one {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g == one {
                ys = y.clone();
                for _ in 0..m.min(r - k) {
                    y = f(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = (&q * diff) % n;
                }
                g = q.gcd(n);
                k += m;
            }
            r *= 2;
            spent += r;
            if spent > RHO_ITERATION_BUDGET {
                return Err(Error::Resource(format!(
                    "pollard rho budget exhausted on {n}"
                )));
            }
        }
        if &g == n {
            loop {
                ys = f(&ys);
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                g = diff.gcd(n);
                if g > one {
                    break;
                }
            }
        }
        if &g != n {
            return Ok(g);
        }
    }
    Err(Error::Resource(format!("pollard rho failed to split {n}")))
}

fn split_composite(n: &BigInt) -> Result<BigInt> {
    match n.to_u64() {
        Some(small) => rho_u64(small).map(BigInt::from),
        None => rho_big(n.magnitude()).map(|g| BigInt::from_biguint(Sign::Plus, g)),
    }
}

fn push_prime_factors(n: BigInt, out: &mut Vec<BigInt>) -> Result<()> {
    if n.is_one() {
        return Ok(());
    }
    if is_prime(&n) {
        out.push(n);
        return Ok(());
    }
    if let Some(r) = crate::numtheory::is_square(&n) {
        push_prime_factors(r.clone(), out)?;
        return push_prime_factors(r, out);
    }
    let d = split_composite(&n)?;
    let rest = &n / &d;
    push_prime_factors(d, out)?;
    push_prime_factors(rest, out)
}

/// Factorizes a nonzero integer whose magnitude is below 2^`max_bits`.
///
/// Returns a resource error (not a domain error) when the magnitude exceeds
/// the bound or when Pollard rho exhausts its iteration budget.
pub fn factorize_bounded(n: &BigInt, max_bits: u64) -> Result<Factorization> {
    if n.is_zero() {
        return Err(Error::domain("cannot factorize zero"));
    }
    if n.bits() > max_bits {
        return Err(Error::Resource(format!(
            "{}-bit input exceeds the {max_bits}-bit factorization bound",
            n.bits()
        )));
    }
    let mut rest = n.magnitude().clone();
    let mut primes: Vec<BigInt> = Vec::new();
    let mut p = 2u64;
    while p <= TRIAL_DIVISION_LIMIT {
        let pb = BigUint::from(p);
        if &pb * &pb > rest {
            break;
        }
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            primes.push(BigInt::from(p));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if !rest.is_one() {
        push_prime_factors(BigInt::from_biguint(Sign::Plus, rest), &mut primes)?;
    }
    primes.sort();
    let mut factors: Vec<(BigInt, u32)> = Vec::new();
    for q in primes {
        match factors.last_mut() {
            Some((last, e)) if *last == q => *e += 1,
            _ => factors.push((q, 1)),
        }
    }
    Ok(Factorization {
        n: n.clone(),
        factors,
    })
}

/// Factorizes a nonzero integer within the default 2¹²⁸ bound.
pub fn factorize(n: &BigInt) -> Result<Factorization> {
    factorize_bounded(n, DEFAULT_FACTOR_BITS)
}
