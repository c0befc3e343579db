//! Continued fractions of `√D`, fundamental solutions of `t² − Du² = 1`,
//! the solution recurrence modulo `M`, and the exact period of that
//! recurrence modulo `m`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::Mat2;
use crate::numtheory::{factorize, isqrt, jacobi, ln_floored, Factorization};

/// The least positive solution `(t₁, u₁)` of `t² − Du² = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PellSolution {
    /// The determinant `D`.
    pub d: BigInt,
    /// `t₁`.
    pub t1: BigInt,
    /// `u₁`.
    pub u1: BigInt,
}

impl PellSolution {
    /// The matrix `[[t₁, D·u₁], [u₁, t₁]]` whose powers generate all
    /// positive solutions.
    pub fn generator(&self) -> Mat2 {
        Mat2::new(
            self.t1.clone(),
            &self.d * &self.u1,
            self.u1.clone(),
            self.t1.clone(),
        )
    }
}

/// Minimal period of the solution recurrence modulo `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrencePeriod {
    /// The determinant `D`.
    pub d: BigInt,
    /// The modulus.
    pub m: BigInt,
    /// Least `P > 0` with `(t_{k+P}, u_{k+P}) ≡ (t_k, u_k) (mod m)` for all `k`.
    pub period: BigInt,
}

/// Continued fraction `√D = [μ₀; μ₁, …, μ_n]` with minimal period `n`.
pub fn cf_sqrt(d: &BigInt) -> Result<(BigInt, Vec<BigInt>)> {
    if !d.is_positive() {
        return Err(Error::domain(format!("cf_sqrt needs positive D, got {d}")));
    }
    let a0 = isqrt(d)?;
    if &a0 * &a0 == *d {
        return Err(Error::domain(format!("{d} is a perfect square")));
    }
    let mut quotients = Vec::new();
    let mut m = BigInt::zero();
    let mut den = BigInt::one();
    let mut a = a0.clone();
    let end = &a0 * 2;
    loop {
        m = &den * &a - &m;
        den = (d - &m * &m) / &den;
        a = (&a0 + &m) / &den;
        quotients.push(a.clone());
        if a == end {
            break;
        }
    }
    Ok((a0, quotients))
}

/// The fundamental solution of `t² − Du² = 1`, read off the convergents
/// at the end of the first (or, for odd period, second) period.
pub fn fundamental_solution(d: &BigInt) -> Result<PellSolution> {
    let (a0, period) = cf_sqrt(d)?;
    let n = period.len();
    let len = if n % 2 == 0 { n } else { 2 * n };
    // Convergents p_k/q_k for k = 0 .. len−1.
    let (mut p_prev, mut p) = (BigInt::one(), a0.clone());
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    for k in 1..len {
        let a = &period[(k - 1) % n];
        let p_next = a * &p + &p_prev;
        let q_next = a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    if &p * &p - d * &q * &q != BigInt::one() {
        return Err(Error::internal(format!(
            "convergent does not solve the Pell equation for {d}"
        )));
    }
    Ok(PellSolution {
        d: d.clone(),
        t1: p,
        u1: q,
    })
}

/// `(t_k mod M, u_k mod M)` with `t_k + u_k√D = (t₁ + u₁√D)^k`.
pub fn power_mod(sol: &PellSolution, k: &BigInt, modulus: &BigInt) -> Result<(BigInt, BigInt)> {
    if !modulus.is_positive() {
        return Err(Error::domain("power_mod needs a positive modulus"));
    }
    if k.is_negative() {
        return Err(Error::domain("power_mod needs a nonnegative exponent"));
    }
    let m = sol.generator().pow_mod(k, modulus);
    Ok((m.at(0, 0).clone(), m.at(1, 0).clone()))
}

fn is_identity_power(gen: &Mat2, k: &BigInt, modulus: &BigInt) -> bool {
    gen.pow_mod(k, modulus) == Mat2::identity().reduce_mod(modulus)
}

/// A multiple of the period modulo the prime power `p^a`.
fn candidate_period(sol: &PellSolution, p: &BigInt, a: u32) -> BigInt {
    let base = if *p == BigInt::from(2) {
        BigInt::from(2)
    } else {
        match jacobi(&sol.d, p) {
            1 => p - 1,
            -1 => (p + 1) * 2,
            _ => p * 2,
        }
    };
    num_traits::pow(p.clone(), (a - 1) as usize) * base
}

/// Strips prime factors from a known multiple of the order while the
/// generator still returns to the identity.
fn minimize_period(gen: &Mat2, modulus: &BigInt, multiple: BigInt) -> Result<BigInt> {
    let mut period = multiple;
    let fact = factorize(&period)?;
    for (q, _) in &fact.factors {
        while (&period % q).is_zero() && is_identity_power(gen, &(&period / q), modulus) {
            period /= q;
        }
    }
    Ok(period)
}

/// Exact period of the recurrence modulo `m`, computed per prime power
/// from a candidate multiple, minimized by divisor stripping and combined
/// by least common multiple.
pub fn period_mod(sol: &PellSolution, m: &BigInt) -> Result<RecurrencePeriod> {
    if !m.is_positive() {
        return Err(Error::domain("period_mod needs a positive modulus"));
    }
    let fact: Factorization = factorize(m)?;
    let gen = sol.generator();
    let mut period = BigInt::one();
    for (p, a) in &fact.factors {
        let pa = num_traits::pow(p.clone(), *a as usize);
        let mut multiple = candidate_period(sol, p, *a);
        // The candidate is always a multiple; the loop only guards the
        // invariant against arithmetic slips.
        let mut guard = 0;
        while !is_identity_power(&gen, &multiple, &pa) {
            multiple *= p;
            guard += 1;
            if guard > 64 {
                return Err(Error::internal(format!("no period found modulo {pa}")));
            }
        }
        let local = minimize_period(&gen, &pa, multiple)?;
        period = period.lcm(&local);
    }
    Ok(RecurrencePeriod {
        d: sol.d.clone(),
        m: m.clone(),
        period,
    })
}

/// Upper bound `⌈2m(ln m + 1)⌉` on the period modulo `m`, with the
/// logarithm floored at 2 for `m < 4`.
pub fn period_bound(m: &BigInt) -> BigInt {
    let mf = m.to_f64().unwrap_or(f64::INFINITY);
    let bound = (2.0 * mf * (ln_floored(mf) + 1.0)).ceil();
    num_traits::FromPrimitive::from_f64(bound).unwrap_or_else(|| m * m)
}
