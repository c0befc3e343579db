//! Normalized base-2 floating point with `p` significant digits, rounded by
//! integer arithmetic so results are bit-exact on every platform, plus
//! enclosures that carry a sound bound on the distance to the true value.
//!
//! A number `(e, f)` has value `f·2^e` with `½ ≤ |f| < 1`; it is stored as
//! the integer mantissa `2^p·f` and the exponent `e`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Precision `p` and exponent bound `N` shared by the operands of an
/// operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpFormat {
    /// Number of significant binary digits.
    pub precision: u32,
    /// Exponents must satisfy `|e| < N`.
    pub exp_bound: i64,
}

impl FpFormat {
    /// Builds a format; the precision must be positive.
    pub fn new(precision: u32, exp_bound: i64) -> Result<Self> {
        if precision == 0 || exp_bound <= 0 {
            return Err(Error::domain(
                "precision and exponent bound must be positive",
            ));
        }
        Ok(FpFormat {
            precision,
            exp_bound,
        })
    }
}

/// An exact dyadic rational `mant · 2^exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    /// Integer mantissa.
    pub mant: BigInt,
    /// Power-of-two scale.
    pub exp: i64,
}

impl Dyadic {
    /// The dyadic `mant · 2^exp`.
    pub fn new(mant: BigInt, exp: i64) -> Self {
        Dyadic { mant, exp }
    }

    /// An integer.
    pub fn from_int(n: BigInt) -> Self {
        Dyadic { mant: n, exp: 0 }
    }

    /// Zero.
    pub fn zero() -> Self {
        Dyadic::from_int(BigInt::zero())
    }

    /// Whether the value is zero.
    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    /// The exponent `e` with `2^{e−1} ≤ |x| < 2^e`, or `None` for zero.
    pub fn exponent(&self) -> Option<i64> {
        (!self.mant.is_zero()).then(|| self.exp + self.mant.bits() as i64)
    }

    fn align(&self, other: &Dyadic) -> (BigInt, BigInt, i64) {
        let exp = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - exp) as u64;
        let b = &other.mant << (other.exp - exp) as u64;
        (a, b, exp)
    }

    /// Exact sum.
    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (a, b, exp) = self.align(other);
        Dyadic::new(a + b, exp)
    }

    /// Exact difference.
    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    /// Exact product.
    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mant * &other.mant, self.exp + other.exp)
    }

    /// Negation.
    pub fn neg(&self) -> Dyadic {
        Dyadic::new(-&self.mant, self.exp)
    }

    /// Absolute value.
    pub fn abs(&self) -> Dyadic {
        Dyadic::new(self.mant.abs(), self.exp)
    }

    /// Whether `|self| < 2^k`.
    pub fn abs_below_pow2(&self, k: i64) -> bool {
        match self.exponent() {
            None => true,
            Some(e) => {
                if e < k {
                    return true;
                }
                if e > k + 1 {
                    return false;
                }
                // e ∈ {k, k+1}: |x| ≥ 2^{e−1} ≥ 2^{k−1}; compare exactly.
                self.abs().cmp_exact(&Dyadic::new(BigInt::one(), k)) == Ordering::Less
            }
        }
    }

    /// Exact comparison.
    pub fn cmp_exact(&self, other: &Dyadic) -> Ordering {
        let (a, b, _) = self.align(other);
        a.cmp(&b)
    }
}

/// A normalized `p`-digit floating-point number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpNum {
    e: i64,
    mant: BigInt,
    format: FpFormat,
}

impl FpNum {
    /// Zero, written `(0, 0)`.
    pub fn zero(format: FpFormat) -> Self {
        FpNum {
            e: 0,
            mant: BigInt::zero(),
            format,
        }
    }

    /// The exponent `e`.
    pub fn exponent(&self) -> i64 {
        self.e
    }

    /// The integer `2^p·f`.
    pub fn scaled_fraction(&self) -> &BigInt {
        &self.mant
    }

    /// The format this number was produced in.
    pub fn format(&self) -> FpFormat {
        self.format
    }

    /// Whether this is zero.
    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    /// Exact value.
    pub fn to_dyadic(&self) -> Dyadic {
        Dyadic::new(self.mant.clone(), self.e - self.format.precision as i64)
    }

    /// Negation (exact).
    pub fn neg(&self) -> Self {
        FpNum {
            e: self.e,
            mant: -&self.mant,
            format: self.format,
        }
    }

    /// Bits of storage used by the mantissa.
    pub fn stored_bits(&self) -> u64 {
        self.mant.bits()
    }
}

impl fmt::Display for FpNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}·2^{}",
            self.mant,
            self.e - self.format.precision as i64
        )
    }
}

/// Outcome of rounding: the number and whether it equals its input.
struct Rounded {
    value: FpNum,
    exact: bool,
}

fn round_inner(x: &Dyadic, format: FpFormat) -> Result<Rounded> {
    let Some(mut e) = x.exponent() else {
        return Ok(Rounded {
            value: FpNum::zero(format),
            exact: true,
        });
    };
    let p = format.precision as u64;
    let bits = x.mant.bits();
    let negative = x.mant.is_negative();
    let mag = x.mant.abs();
    let (mut m, exact) = if bits <= p {
        (mag << (p - bits), true)
    } else {
        // ⌊2^{p−e}|x| + ½⌋, which matches the ceiling form for x < 0.
        let k = bits - p;
        let q = (&mag + (BigInt::one() << (k - 1))) >> k;
        let exact = (&q << k) == mag;
        (q, exact)
    };
    if m.bits() > p {
        m >>= 1u32;
        e += 1;
    }
    if e.abs() >= format.exp_bound {
        return Err(Error::Overflow(format!(
            "exponent {e} outside the bound {}",
            format.exp_bound
        )));
    }
    if negative {
        m = -m;
    }
    Ok(Rounded {
        value: FpNum { e, mant: m, format },
        exact,
    })
}

/// `Round(x, p)`: round half away from zero to `p` significant digits.
pub fn round_p(x: &Dyadic, format: FpFormat) -> Result<FpNum> {
    round_inner(x, format).map(|r| r.value)
}

/// Rounds an exact operation result, flushing values below `2^{−N}` to zero.
fn round_result(x: &Dyadic, format: FpFormat) -> Result<(Rounded, bool)> {
    match x.exponent() {
        Some(e) if e <= -format.exp_bound => Ok((
            Rounded {
                value: FpNum::zero(format),
                exact: false,
            },
            true,
        )),
        _ => round_inner(x, format).map(|r| (r, false)),
    }
}

fn check_formats(x: &FpNum, y: &FpNum) -> Result<FpFormat> {
    if x.format != y.format {
        return Err(Error::domain(
            "floating-point operands use different formats",
        ));
    }
    Ok(x.format)
}

/// Floating-point addition `x̄ ⊕ ȳ`.
pub fn fadd(x: &FpNum, y: &FpNum) -> Result<FpNum> {
    let format = check_formats(x, y)?;
    round_result(&x.to_dyadic().add(&y.to_dyadic()), format).map(|(r, _)| r.value)
}

/// Floating-point multiplication `x̄ ⊗ ȳ`.
pub fn fmul(x: &FpNum, y: &FpNum) -> Result<FpNum> {
    let format = check_formats(x, y)?;
    round_result(&x.to_dyadic().mul(&y.to_dyadic()), format).map(|(r, _)| r.value)
}

/// Certified sign of an enclosure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// The enclosed value is certainly positive.
    Positive,
    /// The enclosed value is certainly negative.
    Negative,
    /// The enclosure does not exclude zero.
    Unknown,
}

/// A floating-point value with a sound error bound:
/// `|true − val| < 2^err_exp`, or exactly equal when `err_exp` is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    /// The floating-point approximation.
    pub val: FpNum,
    /// Error exponent; `None` means the value is exact.
    pub err_exp: Option<i64>,
}

/// Exponent `t` with `Σ 2^{a_i} < 2^t` strictly bounding a sum of errors.
fn combine_errors(terms: &[i64]) -> Option<i64> {
    let max = *terms.iter().max()?;
    let count = terms.len() as u64;
    let extra = if count <= 1 {
        0
    } else {
        64 - (count - 1).leading_zeros() as i64
    };
    Some(max + extra)
}

impl Enclosure {
    /// An exact floating-point value.
    pub fn exact(val: FpNum) -> Self {
        Enclosure { val, err_exp: None }
    }

    /// Encloses an integer, rounding when it has more than `p` digits.
    pub fn from_int(n: &BigInt, format: FpFormat) -> Result<Self> {
        Enclosure::from_dyadic(&Dyadic::from_int(n.clone()), format)
    }

    /// Encloses an exact dyadic value.
    pub fn from_dyadic(x: &Dyadic, format: FpFormat) -> Result<Self> {
        let r = round_inner(x, format)?;
        let err_exp = if r.exact {
            None
        } else {
            // |Round(x) − x| ≤ 2^{e−p−1} < 2^{e−p}.
            x.exponent().map(|e| e - format.precision as i64)
        };
        Ok(Enclosure {
            val: r.value,
            err_exp,
        })
    }

    /// Whether the enclosure is an exact value.
    pub fn is_exact(&self) -> bool {
        self.err_exp.is_none()
    }

    /// Exact negation.
    pub fn neg(&self) -> Self {
        Enclosure {
            val: self.val.neg(),
            err_exp: self.err_exp,
        }
    }

    /// Rounding and flush contributions of an exact intermediate result.
    fn finish(exact: &Dyadic, format: FpFormat, mut terms: Vec<i64>) -> Result<Self> {
        let (r, flushed) = round_result(exact, format)?;
        if flushed {
            terms.push(-format.exp_bound);
        } else if !r.exact {
            if let Some(e) = exact.exponent() {
                terms.push(e - format.precision as i64);
            }
        }
        Ok(Enclosure {
            val: r.value,
            err_exp: combine_errors(&terms),
        })
    }
}

/// Enclosed addition.
pub fn enc_add(x: &Enclosure, y: &Enclosure) -> Result<Enclosure> {
    let format = check_formats(&x.val, &y.val)?;
    let sum = x.val.to_dyadic().add(&y.val.to_dyadic());
    let terms: Vec<i64> = [x.err_exp, y.err_exp].into_iter().flatten().collect();
    Enclosure::finish(&sum, format, terms)
}

/// Enclosed subtraction.
pub fn enc_sub(x: &Enclosure, y: &Enclosure) -> Result<Enclosure> {
    enc_add(x, &y.neg())
}

/// Enclosed multiplication; an exact zero operand gives an exact zero.
pub fn enc_mul(x: &Enclosure, y: &Enclosure) -> Result<Enclosure> {
    let format = check_formats(&x.val, &y.val)?;
    let exact_zero = |z: &Enclosure| z.is_exact() && z.val.is_zero();
    if exact_zero(x) || exact_zero(y) {
        return Ok(Enclosure::exact(FpNum::zero(format)));
    }
    let xd = x.val.to_dyadic();
    let yd = y.val.to_dyadic();
    let mut terms = Vec::new();
    // |x̄ȳ − xy| ≤ |x̄|·|ȳ − y| + |ȳ|·|x̄ − x| + |x̄ − x|·|ȳ − y|.
    if let (Some(ex), Some(err_y)) = (xd.exponent(), y.err_exp) {
        terms.push(ex + err_y);
    }
    if let (Some(ey), Some(err_x)) = (yd.exponent(), x.err_exp) {
        terms.push(ey + err_x);
    }
    if let (Some(err_x), Some(err_y)) = (x.err_exp, y.err_exp) {
        terms.push(err_x + err_y);
    }
    Enclosure::finish(&xd.mul(&yd), format, terms)
}

/// Enclosed multiplication by an exact integer.
pub fn enc_mul_int(x: &Enclosure, n: &BigInt) -> Result<Enclosure> {
    enc_mul(x, &Enclosure::from_int(n, x.val.format)?)
}

/// Enclosed division by a nonzero exact integer.
pub fn enc_div_int(x: &Enclosure, d: &BigInt) -> Result<Enclosure> {
    if d.is_zero() {
        return Err(Error::domain("division by zero"));
    }
    let format = x.val.format;
    let mut terms = Vec::new();
    // |x − x̄|/|d| < 2^{err − (bits(d) − 1)} since |d| ≥ 2^{bits(d)−1}.
    let d_floor_exp = d.bits() as i64 - 1;
    if let Some(err) = x.err_exp {
        terms.push(err - d_floor_exp);
    }
    if x.val.is_zero() {
        return Ok(Enclosure {
            val: x.val.clone(),
            err_exp: combine_errors(&terms),
        });
    }
    let xd = x.val.to_dyadic();
    // Truncated quotient with `extra` guard bits, then rounded.
    let extra = format.precision as u64 + 2;
    let scaled = &xd.mant << (d.bits() + extra);
    let (q, r) = scaled.div_rem(d);
    let quotient = Dyadic::new(q, xd.exp - (d.bits() + extra) as i64);
    if !r.is_zero() {
        // Truncation error below one unit of the last guard place.
        terms.push(quotient.exp);
    }
    Enclosure::finish(&quotient, format, terms)
}

/// The sign of the enclosed value when the enclosure excludes zero: the
/// value exponent must exceed the error exponent by more than one.
pub fn sign_certified(x: &Enclosure) -> Sign {
    let sign_of = |v: &FpNum| {
        if v.mant.is_positive() {
            Sign::Positive
        } else if v.mant.is_negative() {
            Sign::Negative
        } else {
            Sign::Unknown
        }
    };
    match x.err_exp {
        None => sign_of(&x.val),
        Some(err) if !x.val.is_zero() && x.val.e - 1 > err => sign_of(&x.val),
        Some(_) => Sign::Unknown,
    }
}

/// Significant digits with which `approx` approximates `exact`: the
/// largest `s` with `|approx − exact| < 2^{e−s−1}` where
/// `2^e ≤ |exact| < 2^{e+1}`. `None` when they are equal; `exact` must be
/// nonzero.
pub fn significant_digits(approx: &Dyadic, exact: &Dyadic) -> Option<i64> {
    let e = exact
        .exponent()
        .expect("significant digits of zero are undefined")
        - 1;
    let diff = approx.sub(exact);
    diff.exponent().map(|d| e - 1 - d)
}
