//! Small exact integer matrices: 2×2 matrices and the unimodular newtype
//! used for form equivalences.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A 2×2 integer matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat2 {
    /// Rows `[[m11, m12], [m21, m22]]`.
    pub rows: [[BigInt; 2]; 2],
}

impl Mat2 {
    /// Builds a matrix from its four entries in row-major order.
    pub fn new(m11: BigInt, m12: BigInt, m21: BigInt, m22: BigInt) -> Self {
        Mat2 {
            rows: [[m11, m12], [m21, m22]],
        }
    }

    /// Builds a matrix from small entries.
    pub fn from_i64(m: [[i64; 2]; 2]) -> Self {
        Mat2::new(
            m[0][0].into(),
            m[0][1].into(),
            m[1][0].into(),
            m[1][1].into(),
        )
    }

    /// The identity matrix.
    pub fn identity() -> Self {
        Mat2::from_i64([[1, 0], [0, 1]])
    }

    /// Entry at (row, column), zero-based.
    pub fn at(&self, r: usize, c: usize) -> &BigInt {
        &self.rows[r][c]
    }

    /// Determinant.
    pub fn det(&self) -> BigInt {
        &self.rows[0][0] * &self.rows[1][1] - &self.rows[0][1] * &self.rows[1][0]
    }

    /// Adjugate, so that `M · adj(M) = det(M) · I`.
    pub fn adjugate(&self) -> Self {
        let [[a, b], [c, d]] = &self.rows;
        Mat2::new(d.clone(), -b, -c, a.clone())
    }

    /// Transpose.
    pub fn transpose(&self) -> Self {
        let [[a, b], [c, d]] = &self.rows;
        Mat2::new(a.clone(), c.clone(), b.clone(), d.clone())
    }

    /// Entrywise negation.
    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    /// Applies `f` to every entry.
    pub fn map(&self, f: impl Fn(&BigInt) -> BigInt) -> Self {
        let [[a, b], [c, d]] = &self.rows;
        Mat2::new(f(a), f(b), f(c), f(d))
    }

    /// Entries reduced into `[0, m)`.
    pub fn reduce_mod(&self, m: &BigInt) -> Self {
        self.map(|x| x.mod_floor(m))
    }

    /// Product reduced modulo `m`.
    pub fn mul_mod(&self, rhs: &Mat2, m: &BigInt) -> Self {
        (self * rhs).reduce_mod(m)
    }

    /// `self^k mod m` by binary powering.
    pub fn pow_mod(&self, k: &BigInt, m: &BigInt) -> Self {
        let mut acc = Mat2::identity().reduce_mod(m);
        let mut base = self.reduce_mod(m);
        let bits = k.bits();
        for i in 0..bits {
            if k.bit(i) {
                acc = acc.mul_mod(&base, m);
            }
            if i + 1 < bits {
                base = base.mul_mod(&base, m);
            }
        }
        acc
    }

    /// Exact power `self^k`.
    pub fn pow(&self, k: u64) -> Self {
        let mut acc = Mat2::identity();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Maximum absolute entry.
    pub fn norm(&self) -> BigInt {
        self.rows
            .iter()
            .flatten()
            .map(|x| x.abs())
            .max()
            .unwrap_or_default()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[BigInt; 2]) -> [BigInt; 2] {
        [
            &self.rows[0][0] * &v[0] + &self.rows[0][1] * &v[1],
            &self.rows[1][0] * &v[0] + &self.rows[1][1] * &v[1],
        ]
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> [&BigInt; 4] {
        [
            &self.rows[0][0],
            &self.rows[0][1],
            &self.rows[1][0],
            &self.rows[1][1],
        ]
    }
}

impl Mul for &Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: &Mat2) -> Mat2 {
        let a = &self.rows;
        let b = &rhs.rows;
        Mat2::new(
            &a[0][0] * &b[0][0] + &a[0][1] * &b[1][0],
            &a[0][0] * &b[0][1] + &a[0][1] * &b[1][1],
            &a[1][0] * &b[0][0] + &a[1][1] * &b[1][0],
            &a[1][0] * &b[0][1] + &a[1][1] * &b[1][1],
        )
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[a, b], [c, d]] = &self.rows;
        write!(f, "[[{a},{b}],[{c},{d}]]")
    }
}

/// A 2×2 integer matrix of determinant `+1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UniMat(Mat2);

impl UniMat {
    /// Wraps a matrix, checking that its determinant is `+1`.
    pub fn new(m: Mat2) -> Result<Self> {
        if m.det().is_one() {
            Ok(UniMat(m))
        } else {
            Err(Error::domain(format!(
                "matrix {m} does not have determinant 1"
            )))
        }
    }

    /// Wraps small entries, checking the determinant.
    pub fn from_i64(m: [[i64; 2]; 2]) -> Result<Self> {
        UniMat::new(Mat2::from_i64(m))
    }

    /// The identity.
    pub fn identity() -> Self {
        UniMat(Mat2::identity())
    }

    /// The translation `[[1, n], [0, 1]]`.
    pub fn translation(n: BigInt) -> Self {
        UniMat(Mat2::new(BigInt::one(), n, BigInt::zero(), BigInt::one()))
    }

    /// The step `[[0, 1], [-1, n]]` between neighbouring reduced forms.
    pub fn neighbor_step(n: BigInt) -> Self {
        UniMat(Mat2::new(BigInt::zero(), BigInt::one(), -BigInt::one(), n))
    }

    /// The underlying matrix.
    pub fn mat(&self) -> &Mat2 {
        &self.0
    }

    /// Consumes the wrapper.
    pub fn into_mat(self) -> Mat2 {
        self.0
    }

    /// Inverse, which is the adjugate since the determinant is one.
    pub fn inverse(&self) -> Self {
        UniMat(self.0.adjugate())
    }

    /// Negation (still determinant one).
    pub fn neg(&self) -> Self {
        UniMat(self.0.neg())
    }

    /// Maximum absolute entry.
    pub fn norm(&self) -> BigInt {
        self.0.norm()
    }
}

impl Mul for &UniMat {
    type Output = UniMat;
    fn mul(self, rhs: &UniMat) -> UniMat {
        UniMat(&self.0 * &rhs.0)
    }
}

impl fmt::Display for UniMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
