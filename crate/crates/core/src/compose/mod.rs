//! Composition of properly primitive indefinite forms with explicit 2×4
//! bilinear matrices, the transport of equivalence matrices through a
//! composition, and chains of neighbour and composition steps that reach a
//! cycle position in logarithmically many steps.

mod chain;

pub use chain::{doubling_chain, Chain, ChainBuilder, ChainStep, CHAIN_LENGTH_CONSTANT};

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::forms::{reduce_with, QForm, RealDet};
use crate::matrix::{Mat2, UniMat};
use crate::numtheory::crt;

/// Measured size constant for composition matrices:
/// `log₂‖B‖ ≤ COMPOSITION_SIZE_CONSTANT · (1 + log₂ D)`. The worst observed
/// ratio over random reduced pairs with D ≤ 10⁵ is about 0.77.
pub const COMPOSITION_SIZE_CONSTANT: f64 = 1.0;

/// Column pairs `(i, j)`, zero-based, in the order 12, 13, 14, 23, 24, 34.
pub const COLUMN_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// A 4×4 integer matrix.
pub type Mat4 = [[BigInt; 4]; 4];

/// A 2×4 integer matrix relating `z = x ⊗ y` to the composite variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BiMat {
    /// The two rows.
    pub rows: [[BigInt; 4]; 2],
}

impl BiMat {
    /// Builds a bilinear matrix from its rows.
    pub fn new(rows: [[BigInt; 4]; 2]) -> Self {
        BiMat { rows }
    }

    /// Builds a bilinear matrix from small entries.
    pub fn from_i64(rows: [[i64; 4]; 2]) -> Self {
        BiMat { rows: rows.map(|r| r.map(BigInt::from)) }
    }

    /// The 2×2 submatrix formed by columns `i` and `j`.
    pub fn columns(&self, i: usize, j: usize) -> Mat2 {
        Mat2::new(
            self.rows[0][i].clone(),
            self.rows[0][j].clone(),
            self.rows[1][i].clone(),
            self.rows[1][j].clone(),
        )
    }

    /// Determinant of columns `i, j`.
    pub fn minor(&self, i: usize, j: usize) -> BigInt {
        &self.rows[0][i] * &self.rows[1][j] - &self.rows[0][j] * &self.rows[1][i]
    }

    /// The six 2×2 minors in the order of [`COLUMN_PAIRS`].
    pub fn minors(&self) -> [BigInt; 6] {
        COLUMN_PAIRS.map(|(i, j)| self.minor(i, j))
    }

    /// Whether the six minors are coprime.
    pub fn is_unimodular(&self) -> bool {
        self.minors().iter().fold(BigInt::zero(), |g, m| g.gcd(m)).is_one()
    }

    /// Entrywise negation; the minors are unchanged.
    pub fn neg(&self) -> Self {
        BiMat { rows: self.rows.clone().map(|r| r.map(|x| -x)) }
    }

    /// Left multiplication by a 2×2 matrix.
    pub fn left_mul(&self, m: &Mat2) -> Self {
        let mut rows: [[BigInt; 4]; 2] = Default::default();
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = m.at(r, 0) * &self.rows[0][c] + m.at(r, 1) * &self.rows[1][c];
            }
        }
        BiMat { rows }
    }

    /// Right multiplication by a 4×4 matrix.
    pub fn right_mul(&self, m: &Mat4) -> Self {
        let mut rows: [[BigInt; 4]; 2] = Default::default();
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = (0..4).map(|k| &self.rows[r][k] * &m[k][c]).sum();
            }
        }
        BiMat { rows }
    }

    /// Largest absolute entry.
    pub fn norm(&self) -> BigInt {
        self.rows.iter().flatten().map(|x| x.abs()).max().unwrap_or_default()
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = &BigInt> {
        self.rows.iter().flatten()
    }
}

impl fmt::Display for BiMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r1, r2] = &self.rows;
        write!(f, "[[{},{},{},{}],[{},{},{},{}]]", r1[0], r1[1], r1[2], r1[3], r2[0], r2[1], r2[2], r2[3])
    }
}

/// The Kronecker product `S₁ ⊗ S₂`, indexed so that
/// `(S₁x) ⊗ (S₂y) = (S₁ ⊗ S₂)(x ⊗ y)` with `x ⊗ y = (x₁y₁, x₁y₂, x₂y₁, x₂y₂)`.
pub fn kron(s1: &Mat2, s2: &Mat2) -> Mat4 {
    let mut out: Mat4 = Default::default();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = s1.at(i, j) * s2.at(k, l);
                }
            }
        }
    }
    out
}

/// Why a claimed composition fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompositionFault {
    /// The forms do not share a determinant.
    DeterminantMismatch,
    /// The polynomial identity fails at the named monomial.
    CoefficientMismatch(&'static str),
    /// The six minors have a common factor.
    NotUnimodular,
    /// `a₁Δ₁₂ > 0` or `a₂Δ₁₃ > 0` fails.
    NotOriented,
}

impl fmt::Display for CompositionFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompositionFault::DeterminantMismatch => write!(f, "forms have different determinants"),
            CompositionFault::CoefficientMismatch(m) => write!(f, "identity fails at monomial {m}"),
            CompositionFault::NotUnimodular => write!(f, "bilinear matrix is not unimodular"),
            CompositionFault::NotOriented => write!(f, "bilinear matrix is not oriented"),
        }
    }
}

/// Checks `Q₁(x)·Q₂(y) = Q₃(B(x ⊗ y))` coefficient by coefficient, that `B`
/// is unimodular, and that it is oriented for `(Q₁, Q₂)`.
pub fn verify_composition(
    q1: &QForm,
    q2: &QForm,
    q3: &QForm,
    b: &BiMat,
) -> std::result::Result<(), CompositionFault> {
    let d = q1.determinant();
    if q2.determinant() != d || q3.determinant() != d {
        return Err(CompositionFault::DeterminantMismatch);
    }
    // M = Bᵗ Q₃ B as a symmetric 4×4 matrix.
    let col = |k: usize| (&b.rows[0][k], &b.rows[1][k]);
    let m = |k: usize, l: usize| {
        let (p, r) = col(k);
        let (q, s) = col(l);
        &q3.a * p * q + &q3.b * (p * s + q * r) + &q3.c * r * s
    };
    let two = BigInt::from(2);
    let checks: [(&'static str, BigInt, BigInt); 9] = [
        ("x1^2 y1^2", m(0, 0), &q1.a * &q2.a),
        ("x1^2 y1 y2", &two * m(0, 1), &q1.a * &q2.b * 2),
        ("x1^2 y2^2", m(1, 1), &q1.a * &q2.c),
        ("x1 x2 y1^2", &two * m(0, 2), &q1.b * &q2.a * 2),
        ("x1 x2 y1 y2", &two * (m(0, 3) + m(1, 2)), &q1.b * &q2.b * 4),
        ("x1 x2 y2^2", &two * m(1, 3), &q1.b * &q2.c * 2),
        ("x2^2 y1^2", m(2, 2), &q1.c * &q2.a),
        ("x2^2 y1 y2", &two * m(2, 3), &q1.c * &q2.b * 2),
        ("x2^2 y2^2", m(3, 3), &q1.c * &q2.c),
    ];
    for (name, lhs, rhs) in checks {
        if lhs != rhs {
            return Err(CompositionFault::CoefficientMismatch(name));
        }
    }
    if !b.is_unimodular() {
        return Err(CompositionFault::NotUnimodular);
    }
    if !(&q1.a * b.minor(0, 1)).is_positive() || !(&q2.a * b.minor(0, 2)).is_positive() {
        return Err(CompositionFault::NotOriented);
    }
    Ok(())
}

/// The bilinear matrix `[[1, 0, 0, D − λ²], [0, 1, 1, 2λ]]` composing the
/// reduced identity form with itself.
pub fn b0_matrix(d: &BigInt) -> Result<BiMat> {
    let det = RealDet::new(d)?;
    Ok(b0_matrix_with(&det))
}

pub(crate) fn b0_matrix_with(det: &RealDet) -> BiMat {
    let lam = det.root_floor();
    let zero = BigInt::zero;
    let one = BigInt::one;
    BiMat::new([
        [one(), zero(), zero(), det.value() - lam * lam],
        [zero(), one(), one(), lam * 2],
    ])
}

/// The composite `Q₃` forced by `Q₁`, `Q₂` and `B`: setting `x = (1, 0)`
/// gives `a₁Q₂ = ΔᵗQ₃Δ` with `Δ` the first two columns of `B`.
pub fn derive_composite(q1: &QForm, q2: &QForm, b: &BiMat) -> Result<QForm> {
    let delta = b.columns(0, 1);
    let det = delta.det();
    if det.is_zero() {
        return Err(Error::invalid("first column pair of the bilinear matrix is singular"));
    }
    let scaled = q2.transform_by(&delta.adjugate());
    let denom = &det * &det;
    let parts = [&scaled.a * &q1.a, &scaled.b * &q1.a, &scaled.c * &q1.a];
    if parts.iter().any(|x| !(x % &denom).is_zero()) {
        return Err(Error::invalid("bilinear matrix does not determine an integral composite"));
    }
    let [a, b2, c] = parts.map(|x| x / &denom);
    Ok(QForm { a, b: b2, c })
}

/// A pair `(r, s)`, coprime, with `Q(r, s)` coprime to `m`.
fn coprime_representation(q: &QForm, m: &BigInt) -> (BigInt, BigInt) {
    let good = |r: &BigInt, s: &BigInt| r.gcd(s).is_one() && q.eval(r, s).gcd(m).is_one();
    for size in 1i64..=64 {
        for s in 0..=size {
            for r in -size..=size {
                if r.abs() != size && s != size {
                    continue;
                }
                let (rb, sb) = (BigInt::from(r), BigInt::from(s));
                if good(&rb, &sb) {
                    return (rb, sb);
                }
            }
        }
    }
    // Per prime of m one of (1,0), (0,1), (1,1) works; glue them by CRT and
    // then shift r by multiples of the radical until gcd(r, s) = 1.
    let fact = crate::numtheory::factorize(m).expect("leading coefficients are desk-scale");
    let primes: Vec<BigInt> = fact.factors.iter().map(|(p, _)| p.clone()).collect();
    let mut rs = Vec::new();
    let mut ss = Vec::new();
    for p in &primes {
        let choice = [(1, 0), (0, 1), (1, 1)]
            .into_iter()
            .find(|&(r, s)| !(q.eval(&BigInt::from(r), &BigInt::from(s)) % p).is_zero())
            .expect("a primitive form represents a unit at every prime");
        rs.push(BigInt::from(choice.0));
        ss.push(BigInt::from(choice.1));
    }
    let radical: BigInt = primes.iter().product();
    let r0 = crt(&rs, &primes).expect("distinct primes are coprime");
    let mut s = crt(&ss, &primes).expect("distinct primes are coprime");
    if s.is_zero() {
        s = radical.clone();
    }
    let mut r = r0;
    while !r.gcd(&s).is_one() {
        r += &radical;
    }
    (r, s)
}

/// Completes a primitive column `(r, s)` to a determinant-one matrix.
fn complete_to_unimodular(r: &BigInt, s: &BigInt) -> UniMat {
    let e = r.extended_gcd(s);
    // r·x + s·y = 1, so [[r, −y], [s, x]] has determinant 1.
    let g = e.gcd.clone();
    let (x, y) = if g.is_negative() { (-e.x, -e.y) } else { (e.x, e.y) };
    UniMat::new(Mat2::new(r.clone(), -y, s.clone(), x)).expect("extended gcd gives determinant one")
}

/// Composes two forms with coprime leading coefficients (Dirichlet),
/// returning the unreduced composite and an oriented bilinear matrix.
fn compose_coprime(q1: &QForm, q2: &QForm, d: &BigInt) -> (QForm, BiMat) {
    let (a1, a2) = (&q1.a, &q2.a);
    let b3 = crt(&[q1.b.clone(), q2.b.clone()], &[a1.abs(), a2.abs()]).expect("coprime leading coefficients");
    let a3 = a1 * a2;
    let c3 = (&b3 * &b3 - d) / &a3;
    let t1 = (&b3 - &q1.b) / a1;
    let t2 = (&b3 - &q2.b) / a2;
    let bm = BiMat::new([
        [BigInt::one(), -&t2, -&t1, &t1 * &t2 - &c3],
        [BigInt::zero(), a1.clone(), a2.clone(), &b3 * 2 - a1 * &t1 - a2 * &t2],
    ]);
    (QForm { a: a3, b: b3, c: c3 }, bm)
}

/// Composes two reduced properly primitive forms of the same determinant,
/// returning a reduced composite and an oriented unimodular bilinear matrix.
pub fn compose_reduced(q1: &QForm, q2: &QForm) -> Result<(QForm, BiMat)> {
    let det = RealDet::new(&q1.determinant())?;
    compose_reduced_with(&det, q1, q2)
}

pub(crate) fn compose_reduced_with(det: &RealDet, q1: &QForm, q2: &QForm) -> Result<(QForm, BiMat)> {
    let d = det.value();
    if q2.determinant() != *d {
        return Err(Error::domain("composition needs forms of equal determinant"));
    }
    if !q1.is_properly_primitive() || !q2.is_properly_primitive() {
        return Err(Error::domain("composition needs properly primitive forms"));
    }
    if q1.a.is_zero() || q2.a.is_zero() {
        return Err(Error::domain("composition needs nonzero leading coefficients"));
    }
    let (q3, bm) = if q1.a.gcd(&q2.a).is_one() {
        compose_coprime(q1, q2, d)
    } else {
        let (r, s) = coprime_representation(q2, &q1.a);
        let t = complete_to_unimodular(&r, &s);
        let q2t = q2.transform_by(t.mat());
        let (q3, inner) = compose_coprime(q1, &q2t, d);
        // Q₂(y) = Q₂ᵗ(T⁻¹y), so B = B'(I ⊗ T⁻¹).
        let outer = kron(&Mat2::identity(), t.inverse().mat());
        (q3, inner.right_mul(&outer))
    };
    let (reduced, s) = reduce_with(det, &q3);
    // Q₃(w) = Q_red(S⁻¹w), so the matrix becomes S⁻¹B.
    let bm = bm.left_mul(s.inverse().mat());
    if let Err(fault) = verify_composition(q1, q2, &reduced, &bm) {
        return Err(Error::internal(format!("composition of {q1} and {q2} failed: {fault}")));
    }
    Ok((reduced, bm))
}

/// Solves `S₃B = B₀(S₁ ⊗ S₂)` exactly for the integer matrix `S₃`.
pub fn solve_s3(b: &BiMat, b0: &BiMat, s1: &Mat2, s2: &Mat2) -> Result<UniMat> {
    let rhs = b0.right_mul(&kron(s1, s2));
    let (i, j) = COLUMN_PAIRS
        .iter()
        .copied()
        .filter(|&(i, j)| !b.minor(i, j).is_zero())
        .min_by_key(|&(i, j)| b.minor(i, j).abs())
        .ok_or_else(|| Error::internal("bilinear matrix has no invertible column pair"))?;
    let det = b.minor(i, j);
    let num = &rhs.columns(i, j) * &b.columns(i, j).adjugate();
    if num.entries().iter().any(|x| !(*x % &det).is_zero()) {
        return Err(Error::invalid("S3 is not integral"));
    }
    let s3 = num.map(|x| x / &det);
    if b.left_mul(&s3) != rhs {
        return Err(Error::invalid("S3 does not satisfy the transport identity"));
    }
    UniMat::new(s3).map_err(|_| Error::invalid("S3 does not have determinant one"))
}
