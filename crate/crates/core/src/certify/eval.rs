//! Evaluation of the matrix implied by a chain without multiplying it out:
//! residues modulo a fixed modulus, floating-point enclosures, and the
//! precision budget and bit-size meter used by the verifier.

use std::cell::Cell;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::compose::{b0_matrix_with, kron, BiMat, Chain, ChainStep, COLUMN_PAIRS, COMPOSITION_SIZE_CONSTANT};
use crate::error::{Error, Result};
use crate::floatp::{enc_add, enc_div_int, enc_mul, enc_mul_int, Dyadic, Enclosure, FpFormat};
use crate::forms::{QForm, RealDet};
use crate::matrix::{Mat2, UniMat};
use crate::numtheory::{crt, int_length, mod_inverse, split_modulus};

/// Exponent bound `N` of the floating-point format used by certificates.
pub const FP_EXPONENT_BOUND: i64 = 1 << 48;

/// Largest precision a certificate may request.
pub const MAX_FP_PRECISION: u32 = 1 << 24;

/// Records the largest bit length of any stored intermediate value.
#[derive(Debug, Default)]
pub(crate) struct BitMeter {
    peak: Cell<u64>,
}

impl BitMeter {
    pub(crate) fn observe_bits(&self, bits: u64) {
        if bits > self.peak.get() {
            self.peak.set(bits);
        }
    }

    pub(crate) fn observe(&self, x: &BigInt) {
        self.observe_bits(x.bits());
    }

    pub(crate) fn observe_mat(&self, m: &Mat2) {
        m.entries().into_iter().for_each(|x| self.observe(x));
    }

    pub(crate) fn observe_form(&self, q: &QForm) {
        [&q.a, &q.b, &q.c].into_iter().for_each(|x| self.observe(x));
    }

    pub(crate) fn observe_chain(&self, chain: &Chain) {
        for q in chain.forms() {
            self.observe_form(q);
        }
        for step in chain.steps() {
            match step {
                ChainStep::Transform(s) => self.observe_mat(s.mat()),
                ChainStep::Compose { bilinear, .. } => bilinear.entries().for_each(|x| self.observe(x)),
            }
        }
    }

    pub(crate) fn peak(&self) -> u64 {
        self.peak.get()
    }
}

/// The matrix `V_K mod m` of a replayed chain. Compose steps split `m`
/// into factors coprime to the six column-pair minors and recombine the
/// per-factor solutions by the Chinese remainder theorem.
pub(crate) fn chain_residues(det: &RealDet, chain: &Chain, m: &BigInt, meter: &BitMeter) -> Result<Mat2> {
    let b0 = b0_matrix_with(det);
    let mut mats = vec![Mat2::identity().reduce_mod(m)];
    for step in chain.steps() {
        let next = match step {
            ChainStep::Transform(s) => mats.last().expect("nonempty").mul_mod(s.mat(), m),
            ChainStep::Compose { left, right, bilinear } => {
                compose_residue(&b0, bilinear, &mats[*left], &mats[*right], m)?
            }
        };
        meter.observe_mat(&next);
        mats.push(next);
    }
    Ok(mats.pop().expect("nonempty"))
}

fn compose_residue(b0: &BiMat, b: &BiMat, v1: &Mat2, v2: &Mat2, m: &BigInt) -> Result<Mat2> {
    let minors = b.minors();
    let parts = split_modulus(m, &minors)?;
    let rhs = b0.right_mul(&kron(v1, v2));
    let mut moduli = Vec::new();
    let mut residues: [Vec<BigInt>; 4] = Default::default();
    for (t, &(i, j)) in COLUMN_PAIRS.iter().enumerate() {
        let part = &parts[t];
        if part.is_one() {
            continue;
        }
        let inv = mod_inverse(&minors[t], part)
            .ok_or_else(|| Error::internal("split factor is not coprime to its minor"))?;
        let local = (&rhs.columns(i, j) * &b.columns(i, j).adjugate()).map(|x| (x * &inv).mod_floor(part));
        for (slot, x) in residues.iter_mut().zip(local.entries()) {
            slot.push(x.clone());
        }
        moduli.push(part.clone());
    }
    if moduli.is_empty() {
        return Ok(Mat2::from_i64([[0, 0], [0, 0]]));
    }
    let [r0, r1, r2, r3] = &residues;
    Ok(Mat2::new(crt(r0, &moduli)?, crt(r1, &moduli)?, crt(r2, &moduli)?, crt(r3, &moduli)?))
}

/// A 2×2 matrix of enclosures.
pub(crate) type EncMat = [[Enclosure; 2]; 2];

/// Floating-point evaluation in a fixed format, metering stored mantissas.
pub(crate) struct FpEval<'a> {
    format: FpFormat,
    meter: &'a BitMeter,
}

impl<'a> FpEval<'a> {
    pub(crate) fn new(precision: u32, meter: &'a BitMeter) -> Result<Self> {
        Ok(FpEval { format: FpFormat::new(precision, FP_EXPONENT_BOUND)?, meter })
    }

    fn keep(&self, e: Enclosure) -> Enclosure {
        self.meter.observe_bits(e.val.stored_bits());
        e
    }

    pub(crate) fn int(&self, n: &BigInt) -> Result<Enclosure> {
        Ok(self.keep(Enclosure::from_int(n, self.format)?))
    }

    pub(crate) fn add(&self, x: &Enclosure, y: &Enclosure) -> Result<Enclosure> {
        Ok(self.keep(enc_add(x, y)?))
    }

    pub(crate) fn mul(&self, x: &Enclosure, y: &Enclosure) -> Result<Enclosure> {
        Ok(self.keep(enc_mul(x, y)?))
    }

    pub(crate) fn mul_int(&self, x: &Enclosure, n: &BigInt) -> Result<Enclosure> {
        Ok(self.keep(enc_mul_int(x, n)?))
    }

    /// `Σ xᵢ·nᵢ` with every product formed before any addition.
    fn dot_int(&self, xs: &[&Enclosure], ns: &[&BigInt]) -> Result<Enclosure> {
        let products = xs.iter().zip(ns).map(|(x, n)| self.mul_int(x, n)).collect::<Result<Vec<_>>>()?;
        self.sum(&products)
    }

    fn sum(&self, terms: &[Enclosure]) -> Result<Enclosure> {
        let mut acc = terms[0].clone();
        for t in &terms[1..] {
            acc = self.add(&acc, t)?;
        }
        Ok(acc)
    }

    pub(crate) fn identity(&self) -> Result<EncMat> {
        self.from_mat(&Mat2::identity())
    }

    pub(crate) fn from_mat(&self, m: &Mat2) -> Result<EncMat> {
        let e = |r: usize, c: usize| self.int(m.at(r, c));
        Ok([[e(0, 0)?, e(0, 1)?], [e(1, 0)?, e(1, 1)?]])
    }

    /// `V·S` for an exact integer matrix `S`.
    pub(crate) fn mul_exact(&self, v: &EncMat, s: &Mat2) -> Result<EncMat> {
        let entry = |r: usize, c: usize| self.dot_int(&[&v[r][0], &v[r][1]], &[s.at(0, c), s.at(1, c)]);
        Ok([[entry(0, 0)?, entry(0, 1)?], [entry(1, 0)?, entry(1, 1)?]])
    }

    /// Product of two enclosure matrices.
    pub(crate) fn mat_mul(&self, x: &EncMat, y: &EncMat) -> Result<EncMat> {
        let entry = |r: usize, c: usize| -> Result<Enclosure> {
            let p = self.mul(&x[r][0], &y[0][c])?;
            let q = self.mul(&x[r][1], &y[1][c])?;
            self.add(&p, &q)
        };
        Ok([[entry(0, 0)?, entry(0, 1)?], [entry(1, 0)?, entry(1, 1)?]])
    }

    /// `x^k` by binary powering.
    pub(crate) fn mat_pow(&self, x: &EncMat, k: &BigInt) -> Result<EncMat> {
        let mut acc = self.identity()?;
        let mut base = x.clone();
        let bits = k.bits();
        for i in 0..bits {
            if k.bit(i) {
                acc = self.mat_mul(&acc, &base)?;
            }
            if i + 1 < bits {
                base = self.mat_mul(&base, &base)?;
            }
        }
        Ok(acc)
    }

    pub(crate) fn neg(&self, x: &EncMat) -> EncMat {
        [[x[0][0].neg(), x[0][1].neg()], [x[1][0].neg(), x[1][1].neg()]]
    }

    /// Enclosure of the matrix implied by a replayed chain.
    pub(crate) fn chain(&self, det: &RealDet, chain: &Chain) -> Result<EncMat> {
        let b0 = b0_matrix_with(det);
        let mut mats = vec![self.identity()?];
        for step in chain.steps() {
            let next = match step {
                ChainStep::Transform(s) => self.mul_exact(mats.last().expect("nonempty"), s.mat())?,
                ChainStep::Compose { left, right, bilinear } => {
                    self.compose(&b0, bilinear, &mats[*left], &mats[*right])?
                }
            };
            mats.push(next);
        }
        Ok(mats.pop().expect("nonempty"))
    }

    /// `S₃ = R_ij · adj(B_ij) / det(B_ij)` with `R = B₀(V₁ ⊗ V₂)`, using the
    /// column pair whose minor is largest in absolute value.
    fn compose(&self, b0: &BiMat, b: &BiMat, v1: &EncMat, v2: &EncMat) -> Result<EncMat> {
        let (i, j) = COLUMN_PAIRS
            .iter()
            .copied()
            .max_by_key(|&(i, j)| b.minor(i, j).abs())
            .expect("six column pairs");
        let det = b.minor(i, j);
        if det.is_zero() {
            return Err(Error::invalid("bilinear matrix has no invertible column pair"));
        }
        // Column `col` of V₁ ⊗ V₂, rows indexed by 2·r₁ + r₂.
        let kron_col = |col: usize| -> Result<Vec<Enclosure>> {
            let (c1, c2) = (col / 2, col % 2);
            (0..4).map(|row| self.mul(&v1[row / 2][c1], &v2[row % 2][c2])).collect()
        };
        let (ki, kj) = (kron_col(i)?, kron_col(j)?);
        let r_entry = |r: usize, k: &[Enclosure]| -> Result<Enclosure> {
            let coeffs: Vec<&BigInt> = b0.rows[r].iter().collect();
            self.dot_int(&k.iter().collect::<Vec<_>>(), &coeffs)
        };
        let r = [[r_entry(0, &ki)?, r_entry(0, &kj)?], [r_entry(1, &ki)?, r_entry(1, &kj)?]];
        let adj = b.columns(i, j).adjugate();
        let entry = |row: usize, c: usize| -> Result<Enclosure> {
            let num = self.dot_int(&[&r[row][0], &r[row][1]], &[adj.at(0, c), adj.at(1, c)])?;
            Ok(self.keep(enc_div_int(&num, &det)?))
        };
        Ok([[entry(0, 0)?, entry(0, 1)?], [entry(1, 0)?, entry(1, 1)?]])
    }

    /// `(w₁ + λw₂, w₂)` with `w = W·(s₂₂, −s₂₁)`.
    pub(crate) fn representation_column(
        &self,
        w: &EncMat,
        s: &UniMat,
        lam: &BigInt,
    ) -> Result<(Enclosure, Enclosure)> {
        let col = [s.mat().at(1, 1).clone(), -s.mat().at(1, 0)];
        let w1 = self.dot_int(&[&w[0][0], &w[0][1]], &[&col[0], &col[1]])?;
        let w2 = self.dot_int(&[&w[1][0], &w[1][1]], &[&col[0], &col[1]])?;
        let shifted = self.mul_int(&w2, lam)?;
        Ok((self.add(&w1, &shifted)?, w2))
    }

    /// `Σ xᵢ·nᵢ + constant` with products first.
    pub(crate) fn affine(&self, xs: &[&Enclosure], ns: &[&BigInt], constant: &BigInt) -> Result<Enclosure> {
        let mut terms = xs.iter().zip(ns).map(|(x, n)| self.mul_int(x, n)).collect::<Result<Vec<_>>>()?;
        terms.push(self.int(constant)?);
        self.sum(&terms)
    }
}

/// The integer an enclosure pins down: its error is below `1/4` and its
/// value lies within `1/4` of an integer, so the enclosed integer is unique.
pub(crate) fn pinned_integer(e: &Enclosure) -> Option<BigInt> {
    let pinned_error = match e.err_exp {
        None => true,
        Some(err) => err <= -2,
    };
    // Values wider than the working precision are left to the enclosure
    // path so that huge integers are never materialized.
    if !pinned_error || e.val.exponent() > i64::from(e.val.format().precision) + 64 {
        return None;
    }
    let value = e.val.to_dyadic();
    let nearest = round_nearest(&value);
    let distance = value.sub(&Dyadic::from_int(nearest.clone()));
    match e.err_exp {
        None => distance.is_zero().then_some(nearest),
        Some(err) if err <= -2 => distance.abs_below_pow2(-2).then_some(nearest),
        Some(_) => None,
    }
}

fn round_nearest(x: &Dyadic) -> BigInt {
    if x.exp >= 0 {
        return &x.mant << (x.exp as u64);
    }
    let shift = (-x.exp) as u64;
    let half = BigInt::one() << (shift - 1);
    (&x.mant + half).div_floor(&(BigInt::one() << shift))
}

/// The precision a certificate must carry: a fixed margin, the loss of each
/// chain step, the loss of powering to exponent `k`, and the cancellation
/// when the solution column is extracted and mapped back to `x`.
pub(crate) fn precision_budget(
    det: &RealDet,
    chain_steps: &[&[ChainStep]],
    k: &BigInt,
    s: &UniMat,
    q0: &QForm,
    size: &BigInt,
) -> u64 {
    let d = det.value();
    let lam = det.root_floor();
    let length = int_length(d) as f64;
    let compose_loss = ((2.0 * COMPOSITION_SIZE_CONSTANT + 8.0) * length + 24.0).ceil() as u64;
    let mut total = 64u64;
    for steps in chain_steps {
        for step in steps.iter() {
            total += match step {
                ChainStep::Transform(t) => t.norm().bits() + 4,
                ChainStep::Compose { .. } => compose_loss,
            };
        }
    }
    total += 8 * (k.bits() + 2);
    let extraction = (lam + 2u32) * (lam + 2u32) * 4u32 * s.norm() * (d + q0.b.abs() + 1u32);
    let mapping = (size + 1u32) * (lam + 2u32) * 2u32;
    total + int_length(&extraction) + 2 * int_length(&mapping) + 16
}
