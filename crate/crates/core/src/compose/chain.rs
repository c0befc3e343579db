//! Chains of reduced forms starting at the reduced identity form. Each new
//! entry is either a small unimodular transform of the previous entry or the
//! composite of two earlier entries, so a far cycle position is reached in
//! polylogarithmically many entries while every step stays checkable from
//! short integers.

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::{b0_matrix_with, compose_reduced_with, derive_composite, kron, solve_s3, verify_composition, BiMat, COLUMN_PAIRS};
use crate::error::{Error, Result};
use crate::forms::{reduced_identity, Cycle, QForm, RealDet};
use crate::matrix::{Mat2, UniMat};
use crate::numtheory::{mod_inverse, modp};

/// Measured length constant: a chain to any index `j ≤ 2p` has at most
/// `CHAIN_LENGTH_CONSTANT · (1 + log₂ D)²` steps. The worst observed ratio
/// over random targets with D ≤ 10⁶ is about 0.09.
pub const CHAIN_LENGTH_CONSTANT: f64 = 0.5;

/// Base indices are reached by walking from the identity entry.
const WALK_BASE: usize = 4;

/// One chain step; the new entry is appended after the existing ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainStep {
    /// `Q̃ₖ₊₁ = SᵗQ̃ₖS` for a small determinant-one `S`.
    Transform(UniMat),
    /// `Q̃ₖ₊₁` is the composite of entries `left` and `right` via `bilinear`.
    Compose {
        /// Index of the first factor entry.
        left: usize,
        /// Index of the second factor entry.
        right: usize,
        /// Oriented unimodular bilinear matrix of the composition.
        bilinear: BiMat,
    },
}

/// A checked chain: entry 0 is the reduced identity form and every further
/// entry is reduced and justified by its step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    steps: Vec<ChainStep>,
    forms: Vec<QForm>,
}

/// Largest entry allowed in a transform step: `4D + 4`.
fn transform_bound(det: &RealDet) -> BigInt {
    det.value() * 4 + 4
}

impl Chain {
    /// Re-derives every entry from the steps, checking each against the
    /// short formulas. Failures are `CertificateInvalid`.
    pub fn from_steps(det: &RealDet, steps: Vec<ChainStep>) -> Result<Chain> {
        let (start, _) = reduced_identity(det.value())?;
        let mut forms = vec![start];
        let bound = transform_bound(det);
        for (k, step) in steps.iter().enumerate() {
            let next = match step {
                ChainStep::Transform(s) => {
                    if s.norm() > bound {
                        return Err(Error::invalid(format!("chain step {} transform is too large", k + 1)));
                    }
                    forms[k].transform_by(s.mat())
                }
                ChainStep::Compose { left, right, bilinear } => {
                    if *left > k || *right > k {
                        return Err(Error::invalid(format!("chain step {} refers to a later entry", k + 1)));
                    }
                    let (q1, q2) = (&forms[*left], &forms[*right]);
                    let q3 = derive_composite(q1, q2, bilinear)?;
                    verify_composition(q1, q2, &q3, bilinear)
                        .map_err(|fault| Error::invalid(format!("chain step {}: {fault}", k + 1)))?;
                    q3
                }
            };
            if !det.is_reduced(&next) {
                return Err(Error::invalid(format!("chain entry {} is not reduced", k + 1)));
            }
            forms.push(next);
        }
        Ok(Chain { steps, forms })
    }

    /// The steps.
    pub fn steps(&self) -> &[ChainStep] {
        &self.steps
    }

    /// Entries `Q̃₀ … Q̃_K`.
    pub fn forms(&self) -> &[QForm] {
        &self.forms
    }

    /// Number of steps `K`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// Whether the chain has no steps.
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The last entry.
    pub fn endpoint(&self) -> &QForm {
        self.forms.last().expect("a chain has its start entry")
    }

    /// Number of transform and compose steps.
    pub fn step_counts(&self) -> (usize, usize) {
        let compose = self.steps.iter().filter(|s| matches!(s, ChainStep::Compose { .. })).count();
        (self.steps.len() - compose, compose)
    }

    /// The exact equivalence matrices `V₀ … V_K` with `Vₖ` carrying the
    /// reduced identity form to entry `k`. Sizes grow with the cycle index,
    /// so this is meant for small determinants.
    pub fn exact_matrices(&self, det: &RealDet) -> Result<Vec<UniMat>> {
        let b0 = b0_matrix_with(det);
        let mut mats = vec![UniMat::identity()];
        for step in &self.steps {
            let next = match step {
                ChainStep::Transform(s) => mats.last().expect("nonempty") * s,
                ChainStep::Compose { left, right, bilinear } => {
                    solve_s3(bilinear, &b0, mats[*left].mat(), mats[*right].mat())?
                }
            };
            mats.push(next);
        }
        Ok(mats)
    }

    /// The exact matrix `V_K` for the endpoint.
    pub fn multiply_out(&self, det: &RealDet) -> Result<UniMat> {
        Ok(self.exact_matrices(det)?.pop().expect("nonempty"))
    }
}

/// Fingerprint modulus `(2⁶¹ − 1)(2³¹ − 1)` used to identify which cycle
/// index a composite lands on during construction.
fn fingerprint_modulus() -> BigInt {
    ((BigInt::one() << 61u32) - 1u32) * ((BigInt::one() << 31u32) - 1u32)
}

/// Plans chains to positions of one principal cycle.
pub struct ChainBuilder<'a> {
    cycle: &'a Cycle,
    b0: BiMat,
    fp_mod: BigInt,
    log_norms: Vec<f64>,
    prefix_fp: Vec<Mat2>,
    full_fp: Mat2,
    full_inv_fp: Mat2,
}

struct Entry {
    index: i64,
    fp: Mat2,
}

struct Draft {
    steps: Vec<ChainStep>,
    entries: Vec<Entry>,
}

impl<'a> ChainBuilder<'a> {
    /// Precomputes log-norms of `L_i` and fingerprints for `0 ≤ i ≤ 2p`.
    pub fn new(cycle: &'a Cycle) -> Self {
        let fp_mod = fingerprint_modulus();
        let mut prefix_fp = vec![Mat2::identity()];
        for (s, _) in cycle.steps() {
            let next = prefix_fp.last().expect("nonempty").mul_mod(s.mat(), &fp_mod);
            prefix_fp.push(next);
        }
        let full_fp = prefix_fp.last().expect("nonempty").clone();
        let full_inv_fp = full_fp.adjugate().reduce_mod(&fp_mod);
        ChainBuilder {
            cycle,
            b0: b0_matrix_with(cycle.real_det()),
            fp_mod,
            log_norms: log_norms(cycle),
            prefix_fp,
            full_fp,
            full_inv_fp,
        }
    }

    /// `log₂‖L_i‖` for `0 ≤ i ≤ 2p`, tracked in scaled floating point. The
    /// entries of `L_i` are sums of same-sign products, so the relative error
    /// stays near machine precision.
    pub fn log_norm(&self, i: usize) -> f64 {
        self.log_norms[i]
    }

    /// A chain whose endpoint is the cycle form at `target` (`0 ≤ target ≤
    /// 2p`) and whose implicit matrix product is exactly `L_target`.
    pub fn build(&self, target: usize) -> Result<Chain> {
        let period = self.cycle.period();
        if target > period {
            return Err(Error::domain(format!("chain target {target} exceeds the period {period}")));
        }
        let mut draft = Draft {
            steps: Vec::new(),
            entries: vec![Entry { index: 0, fp: Mat2::identity() }],
        };
        let k = self.reach(&mut draft, target as i64)?;
        debug_assert_eq!(k + 1, draft.entries.len());
        if draft.entries[k].index != target as i64 {
            return Err(Error::internal("chain construction missed its target"));
        }
        Chain::from_steps(self.cycle.real_det(), draft.steps)
    }

    /// Appends entries until one sits at `target`; returns its position.
    fn reach(&self, draft: &mut Draft, target: i64) -> Result<usize> {
        if target <= WALK_BASE as i64 {
            return Ok(self.walk(draft, 0, target));
        }
        let goal = self.log_norms[target as usize] / 2.0;
        let half = self.log_norms.partition_point(|&l| l <= goal).saturating_sub(1);
        if half <= WALK_BASE / 2 {
            return Ok(self.walk(draft, 0, target));
        }
        let k_half = self.reach(draft, half as i64)?;
        let k_sq = self.square(draft, k_half)?;
        Ok(self.walk(draft, k_sq, target))
    }

    /// Appends neighbour or inverse-neighbour transforms from entry `from`.
    fn walk(&self, draft: &mut Draft, from: usize, target: i64) -> usize {
        let mut k = from;
        let mut index = draft.entries[from].index;
        while index != target {
            let (s, next_index) = if index < target {
                (self.cycle.step(wrap(index + 1, self.cycle.period())).0.clone(), index + 1)
            } else {
                (self.cycle.step(wrap(index, self.cycle.period())).0.inverse(), index - 1)
            };
            let fp = draft.entries[k].fp.mul_mod(s.mat(), &self.fp_mod);
            draft.steps.push(ChainStep::Transform(s));
            draft.entries.push(Entry { index: next_index, fp });
            k = draft.entries.len() - 1;
            index = next_index;
        }
        k
    }

    /// Appends the composite of entry `k` with itself, signed so that the
    /// transported matrix is `+L_n`.
    fn square(&self, draft: &mut Draft, k: usize) -> Result<usize> {
        let q = self.cycle.form(draft.entries[k].index);
        let (q3, mut bilinear) = compose_reduced_with(self.cycle.real_det(), q, q)?;
        let position = self
            .cycle
            .position(&q3)
            .ok_or_else(|| Error::internal(format!("composite {q3} left the principal cycle")))?;
        let s3_fp = self.transport_fp(&bilinear, &draft.entries[k].fp, &draft.entries[k].fp)?;
        let estimate = 2 * draft.entries[k].index;
        let (index, negated) = self.locate(&s3_fp, position, estimate)?;
        if negated {
            bilinear = bilinear.neg();
        }
        let fp = self.l_fp(index);
        draft.steps.push(ChainStep::Compose { left: k, right: k, bilinear });
        draft.entries.push(Entry { index, fp });
        Ok(draft.entries.len() - 1)
    }

    /// `S₃ = R_ij · adj(B_ij) / det(B_ij)` modulo the fingerprint modulus.
    fn transport_fp(&self, b: &BiMat, v1: &Mat2, v2: &Mat2) -> Result<Mat2> {
        let rhs = self.b0.right_mul(&kron(v1, v2));
        for (i, j) in COLUMN_PAIRS {
            let det = b.minor(i, j);
            if let Some(inv) = mod_inverse(&det, &self.fp_mod) {
                let num = rhs.columns(i, j).mul_mod(&b.columns(i, j).adjugate(), &self.fp_mod);
                return Ok(num.map(|x| modp(&(x * &inv), &self.fp_mod)));
            }
        }
        Err(Error::internal("no column pair is invertible modulo the fingerprint modulus"))
    }

    /// `L_n` modulo the fingerprint modulus for any integer `n`.
    fn l_fp(&self, n: i64) -> Mat2 {
        let period = self.cycle.period() as i64;
        let q = n.div_euclid(period);
        let r = n.rem_euclid(period) as usize;
        let base = if q >= 0 { &self.full_fp } else { &self.full_inv_fp };
        base.pow_mod(&BigInt::from(q.unsigned_abs()), &self.fp_mod).mul_mod(&self.prefix_fp[r], &self.fp_mod)
    }

    /// Finds `n ≡ position (mod 2p)` near `estimate` with `S₃ ≡ ±L_n`.
    fn locate(&self, s3: &Mat2, position: usize, estimate: i64) -> Result<(i64, bool)> {
        let period = self.cycle.period() as i64;
        let base = estimate - (estimate - position as i64).rem_euclid(period);
        let neg = s3.neg().reduce_mod(&self.fp_mod);
        for offset in 0..64i64 {
            for t in [offset, -offset - 1] {
                let n = base + t * period;
                let l = self.l_fp(n);
                if l == *s3 {
                    return Ok((n, false));
                }
                if l == neg {
                    return Ok((n, true));
                }
            }
        }
        Err(Error::internal("transported matrix does not match a cycle position"))
    }
}

fn wrap(j: i64, period: usize) -> usize {
    j.rem_euclid(period as i64) as usize
}

/// Scaled floating-point tracking of `|L_i|`; returns `log₂‖L_i‖`.
fn log_norms(cycle: &Cycle) -> Vec<f64> {
    const RESCALE: f64 = 1e150;
    let mut m = [[1.0f64, 0.0], [0.0, 1.0]];
    let mut offset = 0.0f64;
    let mut out = vec![0.0];
    for (_, lam) in cycle.steps() {
        let l = big_to_f64(&lam.abs());
        // |L|·[[0, 1], [1, |λ|]]
        m = [[m[0][1], m[0][0] + l * m[0][1]], [m[1][1], m[1][0] + l * m[1][1]]];
        let big = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(*x));
        if big > RESCALE {
            m = m.map(|r| r.map(|x| x / RESCALE));
            offset += RESCALE.log2();
        }
        let big = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(*x));
        out.push(offset + big.log2());
    }
    out
}

fn big_to_f64(x: &BigInt) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::MAX)
}

/// A chain to cycle index `target` (`0 ≤ target ≤ 2p`).
pub fn doubling_chain(cycle: &Cycle, target: usize) -> Result<Chain> {
    ChainBuilder::new(cycle).build(target)
}
