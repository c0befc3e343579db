//! Certificates of proper equivalence of indefinite forms with the same
//! determinant.
//!
//! After dividing out the common content, properly primitive forms `P₁, P₂`
//! are reduced to `R₁, R₂`; the inverse of `R₂` is reduced to `R₂'`, and
//! `R₁ ∘ R₂'` is composed and shown principal by a chain. Improperly
//! primitive forms are first restricted to an index-two sublattice on which
//! half the form is properly primitive: `P₁` always uses the first column
//! doubled (after a unimodular change making the second column's value
//! twice an odd number), and `P₂` uses the matching sublattice, which is
//! unique when `D ≡ 1 (mod 8)` and one of three when `D ≡ 5 (mod 8)`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use crate::compose::{derive_composite, doubling_chain, verify_composition, BiMat, Chain, ChainStep};
use crate::error::{Error, Result};
use crate::forms::{principal_cycle, reduce_with, Cycle, QForm, RealDet};
use crate::matrix::{Mat2, UniMat};
use crate::compose::compose_reduced_with;

use super::eval::BitMeter;
use super::text::{write_chain, write_form, write_matrix, Lines};
use super::{RejectReason, Rejection};

/// First line of an equivalence certificate.
pub const EQUIV_HEADER: &str = "BQD-EQUIV 1";

/// The index-two sublattices tried for the second form, as column bases.
pub const SUBLATTICES: [[[i64; 2]; 2]; 3] = [[[2, 0], [0, 1]], [[1, 0], [0, 2]], [[1, 0], [1, 2]]];

/// Changes of basis bringing a vector with odd half-value into the second
/// column: `(0, 1)`, `(1, 0)` and `(1, 1)`.
const PREPARATIONS: [[[i64; 2]; 2]; 3] = [[[1, 0], [0, 1]], [[0, 1], [-1, 0]], [[1, 1], [0, 1]]];

/// Sublattice data for improperly primitive forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lift {
    /// Change of basis applied to the first form before doubling its first column.
    pub pre1: UniMat,
    /// Change of basis applied to the second form before its sublattice.
    pub pre2: UniMat,
    /// Index into [`SUBLATTICES`] for the second form.
    pub sublattice: usize,
}

/// A certificate that two forms are properly equivalent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivCert {
    /// The first form.
    pub q1: QForm,
    /// The second form.
    pub q2: QForm,
    /// Present exactly when the forms are improperly primitive.
    pub lift: Option<Lift>,
    /// Reduces the prepared first form to `R₁`.
    pub red1: UniMat,
    /// Reduces the prepared second form to `R₂`.
    pub red2: UniMat,
    /// Reduces the inverse of `R₂` to `R₂'`.
    pub red3: UniMat,
    /// The reduced composite of `R₁` and `R₂'`.
    pub composite: QForm,
    /// Bilinear matrix of that composition.
    pub bilinear: BiMat,
    /// Chain from the reduced identity form to the composite.
    pub chain: Vec<ChainStep>,
}

/// Result of deciding equivalence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivOutcome {
    /// The forms are properly equivalent.
    Equivalent(Box<EquivCert>),
    /// They are not, for the stated reason.
    Inequivalent(String),
}

/// Statistics of a successful equivalence verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivReport {
    /// Largest bit length of any stored intermediate integer.
    pub peak_bits: u64,
    /// `8(bits(D) + bits‖Q₁‖ + bits‖Q₂‖) + 64`.
    pub bit_limit: u64,
}

fn sublattice(index: usize) -> Mat2 {
    Mat2::from_i64(SUBLATTICES[index])
}

fn preparation(index: usize) -> UniMat {
    UniMat::from_i64(PREPARATIONS[index]).expect("determinant one")
}

/// `½·QᵗT` when every coefficient is even.
fn halve(q: &QForm, t: &Mat2) -> Option<QForm> {
    let full = q.transform_by(t);
    let two = BigInt::from(2);
    (full.a.is_multiple_of(&two) && full.b.is_multiple_of(&two) && full.c.is_multiple_of(&two))
        .then(|| QForm { a: full.a / &two, b: full.b / &two, c: full.c / two })
}

/// The sublattice form of `p` for preparation `pre` and sublattice `index`.
fn lifted(p: &QForm, pre: &UniMat, index: usize) -> Option<QForm> {
    halve(p, &(pre.mat() * &sublattice(index))).filter(QForm::is_properly_primitive)
}

/// Shared checks on the pair: equal positive nonsquare determinant and equal
/// content. Returns the primitive parts and the reduced determinant.
fn primitive_parts(q1: &QForm, q2: &QForm) -> std::result::Result<(QForm, QForm, RealDet), String> {
    let det = q1.determinant();
    if det != q2.determinant() {
        return Err(format!("determinants {det} and {} differ", q2.determinant()));
    }
    let content = q1.content_abc();
    if content != q2.content_abc() {
        return Err(format!("contents {content} and {} differ", q2.content_abc()));
    }
    if !content.is_positive() {
        return Err("zero form".into());
    }
    let reduced = &det / (&content * &content);
    let real = RealDet::new(&reduced).map_err(|e| e.to_string())?;
    let part = |q: &QForm| QForm { a: &q.a / &content, b: &q.b / &content, c: &q.c / &content };
    Ok((part(q1), part(q2), real))
}

struct ProperParts {
    red1: UniMat,
    red2: UniMat,
    red3: UniMat,
    composite: QForm,
    bilinear: BiMat,
    chain: Chain,
}

fn try_proper(det: &RealDet, cycle: &Cycle, p1: &QForm, p2: &QForm) -> Result<Option<ProperParts>> {
    let (r1, red1) = reduce_with(det, p1);
    let (r2, red2) = reduce_with(det, p2);
    let (r2_inv, red3) = reduce_with(det, &r2.inverse());
    let (composite, bilinear) = compose_reduced_with(det, &r1, &r2_inv)?;
    let Some(position) = cycle.position(&composite) else {
        return Ok(None);
    };
    let chain = doubling_chain(cycle, position)?;
    Ok(Some(ProperParts { red1, red2, red3, composite, bilinear, chain }))
}

/// Decides proper equivalence and produces a certificate when it holds.
pub fn generate_equivalence(q1: &QForm, q2: &QForm) -> Result<EquivOutcome> {
    let (p1, p2, det) = match primitive_parts(q1, q2) {
        Ok(parts) => parts,
        Err(reason) => {
            if q1.determinant() == q2.determinant() {
                RealDet::new(&q1.determinant())?;
            }
            return Ok(EquivOutcome::Inequivalent(reason));
        }
    };
    let cycle = principal_cycle(det.value())?;
    let improper1 = !p1.is_properly_primitive();
    if improper1 != !p2.is_properly_primitive() {
        return Ok(EquivOutcome::Inequivalent("only one form is improperly primitive".into()));
    }
    let build = |lift: Option<Lift>, parts: ProperParts| {
        EquivOutcome::Equivalent(Box::new(EquivCert {
            q1: q1.clone(),
            q2: q2.clone(),
            lift,
            red1: parts.red1,
            red2: parts.red2,
            red3: parts.red3,
            composite: parts.composite,
            bilinear: parts.bilinear,
            chain: parts.chain.steps().to_vec(),
        }))
    };
    if !improper1 {
        return Ok(match try_proper(&det, &cycle, &p1, &p2)? {
            Some(parts) => build(None, parts),
            None => EquivOutcome::Inequivalent("the quotient class is not principal".into()),
        });
    }
    let pick = |p: &QForm| {
        (0..PREPARATIONS.len())
            .map(preparation)
            .find(|pre| lifted(p, pre, 0).is_some())
            .ok_or_else(|| Error::internal(format!("no odd half-value vector for {p}")))
    };
    let pre1 = pick(&p1)?;
    let lifted1 = lifted(&p1, &pre1, 0).expect("checked by pick");
    let candidates: Vec<(UniMat, usize)> = if det.value().mod_floor(&BigInt::from(8)) == BigInt::one() {
        vec![(pick(&p2)?, 0)]
    } else {
        (0..SUBLATTICES.len()).map(|i| (UniMat::identity(), i)).collect()
    };
    for (pre2, index) in candidates {
        let Some(lifted2) = lifted(&p2, &pre2, index) else { continue };
        if let Some(parts) = try_proper(&det, &cycle, &lifted1, &lifted2)? {
            let lift = Lift { pre1: pre1.clone(), pre2, sublattice: index };
            return Ok(build(Some(lift), parts));
        }
    }
    Ok(EquivOutcome::Inequivalent("no sublattice form is equivalent".into()))
}

fn reject<T>(reason: RejectReason, detail: impl Into<String>) -> std::result::Result<T, Rejection> {
    Err(Rejection::new(reason, detail))
}

/// Verifies an equivalence certificate without multiplying out its chain.
pub fn verify_equivalence(cert: &EquivCert) -> std::result::Result<EquivReport, Rejection> {
    let meter = BitMeter::default();
    meter.observe_form(&cert.q1);
    meter.observe_form(&cert.q2);
    let (p1, p2, det) =
        primitive_parts(&cert.q1, &cert.q2).map_err(|reason| Rejection::new(RejectReason::Content, reason))?;
    let improper = !p1.is_properly_primitive();
    if improper != !p2.is_properly_primitive() {
        return reject(RejectReason::Content, "only one form is improperly primitive");
    }
    let (prepared1, prepared2) = match (&cert.lift, improper) {
        (None, false) => (p1, p2),
        (Some(lift), true) => {
            if lift.sublattice >= SUBLATTICES.len() {
                return reject(RejectReason::BadLift, "sublattice index out of range");
            }
            let first = lifted(&p1, &lift.pre1, 0);
            let second = lifted(&p2, &lift.pre2, lift.sublattice);
            match (first, second) {
                (Some(a), Some(b)) => (a, b),
                _ => return reject(RejectReason::BadLift, "sublattice form is not properly primitive"),
            }
        }
        (None, true) => return reject(RejectReason::BadLift, "improperly primitive forms need a lift"),
        (Some(_), false) => return reject(RejectReason::BadLift, "properly primitive forms take no lift"),
    };
    for m in [&cert.red1, &cert.red2, &cert.red3] {
        meter.observe_mat(m.mat());
    }
    let r1 = prepared1.transform_by(cert.red1.mat());
    let r2 = prepared2.transform_by(cert.red2.mat());
    let r2_inv = r2.inverse().transform_by(cert.red3.mat());
    for q in [&prepared1, &prepared2, &r1, &r2, &r2_inv] {
        meter.observe_form(q);
    }
    if ![&r1, &r2, &r2_inv].iter().all(|q| det.is_reduced(q)) {
        return reject(RejectReason::BadReduction, "a reduction matrix does not give a reduced form");
    }
    let composite = derive_composite(&r1, &r2_inv, &cert.bilinear)
        .map_err(|e| Rejection::new(RejectReason::BadComposition, e.to_string()))?;
    if composite != cert.composite {
        return reject(RejectReason::BadComposition, "composite does not match the bilinear matrix");
    }
    verify_composition(&r1, &r2_inv, &composite, &cert.bilinear)
        .map_err(|fault| Rejection::new(RejectReason::BadComposition, fault.to_string()))?;
    if !det.is_reduced(&composite) {
        return reject(RejectReason::BadComposition, "composite is not reduced");
    }
    let chain = Chain::from_steps(&det, cert.chain.clone())
        .map_err(|e| Rejection::new(RejectReason::BadChain, e.to_string()))?;
    if *chain.endpoint() != composite {
        return reject(RejectReason::ChainEndpoint, format!("chain ends at {}", chain.endpoint()));
    }
    meter.observe_chain(&chain);
    cert.bilinear.entries().for_each(|x| meter.observe(x));
    let bit_limit = 8 * (det.value().bits() + cert.q1.norm().bits() + cert.q2.norm().bits()) + 64;
    if meter.peak() > bit_limit {
        return reject(RejectReason::BitBudget, format!("peak {} bits exceeds {bit_limit}", meter.peak()));
    }
    Ok(EquivReport { peak_bits: meter.peak(), bit_limit })
}

impl EquivCert {
    /// Serializes the certificate.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{EQUIV_HEADER}");
        write_form(&mut out, "Q1", &self.q1);
        write_form(&mut out, "Q2", &self.q2);
        match &self.lift {
            None => out.push_str("LIFT none\n"),
            Some(lift) => {
                out.push_str("LIFT");
                write_matrix(&mut out, lift.pre1.mat());
                write_matrix(&mut out, lift.pre2.mat());
                let _ = writeln!(out, " {}", lift.sublattice);
            }
        }
        for (name, m) in [("RED1", &self.red1), ("RED2", &self.red2), ("RED3", &self.red3)] {
            out.push_str(name);
            write_matrix(&mut out, m.mat());
            out.push('\n');
        }
        write_form(&mut out, "COMPOSITE", &self.composite);
        out.push_str("BILINEAR");
        for x in self.bilinear.entries() {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
        write_chain(&mut out, None, &self.chain);
        out.push_str("END\n");
        out
    }

    /// Parses a certificate; errors carry the offending line number.
    pub fn from_text(text: &str) -> Result<EquivCert> {
        let mut lines = Lines::new(text);
        lines.header(EQUIV_HEADER)?;
        let q1 = lines.form("Q1")?;
        let q2 = lines.form("Q2")?;
        let (line, tokens) = lines.next()?;
        if tokens[0] != "LIFT" {
            return Err(lines.error(line, "expected LIFT"));
        }
        let lift = match tokens.len() {
            2 if tokens[1] == "none" => None,
            10 => {
                let v = tokens[1..9].iter().map(|t| lines.int(line, t)).collect::<Result<Vec<_>>>()?;
                let sublattice = lines.count(line, tokens[9])?;
                Some(Lift { pre1: lines.unimodular(line, &v[..4])?, pre2: lines.unimodular(line, &v[4..])?, sublattice })
            }
            _ => return Err(lines.error(line, "LIFT takes `none` or two matrices and an index")),
        };
        let red1 = lines.unimodular_line("RED1")?;
        let red2 = lines.unimodular_line("RED2")?;
        let red3 = lines.unimodular_line("RED3")?;
        let composite = lines.form("COMPOSITE")?;
        let (_, b) = lines.ints("BILINEAR", 8)?;
        let bilinear = BiMat::new([
            [b[0].clone(), b[1].clone(), b[2].clone(), b[3].clone()],
            [b[4].clone(), b[5].clone(), b[6].clone(), b[7].clone()],
        ]);
        let chain = lines.chain(None)?;
        lines.end()?;
        Ok(EquivCert { q1, q2, lift, red1, red2, red3, composite, bilinear, chain })
    }
}

/// Whether `q` lies on the cycle of reduced forms reached from `p`, by
/// reducing both and walking the cycle of `p`. Exhaustive, so only for
/// small determinants.
pub fn equivalent_by_cycle_scan(p: &QForm, q: &QForm) -> Result<bool> {
    if p.determinant() != q.determinant() {
        return Ok(false);
    }
    let det = RealDet::new(&p.determinant())?;
    let (rp, _) = reduce_with(&det, p);
    let (rq, _) = reduce_with(&det, q);
    let mut current = rp.clone();
    loop {
        if current == rq {
            return Ok(true);
        }
        let (next, _, _) = crate::forms::right_neighbor(&current)?;
        current = next;
        if current == rp {
            return Ok(false);
        }
    }
}
