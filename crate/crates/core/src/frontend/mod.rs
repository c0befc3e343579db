//! Binary quadratic Diophantine systems `F(x₁, x₂) = 0`, `xᵢ ≡ αᵢ (mod Γ)`,
//! `xᵢ ≥ 0`: normalization, classification, the variable change to
//! `y₁² − Dy₂² = g`, complete solvers for definite and degenerate systems,
//! the exhaustive small-solution search for indefinite systems, and a
//! brute-force oracle.

mod linear;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::certify::{self, SearchOptions, SolvCert};
use crate::error::{Error, Result};
use crate::forms::{reduce_with, simple_equiv_matrix, Cycle, QForm};
use crate::matrix::{Mat2, UniMat};
use crate::numtheory::{factorize, int_length, is_square, isqrt, modp, sqrt_mod};
use linear::{admissible_member, LinearCoordinate};

/// A system in the even-cross-term convention
/// `a x₁² + 2b x₁x₂ + c x₂² + 2d x₁ + 2e x₂ + f = 0` with side conditions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DioSystem {
    raw: [BigInt; 6],
    coeffs: [BigInt; 6],
    gamma: BigInt,
    alpha: [BigInt; 2],
}

/// Definite, degenerate or indefinite, by the sign and squareness of `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemClass {
    /// `D < 0`.
    Definite,
    /// `D` a perfect square (including 0).
    Degenerate,
    /// `D > 0` not a square.
    Indefinite,
}

impl fmt::Display for SystemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SystemClass::Definite => "definite",
            SystemClass::Degenerate => "degenerate",
            SystemClass::Indefinite => "indefinite",
        };
        f.write_str(name)
    }
}

fn check_side_conditions(gamma: &BigInt, alpha: &[BigInt; 2]) -> Result<()> {
    if !gamma.is_positive() {
        return Err(Error::domain(format!("modulus must be positive, got {gamma}")));
    }
    if alpha.iter().any(|a| a.is_negative() || a >= gamma) {
        return Err(Error::domain(format!("residues must lie in [0, {gamma})")));
    }
    Ok(())
}

impl DioSystem {
    /// Normalizes `a x² + b xy + c y² + d x + e y + f = 0`: if `b, d, e` are
    /// all even they are halved, otherwise `a, c, f` are doubled.
    pub fn normalize(raw: [BigInt; 6], gamma: BigInt, alpha: [BigInt; 2]) -> Result<Self> {
        check_side_conditions(&gamma, &alpha)?;
        let [a, b, c, d, e, f] = raw.clone();
        let two = BigInt::from(2);
        let coeffs = if b.is_even() && d.is_even() && e.is_even() {
            [a, b / &two, c, d / &two, e / &two, f]
        } else {
            [a * &two, b, c * &two, d, e, f * &two]
        };
        Ok(DioSystem { raw, coeffs, gamma, alpha })
    }

    /// A system given directly in the even-cross-term convention.
    pub fn from_normalized(coeffs: [BigInt; 6], gamma: BigInt, alpha: [BigInt; 2]) -> Result<Self> {
        check_side_conditions(&gamma, &alpha)?;
        let [a, b, c, d, e, f] = coeffs.clone();
        let raw = [a, b * 2, c, d * 2, e * 2, f];
        Ok(DioSystem { raw, coeffs, gamma, alpha })
    }

    /// Convenience constructor from small raw coefficients with `Γ = 1`.
    pub fn from_raw_i64(raw: [i64; 6]) -> Self {
        DioSystem::normalize(raw.map(BigInt::from), BigInt::one(), [BigInt::zero(), BigInt::zero()])
            .expect("Γ = 1 with zero residues is valid")
    }

    /// Normalized coefficients `(a, b, c, d, e, f)`.
    pub fn coeffs(&self) -> &[BigInt; 6] {
        &self.coeffs
    }

    /// Coefficients as entered.
    pub fn raw(&self) -> &[BigInt; 6] {
        &self.raw
    }

    /// The modulus `Γ`.
    pub fn gamma(&self) -> &BigInt {
        &self.gamma
    }

    /// The residues `(α₁, α₂)`.
    pub fn alpha(&self) -> &[BigInt; 2] {
        &self.alpha
    }

    /// `D = b² − ac`.
    pub fn determinant(&self) -> BigInt {
        let [a, b, c, ..] = &self.coeffs;
        b * b - a * c
    }

    /// The quadratic part `[a, 2b, c]`.
    pub fn quadratic_form(&self) -> QForm {
        let [a, b, c, ..] = &self.coeffs;
        QForm { a: a.clone(), b: b.clone(), c: c.clone() }
    }

    /// `F(x₁, x₂)`.
    pub fn eval(&self, x1: &BigInt, x2: &BigInt) -> BigInt {
        let [a, b, c, d, e, f] = &self.coeffs;
        a * x1 * x1 + b * x1 * x2 * 2 + c * x2 * x2 + d * x1 * 2 + e * x2 * 2 + f
    }

    /// Whether `(x₁, x₂)` satisfies the equation, the congruences and
    /// nonnegativity.
    pub fn is_admissible(&self, x1: &BigInt, x2: &BigInt) -> bool {
        !x1.is_negative()
            && !x2.is_negative()
            && modp(x1, &self.gamma) == self.alpha[0]
            && modp(x2, &self.gamma) == self.alpha[1]
            && self.eval(x1, x2).is_zero()
    }

    /// `‖F‖ = max(|a|, |b|, |c|, |d|, |e|, |f|, Γ)` on normalized coefficients.
    pub fn size(&self) -> BigInt {
        self.coeffs.iter().map(|x| x.abs()).fold(self.gamma.clone(), |m, x| m.max(x))
    }

    /// Input length `L(a) + … + L(f) + 3L(Γ)` over the raw coefficients.
    pub fn length(&self) -> u64 {
        self.raw.iter().map(int_length).sum::<u64>() + 3 * int_length(&self.gamma)
    }

    /// The system with `x₁` and `x₂` interchanged.
    pub fn swapped(&self) -> DioSystem {
        let [a, b, c, d, e, f] = self.coeffs.clone();
        let [a1, a2] = self.alpha.clone();
        DioSystem::from_normalized([c, b, a, e, d, f], self.gamma.clone(), [a2, a1])
            .expect("swapping keeps side conditions valid")
    }

    /// Whether the normalized data agree (raw spelling is ignored).
    pub fn same_system(&self, other: &DioSystem) -> bool {
        self.coeffs == other.coeffs && self.gamma == other.gamma && self.alpha == other.alpha
    }
}

impl fmt::Display for DioSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e, g] = &self.coeffs;
        write!(f, "{a} {b} {c} {d} {e} {g} {} {} {}", self.gamma, self.alpha[0], self.alpha[1])
    }
}

/// Normalizes raw coefficients (see [`DioSystem::normalize`]).
pub fn normalize(raw: [BigInt; 6], gamma: BigInt, alpha: [BigInt; 2]) -> Result<DioSystem> {
    DioSystem::normalize(raw, gamma, alpha)
}

/// Classifies by `D = b² − ac`.
pub fn classify(sys: &DioSystem) -> SystemClass {
    let d = sys.determinant();
    if d.is_negative() {
        SystemClass::Definite
    } else if is_square(&d).is_some() {
        SystemClass::Degenerate
    } else {
        SystemClass::Indefinite
    }
}

/// Which sign pattern of `y₂` a large solution follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignCase {
    /// `y₂ > 0` and `c(√D − b) > 0`.
    Positive,
    /// `y₂ < 0` and `c(√D + b) < 0`.
    Negative,
}

impl SignCase {
    /// Both cases in search order.
    pub const ALL: [SignCase; 2] = [SignCase::Positive, SignCase::Negative];

    /// Certificate spelling.
    pub fn tag(self) -> &'static str {
        match self {
            SignCase::Positive => "positive",
            SignCase::Negative => "negative",
        }
    }

    /// Parses the certificate spelling.
    pub fn from_tag(tag: &str) -> Option<SignCase> {
        match tag {
            "positive" => Some(SignCase::Positive),
            "negative" => Some(SignCase::Negative),
            _ => None,
        }
    }
}

/// The variable change `y₁ = Dx₁ + (be − cd)`, `y₂ = bx₁ + cx₂ + e` for
/// `D ≠ 0`, `c ≠ 0`, turning the equation into `y₁² − Dy₂² = g` and the side
/// conditions into congruences modulo `|cDΓ|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PellSystem {
    d: BigInt,
    g: BigInt,
    modulus: BigInt,
    b: BigInt,
    c: BigInt,
    e: BigInt,
    shift1: BigInt,
    shift2: BigInt,
    targets: [BigInt; 2],
    root_floor: Option<BigInt>,
}

impl PellSystem {
    /// Builds the variable change; needs `D ≠ 0` and `c ≠ 0`.
    pub(crate) fn new(sys: &DioSystem) -> Result<Self> {
        let [a, b, c, d, e, f] = sys.coeffs();
        let det = sys.determinant();
        if det.is_zero() || c.is_zero() {
            return Err(Error::domain("the variable change needs D ≠ 0 and c ≠ 0"));
        }
        // det [[a, b, d], [b, c, e], [d, e, f]]
        let minor = a * (c * f - e * e) - b * (b * f - e * d) + d * (b * e - c * d);
        let g = -c * minor;
        let modulus = (c * &det * sys.gamma()).abs();
        let targets = [modp(&(c * &det * &sys.alpha()[0]), &modulus), modp(&(c * &det * &sys.alpha()[1]), &modulus)];
        let root_floor = det.is_positive().then(|| isqrt(&det).expect("positive"));
        Ok(PellSystem {
            shift1: b * e - c * d,
            shift2: c * (a * e - b * d),
            d: det,
            g,
            modulus,
            b: b.clone(),
            c: c.clone(),
            e: e.clone(),
            targets,
            root_floor,
        })
    }

    /// `D`.
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    /// `g`, the right-hand side of `y₁² − Dy₂² = g`.
    pub fn g(&self) -> &BigInt {
        &self.g
    }

    /// `|cDΓ|`.
    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    /// The normalized cross coefficient `b`.
    pub fn b(&self) -> &BigInt {
        &self.b
    }

    /// The normalized coefficient `c`.
    pub fn c(&self) -> &BigInt {
        &self.c
    }

    /// `be − cd`, the offset in `y₁`.
    pub fn shift1(&self) -> &BigInt {
        &self.shift1
    }

    /// `c(ae − bd)`, the offset in `cD·x₂`.
    pub fn shift2(&self) -> &BigInt {
        &self.shift2
    }

    /// `(y₁, y₂)` for a point `x`.
    pub fn y_of_x(&self, x1: &BigInt, x2: &BigInt) -> (BigInt, BigInt) {
        (&self.d * x1 + &self.shift1, &self.b * x1 + &self.c * x2 + &self.e)
    }

    /// The numerators `(D·x₁, cD·x₂)` as functions of `y`.
    pub fn x_numerators(&self, y1: &BigInt, y2: &BigInt) -> (BigInt, BigInt) {
        (y1 - &self.shift1, -&self.b * y1 + &self.d * y2 + &self.shift2)
    }

    /// `x` for a point `y`, if integral.
    pub fn x_of_y(&self, y1: &BigInt, y2: &BigInt) -> Option<(BigInt, BigInt)> {
        let (n1, n2) = self.x_numerators(y1, y2);
        let cd = &self.c * &self.d;
        (n1.is_multiple_of(&self.d) && n2.is_multiple_of(&cd)).then(|| (n1 / &self.d, n2 / cd))
    }

    /// The congruences modulo `|cDΓ|` that make `x` integral with the
    /// prescribed residues, checked on residues of `y`.
    pub fn congruences_hold(&self, y1: &BigInt, y2: &BigInt) -> bool {
        let m = &self.modulus;
        let first = modp(&(&self.c * y1 - &self.c * &self.shift1), m);
        let second = modp(&(-&self.b * y1 + &self.d * y2 + &self.shift2), m);
        first == self.targets[0] && second == self.targets[1]
    }

    /// Whether the sign case is compatible with `b` and `c` (indefinite only).
    pub fn case_applies(&self, case: SignCase) -> bool {
        let lam = self.root_floor.as_ref().expect("sign cases need D > 0");
        match case {
            // √D − b > 0 ⟺ b ≤ ⌊√D⌋
            SignCase::Positive => (&self.b <= lam) == self.c.is_positive(),
            // √D + b > 0 ⟺ −b ≤ ⌊√D⌋
            SignCase::Negative => (-&self.b <= *lam) == self.c.is_negative(),
        }
    }
}

/// The variable change for an indefinite system.
pub fn to_pell(sys: &DioSystem) -> Result<PellSystem> {
    if classify(sys) != SystemClass::Indefinite {
        return Err(Error::domain("the Pell form is defined for indefinite systems only"));
    }
    PellSystem::new(sys)
}

/// Total order used to pick one solution deterministically.
fn solution_key(x: &(BigInt, BigInt)) -> (BigInt, BigInt) {
    (x.0.clone().max(x.1.clone()), x.0.clone())
}

fn smallest(candidates: impl IntoIterator<Item = (BigInt, BigInt)>) -> Option<(BigInt, BigInt)> {
    candidates.into_iter().min_by(|p, q| solution_key(p).cmp(&solution_key(q)))
}

fn admissible_from_y(sys: &DioSystem, ps: &PellSystem, y1: &BigInt, y2: &BigInt) -> Option<(BigInt, BigInt)> {
    ps.x_of_y(y1, y2).filter(|(x1, x2)| sys.is_admissible(x1, x2))
}

/// Solves a definite system by enumerating `y₂` in ascending order (then
/// `y₁` ascending); complete because `|y| ≤ √|g|`.
pub fn solve_definite(sys: &DioSystem) -> Result<Option<(BigInt, BigInt)>> {
    if classify(sys) != SystemClass::Definite {
        return Err(Error::domain("not a definite system"));
    }
    let ps = PellSystem::new(sys)?;
    let (d, g) = (ps.d(), ps.g());
    if g.is_negative() {
        return Ok(None);
    }
    let bound = isqrt(&(g / (-d)))?;
    let mut y2 = -&bound;
    while y2 <= bound {
        let rest = g + d * &y2 * &y2;
        if let Some(root) = is_square(&rest) {
            let mut roots = vec![-&root, root.clone()];
            roots.dedup();
            for y1 in roots {
                if let Some(x) = admissible_from_y(sys, &ps, &y1, &y2) {
                    return Ok(Some(x));
                }
            }
        }
        y2 += 1;
    }
    Ok(None)
}

/// Solves a degenerate system (square `D`) exhaustively.
pub fn solve_degenerate(sys: &DioSystem) -> Result<Option<(BigInt, BigInt)>> {
    if classify(sys) != SystemClass::Degenerate {
        return Err(Error::domain("not a degenerate system"));
    }
    let [a, b, c, ..] = sys.coeffs();
    let d = sys.determinant();
    if d.is_zero() {
        return Ok(solve_parabolic(sys));
    }
    if c.is_zero() && !a.is_zero() {
        return Ok(solve_degenerate(&sys.swapped())?.map(|(x1, x2)| (x2, x1)));
    }
    if c.is_zero() {
        debug_assert!(!b.is_zero());
        return Ok(solve_hyperbolic(sys));
    }
    let h = is_square(&d).expect("degenerate");
    let ps = PellSystem::new(sys)?;
    let g = ps.g();
    if g.is_zero() {
        // (y₁ − hy₂)(y₁ + hy₂) = 0: y = (±h·t, t).
        let cd = c * &d;
        let family = |eps: i64| {
            let hy = &h * eps;
            [
                LinearCoordinate::new(hy.clone(), -ps.shift1(), d.clone()),
                LinearCoordinate::new(-b * &hy + &d, ps.shift2().clone(), cd.clone()),
            ]
        };
        let found = [1, -1].into_iter().filter_map(|eps| admissible_member(&family(eps), sys.gamma(), sys.alpha()));
        return Ok(smallest(found));
    }
    // (y₁ + hy₂)(y₁ − hy₂) = g over all factor pairs.
    let mut found = Vec::new();
    for div in factorize(&g.abs())?.divisors() {
        for g1 in [div.clone(), -div] {
            let g2 = g / &g1;
            let (s, t) = (&g1 + &g2, &g1 - &g2);
            if s.is_odd() || !t.is_multiple_of(&(&h * 2)) {
                continue;
            }
            let (y1, y2) = (s / 2, t / (&h * 2));
            found.extend(admissible_from_y(sys, &ps, &y1, &y2));
        }
    }
    Ok(smallest(found))
}

/// `a = c = 0`: `(bx₁ + e)(bx₂ + d) = de − bf/2`.
fn solve_hyperbolic(sys: &DioSystem) -> Option<(BigInt, BigInt)> {
    let [_, b, _, d, e, f] = sys.coeffs();
    let twice: BigInt = d * e * 2 - b * f;
    if twice.is_odd() {
        return None;
    }
    let n: BigInt = twice / 2;
    let mut found = Vec::new();
    if n.is_zero() {
        // One factor vanishes and the other coordinate is free.
        let free = || LinearCoordinate::integer(BigInt::one(), BigInt::zero());
        let fixed = |num: &BigInt| LinearCoordinate::integer(BigInt::zero(), num / b);
        if e.is_multiple_of(b) {
            found.extend(admissible_member(&[fixed(&-e), free()], sys.gamma(), sys.alpha()));
        }
        if d.is_multiple_of(b) {
            found.extend(admissible_member(&[free(), fixed(&-d)], sys.gamma(), sys.alpha()));
        }
        return smallest(found);
    }
    let divisors = factorize(&n.abs()).ok()?.divisors();
    for div in divisors {
        for u in [div.clone(), -div] {
            let v = &n / &u;
            let (p, q) = (&u - e, &v - d);
            if p.is_multiple_of(b) && q.is_multiple_of(b) {
                let (x1, x2) = (p / b, q / b);
                if sys.is_admissible(&x1, &x2) {
                    found.push((x1, x2));
                }
            }
        }
    }
    smallest(found)
}

/// Upper bound on the absolute value of every real root (Cauchy).
fn root_bound(coeffs: &[BigInt]) -> BigInt {
    let Some(top) = coeffs.iter().rposition(|c| !c.is_zero()) else {
        return BigInt::zero();
    };
    if top == 0 {
        return BigInt::zero();
    }
    let lead = coeffs[top].abs();
    let worst = coeffs[..top].iter().map(|c| c.abs()).max().unwrap_or_default();
    worst.div_ceil(&lead) + 1
}

fn eval_poly(coeffs: &[BigInt], z: &BigInt) -> BigInt {
    coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * z + c)
}

/// `D = 0`: the quadratic part is `m(αx₁ + βx₂)²`.
fn solve_parabolic(sys: &DioSystem) -> Option<(BigInt, BigInt)> {
    let [a, b, c, d, e, f] = sys.coeffs();
    let (gamma, alpha) = (sys.gamma(), sys.alpha());
    if a.is_zero() && b.is_zero() && c.is_zero() {
        return solve_linear(sys);
    }
    let (al, be, m) = if a.is_zero() {
        (BigInt::zero(), BigInt::one(), c.clone())
    } else {
        let g = a.gcd(b);
        let (al, be) = (a / &g, b / &g);
        let m = a / (&al * &al);
        (al, be, m)
    };
    // Complete (α, β) to [[α, β], [γ, δ]] of determinant one.
    let eg = al.extended_gcd(&be);
    let sign = if eg.gcd.is_negative() { -1 } else { 1 };
    let (delta, gam) = (eg.x * sign, -eg.y * sign);
    // x₁ = δz − βw, x₂ = −γz + αw, and
    // m z² + 2(dδ − eγ) z + f + 2(eα − dβ) w = 0.
    let lin = (d * &delta - e * &gam) * 2;
    let k = e * &al - d * &be;
    if k.is_zero() {
        // z is a root of m z² + lin·z + f; w is free.
        let disc = &lin * &lin - &m * f * 4;
        let root = is_square(&disc)?;
        let mut found = Vec::new();
        for num in [-&lin + &root, -&lin - &root] {
            let num: BigInt = num;
            let den: BigInt = &m * 2;
            if !num.is_multiple_of(&den) {
                continue;
            }
            let z = num / den;
            let coords = [
                LinearCoordinate::integer(-&be, &delta * &z),
                LinearCoordinate::integer(al.clone(), -&gam * &z),
            ];
            found.extend(admissible_member(&coords, gamma, alpha));
        }
        return smallest(found);
    }
    // w = −(m z² + lin·z + f) / 2k, so with den = 2k:
    // den·x₁ = 2kδ z + β(m z² + lin·z + f), den·x₂ = −2kγ z − α(m z² + lin·z + f).
    let den: BigInt = &k * 2;
    let p1 = [&be * f, &den * &delta + &be * &lin, &be * &m];
    let p2 = [-&al * f, -&den * &gam - &al * &lin, -&al * &m];
    let (p1, p2, den) = if den.is_negative() {
        (p1.map(|x| -x), p2.map(|x| -x), -den)
    } else {
        (p1, p2, den)
    };
    // Outside the roots both signs are fixed, and integrality and residues
    // repeat with period den·Γ, so this window is exhaustive.
    let reach = root_bound(&p1).max(root_bound(&p2)) + &den * gamma;
    let mut found = Vec::new();
    let mut z = -&reach;
    while z <= reach {
        let (n1, n2) = (eval_poly(&p1, &z), eval_poly(&p2, &z));
        if n1.is_multiple_of(&den) && n2.is_multiple_of(&den) {
            let (x1, x2) = (n1 / &den, n2 / &den);
            if sys.is_admissible(&x1, &x2) {
                found.push((x1, x2));
            }
        }
        z += 1;
    }
    smallest(found)
}

/// `2d x₁ + 2e x₂ + f = 0`.
fn solve_linear(sys: &DioSystem) -> Option<(BigInt, BigInt)> {
    let [_, _, _, d, e, f] = sys.coeffs();
    let (p, q): (BigInt, BigInt) = (d * 2, e * 2);
    if p.is_zero() && q.is_zero() {
        return f.is_zero().then(|| (sys.alpha()[0].clone(), sys.alpha()[1].clone()));
    }
    let eg = p.extended_gcd(&q);
    let g = eg.gcd.abs();
    let sign = if eg.gcd.is_negative() { -1 } else { 1 };
    if !f.is_multiple_of(&g) {
        return None;
    }
    let scale = -f / &g * sign;
    let coords = [
        LinearCoordinate::integer(&q / &g, eg.x * &scale),
        LinearCoordinate::integer(-&p / &g, eg.y * &scale),
    ];
    admissible_member(&coords, sys.gamma(), sys.alpha())
}

/// A solution branch of `y₁² − Dy₂² = g`: `y = h·u` with `u` a primitive
/// representation of `G = g/h²` attached to the root `B` of `B² ≡ D (mod
/// |G|)`, whose form `[G, 2B, C]` reduces via `S` to the cycle form at
/// `position`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentationBranch {
    /// `h > 0` with `h² | g`.
    pub h: BigInt,
    /// `[G, 2B, C]`.
    pub q0: QForm,
    /// `SᵗQ₀S = Q_red`.
    pub s: UniMat,
    /// The reduced form.
    pub q_red: QForm,
    /// Index of `Q_red` in the principal cycle.
    pub position: usize,
}

/// All branches in the fixed search order (`h` ascending, `B` ascending),
/// keeping only those whose reduced form lies on the principal cycle.
pub fn representation_branches(ps: &PellSystem, cycle: &Cycle) -> Result<Vec<RepresentationBranch>> {
    let g = ps.g();
    if g.is_zero() {
        return Ok(Vec::new());
    }
    let det = cycle.real_det();
    let d = ps.d();
    let fact = factorize(&g.abs())?;
    let mut hs = vec![BigInt::one()];
    for (p, e) in &fact.factors {
        let mut next = Vec::new();
        for h in &hs {
            let mut power = BigInt::one();
            for _ in 0..=e / 2 {
                next.push(h * &power);
                power *= p;
            }
        }
        hs = next;
    }
    hs.sort();
    let mut branches = Vec::new();
    for h in hs {
        let big_g = g / (&h * &h);
        let abs_g = big_g.abs();
        for root in sqrt_mod(d, &abs_g, &factorize(&abs_g)?)? {
            let big_c = (&root * &root - d) / &big_g;
            let q0 = QForm { a: big_g.clone(), b: root, c: big_c };
            if !q0.is_properly_primitive() {
                continue;
            }
            let (q_red, s) = reduce_with(det, &q0);
            if let Some(position) = cycle.position(&q_red) {
                branches.push(RepresentationBranch { h: h.clone(), q0, s, q_red, position });
            }
        }
    }
    Ok(branches)
}

/// `(w₁ + λw₂, w₂)` with `w = M·(s₂₂, −s₂₁)`: the first column of
/// `S*·M·S⁻¹` for `S* = [[1, λ], [0, 1]]`.
pub(crate) fn representation_column(m: &Mat2, s: &UniMat, lam: &BigInt) -> (BigInt, BigInt) {
    let col = [s.mat().at(1, 1).clone(), -s.mat().at(1, 0)];
    let [w1, w2] = m.apply(&col);
    (w1 + lam * &w2, w2)
}

/// The direct-solution threshold `256‖F‖⁸`.
pub fn direct_threshold(sys: &DioSystem) -> BigInt {
    sys.size().pow(8) * 256
}

/// The smallest admissible solution with `max(x₁, x₂) ≤ bound`, found by
/// walking every branch in both directions of the automorph group until the
/// matrices are too large to give a solution within the bound.
pub fn small_indefinite_solution(
    sys: &DioSystem,
    ps: &PellSystem,
    cycle: &Cycle,
    branches: &[RepresentationBranch],
    bound: &BigInt,
) -> Option<(BigInt, BigInt)> {
    if ps.g().is_zero() {
        return admissible_from_y(sys, ps, &BigInt::zero(), &BigInt::zero());
    }
    let [_, b, c, _, e, _] = sys.coeffs();
    let d = ps.d();
    let lam = cycle.root_floor();
    let y_bound = (d * bound + ps.shift1().abs()).max((b.abs() + c.abs()) * bound + e.abs());
    let automorph = simple_equiv_matrix(cycle, cycle.period() as i64).into_mat();
    let automorph_inv = automorph.adjugate();
    let mut found = Vec::new();
    for branch in branches {
        let lj = simple_equiv_matrix(cycle, branch.position as i64).into_mat();
        let limit = (lam + 1) * 4 * branch.s.norm() * (d + branch.q0.b.abs() + 1) * (&y_bound / &branch.h + 1);
        let mut visit = |m: &Mat2| {
            let (u1, u2) = representation_column(m, &branch.s, lam);
            for sign in [1, -1] {
                let (y1, y2) = (&u1 * &branch.h * sign, &u2 * &branch.h * sign);
                if let Some(x) = admissible_from_y(sys, ps, &y1, &y2) {
                    if x.0 <= *bound && x.1 <= *bound {
                        found.push(x);
                    }
                }
            }
        };
        let mut forward = lj.clone();
        while forward.norm() <= limit {
            visit(&forward);
            forward = &automorph * &forward;
        }
        let lj_norm = lj.norm();
        let mut backward = &automorph_inv * &lj;
        let mut power = automorph.clone();
        while power.norm() <= &lj_norm * 2 * &limit {
            visit(&backward);
            backward = &automorph_inv * &backward;
            power = &automorph * &power;
        }
    }
    smallest(found)
}

/// Outcome of solving a system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// An admissible solution exists; the certificate proves it.
    Solvable(SolvCert),
    /// No admissible solution exists.
    Unsolvable,
}

/// Decides a system and returns a certificate when it is solvable.
pub fn solve(sys: &DioSystem, options: &SearchOptions) -> Result<Outcome> {
    let direct = |x: Option<(BigInt, BigInt)>| match x {
        Some((x1, x2)) => Outcome::Solvable(SolvCert::direct(sys.clone(), x1, x2)),
        None => Outcome::Unsolvable,
    };
    match classify(sys) {
        SystemClass::Definite => Ok(direct(solve_definite(sys)?)),
        SystemClass::Degenerate => Ok(direct(solve_degenerate(sys)?)),
        SystemClass::Indefinite => solve_indefinite(sys, options),
    }
}

/// Indefinite systems: a direct certificate for a solution below
/// `256‖F‖⁸`, otherwise the infrastructure search.
pub fn solve_indefinite(sys: &DioSystem, options: &SearchOptions) -> Result<Outcome> {
    let ps = to_pell(sys)?;
    let cycle = crate::forms::principal_cycle(ps.d())?;
    let branches = representation_branches(&ps, &cycle)?;
    let threshold = direct_threshold(sys);
    let small = || small_indefinite_solution(sys, &ps, &cycle, &branches, &threshold);
    if !options.force_cert || ps.g().is_zero() {
        if let Some((x1, x2)) = small() {
            return Ok(Outcome::Solvable(SolvCert::direct(sys.clone(), x1, x2)));
        }
    }
    if let Some(cert) = certify::search_infra(sys, &ps, &cycle, &branches, options)? {
        return Ok(Outcome::Solvable(cert));
    }
    if options.force_cert {
        if let Some((x1, x2)) = small() {
            return Ok(Outcome::Solvable(SolvCert::direct(sys.clone(), x1, x2)));
        }
    }
    Ok(Outcome::Unsolvable)
}

/// Scans `0 ≤ x₁, x₂ ≤ bound` (solving for `x₂` exactly for each `x₁`) and
/// returns the smallest admissible solution by `(max(x₁, x₂), x₁)`.
pub fn brute_force_oracle(sys: &DioSystem, bound: u64) -> Option<(BigInt, BigInt)> {
    let [a, b, c, d, e, f] = sys.coeffs();
    let bound_big = BigInt::from(bound);
    let mut found = Vec::new();
    let mut x1 = sys.alpha()[0].clone();
    while x1 <= bound_big {
        // c x₂² + 2(b x₁ + e) x₂ + (a x₁² + 2d x₁ + f) = 0
        let lin: BigInt = (b * &x1 + e) * 2;
        let cons: BigInt = a * &x1 * &x1 + d * &x1 * 2 + f;
        let mut roots = Vec::new();
        if c.is_zero() {
            if lin.is_zero() {
                if cons.is_zero() {
                    roots.push(sys.alpha()[1].clone());
                }
            } else if (-&cons).is_multiple_of(&lin) {
                roots.push(-&cons / &lin);
            }
        } else {
            let disc = &lin * &lin - c * &cons * 4;
            if let Some(r) = is_square(&disc) {
                for num in [-&lin - &r, -&lin + &r] {
                    if num.is_multiple_of(&(c * 2)) {
                        roots.push(num / (c * 2));
                    }
                }
            }
        }
        for x2 in roots {
            if x2 <= bound_big && sys.is_admissible(&x1, &x2) {
                found.push((x1.clone(), x2));
            }
        }
        x1 += sys.gamma();
    }
    smallest(found)
}

/// `x mod M'` for the solution proved by a certificate.
pub fn reconstruct_solution_mod(sys: &DioSystem, cert: &SolvCert, modulus: &BigInt) -> Result<(BigInt, BigInt)> {
    certify::reconstruct_mod(sys, cert, modulus)
}

/// Compares solutions by `(max(x₁, x₂), x₁)`.
pub fn compare_solutions(p: &(BigInt, BigInt), q: &(BigInt, BigInt)) -> Ordering {
    solution_key(p).cmp(&solution_key(q))
}
