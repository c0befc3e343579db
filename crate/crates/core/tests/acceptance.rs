//! Acceptance criteria, one PASS/FAIL line each.
//!
//! This target runs without the libtest harness so the verdict lines always
//! reach the console. It exits with failure when a criterion outside
//! `KNOWN_FAILURES` fails, or when a known failure unexpectedly passes.
//!
//! `BQD_ACCEPTANCE_SAMPLES` sets the number of systems sampled for the
//! oracle-equivalence criterion (default `ORACLE_SAMPLES`).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bqd_core::certify::{
    equivalent_by_cycle_scan, exact_solution, generate_equivalence, required_precision, verify_equivalence,
    verify_solvability, EquivOutcome, SearchOptions, SolvCert, SolvProof,
};
use bqd_core::compose::{
    b0_matrix, compose_reduced, doubling_chain, solve_s3, ChainBuilder, CHAIN_LENGTH_CONSTANT,
    COMPOSITION_SIZE_CONSTANT,
};
use bqd_core::floatp::{
    enc_add, enc_div_int, enc_mul, enc_sub, fadd, fmul, round_p, sign_certified, significant_digits, Dyadic,
    Enclosure, FpFormat, FpNum, Sign,
};
use bqd_core::forms::{is_reduced, principal_cycle, reduced_identity, simple_equiv_matrix, apply_transform};
use bqd_core::frontend::{
    brute_force_oracle, classify, reconstruct_solution_mod, solve, to_pell, DioSystem, Outcome, SystemClass,
};
use bqd_core::numtheory::{is_prime, is_square, isqrt, jacobi, log2_big};
use bqd_core::pell::{fundamental_solution, period_bound, period_mod};
use bqd_core::{InfraCert, Mat2, QForm, UniMat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose statement cannot hold; see the README for the analysis.
const KNOWN_FAILURES: &[u32] = &[12];

/// Wall-clock limits per criterion.
const ANTI_PELL_LIMIT: Duration = Duration::from_secs(10);
const HUA_LIMIT: Duration = Duration::from_secs(60);
const CYCLE_LIMIT: Duration = Duration::from_secs(120);
const PERIOD_LIMIT: Duration = Duration::from_secs(60);
const ORACLE_LIMIT: Duration = Duration::from_secs(30 * 60);

/// Slack added to `(c_B + 4)·log₂ D` in the near-additivity bound.
const ADDITIVITY_SLACK: f64 = 4.0;
/// Trials per floating-point lemma.
const FP_TRIALS: usize = 10_000;
/// Brute-force box for the oracle criterion.
const ORACLE_BOUND: u64 = 3000;
/// Systems sampled for the oracle criterion when no override is given.
const ORACLE_SAMPLES: usize = 4000;
/// `C` in `peak bits ≤ C·(log₂D + log₂‖Q₁‖ + log₂‖Q₂‖)`.
const EQUIV_BIT_CONSTANT: u64 = 24;
/// Largest admissible fitted exponent of verification time against `L(F)`.
const TIME_EXPONENT_LIMIT: f64 = 6.0;
/// Required growth of the least solution's digit count from n = 2 to n = 3.
const DIGIT_GROWTH: usize = 10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

fn forced() -> SearchOptions {
    SearchOptions { force_cert: true, fp_precision: None }
}

fn certificate(sys: &DioSystem, options: &SearchOptions) -> Option<SolvCert> {
    match solve(sys, options).ok()? {
        Outcome::Solvable(cert) => Some(cert),
        Outcome::Unsolvable => None,
    }
}

/// The solution a verified certificate proves, multiplied out.
fn proven_solution(sys: &DioSystem, cert: &SolvCert) -> Option<(BigInt, BigInt)> {
    verify_solvability(sys, cert).ok()?;
    match &cert.proof {
        SolvProof::Direct { x1, x2 } => Some((x1.clone(), x2.clone())),
        SolvProof::Infra(infra) => exact_solution(sys, infra).ok(),
    }
}

fn anti_pell(n: u32) -> DioSystem {
    let d = BigInt::from(5).pow(2 * n + 1);
    DioSystem::normalize([big(1), big(0), -d, big(0), big(0), big(1)], big(1), [big(0), big(0)]).unwrap()
}

/// `(2 + √5)^(5ⁿ) = x + y·5ⁿ√5`, by exact expansion.
fn anti_pell_expansion(n: u32) -> (BigInt, BigInt) {
    let (mut t, mut u) = (big(1), big(0));
    for _ in 0..5u32.pow(n) {
        (t, u) = (&t * 2 + &u * 5, &t + &u * 2);
    }
    let scale = BigInt::from(5).pow(n);
    assert!(u.is_multiple_of(&scale));
    (t, u / scale)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut details = Vec::new();
    for n in 1..=2 {
        let sys = anti_pell(n);
        let d = sys.determinant().abs();
        let expected = anti_pell_expansion(n);
        let Some(found) = certificate(&sys, &SearchOptions::default()).and_then(|c| proven_solution(&sys, &c)) else {
            return verdict(false, format!("D={d}: no verified solution"));
        };
        // The least solution of x² − Dy² = −1 squares to the fundamental unit.
        let unit = fundamental_solution(&d).unwrap();
        let (x, y) = &found;
        let squares_to_unit = x * x + &d * y * y == unit.t1 && x * y * 2 == unit.u1;
        if found != expected || !squares_to_unit {
            return verdict(false, format!("D={d}: got {found:?}, expected {expected:?}"));
        }
        details.push(format!("D={d}: {} digits", x.to_string().len()));
    }
    let elapsed = start.elapsed();
    details.push(format!("(682, 61) at D=125; {elapsed:.2?} < {ANTI_PELL_LIMIT:?}"));
    verdict(elapsed < ANTI_PELL_LIMIT, details.join("; "))
}

/// Lower bound on `√D` as a rational with denominator 10⁶.
fn sqrt_lower(d: &BigInt) -> BigRational {
    BigRational::new(isqrt(&(d * big(1_000_000_000_000))).unwrap(), big(1_000_000))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut literal_failures = Vec::new();
    for d in 2..=2000i64 {
        let dd = big(d);
        if is_square(&dd).is_some() {
            continue;
        }
        let unit = fundamental_solution(&dd).unwrap();
        if d >= 4 {
            // ε = t₁ + u₁√D < 2t₁ and D^√D ≥ D^⌊√D⌋.
            let floor_root = isqrt(&dd).unwrap().to_u32().unwrap();
            if &unit.t1 * 2 >= dd.pow(floor_root) {
                return verdict(false, format!("D={d}: 2t₁ ≥ D^⌊√D⌋"));
            }
            continue;
        }
        // Below 4 the logarithm is floored at 2: need ε < e^(2√D). Bound ε
        // above with a rational upper root and e^x below by its Taylor sum.
        let root_up = sqrt_lower(&dd) + BigRational::new(big(1), big(1_000_000));
        let eps_up = BigRational::from(unit.t1.clone()) + BigRational::from(unit.u1.clone()) * &root_up;
        let x = sqrt_lower(&dd) * BigRational::from(big(2));
        let (mut term, mut exp_low) = (BigRational::one(), BigRational::one());
        for i in 1..=12 {
            term = term * &x / BigRational::from(big(i));
            exp_low += &term;
        }
        if eps_up >= exp_low {
            return verdict(false, format!("D={d}: ε ≥ e^(2√D)"));
        }
        // Record where the unfloored natural logarithm would fail.
        let eps = unit.t1.to_f64().unwrap() + unit.u1.to_f64().unwrap() * (d as f64).sqrt();
        if eps.ln() >= (d as f64).sqrt() * (d as f64).ln() {
            literal_failures.push(d);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        elapsed < HUA_LIMIT,
        format!(
            "all nonsquare D ≤ 2000 with the floored logarithm; unfloored ln fails only at D ∈ {literal_failures:?}; {elapsed:.2?}"
        ),
    )
}

fn sign_pattern(m: &Mat2) -> [i32; 4] {
    m.entries().map(|x| match x.sign() {
        num_bigint::Sign::Plus => 1,
        num_bigint::Sign::NoSign => 0,
        num_bigint::Sign::Minus => -1,
    })
}

/// `max|l| ≤ 4(D + √D)·min|l|` exactly, with `min|l| ≥ 1`.
fn ratio_within_bound(m: &Mat2, d: &BigInt) -> bool {
    let entries = m.entries().map(|x| x.abs());
    let max = entries.iter().max().unwrap().clone();
    let min = entries.iter().min().unwrap().clone();
    if min.is_zero() {
        return false;
    }
    let lhs: BigInt = &max - &min * 4 * d;
    !lhs.is_positive() || &lhs * &lhs <= &min * &min * 16 * d
}

fn cycle_structure(d: i64) -> Result<(), String> {
    let dd = big(d);
    let cycle = principal_cycle(&dd).map_err(|e| e.to_string())?;
    let period = cycle.period();
    if period % 2 != 0 {
        return Err(format!("D={d}: odd cycle length {period}"));
    }
    let half = (period / 2) as f64;
    if half >= ((d as f64).sqrt() + 1.0) * (d as f64).ln() {
        return Err(format!("D={d}: p = {half} too long"));
    }
    for (i, q) in cycle.forms().iter().enumerate() {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        if !is_reduced(q).unwrap() || q.a.clone() * sign <= BigInt::zero() {
            return Err(format!("D={d}: form {i} has the wrong sign or is not reduced"));
        }
    }
    let patterns = [[1, 1, 1, 1], [-1, 1, -1, 1], [-1, -1, -1, -1], [1, -1, 1, -1]];
    let mut l = UniMat::identity();
    let mut abs_product = Mat2::identity();
    for j in 1..=period {
        let (s, _) = cycle.step(j);
        l = &l * s;
        abs_product = &abs_product * &s.mat().map(|x| x.abs());
        if l.mat().map(|x| x.abs()) != abs_product {
            return Err(format!("D={d}, j={j}: cancellation"));
        }
        if j >= 2 && (sign_pattern(l.mat()) != patterns[j % 4] || !ratio_within_bound(l.mat(), &dd)) {
            return Err(format!("D={d}, j={j}: sign pattern or ratio"));
        }
    }
    let (identity, _) = reduced_identity(&dd).unwrap();
    if apply_transform(&identity, &l) != identity {
        return Err(format!("D={d}: L_2p does not fix the identity form"));
    }
    Ok(())
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut checked = 0;
    for d in 2..=10_000i64 {
        if is_square(&big(d)).is_some() {
            continue;
        }
        if let Err(e) = cycle_structure(d) {
            return verdict(false, e);
        }
        checked += 1;
    }
    let elapsed = start.elapsed();
    verdict(elapsed < CYCLE_LIMIT, format!("{checked} determinants; {elapsed:.2?} < {CYCLE_LIMIT:?}"))
}

fn random_nonsquare(rng: &mut ChaCha8Rng, max: i64) -> BigInt {
    loop {
        let d = big(rng.gen_range(2..=max));
        if is_square(&d).is_none() {
            return d;
        }
    }
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let mut worst = 0.0f64;
    let mut violations = 0;
    for _ in 0..500 {
        let d = random_nonsquare(&mut rng, 100_000);
        let cycle = principal_cycle(&d).unwrap();
        let period = cycle.period() as i64;
        let (i1, i2) = (rng.gen_range(0..=period), rng.gen_range(0..=period));
        let (q3, b) = compose_reduced(cycle.form(i1), cycle.form(i2)).unwrap();
        if cycle.position(&q3).is_none() {
            return verdict(false, format!("D={d}: composite left the principal cycle"));
        }
        let (l1, l2) = (simple_equiv_matrix(&cycle, i1), simple_equiv_matrix(&cycle, i2));
        let s3 = solve_s3(&b, &b0_matrix(&d).unwrap(), l1.mat(), l2.mat()).unwrap();
        let xi = log2_big(&s3.norm()) - log2_big(&l1.norm()) - log2_big(&l2.norm());
        let log_d = log2_big(&d);
        if xi.abs() > (COMPOSITION_SIZE_CONSTANT + 4.0) * log_d + ADDITIVITY_SLACK {
            violations += 1;
        }
        worst = worst.max(xi.abs() / log_d);
    }
    verdict(
        violations == 0,
        format!("500 pairs, c_B = {COMPOSITION_SIZE_CONSTANT}, {violations} violations, worst |ξ|/log₂D = {worst:.3}"),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = random_nonsquare(&mut rng, 1_000_000);
        let cycle = principal_cycle(&d).unwrap();
        let j = rng.gen_range(0..=cycle.period());
        let chain = doubling_chain(&cycle, j).unwrap();
        let scale = (1.0 + log2_big(&d)).powi(2);
        worst = worst.max(chain.len() as f64 / scale);
        if chain.len() as f64 > CHAIN_LENGTH_CONSTANT * scale {
            return verdict(false, format!("D={d}, j={j}: K = {}", chain.len()));
        }
    }
    let mut exact_checks = 0;
    for d in 2..=500i64 {
        let d = big(d);
        if is_square(&d).is_some() {
            continue;
        }
        let cycle = principal_cycle(&d).unwrap();
        let builder = ChainBuilder::new(&cycle);
        for j in 0..=cycle.period() {
            let chain = builder.build(j).unwrap();
            if chain.multiply_out(cycle.real_det()).unwrap() != simple_equiv_matrix(&cycle, j as i64) {
                return verdict(false, format!("D={d}, j={j}: chain does not multiply out to L_j"));
            }
            exact_checks += 1;
        }
    }
    verdict(
        true,
        format!("C_K = {CHAIN_LENGTH_CONSTANT}, worst K/(1+log₂D)² = {worst:.3}; {exact_checks} exact chains for D ≤ 500"),
    )
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let mut checks = 0;
    for d in [2i64, 3, 5, 13, 61] {
        let unit = fundamental_solution(&big(d)).unwrap();
        let periods: Vec<BigInt> = (0..=500i64)
            .map(|m| if m == 0 { BigInt::zero() } else { period_mod(&unit, &big(m)).unwrap().period })
            .collect();
        for m in 1..=500i64 {
            let p = &periods[m as usize];
            if p > &period_bound(&big(m)) {
                return verdict(false, format!("D={d}, m={m}: P = {p} above the bound"));
            }
            for m1 in 2..m {
                if m % m1 == 0 && m1.gcd(&(m / m1)) == 1 && m / m1 > 1 {
                    let lcm = periods[m1 as usize].lcm(&periods[(m / m1) as usize]);
                    if &lcm != p {
                        return verdict(false, format!("D={d}, m={m}={m1}·{}: lcm law fails", m / m1));
                    }
                    checks += 1;
                }
            }
            if is_prime(&big(m)) {
                let divisor = if m == 2 {
                    big(2)
                } else {
                    match jacobi(&big(d), &big(m)) {
                        1 => big(m - 1),
                        -1 => big(2 * (m + 1)),
                        _ => big(2 * m),
                    }
                };
                if !divisor.is_multiple_of(p) {
                    return verdict(false, format!("D={d}, p={m}: P = {p} does not divide {divisor}"));
                }
                checks += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(elapsed < PERIOD_LIMIT, format!("{checks} lcm and prime checks; {elapsed:.2?} < {PERIOD_LIMIT:?}"))
}

fn fp_format(p: u32) -> FpFormat {
    FpFormat::new(p, 1 << 20).unwrap()
}

fn random_dyadic(rng: &mut ChaCha8Rng, max_bits: u32) -> Dyadic {
    let bits = rng.gen_range(1..=max_bits);
    let mut m = BigInt::zero();
    for _ in 0..bits {
        m = (m << 1u32) + BigInt::from(rng.gen_range(0..2u8));
    }
    m |= BigInt::one() << (bits - 1);
    if rng.gen_bool(0.5) {
        m = -m;
    }
    Dyadic::new(m, rng.gen_range(-40..40))
}

/// A p-digit float and an exact value it approximates to `s` digits.
fn approx_pair(rng: &mut ChaCha8Rng, p: u32, s: u32, positive: bool) -> (FpNum, Dyadic) {
    loop {
        let mut xbar = random_dyadic(rng, p);
        if positive != xbar.mant.is_positive() {
            xbar = xbar.neg();
        }
        let xbar_fp = round_p(&xbar, fp_format(p)).unwrap();
        let e = xbar.exponent().unwrap() - 1;
        let delta = Dyadic::new(BigInt::from(rng.gen_range(-(1i64 << 20) + 1..(1i64 << 20))), e - s as i64 - 22);
        let x = xbar.add(&delta);
        if !x.is_zero() && significant_digits(&xbar, &x).map_or(true, |d| d >= s as i64) {
            return (xbar_fp, x);
        }
    }
}

fn digits(approx: &FpNum, exact: &Dyadic) -> i64 {
    significant_digits(&approx.to_dyadic(), exact).unwrap_or(i64::MAX)
}

fn to_rational(d: &Dyadic) -> BigRational {
    if d.exp >= 0 {
        BigRational::from(&d.mant << d.exp as u64)
    } else {
        BigRational::new(d.mant.clone(), BigInt::one() << (-d.exp) as u64)
    }
}

fn random_tree(rng: &mut ChaCha8Rng, depth: u32, f: FpFormat) -> (Enclosure, BigRational) {
    if depth == 0 || rng.gen_bool(0.2) {
        let leaf = random_dyadic(rng, 80);
        return (Enclosure::from_dyadic(&leaf, f).unwrap(), to_rational(&leaf));
    }
    let (a, ra) = random_tree(rng, depth - 1, f);
    match rng.gen_range(0..4) {
        0 => {
            let (b, rb) = random_tree(rng, depth - 1, f);
            (enc_add(&a, &b).unwrap(), ra + rb)
        }
        1 => {
            let (b, rb) = random_tree(rng, depth - 1, f);
            (enc_sub(&a, &b).unwrap(), ra - rb)
        }
        2 => {
            let (b, rb) = random_tree(rng, (depth - 1).min(3), f);
            (enc_mul(&a, &b).unwrap(), ra * rb)
        }
        _ => {
            let d = BigInt::from(rng.gen_range(1i64..100_000)) * if rng.gen_bool(0.5) { 1 } else { -1 };
            (enc_div_int(&a, &d).unwrap(), ra / BigRational::from(d))
        }
    }
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let precisions = [8u32, 16, 53];
    let mut violations = [0usize; 5];
    for trial in 0..FP_TRIALS {
        let p = precisions[trial % 3];
        // Rounding: |Round(x) − x| ≤ 2^(e−p−1) with 2^(e−1) ≤ |x| < 2^e.
        let x = random_dyadic(&mut rng, 120);
        let r = round_p(&x, fp_format(p)).unwrap();
        let half_ulp = Dyadic::new(BigInt::one(), x.exponent().unwrap() - p as i64 - 1);
        if r.to_dyadic().sub(&x).abs().cmp_exact(&half_ulp).is_gt() {
            violations[0] += 1;
        }
        // Same-sign addition loses at most 2 digits, multiplication at most 3.
        let s = rng.gen_range(1..=p);
        let positive = rng.gen_bool(0.5);
        let (xb, xe) = approx_pair(&mut rng, p, s, positive);
        let (yb, ye) = approx_pair(&mut rng, p, s, positive);
        if digits(&fadd(&xb, &yb).unwrap(), &xe.add(&ye)) < s as i64 - 2 {
            violations[1] += 1;
        }
        let other = rng.gen_bool(0.5);
        let (zb, ze) = approx_pair(&mut rng, p, s, other);
        if digits(&fmul(&xb, &zb).unwrap(), &xe.mul(&ze)) < s as i64 - 3 {
            violations[2] += 1;
        }
        // Sums of at most four terms lose at most A + 8 digits.
        let j = rng.gen_range(1..=4);
        let terms: Vec<(FpNum, Dyadic)> = (0..j)
            .map(|_| {
                let sign = rng.gen_bool(0.5);
                approx_pair(&mut rng, p, s, sign)
            })
            .collect();
        let exact = terms.iter().fold(Dyadic::zero(), |acc, (_, x)| acc.add(x));
        if !exact.is_zero() {
            let sum = terms[1..].iter().fold(terms[0].0.clone(), |acc, (xb, _)| fadd(&acc, xb).unwrap());
            let e = terms.iter().map(|(xb, _)| xb.exponent() - 1).max().unwrap();
            let a = e - (exact.exponent().unwrap() - 1);
            if digits(&sum, &exact) < s as i64 - a - 8 {
                violations[3] += 1;
            }
        }
        // Enclosures contain the exact rational value.
        let depth = rng.gen_range(1..=10);
        let (enc, truth) = random_tree(&mut rng, depth, fp_format(p));
        let diff = (truth.clone() - to_rational(&enc.val.to_dyadic())).abs();
        let sound = match enc.err_exp {
            None => diff.is_zero(),
            Some(k) => diff < to_rational(&Dyadic::new(BigInt::one(), k)),
        };
        let sign_ok = match sign_certified(&enc) {
            Sign::Positive => truth.is_positive(),
            Sign::Negative => truth.is_negative(),
            _ => true,
        };
        if !sound || !sign_ok {
            violations[4] += 1;
        }
    }
    verdict(
        violations.iter().all(|&v| v == 0),
        format!(
            "{FP_TRIALS} trials each; violations: rounding {}, add {}, mul {}, short sums {}, enclosures {}",
            violations[0], violations[1], violations[2], violations[3], violations[4]
        ),
    )
}

fn sample_count() -> usize {
    std::env::var("BQD_ACCEPTANCE_SAMPLES").ok().and_then(|s| s.parse().ok()).unwrap_or(ORACLE_SAMPLES)
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let samples = sample_count();
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    let (mut found, mut unsolvable_checked) = (0, 0);
    for _ in 0..samples {
        let raw: [i64; 6] = std::array::from_fn(|_| rng.gen_range(-12..=12));
        let gamma = rng.gen_range(1..=3);
        let alpha = [rng.gen_range(0..gamma), rng.gen_range(0..gamma)];
        let sys = DioSystem::normalize(raw.map(big), big(gamma), alpha.map(big)).unwrap();
        let oracle = brute_force_oracle(&sys, ORACLE_BOUND);
        let outcome = match solve(&sys, &SearchOptions::default()) {
            Ok(outcome) => outcome,
            Err(e) => return verdict(false, format!("{sys}: {e}")),
        };
        match (&oracle, outcome) {
            (_, Outcome::Solvable(cert)) => {
                if proven_solution(&sys, &cert).is_none_or(|(x1, x2)| !sys.is_admissible(&x1, &x2)) {
                    return verdict(false, format!("{sys}: certificate does not verify"));
                }
                found += usize::from(oracle.is_some());
            }
            (Some(x), Outcome::Unsolvable) => {
                return verdict(false, format!("{sys}: oracle found {x:?} but the solver says unsolvable"));
            }
            (None, Outcome::Unsolvable) => {
                // In the definite case every solution lies inside the box, so
                // the oracle is itself a complete search.
                if classify(&sys) == SystemClass::Definite {
                    unsolvable_checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        elapsed < ORACLE_LIMIT,
        format!(
            "{samples} sampled systems, {found} oracle solutions all certified, {unsolvable_checked} definite UNSOLVABLE verdicts confirmed; {elapsed:.2?}"
        ),
    )
}

fn infra(cert: &SolvCert) -> &InfraCert {
    match &cert.proof {
        SolvProof::Infra(infra) => infra,
        SolvProof::Direct { .. } => panic!("expected an infrastructure certificate"),
    }
}

fn criterion_9() -> Verdict {
    let sys = DioSystem::from_raw_i64([1, 0, -61, 0, 0, 1]);
    let Some(cert) = certificate(&sys, &forced()) else { return verdict(false, "no certificate") };
    if !cert.is_infra() {
        return verdict(false, "forced certificate is direct");
    }
    if let Err(e) = verify_solvability(&sys, &cert) {
        return verdict(false, format!("verification failed: {e}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    for _ in 0..10 {
        let m = big(rng.gen_range(2..=1_000_000_000));
        let expected = (big(29718).mod_floor(&m), big(3805).mod_floor(&m));
        if reconstruct_solution_mod(&sys, &cert, &m).ok() != Some(expected) {
            return verdict(false, format!("reconstruction modulo {m} disagrees"));
        }
    }
    verdict(true, format!("infra certificate of {} bytes verifies; 10 random moduli agree", cert.to_text().len()))
}

/// Replaces one integer token of a certificate by a nearby or random value.
fn mutate(text: &str, rng: &mut ChaCha8Rng) -> String {
    let mut lines: Vec<Vec<String>> =
        text.lines().map(|l| l.split_whitespace().map(str::to_string).collect()).collect();
    loop {
        let i = rng.gen_range(1..lines.len());
        let j = rng.gen_range(0..lines[i].len());
        let Ok(value) = lines[i][j].parse::<BigInt>() else { continue };
        let replaced = match rng.gen_range(0..4) {
            0 => value + 1,
            1 => value - 1,
            2 => -value,
            _ => value + big(rng.gen_range(-1000..=1000)),
        };
        if replaced.to_string() != lines[i][j] {
            lines[i][j] = replaced.to_string();
            return lines.iter().map(|l| l.join(" ")).collect::<Vec<_>>().join("\n") + "\n";
        }
    }
}

fn criterion_10() -> Verdict {
    let systems = [[1, 0, -61, 0, 0, 1], [1, 0, -13, 0, 0, -3], [1, 0, -13, 0, 0, 3], [1, 0, -125, 0, 0, 1]];
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut rejected, mut revalidated) = (0, 0);
    for raw in systems {
        let sys = DioSystem::from_raw_i64(raw);
        let Some(cert) = certificate(&sys, &forced()) else { return verdict(false, format!("{sys}: no certificate")) };
        let text = cert.to_text();
        for _ in 0..50 {
            let mutated = mutate(&text, &mut rng);
            let Ok(parsed) = SolvCert::from_text(&mutated) else {
                rejected += 1;
                continue;
            };
            if verify_solvability(&sys, &parsed).is_err() {
                rejected += 1;
                continue;
            }
            let sound = match &parsed.proof {
                SolvProof::Infra(infra) => exact_solution(&sys, infra).is_ok_and(|(x1, x2)| sys.is_admissible(&x1, &x2)),
                SolvProof::Direct { x1, x2 } => sys.is_admissible(x1, x2),
            };
            if !sound {
                return verdict(false, format!("unsound acceptance:\n{mutated}"));
            }
            revalidated += 1;
        }
    }
    verdict(true, format!("200 mutations: {rejected} rejected, {revalidated} accepted and re-validated exactly"))
}

/// A random form with determinant `d`, found by sampling small `a` and `b`.
fn random_form(rng: &mut ChaCha8Rng, d: &BigInt) -> QForm {
    loop {
        let a = big(rng.gen_range(1..=200) * if rng.gen_bool(0.5) { 1 } else { -1 });
        let b = big(rng.gen_range(-1000..=1000));
        let num = &b * &b - d;
        if num.is_multiple_of(&a) {
            return QForm { c: num / &a, a, b };
        }
    }
}

fn random_unimodular(rng: &mut ChaCha8Rng) -> UniMat {
    let turn = UniMat::from_i64([[0, -1], [1, 0]]).unwrap();
    let mut m = UniMat::identity();
    for _ in 0..rng.gen_range(1..8) {
        m = &(&m * &UniMat::translation(big(rng.gen_range(-20..=20)))) * &turn;
    }
    m
}

fn criterion_11() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1101);
    let mut worst_ratio = 0.0f64;
    for i in 0..200 {
        let d = random_nonsquare(&mut rng, 1_000_000);
        let q1 = random_form(&mut rng, &d);
        let q2 = q1.transform_by(random_unimodular(&mut rng).mat());
        let EquivOutcome::Equivalent(cert) = generate_equivalence(&q1, &q2).unwrap() else {
            return verdict(false, format!("pair {i}: {q1} and {q2} reported inequivalent"));
        };
        let report = match verify_equivalence(&cert) {
            Ok(report) => report,
            Err(e) => return verdict(false, format!("pair {i}: {e}")),
        };
        let scale = d.bits() + q1.norm().bits() + q2.norm().bits();
        if report.peak_bits > EQUIV_BIT_CONSTANT * scale {
            return verdict(false, format!("pair {i}: peak {} bits over {EQUIV_BIT_CONSTANT}·{scale}", report.peak_bits));
        }
        worst_ratio = worst_ratio.max(report.peak_bits as f64 / scale as f64);
    }
    let mut rejected = 0;
    while rejected < 200 {
        let d = random_nonsquare(&mut rng, 2000);
        let (q1, q2) = (random_form(&mut rng, &d), random_form(&mut rng, &d));
        if q1.content_abc() != q2.content_abc() || equivalent_by_cycle_scan(&q1, &q2).unwrap() {
            continue;
        }
        if let EquivOutcome::Equivalent(_) = generate_equivalence(&q1, &q2).unwrap() {
            return verdict(false, format!("{q1} and {q2} differ by cycle scan but were certified"));
        }
        rejected += 1;
    }
    verdict(
        true,
        format!("200 equivalent pairs verified, worst peak/(log D + log‖Q₁‖ + log‖Q₂‖) = {worst_ratio:.2} ≤ {EQUIV_BIT_CONSTANT}; 200 inequivalent pairs rejected"),
    )
}

/// Fastest of several verification runs.
fn verification_time(sys: &DioSystem, cert: &SolvCert) -> Duration {
    (0..7)
        .map(|_| {
            let start = Instant::now();
            verify_solvability(sys, cert).unwrap();
            start.elapsed()
        })
        .min()
        .unwrap()
}

fn criterion_12() -> Verdict {
    let mut points = Vec::new();
    let mut digit_counts = Vec::new();
    let mut details = Vec::new();
    for n in 1..=3 {
        let sys = anti_pell(n);
        let Some(cert) = certificate(&sys, &forced()) else { return verdict(false, format!("n={n}: no certificate")) };
        let report = match verify_solvability(&sys, &cert) {
            Ok(report) => report,
            Err(e) => return verdict(false, format!("n={n}: {e}")),
        };
        let (x, _) = exact_solution(&sys, infra(&cert)).unwrap();
        // The same certificate with the exponent raised by a multiple of the
        // recurrence period so that W has about 2⁴⁰ bits; verification must
        // stay within the same polynomial bit budget.
        let c = infra(&cert);
        let d = sys.determinant();
        let unit = fundamental_solution(&d).unwrap();
        let period = period_mod(&unit, to_pell(&sys).unwrap().modulus()).unwrap().period * 2;
        let multiple: BigInt = (BigInt::one() << 40u32) / (&period * BigInt::from(unit.t1.bits()));
        let mut raised = cert.clone();
        if let SolvProof::Infra(r) = &mut raised.proof {
            r.k = &c.k + &period * multiple.max(BigInt::one());
            r.fp_precision = required_precision(&sys, r).unwrap() as u32;
        }
        let raised_report = match verify_solvability(&sys, &raised) {
            Ok(report) => report,
            Err(e) => return verdict(false, format!("n={n}: raised exponent rejected: {e}")),
        };
        if report.peak_bits > report.bit_limit || raised_report.peak_bits > raised_report.bit_limit {
            return verdict(false, format!("n={n}: bit meter exceeded its limit"));
        }
        let time = verification_time(&sys, &cert);
        points.push(((sys.length() as f64).ln(), time.as_secs_f64().ln()));
        digit_counts.push(x.to_string().len());
        details.push(format!(
            "n={n}: L={} verify {time:.2?} peak {} bits, {} digits, raised-k peak {} bits",
            sys.length(),
            report.peak_bits,
            x.to_string().len(),
            raised_report.peak_bits
        ));
    }
    // Least-squares slope of ln(time) against ln(L).
    let k = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / k, sy / k);
    let slope = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / points.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
    let growth_ok = digit_counts[2] > DIGIT_GROWTH * digit_counts[1];
    details.push(format!(
        "fitted exponent {slope:.2} (limit {TIME_EXPONENT_LIMIT}); digits n=3/n=2 = {}/{} = {:.2} (needs > {DIGIT_GROWTH})",
        digit_counts[2],
        digit_counts[1],
        digit_counts[2] as f64 / digit_counts[1] as f64
    ));
    verdict(slope <= TIME_EXPONENT_LIMIT && growth_ok, details.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Verdict); 12] = [
        (1, "anti-Pell family minimal solutions", criterion_1),
        (2, "fundamental unit size bound", criterion_2),
        (3, "principal cycle structure", criterion_3),
        (4, "composition near-additivity", criterion_4),
        (5, "doubling chain length and exactness", criterion_5),
        (6, "recurrence periods", criterion_6),
        (7, "bounded-precision arithmetic", criterion_7),
        (8, "oracle equivalence", criterion_8),
        (9, "infrastructure round trip", criterion_9),
        (10, "tamper suite", criterion_10),
        (11, "equivalence certificates", criterion_11),
        (12, "verifier succinctness", criterion_12),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let Verdict { pass, detail } = check();
        let tag = if pass { "PASS" } else { "FAIL" };
        let known = KNOWN_FAILURES.contains(&id);
        let note = if known && !pass { " [known failure]" } else { "" };
        println!("{tag} {id:>2} {name}{note}: {detail} ({:.2?})", start.elapsed());
        if pass == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria behave as documented");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
