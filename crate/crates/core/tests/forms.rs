use bqd_core::forms::{
    apply_transform, determinant, fundamental_automorph, is_reduced, principal_cycle, reduce,
    reduced_identity, right_neighbor, simple_equiv_matrix, REDUCE_BITS_CONSTANT,
};
use bqd_core::numtheory::{is_square, log2_big};
use bqd_core::{Error, Mat2, QForm, UniMat};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

fn form(a: i64, b: i64, c: i64) -> QForm {
    QForm::new(a, b, c)
}

fn uni(m: [[i64; 2]; 2]) -> UniMat {
    UniMat::from_i64(m).unwrap()
}

fn nonsquare(d: i64) -> bool {
    is_square(&big(d)).is_none()
}

#[test]
fn determinant_examples() {
    assert_eq!(determinant(&form(1, 0, -13)), big(13));
    assert_eq!(determinant(&form(1, 3, -4)), big(13));
    assert_eq!(determinant(&form(1, 0, 1)), big(-1));
}

#[test]
fn apply_transform_examples() {
    let q = form(1, 0, -13);
    assert_eq!(apply_transform(&q, &UniMat::identity()), q);
    assert_eq!(apply_transform(&q, &uni([[1, 3], [0, 1]])), form(1, 3, -4));
    assert_eq!(
        apply_transform(&form(1, 3, -4), &uni([[0, 1], [-1, 1]])),
        form(-4, 1, 3)
    );
    assert!(matches!(
        UniMat::from_i64([[2, 0], [0, 1]]),
        Err(Error::Domain(_))
    ));
}

#[test]
fn is_reduced_examples() {
    assert!(is_reduced(&form(1, 3, -4)).unwrap());
    assert!(!is_reduced(&form(1, 0, -13)).unwrap());
    assert!(is_reduced(&form(3, 2, -3)).unwrap());
    assert!(matches!(is_reduced(&form(1, 0, 1)), Err(Error::Domain(_))));
    assert!(matches!(is_reduced(&form(1, 0, -4)), Err(Error::Domain(_))));
}

#[test]
fn is_reduced_matches_float_definition() {
    for a in -30i64..=30 {
        for b in -30i64..=30 {
            for c in -30i64..=30 {
                let d = b * b - a * c;
                if d <= 0 || !nonsquare(d) {
                    continue;
                }
                let r = (d as f64).sqrt();
                let bf = b as f64;
                let af = a.abs() as f64;
                let expected = 0.0 < bf && bf < r && r - bf < af && af < r + bf;
                assert_eq!(
                    is_reduced(&form(a, b, c)).unwrap(),
                    expected,
                    "[{a},{b},{c}]"
                );
            }
        }
    }
}

#[test]
fn reduce_examples() {
    let (r, s) = reduce(&form(1, 3, -4)).unwrap();
    assert_eq!((r, s), (form(1, 3, -4), UniMat::identity()));
    let (r, s) = reduce(&form(1, 0, -13)).unwrap();
    assert_eq!((r, s), (form(1, 3, -4), uni([[1, 3], [0, 1]])));
    let q = form(3, -1, -4);
    let (r, s) = reduce(&q).unwrap();
    assert!(is_reduced(&r).unwrap());
    assert_eq!(apply_transform(&q, &s), r);
    assert!(matches!(reduce(&form(2, 0, 3)), Err(Error::Domain(_))));
}

#[test]
fn reduce_postconditions_on_random_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 20_000 {
        let scale: i64 = 10i64.pow(rng.gen_range(1..=9));
        let (a, b, c) = (
            rng.gen_range(-scale..=scale),
            rng.gen_range(-scale..=scale),
            rng.gen_range(-scale..=scale),
        );
        let q = form(a, b, c);
        let d = q.determinant();
        if !d.is_positive() || is_square(&d).is_some() {
            continue;
        }
        let (r, s) = reduce(&q).unwrap();
        assert!(is_reduced(&r).unwrap());
        assert_eq!(apply_transform(&q, &s), r);
        let ratio = s.norm().bits() as f64 / (1.0 + log2_big(&q.norm()));
        worst = worst.max(ratio);
        checked += 1;
    }
    eprintln!("worst reduce ratio {worst}");
    assert!(worst <= REDUCE_BITS_CONSTANT, "worst ratio {worst}");
}

#[test]
fn reduced_identity_examples() {
    assert_eq!(
        reduced_identity(&big(13)).unwrap(),
        (form(1, 3, -4), uni([[1, 3], [0, 1]]))
    );
    assert_eq!(
        reduced_identity(&big(2)).unwrap(),
        (form(1, 1, -1), uni([[1, 1], [0, 1]]))
    );
    assert_eq!(
        reduced_identity(&big(5)).unwrap(),
        (form(1, 2, -1), uni([[1, 2], [0, 1]]))
    );
    assert!(matches!(reduced_identity(&big(9)), Err(Error::Domain(_))));
    assert!(matches!(reduced_identity(&big(-3)), Err(Error::Domain(_))));
}

#[test]
fn right_neighbor_examples() {
    let (q, s, l) = right_neighbor(&form(1, 3, -4)).unwrap();
    assert_eq!((q, s, l), (form(-4, 1, 3), uni([[0, 1], [-1, 1]]), big(1)));
    let (q, _, l) = right_neighbor(&form(-4, 1, 3)).unwrap();
    assert_eq!((q, l), (form(3, 2, -3), big(-1)));
    let (q, s, l) = right_neighbor(&form(1, 1, -1)).unwrap();
    assert_eq!(q, form(-1, 1, 1));
    assert_eq!(apply_transform(&form(1, 1, -1), &s), q);
    assert_eq!(l, big(2));
    assert!(matches!(
        right_neighbor(&form(1, 0, -13)),
        Err(Error::Domain(_))
    ));
}

#[test]
fn right_neighbor_parameter_is_unique_in_window() {
    // λ is the only integer with −√D − b < λc < −√D − b + |c|.
    for d in 2i64..400 {
        if !nonsquare(d) {
            continue;
        }
        let cycle = principal_cycle(&big(d)).unwrap();
        let sqrt_d = (d as f64).sqrt();
        for q in cycle.forms() {
            let (next, s, lam) = right_neighbor(q).unwrap();
            let (b, c) = (q.b.to_f64().unwrap(), q.c.to_f64().unwrap());
            let hits: Vec<i64> = (-200..=200)
                .filter(|&l| {
                    let v = l as f64 * c;
                    -sqrt_d - b < v && v < -sqrt_d - b + c.abs()
                })
                .collect();
            assert_eq!(hits, vec![lam.to_i64().unwrap()], "D = {d}, {q}");
            assert_eq!(apply_transform(q, &s), next);
            assert!(is_reduced(&next).unwrap());
            assert_eq!(next.a, q.c);
        }
    }
}

#[test]
fn principal_cycle_examples() {
    assert_eq!(principal_cycle(&big(2)).unwrap().period(), 2);
    assert_eq!(principal_cycle(&big(13)).unwrap().period(), 10);
    let c3 = principal_cycle(&big(3)).unwrap();
    assert_eq!(c3.period(), 2);
    assert_eq!(c3.forms()[0], form(1, 1, -2));
    let c13 = principal_cycle(&big(13)).unwrap();
    assert_eq!(c13.position(&form(3, 2, -3)), Some(2));
}

#[test]
fn simple_equiv_matrix_examples() {
    let c = principal_cycle(&big(13)).unwrap();
    assert_eq!(simple_equiv_matrix(&c, 0), UniMat::identity());
    assert_eq!(simple_equiv_matrix(&c, 1), uni([[0, 1], [-1, 1]]));
    assert_eq!(simple_equiv_matrix(&c, 2), uni([[-1, -1], [-1, -2]]));
    let (ident, _) = reduced_identity(&big(13)).unwrap();
    for j in -25i64..=25 {
        let l = simple_equiv_matrix(&c, j);
        assert_eq!(&apply_transform(&ident, &l), c.form(j), "j = {j}");
    }
    for j in -25i64..=25 {
        let (step, _) = c.step((j + 1).rem_euclid(c.period() as i64) as usize);
        assert_eq!(
            simple_equiv_matrix(&c, j + 1),
            &simple_equiv_matrix(&c, j) * step
        );
    }
}

#[test]
fn fundamental_automorph_examples() {
    for (d, t, u) in [(3i64, 2i64, 1i64), (13, 649, 180), (2, 3, 2)] {
        let c = principal_cycle(&big(d)).unwrap();
        let (m, t1, u1) = fundamental_automorph(&c).unwrap();
        assert_eq!((t1, u1), (big(t), big(u)), "D = {d}");
        let lam = c.root_floor().clone();
        let expected = Mat2::new(
            big(t) - &lam * big(u),
            (big(d) - &lam * &lam) * big(u),
            big(u),
            big(t) + &lam * big(u),
        );
        assert_eq!(m.mat(), &expected);
    }
}

fn sign_pattern(m: &Mat2) -> [i32; 4] {
    m.entries().map(|x| {
        if x.is_positive() {
            1
        } else if x.is_zero() {
            0
        } else {
            -1
        }
    })
}

/// Exact test of `max|l| ≤ 4(D + √D)·min|l|` with `min|l| ≥ 1`.
fn ratio_within_bound(m: &Mat2, d: i64) -> bool {
    let entries = m.entries().map(|x| x.abs());
    let max = entries.iter().max().unwrap().clone();
    let min = entries.iter().min().unwrap().clone();
    if min.is_zero() {
        return false;
    }
    // max − 4D·min ≤ 4·min·√D
    let lhs: BigInt = &max - &min * 4 * d;
    !lhs.is_positive() || &lhs * &lhs <= &min * &min * 16 * d
}

fn check_cycle_structure(d: i64) {
    let cycle = principal_cycle(&big(d)).unwrap();
    let period = cycle.period();
    assert_eq!(period % 2, 0);
    let half = (period / 2) as f64;
    assert!(
        half < ((d as f64).sqrt() + 1.0) * (d as f64).ln(),
        "D = {d}"
    );
    for (i, q) in cycle.forms().iter().enumerate() {
        assert!(is_reduced(q).unwrap());
        let sign = if i % 2 == 0 { 1 } else { -1 };
        assert!(q.a.clone() * sign > BigInt::zero(), "D = {d}, i = {i}");
        let (_, lam) = cycle.step(i + 1);
        assert!(
            lam.clone() * sign > BigInt::zero(),
            "D = {d}, step {}",
            i + 1
        );
    }
    let patterns = [
        [1, 1, 1, 1],
        [-1, 1, -1, 1],
        [-1, -1, -1, -1],
        [1, -1, 1, -1],
    ];
    let mut l = UniMat::identity();
    let mut abs_prod = Mat2::identity();
    for j in 1..=period {
        let prev_norm = l.norm();
        let (s, _) = cycle.step(j);
        l = &l * s;
        abs_prod = &abs_prod * &s.mat().map(|x| x.abs());
        assert_eq!(
            l.mat().map(|x| x.abs()),
            abs_prod,
            "no cancellation, D = {d}, j = {j}"
        );
        if j >= 2 {
            assert_eq!(sign_pattern(l.mat()), patterns[j % 4], "D = {d}, j = {j}");
            assert!(ratio_within_bound(l.mat(), d), "ratio, D = {d}, j = {j}");
        }
        let norm = l.norm();
        assert!(
            prev_norm <= norm && norm <= &prev_norm * 4 * d,
            "growth, D = {d}, j = {j}"
        );
    }
    let (ident, _) = reduced_identity(&big(d)).unwrap();
    assert_eq!(apply_transform(&ident, &l), ident);
}

#[test]
fn cycle_structure_for_small_determinants() {
    for d in 2..=2000 {
        if nonsquare(d) {
            check_cycle_structure(d);
        }
    }
}

#[test]
fn cycle_structure_for_random_large_determinants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut done = 0;
    while done < 200 {
        let d: i64 = rng.gen_range(2..=1_000_000);
        if nonsquare(d) {
            check_cycle_structure(d);
            done += 1;
        }
    }
}

#[test]
fn norm_at_least_doubles_every_two_steps() {
    for d in [2i64, 3, 13, 61, 94, 991, 4729] {
        let c = principal_cycle(&big(d)).unwrap();
        let norms: Vec<f64> = (0..=3 * c.period() as i64)
            .map(|j| log2_big(&simple_equiv_matrix(&c, j).norm()))
            .collect();
        for j in 0..norms.len() - 2 {
            assert!(norms[j + 2] >= norms[j] + 1.0 - 1e-9, "D = {d}, j = {j}");
        }
    }
}

#[test]
fn reduction_of_random_transforms_stays_in_principal_cycle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..300 {
        let d: i64 = rng.gen_range(2..100_000);
        if !nonsquare(d) {
            continue;
        }
        let cycle = principal_cycle(&big(d)).unwrap();
        let (ident, _) = reduced_identity(&big(d)).unwrap();
        let mut s = UniMat::identity();
        for _ in 0..rng.gen_range(1..8) {
            let n: i64 = rng.gen_range(-50..=50);
            let step = if rng.gen_bool(0.5) {
                uni([[1, n], [0, 1]])
            } else {
                uni([[1, 0], [n, 1]])
            };
            s = &s * &step;
        }
        let q = apply_transform(&ident, &s);
        let (r, _) = reduce(&q).unwrap();
        assert!(cycle.position(&r).is_some(), "D = {d}");
    }
}
