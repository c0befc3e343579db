use bqd_core::forms::{fundamental_automorph, principal_cycle};
use bqd_core::numtheory::{factorize, is_prime, is_square, jacobi};
use bqd_core::pell::{cf_sqrt, fundamental_solution, period_bound, period_mod, power_mod};
use bqd_core::{Error, PellSolution};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

fn sol(d: i64) -> PellSolution {
    fundamental_solution(&big(d)).unwrap()
}

#[test]
fn cf_sqrt_examples() {
    assert_eq!(cf_sqrt(&big(2)).unwrap(), (big(1), vec![big(2)]));
    assert_eq!(
        cf_sqrt(&big(13)).unwrap(),
        (big(3), [1, 1, 1, 1, 6].map(big).to_vec())
    );
    assert_eq!(cf_sqrt(&big(3)).unwrap(), (big(1), vec![big(1), big(2)]));
    assert!(matches!(cf_sqrt(&big(16)), Err(Error::Domain(_))));
}

#[test]
fn cf_quotients_match_cycle_parameters() {
    for d in 2i64..=3000 {
        if is_square(&big(d)).is_some() {
            continue;
        }
        let (_, quotients) = cf_sqrt(&big(d)).unwrap();
        let cycle = principal_cycle(&big(d)).unwrap();
        let n = quotients.len();
        let expected_period = if n % 2 == 0 { n } else { 2 * n };
        assert_eq!(cycle.period(), expected_period, "D = {d}");
        for i in 1..=cycle.period() {
            let (_, lam) = cycle.step(i);
            assert_eq!(lam.abs(), quotients[(i - 1) % n], "D = {d}, i = {i}");
        }
    }
}

#[test]
fn fundamental_solution_examples() {
    let s = sol(3);
    assert_eq!((s.t1, s.u1), (big(2), big(1)));
    let s = sol(61);
    assert_eq!((s.t1, s.u1), (big(1_766_319_049), big(226_153_980)));
    let s = sol(5);
    assert_eq!((s.t1, s.u1), (big(9), big(4)));
}

#[test]
fn fundamental_solution_agrees_with_automorph_and_brute_force() {
    for d in 2i64..=1000 {
        if is_square(&big(d)).is_some() {
            continue;
        }
        let s = sol(d);
        let (_, t, u) = fundamental_automorph(&principal_cycle(&big(d)).unwrap()).unwrap();
        assert_eq!((&s.t1, &s.u1), (&t, &u), "D = {d}");
        if s.u1 <= big(20_000) {
            // No smaller positive u gives a square D·u² + 1.
            let u_min = (1i64..)
                .find(|&u| is_square(&(big(d) * u * u + 1)).is_some())
                .unwrap();
            assert_eq!(big(u_min), s.u1, "D = {d}");
        }
    }
}

#[test]
fn power_mod_examples() {
    let s = sol(3);
    assert_eq!(power_mod(&s, &big(0), &big(10)).unwrap(), (big(1), big(0)));
    assert_eq!(power_mod(&s, &big(2), &big(10)).unwrap(), (big(7), big(4)));
    assert_eq!(power_mod(&s, &big(6), &big(3)).unwrap(), (big(1), big(0)));
    assert_eq!(power_mod(&s, &big(0), &big(1)).unwrap(), (big(0), big(0)));
}

#[test]
fn power_mod_matches_exact_expansion_and_recurrence() {
    for d in 2i64..=50 {
        if is_square(&big(d)).is_some() {
            continue;
        }
        let s = sol(d);
        let (mut t, mut u) = (big(1), big(0));
        let mut ts = vec![t.clone()];
        for k in 0..=30i64 {
            for m in [7i64, 1000, 65_537] {
                let (tm, um) = power_mod(&s, &big(k), &big(m)).unwrap();
                assert_eq!((tm, um), (t.mod_floor(&big(m)), u.mod_floor(&big(m))));
            }
            let next_t = &s.t1 * &t + big(d) * &s.u1 * &u;
            let next_u = &s.u1 * &t + &s.t1 * &u;
            t = next_t;
            u = next_u;
            ts.push(t.clone());
        }
        // w_k = 2 t₁ w_{k−1} − w_{k−2} for the doubled trace sequence.
        for k in 2..ts.len() {
            assert_eq!(&ts[k], &(&s.t1 * 2 * &ts[k - 1] - &ts[k - 2]));
        }
    }
}

fn brute_period(s: &PellSolution, m: i64) -> i64 {
    let m_big = big(m);
    let (t1, u1, d) = (&s.t1 % &m_big, &s.u1 % &m_big, &s.d % &m_big);
    let (mut t, mut u) = (big(1) % &m_big, big(0));
    for k in 1.. {
        let nt = (&t1 * &t + &d * &u1 * &u) % &m_big;
        let nu = (&u1 * &t + &t1 * &u) % &m_big;
        t = nt;
        u = nu;
        if t == big(1) % &m_big && u.is_zero() {
            return k;
        }
    }
    unreachable!()
}

#[test]
fn period_mod_examples() {
    assert_eq!(period_mod(&sol(3), &big(2)).unwrap().period, big(2));
    assert_eq!(period_mod(&sol(3), &big(3)).unwrap().period, big(6));
    for d in [2i64, 3, 5, 13, 61] {
        assert_eq!(period_mod(&sol(d), &big(1)).unwrap().period, big(1));
    }
}

#[test]
fn period_mod_matches_direct_iteration() {
    for d in [2i64, 3, 5, 6, 7, 13, 61, 94, 1000] {
        let s = sol(d);
        for m in 1..=300 {
            assert_eq!(
                period_mod(&s, &big(m)).unwrap().period,
                big(brute_period(&s, m)),
                "D = {d}, m = {m}"
            );
        }
    }
}

#[test]
fn period_bound_examples() {
    assert_eq!(period_bound(&big(1)), big(6));
    assert_eq!(period_bound(&big(10)), big(67));
    assert_eq!(period_bound(&big(2)), big(12));
}

#[test]
fn period_minimality_and_structure() {
    for d in [2i64, 3, 5, 13, 61] {
        let s = sol(d);
        for m in 1..=500i64 {
            let p = period_mod(&s, &big(m)).unwrap().period;
            assert!(p <= period_bound(&big(m)), "D = {d}, m = {m}");
            for k in 0..=2i64 {
                assert_eq!(
                    power_mod(&s, &(&p + k), &big(m)).unwrap(),
                    power_mod(&s, &big(k), &big(m)).unwrap()
                );
            }
            for (q, _) in factorize(&p).unwrap().factors {
                let smaller = &p / &q;
                assert_ne!(
                    power_mod(&s, &smaller, &big(m)).unwrap(),
                    power_mod(&s, &big(0), &big(m)).unwrap(),
                    "D = {d}, m = {m}: {smaller} also works"
                );
            }
            if is_prime(&big(m)) && m > 2 {
                let divisor = match jacobi(&big(d), &big(m)) {
                    1 => big(m - 1),
                    -1 => big(2 * (m + 1)),
                    _ => big(2 * m),
                };
                assert!((&divisor % &p).is_zero(), "D = {d}, p = {m}");
            }
        }
    }
}

#[test]
fn hua_bound_holds() {
    // For D ≥ 4: ε = t₁ + u₁√D < 2t₁ and D^√D ≥ D^⌊√D⌋, so 2t₁ < D^⌊√D⌋
    // certifies ln ε < √D·ln D with integers only. Below 4 the logarithm is
    // floored at 2, so the bound reads ln ε < 2√D.
    for d in 2u32..=2000 {
        let dd = big(d as i64);
        if is_square(&dd).is_some() {
            continue;
        }
        let s = sol(d as i64);
        assert!(s.t1.is_positive() && (&s.t1 * &s.t1 - &dd * &s.u1 * &s.u1).is_one());
        if d < 4 {
            let eps = s.t1.to_f64().unwrap() + s.u1.to_f64().unwrap() * (d as f64).sqrt();
            assert!(eps.ln() < 2.0 * (d as f64).sqrt(), "D = {d}");
            continue;
        }
        let lam = (d as f64).sqrt().floor() as u32;
        let power: BigInt = Pow::pow(&dd, lam);
        assert!(&s.t1 * 2 < power, "D = {d}");
    }
}

#[test]
fn hua_bound_without_log_floor_fails_only_at_two() {
    // 3 + 2√2 ≈ 5.83 exceeds 2^√2 ≈ 2.67, so the unfloored bound is false
    // at D = 2 and holds at D = 3.
    let eps2 = 3.0 + 2.0 * 2f64.sqrt();
    assert!(eps2.ln() > 2f64.sqrt() * 2f64.ln());
    let eps3 = 2.0 + 3f64.sqrt();
    assert!(eps3.ln() < 3f64.sqrt() * 3f64.ln());
}
