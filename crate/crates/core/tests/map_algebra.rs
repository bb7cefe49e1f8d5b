mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use common::*;
use torus_resonances::map_algebra::*;
use torus_resonances::Error;

fn fin(z: [C64; 2]) -> [Ext; 2] {
    [Ext::Finite(z[0]), Ext::Finite(z[1])]
}

fn unwrap(z: [Ext; 2]) -> [C64; 2] {
    [z[0].finite().unwrap(), z[1].finite().unwrap()]
}

#[test]
fn parses_composition_of_generators() {
    let w = parse_word("F . R").unwrap();
    assert_eq!(w.atoms, vec![Atom::F, Atom::R]);
    let z = [c(0.6, 0.8), C64::from_polar(1.0, 1.1)];
    let img = evaluate_finite(&w, z).unwrap();
    assert!(dist2(img, [z[0] * z[1], z[0]]) < 1e-15);
}

#[test]
fn u_sugar_expands_in_order() {
    let w = parse_word("U(1, 0.5)").unwrap();
    assert_eq!(w.atoms, vec![Atom::G(c(0.0, 0.0), c(0.5, 0.0)), Atom::F, Atom::R, Atom::G(c(-0.5, 0.0), c(0.0, 0.0))]);
    assert_eq!(w, MapWord::u(1, c(0.5, 0.0)));
}

#[test]
fn w_sugar_expands_in_order() {
    let w = parse_word("W(2, 0.1-0.2i)").unwrap();
    assert_eq!(w.atoms, vec![Atom::F, Atom::F, Atom::R, Atom::G(c(0.0, 0.0), c(0.1, -0.2))]);
}

#[test]
fn complex_literals() {
    let w = parse_word("G(0.5+0.1i, -0.3i) . Finv . I01 . I10 . I11 . I00").unwrap();
    assert_eq!(w.atoms[0], Atom::G(c(0.5, 0.1), c(0.0, -0.3)));
    assert_eq!(&w.atoms[1..], &[Atom::Finv, Atom::I(0, 1), Atom::I(1, 0), Atom::I(1, 1), Atom::I(0, 0)]);
}

#[test]
fn parameter_outside_disk_is_rejected() {
    assert!(matches!(parse_word("G(1.2, 0)"), Err(Error::OutsideDisk { .. })));
    assert!(matches!(parse_word("U(1, 1)"), Err(Error::OutsideDisk { .. })));
}

#[test]
fn syntax_errors_carry_a_position() {
    match parse_word("F . Q") {
        Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_word("G(0.1"), Err(Error::Syntax { .. })));
    assert!(matches!(parse_word("F . "), Err(Error::Syntax { .. })));
    assert!(matches!(parse_word("I21"), Err(Error::Syntax { .. })));
}

#[test]
fn empty_text_is_identity() {
    assert!(parse_word("").unwrap().is_empty());
    assert!(parse_word("id").unwrap().is_empty());
}

#[test]
fn display_round_trips() {
    let mut r = rng(11);
    for _ in 0..50 {
        let w = random_word(&mut r, 6);
        assert_eq!(parse_word(&w.to_string()).unwrap(), w, "{w}");
    }
}

#[test]
fn automorphisms_fix_the_unit_point() {
    let w = parse_word("F . R").unwrap();
    let img = unwrap(evaluate(&w, fin([c(1.0, 0.0), c(1.0, 0.0)])).unwrap());
    assert!(dist2(img, [c(1.0, 0.0), c(1.0, 0.0)]) < 1e-15);
}

#[test]
fn moebius_factor_sends_parameter_to_zero() {
    let w = parse_word("G(0.5, 0)").unwrap();
    let img = unwrap(evaluate(&w, fin([c(0.5, 0.0), c(1.0, 0.0)])).unwrap());
    assert!(dist2(img, [c(0.0, 0.0), c(1.0, 0.0)]) < 1e-15);
}

#[test]
fn u_matches_hand_composed_formula() {
    let z = [C64::from_polar(1.0, PI / 3.0), C64::from_polar(1.0, PI / 5.0)];
    let a = c(0.5, 0.0);
    let img = evaluate_finite(&MapWord::u(1, a), z).unwrap();
    assert!(dist2(img, [b(-a, z[0]) * z[1], z[0]]) < 1e-14);
    let a = c(-0.2, 0.6);
    let img = evaluate_finite(&MapWord::u(3, a), z).unwrap();
    assert!(dist2(img, [b(-a, z[0]).powu(3) * z[1], z[0]]) < 1e-14);
}

#[test]
fn poles_become_infinity() {
    let w = parse_word("G(0.5, 0)").unwrap();
    let img = evaluate(&w, fin([c(2.0, 0.0), c(1.0, 0.0)])).unwrap();
    assert_eq!(img[0], Ext::Infinity);
    let back = evaluate(&inverse(&w), img).unwrap();
    assert!(back[0].dist(Ext::Finite(c(2.0, 0.0))) < 1e-14);
}

#[test]
fn zero_times_infinity_is_an_error() {
    let w = parse_word("F").unwrap();
    assert!(matches!(evaluate(&w, [Ext::Finite(c(0.0, 0.0)), Ext::Infinity]), Err(Error::Indeterminate { atom: 0 })));
}

#[test]
fn torus_point_checks_modulus() {
    assert!(torus_point_checked([c(1.0, 0.0), c(0.0, 1.0)]).is_ok());
    assert!(matches!(torus_point_checked([c(1.0, 1e-5), c(0.0, 1.0)]), Err(Error::NotOnTorus)));
}

fn fd_jacobian(w: &MapWord, z: [C64; 2], h: f64) -> CMat2 {
    let mut j = [[c(0.0, 0.0); 2]; 2];
    for col in 0..2 {
        let mut zp = z;
        let mut zm = z;
        zp[col] += h;
        zm[col] -= h;
        let (p, m) = (evaluate_finite(w, zp).unwrap(), evaluate_finite(w, zm).unwrap());
        for row in 0..2 {
            j[row][col] = (p[row] - m[row]) / (2.0 * h);
        }
    }
    j
}

#[test]
fn jacobian_of_u_at_origin() {
    // U(k, a) = (b_{-a}(z1)^k z2, z1), so the (1,2) entry is b_{-a}(0)^k = a^k
    let j = complex_jacobian(&MapWord::u(1, c(0.5, 0.0)), [c(0.0, 0.0); 2]).unwrap();
    let want = [[0.0, 0.5], [1.0, 0.0]];
    for r in 0..2 {
        for s in 0..2 {
            assert!((j[r][s] - want[r][s]).norm() < 1e-15, "{j:?}");
        }
    }
    let j = complex_jacobian(&MapWord::u(3, c(0.4, 0.2)), [c(0.0, 0.0); 2]).unwrap();
    assert!((j[0][1] - c(0.4, 0.2).powu(3)).norm() < 1e-15);
    let fd = fd_jacobian(&MapWord::u(1, c(0.5, 0.0)), [c(0.0, 0.0); 2], 1e-6);
    for r in 0..2 {
        for s in 0..2 {
            assert!((fd[r][s] - want[r][s]).norm() < 1e-8);
        }
    }
}

#[test]
fn jacobian_of_identity_and_f() {
    let z = [c(0.3, -0.7), c(1.2, 0.4)];
    let j = complex_jacobian(&MapWord::identity(), z).unwrap();
    assert_eq!(j, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]);
    let j = complex_jacobian(&parse_word("F").unwrap(), z).unwrap();
    assert!((j[0][0] - z[1]).norm() < 1e-15 && (j[0][1] - z[0]).norm() < 1e-15);
    assert!(j[1][0].norm() < 1e-15 && (j[1][1] - 1.0).norm() < 1e-15);
}

fn g_prime_fd(a: C64, theta: f64) -> f64 {
    // derivative of arg b_a(e^{iθ}) minus 1
    let h = 1e-6;
    let arg = |t: f64| b(a, C64::from_polar(1.0, t)).arg();
    let mut d = arg(theta + h) - arg(theta - h);
    if d > PI {
        d -= TAU;
    } else if d < -PI {
        d += TAU;
    }
    d / (2.0 * h) - 1.0
}

#[test]
fn moebius_lift_examples() {
    assert_eq!(moebius_lift(c(0.0, 0.0), 1.3), (0.0, 0.0));
    assert!(moebius_lift(c(0.5, 0.0), 0.0).0.abs() < 1e-15);
    let (g, gp) = moebius_lift(c(0.5, 0.0), FRAC_PI_2);
    assert!((g - 2.0 * 0.5f64.atan()).abs() < 1e-14);
    assert!((gp - g_prime_fd(c(0.5, 0.0), FRAC_PI_2)).abs() < 1e-7);
    // g is the lift correction: b_a(e^{iθ}) = e^{i(θ + g)}
    for k in 0..16 {
        let th = TAU * k as f64 / 16.0;
        let a = c(0.3, -0.5);
        let (g, gp) = moebius_lift(a, th);
        assert!((b(a, C64::from_polar(1.0, th)) - C64::from_polar(1.0, th + g)).norm() < 1e-13);
        assert!((gp - g_prime_fd(a, th)).abs() < 1e-7);
    }
}

#[test]
fn moebius_lift_derivative_exceeds_minus_one() {
    for i in 1..=9 {
        let r = i as f64 / 10.0;
        for phase in [0.0, 1.0, 2.5] {
            let a = C64::from_polar(r, phase);
            for k in 0..360 {
                let th = TAU * k as f64 / 360.0;
                assert!(moebius_lift(a, th).1 > -1.0);
            }
        }
    }
}

#[test]
fn lifted_jacobian_examples() {
    let a = c(0.4, 0.1);
    for k in 1..4u32 {
        for x in [[0.0, 0.0], [1.0, 2.0], [4.0, 5.5]] {
            let d = lifted_jacobian(&MapWord::u(k, a), x);
            let s = k as f64 * (1.0 + moebius_lift(-a, x[0]).1);
            assert!((d[0][0] - s).abs() < 1e-13 && d[0][1] == 1.0 && (d[1][0] - 1.0).abs() < 1e-15 && d[1][1] == 0.0, "{d:?}");
        }
    }
    let id = lifted_jacobian(&parse_word("G(0, 0)").unwrap(), [0.7, 0.1]);
    assert_eq!(id, [[1.0, 0.0], [0.0, 1.0]]);
    assert_eq!(lifted_jacobian(&parse_word("F . R").unwrap(), [0.7, 0.1]), [[1.0, 1.0], [1.0, 0.0]]);
}

#[test]
fn inverse_examples() {
    assert_eq!(inverse(&parse_word("F . R").unwrap()).atoms, vec![Atom::R, Atom::Finv]);
    let (a, bb) = (c(0.2, 0.3), c(-0.1, 0.0));
    assert_eq!(inverse(&MapWord::new(vec![Atom::G(a, bb)])).atoms, vec![Atom::G(-a, -bb)]);
    assert_eq!(inverse(&inverse(&parse_word("U(2, 0.3) . I01").unwrap())), parse_word("U(2, 0.3) . I01").unwrap());
}

#[test]
fn inverse_round_trip_on_torus() {
    let mut r = rng(5);
    let w = random_word(&mut r, 10);
    let wi = inverse(&w);
    for _ in 0..100 {
        let z = torus(&mut r);
        let back = evaluate_finite(&wi, evaluate_finite(&w, z).unwrap()).unwrap();
        assert!(dist2(back, z) < 1e-12);
    }
}

#[test]
fn simplify_examples() {
    let (a, bb) = (c(0.3, 0.1), c(-0.2, 0.0));
    let w = simplify(&MapWord::new(vec![Atom::G(a, bb), Atom::R]));
    assert_eq!(w.atoms, vec![Atom::R, Atom::G(bb, a)]);
    assert!(simplify(&parse_word("I01 . I01").unwrap()).is_empty());
    assert_eq!(simplify(&parse_word("F . I11").unwrap()).atoms, vec![Atom::I(1, 1), Atom::F]);
    assert_eq!(simplify(&parse_word("F . I01").unwrap()).atoms, vec![Atom::I(0, 1), Atom::Finv]);
    let w = simplify(&MapWord::new(vec![Atom::G(a, bb), Atom::I(1, 0)]));
    assert_eq!(w.atoms, vec![Atom::I(1, 0), Atom::G(a.conj(), bb)]);
}

#[test]
fn simplify_preserves_the_map() {
    let mut r = rng(8);
    for _ in 0..40 {
        let w = random_word(&mut r, 8);
        let s = simplify(&w);
        for _ in 0..10 {
            let z = torus(&mut r);
            assert!(dist2(evaluate_finite(&w, z).unwrap(), evaluate_finite(&s, z).unwrap()) < 1e-11, "{w} vs {s}");
        }
    }
}

#[test]
fn linear_part_examples() {
    for k in 1..5u32 {
        assert_eq!(linear_part(&MapWord::u(k, c(0.3, -0.2))), [[k as i64, 1], [1, 0]]);
    }
    assert_eq!(linear_part(&MapWord::identity()), [[1, 0], [0, 1]]);
    assert_eq!(linear_part(&parse_word("F . F").unwrap()), [[1, 2], [0, 1]]);
    assert_eq!(linear_part(&parse_word("F . R").unwrap()), [[1, 1], [1, 0]]);
}

#[test]
fn evaluate_angles_follows_the_map() {
    let w = parse_word("U(2, 0.3+0.2i) . U(1, -0.4)").unwrap();
    for x in [[0.1, 0.2], [3.0, 5.0]] {
        let y = evaluate_angles(&w, x);
        let z = evaluate_finite(&w, torus_point(x)).unwrap();
        assert!(dist2(torus_point(y), z) < 1e-13);
    }
}
