use fluxdirac::symcalc::*;
use fluxdirac::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: f64 = -2.5;

fn zc(x: f64, y: f64) -> Complex64 {
    Complex64::new(y, x)
}

/// c·z^p·z̄^q·|z|^s computed directly.
fn direct(p: u32, q: u32, s: f64, x: f64, y: f64) -> Complex64 {
    let z = zc(x, y);
    z.powu(p) * z.conj().powu(q) * z.norm().powf(s)
}

fn fd<F: Fn(f64, f64) -> Complex64>(f: F, x: f64, y: f64, h: f64) -> (Complex64, Complex64) {
    let dx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
    let dy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
    (dx, dy)
}

fn hat(d: (Complex64, Complex64)) -> Complex64 {
    -Complex64::i() * d.0 - d.1
}

fn check(d: (Complex64, Complex64)) -> Complex64 {
    -Complex64::i() * d.0 + d.1
}

#[test]
fn derivative_rules_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let regime = Regime::Asymptotic { phi_over_2pi: A };
    let mut worst: f64 = 0.0;
    for p in 0..=3u32 {
        for q in 0..=3u32 {
            for s in -2..=2 {
                let s = s as f64;
                let e = SymExpr::from(SymTerm::monomial(p, q, s));
                let nh = nabla_hat(&e).unwrap();
                let nc = nabla_hat_conj(&e).unwrap();
                let dm = apply_d_minus(&e, &regime).unwrap();
                let dp = apply_d_plus(&e, &regime).unwrap();
                let mode = EvalMode::Asymptotic { phi_over_2pi: A };
                for _ in 0..100 {
                    let r = rng.random_range(1.0..10.0);
                    let t = rng.random_range(0.0..std::f64::consts::TAU);
                    let (x, y) = (r * t.cos(), r * t.sin());
                    let h = 1e-5 * r;
                    let d = fd(|x, y| direct(p, q, s, x, y), x, y, h);
                    let dl = fd(|x, y| Complex64::new(A * x.hypot(y).ln(), 0.0), x, y, h);
                    let f = direct(p, q, s, x, y);
                    let want = [hat(d), check(d), hat(d) + hat(dl) * f, check(d) - check(dl) * f];
                    let got = [&nh, &nc, &dm, &dp].map(|ex| evaluate_expr(ex, x, y, mode).unwrap());
                    for (w, g) in want.iter().zip(&got) {
                        let scale = w.norm().max(f.norm() / r);
                        let rel = (w - g).norm() / scale;
                        worst = worst.max(rel);
                        assert!(rel < 1e-6, "p={p} q={q} s={s} at ({x},{y}): {g} vs {w}");
                    }
                }
            }
        }
    }
    assert!(worst < 1e-6);
}

#[test]
fn tail_exponent_is_the_far_field_log_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let p = rng.random_range(0..4);
        let q = rng.random_range(0..4);
        let s = rng.random_range(-6.0..3.0);
        let c = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let e = SymExpr::from(SymTerm::new(c, p, q, s, 0));
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        let mode = EvalMode::Asymptotic { phi_over_2pi: A };
        let v = |r: f64| evaluate_expr(&e, r * t.cos(), r * t.sin(), mode).unwrap().norm();
        let slope = (v(1e4) / v(1e3)).log10();
        assert!((slope - tail_exponent(&e).unwrap()).abs() < 1e-3);
    }
}

#[test]
fn first_application_on_the_zero_mode() {
    for a in [-2.5, -1.3, -4.0] {
        let regime = Regime::Asymptotic { phi_over_2pi: a };
        for j in 1..8u32 {
            let out = apply_d_minus(&SymExpr::from(SymTerm::monomial(0, j, a)), &regime).unwrap();
            let keys: Vec<(u32, u32, f64)> = out.terms().iter().map(|t| (t.p, t.q, t.s)).collect();
            assert_eq!(keys, vec![(0, j - 1, a), (1, j, a - 2.0)]);
            let c_lo = out.terms()[0].coeff;
            let c_hi = out.terms()[1].coeff;
            // Bracket [(−Φ/2π)·z z̄^j|z|^{a−2} − j·z̄^{j−1}|z|^a] up to a common factor.
            let phi = 2.0 * std::f64::consts::PI * a;
            let expected = (-phi / (2.0 * std::f64::consts::PI)) / (-(j as f64));
            assert!(((c_hi / c_lo).re - expected).abs() < 1e-14);
            assert!((c_hi / c_lo).im.abs() < 1e-14);
        }
    }
}

#[test]
fn first_application_ratio_with_a_single_factor_two_is_off_by_two() {
    let a = -2.5;
    let j = 3u32;
    let out =
        apply_d_minus(&SymExpr::from(SymTerm::monomial(0, j, a)), &Regime::Asymptotic { phi_over_2pi: a }).unwrap();
    let ratio = (out.terms()[1].coeff / out.terms()[0].coeff).re;
    let halved = (-a) / (-2.0 * j as f64);
    assert!((ratio / halved - 2.0).abs() < 1e-14);
}

fn second_application(a: f64, j: u32) -> SymExpr {
    let regime = Regime::Asymptotic { phi_over_2pi: a };
    let psi0 = SymExpr::from(SymTerm::monomial(0, j, a));
    apply_d_minus(&apply_d_minus(&psi0, &regime).unwrap(), &regime).unwrap()
}

#[test]
fn second_application_has_three_literal_families() {
    let a = -2.5;
    for j in 2..7u32 {
        let out = second_application(a, j);
        let keys: Vec<(u32, u32, f64)> = out.terms().iter().map(|t| (t.p, t.q, t.s)).collect();
        assert_eq!(keys, vec![(0, j - 2, a), (1, j - 1, a - 2.0), (2, j, a - 4.0)]);
        assert!(!keys.iter().any(|k| (k.2 - (2.0 * a - 4.0)).abs() < 1e-12));
        // z z̄ = |z|², so all three are one function family.
        assert_eq!(out.reduce_modulus().len(), 1);
    }
}

#[test]
fn four_term_bracket_with_doubled_exponent_is_not_a_multiple() {
    let a: f64 = -2.5;
    let j = 3u32;
    let truth = second_application(a, j);
    let phi = 2.0 * std::f64::consts::PI * a;
    let pi = std::f64::consts::PI;
    let jf = j as f64;
    let bracket = SymExpr::from_terms(vec![
        SymTerm::new(3.0 * phi / pi, 2, j, a - 4.0, 0),
        SymTerm::new(2.0 * phi / pi * jf, 1, j - 1, a - 2.0, 0),
        SymTerm::new(-phi * phi / (4.0 * pi * pi), 2, j, 2.0 * a - 4.0, 0),
        SymTerm::new(2.0 * jf * (jf - 1.0), 0, j - 2, a, 0),
    ]);
    let mode = EvalMode::Asymptotic { phi_over_2pi: a };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pts: Vec<(f64, f64)> = (0..200)
        .map(|_| {
            let r: f64 = rng.random_range(1.0..20.0);
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            (r * t.cos(), r * t.sin())
        })
        .collect();
    let sample =
        |e: &SymExpr| -> Vec<Complex64> { pts.iter().map(|&(x, y)| evaluate_expr(e, x, y, mode).unwrap()).collect() };
    let misfit = |u: &[Complex64], v: &[Complex64]| {
        let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let c: Complex64 = v.iter().zip(u).map(|(a, b)| a.conj() * b).sum::<Complex64>() / vv;
        let res: f64 = u.iter().zip(v).map(|(a, b)| (a - b * c).norm_sqr()).sum::<f64>().sqrt();
        res / u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    };
    let u = sample(&truth);
    let control = misfit(&u, &sample(&truth.scale(Complex64::new(-3.0, 0.5))));
    assert!(control < 1e-12, "control misfit {control}");
    let m = misfit(&u, &sample(&bracket));
    assert!(m > 1e-3, "relative misfit {m}");
}

#[test]
fn commutator_in_uniform_field_for_random_expressions() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        let b = rng.random_range(-2.0..2.0);
        let terms: Vec<SymTerm> = (0..4)
            .map(|_| {
                SymTerm::new(
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    rng.random_range(0..4),
                    rng.random_range(0..4),
                    rng.random_range(-2..3) as f64,
                    rng.random_range(-1..2),
                )
            })
            .collect();
        let f = SymExpr::from_terms(terms);
        let r = Regime::UniformField { b };
        let pm = apply_d_plus(&apply_d_minus(&f, &r).unwrap(), &r).unwrap();
        let mp = apply_d_minus(&apply_d_plus(&f, &r).unwrap(), &r).unwrap();
        assert!(pm.sub(&mp).same_function(&f.scale(Complex64::new(-2.0 * b, 0.0)), 1e-10));
    }
}
