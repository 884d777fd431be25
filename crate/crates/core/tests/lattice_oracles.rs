use fluxdirac::field::{FieldProfile, FluxInfo};
use fluxdirac::grid::{ComplexGrid, GridSpec};
use fluxdirac::numlab::*;
use fluxdirac::potential::*;
use fluxdirac::symcalc::*;
use fluxdirac::Complex64;
use proptest::prelude::*;

#[test]
fn disk_lambda_matches_closed_form() {
    let p = FieldProfile::uniform_disk(1.0, 1.0).unwrap();
    let g = GridSpec::new(8.0, 512).unwrap();
    let aux = solve_lambda(&p, g).unwrap();
    let mut far: f64 = 0.0;
    let mut sup_err: f64 = 0.0;
    let mut sup_ref: f64 = 0.0;
    for k in 0..g.len() {
        let (x, y) = g.point(k);
        let r = x.hypot(y);
        let exact = lambda_closed_form_disk_green(1.0, 1.0, r, 1.0);
        let got = aux.grid_lambda.data[k];
        sup_err = sup_err.max((got - exact).abs());
        sup_ref = sup_ref.max(exact.abs());
        if r > 1.5 {
            far = far.max(((got - exact) / exact).abs());
        }
    }
    assert!(far < 1e-3, "far-field relative error {far}");
    assert!(sup_err / sup_ref < 1e-2);
}

#[test]
fn asymptotic_slopes_follow_the_flux() {
    for p in [
        FieldProfile::uniform_disk(1.0, 2.0).unwrap(),
        FieldProfile::gaussian(1.0, 1.0).unwrap(),
        FieldProfile::gaussian(-0.7, 1.0).unwrap(),
    ] {
        let g = GridSpec::new(8.0, 256).unwrap();
        let aux = solve_lambda(&p, g).unwrap();
        let fit = fit_asymptote(&aux).unwrap();
        let a = fluxdirac::field::total_flux(&p).unwrap().phi_over_2pi();
        assert!((fit.slope / a - 1.0).abs() < 0.02, "{:?}: {} vs {a}", p.kind, fit.slope);
    }
}

#[test]
fn gaussian_curl_error_and_refinement() {
    let p = FieldProfile::gaussian(1.0, 1.0).unwrap();
    let errs: Vec<f64> = [256, 511]
        .iter()
        .map(|&n| {
            let aux = solve_lambda(&p, GridSpec::new(8.0, n).unwrap()).unwrap();
            verify_curl(&gauge_from_lambda(&aux), &p).unwrap().max_error
        })
        .collect();
    assert!(errs[0] <= 1e-3, "curl error {}", errs[0]);
    let ratio = errs[0] / errs[1];
    assert!((ratio - 4.0).abs() <= 0.8, "ratio {ratio}");
}

fn gaussian_test_fn(g: GridSpec) -> ComplexGrid {
    ComplexGrid::from_fn(g, |x, y| Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0))
}

#[test]
fn commutator_converges_at_second_order() {
    let p = FieldProfile::uniform_everywhere(1.0).unwrap();
    let dev: Vec<f64> = [128, 255]
        .iter()
        .map(|&n| {
            let g = GridSpec::new(8.0, n).unwrap();
            DiracOperator::from_profile(&p, g, 0.0).unwrap().commutator_check(&gaussian_test_fn(g)).unwrap()
        })
        .collect();
    let order = (dev[0] / dev[1]).log2();
    assert!(order >= 1.8, "order {order}");
}

#[test]
fn commutator_is_local_outside_a_disk() {
    let p = FieldProfile::uniform_disk(1.0, 1.0).unwrap();
    let g = GridSpec::new(6.0, 256).unwrap();
    let op = DiracOperator::from_profile(&p, g, 0.0).unwrap();
    let f = ComplexGrid::from_fn(g, |x, y| Complex64::new((-4.0 * ((x - 2.5).powi(2) + y * y)).exp(), 0.0));
    assert!(op.commutator_check(&f).unwrap() <= 1e-3);
}

fn state_on_grid(s: &LadderState, g: GridSpec, b: f64) -> GridSpinor {
    let mode = EvalMode::UniformField { b };
    GridSpinor::from_fn(g, |x, y| {
        (evaluate_expr(&s.spinor.upper, x, y, mode).unwrap(), evaluate_expr(&s.spinor.lower, x, y, mode).unwrap())
    })
}

#[test]
fn landau_states_solve_the_lattice_equation() {
    let b = -1.0;
    let p = FieldProfile::uniform_everywhere(b).unwrap();
    let g = GridSpec::new(12.0, 512).unwrap();
    let op = DiracOperator::from_profile(&p, g, 0.0).unwrap();
    let flux = FluxInfo::from_phi(-1.0).unwrap();
    let reg = Regime::UniformField { b };
    let z0 = build_level(0, &flux, b, 0, &reg).unwrap();
    let z1 = build_level(0, &flux, b, 1, &reg).unwrap();
    assert!(op.residual(&state_on_grid(&z0, g, b), 0.0).unwrap() <= 1e-3);
    assert!(op.residual(&state_on_grid(&z1, g, b), z1.energy_value()).unwrap() <= 5e-2);
    let noise = GridSpinor::from_fn(g, |x, y| {
        let t = (x * 12.9898 + y * 78.233).sin() * 43758.5453;
        (Complex64::new(t.fract(), 0.0), Complex64::new((t * 1.7).fract(), 0.0))
    });
    assert!(op.residual(&noise, 0.0).unwrap() > 1.0);
}

#[test]
fn residual_converges_at_second_order() {
    let b = -1.0;
    let p = FieldProfile::uniform_everywhere(b).unwrap();
    let flux = FluxInfo::from_phi(-1.0).unwrap();
    let z1 = build_level(1, &flux, b, 1, &Regime::UniformField { b }).unwrap();
    let res: Vec<f64> = [128, 255]
        .iter()
        .map(|&n| {
            let g = GridSpec::new(10.0, n).unwrap();
            let op = DiracOperator::from_profile(&p, g, 0.0).unwrap();
            op.residual(&state_on_grid(&z1, g, b), z1.energy_value()).unwrap()
        })
        .collect();
    let ratio = res[0] / res[1];
    assert!((ratio - 4.0).abs() <= 0.8, "ratio {ratio}");
}

#[test]
fn far_field_terms_integrate_at_their_tail_rate() {
    let a = -2.5;
    let flux = FluxInfo::from_phi(2.0 * std::f64::consts::PI * a).unwrap();
    let regime = Regime::Asymptotic { phi_over_2pi: a };
    let radii = geometric_radii(4.0, 4000.0, 16);
    let opts = NormOptions::default();
    let mode = EvalMode::Asymptotic { phi_over_2pi: a };
    for m in 0..=2 {
        for j in 0..=4 {
            let s = build_level(j, &flux, -1.0, m, &regime).unwrap();
            for comp in s.spinor.components() {
                for t in comp.terms() {
                    let single = SymExpr::from(*t);
                    let rho = tail_exponent(&single).unwrap();
                    let series =
                        truncated_norms(|x, y| evaluate_expr(&single, x, y, mode).unwrap().norm_sqr(), &radii, &opts)
                            .unwrap();
                    let predicted = Growth::predicted(rho);
                    assert_eq!(series.growth, predicted, "m={m} j={j} rho={rho}");
                    if predicted != Growth::Logarithmic {
                        assert!(
                            (series.slope - (2.0 * rho + 2.0)).abs() < 0.05,
                            "m={m} j={j} rho={rho} slope={}",
                            series.slope
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn doublers_flagged_without_wilson_term_and_lifted_with_it() {
    let g = GridSpec::new(3.0, 48).unwrap();
    let naive = DiracOperator::free(g, 0.0).unwrap();
    let req = SpectrumRequest::new(6, vec![0.0], 1.0, Region::InnerBox);
    let r = spectrum(&naive, &assemble(&naive, DEFAULT_SITE_CAP).unwrap(), &req).unwrap();
    assert!(r.doubler_warning);
    let wilson = naive.with_wilson(0.5).unwrap();
    let r = spectrum(&wilson, &assemble(&wilson, DEFAULT_SITE_CAP).unwrap(), &req).unwrap();
    assert!(!r.doubler_warning);
}

#[test]
fn chiral_pairs_without_wilson_term() {
    let p = FieldProfile::uniform_disk(-1.0, 1.0).unwrap();
    let op = DiracOperator::from_profile(&p, GridSpec::new(3.0, 64).unwrap(), 0.0).unwrap();
    let m = assemble(&op, DEFAULT_SITE_CAP).unwrap();
    let mut req = SpectrumRequest::new(6, vec![0.7], 1.0, Region::InnerBox);
    req.doubler_threshold = 2.0;
    let up = spectrum(&op, &m, &req).unwrap();
    req.targets = vec![-0.7];
    let down = spectrum(&op, &m, &req).unwrap();
    let mut a: Vec<f64> = up.eigenvalues.clone();
    let mut b: Vec<f64> = down.eigenvalues.iter().map(|e| -e).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
    assert!(up.max_imag < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn assembled_hamiltonian_is_hermitian(b0 in -2.0f64..2.0, r in 0.3f64..1.0, w in 0.0f64..1.0, gaussian in any::<bool>()) {
        prop_assume!(b0.abs() > 1e-3);
        let p = if gaussian { FieldProfile::gaussian(b0, r * 0.5).unwrap() } else { FieldProfile::uniform_disk(b0, r).unwrap() };
        let op = DiracOperator::from_profile(&p, GridSpec::new(4.0, 64).unwrap(), w).unwrap();
        let m = assemble(&op, DEFAULT_SITE_CAP).unwrap();
        prop_assert!(m.hermiticity_defect() <= 1e-12);
        prop_assert!(m.max_diag_imag() <= 1e-12);
    }

    #[test]
    fn lambda_is_linear_in_field_strength(b0 in 0.1f64..2.0, k in -3.0f64..3.0) {
        prop_assume!(k.abs() > 0.05);
        let g = GridSpec::new(6.0, 64).unwrap();
        let one = solve_lambda(&FieldProfile::gaussian(b0, 0.8).unwrap(), g).unwrap();
        let many = solve_lambda(&FieldProfile::gaussian(k * b0, 0.8).unwrap(), g).unwrap();
        let scale = one.grid_lambda.max_abs() * k.abs();
        for (u, v) in one.grid_lambda.data.iter().zip(&many.grid_lambda.data) {
            prop_assert!((u * k - v).abs() <= 1e-10 * scale);
        }
    }
}
