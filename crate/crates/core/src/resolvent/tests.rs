use super::*;
use crate::quad::integrate;
use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::PI;

fn max_err(g: &ResolventGrid, idx: usize, exact: impl Fn(f64) -> f64) -> f64 {
    g.grid
        .nodes()
        .zip(&g.s_values[idx])
        .map(|(t, v)| (v - exact(t)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn closed_form_examples() {
    let g = TimeGrid::new(2.0, 1e-2).unwrap();
    let s = solve_s(&Kernel::Constant, &[1.0], &g, 1e-8).unwrap();
    assert!((s.s_at(0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-8);

    let g = TimeGrid::new(PI / 2.0, PI / 2.0 / 200.0).unwrap();
    let s = solve_s(&Kernel::Linear, &[4.0], &g, 1e-8).unwrap();
    assert!((s.s_values[0][200] + 1.0).abs() < 1e-8);

    let g = TimeGrid::new(2.0, 1e-2).unwrap();
    let s = solve_s(&Kernel::Exponential, &[1.0], &g, 1e-8).unwrap();
    assert!((s.s_values[0][200] - 0.5 * (1.0 + (-4.0f64).exp())).abs() < 1e-8);
}

#[test]
fn s_starts_at_one_exactly() {
    let g = TimeGrid::new(1.0, 1e-2).unwrap();
    for k in [
        Kernel::Constant,
        Kernel::LinExp,
        Kernel::power(0.3).unwrap(),
    ] {
        let s = solve_s(&k, &[0.5, 7.0], &g, 1e-5).unwrap();
        for row in &s.s_values {
            assert_eq!(row[0], 1.0);
        }
    }
}

#[test]
fn r_examples_ch4() {
    let g = TimeGrid::new(1.0, 1e-2).unwrap();
    let r = solve_r(&Kernel::Constant, &[-4.0], &g, 1e-8, Convention::Ch4Plus).unwrap();
    assert!((r.r_at(0, 0.5).unwrap() - (-2.0f64).exp()).abs() < 1e-8);
    let r = solve_r(&Kernel::Exponential, &[-4.0], &g, 1e-8, Convention::Ch4Plus).unwrap();
    assert!((r.r_values[0][100] - (-5.0f64).exp()).abs() < 1e-8);

    let g = TimeGrid::new(PI / 4.0, PI / 4.0 / 100.0).unwrap();
    let r = solve_r(&Kernel::LinExp, &[-4.0], &g, 1e-8, Convention::Ch4Plus).unwrap();
    let exact = (-PI / 4.0).exp() * 0.5;
    assert_relative_eq!(exact, 0.2279691, max_relative = 1e-6);
    assert!((r.r_values[0][100] - exact).abs() < 1e-8);
}

#[test]
fn r_matches_closed_forms_on_grid() {
    let g = TimeGrid::new(2.0, 1e-2).unwrap();
    for k in [
        Kernel::Constant,
        Kernel::Linear,
        Kernel::Exponential,
        Kernel::LinExp,
    ] {
        for conv in [Convention::Ch1Minus, Convention::Ch4Plus] {
            let mus = [-2.0, 0.0, 0.7, 1.5];
            let r = solve_r(&k, &mus, &g, 1e-6, conv).unwrap();
            for (j, &mu) in mus.iter().enumerate() {
                for (i, t) in g.nodes().enumerate() {
                    let e = closed_form_r(&k, mu, t, conv).unwrap();
                    assert!(
                        (r.r_values[j][i] - e).abs() < 1e-6 * (1.0 + e.abs()),
                        "{k:?} {conv:?} mu={mu} t={t}"
                    );
                }
            }
        }
    }
}

#[test]
fn lin_exp_s_matches_solver() {
    let g = TimeGrid::new(3.0, 1e-2).unwrap();
    let mus = [-0.6, 0.5, 4.0, 40.0];
    let s = solve_s(&Kernel::LinExp, &mus, &g, 1e-7).unwrap();
    for (j, &mu) in mus.iter().enumerate() {
        for (i, t) in g.nodes().enumerate() {
            let e = closed_form_s(&Kernel::LinExp, mu, t).unwrap();
            assert!((s.s_values[j][i] - e).abs() < 1e-6, "mu={mu} t={t}");
        }
    }
}

#[test]
fn power_r_is_singular() {
    let g = TimeGrid::new(1.0, 1e-2).unwrap();
    assert_eq!(
        solve_r(
            &Kernel::power(0.5).unwrap(),
            &[1.0],
            &g,
            1e-6,
            Convention::Ch1Minus
        ),
        Err(VflError::SingularAtZero)
    );
}

#[test]
fn mu_zero_short_circuits() {
    let g = TimeGrid::new(1.0, 0.1).unwrap();
    let s = solve_s(&Kernel::power(0.4).unwrap(), &[0.0], &g, 1e-12).unwrap();
    assert!(s.s_values[0].iter().all(|&v| v == 1.0));
    let r = solve_r(&Kernel::LinExp, &[0.0], &g, 1e-12, Convention::Ch4Plus).unwrap();
    for (t, v) in g.nodes().zip(&r.r_values[0]) {
        assert_eq!(*v, t * (-t).exp());
    }
    assert_eq!(closed_form_s(&Kernel::Constant, 0.0, 17.0), Some(1.0));
}

#[test]
fn closed_form_limits() {
    assert_eq!(s_limit(&Kernel::Exponential, 3.0), Some(0.25));
    assert!(closed_form_s(&Kernel::LinExp, -1.0, 1.0).is_none());
    assert_eq!(s_limit(&Kernel::LinExp, 3.0), Some(0.25));
    let v = closed_form_s(&Kernel::power(0.5).unwrap(), 1.0, 1.0).unwrap();
    assert_relative_eq!(v, 0.427_583_576_155_807, max_relative = 1e-12);
    // ε = 1 + μ → 0 stays finite
    let a = closed_form_s(&Kernel::Exponential, -1.0, 2.0).unwrap();
    let b = closed_form_s(&Kernel::Exponential, -1.0 + 1e-9, 2.0).unwrap();
    assert!((a - b).abs() < 1e-7);
}

#[test]
fn power_kernel_matches_mittag_leffler() {
    let g = TimeGrid::new(1.0, 2f64.powi(-8)).unwrap();
    let s = solve_s(&Kernel::power(0.5).unwrap(), &[1.0], &g, 1e-6).unwrap();
    let err = max_err(&s, 0, |t| {
        closed_form_s(&Kernel::power(0.5).unwrap(), 1.0, t).unwrap()
    });
    assert!(err < 1e-6, "err = {err}");
    assert!(s.residual_max <= 1e-6);
}

#[test]
fn tolerance_not_met_after_retry() {
    let g = TimeGrid::new(2.0, 0.2).unwrap();
    match solve_s(&Kernel::Exponential, &[25.0], &g, 1e-12) {
        Err(VflError::ToleranceNotMet { achieved, tol }) => {
            assert!(achieved > tol);
        }
        other => panic!("expected ToleranceNotMet, got {other:?}"),
    }
}

#[test]
fn singular_tabulated_rejected() {
    let times: Vec<f64> = (1..50).map(|i| 0.02 * i as f64).collect();
    let k = Kernel::tabulated(
        times.clone(),
        times.iter().map(|t| t.powf(-0.7)).collect(),
        1,
    )
    .unwrap();
    let g = TimeGrid::new(0.9, 0.01).unwrap();
    assert_eq!(
        solve_s(&k, &[1.0], &g, 1e-6),
        Err(VflError::SingularKernelOnTabulated)
    );
}

#[test]
fn tabulated_matches_analytic_kernel() {
    let times: Vec<f64> = (1..=4000).map(|i| 1e-3 * i as f64).collect();
    let k =
        Kernel::tabulated(times.clone(), times.iter().map(|t| (-t).exp()).collect(), 1).unwrap();
    let g = TimeGrid::new(2.0, 0.01).unwrap();
    let s = solve_s(&k, &[1.0], &g, 1e-6).unwrap();
    let err = max_err(&s, 0, |t| {
        closed_form_s(&Kernel::Exponential, 1.0, t).unwrap()
    });
    // kernel interpolation error is O(knot spacing²)
    assert!(err < 1e-6, "err = {err}");
}

#[test]
fn raw_scheme_is_second_order() {
    let k = Kernel::Exponential;
    let mu = 4.0;
    let mut errs = Vec::new();
    for h in [0.04, 0.02, 0.01] {
        let g = TimeGrid::new(2.0, h).unwrap();
        let s = solve_s_raw(&k, mu, &g, Method::Auto).unwrap();
        let e = g
            .nodes()
            .zip(&s)
            .map(|(t, v)| (v - closed_form_s(&k, mu, t).unwrap()).abs())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(
        errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0,
        "{errs:?}"
    );
}

#[test]
fn residual_shrinks_with_step() {
    // order 2 for smooth kernels, 1 + α for the weakly singular one
    for (k, min_ratio) in [
        (Kernel::Exponential, 3.0),
        (Kernel::LinExp, 3.0),
        (Kernel::power(0.5).unwrap(), 2f64.powf(1.5) * 0.9),
    ] {
        let mut prev = None;
        for h in [0.05, 0.025, 0.0125] {
            let g = TimeGrid::new(2.0, h).unwrap();
            let s = solve_s(&k, &[3.0], &g, 1.0).unwrap();
            if let Some(p) = prev {
                let ratio: f64 = p / s.residual_max;
                assert!(ratio >= min_ratio, "{k:?}: ratio {ratio}");
            }
            prev = Some(s.residual_max);
        }
    }
}

/// Convolution recomputed independently: adaptive quadrature over a cubic
/// interpolant of the nodal values.
fn functional_residual(k: &Kernel, mu: f64, g: &TimeGrid, v: &[f64]) -> f64 {
    let h = g.h();
    let cubic = |t: f64| {
        let x = t / h;
        let i = (x.floor() as isize).clamp(1, v.len() as isize - 3) as usize;
        let u = x - i as f64;
        let (p0, p1, p2, p3) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
        // Lagrange cubic on nodes i-1..i+2
        p0 * (-u * (u - 1.0) * (u - 2.0) / 6.0)
            + p1 * ((u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0)
            + p2 * (-(u + 1.0) * u * (u - 2.0) / 2.0)
            + p3 * ((u + 1.0) * u * (u - 1.0) / 6.0)
    };
    let mut worst: f64 = 0.0;
    for i in (0..g.len()).step_by(7) {
        let t = g.t(i);
        let conv = if t == 0.0 {
            0.0
        } else {
            integrate(
                |tau| k.eval(t - tau).unwrap() * cubic(tau),
                0.0,
                t,
                1e-13,
                1e-12,
            )
            .value
        };
        worst = worst.max((v[i] + mu * conv - 1.0).abs());
    }
    worst
}

#[test]
fn functional_equation_residual_is_small() {
    let g = TimeGrid::new(2.0, 1e-2).unwrap();
    for k in [
        Kernel::Constant,
        Kernel::Linear,
        Kernel::Exponential,
        Kernel::LinExp,
    ] {
        for mu in [0.5, 4.0] {
            let s = solve_s(&k, &[mu], &g, 1e-8).unwrap();
            let res = functional_residual(&k, mu, &g, &s.s_values[0]);
            // the check's own interpolation error is ~h⁴
            assert!(res < 1e-7, "{k:?} mu={mu} residual={res}");
        }
    }
}

#[test]
fn squared_tail_examples() {
    assert_relative_eq!(
        squared_tail_integral(&Kernel::Exponential, -4.0, 1e-10).unwrap(),
        0.1
    );
    assert_relative_eq!(
        squared_tail_integral(&Kernel::LinExp, -4.0, 1e-10).unwrap(),
        0.05
    );
    assert!(matches!(
        squared_tail_integral(&Kernel::Constant, 1.0, 1e-10),
        Err(VflError::NonIntegrable { .. })
    ));
    assert!(matches!(
        squared_tail_integral(&Kernel::Linear, -4.0, 1e-10),
        Err(VflError::NonIntegrable { .. })
    ));
}

#[test]
fn numeric_tail_matches_closed_forms() {
    for (k, mu) in [
        (Kernel::Exponential, -4.0),
        (Kernel::LinExp, -4.0),
        (Kernel::Constant, -2.0),
        (Kernel::LinExp, -30.0),
    ] {
        let exact = squared_tail_integral(&k, mu, 1e-10).unwrap();
        let num = squared_tail_integral_numeric(&k, mu, 1e-9).unwrap();
        assert!(
            (num - exact).abs() < 1e-7,
            "{k:?} mu={mu}: {num} vs {exact}"
        );
    }
    assert!(matches!(
        squared_tail_integral_numeric(&Kernel::Constant, 0.5, 1e-8),
        Err(VflError::NonIntegrable { .. })
    ));
}

#[test]
fn csv_has_header_and_columns() {
    let g = TimeGrid::new(0.1, 0.05).unwrap();
    let r = solve_both(
        &Kernel::Exponential,
        &[1.0, 4.0],
        &g,
        1e-6,
        Convention::Ch4Plus,
    )
    .unwrap();
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# kernel=exponential convention=ch4_plus"));
    assert_eq!(lines.next().unwrap(), "t,s_mu=1,s_mu=4,r_mu=1,r_mu=4");
    assert_eq!(lines.count(), 3);
}

#[test]
fn fast_and_direct_agree_on_long_grid() {
    let k = Kernel::power(0.5).unwrap();
    let g = TimeGrid::new(4.0, 4.0 / 3000.0).unwrap();
    let plain = VolterraScheme::new(&k, g.h(), g.len()).unwrap();
    let started = plain
        .clone()
        .with_starting_exponents(&k, &[0.0, 0.5, 1.0, 1.5])
        .unwrap();
    let f = vec![1.0; g.len()];
    for scheme in [plain, started] {
        let a = scheme.solve(2.0, &f, Method::Direct).unwrap();
        let b = scheme.solve(2.0, &f, Method::Fast).unwrap();
        let d = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-12, "{d}");
    }
}

#[test]
fn starting_weights_fix_the_origin_layer() {
    let k = Kernel::power(0.5).unwrap();
    let g = TimeGrid::new(1.0, 1.0 / 256.0).unwrap();
    let exact: Vec<f64> = g
        .nodes()
        .map(|t| closed_form_s(&k, 2.0, t).unwrap())
        .collect();
    let sup = |v: &[f64]| {
        v.iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let f = vec![1.0; g.len()];
    let plain = VolterraScheme::new(&k, g.h(), g.len()).unwrap();
    let e_plain = sup(&plain.solve(2.0, &f, Method::Auto).unwrap());
    let e_start = sup(&plain
        .with_starting_exponents(&k, &[0.0, 0.5, 1.0, 1.5])
        .unwrap()
        .solve(2.0, &f, Method::Auto)
        .unwrap());
    assert!(e_start < e_plain / 50.0, "{e_plain} vs {e_start}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convention_duality(mu in -3.0f64..3.0, which in 0usize..4) {
        let k = [Kernel::Constant, Kernel::Exponential, Kernel::LinExp, Kernel::power(1.5).unwrap()][which].clone();
        let g = TimeGrid::new(1.0, 0.02).unwrap();
        let tol = 1e-4;
        let a = solve_r(&k, &[mu], &g, tol, Convention::Ch1Minus).unwrap();
        let b = solve_r(&k, &[-mu], &g, tol, Convention::Ch4Plus).unwrap();
        for (x, y) in a.r_values[0].iter().zip(&b.r_values[0]) {
            prop_assert!((x - y).abs() <= 2.0 * tol);
        }
    }

    #[test]
    fn completely_positive_bounds(mu in 0.0f64..10.0, which in 0usize..4) {
        let k = [Kernel::Constant, Kernel::Exponential, Kernel::power(0.5).unwrap(), Kernel::power(0.9).unwrap()][which].clone();
        prop_assert!(k.is_completely_positive());
        let g = TimeGrid::new(1.0, 0.002).unwrap();
        let tol = 1e-5;
        let s = solve_s(&k, &[mu], &g, tol).unwrap();
        let row = &s.s_values[0];
        for w in row.windows(2) {
            prop_assert!(w[1] <= w[0] + 2.0 * tol);
        }
        prop_assert!(row.iter().all(|&v| (-2.0 * tol..=1.0 + 2.0 * tol).contains(&v)));
    }

    #[test]
    fn hypothesis_h_bound(mu in 0.0f64..100.0, which in 0usize..3) {
        let k = [Kernel::Linear, Kernel::Exponential, Kernel::LinExp][which].clone();
        let g = TimeGrid::new(3.0, 0.01).unwrap();
        let s = solve_s(&k, &[mu], &g, 1e-3).unwrap();
        prop_assert!(s.s_values[0].iter().all(|v| v.abs() <= 1.0 + 1e-6));
    }
}
