use super::*;
use crate::field::{simulate_path, torus_coefficients, NoiseSeed, Regime, SnapshotSampler};
use crate::grid::TimeGrid;
use crate::kernel::TabulatedKernel;
use crate::spectral::ModeCoefficient;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn radial(d: usize, beta: f64) -> SpectralSpec {
    SpectralSpec::RadialPower { d, beta }
}

/// `a(t) = 1/2 + e^{-t}/2`: positive, decreasing, with positive limit.
fn h1_kernel() -> Kernel {
    let times: Vec<f64> = (1..=200_000).map(|i| i as f64 * 0.01).collect();
    Kernel::Tabulated(TabulatedKernel::from_fn(times, |t| 0.5 + 0.5 * (-t).exp()).unwrap())
}

#[test]
fn case3_table_constant_kernel() {
    for (d, beta, expect) in [
        (2, 0.5, Verdict::Holds),
        (2, 1.0, Verdict::Holds),
        (2, 1.9, Verdict::Holds),
        (3, 1.0, Verdict::Holds),
        (3, 2.5, Verdict::Fails),
        (4, 1.5, Verdict::Holds),
        (4, 2.0, Verdict::Fails),
    ] {
        let r = case3_check(d, beta, &Kernel::Constant, 1.0).unwrap();
        assert_eq!(r.verdict, expect, "d={d} beta={beta}");
        assert_eq!(r.analytic_verdict, Some(expect));
        assert_ne!(
            r.numeric_verdict.unwrap(),
            if expect == Verdict::Holds {
                Verdict::Fails
            } else {
                Verdict::Holds
            },
            "d={d} beta={beta}: {:?}",
            r.trace.last()
        );
    }
    let r = case3_check(2, 2.5, &Kernel::Constant, 1.0).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    assert!(r
        .warnings
        .iter()
        .any(|w| w.contains("not locally integrable")));
    assert!(case3_check(1, 0.5, &Kernel::Constant, 1.0).is_err());
    assert!(case3_check(2, 0.0, &Kernel::Constant, 1.0).is_err());
}

#[test]
fn function_valued_examples() {
    let lap2 = Symbol::laplacian(2);
    let r = function_valued_check(&radial(2, 1.0), &lap2, &Kernel::Constant, 1.0).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.numeric_verdict, Some(Verdict::Holds));
    // ∫ ρ^0 (1 - e^{-2ρ²})/(2ρ²) dρ · 2π = π·√(2π)
    assert_relative_eq!(
        r.value.unwrap(),
        PI * (2.0 * PI).sqrt(),
        max_relative = 1e-5
    );

    let r = function_valued_check(
        &radial(3, 2.5),
        &Symbol::laplacian(3),
        &Kernel::Constant,
        1.0,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    assert_eq!(r.numeric_verdict, Some(Verdict::Fails));
    assert!(r.witness.unwrap().starts_with("rho -> infinity"));
    let e = r.fitted_exponent.unwrap();
    assert!((e - -0.5).abs() < 0.05, "{e}");

    for k in [
        Kernel::Constant,
        Kernel::Exponential,
        Kernel::Linear,
        Kernel::LinExp,
    ] {
        let spec = SpectralSpec::FiniteMass { d: 2, mass: 1.0 };
        let r = function_valued_check(&spec, &lap2, &k, 1.0).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{k:?}");
        assert_eq!(r.numeric_verdict, Some(Verdict::Holds), "{k:?}");
    }
}

#[test]
fn gaussian_mass_with_zero_symbol() {
    // Q = 0: v ≡ 0 so g_t = t and the integral is mass·t
    let sym = Symbol::quadratic(2, vec![0.0; 4]).unwrap();
    let r = function_valued_check(
        &SpectralSpec::FiniteMass { d: 2, mass: 3.0 },
        &sym,
        &Kernel::Constant,
        0.5,
    )
    .unwrap();
    assert_relative_eq!(r.value.unwrap(), 1.5, max_relative = 1e-6);
}

#[test]
fn linear_kernel_never_function_valued_for_power_densities() {
    // g_t(v) tends to t/2 as v grows, so the density alone must be integrable
    for (d, beta) in [(2, 0.5), (2, 1.0), (3, 1.0)] {
        let r = function_valued_check(
            &radial(d, beta),
            &Symbol::laplacian(d),
            &Kernel::Linear,
            1.0,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Fails, "d={d} beta={beta}");
        assert_eq!(r.numeric_verdict, Some(Verdict::Fails));
    }
}

#[test]
fn fractional_symbol_growth_enters_comparison() {
    let sym = Symbol::fractional(2, 1.0).unwrap();
    // β < pκ = 1
    let r = function_valued_check(&radial(2, 0.5), &sym, &Kernel::Constant, 1.0).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    let r = function_valued_check(&radial(2, 1.5), &sym, &Kernel::Constant, 1.0).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    assert_eq!(r.numeric_verdict, Some(Verdict::Fails));
}

#[test]
fn power_kernel_decay_exponent() {
    // α = 1.5: κ = 2/3, holds iff β < 4/3
    let k = Kernel::power(1.5).unwrap();
    let lap = Symbol::laplacian(2);
    let r = function_valued_check(&radial(2, 1.0), &lap, &k, 1.0).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.numeric_verdict, Some(Verdict::Holds));
    let r = function_valued_check(&radial(2, 1.6), &lap, &k, 1.0).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
}

#[test]
fn continuity_examples() {
    let lap2 = Symbol::laplacian(2);
    let r = continuity_check(&radial(2, 1.0), &lap2, &Kernel::Constant, 1.0, 0.5).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.numeric_verdict, Some(Verdict::Holds));
    let r = continuity_check(
        &SpectralSpec::FiniteMass { d: 2, mass: 1.0 },
        &lap2,
        &Kernel::Constant,
        1.0,
        1.0,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Holds);

    // v = |λ|^{0.1}: integrand ρ^{β-1-0.1}·log weight at ∞, ρ^{β-1}·ρ^{1.5} at 0
    let sym = Symbol::fractional(3, 0.1).unwrap();
    let r = continuity_check(&radial(3, 0.05), &sym, &Kernel::Constant, 1.0, 0.5).unwrap();
    assert_eq!(r.analytic_verdict, Some(Verdict::Holds));
    let r = continuity_check(&radial(3, 0.15), &sym, &Kernel::Constant, 1.0, 0.5).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);

    assert!(continuity_check(&radial(2, 1.0), &lap2, &Kernel::Constant, 1.0, 0.0).is_err());
}

#[test]
fn tabulated_kernel_warns() {
    let times: Vec<f64> = (1..=400).map(|i| i as f64 * 0.01).collect();
    let k = Kernel::Tabulated(TabulatedKernel::from_fn(times, |_| 1.0).unwrap());
    let r = function_valued_check(&radial(2, 1.0), &Symbol::laplacian(2), &k, 1.0).unwrap();
    assert!(r
        .warnings
        .iter()
        .any(|w| w.starts_with("HypothesisHUnverified")));
    assert_eq!(r.verdict, Verdict::Holds);
    // same kernel as Constant on [0, 4]
    let c = function_valued_check(
        &radial(2, 1.0),
        &Symbol::laplacian(2),
        &Kernel::Constant,
        1.0,
    )
    .unwrap();
    assert_relative_eq!(r.value.unwrap(), c.value.unwrap(), max_relative = 2e-2);
}

#[test]
fn gamma_domain_examples() {
    let r = gamma_domain_check(2, 1.0, 2.0, 0.5).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    for (beta, expect) in [
        (1.85, Verdict::Holds),
        (1.9, Verdict::Fails),
        (2.5, Verdict::Fails),
    ] {
        let r = gamma_domain_check(3, beta, 2.0, 0.1).unwrap();
        assert_eq!(r.verdict, expect, "beta={beta}");
        if expect == Verdict::Fails {
            assert!(r.witness.unwrap().starts_with("|x| <= 1"));
        }
    }
    // δ > α_s leaves no room near 0
    let r = gamma_domain_check(2, 0.0, 0.5, 1.0).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    assert!(r.witness.unwrap().starts_with("|x| <= 1"));
    assert!(gamma_domain_check(2, 1.0, 2.0, 0.0).is_err());
    assert!(gamma_domain_check(1, 0.5, 2.0, 0.5).is_err());
    assert!(gamma_domain_check(2, 1.0, 2.5, 0.5).is_err());
    assert!(gamma_domain_check(2, 2.0, 2.0, 0.5).is_err());
}

#[test]
fn sobolev_examples_and_grid() {
    let r = sobolev_check(&SpectralSpec::TorusDecay { d: 1, q: 1.0 }, 0.0).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.numeric_verdict, Some(Verdict::Holds));
    let r = sobolev_check(&SpectralSpec::TorusDecay { d: 2, q: 1.0 }, 0.0).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    // log divergence: partial sums keep growing by about the same amount per doubling
    let incs: Vec<f64> = r
        .trace
        .windows(2)
        .skip(5)
        .map(|w| w[1].1 - w[0].1)
        .collect();
    assert!(incs.iter().all(|&x| x > 4.0 && x < 4.8), "{incs:?}");

    for d in 1..=3usize {
        for q in [0.5, 1.0, 2.0] {
            for alpha in [-1.0, 0.0, 0.5] {
                let r = sobolev_check(&SpectralSpec::TorusDecay { d, q }, alpha).unwrap();
                let expect = if 2.0 * (q - alpha) > d as f64 {
                    Verdict::Holds
                } else {
                    Verdict::Fails
                };
                assert_eq!(r.verdict, expect, "d={d} q={q} alpha={alpha}");
                assert_ne!(
                    r.numeric_verdict,
                    Some(if expect == Verdict::Holds {
                        Verdict::Fails
                    } else {
                        Verdict::Holds
                    })
                );
            }
        }
    }
}

#[test]
fn sobolev_explicit_coefficients() {
    for d in 1..=3 {
        let zero = SpectralSpec::TorusExplicit {
            d,
            coefficients: vec![ModeCoefficient {
                n: vec![1; d],
                gamma: 0.0,
            }],
        };
        let r = sobolev_check(&zero, 2.0).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.value, Some(0.0));
    }
    let spec = SpectralSpec::TorusExplicit {
        d: 2,
        coefficients: vec![
            ModeCoefficient {
                n: vec![0, 0],
                gamma: 1.0,
            },
            ModeCoefficient {
                n: vec![3, -1],
                gamma: 0.5,
            },
        ],
    };
    let r = sobolev_check(&spec, 1.0).unwrap();
    assert_relative_eq!(
        r.trace.last().unwrap().1,
        1.0 + 0.5 * 11.0,
        max_relative = 1e-14
    );
    let neg = SpectralSpec::TorusExplicit {
        d: 1,
        coefficients: vec![ModeCoefficient {
            n: vec![2],
            gamma: -1.0,
        }],
    };
    assert!(matches!(
        sobolev_check(&neg, 0.0),
        Err(VflError::NegativeCoefficient { .. })
    ));
    assert!(sobolev_check(&radial(2, 1.0), 0.0).is_err());
}

#[test]
fn admissible_exponential_and_lin_exp() {
    let n2: Vec<f64> = (0..=8).map(|j| 10f64.powf(0.5 * j as f64)).collect();
    let r = admissible_constant(&Kernel::Exponential, &n2, 1e-10).unwrap();
    assert!((r.c_b - 0.5).abs() < 1e-3, "{}", r.c_b);
    for &(x, y) in &r.table {
        // r = e^{-(1+x)t}
        assert!((y - x / (2.0 * (x + 1.0))).abs() < 1e-8, "n2={x}: {y}");
    }
    assert_relative_eq!(
        r.table.iter().find(|p| p.0 == 1.0).unwrap().1,
        0.25,
        max_relative = 1e-9
    );

    let r = admissible_constant(&Kernel::LinExp, &n2, 1e-10).unwrap();
    assert!((r.c_b - 0.25).abs() < 1e-3, "{}", r.c_b);
    assert!(r.to_csv().starts_with("n2,value\n1,"));
}

#[test]
fn admissible_exponential_single_value() {
    let r = admissible_constant(
        &Kernel::Exponential,
        &[4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0],
        1e-12,
    )
    .unwrap();
    assert_relative_eq!(r.table[0].1, 0.4, max_relative = 1e-9);
    // three points this far from the limit do not settle
    assert!(matches!(
        admissible_constant(&Kernel::Exponential, &[1.0, 2.0, 4.0], 1e-12),
        Err(VflError::LimitNotDetected(_))
    ));
}

#[test]
fn admissible_failures() {
    // r = cos(|n| t) for the linear kernel
    assert!(admissible_constant(&Kernel::Linear, &[1.0, 2.0, 4.0], 1e-8).is_err());
    // r = e^{-|n|² t}: |n|² ∫ r² = 1/2 exactly
    let r = admissible_constant(&Kernel::Constant, &[1.0, 2.0, 4.0], 1e-8).unwrap();
    assert_relative_eq!(r.c_b, 0.5, max_relative = 1e-9);
    assert!(admissible_constant(&Kernel::Exponential, &[4.0, 2.0, 8.0], 1e-8).is_err());
    assert!(admissible_constant(&Kernel::Exponential, &[1.0, 2.0], 1e-8).is_err());
}

#[test]
fn limit_measure_constant_kernel() {
    let r = limit_measure(
        &radial(3, 2.5),
        &Symbol::laplacian(3),
        &Kernel::Constant,
        10,
    )
    .unwrap();
    for p in &r.g_infinity {
        assert_relative_eq!(p.g * 2.0 * p.v, 1.0, max_relative = 1e-12);
    }
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.k, Some(1));
    assert_eq!(r.analytic_k, Some(1));
    assert_eq!(r.locally_finite, Some(true));

    // g_∞ ~ |λ|^{-2} is not integrable at 0 against |λ|^{β-3} unless β > 2
    let r = limit_measure(
        &radial(3, 1.0),
        &Symbol::laplacian(3),
        &Kernel::Constant,
        10,
    )
    .unwrap();
    assert_eq!(r.locally_finite, Some(false));
    assert_eq!(r.verdict, Verdict::Fails);
    assert!(r.trials[0]
        .witness
        .as_deref()
        .unwrap()
        .starts_with("rho -> 0"));
}

#[test]
fn limit_measure_non_decaying_kernels() {
    for k in [Kernel::Linear, Kernel::Exponential] {
        let r = limit_measure(&radial(2, 1.0), &Symbol::laplacian(2), &k, 10).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.tail_non_decaying_at.is_some());
        assert!(r.warnings[0].starts_with("TailNonDecaying"));
    }
}

#[test]
fn limit_measure_h1_kernel_is_slowly_increasing() {
    let k = h1_kernel();
    let spec = SpectralSpec::FiniteMass { d: 3, mass: 1.0 };
    let r = limit_measure(&spec, &Symbol::laplacian(3), &k, 10).unwrap();
    assert_eq!(r.verdict, Verdict::Holds, "{:#?}", r.trials);
    assert_eq!(r.k, Some(1));
    assert_eq!(r.g_infinity.len(), 17);
    for p in &r.g_infinity {
        assert_relative_eq!(p.g, h1_g_infinity(p.v), max_relative = 1e-4);
    }
    // g_∞ ≈ 1/v near 0 against ρ dρ in the plane: not locally finite
    let spec = SpectralSpec::FiniteMass { d: 2, mass: 1.0 };
    let r = limit_measure(&spec, &Symbol::laplacian(2), &k, 10).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    assert_eq!(r.locally_finite, Some(false));
}

/// `ŝ(λ) = (λ+1)/(λ² + (1+v)λ + v/2)` for `a = 1/2 + e^{-t}/2`: two real poles.
fn h1_g_infinity(v: f64) -> f64 {
    let b = 1.0 + v;
    let disc = (b * b - 2.0 * v).sqrt();
    let (p1, p2) = (0.5 * (-b + disc), 0.5 * (-b - disc));
    let (a1, a2) = ((p1 + 1.0) / (p1 - p2), (p2 + 1.0) / (p2 - p1));
    a1 * a1 / (-2.0 * p1) + a2 * a2 / (-2.0 * p2) + 2.0 * a1 * a2 / -(p1 + p2)
}

#[test]
fn h2_exponential_kernel() {
    let pairs = [
        (0.0, 0.1),
        (0.5, 0.55),
        (1.0, 1.02),
        (2.0, 2.01),
        (0.0, 0.005),
    ];
    let r = h2_verify(
        &Kernel::Exponential,
        1.0 - 1e-6,
        &[1.0, 4.0, 16.0, 64.0],
        &pairs,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(r.c_delta.unwrap().is_finite());
    let row = r.rows.iter().find(|w| w.n2 == 4.0 && w.t == 0.1).unwrap();
    // r = e^{-5t}: ∫_0^{0.1} e^{-10τ} dτ
    assert_relative_eq!(row.lhs_i, -(-1f64).exp_m1() / 10.0, max_relative = 1e-9);
    assert_relative_eq!(row.lhs_i, 0.063_212_1, max_relative = 1e-6);
    // ∫_0^∞ (e^{-5(u+l)} - e^{-5u})² du = (1 - e^{-5l})²/10
    assert_relative_eq!(
        row.lhs_ii,
        (-(-0.5f64).exp_m1()).powi(2) / 10.0,
        max_relative = 1e-8
    );
    // LHS(i) → 0 with the lag
    let small = r.rows.iter().find(|w| w.n2 == 4.0 && w.t == 0.005).unwrap();
    assert!(small.lhs_i < row.lhs_i / 12.0);
    assert!(h2_verify(&Kernel::Exponential, 1.0, &[4.0], &pairs).is_err());
}

#[test]
fn h2_numeric_path() {
    let pairs = [(0.0, 0.1), (0.0, 0.05), (0.0, 0.02), (0.0, 0.01)];
    let r = h2_verify(&Kernel::LinExp, 0.9, &[4.0, 16.0], &pairs).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(r.fitted_exponent_i.unwrap() > 0.95);
}

#[test]
fn holder_brownian_and_degenerate() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let n = 1 << 16;
    let h = 1.0 / n as f64;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut path = vec![0.0];
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        path.push(path.last().unwrap() + h.sqrt() * z);
    }
    let e = holder_estimate(&path, h).unwrap();
    assert!((0.45..=0.55).contains(&e.exponent), "{e:?}");
    assert!(matches!(
        holder_estimate(&vec![1.0; 4097], h),
        Err(VflError::InsufficientData(_))
    ));
    assert!(matches!(
        holder_estimate(&path[..1000], h),
        Err(VflError::InsufficientData(_))
    ));
}

#[test]
fn holder_on_simulated_paths() {
    let cov = torus_coefficients(&SpectralSpec::TorusDecay { d: 1, q: 1.0 }, 2).unwrap();
    let grid = TimeGrid::with_steps(1.0 / 4096.0, 1 << 14).unwrap();
    let path = simulate_path(
        &cov,
        &Kernel::Exponential,
        &Symbol::laplacian(1),
        &grid,
        Regime::Stationary,
        NoiseSeed(11),
        0,
    )
    .unwrap();
    let e = holder_estimate_path(
        &path,
        &HolderTarget::Mode {
            n: vec![2],
            component: 1,
        },
    )
    .unwrap();
    assert!((0.40..=0.55).contains(&e.exponent), "{e:?}");
    let z = holder_estimate_path(&path, &HolderTarget::ZeroMode).unwrap();
    assert!((0.40..=0.55).contains(&z.exponent), "{z:?}");
    assert!(holder_estimate_path(&path, &HolderTarget::L2).is_ok());
    assert!(holder_estimate_path(
        &path,
        &HolderTarget::Mode {
            n: vec![9],
            component: 1
        }
    )
    .is_err());
    assert!(holder_estimate_path(
        &path,
        &HolderTarget::Mode {
            n: vec![1],
            component: 3
        }
    )
    .is_err());
}

#[test]
fn sobolev_consistency_with_simulation() {
    // L² mean square norm of snapshots across truncations N and 2N
    let mean_energy = |q: f64, d: usize, n_max: usize| -> f64 {
        let cov = torus_coefficients(&SpectralSpec::TorusDecay { d, q }, n_max).unwrap();
        let s = SnapshotSampler::new(
            &cov,
            &Kernel::Constant,
            &Symbol::quadratic(d, vec![0.0; d * d]).unwrap(),
            1.0,
            Regime::ZeroInitial,
        )
        .unwrap();
        let reps = 400;
        (0..reps)
            .map(|r| s.draw(NoiseSeed(3), r).energy())
            .sum::<f64>()
            / reps as f64
    };
    // d = 1, q = 1 holds at α = 0: tight
    let report = sobolev_check(&SpectralSpec::TorusDecay { d: 1, q: 1.0 }, 0.0).unwrap();
    assert_eq!(report.verdict, Verdict::Holds);
    let (a, b) = (mean_energy(1.0, 1, 64), mean_energy(1.0, 1, 128));
    assert!((b - a) / a < 0.05, "{a} {b}");
    // d = 2, q = 1 fails: each doubling adds about 2π ln 2 ≈ 4.36 to E|X|²
    let report = sobolev_check(&SpectralSpec::TorusDecay { d: 2, q: 1.0 }, 0.0).unwrap();
    assert_eq!(report.verdict, Verdict::Fails);
    let e: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| mean_energy(1.0, 2, n))
        .collect();
    assert!(e[1] - e[0] > 3.0 && e[2] - e[1] > 3.0, "{e:?}");
}

#[test]
fn reports_serialise() {
    let r = gamma_domain_check(2, 1.0, 2.0, 0.5).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["verdict"], "holds");
    assert_eq!(v["criterion"], "gamma_domain");
    assert_eq!(v["inputs_hash"].as_str().unwrap().len(), 64);
    let again = gamma_domain_check(2, 1.0, 2.0, 0.5).unwrap();
    assert_eq!(r.inputs_hash, again.inputs_hash);
    assert_ne!(
        r.inputs_hash,
        gamma_domain_check(2, 1.0, 2.0, 0.6).unwrap().inputs_hash
    );
}

use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_numeric_agreement(d in 2usize..=4, beta_frac in 0.05f64..0.95, k_idx in 0usize..3) {
        let beta = beta_frac * d as f64;
        let k = [Kernel::Constant, Kernel::Exponential, Kernel::power(1.5).unwrap()][k_idx].clone();
        let r = function_valued_check(&radial(d, beta), &Symbol::laplacian(d), &k, 1.0).unwrap();
        let a = r.analytic_verdict.unwrap();
        // skip the immediate neighbourhood of the threshold, where no finite budget decides
        let threshold = 2.0 * finite_energy_decay(&k).unwrap();
        prop_assume!((beta - threshold).abs() > 0.1);
        let n = r.numeric_verdict.unwrap();
        prop_assert!(n == Verdict::Inconclusive || n == a, "beta={} numeric {:?} analytic {:?}", beta, n, a);
        prop_assert_eq!(n, a);
    }

    #[test]
    fn verdict_is_analytic_when_available(beta in 0.1f64..1.9) {
        let r = function_valued_check(&radial(2, beta), &Symbol::laplacian(2), &Kernel::Constant, 1.0).unwrap();
        prop_assert_eq!(Some(r.verdict), r.analytic_verdict);
        prop_assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn holds_implies_stable_trace(beta in 0.1f64..1.9) {
        let r = function_valued_check(&radial(2, beta), &Symbol::laplacian(2), &Kernel::Constant, 1.0).unwrap();
        prop_assert_eq!(r.numeric_verdict, Some(Verdict::Holds));
        prop_assert!(r.value.unwrap() > r.trace.last().unwrap().1 * (1.0 - 1e-12));
    }
}
