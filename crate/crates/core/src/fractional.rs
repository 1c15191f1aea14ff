//! Mittag-Leffler and Wright functions, the scalar α-times resolvent and the
//! subordination identity between fractional orders.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VflError};
use crate::quad::{integrate, integrate_with_breaks};
use crate::special::{ln_abs_rgamma, ln_gamma, rgamma};

/// Evaluation parameters for the fractional special functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub alpha: f64,
    /// Subordination ratio `α/β`.
    pub gamma: f64,
    /// Series term cap.
    pub series_terms: usize,
    /// Largest `|z|` evaluated by the Mittag-Leffler power series.
    pub switch_radius: f64,
}

impl FracParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid(format!(
                "fractional order must lie in (0,2), got {alpha}"
            )));
        }
        if !(beta == 1.0 || beta == 2.0) {
            return Err(invalid(format!(
                "subordinating order must be 1 or 2, got {beta}"
            )));
        }
        let gamma = alpha / beta;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(format!(
                "subordination ratio alpha/beta = {gamma} must lie in (0,1)"
            )));
        }
        Ok(Self {
            alpha,
            gamma,
            series_terms: 400,
            switch_radius: 5.0,
        })
    }
}

const ML_SERIES_RADIUS: f64 = 5.0;
/// Largest tolerated term magnitude in an alternating series (about four lost digits).
const MAX_TERM: f64 = 1e4;
const OVERLAP_TOL: f64 = 1e-8;
/// Beyond this `|z|` on the negative axis the asymptotic expansion is used;
/// the spectral integral loses relative accuracy once `E_α` is tiny.
const ML_ASYMPTOTIC_FROM: f64 = 1e6;

/// `E_α(z) = Σ z^k / Γ(αk + 1)` for real `z`.
///
/// `α ∈ (0, 2]`. The power series is used near the origin; on the negative
/// axis beyond that a spectral integral takes over. Both are compared in the
/// band where they overlap.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(invalid(format!(
            "Mittag-Leffler order must lie in (0,2], got {alpha}"
        )));
    }
    if z.is_nan() {
        return Err(invalid("Mittag-Leffler argument is NaN"));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(z.exp());
    }
    if alpha == 2.0 {
        return Ok(if z < 0.0 {
            (-z).sqrt().cos()
        } else {
            z.sqrt().cosh()
        });
    }
    if z > 0.0 {
        return Ok(ml_positive_series(alpha, z));
    }
    let x = -z;
    let radius = series_radius(alpha);
    if x <= radius {
        let s = ml_series(alpha, z);
        if x > 0.8 * radius {
            let i = ml_integral(alpha, x);
            if (s - i).abs() > OVERLAP_TOL {
                return Err(VflError::AccuracyLoss {
                    z,
                    discrepancy: (s - i).abs(),
                });
            }
        }
        Ok(s)
    } else if x >= ML_ASYMPTOTIC_FROM {
        Ok(ml_far(alpha, x))
    } else {
        Ok(ml_integral(alpha, x))
    }
}

/// Asymptotic series plus, for `α > 1`, the decaying oscillation from the poles.
fn ml_far(alpha: f64, x: f64) -> f64 {
    let mut value = mittag_leffler_asymptotic(alpha, x, 6);
    if alpha > 1.0 {
        let t = x.powf(1.0 / alpha);
        let a = PI / alpha;
        value += 2.0 / alpha * (t * a.cos()).exp() * (t * a.sin()).cos();
    }
    value
}

/// Batch evaluation; results keep the input order.
pub fn mittag_leffler_batch(alpha: f64, zs: &[f64]) -> Result<Vec<f64>> {
    zs.par_iter().map(|&z| mittag_leffler(alpha, z)).collect()
}

/// Radius `R ≤ 5` inside which the alternating series keeps its largest term below `MAX_TERM`.
fn series_radius(alpha: f64) -> f64 {
    let peak = |x: f64| -> f64 {
        let lx = x.ln();
        (0..400)
            .map(|k| k as f64 * lx - ln_gamma(alpha * k as f64 + 1.0))
            .fold(f64::MIN, f64::max)
    };
    if peak(ML_SERIES_RADIUS) <= MAX_TERM.ln() {
        return ML_SERIES_RADIUS;
    }
    let (mut lo, mut hi) = (0.0, ML_SERIES_RADIUS);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if peak(mid) <= MAX_TERM.ln() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn ml_series(alpha: f64, z: f64) -> f64 {
    let lx = z.abs().ln();
    let mut sum = 1.0;
    let mut p = 1.0;
    for k in 1..2000 {
        p *= z;
        let a = alpha * k as f64 + 1.0;
        let term = if a < 170.0 && p.is_finite() {
            p * rgamma(a)
        } else {
            let m = (k as f64 * lx - ln_gamma(a)).exp();
            if z < 0.0 && k % 2 == 1 {
                -m
            } else {
                m
            }
        };
        sum += term;
        if term.abs() < 1e-18 && (k as f64) * alpha > 2.0 * z.abs() {
            break;
        }
    }
    sum
}

/// All terms positive: accumulate relative to the largest to avoid overflow.
fn ml_positive_series(alpha: f64, z: f64) -> f64 {
    let lz = z.ln();
    let logs: Vec<f64> = (0..)
        .map(|k: usize| k as f64 * lz - ln_gamma(alpha * k as f64 + 1.0))
        .scan((f64::MIN, 0usize), |st, lt| {
            if lt > st.0 {
                st.0 = lt;
            }
            st.1 += 1;
            // stop well past the peak
            if st.1 > 5 && lt < st.0 - 40.0 {
                None
            } else {
                Some(lt)
            }
        })
        .take(200_000)
        .collect();
    let m = logs.iter().cloned().fold(f64::MIN, f64::max);
    let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
    (m + s.ln()).exp()
}

/// `E_α(-x)` from the spectral density of the relaxation function, written in
/// an angle variable that flattens the Lorentzian peak; `α ∈ (1,2)` adds the
/// residue of the two complex poles.
fn ml_integral(alpha: f64, x: f64) -> f64 {
    let t = x.powf(1.0 / alpha);
    let rho0 = -(alpha * PI).cos();
    let w = (alpha * PI).sin().abs();
    let sign = (alpha * PI).sin().signum();
    let phi_min = (-rho0 / w).atan();
    let phi_of = |u: f64| ((u - rho0) / w).atan();
    let mut breaks = vec![phi_min];
    for s in [1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e3] {
        let p = phi_of(s / x);
        if p > *breaks.last().unwrap() && p < 0.5 * PI {
            breaks.push(p);
        }
    }
    if rho0 > 0.0 {
        // the Lorentzian centre, where the substitution puts φ = 0
        breaks.push(0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    breaks.push(0.5 * PI);
    let f = |phi: f64| {
        let u = rho0 + w * phi.tan();
        if u <= 0.0 {
            return 1.0;
        }
        (-(t * u.powf(1.0 / alpha))).exp()
    };
    let q = integrate_with_breaks(f, &breaks, 1e-16, 1e-13, 4000);
    let mut value = sign * q.value / (alpha * PI);
    if alpha > 1.0 {
        let a = PI / alpha;
        value += 2.0 / alpha * (t * a.cos()).exp() * (t * a.sin()).cos();
    }
    value
}

/// Asymptotic expansion `-Σ_{k=1}^{K} (-x)^{-k} / Γ(1 - αk)` of `E_α(-x)`; for
/// `α ∈ (1,2)` it omits an exponentially damped oscillation.
pub fn mittag_leffler_asymptotic(alpha: f64, x: f64, terms: usize) -> f64 {
    let mut s = 0.0;
    let mut p = 1.0;
    for k in 1..=terms {
        p *= -1.0 / x;
        s -= p * rgamma(1.0 - alpha * k as f64);
    }
    s
}

/// Scalar α-times resolvent `E_α(-μ t^α)` for the operator `A = -μ`.
pub fn alpha_resolvent_s(alpha: f64, mu: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(format!(
            "fractional order must lie in (0,2), got {alpha}"
        )));
    }
    if mu < 0.0 || t < 0.0 {
        return Err(invalid("alpha resolvent needs mu >= 0 and t >= 0"));
    }
    mittag_leffler(alpha, -mu * t.powf(alpha))
}

/// Largest ratio `E_α(ω t^α) / e^{ω^{1/α} t}` over a grid of `ω, t > 0`.
pub fn mittag_leffler_bound_constant(alpha: f64, omegas: &[f64], ts: &[f64]) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &om in omegas {
        for &t in ts {
            let growth = om.powf(1.0 / alpha) * t;
            let e = mittag_leffler(alpha, om * t.powf(alpha))?;
            c = c.max(e * (-growth).exp());
        }
    }
    Ok(c)
}

/// Power series of the Wright density `Φ_γ(z) = Σ (-z)^n / (n! Γ(1 - γ - γn))`.
///
/// Fails with `SeriesDivergence` when the terms cancel too strongly for a
/// trustworthy result or do not settle within the term cap.
pub fn wright_series(gamma: f64, z: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if z < 0.0 {
        return Err(invalid("Wright density needs z >= 0"));
    }
    if z == 0.0 {
        return Ok(rgamma(1.0 - gamma));
    }
    let lz = z.ln();
    let mut sum = 0.0;
    let mut peak: f64 = 0.0;
    let mut ln_fact = 0.0;
    for n in 0..4000usize {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let (lrg, sign) = ln_abs_rgamma(1.0 - gamma - gamma * n as f64);
        let mag = if sign == 0.0 {
            0.0
        } else {
            (n as f64 * lz - ln_fact + lrg).exp()
        };
        let term = (if n % 2 == 1 { -mag } else { mag }) * sign;
        sum += term;
        // |1/Γ(1-x)| <= Γ(x)/π bounds the terms away from the sine factor,
        // which nearly vanishes close to the poles
        let bound = (n as f64 * lz - ln_fact + ln_gamma(gamma * (n + 1) as f64) - PI.ln()).exp();
        peak = peak.max(bound);
        if peak > 1e8 {
            return Err(VflError::SeriesDivergence { z });
        }
        if n > 10 && bound < 1e-17 * peak.max(1.0) {
            if peak * 1e-16 > 1e-10 {
                return Err(VflError::SeriesDivergence { z });
            }
            return Ok(if sum < 0.0 && sum > -1e-10 { 0.0 } else { sum });
        }
    }
    Err(VflError::SeriesDivergence { z })
}

/// Wright density `Φ_γ(z)`, a probability density on `z ≥ 0`.
///
/// Small `z` uses the series; beyond its reach a real integral of
/// Zolotarev type is used, which has no cancellation.
pub fn wright_density(gamma: f64, z: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if z < 0.0 {
        return Err(invalid("Wright density needs z >= 0"));
    }
    if z <= 1.0 {
        return wright_series(gamma, z);
    }
    Ok(wright_integral(gamma, z))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!(
            "Wright index must lie in (0,1), got {gamma}"
        )));
    }
    Ok(())
}

fn wright_integral(nu: f64, z: f64) -> f64 {
    let p = 1.0 / (1.0 - nu);
    let scale = z.powf(p);
    let a = |phi: f64| -> f64 {
        let snp = (nu * phi).sin();
        (snp / phi.sin()).powf(p) * ((1.0 - nu) * phi).sin() / snp
    };
    let f = |phi: f64| {
        let av = a(phi);
        if !av.is_finite() || scale * av > 745.0 {
            return 0.0;
        }
        av * (-scale * av).exp()
    };
    // A is increasing, so the mass sits at small φ for large z
    let mut breaks = vec![0.0];
    for b in [0.05, 0.2, 0.5, 1.0, 2.0] {
        breaks.push(b);
    }
    breaks.push(PI);
    let q = integrate_with_breaks(f, &breaks, 0.0, 1e-12, 4000);
    z.powf(nu * p) * q.value / (PI * (1.0 - nu))
}

/// `|E_α(-μ t^α) - ∫_0^∞ Φ_γ(z) s_β(z t^γ; μ) dz|` with `s_1 = e^{-μs}`,
/// `s_2 = cos(√μ s)`.
pub fn subordination_check(alpha: f64, beta: f64, mu: f64, t: f64) -> Result<f64> {
    let p = FracParams::new(alpha, beta)?;
    if mu < 0.0 || !(t > 0.0) {
        return Err(invalid("subordination needs mu >= 0 and t > 0"));
    }
    let lhs = mittag_leffler(alpha, -mu * t.powf(alpha))?;
    let tg = t.powf(p.gamma);
    let rmu = mu.sqrt();
    let s_beta = move |s: f64| {
        if beta == 1.0 {
            (-mu * s).exp()
        } else {
            (rmu * s).cos()
        }
    };
    let g = p.gamma;
    let density = |z: f64| wright_density(g, z).unwrap_or(f64::NAN);

    let mut upper = 4.0;
    let mut total = integrate(|z| density(z) * s_beta(z * tg), 0.0, upper, 1e-13, 1e-12).value;
    let mut stable = 0;
    for _ in 0..12 {
        let piece = integrate(
            |z| density(z) * s_beta(z * tg),
            upper,
            2.0 * upper,
            1e-14,
            1e-12,
        )
        .value;
        if piece.is_nan() || total.is_nan() {
            return Err(VflError::QuadratureStall(
                "Wright density evaluation failed".into(),
            ));
        }
        total += piece;
        upper *= 2.0;
        if piece.abs() < 1e-12 && density(upper) < 1e-14 {
            stable += 1;
            if stable >= 1 {
                return Ok((lhs - total).abs());
            }
        }
    }
    Err(VflError::QuadratureStall(format!(
        "subordination integral did not settle by z = {upper}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// `e^{x²} erfc(x)` by continued fraction (large x) or Taylor series (small x).
    fn erfcx(x: f64) -> f64 {
        if x < 2.0 {
            // erf(x) = 2/√π Σ (-1)^n x^{2n+1} / (n! (2n+1))
            let mut s = 0.0;
            let mut term = x;
            for n in 0..200 {
                s += term / (2 * n + 1) as f64;
                term *= -x * x / (n + 1) as f64;
            }
            (x * x).exp() * (1.0 - 2.0 / PI.sqrt() * s)
        } else {
            // Lentz-free backward evaluation
            let mut f = 0.0;
            for k in (1..200).rev() {
                f = (k as f64 / 2.0) / (x + f);
            }
            1.0 / (PI.sqrt() * (x + f))
        }
    }

    #[test]
    fn closed_orders() {
        assert_relative_eq!(mittag_leffler(1.0, -2.0).unwrap(), (-2.0f64).exp());
        assert_relative_eq!(
            mittag_leffler(2.0, -PI * PI).unwrap(),
            -1.0,
            max_relative = 1e-15
        );
        assert_eq!(mittag_leffler(0.3, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn half_order_matches_erfc_oracle() {
        assert_relative_eq!(
            mittag_leffler(0.5, -1.0).unwrap(),
            0.427_583_576_155_807,
            max_relative = 1e-12
        );
        for i in 0..200 {
            let x = 0.05 * i as f64 + 0.01;
            let e = mittag_leffler(0.5, -x).unwrap();
            assert!(
                (e - erfcx(x)).abs() < 1e-10,
                "x={x} ml={e} oracle={}",
                erfcx(x)
            );
        }
        for x in [15.0, 40.0, 100.0, 1e3] {
            let e = mittag_leffler(0.5, -x).unwrap();
            assert!((e - erfcx(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn far_branch_keeps_relative_accuracy() {
        for alpha in [0.3, 0.5, 0.9] {
            let x = 1e20;
            let expect = rgamma(1.0 - alpha) / x;
            assert_relative_eq!(
                mittag_leffler(alpha, -x).unwrap(),
                expect,
                max_relative = 1e-12
            );
        }
        for x in [1e6, 1e8, 1e12] {
            let e = mittag_leffler(0.5, -x).unwrap();
            assert_relative_eq!(e, erfcx(x), max_relative = 1e-10);
        }
        // both sides of the switch
        for alpha in [0.4, 0.8, 1.3, 1.7] {
            let a = ml_integral(alpha, 0.99e6);
            let b = ml_far(alpha, 0.99e6);
            assert!(
                (a - b).abs() < 1e-12 * a.abs().max(1e-300) + 1e-15,
                "alpha={alpha}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn integral_agrees_with_asymptotics_far_out() {
        for alpha in [0.3, 0.5, 0.7] {
            let x = 1e4;
            let i = ml_integral(alpha, x);
            let a = mittag_leffler_asymptotic(alpha, x, 6);
            assert_relative_eq!(i, a, max_relative = 1e-10);
        }
    }

    #[test]
    fn strategies_agree_across_orders() {
        for alpha in [0.2, 0.45, 0.8, 0.95, 1.05, 1.3, 1.6, 1.9] {
            let r = series_radius(alpha);
            for frac in [0.5, 0.9, 1.0] {
                let x = frac * r;
                let s = ml_series(alpha, -x);
                let i = ml_integral(alpha, x);
                assert!(
                    (s - i).abs() < 1e-9,
                    "alpha={alpha} x={x} series={s} integral={i}"
                );
            }
        }
    }

    #[test]
    fn near_integer_orders_are_continuous() {
        for x in [0.5, 3.0, 8.0, 20.0] {
            let e1 = mittag_leffler(0.999_999, -x).unwrap();
            assert!((e1 - (-x).exp()).abs() < 1e-5, "x={x}");
            let e2 = mittag_leffler(1.999_999, -x).unwrap();
            assert!((e2 - x.sqrt().cos()).abs() < 1e-4, "x={x}");
        }
    }

    #[test]
    fn positive_argument_growth() {
        // E_α(z) ~ e^{z^{1/α}}/α
        let alpha = 0.5;
        let z: f64 = 10.0;
        let e = mittag_leffler(alpha, z).unwrap();
        assert_relative_eq!(e, 2.0 * (z * z).exp() - erfcx(z), max_relative = 1e-12);
        let c =
            mittag_leffler_bound_constant(0.5, &[0.5, 1.0, 2.0, 4.0], &[0.1, 0.5, 1.0, 2.0, 4.0])
                .unwrap();
        assert!(c > 1.0 && c <= 2.0 + 1e-12, "c = {c}");
    }

    #[test]
    fn wright_examples() {
        assert_relative_eq!(
            wright_density(0.5, 0.0).unwrap(),
            1.0 / PI.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            wright_density(0.5, 2.0).unwrap(),
            (-1.0f64).exp() / PI.sqrt(),
            max_relative = 1e-10
        );
        for z in [0.3, 0.9, 1.5, 4.0, 8.0] {
            assert_relative_eq!(
                wright_density(0.5, z).unwrap(),
                (-z * z / 4.0).exp() / PI.sqrt(),
                max_relative = 1e-9,
                epsilon = 1e-300
            );
        }
    }

    #[test]
    fn wright_series_and_integral_agree() {
        for g in [0.1, 0.25, 0.5, 0.75, 0.9] {
            for z in [1.0, 1.5, 2.5] {
                if let Ok(s) = wright_series(g, z) {
                    let i = wright_integral(g, z);
                    assert!((s - i).abs() < 1e-9, "g={g} z={z} series={s} integral={i}");
                }
            }
        }
    }

    #[test]
    fn wright_is_a_probability_density() {
        for g in [0.25, 0.5, 0.75] {
            let q = integrate(|z| wright_density(g, z).unwrap(), 0.0, 60.0, 1e-13, 1e-12);
            assert_relative_eq!(q.value, 1.0, max_relative = 1e-9);
            // first moment is 1/Γ(1+γ)
            let m = integrate(
                |z| z * wright_density(g, z).unwrap(),
                0.0,
                60.0,
                1e-13,
                1e-12,
            );
            assert_relative_eq!(m.value, rgamma(1.0 + g), max_relative = 1e-8);
        }
    }

    #[test]
    fn subordination_examples() {
        assert!(subordination_check(0.5, 1.0, 1.0, 1.0).unwrap() < 1e-6);
        assert!(subordination_check(0.5, 1.0, 0.0, 5.0).unwrap() < 1e-10);
        assert!(subordination_check(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(subordination_check(1.2, 2.0, 2.0, 1.5).unwrap() < 1e-6);
    }

    proptest! {
        #[test]
        fn decaying_branch_is_positive_and_monotone(alpha in 0.05f64..1.0, x0 in 0.0f64..50.0) {
            let a = mittag_leffler(alpha, -x0).unwrap();
            let b = mittag_leffler(alpha, -x0 - 0.1 - 0.01 * x0).unwrap();
            prop_assert!(a > 0.0 && b > 0.0);
            prop_assert!(b <= a + 1e-13);
        }
    }
}
