//! Radial quadrature on `ℝᵈ` with horizon doubling and power-law tail fits.
//!
//! The integral `∫_0^∞ f(ρ) dρ` is accumulated over octaves `[2^j, 2^{j+1}]`,
//! extending one octave at each end per step. Octave increments `Δ_j ≍ 2^{j s}`
//! give the integrand exponent `x = s - 1` of `f(ρ) ≍ ρ^x`.

use std::f64::consts::{LN_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::quad::{integrate_with_breaks, linear_fit};
use crate::special::gamma;

use super::Verdict;

/// Stabilisation threshold for the tail-corrected partial sums.
pub const STABLE_REL: f64 = 1e-6;
/// Safety margin on fitted exponents before divergence is declared.
pub const DIVERGENCE_MARGIN: f64 = 0.05;
const FIT_WINDOW: usize = 4;
const INITIAL_OCTAVES: i32 = 3;

/// Surface area of the unit sphere in `ℝᵈ`.
pub fn sphere_area(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    2.0 * PI.powf(h) / gamma(h)
}

/// Quadrature directions on the unit sphere with a common weight.
pub(crate) struct Directions {
    pub points: Vec<Vec<f64>>,
    pub weight: f64,
}

pub(crate) fn directions(d: usize, isotropic: bool) -> Directions {
    let area = sphere_area(d);
    if isotropic {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        return Directions {
            points: vec![e],
            weight: area,
        };
    }
    let points: Vec<Vec<f64>> = match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..64)
            .map(|j| {
                let a = (j as f64 + 0.5) * 2.0 * PI / 64.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci lattice
            let n = 256;
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1e5);
            (0..512)
                .map(|_| {
                    let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    g.into_iter().map(|x| x / norm).collect()
                })
                .collect()
        }
    };
    let weight = area / points.len() as f64;
    Directions { points, weight }
}

#[derive(Clone, Debug)]
pub(crate) struct RadialOutcome {
    /// Tail-corrected value (infinite when a tail does not decay).
    pub value: f64,
    /// `(upper radius, raw partial integral)` after each doubling.
    pub trace: Vec<(f64, f64)>,
    pub exponent_inf: Option<f64>,
    pub verdict: Verdict,
    pub witness: Option<String>,
    pub horizon: [f64; 2],
    pub notes: Vec<String>,
}

/// Fit of the last octave increments of one end.
struct TailFit {
    /// Growth per octave in `ln Δ` against `ln ρ` (outward).
    slope: Option<f64>,
    tail: f64,
}

fn fit_tail(incs: &[f64]) -> TailFit {
    let n = incs.len();
    if n == 0 {
        return TailFit {
            slope: None,
            tail: f64::INFINITY,
        };
    }
    let last = incs[n - 1];
    let window = &incs[n.saturating_sub(FIT_WINDOW)..];
    // nonnegative integrands: a vanishing octave means nothing is left
    if last == 0.0 {
        return TailFit {
            slope: Some(f64::NEG_INFINITY),
            tail: 0.0,
        };
    }
    let (x, y): (Vec<f64>, Vec<f64>) = window
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (i as f64 * LN_2, v.ln()))
        .unzip();
    let Some((slope, _, _)) = linear_fit(&x, &y) else {
        return TailFit {
            slope: None,
            tail: f64::INFINITY,
        };
    };
    let tail = if slope < -1e-3 {
        let q = (slope * LN_2).exp();
        last.max(0.0) * q / (1.0 - q)
    } else {
        f64::INFINITY
    };
    TailFit {
        slope: Some(slope),
        tail,
    }
}

fn octave<F: FnMut(f64) -> Result<f64>>(f: &mut F, j: i32) -> Result<f64> {
    let a = j as f64 * LN_2;
    let mut failure = None;
    let q = integrate_with_breaks(
        |u| {
            if failure.is_some() {
                return 0.0;
            }
            let r = u.exp();
            match f(r) {
                Ok(v) => v * r,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        &[a, a + LN_2],
        0.0,
        1e-10,
        64,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(q.value),
    }
}

/// `∫_0^∞ f(ρ) dρ` for a nonnegative radial density `f`.
///
/// An error from `f` while extending one end closes that end (recorded in
/// `notes`); errors inside the initial window are returned.
pub(crate) fn radial_integral<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    max_doublings: usize,
) -> Result<RadialOutcome> {
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    for j in 0..INITIAL_OCTAVES {
        top.push(octave(&mut f, j)?);
    }
    for j in 1..=INITIAL_OCTAVES {
        bottom.push(octave(&mut f, -j)?);
    }
    let (mut hi, mut lo) = (INITIAL_OCTAVES, -INITIAL_OCTAVES);
    let (mut top_open, mut bottom_open) = (true, true);
    let mut notes = Vec::new();
    let mut trace = Vec::new();
    let mut corrected: Vec<f64> = Vec::new();
    let mut raws: Vec<f64> = Vec::new();
    let mut top_slopes: Vec<f64> = Vec::new();
    let mut bottom_slopes: Vec<f64> = Vec::new();
    let mut verdict = Verdict::Inconclusive;
    let mut witness = None;
    let (mut tf, mut bf) = (fit_tail(&top), fit_tail(&bottom));

    for _ in 0..max_doublings {
        if top_open {
            match octave(&mut f, hi) {
                Ok(x) => {
                    top.push(x);
                    hi += 1;
                }
                Err(e) => {
                    top_open = false;
                    notes.push(format!("outer horizon closed at rho = 2^{hi}: {e}"));
                }
            }
        }
        if bottom_open {
            match octave(&mut f, lo - 1) {
                Ok(x) => {
                    bottom.push(x);
                    lo -= 1;
                }
                Err(e) => {
                    bottom_open = false;
                    notes.push(format!("inner horizon closed at rho = 2^{lo}: {e}"));
                }
            }
        }
        let raw: f64 = top.iter().sum::<f64>() + bottom.iter().sum::<f64>();
        tf = fit_tail(&top);
        bf = fit_tail(&bottom);
        let c = raw + tf.tail + bf.tail;
        trace.push(((hi as f64).exp2(), raw));
        raws.push(raw);
        corrected.push(c);
        top_slopes.push(tf.slope.unwrap_or(f64::NAN));
        bottom_slopes.push(bf.slope.unwrap_or(f64::NAN));

        let m = corrected.len();
        if m >= 3 {
            let stable = |a: f64, b: f64| {
                a.is_finite() && b.is_finite() && (a - b).abs() <= STABLE_REL * a.abs().max(1e-300)
            };
            if c == 0.0 && raw == 0.0
                || stable(corrected[m - 1], corrected[m - 2])
                    && stable(corrected[m - 2], corrected[m - 3])
            {
                verdict = Verdict::Holds;
                break;
            }
            let growing = raws[m - 1] > raws[m - 2] * (1.0 + 1e-12)
                && raws[m - 2] > raws[m - 3] * (1.0 + 1e-12);
            let top_div = top_slopes[m - 2..].iter().all(|&s| s >= DIVERGENCE_MARGIN);
            // inward the fit runs in -ln ρ, so Δ ≍ ρ^{-slope}
            let bottom_div = bottom_slopes[m - 2..]
                .iter()
                .all(|&s| s >= DIVERGENCE_MARGIN);
            if growing && (top_div || bottom_div) {
                verdict = Verdict::Fails;
                witness = Some(if top_div {
                    format!(
                        "rho -> infinity: integrand exponent {:.4} >= -1",
                        top_slopes[m - 1] - 1.0
                    )
                } else {
                    format!(
                        "rho -> 0: integrand exponent {:.4} <= -1",
                        -bottom_slopes[m - 1] - 1.0
                    )
                });
                break;
            }
        }
        if !top_open && !bottom_open {
            break;
        }
    }
    let raw = *raws
        .last()
        .unwrap_or(&(top.iter().sum::<f64>() + bottom.iter().sum::<f64>()));
    Ok(RadialOutcome {
        value: raw + tf.tail + bf.tail,
        trace,
        exponent_inf: tf.slope.filter(|s| s.is_finite()).map(|s| s - 1.0),
        verdict,
        witness,
        horizon: [(lo as f64).exp2(), (hi as f64).exp2()],
        notes,
    })
}

/// Judges a series from its partial sums over doubling budgets.
pub(crate) fn judge_doubling_sums(partial: &[f64]) -> (Verdict, Option<f64>, f64) {
    let incs: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
    let fit = fit_tail(&incs);
    let last = *partial.last().unwrap_or(&0.0);
    let corrected: Vec<f64> = (3..=incs.len())
        .map(|m| partial[m] + fit_tail(&incs[..m]).tail)
        .collect();
    let m = corrected.len();
    let exponent = fit.slope.filter(|s| s.is_finite()).map(|s| s - 1.0);
    let stable = |a: f64, b: f64| {
        a.is_finite() && b.is_finite() && (a - b).abs() <= STABLE_REL * a.abs().max(1e-300)
    };
    if incs.iter().all(|&x| x == 0.0) || m >= 2 && stable(corrected[m - 1], corrected[m - 2]) {
        return (Verdict::Holds, exponent, last + fit.tail.min(f64::MAX));
    }
    let growing = incs.len() >= 2 && incs[incs.len() - 2..].iter().all(|&x| x > 0.0);
    if growing && fit.slope.is_some_and(|s| s >= DIVERGENCE_MARGIN) {
        return (Verdict::Fails, exponent, f64::INFINITY);
    }
    (Verdict::Inconclusive, exponent, last)
}
