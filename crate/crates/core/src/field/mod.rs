//! Spatially homogeneous noise on the torus `T^d` and the mode-by-mode
//! solution of the linear equation driven by it.
//!
//! ```text
//! X(t,θ) = √γ_0 β_0(t) + Σ_{n ∈ Z_s^d} [cos(n,θ) X_n¹(t) + sin(n,θ) X_n²(t)]
//! X_nⁱ(t) = √(2γ_n) ∫ w(t-σ; v(n)) dβ_nⁱ(σ)
//! ```
//!
//! with `w = s` on `[0, t]` (zero initial data) or `w = r(·, -v(n))` on
//! `(-∞, t]` (stationary regime).

mod io;
mod rng;
mod synth;

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{read_vfld, write_vfld, FieldBlock};
pub use rng::{NoiseSeed, Stream};
pub use synth::{axis_angles, synthesize_grid};

use crate::error::{invalid, Result, VflError};
use crate::grid::TimeGrid;
use crate::kernel::Kernel;
use crate::quad::{integrate, simpson};
use crate::resolvent::{
    closed_form_r, closed_form_s, solve_r, solve_s, squared_tail_integral, toeplitz, Convention,
};
use crate::spectral::SpectralSpec;
use crate::symbol::Symbol;

/// Representatives `Z_s^d` with `max |n_i| <= n_max`: nonzero lattice points
/// whose first nonzero coordinate is positive.
pub fn representatives(d: usize, n_max: usize) -> Vec<Vec<i64>> {
    let side = 2 * n_max + 1;
    let total = side.pow(d as u32);
    let mut out = Vec::with_capacity(total / 2);
    let mut n = vec![0i64; d];
    for idx in 0..total {
        let mut r = idx;
        for c in n.iter_mut().rev() {
            *c = (r % side) as i64 - n_max as i64;
            r /= side;
        }
        if n.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            out.push(n.clone());
        }
    }
    out
}

/// Truncated torus covariance: `γ_n` on the representatives plus `γ_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusCovariance {
    pub d: usize,
    pub n_max: usize,
    pub gamma0: f64,
    pub modes: Vec<Vec<i64>>,
    pub gamma: Vec<f64>,
}

impl TorusCovariance {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Index of representative `n` (or of `-n`).
    pub fn index_of(&self, n: &[i64]) -> Option<usize> {
        let neg: Vec<i64> = n.iter().map(|c| -c).collect();
        self.modes.iter().position(|m| m == n || *m == neg)
    }
}

/// `γ_n` of a torus spec on the representatives with `max |n_i| <= n_max`.
pub fn torus_coefficients(spec: &SpectralSpec, n_max: usize) -> Result<TorusCovariance> {
    spec.validate()?;
    if !spec.is_torus() {
        return Err(VflError::Unsupported(
            "torus coefficients need a torus spec".into(),
        ));
    }
    if n_max == 0 {
        return Err(invalid("truncation N must be >= 1"));
    }
    let d = spec.dim();
    let modes = representatives(d, n_max);
    let gamma: Vec<f64> = modes
        .iter()
        .map(|n| spec.torus_gamma(n))
        .collect::<Result<_>>()?;
    let gamma0 = spec.torus_gamma(&vec![0; d])?;
    for (n, &g) in std::iter::once(&vec![0; d])
        .chain(&modes)
        .zip(std::iter::once(&gamma0).chain(&gamma))
    {
        if g < 0.0 {
            return Err(VflError::NegativeCoefficient {
                mode: format_mode(n),
                value: g,
            });
        }
    }
    Ok(TorusCovariance {
        d,
        n_max,
        gamma0,
        modes,
        gamma,
    })
}

pub(crate) fn format_mode(n: &[i64]) -> String {
    n.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `X(0) = 0`; mode weight `s(·; v)` on `[0, t]`.
    ZeroInitial,
    /// Infinite-delay stationary solution; mode weight `r(·, -v)` on `[0, ∞)`.
    Stationary,
}

/// `γ_n ∫_0^t s(σ; v)² dσ` or `γ_n ∫_0^∞ r(σ, -v)² dσ`.
///
/// Each of the two real coefficients of a mode has variance twice this value.
pub fn mode_variance(k: &Kernel, v: f64, gamma_n: f64, t: f64, regime: Regime) -> Result<f64> {
    if !(v >= 0.0) || !(gamma_n >= 0.0) {
        return Err(invalid("symbol value and coefficient must be nonnegative"));
    }
    if gamma_n == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_n * weight_energy(k, v, t, regime)?)
}

/// `∫ w²` for the regime's weight.
fn weight_energy(k: &Kernel, v: f64, t: f64, regime: Regime) -> Result<f64> {
    match regime {
        Regime::ZeroInitial => {
            if !(t >= 0.0) {
                return Err(invalid("time must be nonnegative"));
            }
            if t == 0.0 {
                return Ok(0.0);
            }
            if v == 0.0 {
                return Ok(t);
            }
            if let Kernel::Constant = k {
                return Ok(-(-2.0 * v * t).exp_m1() / (2.0 * v));
            }
            if closed_form_s(k, v, 0.5 * t).is_some() {
                let q = integrate(
                    |x| closed_form_s(k, v, x).map_or(f64::NAN, |s| s * s),
                    0.0,
                    t,
                    1e-13,
                    1e-11,
                );
                if q.value.is_finite() {
                    return Ok(q.value);
                }
            }
            let steps = (256.0 * t * (1.0 + v.sqrt())).ceil().clamp(512.0, 65536.0) as usize;
            let g = TimeGrid::with_steps(t / steps as f64, steps)?;
            let s = solve_s(k, &[v], &g, 1e-6)?;
            let sq: Vec<f64> = s.s_values[0].iter().map(|x| x * x).collect();
            Ok(simpson(&sq, g.h()))
        }
        Regime::Stationary => squared_tail_integral(k, -v, 1e-10),
    }
}

/// One time slice of the field in coefficient form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub t: f64,
    pub d: usize,
    pub modes: Vec<Vec<i64>>,
    pub x0: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl FieldSnapshot {
    /// Spatial mean square `X_0² + ½ Σ (X¹² + X²²)`.
    pub fn energy(&self) -> f64 {
        self.x0 * self.x0 + 0.5 * self.x1.iter().chain(&self.x2).map(|x| x * x).sum::<f64>()
    }
}

/// Symbol values `v(n)` on the representatives.
fn symbol_values(cov: &TorusCovariance, sym: &Symbol) -> Result<Vec<f64>> {
    if sym.dim() != cov.d {
        return Err(VflError::DimensionMismatch {
            expected: cov.d,
            got: sym.dim(),
        });
    }
    cov.modes.iter().map(|n| sym.eval_lattice(n)).collect()
}

/// Applies `f` once per distinct symbol value (many modes share `|n|²`).
fn per_distinct<T: Clone + Send + Sync>(
    vs: &[f64],
    f: impl Fn(f64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let mut keys: Vec<u64> = vs.iter().map(|v| v.to_bits()).collect();
    keys.sort_unstable();
    keys.dedup();
    let vals: Vec<T> = keys
        .par_iter()
        .map(|&b| f(f64::from_bits(b)))
        .collect::<Result<_>>()?;
    let map: BTreeMap<u64, T> = keys.into_iter().zip(vals).collect();
    Ok(vs.iter().map(|v| map[&v.to_bits()].clone()).collect())
}

/// Standard deviations of every coefficient at a fixed time, reusable
/// across replications.
#[derive(Clone, Debug)]
pub struct SnapshotSampler {
    t: f64,
    d: usize,
    modes: Vec<Vec<i64>>,
    sd: Vec<f64>,
    sd0: f64,
}

impl SnapshotSampler {
    pub fn new(
        cov: &TorusCovariance,
        k: &Kernel,
        sym: &Symbol,
        t: f64,
        regime: Regime,
    ) -> Result<Self> {
        let vs = symbol_values(cov, sym)?;
        // null modes never need their weight (which may not exist)
        let active: Vec<f64> = vs
            .iter()
            .zip(&cov.gamma)
            .filter(|(_, &g)| g > 0.0)
            .map(|(&v, _)| v)
            .collect();
        let energy = per_distinct(&active, |v| weight_energy(k, v, t, regime))?;
        let mut it = energy.into_iter();
        let sd = cov
            .gamma
            .iter()
            .map(|&g| {
                if g > 0.0 {
                    (2.0 * g * it.next().unwrap_or(0.0)).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let sd0 = if t > 0.0 {
            (cov.gamma0 * t).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            t,
            d: cov.d,
            modes: cov.modes.clone(),
            sd,
            sd0,
        })
    }

    /// Standard deviation of each of the two coefficients of every mode.
    pub fn std_devs(&self) -> &[f64] {
        &self.sd
    }

    pub fn modes(&self) -> &[Vec<i64>] {
        &self.modes
    }

    pub fn draw(&self, seed: NoiseSeed, replication: u64) -> FieldSnapshot {
        let (x1, x2) = (0..self.modes.len())
            .map(|i| self.draw_mode(i, seed, replication))
            .unzip();
        let x0 = self.draw_zero(seed, replication);
        FieldSnapshot {
            t: self.t,
            d: self.d,
            modes: self.modes.clone(),
            x0,
            x1,
            x2,
        }
    }

    /// `(X_n¹, X_n²)` of mode `modes()[idx]`, identical to the entries of [`Self::draw`].
    pub fn draw_mode(&self, idx: usize, seed: NoiseSeed, replication: u64) -> (f64, f64) {
        let sd = self.sd[idx];
        if sd == 0.0 {
            return (0.0, 0.0);
        }
        let n = &self.modes[idx];
        let a: f64 = StandardNormal.sample(&mut seed.stream(n, 1, replication));
        let b: f64 = StandardNormal.sample(&mut seed.stream(n, 2, replication));
        (sd * a, sd * b)
    }

    pub fn draw_zero(&self, seed: NoiseSeed, replication: u64) -> f64 {
        if self.sd0 == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut seed.stream(&vec![0; self.d], 0, replication));
        self.sd0 * z
    }

    /// Standard deviation of the zero-mode coefficient.
    pub fn zero_std_dev(&self) -> f64 {
        self.sd0
    }
}

/// Exact draw of the field at time `t`: independent Gaussian coefficients
/// with the mode variances.
pub fn sample_snapshot(
    cov: &TorusCovariance,
    k: &Kernel,
    sym: &Symbol,
    t: f64,
    regime: Regime,
    seed: NoiseSeed,
    replication: u64,
) -> Result<FieldSnapshot> {
    Ok(SnapshotSampler::new(cov, k, sym, t, regime)?.draw(seed, replication))
}

/// Coefficient trajectories on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldPath {
    pub grid: TimeGrid,
    pub d: usize,
    pub n_max: usize,
    pub kernel: Kernel,
    pub symbol: Symbol,
    pub regime: Regime,
    pub modes: Vec<Vec<i64>>,
    /// `x0[i]` at `t_i`.
    pub x0: Vec<f64>,
    /// `x1[m][i]` for mode `m` at `t_i`.
    pub x1: Vec<Vec<f64>>,
    pub x2: Vec<Vec<f64>>,
}

impl FieldPath {
    pub fn snapshot(&self, i: usize) -> FieldSnapshot {
        FieldSnapshot {
            t: self.grid.t(i),
            d: self.d,
            modes: self.modes.clone(),
            x0: self.x0[i],
            x1: self.x1.iter().map(|p| p[i]).collect(),
            x2: self.x2.iter().map(|p| p[i]).collect(),
        }
    }

    /// Trajectory of one mode's first coefficient (`None` for the zero mode).
    pub fn mode_trace(&self, n: &[i64]) -> Option<&[f64]> {
        if n.iter().all(|&c| c == 0) {
            return Some(&self.x0);
        }
        let idx = self.modes.iter().position(|m| m == n)?;
        Some(&self.x1[idx])
    }
}

/// Left-point weights `w(t_j)`, `j = 0..len`, for one symbol value, plus the
/// number of burn-in steps (stationary regime only).
fn path_weights(k: &Kernel, v: f64, grid: &TimeGrid, regime: Regime) -> Result<(Vec<f64>, usize)> {
    let h = grid.h();
    let n = grid.len();
    match regime {
        Regime::ZeroInitial => {
            let w = if closed_form_s(k, v, h).is_some() {
                (0..n)
                    .map(|i| closed_form_s(k, v, i as f64 * h).unwrap_or(f64::NAN))
                    .collect()
            } else {
                solve_s(k, &[v], grid, 1e-6)?.s_values.swap_remove(0)
            };
            Ok((w, 0))
        }
        Regime::Stationary => {
            // burn-in until the neglected tail of r² is below 1e-12 of the total
            let total = squared_tail_integral(k, -v, 1e-12)?;
            let r_at = |len: usize| -> Result<Vec<f64>> {
                if closed_form_r(k, -v, h, Convention::Ch4Plus).is_some() {
                    Ok((0..len)
                        .map(|i| {
                            closed_form_r(k, -v, i as f64 * h, Convention::Ch4Plus)
                                .unwrap_or(f64::NAN)
                        })
                        .collect())
                } else {
                    let g = TimeGrid::with_steps(h, len - 1)?;
                    Ok(solve_r(k, &[-v], &g, 1e-6, Convention::Ch4Plus)?
                        .r_values
                        .swap_remove(0))
                }
            };
            let mut len = n.max(64);
            loop {
                let r = r_at(len)?;
                let sq: Vec<f64> = r.iter().map(|x| x * x).collect();
                let head = simpson(&sq, h);
                if total - head <= 1e-12 * total.max(1e-300) || len >= 1 << 22 {
                    return Ok((r, len - n));
                }
                len *= 2;
            }
        }
    }
}

/// Time-coupled sample path on `grid`.
///
/// Mode `n` is `√(2γ_n) Σ_{j<i} w(t_i - t_j) ΔB_j` (left-point product
/// rule, evaluated by FFT convolution); the zero mode is `√γ_0 β_0`.
pub fn simulate_path(
    cov: &TorusCovariance,
    k: &Kernel,
    sym: &Symbol,
    grid: &TimeGrid,
    regime: Regime,
    seed: NoiseSeed,
    replication: u64,
) -> Result<FieldPath> {
    let vs = symbol_values(cov, sym)?;
    let active: Vec<f64> = vs
        .iter()
        .zip(&cov.gamma)
        .filter(|(_, &g)| g > 0.0)
        .map(|(&v, _)| v)
        .collect();
    let mut it = per_distinct(&active, |v| path_weights(k, v, grid, regime))?.into_iter();
    let weights: Vec<(Vec<f64>, usize)> = cov
        .gamma
        .iter()
        .map(|&g| {
            if g > 0.0 {
                it.next().unwrap_or_default()
            } else {
                (vec![0.0; 2], 0)
            }
        })
        .collect();
    let n = grid.len();
    let h = grid.h();
    let sqrt_h = h.sqrt();

    let trace = |n_idx: &[i64], comp: u8, scale: f64, w: &[f64], burn: usize| -> Vec<f64> {
        if scale == 0.0 {
            return vec![0.0; n];
        }
        let mut rng = seed.stream(n_idx, comp, replication);
        // increments ΔB_j on [t_j, t_{j+1}), j = -burn..n-2
        let db: Vec<f64> = (0..burn + n - 1)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sqrt_h * z
            })
            .collect();
        // X(t_i) = Σ_{j<i} w(t_i - t_j) ΔB_j = (w[1..] ⋆ ΔB)[i-1], shifted by burn
        let conv = toeplitz::convolve(&w[1..], &db, burn + n);
        (0..n)
            .map(|i| {
                if burn + i == 0 {
                    0.0
                } else {
                    scale * conv[burn + i - 1]
                }
            })
            .collect()
    };

    let paths: Vec<(Vec<f64>, Vec<f64>)> = cov
        .modes
        .par_iter()
        .zip(&cov.gamma)
        .zip(&weights)
        .map(|((m, &g), (w, burn))| {
            let scale = (2.0 * g).sqrt();
            (trace(m, 1, scale, w, *burn), trace(m, 2, scale, w, *burn))
        })
        .collect();
    let zero = vec![0; cov.d];
    let x0 = if cov.gamma0 > 0.0 {
        let mut rng = seed.stream(&zero, 0, replication);
        let s = cov.gamma0.sqrt() * sqrt_h;
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(n);
        out.push(0.0);
        for _ in 1..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            acc += s * z;
            out.push(acc);
        }
        out
    } else {
        vec![0.0; n]
    };
    let (x1, x2) = paths.into_iter().unzip();
    Ok(FieldPath {
        grid: *grid,
        d: cov.d,
        n_max: cov.n_max,
        kernel: k.clone(),
        symbol: sym.clone(),
        regime,
        modes: cov.modes.clone(),
        x0,
        x1,
        x2,
    })
}
