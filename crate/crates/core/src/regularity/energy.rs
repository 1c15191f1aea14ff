//! Energies of the scalar resolvent: `g_t(v) = ∫_0^t s(σ; v)² dσ` and
//! `g_∞(v) = ∫_0^∞ s(σ; v)² dσ`.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{invalid, Result, VflError};
use crate::fractional::mittag_leffler;
use crate::grid::TimeGrid;
use crate::kernel::Kernel;
use crate::quad::{integrate, integrate_with_breaks, simpson};
use crate::resolvent::{closed_form_s, solve_s, solve_s_raw, tail_fit, Method};
use crate::special::rgamma;

/// Largest symbol value for which oscillatory quadrature of `s²` is attempted.
const QUAD_V_MAX: f64 = 1e7;
/// Largest symbol value for tabulated kernels (numeric solves on `[0, t]`).
const TAB_V_MAX: f64 = 1e4;
/// Power-kernel energies are tabulated in `u = v^{1/α} σ` on `[2^POW_LO, 2^POW_HI]`.
const POW_LO: i32 = -20;
const POW_HI: i32 = 60;

fn beyond(v: f64) -> VflError {
    VflError::Unsupported(format!(
        "resolvent energy at v = {v:e} is outside the quadrature range"
    ))
}

/// `g_t(v) = ∫_0^t s(σ; v)² dσ`.
pub fn finite_energy(k: &Kernel, v: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    if !(v >= 0.0) || !v.is_finite() {
        return Err(invalid(format!(
            "symbol value must be finite and nonnegative, got {v}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if v == 0.0 {
        return Ok(t);
    }
    match k {
        Kernel::Constant => Ok(-(-2.0 * v * t).exp_m1() / (2.0 * v)),
        Kernel::Linear => {
            let q = v.sqrt();
            Ok(0.5 * t + (2.0 * q * t).sin() / (4.0 * q))
        }
        Kernel::Exponential => {
            // s = A + B e^{-εσ}
            let (a, b, e) = (1.0 / (1.0 + v), v / (1.0 + v), 1.0 + v);
            Ok(a * a * t
                + 2.0 * a * b * -(-e * t).exp_m1() / e
                + b * b * -(-2.0 * e * t).exp_m1() / (2.0 * e))
        }
        Kernel::LinExp => {
            if v > QUAD_V_MAX {
                return Err(beyond(v));
            }
            let period = PI / v.sqrt();
            let pieces = ((t / period).ceil() as usize).clamp(1, 4000);
            let breaks: Vec<f64> = (0..=pieces).map(|i| t * i as f64 / pieces as f64).collect();
            let q = integrate_with_breaks(
                |x| closed_form_s(k, v, x).map_or(f64::NAN, |s| s * s),
                &breaks,
                0.0,
                1e-11,
                20 * pieces + 200,
            );
            finite_or_stall(q.value, "lin_exp energy")
        }
        Kernel::Power { alpha } => {
            let u = v.powf(1.0 / alpha) * t;
            if u > (POW_HI as f64).exp2() {
                return Err(beyond(v));
            }
            Ok(v.powf(-1.0 / alpha) * power_table(*alpha)?.cumulative(u))
        }
        Kernel::Tabulated(_) => {
            if v > TAB_V_MAX {
                return Err(beyond(v));
            }
            let steps = (256.0 * t * (1.0 + v.sqrt())).ceil().clamp(512.0, 65536.0) as usize;
            let g = TimeGrid::with_steps(t / steps as f64, steps)?;
            let s = solve_s(k, &[v], &g, 1e-6)?;
            let sq: Vec<f64> = s.s_values[0].iter().map(|x| x * x).collect();
            Ok(simpson(&sq, g.h()))
        }
    }
}

fn finite_or_stall(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(VflError::QuadratureStall(what.into()))
    }
}

/// `g_∞(v) = ∫_0^∞ s(σ; v)² dσ`; `TailNonDecaying` (witness `v`) when `s²`
/// is not integrable.
pub fn infinite_energy(k: &Kernel, v: f64) -> Result<f64> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(invalid(format!(
            "symbol value must be finite and nonnegative, got {v}"
        )));
    }
    let non_decaying = || VflError::TailNonDecaying { witness: v };
    if v == 0.0 {
        return Err(non_decaying());
    }
    match k {
        Kernel::Constant => Ok(0.5 / v),
        // s tends to 1/(1+v) or oscillates without damping
        Kernel::Linear | Kernel::Exponential | Kernel::LinExp => Err(non_decaying()),
        Kernel::Power { alpha } => {
            if *alpha <= 0.5 {
                // s ~ t^{-α}/Γ(1-α) is not square integrable
                return Err(non_decaying());
            }
            Ok(v.powf(-1.0 / alpha) * power_table(*alpha)?.total())
        }
        Kernel::Tabulated(_) => infinite_energy_numeric(k, v),
    }
}

/// Exponent `κ` with `g_t(v) ≍ v^{-κ}` as `v → ∞` (a logarithm is ignored).
pub fn finite_energy_decay(k: &Kernel) -> Option<f64> {
    match k {
        Kernel::Constant | Kernel::Exponential => Some(1.0),
        Kernel::Linear | Kernel::LinExp => Some(0.0),
        Kernel::Power { alpha } => Some(if *alpha <= 0.5 { 2.0 } else { 1.0 / alpha }),
        Kernel::Tabulated(_) => {
            let a0 = k.value_at_zero();
            (a0.is_finite() && a0 > 0.0).then_some(1.0)
        }
    }
}

/// Exact scaling `g_∞(v) = C v^{-κ}` where the kernel has one.
pub fn infinite_energy_decay(k: &Kernel) -> Option<f64> {
    match k {
        Kernel::Constant => Some(1.0),
        Kernel::Power { alpha } if *alpha > 0.5 => Some(1.0 / alpha),
        _ => None,
    }
}

/// Cumulative `G(U) = ∫_0^U E_α(-u^α)² du` at the octave nodes `2^j`.
struct PowerTable {
    alpha: f64,
    cum: Vec<f64>,
    total: f64,
}

impl PowerTable {
    fn build(alpha: f64) -> Result<Self> {
        let err = Mutex::new(None);
        let f = |u: f64| match mittag_leffler(alpha, -u.powf(alpha)) {
            Ok(e) => e * e,
            Err(e) => {
                *err.lock().unwrap() = Some(e);
                0.0
            }
        };
        let mut cum = Vec::with_capacity((POW_HI - POW_LO + 1) as usize);
        let mut acc = integrate(f, 0.0, (POW_LO as f64).exp2(), 0.0, 1e-12).value;
        cum.push(acc);
        for j in POW_LO..POW_HI {
            let (a, b) = ((j as f64).exp2(), ((j + 1) as f64).exp2());
            acc += integrate(f, a, b, 0.0, 1e-11).value;
            cum.push(acc);
        }
        if let Some(e) = err.into_inner().unwrap() {
            return Err(e);
        }
        let total = if alpha > 0.5 {
            // s ≈ a1 u^{-α} + a2 u^{-2α} beyond the last node
            let u = (POW_HI as f64).exp2();
            let (a1, a2) = (rgamma(1.0 - alpha), -rgamma(1.0 - 2.0 * alpha));
            let tail = a1 * a1 * u.powf(1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0)
                + if 3.0 * alpha > 1.0 {
                    2.0 * a1 * a2 * u.powf(1.0 - 3.0 * alpha) / (3.0 * alpha - 1.0)
                } else {
                    0.0
                };
            acc + tail
        } else {
            f64::INFINITY
        };
        Ok(Self { alpha, cum, total })
    }

    fn s2(&self, u: f64) -> f64 {
        mittag_leffler(self.alpha, -u.powf(self.alpha)).map_or(f64::NAN, |e| e * e)
    }

    fn cumulative(&self, u: f64) -> f64 {
        let lo = (POW_LO as f64).exp2();
        if u <= lo {
            return integrate(|x| self.s2(x), 0.0, u, 0.0, 1e-12).value;
        }
        let j = (u.log2().floor() as i32).clamp(POW_LO, POW_HI);
        let a = (j as f64).exp2();
        self.cum[(j - POW_LO) as usize] + integrate(|x| self.s2(x), a, u, 0.0, 1e-11).value
    }

    fn total(&self) -> f64 {
        self.total
    }
}

fn power_table(alpha: f64) -> Result<Arc<PowerTable>> {
    static TABLES: OnceLock<Mutex<HashMap<u64, Arc<PowerTable>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(Default::default);
    if let Some(t) = tables.lock().unwrap().get(&alpha.to_bits()) {
        return Ok(t.clone());
    }
    let t = Arc::new(PowerTable::build(alpha)?);
    tables.lock().unwrap().insert(alpha.to_bits(), t.clone());
    Ok(t)
}

/// `∫_0^∞ s²` for kernels without closed forms, by horizon doubling and an
/// exponential fit of the envelope of `s²` on the last half of each horizon.
fn infinite_energy_numeric(k: &Kernel, v: f64) -> Result<f64> {
    let a0 = k.eval(0.0).map_err(|_| VflError::SingularAtZero)?;
    let stiff = 1f64.max(v * a0.abs()).max(v.sqrt());
    let h = 0.02 / stiff;
    let cap = k.domain_end();
    let mut horizon = (8.0 / (v * a0.abs()).clamp(1e-3, 1.0)).min(cap);
    let mut flat = 0;
    for _ in 0..24 {
        let steps = ((horizon / h).floor() as usize).max(16);
        let grid = TimeGrid::with_steps(horizon / steps as f64, steps)?;
        let s = solve_s_raw(k, v, &grid, Method::Auto)?;
        let sq: Vec<f64> = s.iter().map(|x| x * x).collect();
        let body = simpson(&sq, grid.h());
        let (rate, envelope) = tail_fit(&sq, grid.h());
        if rate < 0.0 {
            flat = 0;
            let tail = envelope / -rate;
            if tail < 1e-10 * body.max(1e-300) {
                return Ok(body + tail);
            }
        } else {
            flat += 1;
            if flat >= 2 {
                return Err(VflError::TailNonDecaying { witness: v });
            }
        }
        if horizon >= cap {
            return if rate < 0.0 {
                Ok(body + envelope / -rate)
            } else {
                Err(VflError::TailNonDecaying { witness: v })
            };
        }
        horizon = (2.0 * horizon).min(cap);
    }
    Err(VflError::QuadratureStall(
        "infinite-horizon energy did not settle".into(),
    ))
}

/// Log-log interpolant of `g_∞` on an octave grid, extended by the end slopes.
pub(crate) struct EnergyInterpolant {
    log_v: Vec<f64>,
    log_g: Vec<f64>,
}

impl EnergyInterpolant {
    /// `g_∞` sampled at `v = 2^lo ..= 2^hi`.
    pub(crate) fn build(k: &Kernel, lo: i32, hi: i32) -> Result<Self> {
        Self::sample(lo, hi, |v| infinite_energy(k, v))
    }

    /// `g_t` sampled at `v = 2^lo ..= 2^hi`.
    pub(crate) fn build_finite(k: &Kernel, t: f64, lo: i32, hi: i32) -> Result<Self> {
        Self::sample(lo, hi, |v| finite_energy(k, v, t))
    }

    fn sample(lo: i32, hi: i32, g: impl Fn(f64) -> Result<f64> + Sync) -> Result<Self> {
        use rayon::prelude::*;
        let log_v: Vec<f64> = (lo..=hi).map(|j| j as f64 * LN_2).collect();
        let log_g = (lo..=hi)
            .into_par_iter()
            .map(|j| g((j as f64).exp2()).map(f64::ln))
            .collect::<Result<_>>()?;
        Ok(Self { log_v, log_g })
    }

    pub(crate) fn eval(&self, v: f64) -> f64 {
        let x = v.ln();
        let n = self.log_v.len();
        let seg = |i: usize| {
            let w = (x - self.log_v[i]) / (self.log_v[i + 1] - self.log_v[i]);
            (self.log_g[i] * (1.0 - w) + self.log_g[i + 1] * w).exp()
        };
        if x <= self.log_v[0] {
            return seg(0);
        }
        if x >= self.log_v[n - 1] {
            return seg(n - 2);
        }
        let i = ((x - self.log_v[0]) / (self.log_v[1] - self.log_v[0])).floor() as usize;
        seg(i.min(n - 2))
    }
}
