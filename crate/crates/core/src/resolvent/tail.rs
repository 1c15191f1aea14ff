//! `∫_0^∞ r(t,μ)² dt` in the `r = b + μ (b ⋆ r)` convention.

use crate::error::{Result, VflError};
use crate::grid::TimeGrid;
use crate::kernel::Kernel;
use crate::quad::{linear_fit, simpson};

use super::{solve_r, Convention};

/// Squared tail integral of `r(·,μ)`, typically for `μ < 0`.
///
/// Catalog kernels use their closed forms; tabulated kernels are solved
/// numerically with a doubling horizon.
pub fn squared_tail_integral(k: &Kernel, mu: f64, tol: f64) -> Result<f64> {
    let growth = || VflError::NonIntegrable { rate: 0.0 };
    match k {
        Kernel::Constant => {
            if mu < 0.0 {
                Ok(-0.5 / mu)
            } else {
                Err(VflError::NonIntegrable { rate: 2.0 * mu })
            }
        }
        Kernel::Exponential => {
            if mu < 1.0 {
                Ok(0.5 / (1.0 - mu))
            } else {
                Err(VflError::NonIntegrable { rate: 2.0 * (mu - 1.0) })
            }
        }
        // e^{-t} sinh(√μ t)/√μ: ∫ = 1/(4(1-μ)) for μ < 1
        Kernel::LinExp => {
            if mu < 1.0 {
                Ok(0.25 / (1.0 - mu))
            } else {
                Err(VflError::NonIntegrable { rate: 2.0 * (mu.sqrt() - 1.0) })
            }
        }
        Kernel::Linear => Err(growth()),
        Kernel::Power { .. } => Err(VflError::Unsupported(
            "squared tail integral of the power kernel resolvent decays algebraically; not supported".into(),
        )),
        Kernel::Tabulated(_) => squared_tail_integral_numeric(k, mu, tol),
    }
}

/// Numeric squared tail integral with horizon doubling.
///
/// On each horizon the log of `r²` over the last half is fitted by a line
/// through windowed maxima; the fitted exponential envelope bounds the tail.
pub fn squared_tail_integral_numeric(k: &Kernel, mu: f64, tol: f64) -> Result<f64> {
    let b0 = match k.eval(0.0) {
        Ok(v) => v.abs(),
        Err(_) => return Err(VflError::SingularAtZero),
    };
    let rho = 1f64.max(mu.abs().sqrt()).max(mu.abs() * b0);
    let h = 0.02 / rho;
    let cap = k.domain_end();
    let mut horizon = (8.0 / rho).min(cap);
    let mut non_decaying = 0;
    for _ in 0..16 {
        let grid = TimeGrid::new(horizon, h)?;
        // the grid may overshoot by less than a step
        let grid = if grid.t_end() > cap {
            TimeGrid::with_steps(h, grid.len() - 2)?
        } else {
            grid
        };
        let solve_tol = (tol * 1e-2).max(1e-9);
        let r = match solve_r(k, &[mu], &grid, solve_tol, Convention::Ch4Plus) {
            Ok(r) => r,
            Err(VflError::ToleranceNotMet { .. }) => {
                solve_r(k, &[mu], &grid, 1e-5, Convention::Ch4Plus)?
            }
            Err(e) => return Err(e),
        };
        let sq: Vec<f64> = r.r_values[0].iter().map(|v| v * v).collect();
        let body = simpson(&sq, grid.h());
        let (rate, envelope) = tail_fit(&sq, grid.h());
        if !(rate < 0.0) {
            non_decaying += 1;
            if non_decaying >= 2 {
                return Err(VflError::NonIntegrable { rate });
            }
        } else {
            non_decaying = 0;
            let tail = envelope / -rate;
            if tail < tol {
                return Ok(body + tail);
            }
        }
        if horizon >= cap {
            return if rate < 0.0 {
                Ok(body + envelope / -rate)
            } else {
                Err(VflError::NonIntegrable { rate })
            };
        }
        horizon = (2.0 * horizon).min(cap);
    }
    Err(VflError::QuadratureStall(
        "squared tail integral horizon limit reached".into(),
    ))
}

/// Decay rate and envelope value at the horizon of `log r²` over the last half.
pub(crate) fn tail_fit(sq: &[f64], h: f64) -> (f64, f64) {
    let n = sq.len();
    let start = n / 2;
    let windows = 16.min(n - start).max(1);
    let width = (n - start) / windows;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for w in 0..windows {
        let lo = start + w * width;
        let hi = if w + 1 == windows { n } else { lo + width };
        let m = sq[lo..hi].iter().cloned().fold(0.0, f64::max);
        if m > 0.0 {
            x.push(0.5 * (lo + hi) as f64 * h);
            y.push(m.ln());
        }
    }
    if x.len() < 2 {
        // identically zero tail
        return (-1.0, 0.0);
    }
    match linear_fit(&x, &y) {
        Some((slope, icpt, _)) => (slope, (icpt + slope * (n - 1) as f64 * h).exp()),
        None => (0.0, f64::INFINITY),
    }
}
