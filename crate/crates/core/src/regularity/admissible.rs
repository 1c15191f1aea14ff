//! Admissibility constant `C_b = lim |n|² ∫_0^∞ r(s, -|n|²)² ds` and the
//! increment bounds on the kernel resolvent used for Hölder continuity in time.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VflError};
use crate::grid::TimeGrid;
use crate::kernel::Kernel;
use crate::quad::{integrate_with_breaks, linear_fit};
use crate::resolvent::{closed_form_r, solve_r, squared_tail_integral, Convention};

use super::{inputs_hash, Verdict, DIVERGENCE_MARGIN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleReport {
    pub inputs_hash: String,
    pub kernel: String,
    /// `(|n|², |n|² ∫ r²)`.
    pub table: Vec<(f64, f64)>,
    /// Polynomial extrapolants in `1/|n|²` through the last 2, 3, ... entries.
    pub extrapolants: Vec<f64>,
    pub c_b: f64,
    pub error_estimate: f64,
}

impl AdmissibleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Columns `n2, value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n2,value\n");
        for (n2, v) in &self.table {
            out.push_str(&format!("{n2},{v:.15e}\n"));
        }
        out
    }
}

/// Neville extrapolation to `x = 0` through `(x_i, y_i)`.
fn neville_at_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    p[0]
}

/// Table of `|n|² ∫_0^∞ r(s, -|n|²)² ds` and its limit by extrapolation in `1/|n|²`.
///
/// `LimitNotDetected` when the table does not behave like a Cauchy sequence
/// (increments not shrinking, or extrapolants disagreeing).
pub fn admissible_constant(k: &Kernel, n2_list: &[f64], tol: f64) -> Result<AdmissibleReport> {
    k.validate()?;
    if n2_list.len() < 3 {
        return Err(invalid(
            "admissible constant needs at least three |n|^2 values",
        ));
    }
    if n2_list[0] <= 0.0 || n2_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(
            "|n|^2 values must be positive and strictly increasing",
        ));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let table: Vec<(f64, f64)> = n2_list
        .iter()
        .map(|&n2| Ok((n2, n2 * squared_tail_integral(k, -n2, tol * 1e-2 / n2)?)))
        .collect::<Result<_>>()?;
    let x: Vec<f64> = table.iter().map(|p| 1.0 / p.0).collect();
    let y: Vec<f64> = table.iter().map(|p| p.1).collect();
    let n = x.len();
    let depth = n.min(5);
    let extrapolants: Vec<f64> = (2..=depth)
        .map(|m| neville_at_zero(&x[n - m..], &y[n - m..]))
        .collect();
    let c_b = *extrapolants.last().unwrap();
    let error_estimate =
        (extrapolants[extrapolants.len() - 1] - extrapolants[extrapolants.len() - 2]).abs();
    let incs: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let shrinking = incs[incs.len() - 1] <= incs[incs.len() - 2] * (1.0 + 1e-9) + 1e-15;
    let scale = c_b.abs().max(1e-12);
    if !c_b.is_finite() || !shrinking || error_estimate > 1e-2 * scale.max(1.0) {
        return Err(VflError::LimitNotDetected(format!(
            "table {:?} does not settle (last extrapolants {:?})",
            y.iter().rev().take(3).collect::<Vec<_>>(),
            extrapolants
        )));
    }
    Ok(AdmissibleReport {
        inputs_hash: inputs_hash(&serde_json::json!({
            "criterion": "admissible", "kernel": k, "n2_list": n2_list, "tol": tol,
        })),
        kernel: k.label(),
        table,
        extrapolants,
        c_b,
        error_estimate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H2Row {
    pub n2: f64,
    pub s: f64,
    pub t: f64,
    /// `∫_s^t r(t-τ)² dτ`.
    pub lhs_i: f64,
    /// `∫_{-∞}^s [r(t-τ) - r(s-τ)]² dτ`.
    pub lhs_ii: f64,
    /// `|n|^{2(δ-1)} |t-s|^δ`.
    pub scale: f64,
    pub ratio_i: f64,
    pub ratio_ii: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H2Report {
    pub inputs_hash: String,
    pub kernel: String,
    pub delta: f64,
    pub rows: Vec<H2Row>,
    /// Largest ratio over the sample pairs.
    pub c_delta: Option<f64>,
    /// Smallest exponent of the left-hand sides over `|n|²`, fitted on lags
    /// `2^{-6}..2^{-9}` times the smallest pair lag.
    pub fitted_exponent_i: Option<f64>,
    pub fitted_exponent_ii: Option<f64>,
    pub verdict: Verdict,
    pub witness: Option<String>,
    /// Horizon at which `(-∞, s]` was truncated, per `|n|²`.
    pub horizons: Vec<(f64, f64)>,
}

impl H2Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// `r(·, -n²)` in the `r = b + μ(b⋆r)` convention as a callable.
enum RFn {
    Closed(Kernel, f64),
    Grid { h: f64, values: Vec<f64> },
}

impl RFn {
    fn build(k: &Kernel, n2: f64, min_lag: f64) -> Result<(Self, f64)> {
        let mu = -n2;
        if closed_form_r(k, mu, 1.0, Convention::Ch4Plus).is_some() {
            let r = RFn::Closed(k.clone(), mu);
            let horizon = r.horizon();
            return Ok((r, horizon));
        }
        // numeric: grid fine enough for the smallest lag, horizon doubled until r² is negligible
        let h = (min_lag * (-(PROBE_TO as f64)).exp2() / 4.0).min(0.02 / n2.sqrt().max(1.0));
        let mut horizon: f64 = 8.0;
        loop {
            let steps = (horizon.min(k.domain_end()) / h).floor().max(2.0) as usize;
            let grid = TimeGrid::with_steps(h, steps)?;
            let r = solve_r(k, &[mu], &grid, 1e-6, Convention::Ch4Plus)?;
            let values = r.r_values[0].clone();
            let peak = values.iter().fold(0.0f64, |m, v| m.max(v * v));
            let tail = values[values.len() * 3 / 4..]
                .iter()
                .fold(0.0f64, |m, v| m.max(v * v));
            if tail <= 1e-12 * peak || horizon >= k.domain_end() {
                let end = grid.t_end();
                return Ok((RFn::Grid { h, values }, end));
            }
            horizon *= 2.0;
            if horizon > 1e6 {
                return Err(VflError::NonIntegrable { rate: 0.0 });
            }
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match self {
            RFn::Closed(k, mu) => closed_form_r(k, *mu, t, Convention::Ch4Plus).unwrap_or(f64::NAN),
            RFn::Grid { h, values } => {
                let x = t / h;
                let i = x.floor() as usize;
                if i + 1 >= values.len() {
                    return 0.0;
                }
                let w = x - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    /// Smallest doubling horizon beyond which `r²` stays below `1e-12` of its peak.
    fn horizon(&self) -> f64 {
        let r = |t: f64| self.eval(t);
        let peak = (0..=64)
            .map(|i| r(i as f64 / 16.0).powi(2))
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut h = 1.0;
        while h < 1e6
            && [1.0, 1.25, 1.5, 1.75, 2.0]
                .iter()
                .any(|&f| r(f * h).powi(2) > 1e-12 * peak)
        {
            h *= 2.0;
        }
        2.0 * h
    }
}

/// Probe lags `min_lag·2^{-j}`, `j = PROBE_FROM..=PROBE_TO`.
const PROBE_FROM: i32 = 6;
const PROBE_TO: i32 = 9;

fn integral(f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let breaks: Vec<f64> = (0..=32).map(|i| a + (b - a) * i as f64 / 32.0).collect();
    integrate_with_breaks(f, &breaks, 1e-18, 1e-11, 4000).value
}

/// Evaluates both increment bounds on the pairs `(s, t)` for every `|n|²`.
pub fn h2_verify(
    k: &Kernel,
    delta: f64,
    n2_list: &[f64],
    pairs: &[(f64, f64)],
) -> Result<H2Report> {
    k.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if n2_list.is_empty() || pairs.is_empty() {
        return Err(invalid("h2_verify needs |n|^2 values and (s, t) pairs"));
    }
    if let Some(p) = pairs
        .iter()
        .find(|p| !(p.1 > p.0) || !p.0.is_finite() || !p.1.is_finite())
    {
        return Err(invalid(format!("pairs need s < t, got {p:?}")));
    }
    if n2_list.iter().any(|&n2| !(n2 > 0.0)) {
        return Err(invalid("|n|^2 values must be positive"));
    }
    let min_lag = pairs
        .iter()
        .map(|p| p.1 - p.0)
        .fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    let mut horizons = Vec::new();
    let mut exps_i = Vec::new();
    let mut exps_ii = Vec::new();
    for &n2 in n2_list {
        let (r, horizon) = RFn::build(k, n2, min_lag)?;
        horizons.push((n2, horizon));
        for &(s, t) in pairs {
            let lag = t - s;
            let lhs_i = integral(|u| r.eval(u).powi(2), 0.0, lag);
            let lhs_ii = integral(|u| (r.eval(u + lag) - r.eval(u)).powi(2), 0.0, horizon);
            let scale = n2.powf(delta - 1.0) * lag.powf(delta);
            let row = H2Row {
                n2,
                s,
                t,
                lhs_i,
                lhs_ii,
                scale,
                ratio_i: lhs_i / scale,
                ratio_ii: lhs_ii / scale,
            };
            rows.push(row);
        }
        // small-lag exponents from a dyadic probe below the smallest pair lag
        let probe: Vec<(f64, f64, f64)> = (PROBE_FROM..=PROBE_TO)
            .map(|j| {
                let lag = min_lag * (-(j as f64)).exp2();
                let a = integral(|u| r.eval(u).powi(2), 0.0, lag);
                let b = integral(|u| (r.eval(u + lag) - r.eval(u)).powi(2), 0.0, horizon);
                (lag, a, b)
            })
            .collect();
        let fit = |sel: fn(&(f64, f64, f64)) -> f64| {
            let (x, y): (Vec<f64>, Vec<f64>) = probe
                .iter()
                .filter(|p| sel(p) > 0.0)
                .map(|p| (p.0.ln(), sel(p).ln()))
                .unzip();
            linear_fit(&x, &y).map(|f| f.0)
        };
        if let Some(e) = fit(|p| p.1) {
            exps_i.push(e);
        }
        if let Some(e) = fit(|p| p.2) {
            exps_ii.push(e);
        }
    }
    let min = |v: &[f64]| v.iter().cloned().reduce(f64::min);
    let (fitted_exponent_i, fitted_exponent_ii) = (min(&exps_i), min(&exps_ii));
    let c_delta = rows
        .iter()
        .map(|r| r.ratio_i.max(r.ratio_ii))
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
        .filter(|c| c.is_finite());
    let threshold = delta - DIVERGENCE_MARGIN;
    let (verdict, witness) = match (fitted_exponent_i, fitted_exponent_ii) {
        (Some(a), _) if a < threshold => (
            Verdict::Fails,
            Some(format!("LHS(i) ~ |t-s|^{a:.4}, below delta")),
        ),
        (_, Some(b)) if b < threshold => (
            Verdict::Fails,
            Some(format!("LHS(ii) ~ |t-s|^{b:.4}, below delta")),
        ),
        (Some(_), Some(_)) => (Verdict::Holds, None),
        _ => (
            Verdict::Inconclusive,
            Some("fewer than two distinct lags".into()),
        ),
    };
    Ok(H2Report {
        inputs_hash: inputs_hash(&serde_json::json!({
            "criterion": "h2", "kernel": k, "delta": delta, "n2_list": n2_list, "pairs": pairs,
        })),
        kernel: k.label(),
        delta,
        rows,
        c_delta: if verdict == Verdict::Fails {
            None
        } else {
            c_delta
        },
        fitted_exponent_i,
        fitted_exponent_ii,
        verdict,
        witness,
        horizons,
    })
}
