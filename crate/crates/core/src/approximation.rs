//! Yosida approximation at the level of a single eigenvalue.
//!
//! For an eigenvector of `A` with eigenvalue `-γ`, the Yosida approximant
//! `A_n = nA(n - A)^{-1}` has eigenvalue `-γ_n` with `γ_n = nγ/(n + γ)`, so the
//! approximating resolvents act by `s(t; γ_n)`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::kernel::Kernel;
use crate::quad::linear_fit;
use crate::resolvent::{closed_form_s, solve_s};

/// `γ_n = nγ/(n + γ)`.
pub fn yosida_parameter(gamma: f64, n: f64) -> Result<f64> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(invalid(format!("Yosida index must be positive, got {n}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(invalid(format!(
            "spectral value must be nonnegative, got {gamma}"
        )));
    }
    Ok(n * gamma / (n + gamma))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YosidaSweep {
    pub kernel: Kernel,
    pub gamma: f64,
    pub n_list: Vec<u64>,
    pub grid: TimeGrid,
    pub gamma_n: Vec<f64>,
    /// `max_i |s(t_i; γ_n) - s(t_i; γ)|` per `n`.
    pub sup_distances: Vec<f64>,
    /// Log-log slope of distance against `n` (absent when fewer than two
    /// nonzero distances).
    pub fitted_slope: Option<f64>,
    /// Whether the last distance is below the requested target.
    pub target_met: bool,
    /// The kernel is not flagged completely positive, so the convergence
    /// result does not apply; the sweep is still computed.
    pub hypothesis_violated: bool,
    /// `max |s(t; γ_n)|` over the sweep, including `γ` itself.
    pub max_abs_s: f64,
}

impl YosidaSweep {
    /// Columns `n, gamma_n, sup_distance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,gamma_n,sup_distance\n");
        for ((n, g), d) in self
            .n_list
            .iter()
            .zip(&self.gamma_n)
            .zip(&self.sup_distances)
        {
            let _ = writeln!(out, "{n},{g:.15e},{d:.15e}");
        }
        out
    }
}

/// Distances between `s(·; γ_n)` and `s(·; γ)` on `grid` for every `n`.
///
/// Closed forms are used where the kernel has them, otherwise `solve_s` at
/// tolerance `tol`.
pub fn yosida_convergence_table(
    k: &Kernel,
    gamma: f64,
    n_list: &[u64],
    grid: &TimeGrid,
    tol: f64,
) -> Result<YosidaSweep> {
    k.validate()?;
    if n_list.is_empty() {
        return Err(invalid("n_list must not be empty"));
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(
            "n_list must be strictly increasing positive integers",
        ));
    }
    let gamma_n: Vec<f64> = n_list
        .iter()
        .map(|&n| yosida_parameter(gamma, n as f64))
        .collect::<Result<_>>()?;
    let mut mus = vec![gamma];
    mus.extend_from_slice(&gamma_n);

    let rows: Vec<Vec<f64>> = if closed_form_s(k, gamma, 1.0).is_some() {
        mus.par_iter()
            .map(|&mu| {
                grid.nodes()
                    .map(|t| {
                        closed_form_s(k, mu, t).ok_or_else(|| invalid("closed form unavailable"))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?
    } else {
        solve_s(k, &mus, grid, tol)?.s_values
    };

    let base = &rows[0];
    let sup_distances: Vec<f64> = rows[1..]
        .iter()
        .map(|row| {
            row.iter()
                .zip(base)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = n_list
        .iter()
        .zip(&sup_distances)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&n, &d)| ((n as f64).ln(), d.ln()))
        .unzip();
    let fitted_slope = linear_fit(&x, &y).map(|f| f.0);
    let target_met = sup_distances.last().is_some_and(|&d| d <= tol);
    let max_abs_s = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(YosidaSweep {
        kernel: k.clone(),
        gamma,
        n_list: n_list.to_vec(),
        grid: *grid,
        gamma_n,
        sup_distances,
        fitted_slope,
        target_met,
        hypothesis_violated: k.classify().completely_positive != Some(true),
        max_abs_s,
    })
}
