//! Hölder exponent of a sampled path from its dyadic structure function.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VflError};
use crate::field::FieldPath;
use crate::quad::linear_fit;

/// Fewest grid steps accepted by [`holder_estimate`].
pub const MIN_STEPS: usize = 1 << 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub exponent: f64,
    pub std_error: f64,
    /// `(lag, mean squared increment)` per dyadic lag.
    pub structure: Vec<(f64, f64)>,
    pub steps: usize,
}

impl HolderEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serialises")
    }
}

/// Which scalar trace of a [`FieldPath`] to analyse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderTarget {
    ZeroMode,
    /// First (`component = 1`) or second (`2`) coefficient of mode `n`.
    Mode {
        n: Vec<i64>,
        component: u8,
    },
    /// Spatial L² norm of the field at each time.
    L2,
}

/// Slope/2 of `log E|X(t+Δ) - X(t)|²` against `log Δ` over `Δ = 2^j h`.
///
/// `trace[i]` is the value at `i·h`.
pub fn holder_estimate(trace: &[f64], h: f64) -> Result<HolderEstimate> {
    if !(h > 0.0) {
        return Err(invalid("time step must be positive"));
    }
    let steps = trace.len().saturating_sub(1);
    if steps < MIN_STEPS {
        return Err(VflError::InsufficientData(format!(
            "{steps} steps, need at least {MIN_STEPS}"
        )));
    }
    let levels = ((steps / 16) as f64).log2().floor().min(8.0) as u32;
    let mut structure = Vec::new();
    for j in 0..=levels {
        let lag = 1usize << j;
        let n = trace.len() - lag;
        let m = trace
            .windows(lag + 1)
            .map(|w| (w[lag] - w[0]).powi(2))
            .sum::<f64>()
            / n as f64;
        structure.push((lag as f64 * h, m));
    }
    if structure.iter().any(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(VflError::InsufficientData(
            "structure function vanishes, path is degenerate".into(),
        ));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = structure.iter().map(|p| (p.0.ln(), p.1.ln())).unzip();
    let (slope, _, se) =
        linear_fit(&x, &y).ok_or_else(|| VflError::InsufficientData("too few lags".into()))?;
    Ok(HolderEstimate {
        exponent: slope / 2.0,
        std_error: se / 2.0,
        structure,
        steps,
    })
}

pub fn holder_estimate_path(path: &FieldPath, target: &HolderTarget) -> Result<HolderEstimate> {
    let h = path.grid.h();
    match target {
        HolderTarget::ZeroMode => holder_estimate(&path.x0, h),
        HolderTarget::Mode { n, component } => {
            if n.len() != path.d {
                return Err(VflError::DimensionMismatch {
                    expected: path.d,
                    got: n.len(),
                });
            }
            if n.iter().all(|&c| c == 0) {
                return holder_estimate(&path.x0, h);
            }
            let idx = path.modes.iter().position(|m| m == n).ok_or_else(|| {
                invalid(format!(
                    "mode {n:?} is not a representative of the truncated path"
                ))
            })?;
            match component {
                1 => holder_estimate(&path.x1[idx], h),
                2 => holder_estimate(&path.x2[idx], h),
                c => Err(invalid(format!("component must be 1 or 2, got {c}"))),
            }
        }
        HolderTarget::L2 => {
            let norms: Vec<f64> = (0..path.grid.len())
                .map(|i| {
                    let sq = path.x0[i].powi(2)
                        + 0.5
                            * path
                                .x1
                                .iter()
                                .chain(&path.x2)
                                .map(|p| p[i] * p[i])
                                .sum::<f64>();
                    sq.sqrt()
                })
                .collect();
            holder_estimate(&norms, h)
        }
    }
}
