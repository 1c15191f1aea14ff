//! Covariance specifications: torus Fourier coefficients or spectral densities on ℝᵈ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VflError};

/// One explicit torus coefficient `γ_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCoefficient {
    pub n: Vec<i64>,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpectralSpec {
    /// `γ_n = (1 + |n|²)^{-q}` on `T^d`.
    TorusDecay { d: usize, q: f64 },
    /// Explicit coefficients on representatives; absent modes are zero.
    TorusExplicit {
        d: usize,
        coefficients: Vec<ModeCoefficient>,
    },
    /// Density `|λ|^{β-d}` on `ℝᵈ`, `β ∈ (0, d)`.
    RadialPower { d: usize, beta: f64 },
    /// Gaussian-shaped density with total mass `mass`.
    FiniteMass { d: usize, mass: f64 },
}

impl SpectralSpec {
    pub fn radial_power(d: usize, beta: f64) -> Result<Self> {
        let s = SpectralSpec::RadialPower { d, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        match self {
            SpectralSpec::TorusDecay { d, .. }
            | SpectralSpec::TorusExplicit { d, .. }
            | SpectralSpec::RadialPower { d, .. }
            | SpectralSpec::FiniteMass { d, .. } => *d,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(
            self,
            SpectralSpec::TorusDecay { .. } | SpectralSpec::TorusExplicit { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(invalid("spectral dimension must be >= 1"));
        }
        match self {
            SpectralSpec::TorusDecay { q, .. } => {
                if !q.is_finite() {
                    return Err(invalid("decay exponent q must be finite"));
                }
            }
            SpectralSpec::TorusExplicit { coefficients, .. } => {
                for c in coefficients {
                    if c.n.len() != d {
                        return Err(VflError::DimensionMismatch {
                            expected: d,
                            got: c.n.len(),
                        });
                    }
                    if !c.gamma.is_finite() {
                        return Err(invalid("torus coefficients must be finite"));
                    }
                }
            }
            SpectralSpec::RadialPower { beta, .. } => {
                if !(*beta > 0.0 && *beta < d as f64) {
                    return Err(invalid(format!(
                        "radial power needs beta in (0, {d}), got {beta}"
                    )));
                }
            }
            SpectralSpec::FiniteMass { mass, .. } => {
                if !(*mass >= 0.0 && mass.is_finite()) {
                    return Err(invalid("finite mass must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }

    /// Density of the spectral measure on `ℝᵈ` at radius `ρ`.
    pub fn radial_density(&self, rho: f64) -> Result<f64> {
        match self {
            SpectralSpec::RadialPower { d, beta } => Ok(rho.powf(beta - *d as f64)),
            SpectralSpec::FiniteMass { d, mass } => {
                Ok(mass * (2.0 * PI).powf(-0.5 * *d as f64) * (-0.5 * rho * rho).exp())
            }
            _ => Err(VflError::Unsupported(
                "torus specs have no density on R^d".into(),
            )),
        }
    }

    /// Torus coefficient at lattice point `n`, symmetric in `n ↦ -n`.
    pub fn torus_gamma(&self, n: &[i64]) -> Result<f64> {
        match self {
            SpectralSpec::TorusDecay { d, q } => {
                if n.len() != *d {
                    return Err(VflError::DimensionMismatch {
                        expected: *d,
                        got: n.len(),
                    });
                }
                let n2: f64 = n.iter().map(|&k| (k * k) as f64).sum();
                Ok((1.0 + n2).powf(-q))
            }
            SpectralSpec::TorusExplicit { d, coefficients } => {
                if n.len() != *d {
                    return Err(VflError::DimensionMismatch {
                        expected: *d,
                        got: n.len(),
                    });
                }
                let neg: Vec<i64> = n.iter().map(|k| -k).collect();
                Ok(coefficients
                    .iter()
                    .find(|c| c.n == n || c.n == neg)
                    .map_or(0.0, |c| c.gamma))
            }
            _ => Err(VflError::Unsupported("not a torus spec".into())),
        }
    }

    /// Smallest integer `r >= 0` for which `Σ γ_n / (1 + |n|^r)` is judged finite.
    ///
    /// Decay laws are decided exactly (`r > d - 2q`); explicit tables by fitting
    /// the growth of shell maxima.
    pub fn slowly_increasing_order(&self) -> Result<Option<u32>> {
        match self {
            SpectralSpec::TorusDecay { d, q } => {
                let need = *d as f64 - 2.0 * q;
                Ok(Some(if need < 0.0 {
                    0
                } else {
                    need.floor() as u32 + 1
                }))
            }
            SpectralSpec::TorusExplicit { d, coefficients } => {
                let mut pts: Vec<(f64, f64)> = coefficients
                    .iter()
                    .filter(|c| c.gamma > 0.0 && c.n.iter().any(|&k| k != 0))
                    .map(|c| {
                        let r = c.n.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
                        (r.ln(), c.gamma.ln())
                    })
                    .collect();
                if pts.len() < 2 {
                    return Ok(Some(0));
                }
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                let growth = crate::quad::linear_fit(&x, &y).map_or(0.0, |f| f.0);
                if !growth.is_finite() {
                    return Ok(None);
                }
                let need = growth + *d as f64;
                Ok(Some(if need < 0.0 {
                    0
                } else {
                    need.floor() as u32 + 1
                }))
            }
            _ => Err(VflError::Unsupported(
                "slowly-increasing order is a torus notion".into(),
            )),
        }
    }
}
