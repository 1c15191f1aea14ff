//! Fourier multipliers `v(λ)` of the spatial operator, `F(Aξ)(λ) = -v(λ) F(ξ)(λ)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VflError};

/// Point mass `w` at `x` of a symmetric Lévy measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyAtom {
    pub x: Vec<f64>,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Symbol {
    /// `v(λ) = |λ|^α`, `α ∈ (0, 2]`.
    FractionalPower { dim: usize, alpha: f64 },
    /// `v(λ) = <Qλ, λ>`, `Q` row-major `dim × dim`.
    Quadratic { dim: usize, q: Vec<f64> },
    /// `v(λ) = <Qλ, λ> + Σ w_j (1 - cos<λ, x_j>)`.
    LevyKhinchin {
        dim: usize,
        q: Vec<f64>,
        atoms: Vec<LevyAtom>,
    },
}

impl Symbol {
    pub fn fractional(dim: usize, alpha: f64) -> Result<Self> {
        let s = Symbol::FractionalPower { dim, alpha };
        s.validate()?;
        Ok(s)
    }

    /// The Laplacian, `v(λ) = |λ|²`.
    pub fn laplacian(dim: usize) -> Self {
        Symbol::FractionalPower { dim, alpha: 2.0 }
    }

    pub fn quadratic(dim: usize, q: Vec<f64>) -> Result<Self> {
        let s = Symbol::Quadratic { dim, q };
        s.validate()?;
        Ok(s)
    }

    pub fn levy_khinchin(dim: usize, q: Vec<f64>, atoms: Vec<LevyAtom>) -> Result<Self> {
        let s = Symbol::LevyKhinchin { dim, q, atoms };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        match self {
            Symbol::FractionalPower { dim, .. }
            | Symbol::Quadratic { dim, .. }
            | Symbol::LevyKhinchin { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(invalid("symbol dimension must be >= 1"));
        }
        match self {
            Symbol::FractionalPower { alpha, .. } => {
                if !(*alpha > 0.0 && *alpha <= 2.0) {
                    return Err(invalid(format!(
                        "fractional power needs alpha in (0,2], got {alpha}"
                    )));
                }
            }
            Symbol::Quadratic { q, .. } => check_psd(q, d)?,
            Symbol::LevyKhinchin { q, atoms, .. } => {
                check_psd(q, d)?;
                for a in atoms {
                    if a.x.len() != d {
                        return Err(VflError::DimensionMismatch {
                            expected: d,
                            got: a.x.len(),
                        });
                    }
                    if !(a.w >= 0.0) || !a.w.is_finite() {
                        return Err(invalid("Lévy atom weights must be finite and nonnegative"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `v(λ) >= 0`.
    pub fn eval(&self, lambda: &[f64]) -> Result<f64> {
        let d = self.dim();
        if lambda.len() != d {
            return Err(VflError::DimensionMismatch {
                expected: d,
                got: lambda.len(),
            });
        }
        Ok(match self {
            Symbol::FractionalPower { alpha, .. } => {
                let r2: f64 = lambda.iter().map(|x| x * x).sum();
                if *alpha == 2.0 {
                    r2
                } else {
                    r2.powf(0.5 * alpha)
                }
            }
            Symbol::Quadratic { q, .. } => quad_form(q, lambda),
            Symbol::LevyKhinchin { q, atoms, .. } => {
                let jumps: f64 = atoms
                    .iter()
                    .map(|a| {
                        let dot: f64 = a.x.iter().zip(lambda).map(|(x, l)| x * l).sum();
                        a.w * (1.0 - dot.cos())
                    })
                    .sum();
                (quad_form(q, lambda) + jumps).max(0.0)
            }
        })
    }

    /// Symbol at integer lattice point `n`.
    pub fn eval_lattice(&self, n: &[i64]) -> Result<f64> {
        let lam: Vec<f64> = n.iter().map(|&k| k as f64).collect();
        self.eval(&lam)
    }

    /// `true` when `v` depends on `|λ|` only.
    pub fn is_isotropic(&self) -> bool {
        match self {
            Symbol::FractionalPower { .. } => true,
            Symbol::Quadratic { dim, q } => is_scalar_matrix(q, *dim),
            Symbol::LevyKhinchin { .. } => false,
        }
    }

    /// Growth exponent of `v(ρθ)` as `ρ → ∞` (0 for bounded symbols).
    pub fn growth_exponent_at_infinity(&self) -> f64 {
        match self {
            Symbol::FractionalPower { alpha, .. } => *alpha,
            Symbol::Quadratic { q, .. } => {
                if q.iter().all(|&x| x == 0.0) {
                    0.0
                } else {
                    2.0
                }
            }
            Symbol::LevyKhinchin { q, .. } => {
                if q.iter().any(|&x| x != 0.0) {
                    2.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Vanishing order of `v(ρθ)` as `ρ → 0`.
    pub fn order_at_zero(&self) -> f64 {
        match self {
            Symbol::FractionalPower { alpha, .. } => *alpha,
            _ => 2.0,
        }
    }

    /// Whether `v(ρθ) ≍ ρ^p` in every direction (no degenerate directions),
    /// needed for exponent arithmetic.
    pub fn is_elliptic(&self) -> bool {
        match self {
            Symbol::FractionalPower { .. } => true,
            Symbol::Quadratic { dim, q } => min_eigen_bound_positive(q, *dim),
            Symbol::LevyKhinchin { dim, q, atoms } => {
                min_eigen_bound_positive(q, *dim) && atoms.is_empty()
            }
        }
    }
}

fn quad_form(q: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += q[i * d + j] * x[i] * x[j];
        }
    }
    s.max(0.0)
}

fn is_scalar_matrix(q: &[f64], d: usize) -> bool {
    (0..d).all(|i| {
        (0..d).all(|j| {
            if i == j {
                q[i * d + j] == q[0]
            } else {
                q[i * d + j] == 0.0
            }
        })
    })
}

fn check_psd(q: &[f64], d: usize) -> Result<()> {
    if q.len() != d * d {
        return Err(VflError::DimensionMismatch {
            expected: d * d,
            got: q.len(),
        });
    }
    for i in 0..d {
        for j in 0..d {
            if (q[i * d + j] - q[j * d + i]).abs() > 1e-12 * (1.0 + q[i * d + j].abs()) {
                return Err(invalid("Q must be symmetric"));
            }
        }
    }
    // Cholesky with pivot tolerance decides semidefiniteness.
    if cholesky_min_pivot(q, d) < -1e-12 {
        return Err(invalid("Q must be positive semidefinite"));
    }
    Ok(())
}

/// Smallest pivot of an LDLᵀ sweep; negative means indefinite.
fn cholesky_min_pivot(q: &[f64], d: usize) -> f64 {
    let mut a = q.to_vec();
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut min_pivot = f64::INFINITY;
    for k in 0..d {
        let p = a[k * d + k];
        min_pivot = min_pivot.min(p / scale);
        if p.abs() <= 1e-14 * scale {
            // zero pivot: the rest of the column must vanish
            for i in k + 1..d {
                if a[i * d + k].abs() > 1e-10 * scale {
                    return -1.0;
                }
            }
            continue;
        }
        for i in k + 1..d {
            let f = a[i * d + k] / p;
            for j in k..d {
                a[i * d + j] -= f * a[k * d + j];
            }
        }
    }
    min_pivot
}

fn min_eigen_bound_positive(q: &[f64], d: usize) -> bool {
    cholesky_min_pivot(q, d) > 1e-12
}
