//! Scalar resolvents `s(t;μ)` and `r(t;μ)` of the one-dimensional Volterra equations
//!
//! ```text
//! s + μ (a ⋆ s) = 1,     r + μ (a ⋆ r) = a   (ch1_minus)
//!                        r = b + μ (b ⋆ r)   (ch4_plus)
//! ```
//!
//! solved by a product trapezoidal rule with exact kernel moments, plus closed
//! forms and the squared tail integral of `r`.

mod closed;
mod tail;
pub mod toeplitz;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use closed::{closed_form_r, closed_form_s, s_limit};
pub(crate) use tail::tail_fit;
pub use tail::{squared_tail_integral, squared_tail_integral_numeric};
pub use toeplitz::Method;

use crate::error::{Result, VflError};
use crate::grid::TimeGrid;
use crate::kernel::Kernel;

/// Sign convention of the kernel resolvent equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `r + μ (a ⋆ r) = a`
    Ch1Minus,
    /// `r = b + μ (b ⋆ r)`
    Ch4Plus,
}

impl Convention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convention::Ch1Minus => "ch1_minus",
            Convention::Ch4Plus => "ch4_plus",
        }
    }

    /// Coefficient `μ'` with the equation written as `y + μ' (a ⋆ y) = f`.
    fn effective_mu(&self, mu: f64) -> f64 {
        match self {
            Convention::Ch1Minus => mu,
            Convention::Ch4Plus => -mu,
        }
    }
}

/// Grid samples of `s` and/or `r` for a batch of `μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventGrid {
    pub kernel: Kernel,
    pub mu_list: Vec<f64>,
    pub grid: TimeGrid,
    /// One row per `μ`; empty when `s` was not requested.
    pub s_values: Vec<Vec<f64>>,
    /// One row per `μ`; empty when `r` was not requested.
    pub r_values: Vec<Vec<f64>>,
    pub convention: Option<Convention>,
    pub tol: f64,
    /// Estimated sup-norm error of the returned values.
    pub residual_max: f64,
}

impl ResolventGrid {
    /// `s(t; mu_list[idx])` by linear interpolation between nodes.
    pub fn s_at(&self, idx: usize, t: f64) -> Option<f64> {
        interp(&self.grid, self.s_values.get(idx)?, t)
    }

    pub fn r_at(&self, idx: usize, t: f64) -> Option<f64> {
        interp(&self.grid, self.r_values.get(idx)?, t)
    }

    /// CSV with a `#` header line, then `t` and one column per `μ` and function.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# kernel={} convention={} tol={:e} residual_max={:e}",
            self.kernel.label(),
            self.convention.map_or("none", |c| c.as_str()),
            self.tol,
            self.residual_max
        );
        let mut cols = vec!["t".to_string()];
        if !self.s_values.is_empty() {
            cols.extend(self.mu_list.iter().map(|m| format!("s_mu={m}")));
        }
        if !self.r_values.is_empty() {
            cols.extend(self.mu_list.iter().map(|m| format!("r_mu={m}")));
        }
        let _ = writeln!(out, "{}", cols.join(","));
        for i in 0..self.grid.len() {
            let mut row = vec![format!("{}", self.grid.t(i))];
            for v in self.s_values.iter().chain(&self.r_values) {
                row.push(format!("{:.15e}", v[i]));
            }
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

fn interp(grid: &TimeGrid, v: &[f64], t: f64) -> Option<f64> {
    if t < 0.0 || t > grid.t_end() + 1e-12 {
        return None;
    }
    let x = t / grid.h();
    let i = (x.floor() as usize).min(v.len() - 2);
    let w = x - i as f64;
    Some(v[i] * (1.0 - w) + v[i + 1] * w)
}

/// Default accuracy target: `1e-6` for power kernels, `1e-8` otherwise.
pub fn default_tol(k: &Kernel) -> f64 {
    match k {
        Kernel::Power { alpha } if *alpha != 1.0 => 1e-6,
        _ => 1e-8,
    }
}

/// Product trapezoidal discretisation of `y + μ (a ⋆ y) = f` on a uniform grid.
///
/// On `[(k-1)h, kh]` the unknown is interpolated linearly and integrated
/// against the exact moments of `a`, giving a lower-triangular Toeplitz
/// system.
#[derive(Clone, Debug)]
pub struct VolterraScheme {
    h: f64,
    len: usize,
    /// `c_0 = A_1`, `c_m = A_{m+1} + B_m`.
    c: Vec<f64>,
    /// Weight `B_i` of `y_0` at node `i`.
    b: Vec<f64>,
    /// Starting weights `σ_{i,l}`, `l = 1..=m`, row-major by node.
    sigma: Vec<f64>,
    m: usize,
}

impl VolterraScheme {
    pub fn new(k: &Kernel, h: f64, len: usize) -> Result<Self> {
        if let Kernel::Tabulated(t) = k {
            if t.looks_singular_at_zero() {
                return Err(VflError::SingularKernelOnTabulated);
            }
        }
        // A_k, B_k for k = 1..len-1
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        for kk in 1..len {
            let (m0, m1) = k.local_moments((kk - 1) as f64 * h, h)?;
            a[kk] = m0 - m1 / h;
            b[kk] = m1 / h;
        }
        let mut c = vec![0.0; len];
        if len > 1 {
            c[0] = a[1];
        }
        for m in 1..len.saturating_sub(1) {
            c[m] = a[m + 1] + b[m];
        }
        Ok(Self {
            h,
            len,
            c,
            b,
            sigma: Vec::new(),
            m: 0,
        })
    }

    /// Adds starting weights on nodes `0..m` so that the discrete convolution
    /// with a power kernel is exact for `t^β`, `β ∈ betas` (`m = betas.len()`).
    ///
    /// `betas` should contain `0` and `1` so that the weights do not disturb
    /// the smooth part of the solution.
    pub fn with_starting_exponents(mut self, k: &Kernel, betas: &[f64]) -> Result<Self> {
        let Kernel::Power { alpha } = k else {
            return Ok(self);
        };
        let m = betas.len();
        if m < 2 || self.len < m + 1 {
            return Ok(self);
        }
        let n = self.len;
        // rows q: residuals (exact - discrete) / h^β for every node
        let ha = self.h.powf(*alpha);
        let mut rhs = vec![vec![0.0; n]; m];
        for (q, &beta) in betas.iter().enumerate() {
            let y: Vec<f64> = (0..n).map(|j| pow0(j as f64, beta)).collect();
            let conv = toeplitz::convolve(&self.c, &y, n);
            let ratio =
                crate::special::gamma(beta + 1.0) / crate::special::gamma(beta + 1.0 + alpha);
            for i in 1..n {
                let disc = conv[i] + (self.b[i] - self.c[i]) * y[0];
                rhs[q][i] = ratio * (i as f64).powf(beta + alpha) * ha - disc;
            }
        }
        let vander: Vec<f64> = betas
            .iter()
            .flat_map(|&beta| (0..m).map(move |l| pow0(l as f64, beta)))
            .collect();
        let lu = Lu::new(&vander, m)?;
        let mut sigma = vec![0.0; n * m];
        for i in 1..n {
            let col: Vec<f64> = (0..m).map(|q| rhs[q][i]).collect();
            sigma[i * m..(i + 1) * m].copy_from_slice(&lu.solve(&col));
        }
        self.sigma = sigma;
        self.m = m;
        Ok(self)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Solves with `y_0 = f_0`.
    pub fn solve(&self, mu: f64, f: &[f64], method: Method) -> Result<Vec<f64>> {
        if f.len() != self.len {
            return Err(VflError::DimensionMismatch {
                expected: self.len,
                got: f.len(),
            });
        }
        let diag = 1.0 + mu * self.c[0];
        if diag.abs() < 1e-12 {
            return Err(crate::error::invalid(
                "step too coarse: singular diagonal in the product rule",
            ));
        }
        let y0 = f[0];
        let mut g: Vec<f64> = f
            .iter()
            .zip(&self.b)
            .map(|(fi, bi)| fi - mu * bi * y0)
            .collect();
        let m = self.m;
        if m == 0 {
            return Ok(toeplitz::solve(&self.c, &g, mu, diag, &[y0], method));
        }
        // nodes 1..m are coupled through the starting weights
        for (i, gi) in g.iter_mut().enumerate().skip(1) {
            *gi -= mu * self.sigma[i * m] * y0;
        }
        let k = m - 1;
        let mut a = vec![0.0; k * k];
        for i in 1..m {
            for j in 1..m {
                let mut v = mu * self.sigma[i * m + j];
                if j <= i {
                    v += mu * self.c[i - j];
                }
                if i == j {
                    v += 1.0;
                }
                a[(i - 1) * k + j - 1] = v;
            }
        }
        let start = Lu::new(&a, k)?.solve(&g[1..m]);
        for (i, gi) in g.iter_mut().enumerate().skip(m) {
            let row = &self.sigma[i * m + 1..(i + 1) * m];
            *gi -= mu * row.iter().zip(&start).map(|(s, y)| s * y).sum::<f64>();
        }
        let mut prefix = vec![y0];
        prefix.extend_from_slice(&start);
        Ok(toeplitz::solve(&self.c, &g, mu, diag, &prefix, method))
    }
}

fn pow0(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

/// Dense LU with partial pivoting for the small starting systems.
struct Lu {
    a: Vec<f64>,
    piv: Vec<usize>,
    n: usize,
}

impl Lu {
    fn new(a: &[f64], n: usize) -> Result<Self> {
        let mut a = a.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .unwrap_or(k);
            if a[p * n + k].abs() < 1e-300 {
                return Err(crate::error::invalid("singular starting system"));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                a[i * n + k] = f;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Ok(Self { a, piv, n })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.a[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.a[i * n + j] * x[j];
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }
}

/// Exponents `β < 2` of the small-time expansion of the solution, used for
/// starting weights: `0`, `1` and at most four non-integer ones.
fn starting_exponents(k: &Kernel, target: Target) -> Vec<f64> {
    let Kernel::Power { alpha } = k else {
        return Vec::new();
    };
    let offset = match target {
        Target::S => *alpha,
        Target::R(_) => alpha - 1.0,
    };
    let mut betas = vec![0.0, 1.0];
    betas.extend(
        (0..)
            .map(|j| offset + j as f64 * alpha)
            .take_while(|&b| b < 2.0)
            .filter(|b| (b - b.round()).abs() > 1e-9)
            .take(6),
    );
    betas.sort_by(f64::total_cmp);
    betas
}

/// What to solve for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    S,
    R(Convention),
}

/// Solves `s + μ (a ⋆ s) = 1` for every `μ` in `mu_list`.
///
/// Three nested step sizes `h, h/2, h/4` are combined by Richardson
/// extrapolation; `residual_max` is the difference between the two
/// extrapolants. If it exceeds `tol` one further halving is tried before
/// giving up with `ToleranceNotMet`.
pub fn solve_s(k: &Kernel, mu_list: &[f64], grid: &TimeGrid, tol: f64) -> Result<ResolventGrid> {
    let (rows, res) = solve_batch(k, mu_list, grid, tol, Target::S, Method::Auto)?;
    Ok(ResolventGrid {
        kernel: k.clone(),
        mu_list: mu_list.to_vec(),
        grid: *grid,
        s_values: rows,
        r_values: Vec::new(),
        convention: None,
        tol,
        residual_max: res,
    })
}

/// Solves the kernel resolvent equation in the chosen convention.
///
/// Unbounded at the origin for power kernels with `α < 1` (`SingularAtZero`).
pub fn solve_r(
    k: &Kernel,
    mu_list: &[f64],
    grid: &TimeGrid,
    tol: f64,
    convention: Convention,
) -> Result<ResolventGrid> {
    let (rows, res) = solve_batch(k, mu_list, grid, tol, Target::R(convention), Method::Auto)?;
    Ok(ResolventGrid {
        kernel: k.clone(),
        mu_list: mu_list.to_vec(),
        grid: *grid,
        s_values: Vec::new(),
        r_values: rows,
        convention: Some(convention),
        tol,
        residual_max: res,
    })
}

/// Both `s` and `r` on one grid.
pub fn solve_both(
    k: &Kernel,
    mu_list: &[f64],
    grid: &TimeGrid,
    tol: f64,
    convention: Convention,
) -> Result<ResolventGrid> {
    let mut g = solve_s(k, mu_list, grid, tol)?;
    let r = solve_r(k, mu_list, grid, tol, convention)?;
    g.r_values = r.r_values;
    g.convention = Some(convention);
    g.residual_max = g.residual_max.max(r.residual_max);
    Ok(g)
}

/// Plain product-trapezoid solution at the grid step, without extrapolation.
pub fn solve_s_raw(k: &Kernel, mu: f64, grid: &TimeGrid, method: Method) -> Result<Vec<f64>> {
    let scheme = VolterraScheme::new(k, grid.h(), grid.len())?
        .with_starting_exponents(k, &starting_exponents(k, Target::S))?;
    scheme.solve(mu, &vec![1.0; grid.len()], method)
}

fn solve_batch(
    k: &Kernel,
    mu_list: &[f64],
    grid: &TimeGrid,
    tol: f64,
    target: Target,
    method: Method,
) -> Result<(Vec<Vec<f64>>, f64)> {
    k.validate()?;
    if !(tol > 0.0) {
        return Err(crate::error::invalid("tolerance must be positive"));
    }
    if let Some(m) = mu_list.iter().find(|m| !m.is_finite()) {
        return Err(crate::error::invalid(format!("mu must be finite, got {m}")));
    }
    if matches!(target, Target::R(_)) && k.is_singular_at_zero() {
        return Err(VflError::SingularAtZero);
    }
    if k.domain_end() < grid.t_end() {
        return Err(VflError::OutOfRange {
            t: grid.t_end(),
            t_max: k.domain_end(),
        });
    }
    // second order once the starting weights absorb the t^β terms
    let factor = 1.0 / 3.0;
    let n = grid.len();

    // levels[l] has step h / 2^l
    let mut levels: Vec<(VolterraScheme, Vec<f64>)> = Vec::new();
    let add_level = |levels: &mut Vec<(VolterraScheme, Vec<f64>)>| -> Result<()> {
        let l = levels.len();
        let m = (n - 1) * (1 << l) + 1;
        let h = grid.h() / (1 << l) as f64;
        let scheme = VolterraScheme::new(k, h, m)?
            .with_starting_exponents(k, &starting_exponents(k, target))?;
        let f = match target {
            Target::S => vec![1.0; m],
            Target::R(_) => (0..m)
                .map(|i| k.eval(i as f64 * h))
                .collect::<Result<Vec<_>>>()?,
        };
        levels.push((scheme, f));
        Ok(())
    };
    for _ in 0..3 {
        add_level(&mut levels)?;
    }

    let solve_mu =
        |mu: f64, levels: &[(VolterraScheme, Vec<f64>)], first: usize| -> Result<Vec<Vec<f64>>> {
            let mu_eff = match target {
                Target::S => mu,
                Target::R(c) => c.effective_mu(mu),
            };
            levels[first..]
                .iter()
                .enumerate()
                .map(|(l, (scheme, f))| {
                    let stride = 1usize << (first + l);
                    let y = if mu_eff == 0.0 {
                        f.clone()
                    } else {
                        scheme.solve(mu_eff, f, method)?
                    };
                    Ok((0..n).map(|i| y[i * stride]).collect())
                })
                .collect()
        };
    // extrapolants from consecutive level pairs and the spread of the last two
    let assess = |sols: &[Vec<f64>]| -> (Vec<f64>, f64) {
        let ex: Vec<Vec<f64>> = sols
            .windows(2)
            .map(|w| {
                w[1].iter()
                    .zip(&w[0])
                    .map(|(f, c)| f + (f - c) * factor)
                    .collect()
            })
            .collect();
        let last = &ex[ex.len() - 1];
        let prev = &ex[ex.len() - 2];
        let spread = last
            .iter()
            .zip(prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (last.clone(), spread)
    };

    let mut results: Vec<(Vec<f64>, f64)> = mu_list
        .par_iter()
        .map(|&mu| {
            let sols = solve_mu(mu, &levels, 0)?;
            Ok(assess(&sols))
        })
        .collect::<Result<_>>()?;

    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    if !(worst <= tol) {
        // one automatic step-halving
        add_level(&mut levels)?;
        results = mu_list
            .par_iter()
            .map(|&mu| {
                let sols = solve_mu(mu, &levels, 1)?;
                Ok(assess(&sols))
            })
            .collect::<Result<_>>()?;
        let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
        if !(worst <= tol) {
            return Err(VflError::ToleranceNotMet {
                achieved: worst,
                tol,
            });
        }
    }
    let residual = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut rows: Vec<Vec<f64>> = results.into_iter().map(|r| r.0).collect();
    if target == Target::S {
        for row in rows.iter_mut() {
            row[0] = 1.0;
        }
    }
    Ok((rows, residual))
}

#[cfg(test)]
mod tests;
