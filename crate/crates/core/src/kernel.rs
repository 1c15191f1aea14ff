//! Memory kernels `a(t)` of the Volterra equations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VflError};
use crate::special::{exp_moment, gamma, rgamma};

/// Piecewise-interpolated kernel samples on `0 < t_0 < t_1 < ...`.
///
/// On `[0, t_0]` the first segment is extended (linear order) or the first
/// value is held (order 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedKernel {
    times: Vec<f64>,
    values: Vec<f64>,
    #[serde(default = "default_order")]
    order: u8,
}

fn default_order() -> u8 {
    1
}

impl TabulatedKernel {
    pub fn new(times: Vec<f64>, values: Vec<f64>, order: u8) -> Result<Self> {
        let k = Self {
            times,
            values,
            order,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values, 1)
    }

    fn validate(&self) -> Result<()> {
        if self.times.len() < 2 || self.times.len() != self.values.len() {
            return Err(invalid(
                "tabulated kernel needs >= 2 matching time/value samples",
            ));
        }
        if self.order > 1 {
            return Err(invalid("tabulated interpolation order must be 0 or 1"));
        }
        if !(self.times[0] > 0.0) {
            return Err(invalid("tabulated grid must start at t > 0"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("tabulated grid must be strictly increasing"));
        }
        if self
            .times
            .iter()
            .chain(&self.values)
            .any(|v| !v.is_finite())
        {
            return Err(invalid("tabulated samples must be finite"));
        }
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Heuristic blow-up test at the origin: log-log slope of the first
    /// two samples below -1/4.
    pub fn looks_singular_at_zero(&self) -> bool {
        let (t0, t1) = (self.times[0], self.times[1]);
        let (a0, a1) = (self.values[0], self.values[1]);
        if a0 <= 0.0 || a1 <= 0.0 {
            return false;
        }
        (a1 / a0).ln() / (t1 / t0).ln() < -0.25
    }

    fn eval(&self, t: f64) -> Result<f64> {
        let t_max = self.t_max();
        if t < 0.0 || t > t_max * (1.0 + 1e-12) {
            return Err(VflError::OutOfRange { t, t_max });
        }
        let ts = &self.times;
        let vs = &self.values;
        if t <= ts[0] {
            return Ok(match self.order {
                0 => vs[0],
                _ => vs[0] + (t - ts[0]) * (vs[1] - vs[0]) / (ts[1] - ts[0]),
            });
        }
        let j = ts.partition_point(|&x| x < t).min(ts.len() - 1);
        let (ta, tb, va, vb) = (ts[j - 1], ts[j], vs[j - 1], vs[j]);
        Ok(match self.order {
            0 => va,
            _ => va + (t - ta) * (vb - va) / (tb - ta),
        })
    }

    /// `(∫_c^{c+h} a, ∫_c^{c+h} (u-c) a(u) du)`, exact for the interpolant.
    fn moments(&self, c: f64, h: f64) -> Result<(f64, f64)> {
        let end = c + h;
        if end > self.t_max() * (1.0 + 1e-12) {
            return Err(VflError::OutOfRange {
                t: end,
                t_max: self.t_max(),
            });
        }
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut lo = c;
        let ts = &self.times;
        let (from, to) = (
            ts.partition_point(|&k| k <= c),
            ts.partition_point(|&k| k < end),
        );
        let mut knots = ts[from..to.max(from)].to_vec();
        knots.push(end);
        for hi in knots {
            let width = hi - lo;
            if width <= 0.0 {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            // degree <= 1 between knots, times w: Simpson is exact
            let fm = self.eval(mid)?;
            let (fa, fb) = if self.order == 0 {
                (fm, fm)
            } else {
                (self.eval(lo)?, self.eval(hi.min(self.t_max()))?)
            };
            m0 += width / 6.0 * (fa + 4.0 * fm + fb);
            m1 += width / 6.0 * ((lo - c) * fa + 4.0 * (mid - c) * fm + (hi - c) * fb);
            lo = hi;
        }
        Ok((m0, m1))
    }
}

/// Memory kernel of the Volterra equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// `a(t) = 1`
    Constant,
    /// `a(t) = t`
    Linear,
    /// `a(t) = e^{-t}`
    Exponential,
    /// `a(t) = t e^{-t}`
    LinExp,
    /// `a(t) = t^{α-1}/Γ(α)`, `α ∈ (0, 2)`
    Power {
        alpha: f64,
    },
    Tabulated(TabulatedKernel),
}

/// Catalog knowledge about a kernel; `None` means not known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelClass {
    pub completely_monotonic: Option<bool>,
    pub completely_positive: Option<bool>,
    pub k_regular_all_k: Option<bool>,
}

impl Kernel {
    pub fn power(alpha: f64) -> Result<Self> {
        let k = Kernel::Power { alpha };
        k.validate()?;
        Ok(k)
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<f64>, order: u8) -> Result<Self> {
        Ok(Kernel::Tabulated(TabulatedKernel::new(
            times, values, order,
        )?))
    }

    /// Checks parameter invariants (needed after deserialisation).
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Power { alpha } if !(*alpha > 0.0 && *alpha < 2.0) => Err(invalid(format!(
                "power kernel needs alpha in (0,2), got {alpha}"
            ))),
            Kernel::Tabulated(t) => t.validate(),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Constant => "constant",
            Kernel::Linear => "linear",
            Kernel::Exponential => "exponential",
            Kernel::LinExp => "lin_exp",
            Kernel::Power { .. } => "power",
            Kernel::Tabulated(_) => "tabulated",
        }
    }

    /// Short label including parameters, e.g. `power(0.5)`.
    pub fn label(&self) -> String {
        match self {
            Kernel::Power { alpha } => format!("power({alpha})"),
            Kernel::Tabulated(t) => format!("tabulated(n={},order={})", t.times.len(), t.order),
            k => k.name().to_string(),
        }
    }

    /// `a(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(invalid(format!("kernel evaluated at negative time {t}")));
        }
        Ok(match self {
            Kernel::Constant => 1.0,
            Kernel::Linear => t,
            Kernel::Exponential => (-t).exp(),
            Kernel::LinExp => t * (-t).exp(),
            Kernel::Power { alpha } => {
                if t == 0.0 {
                    if *alpha < 1.0 {
                        return Err(VflError::SingularAtZero);
                    }
                    if *alpha > 1.0 {
                        return Ok(0.0);
                    }
                }
                t.powf(alpha - 1.0) * rgamma(*alpha)
            }
            Kernel::Tabulated(tab) => tab.eval(t)?,
        })
    }

    /// Value at the origin, `+∞` for singular kernels.
    pub fn value_at_zero(&self) -> f64 {
        self.eval(0.0).unwrap_or(f64::INFINITY)
    }

    pub fn is_singular_at_zero(&self) -> bool {
        match self {
            Kernel::Power { alpha } => *alpha < 1.0,
            Kernel::Tabulated(t) => t.looks_singular_at_zero(),
            _ => false,
        }
    }

    /// Laplace transform `â(λ)` for `Re λ > 0` (principal branch).
    pub fn laplace(&self, lambda: Complex64) -> Result<Complex64> {
        if !(lambda.re > 0.0) {
            return Err(invalid("Laplace transform requires Re(lambda) > 0"));
        }
        let one = Complex64::new(1.0, 0.0);
        Ok(match self {
            Kernel::Constant => one / lambda,
            Kernel::Linear => one / (lambda * lambda),
            Kernel::Exponential => one / (lambda + 1.0),
            Kernel::LinExp => one / ((lambda + 1.0) * (lambda + 1.0)),
            Kernel::Power { alpha } => lambda.powf(-alpha),
            Kernel::Tabulated(_) => {
                return Err(VflError::Unsupported(
                    "Laplace transform of a tabulated kernel".into(),
                ))
            }
        })
    }

    pub fn classify(&self) -> KernelClass {
        let flags = |cm, cp, kr| KernelClass {
            completely_monotonic: Some(cm),
            completely_positive: Some(cp),
            k_regular_all_k: Some(kr),
        };
        match self {
            Kernel::Constant => flags(true, true, true),
            Kernel::Exponential => flags(true, true, true),
            // cos(√μ t) changes sign, so s is not nonnegative
            Kernel::Linear => flags(false, false, true),
            Kernel::LinExp => KernelClass {
                completely_monotonic: Some(false),
                completely_positive: Some(false),
                k_regular_all_k: None,
            },
            Kernel::Power { alpha } => {
                if *alpha <= 1.0 {
                    flags(true, true, true)
                } else {
                    flags(false, false, true)
                }
            }
            Kernel::Tabulated(_) => KernelClass {
                completely_monotonic: None,
                completely_positive: None,
                k_regular_all_k: None,
            },
        }
    }

    pub fn is_completely_positive(&self) -> bool {
        self.classify().completely_positive == Some(true)
    }

    /// Local moments on `[c, c+h]`:
    /// `M0 = ∫_0^h a(c+w) dw`, `M1 = ∫_0^h w a(c+w) dw`.
    pub fn local_moments(&self, c: f64, h: f64) -> Result<(f64, f64)> {
        Ok(match self {
            Kernel::Constant => (h, 0.5 * h * h),
            Kernel::Linear => (c * h + 0.5 * h * h, 0.5 * c * h * h + h * h * h / 3.0),
            Kernel::Exponential => {
                let ec = (-c).exp();
                (ec * exp_moment(0, h), ec * exp_moment(1, h))
            }
            Kernel::LinExp => {
                let ec = (-c).exp();
                let (e0, e1, e2) = (exp_moment(0, h), exp_moment(1, h), exp_moment(2, h));
                (ec * (c * e0 + e1), ec * (c * e1 + e2))
            }
            Kernel::Power { alpha } => power_moments(*alpha, c, h),
            Kernel::Tabulated(t) => t.moments(c, h)?,
        })
    }

    /// Upper end of the kernel's domain.
    pub fn domain_end(&self) -> f64 {
        match self {
            Kernel::Tabulated(t) => t.t_max(),
            _ => f64::INFINITY,
        }
    }
}

fn power_moments(alpha: f64, c: f64, h: f64) -> (f64, f64) {
    let rg = rgamma(alpha);
    if c == 0.0 {
        let m0 = h.powf(alpha) / alpha * rg;
        let m1 = h.powf(alpha + 1.0) / (alpha + 1.0) * rg;
        return (m0, m1);
    }
    // x1^p - x0^p = x0^p expm1(p ln1p(h/c)) avoids cancellation for c >> h
    let l = (h / c).ln_1p();
    let d = |p: f64| c.powf(p) * (p * l).exp_m1();
    let m0 = d(alpha) / alpha * rg;
    // ∫ w (c+w)^{α-1} = D_{α+1}/(α+1) - c D_α/α
    let m1 = (d(alpha + 1.0) / (alpha + 1.0) - c * d(alpha) / alpha) * rg;
    // for c >> h the difference above cancels; switch to a series in h/c
    if h / c < 1e-3 {
        let x = h / c;
        let cpow = c.powf(alpha - 1.0);
        // ∫_0^h w (c+w)^{α-1} dw = c^{α-1} h^2 Σ_k binom(α-1,k) x^k / (k+2)
        let mut s = 0.0;
        let mut b = 1.0;
        let mut xp = 1.0;
        for k in 0..8 {
            s += b * xp / (k as f64 + 2.0);
            b *= (alpha - 1.0 - k as f64) / (k as f64 + 1.0);
            xp *= x;
        }
        return (m0, cpow * h * h * s * rg);
    }
    (m0, m1)
}

/// `1/Γ(α+1) t^α`, the primitive of the power kernel.
pub fn power_primitive(alpha: f64, t: f64) -> f64 {
    t.powf(alpha) / gamma(alpha + 1.0)
}
