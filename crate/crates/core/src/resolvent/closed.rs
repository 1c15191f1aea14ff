//! Closed-form scalar resolvents of the catalog kernels.

use crate::fractional::mittag_leffler;
use crate::kernel::Kernel;

use super::Convention;

/// `s(t;μ)` when the kernel has a closed form; `None` otherwise.
pub fn closed_form_s(k: &Kernel, mu: f64, t: f64) -> Option<f64> {
    if t < 0.0 || !mu.is_finite() {
        return None;
    }
    if mu == 0.0 {
        return Some(1.0);
    }
    match k {
        Kernel::Constant => Some((-mu * t).exp()),
        Kernel::Linear => Some(if mu > 0.0 {
            (mu.sqrt() * t).cos()
        } else {
            ((-mu).sqrt() * t).cosh()
        }),
        Kernel::Exponential => {
            // ((1 - e^{-εt}) + ε e^{-εt}) / ε with ε = 1 + μ, finite at ε = 0
            let eps = 1.0 + mu;
            if eps == 0.0 {
                Some(1.0 + t)
            } else {
                Some(-(-eps * t).exp_m1() / eps + (-eps * t).exp())
            }
        }
        Kernel::Power { alpha } => mittag_leffler(*alpha, -mu * t.powf(*alpha)).ok(),
        // ŝ = [1/z + μ(z+2)/((z+1)² + μ)] / (1 + μ)
        Kernel::LinExp if mu > -1.0 => {
            let osc = if mu > 0.0 {
                let w = mu.sqrt();
                (w * t).cos() + (w * t).sin() / w
            } else {
                let q = (-mu).sqrt();
                (q * t).cosh() + (q * t).sinh() / q
            };
            Some((1.0 + mu * (-t).exp() * osc) / (1.0 + mu))
        }
        Kernel::LinExp | Kernel::Tabulated(_) => None,
    }
}

/// `lim_{t→∞} s(t;μ)` where known in closed form.
pub fn s_limit(k: &Kernel, mu: f64) -> Option<f64> {
    if mu == 0.0 {
        return Some(1.0);
    }
    match k {
        Kernel::Constant | Kernel::Power { .. } if mu > 0.0 => Some(0.0),
        Kernel::Exponential | Kernel::LinExp if mu > -1.0 => Some(1.0 / (1.0 + mu)),
        _ => None,
    }
}

/// `r(t;μ)` in the given convention when a closed form is known.
pub fn closed_form_r(k: &Kernel, mu: f64, t: f64, convention: Convention) -> Option<f64> {
    if t < 0.0 || !mu.is_finite() {
        return None;
    }
    // work in the r = b + m (b ⋆ r) form
    let m = match convention {
        Convention::Ch4Plus => mu,
        Convention::Ch1Minus => -mu,
    };
    // sinh(√m t)/√m continued through m = 0 and m < 0
    let shc = |m: f64, t: f64| {
        if m > 0.0 {
            let q = m.sqrt();
            (q * t).sinh() / q
        } else if m < 0.0 {
            let q = (-m).sqrt();
            (q * t).sin() / q
        } else {
            t
        }
    };
    match k {
        Kernel::Constant => Some((m * t).exp()),
        Kernel::Exponential => Some(((m - 1.0) * t).exp()),
        Kernel::Linear => Some(shc(m, t)),
        Kernel::LinExp => Some((-t).exp() * shc(m, t)),
        Kernel::Power { .. } if m == 0.0 => k.eval(t).ok(),
        _ => None,
    }
}
