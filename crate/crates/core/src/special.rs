//! Gamma-function helpers shared by the kernel and fractional modules.

/// `Γ(x)` for real `x`; `±∞`/NaN at the poles as returned by the backend.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `ln|Γ(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `sin(πx)` with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    if x == x.trunc() {
        return 0.0;
    }
    // reduce to [-1, 1)
    let r = x - 2.0 * (0.5 * x).floor();
    let r = if r >= 1.0 { r - 2.0 } else { r };
    (std::f64::consts::PI * r).sin()
}

/// `1/Γ(x)`, entire; returns exactly `0.0` at non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.trunc() {
        return 0.0;
    }
    if x > 0.0 {
        if x < 170.0 {
            1.0 / gamma(x)
        } else {
            (-ln_gamma(x)).exp()
        }
    } else {
        // reflection: 1/Γ(x) = sin(πx) Γ(1-x) / π
        let y = 1.0 - x;
        let s = sin_pi(x);
        if y < 170.0 {
            s * gamma(y) / std::f64::consts::PI
        } else {
            s.signum() * (ln_gamma(y) + s.abs().ln() - std::f64::consts::PI.ln()).exp()
        }
    }
}

/// `(ln|1/Γ(x)|, sign(1/Γ(x)))`; the sign is `0.0` at the poles.
pub fn ln_abs_rgamma(x: f64) -> (f64, f64) {
    if x <= 0.0 && x == x.trunc() {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x > 0.0 {
        return (-ln_gamma(x), 1.0);
    }
    let s = sin_pi(x);
    (
        s.abs().ln() + ln_gamma(1.0 - x) - std::f64::consts::PI.ln(),
        s.signum(),
    )
}

/// Lower incomplete gamma moment `∫_0^h w^j e^{-w} dw` for integer `j`,
/// accurate for small `h` where the closed form cancels.
pub fn exp_moment(j: u32, h: f64) -> f64 {
    if h <= 1.0 {
        // Σ_m (-1)^m h^{m+j+1} / (m! (m+j+1))
        let mut sum = 0.0;
        let mut pow = h.powi(j as i32 + 1);
        let mut fact = 1.0;
        for m in 0..60u32 {
            let term = pow / (fact * (m + j + 1) as f64);
            if m % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            if term < 1e-18 * sum.abs() {
                break;
            }
            pow *= h;
            fact *= (m + 1) as f64;
        }
        sum
    } else {
        // j! (1 - e^{-h} Σ_{i<=j} h^i / i!)
        let mut partial = 0.0;
        let mut term = 1.0;
        let mut jfact = 1.0;
        for i in 0..=j {
            if i > 0 {
                term *= h / i as f64;
                jfact *= i as f64;
            }
            partial += term;
        }
        jfact * (1.0 - (-h).exp() * partial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rgamma_poles_are_exact_zeros() {
        for m in 0..6 {
            assert_eq!(rgamma(-(m as f64)), 0.0);
        }
    }

    #[test]
    fn rgamma_reflection_matches_direct() {
        // Γ(-0.5) = -2√π
        let g = -2.0 * std::f64::consts::PI.sqrt();
        assert_relative_eq!(rgamma(-0.5), 1.0 / g, max_relative = 1e-13);
        assert_relative_eq!(
            rgamma(0.5),
            1.0 / std::f64::consts::PI.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(rgamma(5.0), 1.0 / 24.0, max_relative = 1e-14);
    }

    #[test]
    fn exp_moment_branches_agree() {
        for j in 0..3 {
            let closed = |h: f64| {
                let f: f64 = (1..=j).product::<u32>().max(1) as f64;
                let mut p = 0.0;
                let mut t = 1.0;
                for i in 0..=j {
                    if i > 0 {
                        t *= h / i as f64;
                    }
                    p += t;
                }
                f * (1.0 - (-h).exp() * p)
            };
            assert_relative_eq!(exp_moment(j, 0.999), closed(0.999), max_relative = 1e-12);
            assert_relative_eq!(exp_moment(j, 1.001), closed(1.001), max_relative = 1e-12);
        }
        // leading order h^{j+1}/(j+1)
        assert_relative_eq!(exp_moment(2, 1e-4), 1e-12 / 3.0, max_relative = 1e-4);
    }
}
