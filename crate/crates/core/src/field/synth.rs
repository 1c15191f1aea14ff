//! Grid synthesis `X(θ_j) = X_0 + Σ_n [cos(n,θ_j) X_n¹ + sin(n,θ_j) X_n²]`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, VflError};

use super::FieldSnapshot;

/// Values on the `M^d` grid `θ_j = -π + 2π(j+1)/M` per axis (row-major,
/// last axis fastest).
///
/// The coefficients are placed on the discrete spectrum and transformed with
/// one inverse FFT per axis.
pub fn synthesize_grid(snap: &FieldSnapshot, m: usize) -> Result<Vec<f64>> {
    let d = snap.d;
    let n_max = snap
        .modes
        .iter()
        .flatten()
        .fold(0i64, |a, &c| a.max(c.abs())) as usize;
    if m <= 2 * n_max {
        return Err(VflError::AliasingRisk {
            m,
            two_n: 2 * n_max,
        });
    }
    let total = m.pow(d as u32);
    let mut spec = vec![Complex64::new(0.0, 0.0); total];
    let index = |n: &[i64]| -> usize {
        n.iter()
            .fold(0usize, |acc, &c| acc * m + c.rem_euclid(m as i64) as usize)
    };
    spec[0] += snap.x0;
    for ((n, &a), &b) in snap.modes.iter().zip(&snap.x1).zip(&snap.x2) {
        // θ = 2π(j+1)/M - π contributes the phase (-1)^{Σn} e^{2πi n/M}
        let sign = if n.iter().sum::<i64>().rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        let c = Complex64::new(a, -b) * (0.5 * sign);
        let neg: Vec<i64> = n.iter().map(|x| -x).collect();
        spec[index(n)] += c;
        spec[index(&neg)] += c.conj();
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(m);
    // axis k has stride m^{d-1-k}
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..d {
        let stride = m.pow((d - 1 - axis) as u32);
        for base in 0..total {
            if !(base / stride).is_multiple_of(m) {
                continue;
            }
            for (j, l) in line.iter_mut().enumerate() {
                *l = spec[base + j * stride];
            }
            fft.process(&mut line);
            for (j, l) in line.iter().enumerate() {
                spec[base + j * stride] = *l;
            }
        }
    }
    // spec[j'] now holds X at θ with index j' = j + 1 (mod M) per axis
    let mut out = vec![0.0; total];
    for (flat, o) in out.iter_mut().enumerate() {
        let mut src = 0usize;
        let mut rest = flat;
        let mut mult = 1usize;
        for _ in 0..d {
            let j = rest % m;
            rest /= m;
            src += ((j + 1) % m) * mult;
            mult *= m;
        }
        *o = spec[src].re;
    }
    Ok(out)
}

/// Grid angles `θ_j` on one axis.
pub fn axis_angles(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (j + 1) as f64 / m as f64)
        .collect()
}
