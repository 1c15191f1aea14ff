//! Lower-triangular Toeplitz solves for convolution-type Volterra schemes.
//!
//! The unknowns satisfy `d·y_i = g_i - μ Σ_{1<=j<i} c_{i-j} y_j` for `i >= 1`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

const LEAF: usize = 64;

/// Which history evaluation to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// `O(N²)` running sums.
    Direct,
    /// Divide and conquer with FFT history updates, `O(N log² N)`.
    Fast,
    /// `Direct` for short grids, `Fast` otherwise.
    Auto,
}

/// Solves the recursion for `y[start..]`; `prefix = y[..start]` is given.
pub fn solve(c: &[f64], g: &[f64], mu: f64, diag: f64, prefix: &[f64], method: Method) -> Vec<f64> {
    let n = g.len();
    let mut y = vec![0.0; n];
    let start = prefix.len().min(n);
    y[..start].copy_from_slice(&prefix[..start]);
    if start >= n {
        return y;
    }
    let method = match method {
        Method::Auto if n <= 512 => Method::Direct,
        Method::Auto => Method::Fast,
        m => m,
    };
    match method {
        Method::Direct => {
            for i in start..n {
                let mut h = 0.0;
                for j in 1..i {
                    h += c[i - j] * y[j];
                }
                y[i] = (g[i] - mu * h) / diag;
            }
        }
        _ => {
            let mut hist = vec![0.0; n];
            for (i, h) in hist.iter_mut().enumerate().skip(start) {
                for (j, yj) in y.iter().enumerate().take(start).skip(1) {
                    *h += c[i - j] * yj;
                }
            }
            let mut s = Solver {
                c,
                g,
                mu,
                diag,
                y: &mut y,
                hist,
                planner: FftPlanner::new(),
            };
            s.rec(start, n);
        }
    }
    y
}

struct Solver<'a> {
    c: &'a [f64],
    g: &'a [f64],
    mu: f64,
    diag: f64,
    y: &'a mut [f64],
    hist: Vec<f64>,
    planner: FftPlanner<f64>,
}

impl Solver<'_> {
    fn rec(&mut self, lo: usize, hi: usize) {
        if hi - lo <= LEAF {
            for i in lo..hi {
                let mut h = self.hist[i];
                for j in lo..i {
                    h += self.c[i - j] * self.y[j];
                }
                self.y[i] = (self.g[i] - self.mu * h) / self.diag;
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.rec(lo, mid);
        // contributions of y[lo..mid] to hist[mid..hi]
        let block = self.y[lo..mid].to_vec();
        let conv = self.convolve(&block, hi - lo);
        for i in mid..hi {
            self.hist[i] += conv[i - lo];
        }
        self.rec(mid, hi);
    }

    fn convolve(&mut self, a: &[f64], len: usize) -> Vec<f64> {
        convolve_with(&mut self.planner, a, &self.c[..len.min(self.c.len())], len)
    }
}

/// First `len` entries of the linear convolution `a ⋆ b`.
pub fn convolve(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    convolve_with(&mut FftPlanner::new(), a, b, len)
}

fn convolve_with(planner: &mut FftPlanner<f64>, a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let size = (a.len() + b.len()).max(len).next_power_of_two();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(size);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(size);
    let pad = |v: &[f64]| -> Vec<Complex64> {
        (0..size)
            .map(|i| Complex64::new(v.get(i).copied().unwrap_or(0.0), 0.0))
            .collect()
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    let mut out: Vec<f64> = fa.iter().take(len).map(|z| z.re * scale).collect();
    out.resize(len, 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_matches_direct() {
        for n in [2usize, 65, 300, 1000, 2049] {
            let c: Vec<f64> = (0..n).map(|k| 1.0 / (1.0 + k as f64).sqrt()).collect();
            let g: Vec<f64> = (0..n).map(|i| (0.01 * i as f64).cos()).collect();
            let d = solve(&c, &g, 0.3, 1.1, &[1.0], Method::Direct);
            let f = solve(&c, &g, 0.3, 1.1, &[1.0], Method::Fast);
            for (a, b) in d.iter().zip(&f) {
                assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "n={n}: {a} vs {b}");
            }
            // known prefix
            let pre = [1.0, 0.5, -0.25];
            let d = solve(&c, &g, 0.3, 1.1, &pre, Method::Direct);
            let f = solve(&c, &g, 0.3, 1.1, &pre, Method::Fast);
            for (a, b) in d.iter().zip(&f) {
                assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fft_convolution_matches_direct() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.5, -1.0];
        let c = convolve(&a, &b, 4);
        let expect = [0.5, 0.0, -0.5, -3.0];
        for (x, y) in c.iter().zip(expect) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
