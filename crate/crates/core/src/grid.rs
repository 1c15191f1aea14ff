use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform time grid `t_i = i * h`, `i = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: f64,
    h: f64,
    len: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("grid step must be positive, got {h}")));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(invalid(format!(
                "grid horizon must be positive, got {t_max}"
            )));
        }
        // Absorb round-off so that t_max = k*h gives exactly k+1 nodes.
        let steps = (t_max / h - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            t_max,
            h,
            len: steps + 1,
        })
    }

    /// Grid with `steps` intervals of width `h`.
    pub fn with_steps(h: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(invalid("grid needs at least one step"));
        }
        Self::new(h * steps as f64, h)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Number of nodes (>= 2).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Last node; may exceed `t_max` by less than one step.
    pub fn t_end(&self) -> f64 {
        self.t(self.len - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.t(i))
    }

    /// Same horizon, half the step.
    pub fn refined(&self) -> Self {
        Self {
            t_max: self.t_max,
            h: self.h / 2.0,
            len: 2 * (self.len - 1) + 1,
        }
    }

    /// Index of the node closest to `t`, if `t` lies on the grid span.
    pub fn nearest(&self, t: f64) -> Option<usize> {
        if t < -0.5 * self.h || t > self.t_end() + 0.5 * self.h {
            return None;
        }
        Some(((t / self.h).round() as usize).min(self.len - 1))
    }
}
