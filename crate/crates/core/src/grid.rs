//! Uniform one-dimensional grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if n < 3 || !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::Config(format!("invalid grid [{x_lo}, {x_hi}] with {n} nodes")));
        }
        Ok(Self { x_lo, x_hi, n })
    }

    /// Grid on `[x_lo, x_hi]` with spacing `dx` (rounded so that the endpoints are nodes).
    pub fn with_spacing(x_lo: f64, x_hi: f64, dx: f64) -> Result<Self> {
        let cells = ((x_hi - x_lo) / dx).round() as usize;
        Self::new(x_lo, x_hi, cells + 1)
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_hi
        } else {
            self.x_lo + self.dx() * i as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi
    }

    /// Cell index `i` and fraction `t` with `x = (1 - t) x_i + t x_{i+1}`, clamped to the grid.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = ((x - self.x_lo) / self.dx()).clamp(0.0, (self.n - 1) as f64);
        let i = (s.floor() as usize).min(self.n - 2);
        (i, s - i as f64)
    }

    /// Linear interpolation of nodal `values`, clamped at the ends.
    pub fn interp(&self, values: &[f64], x: f64) -> f64 {
        let (i, t) = self.locate(x);
        values[i] + t * (values[i + 1] - values[i])
    }

    /// Node indices whose coordinates lie in `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
        let dx = self.dx();
        let a = ((lo - self.x_lo) / dx - 1e-9).ceil().max(0.0) as usize;
        let b = (((hi - self.x_lo) / dx + 1e-9).floor() as usize).min(self.n - 1);
        a..=b
    }

    /// Same spacing, extended by `left` and `right` on each side.
    pub fn extended(&self, left: f64, right: f64) -> Self {
        let dx = self.dx();
        let l = (left / dx).round();
        let r = (right / dx).round();
        Self {
            x_lo: self.x_lo - l * dx,
            x_hi: self.x_hi + r * dx,
            n: self.n + l as usize + r as usize,
        }
    }
}
