//! Interpolation of samples on a uniform grid.
//!
//! The monotone cubic is the piecewise cubic Hermite scheme of Fritsch and
//! Carlson with Fritsch-Butland harmonic-mean slopes: it never overshoots
//! the data and is C1, which matters when interpolated second derivatives
//! feed an integral.

use serde::{Deserialize, Serialize};

use crate::domain::UniformGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    Linear,
    #[default]
    MonotoneCubic,
}

#[derive(Debug, Clone)]
pub struct UniformInterpolant {
    grid: UniformGrid,
    values: Vec<f64>,
    /// Hermite slopes per node, scaled by the step; empty for linear.
    scaled_slopes: Vec<f64>,
}

impl UniformInterpolant {
    /// Panics if `values` does not match the grid.
    pub fn new(grid: UniformGrid, values: Vec<f64>, kind: Interpolation) -> Self {
        assert_eq!(grid.len(), values.len(), "values must match grid");
        let scaled_slopes = match kind {
            Interpolation::Linear => Vec::new(),
            Interpolation::MonotoneCubic => pchip_slopes(&values),
        };
        Self {
            grid,
            values,
            scaled_slopes,
        }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `x`, or `None` outside the grid.
    pub fn eval(&self, x: f64) -> Option<f64> {
        if !self.grid.contains(x) {
            return None;
        }
        Some(self.eval_inside(x))
    }

    /// Value at `x`, which the caller guarantees lies inside the grid.
    #[inline]
    pub fn eval_inside(&self, x: f64) -> f64 {
        let pos = (x - self.grid.start) / self.grid.step;
        let last = self.grid.intervals;
        let i = (pos.floor().max(0.0) as usize).min(last.saturating_sub(1));
        let t = (pos - i as f64).clamp(0.0, 1.0);
        let y0 = self.values[i];
        let y1 = self.values[i + 1];
        if self.scaled_slopes.is_empty() {
            return y0 + t * (y1 - y0);
        }
        let m0 = self.scaled_slopes[i];
        let m1 = self.scaled_slopes[i + 1];
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }
}

/// Fritsch-Butland slopes in units of "change per grid step".
fn pchip_slopes(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let secants: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    if n == 2 {
        return vec![secants[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (secants[i - 1], secants[i]);
        if a * b > 0.0 {
            d[i] = 2.0 * a * b / (a + b);
        }
    }
    d[0] = end_slope(secants[0], secants[1]);
    d[n - 1] = end_slope(secants[n - 2], secants[n - 3]);
    d
}

/// Three-point end slope, limited to keep the end interval monotone.
fn end_slope(near: f64, far: f64) -> f64 {
    let d = (3.0 * near - far) / 2.0;
    if d * near <= 0.0 {
        0.0
    } else if near * far < 0.0 && d.abs() > 3.0 * near.abs() {
        3.0 * near
    } else {
        d
    }
}
