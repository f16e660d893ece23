//! Composite Simpson quadrature on uniform grids.

use crate::domain::UniformGrid;
use crate::error::{PricingError, Result};

/// Composite Simpson weights `h/3 * (1, 4, 2, 4, ..., 2, 4, 1)`.
pub fn simpson_weights(grid: &UniformGrid) -> Result<Vec<f64>> {
    let n = grid.intervals;
    if n < 2 || !n.is_multiple_of(2) {
        return Err(PricingError::BadGrid(format!(
            "Simpson's rule needs an even number of intervals, got {n}"
        )));
    }
    let h3 = grid.step / 3.0;
    Ok((0..=n)
        .map(|i| {
            if i == 0 || i == n {
                h3
            } else if i % 2 == 1 {
                4.0 * h3
            } else {
                2.0 * h3
            }
        })
        .collect())
}

/// Integrates `f` over the grid's range with composite Simpson.
pub fn simpson<F: Fn(f64) -> f64>(grid: &UniformGrid, f: F) -> Result<f64> {
    let weights = simpson_weights(grid)?;
    Ok(weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * f(grid.point(i)))
        .sum())
}
