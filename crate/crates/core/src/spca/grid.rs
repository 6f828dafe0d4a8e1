use serde::{Deserialize, Serialize};

use crate::error::{CodaError, Result};

/// Number of sparsity levels in a stability sweep.
pub const GRID_POINTS: usize = 51;
/// Decades spanned below `alpha_max` by the positive grid points.
pub const GRID_DECADES: f64 = 4.0;

/// Ascending sparsity grid: an exact 0 followed by log-spaced values ending
/// at `alpha_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub values: Vec<f64>,
    pub alpha_max: f64,
}

impl AlphaGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The default 51-point grid.
pub fn make_grid(alpha_max: f64) -> Result<AlphaGrid> {
    make_grid_with(alpha_max, GRID_POINTS)
}

/// `points` values: 0, then `alpha_max * 10^(-4 (1 - t))` for
/// `t = 1/(points-1), ..., 1`.
pub fn make_grid_with(alpha_max: f64, points: usize) -> Result<AlphaGrid> {
    if !alpha_max.is_finite() || alpha_max <= 0.0 {
        return Err(CodaError::NonPositiveAlphaMax(alpha_max));
    }
    if points < 2 {
        return Err(CodaError::InvalidConfig(format!(
            "a grid needs at least 2 points, got {points}"
        )));
    }
    let last = points - 1;
    let mut values = Vec::with_capacity(points);
    values.push(0.0);
    for i in 1..last {
        let t = i as f64 / last as f64;
        values.push(alpha_max * 10f64.powf(-GRID_DECADES * (1.0 - t)));
    }
    values.push(alpha_max);
    Ok(AlphaGrid { values, alpha_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid() {
        let g = make_grid(1.0).unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(g.values[0], 0.0);
        assert_eq!(g.values[50], 1.0);
        assert!((g.values[1] - 10f64.powf(-3.92)).abs() < 1e-15);
        let r = g.values[2] / g.values[1];
        for w in g.values[1..].windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_positive() {
        assert_eq!(make_grid(0.0), Err(CodaError::NonPositiveAlphaMax(0.0)));
        assert!(make_grid(-1.0).is_err());
        assert!(make_grid(f64::NAN).is_err());
    }
}
