//! Compositional data types and transforms.
//!
//! A composition only carries relative information, so everything here is
//! expressed through logratios: the full set of pairwise logratios (PLRs)
//! used by the sparse PCA, and the balance coordinates of a sequential
//! binary partition used to simulate data.

mod plr;
mod sbp;

pub use plr::{exvar_of_subset, plr_expand, total_variance, PairIndex, PlrMatrix};
pub(crate) use plr::captured_percentage;
pub use sbp::{
    balances_to_composition, composition_to_balances, sbp_to_contrast, ContrastMatrix,
    SbpSignMatrix,
};

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{CodaError, Result};

/// `n × D` matrix of strictly positive parts with one name per part.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionMatrix {
    values: DMatrix<f64>,
    part_names: Vec<String>,
}

impl CompositionMatrix {
    /// Validates a raw matrix: at least two parts and one row, unique part
    /// names, every entry strictly positive and finite.
    pub fn new(values: DMatrix<f64>, part_names: Vec<String>) -> Result<Self> {
        let d = values.ncols();
        if d < 2 {
            return Err(CodaError::TooFewParts(d));
        }
        if values.nrows() == 0 {
            return Err(CodaError::NoObservations);
        }
        if part_names.len() != d {
            return Err(CodaError::DimensionMismatch(format!(
                "{} part names for {} columns",
                part_names.len(),
                d
            )));
        }
        let mut seen = HashSet::with_capacity(d);
        for name in &part_names {
            if !seen.insert(name.as_str()) {
                return Err(CodaError::DuplicatePartName(name.clone()));
            }
        }
        for row in 0..values.nrows() {
            for col in 0..d {
                let v = values[(row, col)];
                if !v.is_finite() || v <= 0.0 {
                    return Err(CodaError::NonPositiveEntry { row, col, value: v });
                }
            }
        }
        Ok(Self { values, part_names })
    }

    /// Same as [`CompositionMatrix::new`] with generated names `x1..xD`.
    pub fn unnamed(values: DMatrix<f64>) -> Result<Self> {
        let names = default_part_names(values.ncols());
        Self::new(values, names)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn part_names(&self) -> &[String] {
        &self.part_names
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of parts.
    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    /// Every row rescaled to unit sum.
    pub fn closed(&self) -> Self {
        let mut values = self.values.clone();
        for mut row in values.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        Self {
            values,
            part_names: self.part_names.clone(),
        }
    }
}

/// Builds a validated composition from row vectors.
pub fn validate_composition(rows: &[Vec<f64>], names: &[String]) -> Result<CompositionMatrix> {
    let expected = names.len();
    for (row, r) in rows.iter().enumerate() {
        if r.len() != expected {
            return Err(CodaError::Ragged {
                row,
                expected,
                found: r.len(),
            });
        }
    }
    let values = DMatrix::from_fn(rows.len(), expected, |i, j| rows[i][j]);
    CompositionMatrix::new(values, names.to_vec())
}

pub fn default_part_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

/// Rescales a positive vector to unit sum.
pub fn closure(x: &[f64]) -> Result<Vec<f64>> {
    for (col, &v) in x.iter().enumerate() {
        if !v.is_finite() || v <= 0.0 {
            return Err(CodaError::NonPositiveEntry { row: 0, col, value: v });
        }
    }
    let s: f64 = x.iter().sum();
    Ok(x.iter().map(|v| v / s).collect())
}

/// `closure(exp(v))`, shifted by `max(v)` so large log-values do not overflow.
pub(crate) fn closed_exp(v: &DVector<f64>) -> DVector<f64> {
    let shift = v.max();
    let e = v.map(|t| (t - shift).exp());
    let s = e.sum();
    e / s
}
