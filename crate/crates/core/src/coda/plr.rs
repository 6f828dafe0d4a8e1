use nalgebra::{DMatrix, DVector};

use super::CompositionMatrix;
use crate::error::{CodaError, Result};
use crate::linalg::OrthoBasis;

/// Canonical enumeration of the unordered part pairs `(i, j)`, `i < j`,
/// in lexicographic order. Column `k` of a [`PlrMatrix`] holds
/// `ln(x_i / x_j)` for `pairs()[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIndex {
    d: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndex {
    pub fn new(d: usize) -> Self {
        let mut pairs = Vec::with_capacity(d * d.saturating_sub(1) / 2);
        for i in 0..d {
            for j in (i + 1)..d {
                pairs.push((i, j));
            }
        }
        Self { d, pairs }
    }

    pub fn parts(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, column: usize) -> (usize, usize) {
        self.pairs[column]
    }

    /// Column holding the logratio of parts `a` and `b`, in either
    /// orientation. `None` for `a == b` or out-of-range parts.
    pub fn position(&self, a: usize, b: usize) -> Option<usize> {
        if a == b || a >= self.d || b >= self.d {
            return None;
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        Some(i * (2 * self.d - i - 1) / 2 + (j - i - 1))
    }
}

/// Matrix of all `D(D-1)/2` pairwise logratios of a composition.
#[derive(Debug, Clone, PartialEq)]
pub struct PlrMatrix {
    values: DMatrix<f64>,
    pair_index: PairIndex,
    column_means: DVector<f64>,
    centered: bool,
}

impl PlrMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn pair_index(&self) -> &PairIndex {
        &self.pair_index
    }

    /// Means removed during centering (zeros for an uncentered matrix).
    pub fn column_means(&self) -> &DVector<f64> {
        &self.column_means
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of logratio columns, `D(D-1)/2`.
    pub fn m(&self) -> usize {
        self.values.ncols()
    }

    /// Logratios of new observations, centered with this matrix's stored
    /// column means.
    pub fn project(&self, x: &CompositionMatrix) -> Result<DMatrix<f64>> {
        if x.d() != self.pair_index.parts() {
            return Err(CodaError::DimensionMismatch(format!(
                "composition has {} parts, logratio matrix was built from {}",
                x.d(),
                self.pair_index.parts()
            )));
        }
        let mut raw = raw_logratios(x, &self.pair_index);
        for (mut col, mean) in raw.column_iter_mut().zip(self.column_means.iter()) {
            col.add_scalar_mut(-mean);
        }
        Ok(raw)
    }

    /// Sample variance (divisor `n - 1`) of every column.
    pub fn column_variances(&self) -> Result<Vec<f64>> {
        let n = self.n();
        if n < 2 {
            return Err(CodaError::DegenerateSample(n));
        }
        Ok(self
            .values
            .column_iter()
            .map(|c| {
                let mean = c.mean();
                c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            })
            .collect())
    }
}

fn raw_logratios(x: &CompositionMatrix, index: &PairIndex) -> DMatrix<f64> {
    let v = x.values();
    DMatrix::from_fn(x.n(), index.len(), |r, k| {
        let (i, j) = index.pair(k);
        (v[(r, i)] / v[(r, j)]).ln()
    })
}

/// Expands a composition into its pairwise logratios, `ln(x_i / x_j)` for
/// every `i < j`, optionally column-centered.
pub fn plr_expand(x: &CompositionMatrix, center: bool) -> PlrMatrix {
    let pair_index = PairIndex::new(x.d());
    let mut values = raw_logratios(x, &pair_index);
    let m = pair_index.len();
    let mut column_means = DVector::zeros(m);
    if center {
        for (k, mut col) in values.column_iter_mut().enumerate() {
            // Shifted mean: exact for constant columns.
            let first = col[0];
            let mean = first + col.iter().map(|v| v - first).sum::<f64>() / col.len() as f64;
            col.add_scalar_mut(-mean);
            column_means[k] = mean;
        }
    }
    PlrMatrix {
        values,
        pair_index,
        column_means,
        centered: center,
    }
}

/// Total variance of a centered logratio matrix: `||X||_F^2 / (n - 1)`,
/// the sum of the column variances.
pub fn total_variance(xp: &PlrMatrix) -> Result<f64> {
    let n = xp.n();
    if n < 2 {
        return Err(CodaError::DegenerateSample(n));
    }
    if !xp.is_centered() {
        return Err(CodaError::NotCentered);
    }
    Ok(xp.values().norm_squared() / (n - 1) as f64)
}

/// Percentage of the total variability of `xp` captured by the orthogonal
/// projection onto the span of the selected columns.
///
/// Returns 0 for a matrix with no variability.
pub fn exvar_of_subset(xp: &PlrMatrix, cols: &[usize]) -> Result<f64> {
    if cols.is_empty() {
        return Err(CodaError::EmptySubset);
    }
    let m = xp.m();
    let x = xp.values();
    let mut basis = OrthoBasis::new(xp.n());
    for &c in cols {
        if c >= m {
            return Err(CodaError::IndexOutOfRange { index: c, len: m });
        }
        basis.push(&x.column(c).into_owned());
    }
    Ok(captured_percentage(basis.captured(x), x.norm_squared()))
}

pub(crate) fn captured_percentage(captured: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    (100.0 * captured / total).clamp(0.0, 100.0)
}
