use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::{closed_exp, default_part_names, CompositionMatrix};
use crate::error::{CodaError, Result};

/// Sign matrix of a sequential binary partition: row `k` marks the parts in
/// the numerator (`+1`) and denominator (`-1`) of balance `k`; `0` means the
/// part does not take part in that balance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SbpSignMatrix {
    d: usize,
    signs: Vec<Vec<i8>>,
}

impl SbpSignMatrix {
    /// Checks the partition structure: `D - 1` rows over `{+1, -1, 0}`, the
    /// first row covering every part, and each later row splitting one group
    /// produced by an earlier row into two non-empty halves.
    pub fn new(signs: Vec<Vec<i8>>) -> Result<Self> {
        let d = signs.len() + 1;
        if d < 2 {
            return Err(CodaError::InvalidSbp("no balances".into()));
        }
        let mut groups: Vec<BTreeSet<usize>> = vec![(0..d).collect()];
        for (k, row) in signs.iter().enumerate() {
            if row.len() != d {
                return Err(CodaError::InvalidSbp(format!(
                    "row {} has {} entries, expected {d}",
                    k + 1,
                    row.len()
                )));
            }
            let mut plus = BTreeSet::new();
            let mut minus = BTreeSet::new();
            for (p, &s) in row.iter().enumerate() {
                match s {
                    1 => {
                        plus.insert(p);
                    }
                    -1 => {
                        minus.insert(p);
                    }
                    0 => {}
                    other => {
                        return Err(CodaError::InvalidSbp(format!(
                            "row {} has sign code {other}",
                            k + 1
                        )))
                    }
                }
            }
            if plus.is_empty() || minus.is_empty() {
                return Err(CodaError::InvalidSbp(format!(
                    "row {} needs both numerator and denominator parts",
                    k + 1
                )));
            }
            let support: BTreeSet<usize> = plus.union(&minus).copied().collect();
            let Some(g) = groups.iter().position(|g| *g == support) else {
                return Err(CodaError::InvalidSbp(format!(
                    "row {} does not split a group of the partition",
                    k + 1
                )));
            };
            groups.swap_remove(g);
            groups.push(plus);
            groups.push(minus);
        }
        Ok(Self { d, signs })
    }

    /// Parses rows written as strings over `+`, `-`, `0`.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let signs = rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                r.chars()
                    .map(|c| match c {
                        '+' => Ok(1),
                        '-' => Ok(-1),
                        '0' => Ok(0),
                        other => Err(CodaError::InvalidSbp(format!(
                            "row {} has character `{other}`",
                            k + 1
                        ))),
                    })
                    .collect::<Result<Vec<i8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(signs)
    }

    pub fn parts(&self) -> usize {
        self.d
    }

    pub fn balances(&self) -> usize {
        self.d - 1
    }

    pub fn sign(&self, balance: usize, part: usize) -> i8 {
        self.signs[balance][part]
    }

    pub fn row(&self, balance: usize) -> &[i8] {
        &self.signs[balance]
    }

    /// `(r_k, s_k)`: numbers of numerator and denominator parts of balance `k`.
    pub fn counts(&self, balance: usize) -> (usize, usize) {
        let row = &self.signs[balance];
        let r = row.iter().filter(|&&s| s == 1).count();
        let s = row.iter().filter(|&&s| s == -1).count();
        (r, s)
    }
}

/// `D × (D-1)` orthonormal balance contrast matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMatrix {
    v: DMatrix<f64>,
}

impl ContrastMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn parts(&self) -> usize {
        self.v.nrows()
    }
}

/// Balance contrasts: `+sqrt(s/(r(r+s)))` on the numerator parts and
/// `-sqrt(r/(s(r+s)))` on the denominator parts of each balance.
pub fn sbp_to_contrast(sbp: &SbpSignMatrix) -> ContrastMatrix {
    let d = sbp.parts();
    let mut v = DMatrix::zeros(d, d - 1);
    for k in 0..d - 1 {
        let (r, s) = sbp.counts(k);
        let (r, s) = (r as f64, s as f64);
        let pos = (s / (r * (r + s))).sqrt();
        let neg = -(r / (s * (r + s))).sqrt();
        for p in 0..d {
            v[(p, k)] = match sbp.sign(k, p) {
                1 => pos,
                -1 => neg,
                _ => 0.0,
            };
        }
    }
    ContrastMatrix { v }
}

/// Maps balance coordinates (`n × (D-1)`) back to closed compositions,
/// `closure(exp(V b))` row by row. Parts are named `x1..xD`.
pub fn balances_to_composition(
    balances: &DMatrix<f64>,
    contrast: &ContrastMatrix,
) -> Result<CompositionMatrix> {
    let v = contrast.matrix();
    if balances.ncols() != v.ncols() {
        return Err(CodaError::DimensionMismatch(format!(
            "{} balance columns for a {}-part contrast matrix",
            balances.ncols(),
            v.nrows()
        )));
    }
    let d = v.nrows();
    let mut out = DMatrix::zeros(balances.nrows(), d);
    for (i, b) in balances.row_iter().enumerate() {
        let clr: DVector<f64> = v * b.transpose();
        out.set_row(i, &closed_exp(&clr).transpose());
    }
    CompositionMatrix::new(out, default_part_names(d))
}

/// Forward balance transform `ln(x) V`.
pub fn composition_to_balances(
    x: &CompositionMatrix,
    contrast: &ContrastMatrix,
) -> Result<DMatrix<f64>> {
    let v = contrast.matrix();
    if x.d() != v.nrows() {
        return Err(CodaError::DimensionMismatch(format!(
            "{}-part composition for a {}-part contrast matrix",
            x.d(),
            v.nrows()
        )));
    }
    Ok(x.values().map(f64::ln) * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENARIO_A: [&str; 9] = [
        "+++++-----",
        "++++-00000",
        "+++-000000",
        "++-0000000",
        "+-00000000",
        "00000+----",
        "000000+---",
        "0000000+--",
        "00000000+-",
    ];

    #[test]
    fn two_part_contrast() {
        let s = SbpSignMatrix::from_rows(&["+-"]).unwrap();
        let v = sbp_to_contrast(&s);
        let h = 0.5f64.sqrt();
        assert!((v.matrix()[(0, 0)] - h).abs() < 1e-15);
        assert!((v.matrix()[(1, 0)] + h).abs() < 1e-15);
    }

    #[test]
    fn scenario_a_is_orthonormal() {
        let s = SbpSignMatrix::from_rows(&SCENARIO_A).unwrap();
        let v = sbp_to_contrast(&s);
        let vtv = v.matrix().transpose() * v.matrix();
        assert!((vtv - DMatrix::identity(9, 9)).abs().max() < 1e-12);
        for c in v.matrix().column_iter() {
            assert!(c.sum().abs() < 1e-12);
        }
    }

    #[test]
    fn two_versus_eight_coefficients() {
        let mut rows = vec!["++--------"];
        rows.extend_from_slice(&[
            "+-00000000",
            "00+-------",
            "000+------",
            "0000+-----",
            "00000+----",
            "000000+---",
            "0000000+--",
            "00000000+-",
        ]);
        let s = SbpSignMatrix::from_rows(&rows).unwrap();
        let v = sbp_to_contrast(&s);
        let pos = (8.0f64 / 20.0).sqrt();
        let neg = -(2.0f64 / 80.0).sqrt();
        assert!((pos - 0.632_455_532).abs() < 1e-9);
        assert!((neg + 0.158_113_883).abs() < 1e-9);
        assert!((v.matrix()[(0, 0)] - pos).abs() < 1e-15);
        assert!((v.matrix()[(9, 0)] - neg).abs() < 1e-15);
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        // First row does not cover every part.
        assert!(SbpSignMatrix::from_rows(&["+-0", "+0-"]).is_err());
        // Second row splits across the first split.
        assert!(SbpSignMatrix::from_rows(&["++-", "+0-"]).is_err());
        // Row without a denominator.
        assert!(SbpSignMatrix::from_rows(&["++", ]).is_err());
        // Wrong number of rows for the width.
        assert!(SbpSignMatrix::from_rows(&["+--", "0+-", "+00"]).is_err());
        assert!(SbpSignMatrix::from_rows(&["+x-", "0+-"]).is_err());
        assert!(SbpSignMatrix::from_rows(&["+--", "0+-"]).is_ok());
    }

    #[test]
    fn zero_balances_give_uniform_composition() {
        let s = SbpSignMatrix::from_rows(&SCENARIO_A).unwrap();
        let v = sbp_to_contrast(&s);
        let x = balances_to_composition(&DMatrix::zeros(1, 9), &v).unwrap();
        for p in 0..10 {
            assert!((x.values()[(0, p)] - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn two_part_back_transform() {
        let s = SbpSignMatrix::from_rows(&["+-"]).unwrap();
        let v = sbp_to_contrast(&s);
        let b = DMatrix::from_element(1, 1, 2f64.sqrt() * 2f64.ln());
        let x = balances_to_composition(&b, &v).unwrap();
        assert!((x.values()[(0, 0)] - 0.8).abs() < 1e-14);
        assert!((x.values()[(0, 1)] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let s = SbpSignMatrix::from_rows(&["+-"]).unwrap();
        let v = sbp_to_contrast(&s);
        assert!(matches!(
            balances_to_composition(&DMatrix::zeros(1, 2), &v),
            Err(CodaError::DimensionMismatch(_))
        ));
    }
}
