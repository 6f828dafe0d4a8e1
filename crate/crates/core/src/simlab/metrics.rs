use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::error::{CodaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRates {
    pub fpr: f64,
    pub fnr: f64,
    /// No unimportant logratios exist; `fpr` was set to 0.
    pub fpr_undefined: bool,
    /// No important logratios exist; `fnr` was set to 0.
    pub fnr_undefined: bool,
}

/// False-positive and false-negative rates of a selection among `m`
/// candidate logratios. Out-of-range indices in `selected` are an error.
pub fn fpr_fnr(selected: &[usize], truth: &GroundTruth, m: usize) -> Result<SelectionRates> {
    if truth.m != m {
        return Err(CodaError::LengthMismatch(format!(
            "ground truth over {} logratios, selection over {m}",
            truth.m
        )));
    }
    let important = truth.flags();
    let mut is_selected = vec![false; m];
    for &s in selected {
        if s >= m {
            return Err(CodaError::IndexOutOfRange { index: s, len: m });
        }
        is_selected[s] = true;
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&sel, &imp) in is_selected.iter().zip(&important) {
        match (sel, imp) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(SelectionRates {
        fpr: rate(fp, fp + tn),
        fnr: rate(fn_, fn_ + tp),
        fpr_undefined: fp + tn == 0,
        fnr_undefined: fn_ + tp == 0,
    })
}

/// Percentage of the important logratios found among the first `t` entries
/// of `ordered`, for `t = 1..=ordered.len()`. Repeated entries are an error.
pub fn capture_curve(ordered: &[usize], truth: &GroundTruth) -> Result<Vec<f64>> {
    if truth.is_empty() {
        return Err(CodaError::EmptyTruth);
    }
    let important = truth.flags();
    let total = truth.len() as f64;
    let mut seen = vec![false; important.len()];
    let mut hits = 0usize;
    ordered
        .iter()
        .map(|&c| {
            if c >= important.len() {
                return Err(CodaError::IndexOutOfRange {
                    index: c,
                    len: important.len(),
                });
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(CodaError::LengthMismatch(format!(
                    "logratio {c} appears twice in the ordering"
                )));
            }
            if important[c] {
                hits += 1;
            }
            Ok(100.0 * hits as f64 / total)
        })
        .collect()
}

/// Ranks (1-based) of all logratios by decreasing variance, ties in
/// canonical order.
pub fn variance_ranks(variances: &[f64]) -> Vec<usize> {
    let mut by_var: Vec<usize> = (0..variances.len()).collect();
    by_var.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; variances.len()];
    for (pos, &c) in by_var.iter().enumerate() {
        ranks[c] = pos + 1;
    }
    ranks
}

/// Cumulative variance-rank sum of `ordered` minus the ideal sum
/// `1 + 2 + ... + t`, for each prefix length `t`. Zero everywhere when
/// `ordered` follows decreasing variance exactly.
pub fn rank_difference(ordered: &[usize], variances: &[f64]) -> Result<Vec<u64>> {
    let m = variances.len();
    if ordered.len() > m {
        return Err(CodaError::LengthMismatch(format!(
            "{} ordered logratios but only {m} variances",
            ordered.len()
        )));
    }
    let ranks = variance_ranks(variances);
    let mut seen = vec![false; m];
    let mut cum = 0u64;
    ordered
        .iter()
        .enumerate()
        .map(|(t, &c)| {
            if c >= m {
                return Err(CodaError::IndexOutOfRange { index: c, len: m });
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(CodaError::LengthMismatch(format!(
                    "logratio {c} appears twice in the ordering"
                )));
            }
            cum += ranks[c] as u64;
            let ideal = ((t + 1) * (t + 2) / 2) as u64;
            Ok(cum - ideal)
        })
        .collect()
}
