//! Stability paths over the sparsity grid.
//!
//! Every grid point gets its own sparse PCA fit; a logratio counts as
//! selected at that point when its row of loadings is not entirely zero.
//! Logratios that survive to larger `alpha` are selected in more models and
//! rank higher.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coda::{exvar_of_subset, PairIndex, PlrMatrix};
use crate::error::{CodaError, Result};
use crate::spca::{make_grid_with, AlphaGrid, SparsePca, SparsePcaFit, SpcaConfig, GRID_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOptions {
    pub spca: SpcaConfig,
    pub grid_points: usize,
    /// Chain fits along the grid, each starting from the previous solution.
    /// When off, grid points are fitted independently (and in parallel).
    pub warm_start: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            spca: SpcaConfig::default(),
            grid_points: GRID_POINTS,
            warm_start: true,
        }
    }
}

impl PathOptions {
    pub fn with_spca(spca: SpcaConfig) -> Self {
        Self {
            spca,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub alpha: f64,
    pub converged: bool,
    pub iterations: usize,
    pub rank_deficient: bool,
    /// The warm-started fit was replaced by a cold-started one.
    pub cold_restart: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub alpha: f64,
    pub pct_zero: f64,
    pub pct_exvar: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub grid: AlphaGrid,
    pub pair_index: PairIndex,
    /// `selected[m][g]`: logratio `m` has a nonzero loading at grid point `g`.
    pub selected: Vec<Vec<bool>>,
    pub totals: Vec<usize>,
    /// Explained variability of each logratio on its own, in percent.
    pub exvar_single: Vec<f64>,
    /// Logratios by decreasing stability.
    pub order: Vec<usize>,
    pub tradeoff: Vec<TradeoffPoint>,
    pub fit_meta: Vec<FitMeta>,
    pub warm_start: bool,
}

impl StabilityReport {
    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    /// Indices of the logratios selected at grid point `g`.
    pub fn selected_at(&self, g: usize) -> Vec<usize> {
        self.selected
            .iter()
            .enumerate()
            .filter(|(_, row)| row[g])
            .map(|(m, _)| m)
            .collect()
    }

    pub fn all_converged(&self) -> bool {
        self.fit_meta.iter().all(|f| f.converged && f.error.is_none())
    }
}

/// Sweeps the sparsity grid with the default options for `cfg`.
pub fn compute_paths(xp: &PlrMatrix, cfg: &SpcaConfig) -> Result<StabilityReport> {
    compute_paths_with(xp, &PathOptions::with_spca(*cfg))
}

pub fn compute_paths_with(xp: &PlrMatrix, opts: &PathOptions) -> Result<StabilityReport> {
    let cfg = opts.spca;
    let solver = SparsePca::new(xp, cfg.k, cfg.seed)?;
    let alpha_max = solver.alpha_max(&cfg)?;
    let grid = make_grid_with(alpha_max, opts.grid_points)?;
    let m = xp.m();
    let g_len = grid.len();

    let outcomes: Vec<(Result<SparsePcaFit>, bool)> = if opts.warm_start {
        let mut out = Vec::with_capacity(g_len);
        let mut previous: Option<SparsePcaFit> = None;
        for (g, &alpha) in grid.values.iter().enumerate() {
            let c = cfg.with_alpha(alpha);
            let warm = previous.as_ref().map(|p| (&p.b, &p.h));
            let mut res = solver.fit(&c, warm);
            let mut cold = false;
            // The grid ends where a cold fit is fully sparse; keep that
            // endpoint even if the warm path has not reached it.
            if g == g_len - 1 && matches!(&res, Ok(f) if !f.is_all_zero()) {
                res = solver.fit(&c, None);
                cold = true;
            }
            if let Ok(f) = &res {
                previous = Some(f.clone());
            }
            out.push((res, cold));
        }
        out
    } else {
        grid.values
            .par_iter()
            .map(|&alpha| (solver.fit(&cfg.with_alpha(alpha), None), false))
            .collect()
    };

    let mut selected = vec![vec![false; g_len]; m];
    let mut tradeoff = Vec::with_capacity(g_len);
    let mut fit_meta = Vec::with_capacity(g_len);
    for (g, ((res, cold), &alpha)) in outcomes.into_iter().zip(&grid.values).enumerate() {
        match res {
            Ok(f) => {
                for &r in &f.nonzero_rows {
                    selected[r][g] = true;
                }
                tradeoff.push(TradeoffPoint {
                    alpha,
                    pct_zero: 100.0 * (m - f.nonzero_rows.len()) as f64 / m as f64,
                    pct_exvar: f.exvar_pct,
                });
                fit_meta.push(FitMeta {
                    alpha,
                    converged: f.converged,
                    iterations: f.iterations,
                    rank_deficient: f.rank_deficient,
                    cold_restart: cold,
                    error: None,
                });
            }
            Err(e) => {
                log::warn!("fit at alpha = {alpha} failed: {e}");
                tradeoff.push(TradeoffPoint {
                    alpha,
                    pct_zero: 100.0,
                    pct_exvar: 0.0,
                });
                fit_meta.push(FitMeta {
                    alpha,
                    converged: false,
                    iterations: 0,
                    rank_deficient: false,
                    cold_restart: cold,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    let totals: Vec<usize> = selected
        .iter()
        .map(|row| row.iter().filter(|&&s| s).count())
        .collect();
    let exvar_single = (0..m)
        .map(|c| exvar_of_subset(xp, &[c]))
        .collect::<Result<Vec<_>>>()?;
    let order = stability_permutation(&totals, &exvar_single);

    Ok(StabilityReport {
        grid,
        pair_index: xp.pair_index().clone(),
        selected,
        totals,
        exvar_single,
        order,
        tradeoff,
        fit_meta,
        warm_start: opts.warm_start,
    })
}

/// Selection count descending, then single-logratio exvar descending, then
/// canonical pair order.
fn stability_permutation(totals: &[usize], exvar: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..totals.len()).collect();
    order.sort_by(|&a, &b| {
        totals[b]
            .cmp(&totals[a])
            .then(exvar[b].total_cmp(&exvar[a]))
            .then(a.cmp(&b))
    });
    order
}

/// The `top` most stable logratios (all of them if `top` exceeds `M`).
pub fn stability_order(report: &StabilityReport, top: usize) -> Vec<usize> {
    report.order.iter().take(top).copied().collect()
}

/// Per-part counts of selected logratios containing the part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartsHeatmap {
    /// `counts[p][g]`.
    pub counts: Vec<Vec<usize>>,
}

pub fn parts_heatmap(report: &StabilityReport, pair_index: &PairIndex) -> Result<PartsHeatmap> {
    if pair_index.len() != report.selected.len() {
        return Err(CodaError::DimensionMismatch(format!(
            "{} pairs for {} selection rows",
            pair_index.len(),
            report.selected.len()
        )));
    }
    let g_len = report.grid_len();
    let mut counts = vec![vec![0usize; g_len]; pair_index.parts()];
    for (row, &(i, j)) in report.selected.iter().zip(pair_index.pairs()) {
        for (g, &s) in row.iter().enumerate() {
            if s {
                counts[i][g] += 1;
                counts[j][g] += 1;
            }
        }
    }
    Ok(PartsHeatmap { counts })
}

/// Percentage of zero logratios and of explained variability at each grid
/// point.
pub fn tradeoff_curve(report: &StabilityReport) -> Vec<TradeoffPoint> {
    report.tradeoff.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coda::{plr_expand, CompositionMatrix};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn data(seed: u64) -> PlrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DMatrix::from_fn(60, 6, |_, j| {
            let g: f64 = rng.sample(StandardNormal);
            ((0.4 + 0.3 * j as f64) * g).exp()
        });
        plr_expand(&CompositionMatrix::unnamed(v).unwrap(), true)
    }

    fn toy_report(selected: Vec<Vec<bool>>, exvar: Vec<f64>, d: usize) -> StabilityReport {
        let g_len = selected[0].len();
        let totals: Vec<usize> = selected.iter().map(|r| r.iter().filter(|&&s| s).count()).collect();
        let order = stability_permutation(&totals, &exvar);
        StabilityReport {
            grid: make_grid_with(1.0, g_len).unwrap(),
            pair_index: PairIndex::new(d),
            selected,
            totals,
            exvar_single: exvar,
            order,
            tradeoff: vec![],
            fit_meta: vec![],
            warm_start: true,
        }
    }

    #[test]
    fn endpoints_and_invariants() {
        let xp = data(3);
        let rep = compute_paths(&xp, &SpcaConfig::default()).unwrap();
        let m = xp.m();
        assert_eq!(rep.grid_len(), 51);
        assert!(rep.tradeoff[0].pct_zero <= 1.0);
        assert_eq!(rep.tradeoff[50].pct_zero, 100.0);
        assert_eq!(rep.tradeoff[50].pct_exvar, 0.0);
        assert_eq!(rep.selected_at(0).len(), m);
        assert!(rep.selected_at(50).is_empty());
        let dense = rep.tradeoff[0].pct_exvar;
        for t in &rep.tradeoff {
            assert!(t.pct_exvar <= dense + 1e-6);
        }
        for (row, &t) in rep.selected.iter().zip(&rep.totals) {
            assert_eq!(row.iter().filter(|&&s| s).count(), t);
        }
        let mut sorted = rep.order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..m).collect::<Vec<_>>());
        let heat = parts_heatmap(&rep, xp.pair_index()).unwrap();
        for g in 0..51 {
            let col: usize = heat.counts.iter().map(|r| r[g]).sum();
            assert_eq!(col, 2 * rep.selected_at(g).len());
            assert!(heat.counts.iter().all(|r| r[g] <= 5));
        }
    }

    #[test]
    fn cold_mode_also_reaches_both_endpoints() {
        let xp = data(4);
        let opts = PathOptions {
            warm_start: false,
            ..PathOptions::default()
        };
        let rep = compute_paths_with(&xp, &opts).unwrap();
        assert!(!rep.warm_start);
        assert_eq!(rep.selected_at(0).len(), xp.m());
        assert!(rep.selected_at(50).is_empty());
    }

    #[test]
    fn order_breaks_ties_by_exvar_then_index() {
        let sel = vec![
            vec![true, true, false],
            vec![true, true, true],
            vec![true, true, false],
        ];
        let rep = toy_report(sel, vec![1.0, 0.5, 2.0], 3);
        assert_eq!(rep.order, vec![1, 2, 0]);
        assert_eq!(stability_order(&rep, 2), vec![1, 2]);
        assert_eq!(stability_order(&rep, 3).len(), 3);

        let sel = vec![vec![true, false], vec![true, false], vec![true, false]];
        let rep = toy_report(sel, vec![1.0, 1.0, 1.0], 3);
        assert_eq!(rep.order, vec![0, 1, 2]);
    }

    #[test]
    fn single_selected_pair_in_heatmap() {
        // D = 4, pair (1, 3) has column index 4.
        let mut sel = vec![vec![false, false]; 6];
        sel[4][1] = true;
        let rep = toy_report(sel, vec![0.0; 6], 4);
        let heat = parts_heatmap(&rep, &PairIndex::new(4)).unwrap();
        assert_eq!(
            heat.counts.iter().map(|r| r[1]).collect::<Vec<_>>(),
            vec![0, 1, 0, 1]
        );
        assert!(heat.counts.iter().all(|r| r[0] == 0));
        assert!(parts_heatmap(&rep, &PairIndex::new(5)).is_err());
    }
}
