//! Stepwise ratio selection (STEP): greedy forward choice of up to `D - 1`
//! linearly independent pairwise logratios maximising the cumulative
//! explained variability.
//!
//! A set of pairwise logratios is linearly independent exactly when the
//! pairs, read as edges between parts, form a forest; a union-find over the
//! parts rejects any candidate that would close a cycle.

use crate::coda::{captured_percentage, PlrMatrix};
use crate::error::Result;
use crate::linalg::{captured_by_direction, OrthoBasis};

#[derive(Debug, Clone, PartialEq)]
pub struct StepSelection {
    /// Selected pairs `(i, j)`, `i < j`, in selection order.
    pub ratios: Vec<(usize, usize)>,
    /// Logratio column of each selected pair.
    pub columns: Vec<usize>,
    /// Cumulative explained variability (percent) after each selection.
    pub exvar_path: Vec<f64>,
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Joins the sets of `a` and `b`; `false` if they were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Greedy forward selection of at most `max_ratios` logratios (capped at
/// `D - 1`). Each step adds the acyclic candidate with the largest gain in
/// explained variability; ties go to the earlier pair. Stops early once no
/// candidate adds variability.
pub fn step_select(xp: &PlrMatrix, max_ratios: usize) -> Result<StepSelection> {
    let index = xp.pair_index();
    let d = index.parts();
    let limit = max_ratios.min(d.saturating_sub(1));
    let x = xp.values();
    let total = x.norm_squared();

    let mut forest = DisjointSets::new(d);
    let mut basis = OrthoBasis::new(xp.n());
    let mut chosen = vec![false; index.len()];
    let mut captured = 0.0;
    let mut selection = StepSelection {
        ratios: Vec::with_capacity(limit),
        columns: Vec::with_capacity(limit),
        exvar_path: Vec::with_capacity(limit),
    };

    while selection.columns.len() < limit {
        let mut best: Option<(usize, f64, nalgebra::DVector<f64>)> = None;
        for (c, &(i, j)) in index.pairs().iter().enumerate() {
            if chosen[c] || forest.find(i) == forest.find(j) {
                continue;
            }
            let Some(q) = basis.orthogonal_direction(&x.column(c).into_owned()) else {
                continue;
            };
            let gain = captured_by_direction(&q, x);
            if best.as_ref().is_none_or(|(_, g, _)| gain > *g) {
                best = Some((c, gain, q));
            }
        }
        let Some((c, gain, q)) = best else { break };
        if gain <= 0.0 {
            break;
        }
        let (i, j) = index.pair(c);
        forest.union(i, j);
        chosen[c] = true;
        basis.push_direction(q);
        captured += gain;
        selection.ratios.push((i, j));
        selection.columns.push(c);
        selection.exvar_path.push(captured_percentage(captured, total));
    }
    Ok(selection)
}
