//! Sparse PCA by variable projection.
//!
//! Minimises
//!
//! ```text
//! 1/2 ||X - X B H^T||_F^2 + alpha ||B||_1 + 1/2 beta ||B||_F^2   s.t. H^T H = I
//! ```
//!
//! by alternating an exact orthogonal-Procrustes update of `H` with one
//! proximal-gradient sweep on `B` (step `1/L`, `L = lambda_max(X^T X)`).
//! Both half-steps are non-increasing in the objective, so the recorded trace
//! is monotone.

mod grid;

pub use grid::{make_grid, make_grid_with, AlphaGrid, GRID_DECADES, GRID_POINTS};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coda::PlrMatrix;
use crate::error::{CodaError, Result};
use crate::linalg::{gram_spectral_norm, top_right_singular_vectors, OrthoBasis};

const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITER: usize = 1000;
/// The power-iteration Rayleigh quotient approaches `lambda_max` from below;
/// inflating it keeps `1/L` a valid descent step.
const LIPSCHITZ_INFLATION: f64 = 1.0 + 1e-6;
/// Singular values of `(X^T X) B` below this fraction of the largest are
/// treated as zero by the Procrustes step.
const RANK_TOL: f64 = 1e-12;
/// Relative bisection width for `find_alpha_max`.
const ALPHA_MAX_RTOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpcaConfig {
    /// Number of components.
    pub k: usize,
    /// Weight of the l1 penalty.
    pub alpha: f64,
    /// Weight of the squared l2 penalty.
    pub beta: f64,
    pub max_iter: usize,
    /// Stop once the relative change of the objective drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SpcaConfig {
    fn default() -> Self {
        Self {
            k: 2,
            alpha: 0.0,
            beta: 1e-4,
            max_iter: 1000,
            tol: 1e-5,
            seed: 0,
        }
    }
}

impl SpcaConfig {
    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(CodaError::InvalidConfig(format!("alpha = {}", self.alpha)));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(CodaError::InvalidConfig(format!("beta = {}", self.beta)));
        }
        let k_max = n.saturating_sub(1).min(m);
        if self.k < 1 || self.k > k_max {
            return Err(CodaError::InvalidConfig(format!(
                "k = {} outside 1..={k_max}",
                self.k
            )));
        }
        if self.max_iter == 0 {
            return Err(CodaError::InvalidConfig("max_iter = 0".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(CodaError::InvalidConfig(format!("tol = {}", self.tol)));
        }
        Ok(())
    }
}

/// Result of one sparse PCA fit at a fixed `alpha`.
#[derive(Debug, Clone)]
pub struct SparsePcaFit {
    pub alpha: f64,
    pub beta: f64,
    /// `M × k` sparse loadings.
    pub b: DMatrix<f64>,
    /// `M × k` orthonormal factor.
    pub h: DMatrix<f64>,
    /// `n × k` scores, `X B`.
    pub z: DMatrix<f64>,
    /// Objective at the starting point, then after every iteration.
    pub objective_trace: Vec<f64>,
    pub exvar_pct: f64,
    /// Logratios with a nonzero loading in any component.
    pub nonzero_rows: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    /// Some Procrustes step met a rank-deficient `(X^T X) B`.
    pub rank_deficient: bool,
}

impl SparsePcaFit {
    pub fn is_all_zero(&self) -> bool {
        self.nonzero_rows.is_empty()
    }

    /// Per-logratio selection flags.
    pub fn selected(&self) -> Vec<bool> {
        let mut sel = vec![false; self.b.nrows()];
        for &r in &self.nonzero_rows {
            sel[r] = true;
        }
        sel
    }
}

/// Penalised reconstruction objective.
pub fn objective(
    xp: &PlrMatrix,
    b: &DMatrix<f64>,
    h: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let x = xp.values();
    let m = x.ncols();
    if b.nrows() != m || h.nrows() != m || b.ncols() != h.ncols() {
        return Err(CodaError::DimensionMismatch(format!(
            "X has {m} columns, B is {}x{}, H is {}x{}",
            b.nrows(),
            b.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    Ok(objective_unchecked(x, b, h, alpha, beta))
}

fn objective_unchecked(
    x: &DMatrix<f64>,
    b: &DMatrix<f64>,
    h: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
) -> f64 {
    let residual = x - (x * b) * h.transpose();
    let l1: f64 = b.iter().map(|v| v.abs()).sum();
    0.5 * residual.norm_squared() + alpha * l1 + 0.5 * beta * b.norm_squared()
}

/// Proximal operator of `step * (alpha |b| + beta b^2 / 2)`: soft
/// thresholding followed by ridge shrinkage.
pub fn prox_elastic_net(z: f64, step: f64, alpha: f64, beta: f64) -> f64 {
    let shrunk = z.abs() - step * alpha;
    if shrunk <= 0.0 {
        0.0
    } else {
        z.signum() * shrunk / (1.0 + step * beta)
    }
}

#[derive(Debug, Clone)]
pub struct ProcrustesStep {
    pub h: DMatrix<f64>,
    /// `(X^T X) B` had fewer than `k` nonzero singular values; the missing
    /// directions were completed with an arbitrary orthonormal complement.
    pub rank_deficient: bool,
}

/// Exact minimiser of the reconstruction term over orthonormal `H` for
/// fixed `B`: `H = U W^T` from the thin SVD of `(X^T X) B`.
pub fn update_h(xp: &PlrMatrix, b: &DMatrix<f64>) -> Result<ProcrustesStep> {
    let x = xp.values();
    if b.nrows() != x.ncols() {
        return Err(CodaError::DimensionMismatch(format!(
            "B has {} rows, X has {} columns",
            b.nrows(),
            x.ncols()
        )));
    }
    let a = x.transpose() * (x * b);
    Ok(procrustes(&a, None))
}

/// Orthonormal `H` maximising `tr(H^T A)`. Directions where `A` is rank
/// deficient are filled from `previous` (projected and re-orthogonalised),
/// then from unit vectors.
fn procrustes(a: &DMatrix<f64>, previous: Option<&DMatrix<f64>>) -> ProcrustesStep {
    let (m, k) = a.shape();
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let top = sv.iter().copied().fold(0.0_f64, f64::max);
    let kept: Vec<usize> = (0..sv.len())
        .filter(|&i| top > 0.0 && sv[i] > RANK_TOL * top)
        .collect();

    let mut h = DMatrix::zeros(m, k);
    for &i in &kept {
        h += u.column(i) * v_t.row(i);
    }
    if kept.len() == k {
        return ProcrustesStep {
            h,
            rank_deficient: false,
        };
    }

    let mut left = OrthoBasis::new(m);
    let mut right = OrthoBasis::new(k);
    for &i in &kept {
        left.push_direction(u.column(i).into_owned());
        right.push_direction(v_t.row(i).transpose());
    }
    let kept_left = left.rank();
    let kept_right = right.rank();
    let unit = |dim: usize, e: usize| nalgebra::DVector::from_fn(dim, |i, _| f64::from(i == e));
    for e in 0..k {
        if right.rank() == k {
            break;
        }
        right.push(&unit(k, e));
    }
    let need = k - kept.len();
    if let Some(prev) = previous {
        for c in prev.column_iter() {
            if left.rank() - kept_left == need {
                break;
            }
            left.push(&c.into_owned());
        }
    }
    for e in 0..m {
        if left.rank() - kept_left == need {
            break;
        }
        left.push(&unit(m, e));
    }
    for (uc, wc) in left.vectors()[kept_left..]
        .iter()
        .zip(&right.vectors()[kept_right..])
    {
        h += uc * wc.transpose();
    }
    ProcrustesStep {
        h,
        rank_deficient: true,
    }
}

/// Solver state shared by every fit on one data set: the Lipschitz constant
/// of the smooth part and the dense starting point.
#[derive(Debug, Clone)]
pub struct SparsePca<'a> {
    xp: &'a PlrMatrix,
    k: usize,
    lipschitz: f64,
    start: DMatrix<f64>,
}

impl<'a> SparsePca<'a> {
    pub fn new(xp: &'a PlrMatrix, k: usize, seed: u64) -> Result<Self> {
        if !xp.is_centered() {
            return Err(CodaError::NotCentered);
        }
        let probe = SpcaConfig {
            k,
            ..SpcaConfig::default()
        };
        probe.validate(xp.n(), xp.m())?;
        let x = xp.values();
        let lipschitz = gram_spectral_norm(x, POWER_TOL, POWER_MAX_ITER, seed) * LIPSCHITZ_INFLATION;
        let start = top_right_singular_vectors(x, k);
        Ok(Self {
            xp,
            k,
            lipschitz,
            start,
        })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn data(&self) -> &PlrMatrix {
        self.xp
    }

    /// One fit at `cfg.alpha`. `warm` supplies a starting `(B, H)`; otherwise
    /// both start at the top-`k` right singular vectors.
    pub fn fit(
        &self,
        cfg: &SpcaConfig,
        warm: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    ) -> Result<SparsePcaFit> {
        cfg.validate(self.xp.n(), self.xp.m())?;
        if cfg.k != self.k {
            return Err(CodaError::InvalidConfig(format!(
                "solver prepared for k = {}, config has k = {}",
                self.k, cfg.k
            )));
        }
        let x = self.xp.values();
        let m = x.ncols();
        let (alpha, beta) = (cfg.alpha, cfg.beta);

        if self.lipschitz == 0.0 {
            // No variability: B = 0 minimises every term.
            let b = DMatrix::zeros(m, self.k);
            let h = self.start.clone();
            let obj = objective_unchecked(x, &b, &h, alpha, beta);
            return Ok(self.finish(alpha, beta, b, h, vec![obj], true, 0, false));
        }

        let (mut b, mut h) = match warm {
            Some((b0, h0)) => {
                if b0.shape() != (m, self.k) || h0.shape() != (m, self.k) {
                    return Err(CodaError::DimensionMismatch(
                        "warm start does not match the problem".into(),
                    ));
                }
                (b0.clone(), h0.clone())
            }
            None => (self.start.clone(), self.start.clone()),
        };

        let step = 1.0 / self.lipschitz;
        let mut prev = objective_unchecked(x, &b, &h, alpha, beta);
        let mut trace = vec![prev];
        let mut converged = false;
        let mut rank_deficient = false;
        let mut iterations = 0;

        for it in 1..=cfg.max_iter {
            iterations = it;
            let grad = x.transpose() * (x * (&b - &h));
            b = (&b - grad * step).map(|z| prox_elastic_net(z, step, alpha, beta));

            let a = x.transpose() * (x * &b);
            let p = procrustes(&a, Some(&h));
            rank_deficient |= p.rank_deficient;
            h = p.h;

            let obj = objective_unchecked(x, &b, &h, alpha, beta);
            trace.push(obj);
            let change = (prev - obj).abs();
            let scale = prev.abs().max(f64::MIN_POSITIVE);
            prev = obj;
            if change <= cfg.tol * scale {
                converged = true;
                break;
            }
        }
        Ok(self.finish(alpha, beta, b, h, trace, converged, iterations, rank_deficient))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        alpha: f64,
        beta: f64,
        b: DMatrix<f64>,
        h: DMatrix<f64>,
        objective_trace: Vec<f64>,
        converged: bool,
        iterations: usize,
        rank_deficient: bool,
    ) -> SparsePcaFit {
        let z = self.xp.values() * &b;
        let nonzero_rows = b
            .row_iter()
            .enumerate()
            .filter(|(_, r)| r.iter().any(|&v| v != 0.0))
            .map(|(i, _)| i)
            .collect();
        let exvar_pct = score_span_exvar(self.xp, &z);
        SparsePcaFit {
            alpha,
            beta,
            b,
            h,
            z,
            objective_trace,
            exvar_pct,
            nonzero_rows,
            converged,
            iterations,
            rank_deficient,
        }
    }

    /// Smallest `alpha` (to 1% relative width) whose cold-started fit has all
    /// loadings exactly zero. Starts at the largest entry of `X^T X / n`,
    /// doubles or halves until the zero/nonzero boundary is bracketed, then
    /// bisects. Returns 0 for data without variability.
    pub fn alpha_max(&self, template: &SpcaConfig) -> Result<f64> {
        let x = self.xp.values();
        let n = x.nrows() as f64;
        let gram = x.transpose() * x;
        let a0 = gram.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())) / n;
        if a0 == 0.0 || self.lipschitz == 0.0 {
            return Ok(0.0);
        }
        let is_zero = |alpha: f64| -> Result<bool> {
            Ok(self.fit(&template.with_alpha(alpha), None)?.is_all_zero())
        };

        let (mut lo, mut hi);
        if is_zero(a0)? {
            hi = a0;
            lo = a0 / 2.0;
            let mut halvings = 0;
            while is_zero(lo)? {
                hi = lo;
                lo /= 2.0;
                halvings += 1;
                if halvings > 200 {
                    return Ok(hi);
                }
            }
        } else {
            lo = a0;
            hi = 2.0 * a0;
            while !is_zero(hi)? {
                lo = hi;
                hi *= 2.0;
            }
        }
        while hi - lo > ALPHA_MAX_RTOL * hi {
            let mid = 0.5 * (lo + hi);
            if is_zero(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Fits sparse PCA from a cold start.
pub fn fit(xp: &PlrMatrix, cfg: &SpcaConfig) -> Result<SparsePcaFit> {
    SparsePca::new(xp, cfg.k, cfg.seed)?.fit(cfg, None)
}

/// See [`SparsePca::alpha_max`].
pub fn find_alpha_max(xp: &PlrMatrix, template: &SpcaConfig) -> Result<f64> {
    SparsePca::new(xp, template.k, template.seed)?.alpha_max(template)
}

/// Percentage of the variability of `xp` captured by projecting onto the
/// span of the fitted scores. 0 when every score is zero.
pub fn explained_variance_k(xp: &PlrMatrix, fitted: &SparsePcaFit) -> Result<f64> {
    if fitted.z.nrows() != xp.n() {
        return Err(CodaError::DimensionMismatch(format!(
            "scores have {} rows, data has {}",
            fitted.z.nrows(),
            xp.n()
        )));
    }
    Ok(score_span_exvar(xp, &fitted.z))
}

fn score_span_exvar(xp: &PlrMatrix, z: &DMatrix<f64>) -> f64 {
    let x = xp.values();
    let mut basis = OrthoBasis::new(x.nrows());
    for c in z.column_iter() {
        basis.push(&c.into_owned());
    }
    crate::coda::captured_percentage(basis.captured(x), x.norm_squared())
}

#[cfg(test)]
mod tests;
