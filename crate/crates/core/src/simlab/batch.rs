use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_scenario, capture_curve, fpr_fnr, generate_dataset_with, important_plrs,
    rank_difference, GroundTruth, ImportanceRule, Scenario, ScenarioId,
};
use crate::coda::plr_expand;
use crate::error::{CodaError, Result};
use crate::stability::{compute_paths_with, stability_order, PathOptions};
use crate::step::step_select;

/// How run `r` obtains its random stream; recorded in batch metadata.
pub const SEED_RULE: &str =
    "ChaCha20Rng::seed_from_u64(seed) with set_stream(run index), runs numbered from 0";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub scenario: ScenarioId,
    pub d: usize,
    pub n: usize,
    pub runs: usize,
    pub seed: u64,
    pub rule: ImportanceRule,
    pub paths: PathOptions,
}

impl BatchConfig {
    pub fn new(scenario: ScenarioId, d: usize, runs: usize, seed: u64) -> Self {
        Self {
            scenario,
            d,
            n: 100,
            runs,
            seed,
            rule: ImportanceRule::Strict,
            paths: PathOptions::default(),
        }
    }
}

/// Random stream for one run of a batch.
pub fn run_rng(seed: u64, run: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: usize,
    pub alpha_max: f64,
    pub alphas: Vec<f64>,
    pub fpr: Vec<f64>,
    pub fnr: Vec<f64>,
    pub pct_zero: Vec<f64>,
    pub pct_exvar: Vec<f64>,
    /// Capture curves over the first `D - 1` logratios.
    pub spca_capture: Vec<f64>,
    pub step_capture: Vec<f64>,
    pub spca_rank_diff: Vec<u64>,
    pub step_rank_diff: Vec<u64>,
    /// Explained variability of the unpenalised fit (first grid point).
    pub dense_exvar: f64,
    /// Grid point whose share of zero logratios is closest to 50%.
    pub half_sparsity_index: usize,
    /// `dense_exvar` minus the explained variability at that point.
    pub half_sparsity_drop: f64,
    pub all_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

/// Means over the successful runs, per grid point or per prefix length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub dense_exvar: MeanSd,
    pub half_sparsity_drop: MeanSd,
    pub alpha_max: MeanSd,
    pub mean_alpha: Vec<f64>,
    pub mean_fpr: Vec<f64>,
    pub mean_fnr: Vec<f64>,
    pub mean_pct_zero: Vec<f64>,
    pub mean_pct_exvar: Vec<f64>,
    pub mean_spca_capture: Vec<f64>,
    pub mean_step_capture: Vec<f64>,
    pub mean_spca_rank_diff: Vec<f64>,
    pub mean_step_rank_diff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub config: BatchConfig,
    pub seed_rule: String,
    pub truth: GroundTruth,
    pub runs: Vec<RunMetrics>,
    pub failures: Vec<RunFailure>,
    pub aggregate: Aggregate,
}

/// One simulated data set through the full pipeline.
pub fn simulate_run(
    sc: &Scenario,
    truth: &GroundTruth,
    cfg: &BatchConfig,
    run: usize,
) -> Result<RunMetrics> {
    let mut rng = run_rng(cfg.seed, run);
    let x = generate_dataset_with(sc, cfg.n, &mut rng)?;
    let xp = plr_expand(&x, true);
    let m = xp.m();
    let report = compute_paths_with(&xp, &cfg.paths)?;

    let mut fpr = Vec::with_capacity(report.grid_len());
    let mut fnr = Vec::with_capacity(report.grid_len());
    for g in 0..report.grid_len() {
        let rates = fpr_fnr(&report.selected_at(g), truth, m)?;
        fpr.push(rates.fpr);
        fnr.push(rates.fnr);
    }
    let pct_zero: Vec<f64> = report.tradeoff.iter().map(|t| t.pct_zero).collect();
    let pct_exvar: Vec<f64> = report.tradeoff.iter().map(|t| t.pct_exvar).collect();

    let top = sc.d - 1;
    let spca_order = stability_order(&report, top);
    let step = step_select(&xp, top)?;
    let variances = xp.column_variances()?;

    let dense_exvar = pct_exvar[0];
    let half_sparsity_index = pct_zero
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 50.0).abs().total_cmp(&(b.1 - 50.0).abs()))
        .map(|(g, _)| g)
        .unwrap_or(0);

    Ok(RunMetrics {
        run,
        alpha_max: report.grid.alpha_max,
        alphas: report.grid.values.clone(),
        fpr,
        fnr,
        spca_capture: capture_curve(&spca_order, truth)?,
        step_capture: capture_curve(&step.columns, truth)?,
        spca_rank_diff: rank_difference(&spca_order, &variances)?,
        step_rank_diff: rank_difference(&step.columns, &variances)?,
        dense_exvar,
        half_sparsity_index,
        half_sparsity_drop: dense_exvar - pct_exvar[half_sparsity_index],
        pct_zero,
        pct_exvar,
        all_converged: report.all_converged(),
    })
}

/// Runs `cfg.runs` independent simulations (in parallel on the current
/// rayon pool) and aggregates them. Failed runs are logged in `failures`
/// and excluded from the means.
pub fn run_batch(cfg: &BatchConfig) -> Result<BatchResult> {
    if cfg.runs == 0 {
        return Err(CodaError::InvalidConfig("runs must be at least 1".into()));
    }
    let sc = build_scenario(cfg.scenario, cfg.d)?;
    let truth = important_plrs(&sc, cfg.rule);
    if truth.is_empty() {
        return Err(CodaError::EmptyTruth);
    }
    let outcomes: Vec<Result<RunMetrics>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| simulate_run(&sc, &truth, cfg, run))
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (run, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => runs.push(r),
            Err(e) => {
                log::warn!("run {run} failed: {e}");
                failures.push(RunFailure {
                    run,
                    error: e.to_string(),
                });
            }
        }
    }
    let aggregate = aggregate(&runs, failures.len());
    Ok(BatchResult {
        config: *cfg,
        seed_rule: SEED_RULE.to_string(),
        truth,
        runs,
        failures,
        aggregate,
    })
}

fn mean_columns<T: Copy + Into<f64>>(rows: &[&[T]]) -> Vec<f64> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let len = first.len();
    (0..len)
        .map(|i| rows.iter().map(|r| r[i].into()).sum::<f64>() / rows.len() as f64)
        .collect()
}

fn aggregate(runs: &[RunMetrics], failed: usize) -> Aggregate {
    let col = |f: fn(&RunMetrics) -> &[f64]| mean_columns(&runs.iter().map(f).collect::<Vec<_>>());
    let rank = |f: fn(&RunMetrics) -> &[u64]| {
        let rows: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| f(r).iter().map(|&v| v as f64).collect())
            .collect();
        mean_columns(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>())
    };
    let scalar = |f: fn(&RunMetrics) -> f64| MeanSd::of(&runs.iter().map(f).collect::<Vec<_>>());
    Aggregate {
        runs_ok: runs.len(),
        runs_failed: failed,
        dense_exvar: scalar(|r| r.dense_exvar),
        half_sparsity_drop: scalar(|r| r.half_sparsity_drop),
        alpha_max: scalar(|r| r.alpha_max),
        mean_alpha: col(|r| &r.alphas),
        mean_fpr: col(|r| &r.fpr),
        mean_fnr: col(|r| &r.fnr),
        mean_pct_zero: col(|r| &r.pct_zero),
        mean_pct_exvar: col(|r| &r.pct_exvar),
        mean_spca_capture: col(|r| &r.spca_capture),
        mean_step_capture: col(|r| &r.step_capture),
        mean_spca_rank_diff: rank(|r| &r.spca_rank_diff),
        mean_step_rank_diff: rank(|r| &r.step_rank_diff),
    }
}
