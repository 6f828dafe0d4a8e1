use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{
    ingest_csv, num, pair_label, render_svg, CliError, IngestOptions, InputArgs, SimulateArgs,
    StepArgs, Table,
};
use crate::coda::{plr_expand, CompositionMatrix, PlrMatrix};
use crate::simlab::{run_batch, BatchConfig, BatchResult, SEED_RULE};
use crate::stability::{compute_paths_with, parts_heatmap, FitMeta, StabilityReport};
use crate::step::{step_select, StepSelection};

const TOOL: &str = env!("CARGO_PKG_NAME");
const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files written by a command and any solver warnings. Warnings do not
/// stop the outputs from being written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Output files are rendered in memory first and written together; if any
/// write fails, the ones already written are removed.
struct Outputs {
    dir: PathBuf,
    files: Vec<(&'static str, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &'static str, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    fn csv(&mut self, name: &'static str, table: &Table) -> Result<(), CliError> {
        self.add(name, table.to_csv()?);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &'static str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Internal(format!("serializing {name}: {e}")))?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    fn svg(&mut self, name: &'static str, table: &Table, kind: &str) -> Result<(), CliError> {
        self.add(name, render_svg(table, kind)?.into_bytes());
        Ok(())
    }

    fn commit(self, warnings: Vec<String>) -> Result<Outcome, CliError> {
        let created_dir = !self.dir.exists();
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            if let Err(e) = std::fs::write(&path, bytes) {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                let _ = std::fs::remove_file(&path);
                if created_dir {
                    let _ = std::fs::remove_dir(&self.dir);
                }
                return Err(CliError::io(&path, e));
            }
            written.push(path);
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Outcome {
            files: written,
            warnings,
        })
    }
}

#[derive(Serialize)]
struct InputSummary<'a> {
    path: &'a Path,
    n: usize,
    d: usize,
    parts: &'a [String],
}

#[derive(Serialize)]
struct PathsMetadata<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    input: InputSummary<'a>,
    seed: u64,
    warm_start: bool,
    alpha_max: f64,
    grid: &'a [f64],
    fits: &'a [FitMeta],
}

fn load(input: &Path, id_column: bool) -> Result<(CompositionMatrix, PlrMatrix), CliError> {
    let x = ingest_csv(input, &IngestOptions { id_column })?;
    log::info!("read {} observations of {} parts from {}", x.n(), x.d(), input.display());
    let xp = plr_expand(&x, true);
    Ok((x, xp))
}

fn grid_header(first: &str, g_len: usize) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain((0..g_len).map(|g| format!("a{g}")))
        .collect()
}

fn fit_warnings(fits: &[FitMeta]) -> Vec<String> {
    fits.iter()
        .enumerate()
        .filter_map(|(g, f)| match (&f.error, f.converged) {
            (Some(e), _) => Some(format!("grid point {g} (alpha {}): fit failed: {e}", f.alpha)),
            (None, false) => Some(format!(
                "grid point {g} (alpha {}): no convergence after {} iterations",
                f.alpha, f.iterations
            )),
            _ => None,
        })
        .collect()
}

fn tradeoff_table(report: &StabilityReport) -> Table {
    let mut t = Table::new(["alpha", "pct_zero", "pct_exvar"]);
    for p in &report.tradeoff {
        t.push(vec![num(p.alpha), num(p.pct_zero), num(p.pct_exvar)]);
    }
    t
}

/// Logratios in stability order; with `step` given, a trailing column holds
/// each logratio's STEP rank (empty when STEP did not pick it).
fn stability_table(
    report: &StabilityReport,
    names: &[String],
    step: Option<&StepSelection>,
) -> Table {
    let mut header = grid_header("pair", report.grid_len());
    header.extend(["total".into(), "exvar".into()]);
    if step.is_some() {
        header.push("step".into());
    }
    let mut t = Table::new(header);
    for &m in &report.order {
        let (i, j) = report.pair_index.pair(m);
        let mut row = vec![pair_label(&names[i], &names[j])];
        row.extend(report.selected[m].iter().map(|&s| u8::from(s).to_string()));
        row.push(report.totals[m].to_string());
        row.push(num(report.exvar_single[m]));
        if let Some(s) = step {
            row.push(
                s.columns
                    .iter()
                    .position(|&c| c == m)
                    .map_or(String::new(), |r| (r + 1).to_string()),
            );
        }
        t.push(row);
    }
    t
}

fn parts_table(report: &StabilityReport, names: &[String]) -> Result<Table, CliError> {
    let heat = parts_heatmap(report, &report.pair_index)?;
    let mut t = Table::new(grid_header("part", report.grid_len()));
    for (name, counts) in names.iter().zip(&heat.counts) {
        let mut row = vec![name.clone()];
        row.extend(counts.iter().map(|c| c.to_string()));
        t.push(row);
    }
    Ok(t)
}

fn step_table(sel: &StepSelection, names: &[String]) -> Table {
    let mut t = Table::new(["rank", "pair", "cum_exvar"]);
    for (r, (&(i, j), &ev)) in sel.ratios.iter().zip(&sel.exvar_path).enumerate() {
        t.push(vec![(r + 1).to_string(), pair_label(&names[i], &names[j]), num(ev)]);
    }
    t
}

fn paths_outputs(
    args: &InputArgs,
    command: &'static str,
    with_step: bool,
) -> Result<Outcome, CliError> {
    let (x, xp) = load(&args.input, args.id_column)?;
    let opts = args.solver.path_options();
    let report = compute_paths_with(&xp, &opts)?;
    let step = if with_step {
        Some(step_select(&xp, x.d() - 1)?)
    } else {
        None
    };
    let names = x.part_names();

    let tradeoff = tradeoff_table(&report);
    let stability = stability_table(&report, names, step.as_ref());
    let parts = parts_table(&report, names)?;
    let meta = PathsMetadata {
        tool: TOOL,
        version: VERSION,
        command,
        config: args,
        input: InputSummary {
            path: &args.input,
            n: x.n(),
            d: x.d(),
            parts: names,
        },
        seed: opts.spca.seed,
        warm_start: report.warm_start,
        alpha_max: report.grid.alpha_max,
        grid: &report.grid.values,
        fits: &report.fit_meta,
    };

    let mut out = Outputs::new(&args.out);
    out.csv("tradeoff.csv", &tradeoff)?;
    out.csv("stability.csv", &stability)?;
    out.csv("parts.csv", &parts)?;
    if let Some(s) = &step {
        out.csv("step.csv", &step_table(s, names))?;
    }
    out.json("metadata.json", &meta)?;
    if args.svg {
        out.svg("tradeoff.svg", &tradeoff, "tradeoff")?;
        out.svg("stability.svg", &stability, "stability")?;
        out.svg("parts.svg", &parts, "parts")?;
    }
    out.commit(fit_warnings(&report.fit_meta))
}

/// Writes `tradeoff.csv`, `stability.csv`, `parts.csv` and `metadata.json`
/// (plus SVG figures with `--svg`).
pub fn cmd_paths(args: &InputArgs) -> Result<Outcome, CliError> {
    paths_outputs(args, "paths", false)
}

/// Everything `paths` writes plus `step.csv`; `stability.csv` gains a
/// `step` column with the STEP ranks.
pub fn cmd_analyze(args: &InputArgs) -> Result<Outcome, CliError> {
    paths_outputs(args, "analyze", true)
}

#[derive(Serialize)]
struct StepMetadata<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a StepArgs,
    input: InputSummary<'a>,
}

/// Writes `step.csv` (rank, pair, cumulative exvar) and `metadata.json`.
pub fn cmd_step(args: &StepArgs) -> Result<Outcome, CliError> {
    let (x, xp) = load(&args.input, args.id_column)?;
    let sel = step_select(&xp, x.d() - 1)?;
    let meta = StepMetadata {
        tool: TOOL,
        version: VERSION,
        command: "step",
        config: args,
        input: InputSummary {
            path: &args.input,
            n: x.n(),
            d: x.d(),
            parts: x.part_names(),
        },
    };
    let mut out = Outputs::new(&args.out);
    out.csv("step.csv", &step_table(&sel, x.part_names()))?;
    out.json("metadata.json", &meta)?;
    out.commit(Vec::new())
}

#[derive(Serialize)]
struct SimulateMetadata<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a SimulateArgs,
    batch: &'a BatchConfig,
    seed: u64,
    seed_rule: &'static str,
    rule: String,
    truth_size: usize,
    truth: &'a [usize],
}

#[derive(Serialize)]
struct AggregateFile<'a> {
    metadata: &'a SimulateMetadata<'a>,
    aggregate: &'a crate::simlab::Aggregate,
    failures: &'a [crate::simlab::RunFailure],
}

fn simulate_tables(res: &BatchResult) -> (Table, Table, Table, Table) {
    let mut runs = Table::new([
        "run",
        "alpha_max",
        "dense_exvar",
        "half_sparsity_index",
        "half_sparsity_drop",
        "spca_capture",
        "step_capture",
        "spca_rank_diff",
        "step_rank_diff",
        "all_converged",
    ]);
    for r in &res.runs {
        let last = |v: &[f64]| v.last().map_or(String::new(), |&x| num(x));
        let last_u = |v: &[u64]| v.last().map_or(String::new(), |x| x.to_string());
        runs.push(vec![
            r.run.to_string(),
            num(r.alpha_max),
            num(r.dense_exvar),
            r.half_sparsity_index.to_string(),
            num(r.half_sparsity_drop),
            last(&r.spca_capture),
            last(&r.step_capture),
            last_u(&r.spca_rank_diff),
            last_u(&r.step_rank_diff),
            r.all_converged.to_string(),
        ]);
    }

    let a = &res.aggregate;
    let mut capture = Table::new(["method", "t", "mean_capture"]);
    for (method, curve) in [("spca", &a.mean_spca_capture), ("step", &a.mean_step_capture)] {
        for (t, v) in curve.iter().enumerate() {
            capture.push(vec![method.into(), (t + 1).to_string(), num(*v)]);
        }
    }

    let mut rank = Table::new(["run", "method", "t", "rank_diff"]);
    for r in &res.runs {
        for (method, diffs) in [("spca", &r.spca_rank_diff), ("step", &r.step_rank_diff)] {
            for (t, v) in diffs.iter().enumerate() {
                rank.push(vec![r.run.to_string(), method.into(), (t + 1).to_string(), v.to_string()]);
            }
        }
    }

    let mut rates = Table::new([
        "grid_index",
        "mean_alpha",
        "fpr",
        "fnr",
        "pct_zero",
        "pct_exvar",
    ]);
    for g in 0..a.mean_fpr.len() {
        rates.push(vec![
            g.to_string(),
            num(a.mean_alpha[g]),
            num(a.mean_fpr[g]),
            num(a.mean_fnr[g]),
            num(a.mean_pct_zero[g]),
            num(a.mean_pct_exvar[g]),
        ]);
    }
    (runs, capture, rank, rates)
}

/// Writes `runs.csv`, `capture.csv`, `rank_diff.csv`, `fpr_fnr.csv`,
/// `aggregate.json` and `metadata.json` (plus `tradeoff.svg` with `--svg`).
pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let cfg = BatchConfig {
        scenario: args.scenario,
        d: args.dim,
        n: args.n,
        runs: args.runs,
        seed: args.solver.seed,
        rule: args.rule,
        paths: args.solver.path_options(),
    };
    let res = run_batch(&cfg)?;
    let meta = SimulateMetadata {
        tool: TOOL,
        version: VERSION,
        command: "simulate",
        config: args,
        batch: &cfg,
        seed: cfg.seed,
        seed_rule: SEED_RULE,
        rule: cfg.rule.to_string(),
        truth_size: res.truth.len(),
        truth: &res.truth.important,
    };
    let (runs, capture, rank, rates) = simulate_tables(&res);

    let mut out = Outputs::new(&args.out);
    out.csv("runs.csv", &runs)?;
    out.csv("capture.csv", &capture)?;
    out.csv("rank_diff.csv", &rank)?;
    out.csv("fpr_fnr.csv", &rates)?;
    out.json(
        "aggregate.json",
        &AggregateFile {
            metadata: &meta,
            aggregate: &res.aggregate,
            failures: &res.failures,
        },
    )?;
    out.json("metadata.json", &meta)?;
    if args.svg {
        let mut t = Table::new(["alpha", "pct_zero", "pct_exvar"]);
        for row in &rates.rows {
            t.push(vec![row[1].clone(), row[4].clone(), row[5].clone()]);
        }
        out.svg("tradeoff.svg", &t, "tradeoff")?;
    }

    let mut warnings: Vec<String> = res
        .failures
        .iter()
        .map(|f| format!("run {} failed: {}", f.run, f.error))
        .collect();
    warnings.extend(
        res.runs
            .iter()
            .filter(|r| !r.all_converged)
            .map(|r| format!("run {}: some grid fits did not converge", r.run)),
    );
    out.commit(warnings)
}
