//! Executes a [`Plan`]: independent (level, trial, method) tasks on a worker pool,
//! with a single collector thread that streams JSONL in task order.

use crate::config::{ManifoldSpec, Plan};
use crate::records::{join_coords, write_csv, ExperimentRecord, SCHEMA_VERSION};
use extcurv::estimator::{coarse_curvature_in_experiment, mean_and_stderr, Method, StochasticPair};
use extcurv::vecops::loglog_slope;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::mpsc;
use std::time::Instant;

/// A failure while executing a plan (exit code 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RunError(pub String);

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "runtime error: {}", self.0)
    }
}

impl std::error::Error for RunError {}

#[derive(Debug, Clone, Copy)]
struct Task {
    level: usize,
    method: Method,
    trial: usize,
}

/// Across-trial statistics of one (level, method).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub level: usize,
    pub method: String,
    pub delta: f64,
    pub trials: usize,
    pub w1_mean: f64,
    pub kappa_mean: f64,
    /// Standard error of the mean over trials; 0 for deterministic methods.
    pub kappa_stderr: f64,
    pub kappa_pred: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: String,
    pub manifold: String,
    pub seed: u64,
    pub rows: usize,
    pub aggregates: Vec<Aggregate>,
    pub criteria: Vec<CriterionOutcome>,
    /// All enabled criteria passed (vacuously true when none are enabled).
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Records in CSV order: sorted by (level, method, trial).
    pub records: Vec<ExperimentRecord>,
    pub summary: Summary,
    pub out_dir: PathBuf,
}

fn tasks(plan: &Plan) -> Vec<Task> {
    let mut out = Vec::new();
    for level in 0..plan.levels.len() {
        for &method in &plan.methods {
            let trials = if method.is_stochastic() { plan.budget.trials } else { 1 };
            out.extend((0..trials).map(|trial| Task { level, method, trial }));
        }
    }
    out
}

fn method_index(m: Method) -> usize {
    Method::ALL.iter().position(|&x| x == m).unwrap()
}

/// Random streams of sampling methods are keyed by (level, method), so that levels
/// and methods draw independently.
fn experiment_key(level: usize, method: Method) -> u64 {
    (level * Method::ALL.len() + method_index(method)) as u64
}

/// Runs every task of the plan, writes `records.jsonl`, `records.csv` and
/// `summary.json` into the plan's output directory, and evaluates the criteria.
pub fn run(plan: &Plan, workers: usize) -> Result<RunOutcome, RunError> {
    let io = |e: std::io::Error| RunError(format!("{}: {e}", plan.out_dir.display()));
    std::fs::create_dir_all(&plan.out_dir).map_err(io)?;

    // Sampling segments are prepared once per (level, method).
    let mut pairs: BTreeMap<(usize, usize), StochasticPair> = BTreeMap::new();
    for (i, l) in plan.levels.iter().enumerate() {
        for &m in plan.methods.iter().filter(|m| m.is_stochastic()) {
            let pair = StochasticPair::new(&plan.model, &plan.x0, &plan.v, l.delta, l.sigma, l.epsilon, m, &plan.budget)
                .map_err(|e| RunError(format!("level {i}, {}: {e}", m.name())))?;
            pairs.insert((i, method_index(m)), pair);
        }
    }

    let tasks = tasks(plan);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError(e.to_string()))?;
    let jsonl = File::create(plan.out_dir.join("records.jsonl")).map_err(io)?;
    let (tx, rx) = mpsc::channel::<(usize, Result<ExperimentRecord, String>)>();

    let collected = std::thread::scope(|s| {
        let n = tasks.len();
        let collector = s.spawn(move || -> Result<Vec<ExperimentRecord>, RunError> {
            // Rows arrive in completion order and are written in task order.
            let mut out = BufWriter::new(jsonl);
            let mut pending: BTreeMap<usize, Result<ExperimentRecord, String>> = BTreeMap::new();
            let mut records = Vec::with_capacity(n);
            let mut first_error: Option<String> = None;
            let mut next = 0;
            for (i, r) in rx {
                pending.insert(i, r);
                while let Some(r) = pending.remove(&next) {
                    match r {
                        Ok(rec) if first_error.is_none() => {
                            let line = serde_json::to_string(&rec).map_err(|e| RunError(e.to_string()))?;
                            writeln!(out, "{line}").and_then(|_| out.flush()).map_err(|e| RunError(e.to_string()))?;
                            records.push(rec);
                        }
                        Ok(_) => {}
                        Err(e) => {
                            first_error.get_or_insert(e);
                        }
                    }
                    next += 1;
                }
            }
            match first_error {
                Some(e) => Err(RunError(e)),
                None if records.len() == n => Ok(records),
                None => Err(RunError(format!("only {} of {n} tasks reported", records.len()))),
            }
        });
        pool.install(|| {
            tasks.par_iter().enumerate().for_each_with(tx, |tx, (i, t)| {
                let _ = tx.send((i, execute(plan, &pairs, t)));
            })
        });
        collector.join().expect("collector thread panicked")
    });
    let mut records = collected?;

    records.sort_by_key(|r| r.sort_key());
    let csv = File::create(plan.out_dir.join("records.csv")).map_err(io)?;
    write_csv(BufWriter::new(csv), &records).map_err(|e| RunError(e.to_string()))?;

    let summary = summarize(plan, &records);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| RunError(e.to_string()))?;
    std::fs::write(plan.out_dir.join("summary.json"), text + "\n").map_err(io)?;
    Ok(RunOutcome { records, summary, out_dir: plan.out_dir.clone() })
}

fn execute(plan: &Plan, pairs: &BTreeMap<(usize, usize), StochasticPair>, t: &Task) -> Result<ExperimentRecord, String> {
    let l = &plan.levels[t.level];
    let start = Instant::now();
    let err = |e: extcurv::Error| format!("level {}, {}, trial {}: {e}", t.level, t.method.name(), t.trial);
    let (w1, chord, kappa) = if t.method.is_stochastic() {
        let pair = &pairs[&(t.level, method_index(t.method))];
        let w1 = pair.trial_w1(plan.seed, experiment_key(t.level, t.method), t.trial as u64).map_err(err)?;
        (w1, pair.chord(), 1.0 - w1 / pair.chord())
    } else {
        let est = coarse_curvature_in_experiment(
            &plan.model,
            &plan.x0,
            &plan.v,
            l.delta,
            l.sigma,
            l.epsilon,
            t.method,
            &plan.budget,
            plan.seed,
            t.level as u64,
        )
        .map_err(err)?;
        (est.w1, est.chord, est.kappa)
    };
    Ok(ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        experiment: plan.name.clone(),
        manifold: plan.model.label(),
        base: join_coords(&plan.intrinsic),
        direction: join_coords(plan.v.as_slice()),
        level: t.level,
        trial: t.trial,
        method: t.method.name().to_string(),
        seed: plan.seed,
        delta: l.delta,
        sigma: l.sigma,
        epsilon: l.epsilon,
        order: plan.budget.order,
        samples: plan.budget.samples,
        intensity: plan.budget.intensity,
        w1,
        chord,
        kappa,
        kappa_pred: l.kappa_pred,
        abs_err: (kappa - l.kappa_pred).abs(),
        stderr: 0.0,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Per-(level, method) aggregates in (level, method) order.
pub fn aggregate(records: &[ExperimentRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(usize, String), Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.level, r.method.clone())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((level, method), rows)| {
            let kappas: Vec<f64> = rows.iter().map(|r| r.kappa).collect();
            let w1s: Vec<f64> = rows.iter().map(|r| r.w1).collect();
            let (kappa_mean, kappa_stderr) = mean_and_stderr(&kappas);
            Aggregate {
                level,
                method,
                delta: rows[0].delta,
                trials: rows.len(),
                w1_mean: mean_and_stderr(&w1s).0,
                kappa_mean,
                kappa_stderr,
                kappa_pred: rows[0].kappa_pred,
            }
        })
        .collect()
}

/// 2R² sin(δ/2R)·sin(ε/R)/ε·(1 + σ²/3R²): W₁ between the circle's tube measures.
pub fn circle_closed_form(radius: f64, delta: f64, sigma: f64, epsilon: f64) -> f64 {
    let r2 = radius * radius;
    2.0 * r2 * (delta / (2.0 * radius)).sin() * (epsilon / radius).sin() / epsilon * (1.0 + sigma * sigma / (3.0 * r2))
}

/// Evaluates the plan's enabled criteria on finished records.
pub fn evaluate_criteria(plan: &Plan, records: &[ExperimentRecord]) -> Vec<CriterionOutcome> {
    let aggregates = aggregate(records);
    let mut out = Vec::new();
    let c = &plan.criteria;
    if let (Some(cf), ManifoldSpec::Circle { radius }) = (c.circle_closed_form, &plan.manifold) {
        let det: Vec<_> = records.iter().filter(|r| matches!(r.method.as_str(), "quadrature_T" | "dual")).collect();
        let worst = det
            .iter()
            .map(|r| {
                let exact = circle_closed_form(*radius, r.delta, r.sigma, r.epsilon);
                (r.w1 - exact).abs() / exact
            })
            .fold(0.0f64, f64::max);
        out.push(CriterionOutcome {
            name: "circle_closed_form".into(),
            pass: !det.is_empty() && worst <= cf.rel_tol,
            detail: format!("max relative deviation {worst:.3e} over {} deterministic rows (tolerance {:e})", det.len(), cf.rel_tol),
        });
    }
    if let Some(pb) = c.kappa_power_bound {
        let worst = aggregates
            .iter()
            .map(|a| a.kappa_mean.abs() / (pb.c * a.delta.powf(pb.power)))
            .fold(0.0f64, f64::max);
        out.push(CriterionOutcome {
            name: "kappa_power_bound".into(),
            pass: worst <= 1.0,
            detail: format!("max |κ|/({:e}·δ^{}) = {worst:.4} over {} (level, method) means", pb.c, pb.power, aggregates.len()),
        });
    }
    if let Some(sc) = c.remainder_slope {
        let mut slopes = Vec::new();
        let mut parts = Vec::new();
        for m in &plan.methods {
            let rows: Vec<_> = aggregates.iter().filter(|a| a.method == m.name()).collect();
            let deltas: Vec<f64> = rows.iter().map(|a| a.delta).collect();
            let errs: Vec<f64> = rows.iter().map(|a| (a.kappa_mean - a.kappa_pred).abs()).collect();
            let slope = loglog_slope(&deltas, &errs);
            slopes.push(slope);
            parts.push(format!("{} {slope:.3}", m.name()));
        }
        out.push(CriterionOutcome {
            name: "remainder_slope".into(),
            pass: !slopes.is_empty() && slopes.iter().all(|s| *s >= sc.min),
            detail: format!("log-log slope of |κ − κ_pred|: {} (minimum {})", parts.join(", "), sc.min),
        });
    }
    out
}

fn summarize(plan: &Plan, records: &[ExperimentRecord]) -> Summary {
    let criteria = evaluate_criteria(plan, records);
    Summary {
        schema_version: SCHEMA_VERSION,
        experiment: plan.name.clone(),
        manifold: plan.model.label(),
        seed: plan.seed,
        rows: records.len(),
        aggregates: aggregate(records),
        pass: criteria.iter().all(|c| c.pass),
        criteria,
    }
}
