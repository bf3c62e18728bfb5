//! Output rows: one [`ExperimentRecord`] per (level, trial, method), written as JSONL
//! (streamed) and CSV (sorted), plus the round-trip invariant check.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// CSV column order; fixed for a given [`SCHEMA_VERSION`].
pub const CSV_COLUMNS: [&str; 22] = [
    "schema_version",
    "experiment",
    "manifold",
    "base",
    "direction",
    "level",
    "trial",
    "method",
    "seed",
    "delta",
    "sigma",
    "epsilon",
    "order",
    "samples",
    "intensity",
    "w1",
    "chord",
    "kappa",
    "kappa_pred",
    "abs_err",
    "stderr",
    "runtime_ms",
];

/// One estimate. Deterministic methods produce a single row per level (trial 0);
/// sampling methods one row per trial, each with stderr 0 — the across-trial mean and
/// standard error go to the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub experiment: String,
    pub manifold: String,
    /// Intrinsic coordinates of x₀, `;`-separated.
    pub base: String,
    /// Ambient direction v, `;`-separated.
    pub direction: String,
    pub level: usize,
    pub trial: usize,
    pub method: String,
    pub seed: u64,
    pub delta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub order: usize,
    pub samples: usize,
    pub intensity: f64,
    pub w1: f64,
    /// ‖x₀ − y‖.
    pub chord: f64,
    /// 1 − w1/chord.
    pub kappa: f64,
    pub kappa_pred: f64,
    /// |kappa − kappa_pred|.
    pub abs_err: f64,
    pub stderr: f64,
    pub runtime_ms: f64,
}

pub fn join_coords(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";")
}

impl ExperimentRecord {
    /// Checks the relations every row must satisfy; returns the violated ones.
    pub fn validate(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, what: &str| {
            if !ok {
                bad.push(what.to_string());
            }
        };
        check(self.schema_version == SCHEMA_VERSION, "unknown schema_version");
        check(
            ["quadrature_T", "dual", "discrete_exact", "point_cloud"].contains(&self.method.as_str()),
            "unknown method",
        );
        check(self.delta > 0.0 && self.delta <= 1.0, "delta outside (0, 1]");
        check(self.sigma > 0.0 && self.epsilon > 0.0, "non-positive width");
        check(self.sigma.max(self.epsilon) <= 0.25 * self.delta, "σ ∨ ε exceeds δ/4");
        check(self.chord > 0.0 && self.chord <= self.delta * (1.0 + 1e-12), "chord outside (0, δ]");
        check(self.w1 >= 0.0 && self.w1.is_finite(), "w1 negative or not finite");
        check(self.kappa == 1.0 - self.w1 / self.chord, "kappa ≠ 1 − w1/chord");
        check(self.abs_err == (self.kappa - self.kappa_pred).abs(), "abs_err ≠ |kappa − kappa_pred|");
        check(self.stderr >= 0.0, "negative stderr");
        check(self.runtime_ms >= 0.0, "negative runtime");
        let deterministic = matches!(self.method.as_str(), "quadrature_T" | "dual");
        check(!deterministic || (self.trial == 0 && self.stderr == 0.0), "deterministic row with trial ≠ 0 or stderr ≠ 0");
        bad
    }

    /// Sort key of the CSV: (level, method, trial).
    pub fn sort_key(&self) -> (usize, String, usize) {
        (self.level, self.method.clone(), self.trial)
    }
}

/// Writes records as CSV with the fixed header.
pub fn write_csv<W: std::io::Write>(out: W, records: &[ExperimentRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>, String> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    if header != CSV_COLUMNS {
        return Err(format!("unexpected CSV header {header:?}"));
    }
    rd.deserialize().map(|r| r.map_err(|e| e.to_string())).collect()
}

pub fn read_jsonl<R: Read>(input: R) -> Result<Vec<ExperimentRecord>, String> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

/// Loads a `.csv` or `.jsonl` file.
pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>, String> {
    let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_csv(file),
        Some("jsonl") => read_jsonl(file),
        _ => Err(format!("{}: expected a .csv or .jsonl file", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentRecord {
        let (w1, chord, pred) = (0.39, 0.3973386615901225, 0.0123);
        let kappa = 1.0 - w1 / chord;
        ExperimentRecord {
            schema_version: SCHEMA_VERSION,
            experiment: "t".into(),
            manifold: "circle(R=1)".into(),
            base: join_coords(&[0.0]),
            direction: join_coords(&[0.0, 1.0]),
            level: 0,
            trial: 0,
            method: "dual".into(),
            seed: 7,
            delta: 0.4,
            sigma: 0.1,
            epsilon: 0.1,
            order: 8,
            samples: 400,
            intensity: 1e4,
            w1,
            chord,
            kappa,
            kappa_pred: pred,
            abs_err: (kappa - pred).abs(),
            stderr: 0.0,
            runtime_ms: 1.5,
        }
    }

    #[test]
    fn csv_and_jsonl_round_trip_exactly() {
        let recs = vec![sample(), ExperimentRecord { level: 1, w1: 0.1 / 3.0, kappa: 1.0 - (0.1 / 3.0) / 0.3973386615901225, ..sample() }];
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(read_csv(&buf[..]).unwrap(), recs);
        let jsonl: String = recs.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
        assert_eq!(read_jsonl(jsonl.as_bytes()).unwrap(), recs);
    }

    #[test]
    fn validation_flags_broken_rows() {
        assert!(sample().validate().is_empty());
        let broken = ExperimentRecord { w1: sample().w1 + 1e-15, ..sample() };
        assert_eq!(broken.validate(), vec!["kappa ≠ 1 − w1/chord".to_string()]);
        let wide = ExperimentRecord { sigma: 0.2, ..sample() };
        assert!(wide.validate().iter().any(|m| m.contains("δ/4")));
        let det = ExperimentRecord { trial: 3, ..sample() };
        assert_eq!(det.validate().len(), 1);
    }
}
