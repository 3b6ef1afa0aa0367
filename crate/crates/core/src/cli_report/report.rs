//! Output files of a run: `report.json`, `data.csv` and `meta.json`.
//!
//! `report.json` holds only deterministic content, so identical runs give
//! identical bytes. Wall-clock information goes to `meta.json`. Every
//! number of `data.csv` is also stored in `report.json` (under `table`),
//! written with the same shortest round-trip formatting.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::experiments::{DecayReport, SweepReport};
use crate::geometry::{CylinderFamily, Status};

use super::suites::SuiteReport;

/// Rectangular numeric data, one row per CSV line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Formats like `serde_json`: shortest round-trip digits, `null` for
/// non-finite values.
pub fn format_number(x: f64) -> String {
    serde_json::to_string(&x).expect("f64 always serializes")
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub result: Value,
    pub table: Table,
    /// Whether the run met its own pass criteria (validation suites) or
    /// completed (other commands).
    pub ok: bool,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub command: String,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub elapsed_seconds: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl Meta {
    pub fn finish(command: &str, started_unix: f64) -> Self {
        let finished_unix = unix_now();
        Meta {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix,
            finished_unix,
            elapsed_seconds: finished_unix - started_unix,
        }
    }
}

/// Writes the three output files into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, report: &Report, meta: &Meta) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json()?)?;
    std::fs::write(dir.join("data.csv"), report.table.to_csv())?;
    let mut m = serde_json::to_string_pretty(meta)?;
    m.push('\n');
    std::fs::write(dir.join("meta.json"), m)?;
    Ok(())
}

/// One row per sweep point: the fixed columns followed by the union of
/// the `extra` keys (missing entries are NaN).
pub fn sweep_table(rep: &SweepReport) -> Table {
    let mut extras: Vec<&String> = rep.points.iter().flat_map(|pt| pt.extra.keys()).collect();
    extras.sort();
    extras.dedup();
    let mut cols = vec!["control", "cells", "measured", "rhs", "constant"];
    cols.extend(extras.iter().map(|s| s.as_str()));
    let mut t = Table::new(&cols);
    for pt in &rep.points {
        let mut row = vec![
            pt.control,
            pt.cells as f64,
            pt.measured,
            pt.rhs,
            pt.constant,
        ];
        row.extend(
            extras
                .iter()
                .map(|k| pt.extra.get(*k).copied().unwrap_or(f64::NAN)),
        );
        t.push(row);
    }
    t
}

/// One row per seed and ladder level `theta`; skipped seeds give a single
/// row of NaN measurements.
pub fn decay_table(reps: &[DecayReport]) -> Table {
    let mut t = Table::new(&["seed", "theta", "phi", "osc", "alpha_hat", "r2", "harnack"]);
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(f64::NAN);
    for r in reps {
        let (alpha, r2) = r.fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r2));
        let rows = r.thetas.len().max(r.phi.len()).max(r.osc.len()).max(1);
        for i in 0..rows {
            t.push(vec![
                r.seed as f64,
                at(&r.thetas, i),
                at(&r.phi, i),
                at(&r.osc, i),
                alpha,
                r2,
                r.harnack,
            ]);
        }
    }
    t
}

/// Status code of a ladder cylinder: -1 sub, 0 intrinsic, 1 super.
pub fn status_code(s: Status) -> f64 {
    match s {
        Status::Sub => -1.0,
        Status::Intrinsic => 0.0,
        Status::Super => 1.0,
    }
}

pub fn family_table(fam: &CylinderFamily, k: f64) -> Table {
    let mut t = Table::new(&[
        "r",
        "s_tilde",
        "s",
        "lambda",
        "mean_power",
        "ratio",
        "status",
    ]);
    for j in 0..fam.len() {
        let cl = fam.class(j, k);
        t.push(vec![
            fam.radii[j],
            fam.s_tilde[j],
            fam.s[j],
            fam.lambda[j],
            fam.means[j],
            cl.ratio,
            status_code(cl.status),
        ]);
    }
    t
}

/// One row per check: index, pass flag, runtime, then every metric of
/// every check in a shared column set.
pub fn suite_table(rep: &SuiteReport) -> Table {
    let mut keys: Vec<String> = rep
        .checks
        .iter()
        .flat_map(|c| c.metrics.keys().map(move |k| format!("{}.{k}", c.name)))
        .collect();
    keys.sort();
    keys.dedup();
    let mut cols = vec!["check", "passed", "seconds"];
    cols.extend(keys.iter().map(|s| s.as_str()));
    let mut t = Table::new(&cols);
    for (i, c) in rep.checks.iter().enumerate() {
        let mut row = vec![i as f64, if c.passed { 1.0 } else { 0.0 }, c.seconds];
        row.extend(keys.iter().map(|k| {
            k.strip_prefix(&format!("{}.", c.name))
                .and_then(|m| c.metrics.get(m))
                .copied()
                .unwrap_or(f64::NAN)
        }));
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_match_json_numbers() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        t.push(vec![1e-300, f64::NAN]);
        let csv = t.to_csv();
        assert_eq!(csv, "a,b\n0.1,0.3333333333333333\n1e-300,null\n");
        let json = serde_json::to_string(&t).unwrap();
        for line in csv.lines().skip(1) {
            for cell in line.split(',') {
                assert!(json.contains(cell), "{cell}");
            }
        }
    }

    #[test]
    fn formatting_round_trips() {
        for x in [std::f64::consts::PI, 1.0 / 7.0, 6.02214076e23, -2.5e-17] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }
}
