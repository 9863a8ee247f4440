//! Result files: metrics CSV, the MSD plotting script and statistic dumps.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use bdiff_core::linalg::Matrix;
use bdiff_core::nig::NigVForm;

use crate::error::{ConfigError, Error, Result};
use crate::sim::MetricsRow;

pub const CSV_HEADER: &str = "t,pipeline,node,sq_error,msd,sigma2_hat";

/// 17 significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders rows ordered by `(t, pipeline, node)`.
pub fn format_csv(rows: &[MetricsRow]) -> String {
    let mut sorted: Vec<&MetricsRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.t, r.pipeline));
    let mut out = String::with_capacity(64 * (1 + rows.iter().map(|r| r.sq_error.len()).sum::<usize>()));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        for (i, (e, s2)) in r.sq_error.iter().zip(&r.sigma2_hat).enumerate() {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.t, r.pipeline, i + 1, num(*e), num(r.msd), num(*s2));
        }
    }
    out
}

pub fn emit_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    std::fs::write(path, format_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Pipeline labels present in a metrics CSV, sorted.
pub fn csv_pipelines(csv: &str) -> BTreeSet<String> {
    csv.lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(1))
        .map(str::to_string)
        .collect()
}

/// Python/matplotlib script plotting network MSD against `t` on a log
/// scale, one curve per pipeline found in the CSV. The CSV is referenced
/// relative to the script's directory.
pub fn plot_script(csv_file_name: &str, pipelines: &BTreeSet<String>) -> String {
    let list = pipelines
        .iter()
        .map(|p| format!("\"{p}\""))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        r#"#!/usr/bin/env python3
"""Network MSD learning curves from {csv_file_name}."""
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CSV_PATH = os.path.join(HERE, "{csv_file_name}")
PIPELINES = [{list}]

curves = {{p: {{}} for p in PIPELINES}}
with open(CSV_PATH, newline="") as fh:
    for row in csv.DictReader(fh):
        if row["pipeline"] in curves:
            curves[row["pipeline"]][int(row["t"])] = float(row["msd"])

fig, ax = plt.subplots(figsize=(7, 4.5))
for name in PIPELINES:
    ts = sorted(curves[name])
    ax.semilogy(ts, [curves[name][t] for t in ts], label=name)
ax.set_xlabel("t")
ax.set_ylabel("network MSD")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "msd.png"), dpi=150)
"#
    )
}

/// Writes the plotting script next to `csv_path`.
pub fn emit_plot_script(csv_path: &Path, script_path: &Path) -> Result<()> {
    let csv = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let name = csv_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "metrics.csv".into());
    std::fs::write(script_path, plot_script(&name, &csv_pipelines(&csv))).map_err(|e| Error::io(script_path, e))
}

/// One block per statistic: a header line `n nu`, then the `(n+1)×(n+1)`
/// matrix `V` row by row.
pub fn format_state(stats: &[NigVForm]) -> String {
    let mut out = String::new();
    for s in stats {
        let _ = writeln!(out, "{} {}", s.order(), num(s.nu()));
        for i in 0..s.v().rows() {
            let row: Vec<String> = s.v().row(i).iter().map(|&x| num(x)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn parse_state(text: &str) -> std::result::Result<Vec<NigVForm>, ConfigError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut out = Vec::new();
    let bad = |line: usize, reason: &str| ConfigError::invalid(format!("state line {}", line + 1), reason);
    let parse_f = |line: usize, tok: &str| tok.parse::<f64>().map_err(|_| bad(line, "not a number"));
    while let Some((ln, header)) = lines.next() {
        let toks: Vec<&str> = header.split_whitespace().collect();
        let [n, nu] = toks[..] else {
            return Err(bad(ln, "expected header `n nu`"));
        };
        let n: usize = n.parse().map_err(|_| bad(ln, "model order is not an integer"))?;
        let nu = parse_f(ln, nu)?;
        let size = n + 1;
        let mut data = Vec::with_capacity(size * size);
        for _ in 0..size {
            let (ln, row) = lines.next().ok_or_else(|| bad(ln, "truncated matrix"))?;
            let vals = row
                .split_whitespace()
                .map(|t| parse_f(ln, t))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if vals.len() != size {
                return Err(bad(ln, "wrong row length"));
            }
            data.extend(vals);
        }
        let v = Matrix::from_row_major(size, size, data).expect("sized above");
        out.push(NigVForm::from_parts(v, nu).map_err(|e| bad(ln, &e.to_string()))?);
    }
    Ok(out)
}
