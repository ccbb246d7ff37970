//! Artifact writers. All CSVs have a header row, a fixed column order and
//! locale-independent number formatting.

use std::fs;
use std::path::Path;

use lieibvp::bases::Which;
use lieibvp::geometry::IbvpProblem;
use lieibvp::solver::{FitTrace, Model};

use crate::error::CliError;

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_model(path: &Path, model: &Model) -> Result<(), CliError> {
    fs::write(path, model.to_json() + "\n")?;
    Ok(())
}

/// `trace.csv`: one row per addition. Wall times go to the report instead
/// so that the file is reproducible.
pub fn write_trace(path: &Path, trace: &FitTrace) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "family", "score", "mse", "objective", "refined", "mse_refined", "objective_refined"])?;
    for r in &trace.records {
        w.write_record([
            r.step.to_string(),
            r.family.clone(),
            num(r.score),
            num(r.mse),
            num(r.objective),
            r.refined.to_string(),
            opt(r.mse_refined),
            opt(r.objective_refined),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `ibc_fit.csv`: target, prediction and each term's weighted contribution
/// on `n` evenly spaced points of every boundary component.
pub fn write_ibc_fit(path: &Path, problem: &IbvpProblem, model: &Model, n: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["component", "x_or_t", "x", "t", "target", "prediction"].map(String::from).to_vec();
    header.extend((1..=model.len()).map(|i| format!("term_{i}")));
    w.write_record(&header)?;
    for c in &problem.components {
        let pts: Vec<[f64; 2]> = (0..n).map(|i| c.point_at(&problem.domain, i as f64 / (n - 1) as f64)).collect();
        let which = Which::from(c.kind);
        let pred = model.predict(&pts, which)?;
        let parts = model.term_contributions(&pts, which)?;
        for (i, p) in pts.iter().enumerate() {
            let coord = if c.id.is_horizontal() { p[0] } else { p[1] };
            let mut row = vec![c.id.name().to_string(), num(coord), num(p[0]), num(p[1]), num(c.target_at(*p)), num(pred[i])];
            row.extend(parts.iter().map(|col| num(col[i])));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `field.csv` over a grid; the reference columns are left empty when no
/// reference is available.
pub fn write_field(path: &Path, grid: &[[f64; 2]], pred: &[f64], reference: Option<&[f64]>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "t", "prediction", "reference", "abs_error"])?;
    for (i, p) in grid.iter().enumerate() {
        let (r, e) = match reference {
            Some(r) => (num(r[i]), num((pred[i] - r[i]).abs())),
            None => (String::new(), String::new()),
        };
        w.write_record([num(p[0]), num(p[1]), num(pred[i]), r, e])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain `x, t, value` table.
pub fn write_values(path: &Path, grid: &[[f64; 2]], values: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "t", "value"])?;
    for (p, v) in grid.iter().zip(values) {
        w.write_record([num(p[0]), num(p[1]), num(*v)])?;
    }
    w.flush()?;
    Ok(())
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
# Plots the CSV artifacts in this directory. Requires pandas and matplotlib.
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent

trace = pd.read_csv(here / "trace.csv")
fig, ax = plt.subplots()
ax.semilogy(trace["step"], trace["mse"], marker=".", label="after amplitude solve")
ref = trace.dropna(subset=["mse_refined"])
ax.semilogy(ref["step"], ref["mse_refined"], "o", label="after refinement")
ax.set_xlabel("number of bases")
ax.set_ylabel("IBC MSE")
ax.legend()
fig.savefig(here / "trace.png", dpi=150)

fit = pd.read_csv(here / "ibc_fit.csv")
parts = [c for c in fit.columns if c.startswith("term_")]
comps = list(dict.fromkeys(fit["component"]))
fig, axes = plt.subplots(1, len(comps), figsize=(4 * len(comps), 3.5))
for ax, comp in zip(axes, comps):
    d = fit[fit["component"] == comp]
    for p in parts:
        ax.plot(d["x_or_t"], d[p], color="tab:blue", alpha=0.2, lw=0.8)
    ax.plot(d["x_or_t"], d["target"], "k--", label="target")
    ax.plot(d["x_or_t"], d["prediction"], "r", label="prediction")
    ax.set_title(comp)
axes[0].legend()
fig.tight_layout()
fig.savefig(here / "ibc_fit.png", dpi=150)

field = pd.read_csv(here / "field.csv")
nx = field["x"].nunique()
cols = ["prediction", "reference", "abs_error"] if field["reference"].notna().all() else ["prediction"]
fig, axes = plt.subplots(1, len(cols), figsize=(4.5 * len(cols), 3.5), squeeze=False)
for ax, c in zip(axes[0], cols):
    z = field[c].to_numpy().reshape(-1, nx)
    im = ax.imshow(z, origin="lower", aspect="auto",
                   extent=[field["x"].min(), field["x"].max(), field["t"].min(), field["t"].max()])
    ax.set_title(c)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    fig.colorbar(im, ax=ax)
fig.tight_layout()
fig.savefig(here / "field.png", dpi=150)
"#;

pub fn write_plot_script(path: &Path) -> Result<(), CliError> {
    fs::write(path, PLOT_SCRIPT)?;
    Ok(())
}
