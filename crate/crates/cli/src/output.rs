//! Summary serialization and plot-script emission.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use serde_json::{json, Value};
use std::fs;
use std::path::Path;

/// Assemble the full summary document. Field order is fixed by the struct
/// and map types, so identical runs serialize byte-identically; the wall
/// clock is the one volatile field and canonical comparison strips it.
pub fn summary_value(cfg: &RunConfig, results: &Value, wall_clock_s: f64) -> Result<Value> {
    Ok(json!({
        "scenario": cfg.scenario.name(),
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg)?,
        "results": results,
        "wall_clock_s": wall_clock_s,
    }))
}

pub fn write_summary(dir: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(dir.join("summary.json"), text + "\n").context("writing summary.json")?;
    Ok(())
}

/// Canonical bytes of a summary: volatile fields removed, keys sorted
/// (serde_json maps are ordered), stable float formatting.
pub fn canonical_summary_bytes(mut value: Value) -> Vec<u8> {
    if let Some(obj) = value.as_object_mut() {
        obj.remove("wall_clock_s");
    }
    serde_json::to_vec_pretty(&value).expect("canonical summary serializes")
}

/// Emit a matplotlib script next to the artifacts. Data stays in CSV; the
/// script is regenerated on every run and reads whatever files exist.
pub fn write_plot_script(dir: &Path, scenario: &str) -> Result<()> {
    let script = format!(
        r#"#!/usr/bin/env python3
"""Plots for the `{scenario}` scenario artifacts in this directory."""
import csv
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def read_csv(name):
    path = os.path.join(HERE, name)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return rows if rows else None


def fnum(row, key):
    v = row.get(key, "")
    return float(v) if v not in ("", None) else math.nan


made = []

for name in sorted(os.listdir(HERE)):
    if not name.endswith(".csv"):
        continue
    rows = read_csv(name)
    if rows is None:
        continue
    cols = rows[0].keys()
    stem = name[:-4]
    if "axis" in cols:
        # Trajectory export: norm of the state block on a log scale.
        t = [fnum(r, "axis") for r in rows]
        comps = [c for c in cols if c.startswith("x")]
        norms = [
            math.sqrt(sum(fnum(r, c) ** 2 for c in comps[: max(1, len(comps) - 0)]))
            for r in rows
        ]
        x0 = [abs(fnum(r, "x0")) for r in rows]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.semilogy(t, [max(v, 1e-300) for v in x0], label="|x0|")
        ax.semilogy(t, [max(v, 1e-300) for v in norms], "--", label="state norm", alpha=0.6)
        ax.set_xlabel("axis")
        ax.set_ylabel("norm (log)")
        ax.set_title(stem)
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(HERE, stem + ".png"), dpi=130)
        made.append(stem + ".png")
    elif "mu" in cols:
        t = [fnum(r, "t") for r in rows]
        mu = [max(fnum(r, "mu"), 1e-300) for r in rows]
        dist = [max(fnum(r, "dist_euclid"), 1e-300) for r in rows]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.semilogy(t, mu, label="mu")
        ax.semilogy(t, dist, "--", label="wrapped |th1-th2|/sqrt(2)")
        ax.set_xlabel("t")
        ax.set_ylabel("distance to manifold (log)")
        ax.set_title(stem)
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(HERE, stem + ".png"), dpi=130)
        made.append(stem + ".png")
    elif "verdict" in cols or "sim_verdict" in cols:
        key = "sim_verdict" if "sim_verdict" in cols else "verdict"
        xname = "alpha" if "alpha" in cols else "epsilon" if "epsilon" in cols else "u"
        xs = [fnum(r, xname) for r in rows]
        ys = [fnum(r, "u") if "u" in cols and xname != "u" else 0.0 for r in rows]
        colors = ["tab:green" if r[key] == "stable" else "tab:red" if r[key] == "unstable" else "tab:gray" for r in rows]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.scatter(xs, ys, c=colors, s=24)
        ax.set_xlabel(xname)
        ax.set_ylabel("u" if any(y != 0.0 for y in ys) else "")
        ax.set_title(stem + " (green=stable, red=unstable, gray=other)")
        fig.tight_layout()
        fig.savefig(os.path.join(HERE, stem + ".png"), dpi=130)
        made.append(stem + ".png")
    elif "envelope" in cols:
        z = [fnum(r, "z") for r in rows]
        w = [max(fnum(r, "w_norm"), 1e-300) for r in rows]
        env = [max(fnum(r, "envelope"), 1e-300) for r in rows]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.semilogy(z, w, label="|w_p|")
        ax.semilogy(z, env, "--", label="certified envelope")
        ax.set_xlabel("z")
        ax.legend()
        ax.set_title(stem)
        fig.tight_layout()
        fig.savefig(os.path.join(HERE, stem + ".png"), dpi=130)
        made.append(stem + ".png")

print("wrote:", ", ".join(made) if made else "nothing (no known CSVs found)")
"#
    );
    fs::write(dir.join("plot.py"), script).context("writing plot.py")?;
    Ok(())
}
