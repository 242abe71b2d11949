//! Standalone matplotlib scripts that read a sweep CSV. Scripts reference the
//! CSV by path and never embed data.

use std::path::{Path, PathBuf};

use crate::settings::Kind;
use crate::{CliError, Result};

const PRELUDE: &str = r##"import csv
import math
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    return rows


def num(row, key):
    value = row[key]
    return float(value) if value != "" else math.nan


"##;

fn body(kind: Kind) -> &'static str {
    match kind {
        Kind::Lmg => {
            r##"rows = load(CSV)
groups = defaultdict(list)
for r in rows:
    groups[(num(r, "gamma"), num(r, "h"))].append(r)

fig, axes = plt.subplots(1, 3, figsize=(15, 4.5))
for (gamma, h), rs in sorted(groups.items()):
    rs.sort(key=lambda r: num(r, "n"))
    n = [num(r, "n") for r in rs]
    label = f"gamma={gamma:g}, h={h:g}"
    axes[0].plot(n, [num(r, "entropy_half") for r in rs], "o-", label=label)
    axes[1].plot([math.log(v) for v in n], [num(r, "entropy_half") for r in rs], "o-", label=label)
    line, = axes[2].plot(n, [num(r, "gap") for r in rs], "o-", label=label)
    asym = num(rs[0], "gap_asymptote")
    if not math.isnan(asym):
        axes[2].axhline(asym, ls="--", color=line.get_color())
axes[0].set(xlabel="n", ylabel="half-chain entropy", title="entropy vs n")
axes[1].set(xlabel="log n", ylabel="half-chain entropy", title="entropy vs log n")
axes[2].set(xlabel="n", ylabel="gap", title="gap vs n (dashed: asymptote)")
"##
        }
        Kind::Fermion => {
            r##"rows = load(CSV)
groups = defaultdict(list)
for r in rows:
    groups[(num(r, "mu"), num(r, "kappa"))].append(r)

fig, axes = plt.subplots(1, 3, figsize=(15, 4.5))
for (mu, kappa), rs in sorted(groups.items()):
    rs.sort(key=lambda r: num(r, "n"))
    n = [num(r, "n") for r in rs]
    label = f"mu={mu:g}, kappa={kappa:g}"
    s = [num(r, "mean_entropy") for r in rs]
    ds = [num(r, "std_entropy") for r in rs]
    axes[0].errorbar(n, s, yerr=ds, fmt="o-", capsize=2, label=label)
    axes[1].errorbar([math.log(v) for v in n], s, yerr=ds, fmt="o-", capsize=2, label=label)
    axes[2].errorbar(n, [num(r, "mean_gap") for r in rs], yerr=[num(r, "std_gap") for r in rs], fmt="o-", capsize=2, label=label)
axes[0].set(xlabel="n", ylabel="mean half-system entropy", title="entropy vs n")
axes[1].set(xlabel="log n", ylabel="mean half-system entropy", title="entropy vs log n")
axes[2].set(xlabel="n", ylabel="mean gap", title="gap vs n")
"##
        }
        Kind::Verify => {
            r##"rows = [r for r in load(CSV) if r["preconditions_met"] == "true"]
checks = sorted({r["check"] for r in rows})

fig, axes = plt.subplots(1, 1, figsize=(10, 4.5))
axes = [axes]
for i, c in enumerate(checks):
    margins = [num(r, "margin") for r in rows if r["check"] == c]
    axes[0].scatter([i] * len(margins), [max(m, 1e-300) for m in margins], s=8)
axes[0].set_xticks(range(len(checks)), checks, rotation=45, ha="right")
axes[0].set(yscale="log", ylabel="rhs - lhs", title="check margins (preconditions met)")
"##
        }
        Kind::Mfrg => {
            r##"rows = load(CSV)
level = [num(r, "level") for r in rows]

fig, axes = plt.subplots(1, 3, figsize=(15, 4.5))
axes[0].plot(level, [num(r, "fidelity_to_exact") for r in rows], "o-")
axes[0].set(xlabel="level", ylabel="fidelity to exact", title="ground-state fidelity")
axes[1].plot(level, [num(r, "step_error") for r in rows], "o-", label="measured")
axes[1].plot(level, [num(r, "lemma8_bound") for r in rows], "s--", label="bound")
axes[1].set(xlabel="level", ylabel="step error", yscale="log", title="step error")
axes[2].plot(level, [num(r, "gap") for r in rows], "o-")
axes[2].set(xlabel="level", ylabel="gap", title="gap per level")
"##
        }
        Kind::Mps => {
            r##"rows = sorted(load(CSV), key=lambda r: num(r, "D"))
bond = [num(r, "D") for r in rows]

fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
axes[0].plot(bond, [max(num(r, "recon_error"), 1e-17) for r in rows], "o-")
axes[0].set(xscale="log", yscale="log", xlabel="D", ylabel="reconstruction error", title="reconstruction error")
axes[1].plot(bond, [max(num(r, "max_region_lhs_over_size"), 1e-17) for r in rows], "o-")
axes[1].set(xscale="log", yscale="log", xlabel="D", ylabel="max lhs / |X|", title="empirical delta")
"##
        }
    }
}

const FOOTER: &str = r##"for ax in axes:
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(OUT, dpi=150)
print(f"wrote {OUT}")
"##;

/// Script text for a CSV of the given kind. The CSV must exist.
pub fn emit_plot_script(csv: &Path, kind: Kind) -> Result<String> {
    if !csv.is_file() {
        return Err(CliError::Usage(format!("CSV not found: {}", csv.display())));
    }
    let csv_str = csv.to_str().ok_or_else(|| CliError::Usage("CSV path is not valid UTF-8".into()))?;
    let png = csv.with_extension("png");
    let png_str = png.to_str().expect("derived from a UTF-8 path");
    Ok(format!(
        "{PRELUDE}CSV = sys.argv[1] if len(sys.argv) > 1 else {}\nOUT = sys.argv[2] if len(sys.argv) > 2 else {}\n\n{}\n{FOOTER}",
        py_string(csv_str),
        py_string(png_str),
        body(kind)
    ))
}

/// Write `plot_<kind>.py` into `out_dir` and return its path.
pub fn write_plot_script(csv: &Path, kind: Kind, out_dir: &Path) -> Result<PathBuf> {
    let text = emit_plot_script(csv, kind)?;
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("plot_{}.py", kind.name()));
    std::fs::write(&path, text)?;
    Ok(path)
}

fn py_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
