"""Render figures for experiment outputs, next to the delimited files.

Every function takes data already written by the CLI commands (CSV/JSON) and
produces a PNG in the same directory, so a results folder is self-contained:
tables for machines, figures for people.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_qt_bars",
    "render_l_scatter",
    "render_subsample_curve",
    "render_loop_fidelities",
    "render_all",
]

_FIGSIZE = (7.0, 4.3)  # ~golden ratio


def _save(fig, path: Path, *, tight: bool = True) -> Path:
    if tight:
        fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_qt_bars(comparison_json: Path, out_png: Path) -> Path:
    """Grouped bars of the reconstructed Q entries and t weights.

    Self-characterization as solid bars, detector tomography (when present)
    as outlined bars, mirroring the usual side-by-side presentation.
    """
    doc = json.loads(Path(comparison_json).read_text())
    q_sc = np.array(doc["qdsc"]["q_mean"])
    t_sc = np.array(doc["qdsc"]["t_mean"])
    q_tomo = np.array(doc["qdt"]["q_mean"]) if "qdt" in doc else None
    t_tomo = np.array(doc["qdt"]["t_mean"]) if "qdt" in doc else None
    n = len(t_sc)

    fig, (ax_q, ax_t) = plt.subplots(1, 2, figsize=(10.0, 4.0), width_ratios=[3, 1])
    idx = np.arange(n * n)
    labels = [f"{k}{l}" for k in range(n) for l in range(n)]
    ax_q.bar(idx, q_sc.reshape(-1), width=0.8, color="C0", alpha=0.8, label="self-characterization")
    if q_tomo is not None:
        ax_q.bar(idx, q_tomo.reshape(-1), width=0.8, facecolor="none", edgecolor="k", linewidth=0.8, label="tomography")
    ax_q.set_xticks(idx[:: max(1, n)])
    ax_q.set_xticklabels(labels[:: max(1, n)], fontsize=7)
    ax_q.set_xlabel("Q entry (row-major)")
    ax_q.set_ylabel("value")
    ax_q.legend(fontsize=8)

    idx_t = np.arange(n)
    ax_t.bar(idx_t, t_sc, width=0.6, color="C1", alpha=0.8)
    if t_tomo is not None:
        ax_t.bar(idx_t, t_tomo, width=0.6, facecolor="none", edgecolor="k", linewidth=0.8)
    ax_t.set_xlabel("outcome")
    ax_t.set_ylabel("t")
    return _save(fig, Path(out_png))


def render_l_scatter(l_table_csv: Path, out_png: Path) -> Path:
    """Per-state membership values: tomography (x) vs self-characterization (y),
    with marginal histograms and the L = 1 bound."""
    rows = _read_csv(l_table_csv)
    lx = np.array([float(r["l_qdt_mean"]) for r in rows])
    ly = np.array([float(r["l_qdsc_mean"]) for r in rows])

    fig = plt.figure(figsize=(6.4, 6.4))
    gs = fig.add_gridspec(2, 2, width_ratios=[4, 1], height_ratios=[1, 4], hspace=0.04, wspace=0.04)
    ax = fig.add_subplot(gs[1, 0])
    ax_top = fig.add_subplot(gs[0, 0], sharex=ax)
    ax_right = fig.add_subplot(gs[1, 1], sharey=ax)

    ax.scatter(lx, ly, s=18, color="C3", alpha=0.8)
    lo = min(lx.min(), ly.min(), 0.98)
    hi = max(lx.max(), ly.max(), 1.02)
    ax.axvline(1.0, color="k", linestyle="--", linewidth=0.8)
    ax.axhline(1.0, color="k", linestyle="--", linewidth=0.8)
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    ax.set_xlabel("membership value (tomography)")
    ax.set_ylabel("membership value (self-characterization)")

    bins = np.linspace(lo, hi, 24)
    ax_top.hist(lx, bins=bins, color="C3", alpha=0.6)
    ax_top.axvline(1.0, color="k", linestyle="--", linewidth=0.8)
    ax_top.tick_params(labelbottom=False)
    ax_right.hist(ly, bins=bins, orientation="horizontal", color="C3", alpha=0.6)
    ax_right.axhline(1.0, color="k", linestyle="--", linewidth=0.8)
    ax_right.tick_params(labelleft=False)
    return _save(fig, Path(out_png), tight=False)


def render_subsample_curve(subsample_csv: Path, out_png: Path) -> Path:
    """Median reconstruction infidelity against the number of probe states."""
    rows = _read_csv(subsample_csv)
    m = np.array([int(r["m"]) for r in rows])
    med = np.array([float(r["median_infidelity_q"]) for r in rows])
    std = np.array([float(r["std_infidelity_q"]) for r in rows])

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.errorbar(m, med, yerr=std, fmt="o-", color="C0", capsize=3)
    ax.set_yscale("log")
    ax.set_xlabel("number of probe states")
    ax.set_ylabel("median 1 - F_Q vs truth")
    return _save(fig, Path(out_png))


def render_loop_fidelities(loop_csv: Path, out_png: Path) -> Path:
    """State-tomography fidelities per probe state: calibrated measurement vs
    the uncalibrated ideal hypothesis, both against the tomography reference."""
    rows = _read_csv(loop_csv)
    idx = np.arange(len(rows))
    cal = np.array([float(r["fid_calibrated_mean"]) for r in rows])
    cal_std = np.array([float(r["fid_calibrated_std"]) for r in rows])
    ideal = np.array([float(r["fid_ideal_mean"]) for r in rows])
    ideal_std = np.array([float(r["fid_ideal_std"]) for r in rows])

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.errorbar(idx, cal, yerr=cal_std, fmt="o", color="C0", capsize=3, label="calibrated")
    ax.errorbar(idx, ideal, yerr=ideal_std, fmt="s", color="C3", capsize=3, label="ideal (uncalibrated)")
    ax.axhline(cal.mean(), color="C0", linestyle="--", linewidth=0.8)
    ax.axhline(ideal.mean(), color="C3", linestyle="--", linewidth=0.8)
    ax.set_xlabel("state index")
    ax.set_ylabel("fidelity vs tomography-calibrated reconstruction")
    ax.legend(fontsize=8)
    return _save(fig, Path(out_png))


def _read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def render_all(result_dir) -> list[Path]:
    """Render every figure whose source tables exist under ``result_dir``."""
    result_dir = Path(result_dir)
    written = []
    comparison = result_dir / "compare" / "comparison.json"
    if comparison.exists():
        written.append(render_qt_bars(comparison, result_dir / "compare" / "fig_qt_bars.png"))
    l_table = result_dir / "compare" / "l_table.csv"
    if l_table.exists():
        written.append(render_l_scatter(l_table, result_dir / "compare" / "fig_l_scatter.png"))
    qdsc_summary = result_dir / "qdsc" / "summary.json"
    if qdsc_summary.exists() and not comparison.exists():
        written.append(render_qt_bars(qdsc_summary, result_dir / "qdsc" / "fig_qt_bars.png"))
    subsample = result_dir / "subsample" / "subsample.csv"
    if subsample.exists():
        written.append(render_subsample_curve(subsample, result_dir / "subsample" / "fig_subsample.png"))
    loop = result_dir / "loop" / "loop_fidelity.csv"
    if loop.exists():
        written.append(render_loop_fidelities(loop, result_dir / "loop" / "fig_loop_fidelity.png"))
    return written
