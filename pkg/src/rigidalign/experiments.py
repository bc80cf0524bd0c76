"""Noise-sweep experiment harness.

For every grid cell (edge noise, node noise, rotation angle) and every
trial seed, a fresh graph pair is generated and aligned by both the
one-shot baseline and the full alternating loop. The long-format table has
one row per (cell, trial, method); per-cell failures become error rows and
the sweep continues. Aggregation emits mean/std per cell, method, and
metric, shaped for heatmap plotting.

Trials can run across worker processes; the output order is by construction
independent of scheduling, so reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import RigidAlignError, edge_overlap, node_overlap, overlap_fraction
from .emloop import EmConfig, regular_align_baseline, rigid_align
from .synth import GenConfig, PerturbConfig, generate, perturb

__all__ = ["SweepGrid", "run_sweep", "summarize", "write_rows_csv",
           "LONG_COLUMNS", "SUMMARY_METRICS"]

LONG_COLUMNS = [
    "edge_noise_pct", "node_noise_pct", "theta_deg", "trial", "gen_seed",
    "perturb_seed", "method", "n_a", "n_b", "edges_a", "edges_b", "matched",
    "edge_overlap", "overlap_fraction", "node_overlap", "true_edge_overlap",
    "true_overlap_fraction", "rigidity_residual", "iterations", "converged",
    "error",
]

SUMMARY_METRICS = [
    "edge_overlap", "overlap_fraction", "node_overlap",
    "true_overlap_fraction", "rigidity_residual",
]

_METHODS = ("baseline", "rigid")


@dataclass(frozen=True)
class SweepGrid:
    """Noise grid; edge noise x% maps to p_delete = p_add = x/100."""

    edge_noise_pct: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    node_noise_pct: tuple = (0.0, 2.0, 5.0, 10.0, 20.0)
    theta_deg: tuple = (5.0, 60.0, 180.0)

    def cells(self):
        return [(e, nn, th)
                for e in self.edge_noise_pct
                for nn in self.node_noise_pct
                for th in self.theta_deg]


def _trial_seeds(base_seed: int, cell_index: int, trial: int):
    ss = np.random.SeedSequence((int(base_seed), int(cell_index), int(trial)))
    g, p = ss.generate_state(2, dtype=np.uint64)
    return int(g), int(p)


def _run_trial(task):
    (cell_index, cell, trial, gen_cfg, em_cfg, base_seed) = task
    edge_pct, node_pct, theta = cell
    gen_seed, perturb_seed = _trial_seeds(base_seed, cell_index, trial)
    common = {
        "edge_noise_pct": edge_pct,
        "node_noise_pct": node_pct,
        "theta_deg": theta,
        "trial": trial,
        "gen_seed": gen_seed,
        "perturb_seed": perturb_seed,
    }
    rows = []
    try:
        a = generate(replace(gen_cfg, seed=gen_seed))
        b, truth = perturb(a, PerturbConfig(
            theta_deg=theta,
            translation="random",
            node_noise_scale=node_pct / 100.0,
            p_delete=edge_pct / 100.0,
            p_add=edge_pct / 100.0,
            seed=perturb_seed,
        ))
    except (RigidAlignError, ValueError) as exc:
        for method in _METHODS:
            rows.append({**common, "method": method, "error": str(exc)})
        return cell_index, trial, rows

    true_ov = edge_overlap(a, b, truth)
    true_frac = overlap_fraction(a, b, truth)
    for method in _METHODS:
        row = {**common, "method": method,
               "n_a": a.n, "n_b": b.n, "edges_a": a.num_edges, "edges_b": b.num_edges,
               "true_edge_overlap": true_ov, "true_overlap_fraction": true_frac,
               "error": ""}
        try:
            runner = regular_align_baseline if method == "baseline" else rigid_align
            report = runner(a, b, em_cfg, truth=truth)
            m = report.best_matching
            row.update({
                "matched": m.size,
                "edge_overlap": edge_overlap(a, b, m),
                "overlap_fraction": overlap_fraction(a, b, m),
                "node_overlap": node_overlap(m, truth),
                "rigidity_residual": report.iterations[report.best_iteration].rigidity_residual,
                "iterations": len(report.iterations),
                "converged": report.converged,
            })
        except (RigidAlignError, np.linalg.LinAlgError) as exc:
            row["error"] = str(exc)
        rows.append(row)
    return cell_index, trial, rows


def run_sweep(gen_cfg: GenConfig, grid: SweepGrid, trials: int, em_cfg: EmConfig,
              base_seed: int = 0, jobs: int = 1, out_dir=None) -> list[dict]:
    """Run the full noise sweep; returns the long-format rows.

    With ``out_dir`` set, writes ``sweep_long.csv`` and ``sweep_summary.csv``
    there. ``jobs`` > 1 distributes trials over worker processes.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cells = grid.cells()
    if not cells:
        raise ValueError("sweep grid is empty")
    tasks = [(ci, cell, t, gen_cfg, em_cfg, base_seed)
             for ci, cell in enumerate(cells) for t in range(trials)]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial, tasks, chunksize=1))
    else:
        results = [_run_trial(t) for t in tasks]

    results.sort(key=lambda r: (r[0], r[1]))
    rows = [row for _, _, chunk in results for row in chunk]
    for row in rows:
        for col in LONG_COLUMNS:
            row.setdefault(col, "")

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_rows_csv(rows, LONG_COLUMNS, os.path.join(out_dir, "sweep_long.csv"))
        summary = summarize(rows)
        cols = _summary_columns()
        write_rows_csv(summary, cols, os.path.join(out_dir, "sweep_summary.csv"))
    return rows


def _summary_columns():
    cols = ["edge_noise_pct", "node_noise_pct", "theta_deg", "method", "trials_ok"]
    for metric in SUMMARY_METRICS:
        cols.extend([f"mean_{metric}", f"std_{metric}"])
    return cols


def summarize(rows: list[dict]) -> list[dict]:
    """Mean/std per (cell, method) over successful trials.

    Sample standard deviation (ddof=1) for two or more values, 0.0 for a
    single value. Error rows are excluded and reflected in ``trials_ok``.
    """
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["edge_noise_pct"], row["node_noise_pct"], row["theta_deg"], row["method"])
        groups.setdefault(key, []).append(row)

    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3])):
        ok = [r for r in groups[key] if not r.get("error")]
        rec = {
            "edge_noise_pct": key[0],
            "node_noise_pct": key[1],
            "theta_deg": key[2],
            "method": key[3],
            "trials_ok": len(ok),
        }
        for metric in SUMMARY_METRICS:
            vals = [float(r[metric]) for r in ok if r.get(metric) != ""]
            if vals:
                rec[f"mean_{metric}"] = float(np.mean(vals))
                rec[f"std_{metric}"] = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            else:
                rec[f"mean_{metric}"] = ""
                rec[f"std_{metric}"] = ""
        out.append(rec)
    return out


def _cell_str(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.17g}"
    return str(v)


def write_rows_csv(rows: list[dict], columns: list[str], path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell_str(row.get(c, "")) for c in columns])
