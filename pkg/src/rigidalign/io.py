"""Plain-text serialization of graphs, matchings, transforms, and reports.

All writers are deterministic: fixed orderings, fixed float formatting
(17 significant digits, enough to round-trip float64), and "\n" line
endings. Node identity is positional (coordinate row order); optional
string ids are carried along but never used for joins.

Formats:
  edge file       one "i j" pair per line, zero-based, '#' starts a comment
  coordinate file CSV with header "id,x,y,z[,...]"; row order defines index
  matching file   CSV "i,j,weight" (weight column may be empty)
  transform file  d rows of d rotation entries, then one translation row
  prior file      CSV "i,j,weight" plus a "# shape n_a n_b" header comment
  report file     one CSV row per iteration
"""

from __future__ import annotations

import csv

import numpy as np

from .core import (
    AlignmentReport,
    GraphFormatError,
    Matching,
    PriorMatrix,
    RigidGraph,
    RigidTransform,
)

__all__ = [
    "read_graph", "write_graph",
    "read_matching", "write_matching",
    "read_transform", "write_transform",
    "read_prior", "write_prior",
    "write_report",
]

_AXES = "xyzwabcdefgh"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _open_read(path):
    try:
        return open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise GraphFormatError(f"cannot read: {exc.strerror}", path=path) from exc


def _open_write(path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise GraphFormatError(f"cannot write: {exc.strerror}", path=path) from exc


def read_graph(edge_path, coord_path) -> RigidGraph:
    """Load a graph from an edge file and a coordinate file."""
    coords = []
    ids = []
    with _open_read(coord_path) as fh:
        header = fh.readline()
        if not header or not header.strip().lower().startswith("id"):
            raise GraphFormatError("expected header starting with 'id'",
                                   path=coord_path, line=1)
        dim = len(header.strip().split(",")) - 1
        if dim < 1:
            raise GraphFormatError("header declares no coordinate columns",
                                   path=coord_path, line=1)
        for ln, raw in enumerate(fh, start=2):
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            parts = raw.strip().split(",")
            if len(parts) != dim + 1:
                raise GraphFormatError(f"expected {dim + 1} fields, got {len(parts)}",
                                       path=coord_path, line=ln)
            ids.append(parts[0])
            try:
                row = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise GraphFormatError(f"bad coordinate: {exc}", path=coord_path,
                                       line=ln) from exc
            if not all(np.isfinite(row)):
                raise GraphFormatError("non-finite coordinate", path=coord_path, line=ln)
            coords.append(row)
    if not coords:
        raise GraphFormatError("no coordinate rows", path=coord_path)
    n = len(coords)

    edges = []
    with _open_read(edge_path) as fh:
        for ln, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise GraphFormatError(f"expected 'i j', got {s!r}", path=edge_path, line=ln)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise GraphFormatError(f"bad edge index: {exc}", path=edge_path,
                                       line=ln) from exc
            if i == j:
                raise GraphFormatError(f"self-loop {i}-{j}", path=edge_path, line=ln)
            if not (0 <= i < n and 0 <= j < n):
                raise GraphFormatError(f"edge index out of range for {n} nodes",
                                       path=edge_path, line=ln)
            edges.append((min(i, j), max(i, j)))
    if len(set(edges)) != len(edges):
        raise GraphFormatError("duplicate edge", path=edge_path)
    return RigidGraph(np.asarray(coords), np.asarray(edges, dtype=np.int64).reshape(-1, 2),
                      node_ids=ids)


def write_graph(g: RigidGraph, edge_path, coord_path):
    with _open_write(edge_path) as fh:
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")
    with _open_write(coord_path) as fh:
        axes = [_AXES[k] if k < len(_AXES) else f"c{k}" for k in range(g.dim)]
        fh.write("id," + ",".join(axes) + "\n")
        for idx in range(g.n):
            name = g.node_ids[idx] if g.node_ids is not None else str(idx)
            fh.write(name + "," + ",".join(_fmt(v) for v in g.coords[idx]) + "\n")


def write_matching(m: Matching, path):
    with _open_write(path) as fh:
        fh.write("i,j,weight\n")
        for idx in range(m.size):
            i, j = m.pairs[idx]
            w = "" if m.weights is None else _fmt(m.weights[idx])
            fh.write(f"{i},{j},{w}\n")


def read_matching(path) -> Matching:
    pairs = []
    weights = []
    with _open_read(path) as fh:
        header = fh.readline()
        if not header or not header.strip().lower().startswith("i,j"):
            raise GraphFormatError("expected header 'i,j,weight'", path=path, line=1)
        for ln, raw in enumerate(fh, start=2):
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split(",")
            if len(parts) not in (2, 3):
                raise GraphFormatError(f"expected 'i,j[,weight]', got {s!r}",
                                       path=path, line=ln)
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError as exc:
                raise GraphFormatError(f"bad index: {exc}", path=path, line=ln) from exc
            if len(parts) == 3 and parts[2] != "":
                try:
                    weights.append(float(parts[2]))
                except ValueError as exc:
                    raise GraphFormatError(f"bad weight: {exc}", path=path, line=ln) from exc
    if weights and len(weights) != len(pairs):
        raise GraphFormatError("weights must be present for all pairs or none", path=path)
    try:
        return Matching(np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
                        np.asarray(weights) if weights else None)
    except ValueError as exc:
        raise GraphFormatError(str(exc), path=path) from exc


def write_transform(t: RigidTransform, path):
    with _open_write(path) as fh:
        fh.write(f"# rigid transform, dim {t.dim}: rotation rows, then translation\n")
        for row in t.rotation:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")
        fh.write(" ".join(_fmt(v) for v in t.translation) + "\n")


def read_transform(path) -> RigidTransform:
    rows = []
    with _open_read(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            try:
                rows.append([float(v) for v in s.split()])
            except ValueError as exc:
                raise GraphFormatError(f"bad number: {exc}", path=path, line=ln) from exc
    if len(rows) < 2:
        raise GraphFormatError("expected rotation rows plus a translation row", path=path)
    d = len(rows) - 1
    mat = np.asarray(rows[:d])
    tr = np.asarray(rows[d])
    if mat.shape != (d, d) or tr.shape != (d,):
        raise GraphFormatError("inconsistent transform dimensions", path=path)
    try:
        return RigidTransform(mat, tr)
    except ValueError as exc:
        raise GraphFormatError(str(exc), path=path) from exc


def write_prior(l: PriorMatrix, path):
    rows, cols = l.support()
    vals = l.values()
    with _open_write(path) as fh:
        fh.write(f"# shape {l.shape[0]} {l.shape[1]}\n")
        fh.write("i,j,weight\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i},{j},{_fmt(v)}\n")


def read_prior(path, shape=None) -> PriorMatrix:
    rows, cols, vals = [], [], []
    declared = None
    with _open_read(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s:
                continue
            if s.startswith("#"):
                parts = s[1:].split()
                if parts[:1] == ["shape"] and len(parts) == 3:
                    declared = (int(parts[1]), int(parts[2]))
                continue
            if s.lower().startswith("i,j"):
                continue
            parts = s.split(",")
            if len(parts) != 3:
                raise GraphFormatError(f"expected 'i,j,weight', got {s!r}", path=path, line=ln)
            try:
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
            except ValueError as exc:
                raise GraphFormatError(f"bad entry: {exc}", path=path, line=ln) from exc
    shape = shape or declared
    if shape is None:
        raise GraphFormatError("prior file lacks a '# shape' header and no shape "
                               "was supplied", path=path)
    try:
        return PriorMatrix.from_entries(rows, cols, vals, shape)
    except ValueError as exc:
        raise GraphFormatError(str(exc), path=path) from exc


_REPORT_FIELDS = [
    "iteration", "matched", "edge_overlap", "overlap_fraction", "node_overlap",
    "rigidity_residual", "objective_prior_term", "objective_overlap_term",
    "objective_structural_term",
]


def write_report(report: AlignmentReport, path):
    """One CSV row per iteration, plus summary columns on every row."""
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_REPORT_FIELDS + ["converged", "reason", "best_iteration"])
        for rec in report.iterations:
            row = [
                rec.iteration,
                rec.matched,
                rec.edge_overlap,
                _fmt(rec.overlap_fraction),
                "" if rec.node_overlap is None else _fmt(rec.node_overlap),
                _fmt(rec.rigidity_residual),
                _fmt(rec.objective_prior_term),
                _fmt(rec.objective_overlap_term),
                _fmt(rec.objective_structural_term),
                str(report.converged).lower(),
                report.reason,
                report.best_iteration,
            ]
            writer.writerow(row)
