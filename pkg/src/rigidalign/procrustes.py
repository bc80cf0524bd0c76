"""Rigid-body registration of matched point sets.

Solves min over proper rotations R and translations t of
``|| c_a - (c_b @ R + t) ||_F^2`` via the SVD of the cross-covariance,
with the standard reflection correction so the result is always a proper
rotation. Row-vector convention throughout: transforms act on the right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DegenerateConfigurationError,
    Matching,
    RigidGraph,
    RigidTransform,
    _check_matching,
)

__all__ = [
    "ProcrustesSolution",
    "solve_procrustes",
    "apply_transform",
    "rigidity_metric",
]

# relative singular-value cutoff for detecting rank-deficient configurations
_RANK_RTOL = 1e-12


@dataclass(frozen=True)
class ProcrustesSolution:
    transform: RigidTransform
    residual: float
    residual_per_node: float


def solve_procrustes(c_a, c_b) -> ProcrustesSolution:
    """Best rigid transform taking c_b onto c_a, rows in correspondence.

    Returns the transform together with the squared Frobenius residual
    ``|| c_a - (c_b @ R + t) ||_F^2`` and its per-point value.

    Raises DegenerateConfigurationError when the points do not pin down a
    unique rotation (fewer than 3 points, or rank of the cross-covariance
    below d-1, e.g. collinear points in 3D).
    """
    c_a = np.asarray(c_a, dtype=np.float64)
    c_b = np.asarray(c_b, dtype=np.float64)
    if c_a.ndim != 2 or c_a.shape != c_b.shape:
        raise ValueError(f"coordinate sets must share an n x d shape, "
                         f"got {c_a.shape} and {c_b.shape}")
    n, d = c_a.shape
    if n < max(d, 3):
        raise DegenerateConfigurationError(
            f"need at least {max(d, 3)} matched points in {d}D, got {n}")

    mu_a = c_a.mean(axis=0)
    mu_b = c_b.mean(axis=0)
    ca = c_a - mu_a
    cb = c_b - mu_b

    h = ca.T @ cb
    u, sigma, vt = np.linalg.svd(h)
    if sigma[0] == 0.0 or np.count_nonzero(sigma > sigma[0] * _RANK_RTOL) < d - 1:
        raise DegenerateConfigurationError(
            "matched points are rank-deficient; rotation is not unique")
    v = vt.T
    if np.linalg.det(v @ u.T) < 0:
        v = v.copy()
        v[:, -1] *= -1.0
    rot = v @ u.T

    translation = mu_a - mu_b @ rot
    transform = RigidTransform(rot, translation)
    diff = c_a - (c_b @ rot + translation)
    residual = float((diff * diff).sum())
    return ProcrustesSolution(transform, residual, residual / n)


def apply_transform(coords, t: RigidTransform) -> np.ndarray:
    """coords @ rotation + translation."""
    return t.apply(coords)


def rigidity_metric(a: RigidGraph, b: RigidGraph, m: Matching) -> float:
    """Per-node squared residual of the best rigid fit over matched pairs.

    Lower means the matched substructures are closer to rigidly congruent.
    """
    _check_matching(a, b, m)
    if m.size < 3:
        raise DegenerateConfigurationError(
            f"rigidity metric needs at least 3 matched pairs, got {m.size}")
    sol = solve_procrustes(a.coords[m.left()], b.coords[m.right()])
    return sol.residual_per_node
