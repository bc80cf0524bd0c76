"""Rigid graph alignment: joint matching of topology and spatial structure.

Aligns pairs of graphs whose nodes carry coordinates by alternating a
prior-guided topological aligner with rigid-body (rotation + translation)
registration of the matched coordinates, until the edge overlap settles.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .core import (
    AlignmentReport,
    DegenerateConfigurationError,
    GraphFormatError,
    InvalidMatchingError,
    IterationRecord,
    Matching,
    ObjectiveWeights,
    PriorMatrix,
    RigidAlignError,
    RigidGraph,
    RigidTransform,
    edge_overlap,
    node_overlap,
    overlap_fraction,
)
from .emloop import BootstrapSpec, EmConfig, PriorSpec, regular_align_baseline, rigid_align
from .netalign import AlignerConfig, align, matching_objective, round_matching, similarity_propagate
from .prior import bootstrap_prior, prior_epsilon_binary, prior_epsilon_gaussian, prior_knn
from .procrustes import ProcrustesSolution, apply_transform, rigidity_metric, solve_procrustes
from .synth import GenConfig, Gnp, PerturbConfig, PreferentialAttachment, generate, perturb

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "AlignmentReport",
    "DegenerateConfigurationError",
    "GraphFormatError",
    "InvalidMatchingError",
    "IterationRecord",
    "Matching",
    "ObjectiveWeights",
    "PriorMatrix",
    "RigidAlignError",
    "RigidGraph",
    "RigidTransform",
    "edge_overlap",
    "node_overlap",
    "overlap_fraction",
    "BootstrapSpec",
    "EmConfig",
    "PriorSpec",
    "regular_align_baseline",
    "rigid_align",
    "AlignerConfig",
    "align",
    "matching_objective",
    "round_matching",
    "similarity_propagate",
    "bootstrap_prior",
    "prior_epsilon_binary",
    "prior_epsilon_gaussian",
    "prior_knn",
    "ProcrustesSolution",
    "apply_transform",
    "rigidity_metric",
    "solve_procrustes",
    "GenConfig",
    "Gnp",
    "PerturbConfig",
    "PreferentialAttachment",
    "generate",
    "perturb",
]
