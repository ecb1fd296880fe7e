"""Label-informed 2D projection pipeline.

Stages: exact kNN search, per-point smoothed-distance calibration, fuzzy
similarity graph with union symmetrization, optional label intersection
(same-class edges kept, cross-class edges attenuated by far_weight), and a
stochastic gradient optimizer of the fitted (a, b) kernel. Every stage is
deterministic for a fixed seed so identical requests produce byte-identical
coordinates.
"""

from .fuzzy import FuzzyGraph, fuzzy_simplicial_set, smooth_knn, target_intersect
from .knn import knn_graph
from .optimize import (
    attractive_energy,
    attractive_grad,
    fit_curve_params,
    optimize_embedding,
    repulsive_energy,
    repulsive_grad,
)
from .pipeline import ProjectionConfig, ProjectionResult, project

__all__ = [
    "FuzzyGraph",
    "ProjectionConfig",
    "ProjectionResult",
    "attractive_energy",
    "attractive_grad",
    "fit_curve_params",
    "fuzzy_simplicial_set",
    "knn_graph",
    "optimize_embedding",
    "project",
    "repulsive_energy",
    "repulsive_grad",
    "smooth_knn",
    "target_intersect",
]
