"""Projection configuration and the end-to-end pipeline.

project() strings the stages together: feature matrix -> kNN -> smoothed
calibration -> fuzzy graph -> optional label intersection -> optimizer.
Supervision is a TargetVector (one alphabet at a time); passing the previous
run's coordinates as `initial` warm-starts the optimizer so an embedding
evolves smoothly as labeling progresses instead of reshuffling.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigError
from ..features import TargetVector, build_feature_matrix
from ..model import Dataset
from .fuzzy import fuzzy_simplicial_set, smooth_knn, target_intersect
from .knn import METRICS, knn_graph
from .optimize import optimize_embedding


@dataclass(frozen=True)
class ProjectionConfig:
    """Hyperparameters; every field participates in result identity."""

    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    n_epochs: int = 200
    negative_sample_rate: int = 5
    initial_learning_rate: float = 1.0
    far_weight: float = 0.0
    unknown_weight: float = 0.0
    metric: str = "euclidean"
    seed: int = 0

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ConfigError(f"n_neighbors must be >= 2, got {self.n_neighbors}")
        if not 0.0 <= self.min_dist < self.spread:
            raise ConfigError(
                f"need 0 <= min_dist < spread, got {self.min_dist}, {self.spread}"
            )
        if self.n_epochs < 1:
            raise ConfigError(f"n_epochs must be >= 1, got {self.n_epochs}")
        if self.negative_sample_rate < 1:
            raise ConfigError(
                f"negative_sample_rate must be >= 1, got {self.negative_sample_rate}"
            )
        if self.initial_learning_rate <= 0.0:
            raise ConfigError("initial_learning_rate must be positive")
        if not 0.0 <= self.far_weight <= 1.0:
            raise ConfigError(f"far_weight {self.far_weight} outside [0, 1]")
        if not 0.0 <= self.unknown_weight <= 1.0:
            raise ConfigError(
                f"unknown_weight {self.unknown_weight} outside [0, 1]"
            )
        if self.metric not in METRICS:
            raise ConfigError(f"unsupported metric {self.metric!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "ProjectionConfig":
        return cls(**payload)


@dataclass(frozen=True)
class ProjectionResult:
    """2D coordinates in dataset row order plus the inputs that made them.

    computed_at is runtime metadata; it is deliberately absent from the
    serialized form so identical requests serialize identically.
    """

    coordinates: np.ndarray
    config: ProjectionConfig
    attributes: tuple[str, ...]
    alphabet_id: str | None = None
    computed_at: str | None = None


def project(
    dataset: Dataset,
    attributes: Sequence[str],
    config: ProjectionConfig,
    target: TargetVector | None = None,
    alphabet_id: str | None = None,
    initial: np.ndarray | None = None,
    progress: Callable[[float], None] | None = None,
) -> ProjectionResult:
    """Compute a 2D embedding of the dataset over the selected attributes.

    A single attribute is only projectable with label supervision (the
    second axis of information); otherwise at least two are required.
    """
    attributes = tuple(attributes)
    if target is None and len(attributes) < 2:
        raise ConfigError(
            "projection needs at least 2 attributes, or 1 attribute plus "
            "a supervising alphabet"
        )
    if target is not None and len(attributes) < 1:
        raise ConfigError("projection needs at least 1 attribute")
    n = len(dataset)
    if config.n_neighbors >= n:
        raise ConfigError(
            f"n_neighbors={config.n_neighbors} must be < particle count {n}"
        )
    if target is not None and len(target.codes) != n:
        raise ConfigError("target vector length does not match dataset")

    features = build_feature_matrix(dataset, list(attributes))
    indices, distances = knn_graph(features.data, config.n_neighbors, config.metric)
    rho, sigma = smooth_knn(distances)
    graph = fuzzy_simplicial_set(indices, distances, rho, sigma)
    if target is not None:
        graph = target_intersect(
            graph, target, config.far_weight, config.unknown_weight
        )
    coordinates = optimize_embedding(graph, config, initial=initial, progress=progress)

    return ProjectionResult(
        coordinates=coordinates,
        config=config,
        attributes=attributes,
        alphabet_id=alphabet_id,
        computed_at=datetime.now(timezone.utc).isoformat(),
    )
