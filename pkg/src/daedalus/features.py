"""Feature-matrix assembly for projections.

Numeric attributes are min-max normalized so no unit dominates distances;
categorical/ordinal attributes expand to one-hot blocks over the full
category order (absent categories still get a column, so column meaning is
stable across subsets and recomputations). Labels never enter the matrix:
supervision flows through the target vector, which handles unlabeled rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EncodingError
from .model import Dataset

MISSING = -1


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense row-per-particle matrix plus column provenance.

    columns[j] = (source attribute, meaning) where meaning is "numeric" or
    the category the column indicates.
    """

    data: np.ndarray
    columns: tuple[tuple[str, str], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class TargetVector:
    """Per-particle class index (MISSING = unlabeled) + class-name table."""

    codes: np.ndarray
    classes: tuple[str, ...]

    def labeled_fraction(self) -> float:
        if len(self.codes) == 0:
            return 0.0
        return float((self.codes != MISSING).mean())


def normalize_numeric(values: np.ndarray) -> np.ndarray:
    """Min-max to [0,1]; a constant column maps to all zeros."""
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise EncodingError("non-finite value in numeric attribute")
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def one_hot_encode(categories: list[str], order: tuple[str, ...]) -> np.ndarray:
    """(n, len(order)) 0/1 matrix; column j marks order[j]."""
    index = {c: j for j, c in enumerate(order)}
    out = np.zeros((len(categories), len(order)), dtype=np.float64)
    for i, c in enumerate(categories):
        j = index.get(c)
        if j is None:
            raise EncodingError(f"unknown category {c!r}")
        out[i, j] = 1.0
    return out


def build_feature_matrix(dataset: Dataset, attribute_names: list[str]) -> FeatureMatrix:
    """Concatenate per-attribute blocks in the given selection order."""
    if not attribute_names:
        raise ConfigError("feature matrix needs at least one attribute")
    blocks = []
    columns: list[tuple[str, str]] = []
    for name in attribute_names:
        d = dataset.schema.require(name)
        if d.is_numeric:
            blocks.append(normalize_numeric(dataset.numeric_column(name))[:, None])
            columns.append((name, "numeric"))
        else:
            blocks.append(one_hot_encode(dataset.category_column(name), d.category_order))
            columns.extend((name, c) for c in d.category_order)
    data = np.ascontiguousarray(np.hstack(blocks))
    return FeatureMatrix(data=data, columns=tuple(columns))


def encode_target(
    dataset: Dataset, assignments: dict[str, str], label_order: list[str]
) -> TargetVector:
    """Class index per row in label order; unlabeled rows get MISSING (-1)."""
    index = {label: j for j, label in enumerate(label_order)}
    codes = np.full(len(dataset), MISSING, dtype=np.int64)
    for i, p in enumerate(dataset.particles):
        label = assignments.get(p.id)
        if label is not None:
            codes[i] = index[label]
    return TargetVector(codes=codes, classes=tuple(label_order))
