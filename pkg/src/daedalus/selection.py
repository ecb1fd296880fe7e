"""Spatial selection over 2D positions plus selection statistics.

Selections resolve in world coordinates (projection embedding or grid
layout), so zoom level never changes results. Hidden particles (filtered
out or explicitly hidden) are never selectable: callers pass a visibility
mask and results are always subsets of it. Selections themselves are plain
id sets; statistics depend only on (ids, dataset, assignments), never on
coordinates, which is what lets them survive canvas-mode switches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .layout import UNLABELED, bin_numeric_attribute
from .model import Dataset

SELECTION_MODES = ("replace", "add", "remove")


def rect_select(
    positions: np.ndarray,
    corner_a: tuple[float, float],
    corner_b: tuple[float, float],
    visible: np.ndarray | None = None,
) -> np.ndarray:
    """Boolean mask of visible points inside the rectangle, edges inclusive.

    Corners may be any two opposite corners; the rectangle is normalized.
    """
    pos = np.asarray(positions, dtype=np.float64)
    x0, x1 = sorted((corner_a[0], corner_b[0]))
    y0, y1 = sorted((corner_a[1], corner_b[1]))
    mask = (pos[:, 0] >= x0) & (pos[:, 0] <= x1) & (pos[:, 1] >= y0) & (pos[:, 1] <= y1)
    if visible is not None:
        mask &= np.asarray(visible, dtype=bool)
    return mask


def points_in_polygon(positions: np.ndarray, polygon) -> np.ndarray:
    """Even-odd ray-casting containment test (ray toward +x).

    The polygon closes itself (last vertex joins the first). Fewer than 3
    vertices select nothing. Points exactly on an edge follow ray-casting
    parity, so boundary behavior matches the rectangle tool only for points
    in general position.
    """
    pos = np.asarray(positions, dtype=np.float64)
    poly = np.asarray(polygon, dtype=np.float64)
    if poly.ndim != 2 or poly.shape[0] < 3:
        return np.zeros(len(pos), dtype=bool)

    x, y = pos[:, 0], pos[:, 1]
    inside = np.zeros(len(pos), dtype=bool)
    px = poly[:, 0]
    py = poly[:, 1]
    j = len(poly) - 1
    for i in range(len(poly)):
        xi, yi = px[i], py[i]
        xj, yj = px[j], py[j]
        crosses = (yi > y) != (yj > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = xi + (y - yi) * (xj - xi) / (yj - yi)
        inside ^= crosses & (x < np.where(crosses, x_at, 0.0))
        j = i
    return inside


def lasso_select(
    positions: np.ndarray,
    polygon,
    visible: np.ndarray | None = None,
) -> np.ndarray:
    mask = points_in_polygon(positions, polygon)
    if visible is not None:
        mask &= np.asarray(visible, dtype=bool)
    return mask


def hit_test(
    geometry: dict,
    positions: np.ndarray,
    ids: list[str],
    visible: np.ndarray | None = None,
) -> set[str]:
    """Resolve a geometry dict against positions; returns selected id set.

    geometry: {"kind": "rectangle", "x0","y0","x1","y1"} or
              {"kind": "lasso", "vertices": [[x,y], ...]}.
    """
    kind = geometry.get("kind")
    if kind == "rectangle":
        mask = rect_select(
            positions,
            (geometry["x0"], geometry["y0"]),
            (geometry["x1"], geometry["y1"]),
            visible,
        )
    elif kind == "lasso":
        mask = lasso_select(positions, geometry.get("vertices", []), visible)
    else:
        raise ConfigError(f"unknown selection geometry kind {kind!r}")
    return {ids[i] for i in np.nonzero(mask)[0]}


def update_selection(current: set[str], ids: set[str], mode: str) -> set[str]:
    """Set algebra per mode (replace/add/remove); idempotent per mode."""
    if mode == "replace":
        return set(ids)
    if mode == "add":
        return current | ids
    if mode == "remove":
        return current - ids
    raise ConfigError(f"unknown selection mode {mode!r}")


def selection_to_json(selection: set[str]) -> list[str]:
    """Sorted id list, the stable wire/persistence form."""
    return sorted(selection)


def format_percent(count: int, denominator: int) -> str:
    """Share of selection as a percent string, trailing zeros trimmed.

    51/500 -> "10.2%", 3713/5000 -> "74.26%", 1/3 -> "33.33%", 5/20 -> "25%".
    An empty denominator yields "0%".
    """
    if denominator <= 0:
        return "0%"
    value = count / denominator * 100.0
    text = f"{value:.2f}".rstrip("0").rstrip(".")
    if text in ("", "-0"):
        text = "0"
    return text + "%"


@dataclass(frozen=True)
class GroupStat:
    label: str
    count: int
    percent: str


@dataclass(frozen=True)
class NumericStat:
    minimum: float
    maximum: float
    mean: float


@dataclass(frozen=True)
class SelectionStats:
    """Distribution of one attribute (or alphabet) inside a selection.

    Percent denominators are the selection size. unlabeled_count is set for
    alphabet subjects (the UNLABELED group's count, surfaced separately).
    """

    subject: str
    selection_size: int
    groups: tuple[GroupStat, ...]
    numeric: NumericStat | None = None
    unlabeled_count: int | None = None


def _group_stats(
    group_of: np.ndarray, labels: list[str], selected: np.ndarray, size: int
) -> tuple[GroupStat, ...]:
    out = []
    for g, label in enumerate(labels):
        count = int(((group_of == g) & selected).sum())
        out.append(GroupStat(label=label, count=count, percent=format_percent(count, size)))
    return tuple(out)


def selection_stats(
    dataset: Dataset,
    selected: np.ndarray,
    attribute_name: str,
    target_bins: int | None = None,
) -> SelectionStats:
    """Per-category (or per-nice-bin) counts and percents for a selection.

    Numeric bins are computed over the full dataset range so stats stay
    comparable across selections.
    """
    selected = np.asarray(selected, dtype=bool)
    size = int(selected.sum())
    d = dataset.schema.require(attribute_name)

    if d.is_numeric:
        values = dataset.numeric_column(attribute_name)
        spec = bin_numeric_attribute(
            values, target_bins if target_bins is not None else 10, attribute_name
        )
        group_of = spec.assign(values)
        labels = spec.labels
        sel_values = values[selected]
        numeric = (
            NumericStat(
                minimum=float(sel_values.min()),
                maximum=float(sel_values.max()),
                mean=float(sel_values.mean()),
            )
            if size
            else None
        )
    else:
        labels = list(d.category_order)
        index = {c: j for j, c in enumerate(labels)}
        group_of = np.array(
            [index[str(p.values[attribute_name])] for p in dataset.particles],
            dtype=np.int64,
        )
        numeric = None

    return SelectionStats(
        subject=attribute_name,
        selection_size=size,
        groups=_group_stats(group_of, labels, selected, size),
        numeric=numeric,
    )


def selection_stats_alphabet(
    dataset: Dataset,
    selected: np.ndarray,
    alphabet_name: str,
    label_order: list[str],
    assignments: dict[str, str],
) -> SelectionStats:
    """Label distribution of a selection, UNLABELED as the trailing group."""
    selected = np.asarray(selected, dtype=bool)
    size = int(selected.sum())
    labels = list(label_order) + [UNLABELED]
    index = {c: j for j, c in enumerate(labels)}
    group_of = np.array(
        [index[assignments.get(p.id, UNLABELED)] for p in dataset.particles],
        dtype=np.int64,
    )
    groups = _group_stats(group_of, labels, selected, size)
    return SelectionStats(
        subject=alphabet_name,
        selection_size=size,
        groups=groups,
        unlabeled_count=groups[-1].count,
    )
