"""Attribute-grouped grid layouts.

Particles are partitioned into one sub-grid ("column") per category or
per numeric bin, with nice 1/2/5-ladder bin edges so boundaries stay in
domain units. Within a column, particles sort by the configured stacking
attribute (the schema's elongation attribute by default) in descending
order, ties broken by id ascending, and fill the bottom row first, left to
right: the most elongated particles sit along the bottom edge and each
sub-column reads non-increasing while going up.

World coordinates are cell_size multiples: x right, y up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import Dataset

DEFAULT_TARGET_BINS = 10
UNLABELED = "UNLABELED"

_LADDER = (1.0, 2.0, 5.0)


def _fmt_edge(x: float) -> str:
    """Compact decimal rendering for bin edges (no trailing zeros)."""
    s = f"{x:.10g}"
    return "0" if s == "-0" else s


@dataclass(frozen=True)
class BinSpec:
    """Equal-width bins with nice edges; the last bin is right-closed."""

    attribute: str
    edges: tuple[float, ...]  # len = bin_count + 1, non-decreasing
    width: float

    @property
    def bin_count(self) -> int:
        return len(self.edges) - 1

    @property
    def labels(self) -> list[str]:
        if self.width == 0.0:
            return [f"[{_fmt_edge(self.edges[0])}]"]
        out = []
        for i in range(self.bin_count):
            closer = "]" if i == self.bin_count - 1 else ")"
            out.append(
                f"[{_fmt_edge(self.edges[i])}, {_fmt_edge(self.edges[i + 1])}{closer}"
            )
        return out

    def assign(self, values: np.ndarray) -> np.ndarray:
        """Bin index per value; values outside the edges clamp to end bins."""
        values = np.asarray(values, dtype=np.float64)
        if self.width == 0.0:
            return np.zeros(len(values), dtype=np.int64)
        idx = np.floor((values - self.edges[0]) / self.width).astype(np.int64)
        return np.clip(idx, 0, self.bin_count - 1)


def bin_numeric_attribute(
    values: np.ndarray, target_bins: int = DEFAULT_TARGET_BINS, attribute: str = ""
) -> BinSpec:
    """Equal-width bins with width m*10^k (m in {1,2,5}) covering [min, max].

    Picks the ladder width whose bin count lands closest to target_bins
    (ties prefer the wider bin, fewer edges to read). A constant column
    yields the single degenerate bin [v, v].
    """
    values = np.asarray(values, dtype=np.float64)
    if target_bins < 1:
        raise ConfigError("target bin count must be >= 1")
    if len(values) == 0 or not np.isfinite(values).all():
        raise ConfigError("binning needs at least one finite value")
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return BinSpec(attribute=attribute, edges=(lo, lo), width=0.0)

    raw = (hi - lo) / target_bins
    k0 = math.floor(math.log10(raw))
    best: tuple[int, float] | None = None  # (|count - target|, width)
    for k in (k0 - 1, k0, k0 + 1):
        for m in _LADDER:
            w = m * (10.0**k)
            first = math.floor(lo / w)
            last = math.ceil(hi / w)
            if last == first:
                last += 1
            score = abs((last - first) - target_bins)
            if best is None or score < best[0] or (score == best[0] and w > best[1]):
                best = (score, w)
    w = best[1]
    first = math.floor(lo / w)
    last = math.ceil(hi / w)
    # lo/w can round across an integer once it nears 2^52, putting the
    # floor one step high; nudge outward until the rounded edges cover
    while round(first * w, 12) > lo:
        first -= 1
    while round(last * w, 12) < hi:
        last += 1
    if last == first:
        last += 1
    edges = tuple(round((first + i) * w, 12) for i in range(last - first + 1))
    return BinSpec(attribute=attribute, edges=edges, width=w)


@dataclass(frozen=True)
class LayoutConfig:
    """Geometry knobs: world cell size, gap between columns (in cells),
    sub-grid aspect (target rows per width unit), and the stacking sort key
    (None = the schema's elongation attribute)."""

    cell_size: float = 1.0
    column_gap: int = 2
    aspect: float = 4.0
    sort_attribute: str | None = None

    def __post_init__(self):
        if self.cell_size <= 0 or self.aspect <= 0 or self.column_gap < 0:
            raise ConfigError("invalid layout config")


@dataclass(frozen=True)
class LayoutColumn:
    """One sub-grid: header label, member count, cell footprint."""

    label: str
    count: int
    x_offset: int  # in cells
    width: int
    height: int


@dataclass
class GridLayout:
    """Per-particle grid placement plus world coordinates and column headers.

    column_of / sub_column_of / row_of are per-particle int arrays; positions
    is (n, 2) float32 world coordinates (cell_size multiples, y up).
    """

    attribute: str
    columns: list[LayoutColumn]
    column_of: np.ndarray
    sub_column_of: np.ndarray
    row_of: np.ndarray
    positions: np.ndarray
    config: LayoutConfig
    bin_spec: BinSpec | None = None

    @property
    def total_width_cells(self) -> int:
        if not self.columns:
            return 0
        last = self.columns[-1]
        return last.x_offset + last.width

    @property
    def total_height_cells(self) -> int:
        return max((c.height for c in self.columns), default=0)

    def column_counts(self) -> list[int]:
        return [c.count for c in self.columns]


def _subgrid_width(count: int, aspect: float) -> int:
    if count <= 0:
        return 1
    return max(1, math.ceil(math.sqrt(count / aspect)))


def layout_from_groups(
    dataset: Dataset,
    attribute_label: str,
    group_of: np.ndarray,
    group_labels: list[str],
    config: LayoutConfig | None = None,
    bin_spec: BinSpec | None = None,
) -> GridLayout:
    """Arrange particles into one sub-grid per group index.

    group_of maps each dataset row to an index into group_labels. Empty
    groups still occupy one cell of width so their headers render.
    """
    config = config or LayoutConfig()
    n = len(dataset)
    if len(group_of) != n:
        raise ConfigError("group assignment length must match dataset size")
    sort_attr = config.sort_attribute or dataset.schema.elongation_attribute
    sort_key = dataset.numeric_column(sort_attr)
    ids = dataset.ids

    column_of = np.zeros(n, dtype=np.int32)
    sub_column_of = np.zeros(n, dtype=np.int32)
    row_of = np.zeros(n, dtype=np.int32)
    positions = np.zeros((n, 2), dtype=np.float32)
    columns: list[LayoutColumn] = []
    x_offset = 0
    for g, label in enumerate(group_labels):
        members = np.nonzero(group_of == g)[0]
        order = sorted(members.tolist(), key=lambda i: (-sort_key[i], ids[i]))
        width = _subgrid_width(len(order), config.aspect)
        height = math.ceil(len(order) / width) if order else 0
        for j, row_index in enumerate(order):
            sub_col = j % width
            row = j // width
            column_of[row_index] = g
            sub_column_of[row_index] = sub_col
            row_of[row_index] = row
            positions[row_index, 0] = (x_offset + sub_col) * config.cell_size
            positions[row_index, 1] = row * config.cell_size
        columns.append(
            LayoutColumn(
                label=label, count=len(order), x_offset=x_offset,
                width=width, height=height,
            )
        )
        x_offset += width + config.column_gap
    return GridLayout(
        attribute=attribute_label,
        columns=columns,
        column_of=column_of,
        sub_column_of=sub_column_of,
        row_of=row_of,
        positions=positions,
        config=config,
        bin_spec=bin_spec,
    )


def attribute_layout(
    dataset: Dataset,
    attribute_name: str,
    bins: BinSpec | None = None,
    config: LayoutConfig | None = None,
) -> GridLayout:
    """Group by one schema attribute: categories in schema order, or the
    given bins (required for numeric attributes)."""
    d = dataset.schema.require(attribute_name)
    if d.is_numeric:
        if bins is None:
            raise ConfigError(
                f"numeric attribute {attribute_name!r} requires a BinSpec"
            )
        values = dataset.numeric_column(attribute_name)
        group_of = bins.assign(values)
        return layout_from_groups(
            dataset, attribute_name, group_of, bins.labels, config, bin_spec=bins
        )
    order = list(d.category_order)
    index = {c: j for j, c in enumerate(order)}
    group_of = np.array(
        [index[str(p.values[attribute_name])] for p in dataset.particles],
        dtype=np.int64,
    )
    return layout_from_groups(dataset, attribute_name, group_of, order, config)


def alphabet_layout(
    dataset: Dataset,
    alphabet_name: str,
    label_order: list[str],
    assignments: dict[str, str],
    config: LayoutConfig | None = None,
) -> GridLayout:
    """Group by a label alphabet; unlabeled particles form a trailing column."""
    labels = label_order + [UNLABELED]
    index = {c: j for j, c in enumerate(labels)}
    group_of = np.array(
        [index[assignments.get(p.id, UNLABELED)] for p in dataset.particles],
        dtype=np.int64,
    )
    return layout_from_groups(dataset, alphabet_name, group_of, labels, config)
