"""Conjunctive filtering over attributes and label alphabets.

A FilterSet holds at most one predicate per attribute or alphabet; a particle
is included iff it passes every predicate. Filtering only hides particles,
it never re-projects.

Summaries split every particle three ways per histogram group: included,
excluded by the group's own predicate, or excluded only by other predicates.
The last segment is what reveals cross-filter structure (it marks particles
this attribute would keep but some other filter rejects).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .layout import UNLABELED, BinSpec, bin_numeric_attribute
from .model import Dataset


@dataclass(frozen=True)
class CategoryFilter:
    """Keep particles whose category is in `allowed`."""

    attribute: str
    allowed: frozenset[str]

    @property
    def key(self) -> str:
        return f"attr:{self.attribute}"

    def mask(self, dataset: Dataset, assignments_by_alphabet) -> np.ndarray:
        col = dataset.category_column(self.attribute)
        return np.array([c in self.allowed for c in col], dtype=bool)


@dataclass(frozen=True)
class RangeFilter:
    """Keep particles with lo <= value <= hi (closed interval)."""

    attribute: str
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ConfigError(f"range filter [{self.lo}, {self.hi}] is empty")

    @property
    def key(self) -> str:
        return f"attr:{self.attribute}"

    def mask(self, dataset: Dataset, assignments_by_alphabet) -> np.ndarray:
        v = dataset.numeric_column(self.attribute)
        return (v >= self.lo) & (v <= self.hi)


@dataclass(frozen=True)
class AlphabetFilter:
    """Keep particles whose label (or UNLABELED) is in `allowed`."""

    alphabet: str
    allowed: frozenset[str]

    @property
    def key(self) -> str:
        return f"alphabet:{self.alphabet}"

    def mask(self, dataset: Dataset, assignments_by_alphabet) -> np.ndarray:
        assignments = (assignments_by_alphabet or {}).get(self.alphabet, {})
        return np.array(
            [assignments.get(p.id, UNLABELED) in self.allowed for p in dataset.particles],
            dtype=bool,
        )


Filter = CategoryFilter | RangeFilter | AlphabetFilter


@dataclass(frozen=True)
class FilterSet:
    filters: tuple[Filter, ...] = ()

    def __post_init__(self):
        keys = [f.key for f in self.filters]
        if len(set(keys)) != len(keys):
            dupes = sorted({k for k in keys if keys.count(k) > 1})
            raise ConfigError(f"multiple filters for {', '.join(dupes)}")

    def included(
        self, dataset: Dataset, assignments_by_alphabet: dict | None = None
    ) -> np.ndarray:
        """Conjunction of all predicate masks; everything with no filters."""
        out = np.ones(len(dataset), dtype=bool)
        for f in self.filters:
            out &= f.mask(dataset, assignments_by_alphabet)
        return out

    def masks_by_key(
        self, dataset: Dataset, assignments_by_alphabet: dict | None = None
    ) -> dict[str, np.ndarray]:
        return {f.key: f.mask(dataset, assignments_by_alphabet) for f in self.filters}


@dataclass(frozen=True)
class GroupSummary:
    """Counts for one histogram group under the current filter set."""

    label: str
    total: int
    included: int
    excluded_by_self: int
    excluded_by_others: int


@dataclass(frozen=True)
class FilterSummary:
    subject: str  # "attr:<name>" or "alphabet:<name>"
    groups: tuple[GroupSummary, ...]
    bin_spec: BinSpec | None = None

    def totals(self) -> tuple[int, int, int, int]:
        t = sum(g.total for g in self.groups)
        i = sum(g.included for g in self.groups)
        s = sum(g.excluded_by_self for g in self.groups)
        o = sum(g.excluded_by_others for g in self.groups)
        return t, i, s, o


def _three_way(
    group_of: np.ndarray,
    group_labels: list[str],
    subject_key: str,
    filter_set: FilterSet,
    dataset: Dataset,
    assignments_by_alphabet: dict | None,
) -> tuple[GroupSummary, ...]:
    masks = filter_set.masks_by_key(dataset, assignments_by_alphabet)
    n = len(dataset)
    own = masks.get(subject_key, np.ones(n, dtype=bool))
    others = np.ones(n, dtype=bool)
    for key, m in masks.items():
        if key != subject_key:
            others &= m

    included = own & others
    excluded_self = ~own
    excluded_others = own & ~others

    groups = []
    for g, label in enumerate(group_labels):
        member = group_of == g
        groups.append(
            GroupSummary(
                label=label,
                total=int(member.sum()),
                included=int((member & included).sum()),
                excluded_by_self=int((member & excluded_self).sum()),
                excluded_by_others=int((member & excluded_others).sum()),
            )
        )
    return tuple(groups)


def summarize_attribute(
    dataset: Dataset,
    attribute_name: str,
    filter_set: FilterSet,
    assignments_by_alphabet: dict | None = None,
    target_bins: int | None = None,
) -> FilterSummary:
    """Histogram one attribute under the filter set (categories or nice bins)."""
    d = dataset.schema.require(attribute_name)
    key = f"attr:{attribute_name}"
    if d.is_numeric:
        values = dataset.numeric_column(attribute_name)
        spec = bin_numeric_attribute(
            values, target_bins if target_bins is not None else 10, attribute_name
        )
        group_of = spec.assign(values)
        labels = spec.labels
        groups = _three_way(
            group_of, labels, key, filter_set, dataset, assignments_by_alphabet
        )
        return FilterSummary(subject=key, groups=groups, bin_spec=spec)
    order = list(d.category_order)
    index = {c: j for j, c in enumerate(order)}
    group_of = np.array(
        [index[str(p.values[attribute_name])] for p in dataset.particles], dtype=np.int64
    )
    groups = _three_way(
        group_of, order, key, filter_set, dataset, assignments_by_alphabet
    )
    return FilterSummary(subject=key, groups=groups)


def summarize_alphabet(
    dataset: Dataset,
    alphabet_name: str,
    label_order: list[str],
    filter_set: FilterSet,
    assignments_by_alphabet: dict | None = None,
) -> FilterSummary:
    """Histogram an alphabet's labels (plus UNLABELED) under the filter set."""
    key = f"alphabet:{alphabet_name}"
    labels = label_order + [UNLABELED]
    index = {c: j for j, c in enumerate(labels)}
    assignments = (assignments_by_alphabet or {}).get(alphabet_name, {})
    group_of = np.array(
        [index[assignments.get(p.id, UNLABELED)] for p in dataset.particles],
        dtype=np.int64,
    )
    groups = _three_way(
        group_of, labels, key, filter_set, dataset, assignments_by_alphabet
    )
    return FilterSummary(subject=key, groups=groups)
