"""Attribute schema, particle records and the dataset container.

Every other module consumes these types. A dataset is immutable after load;
the particle list order is canonical: row index i in any feature matrix or
coordinate array always refers to ``dataset.particles[i]``.

The reference schema (12 attributes: 3 production context, 3 shape, 6 size)
ships as package data in ``reference_schema.json``. Only Elongation is a
fixed name; the remaining numeric attribute names are illustrative and
configurable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from typing import Iterable

import numpy as np

PRODUCTION_CONTEXT = "production-context"
SHAPE = "shape"
SIZE = "size"

CATEGORICAL = "categorical"
ORDINAL = "ordinal"
NUMERIC = "numeric"

ROLES = (PRODUCTION_CONTEXT, SHAPE, SIZE)
KINDS = (CATEGORICAL, ORDINAL, NUMERIC)


@dataclass(frozen=True)
class AttributeDescriptor:
    """One attribute of the particle schema.

    ``category_order`` is present exactly for categorical/ordinal kinds and
    fixes both display order and one-hot column order.
    """

    name: str
    role: str
    kind: str
    unit: str | None = None
    category_order: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r} for attribute {self.name!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r} for attribute {self.name!r}")
        if self.kind == NUMERIC:
            if self.category_order is not None:
                raise ValueError(
                    f"numeric attribute {self.name!r} must not define category-order"
                )
        else:
            if not self.category_order:
                raise ValueError(
                    f"{self.kind} attribute {self.name!r} requires a non-empty category-order"
                )
            if len(set(self.category_order)) != len(self.category_order):
                raise ValueError(
                    f"attribute {self.name!r} has duplicate categories"
                )

    @property
    def is_numeric(self) -> bool:
        return self.kind == NUMERIC


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute descriptors plus the designated elongation attribute."""

    descriptors: tuple[AttributeDescriptor, ...]
    elongation_attribute: str

    def __post_init__(self):
        names = [d.name for d in self.descriptors]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique within a schema")
        elong = self.get(self.elongation_attribute)
        if elong is None:
            raise ValueError(
                f"elongation attribute {self.elongation_attribute!r} not in schema"
            )
        if elong.role != SHAPE or not elong.is_numeric:
            raise ValueError("elongation attribute must be a numeric shape attribute")

    def get(self, name: str) -> AttributeDescriptor | None:
        for d in self.descriptors:
            if d.name == name:
                return d
        return None

    def require(self, name: str) -> AttributeDescriptor:
        d = self.get(name)
        if d is None:
            from .errors import UnknownAttributeError

            raise UnknownAttributeError(f"unknown attribute {name!r}")
        return d

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.descriptors]

    def numeric_names(self) -> list[str]:
        return [d.name for d in self.descriptors if d.is_numeric]

    def role_counts(self) -> dict[str, int]:
        counts = {r: 0 for r in ROLES}
        for d in self.descriptors:
            counts[d.role] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "attributes": [
                {
                    "name": d.name,
                    "role": d.role,
                    "kind": d.kind,
                    "unit": d.unit,
                    "category_order": list(d.category_order) if d.category_order else None,
                }
                for d in self.descriptors
            ],
            "elongation_attribute": self.elongation_attribute,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AttributeSchema":
        descriptors = tuple(
            AttributeDescriptor(
                name=a["name"],
                role=a["role"],
                kind=a["kind"],
                unit=a.get("unit"),
                category_order=tuple(a["category_order"]) if a.get("category_order") else None,
            )
            for a in doc["attributes"]
        )
        return cls(descriptors=descriptors, elongation_attribute=doc["elongation_attribute"])


@dataclass(frozen=True)
class ParticleRecord:
    """One particle: stable id, image path relative to the dataset dir, values."""

    id: str
    image_ref: str
    values: dict[str, float | str]


@dataclass
class Dataset:
    """Immutable-by-convention container; row order is canonical."""

    schema: AttributeSchema
    particles: list[ParticleRecord]
    provenance: str = "real"
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    def __post_init__(self):
        if self.provenance not in ("real", "synthetic"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        self._index = {p.id: i for i, p in enumerate(self.particles)}

    def __len__(self) -> int:
        return len(self.particles)

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.particles]

    def row_of(self, particle_id: str) -> int:
        return self._index[particle_id]

    def has_id(self, particle_id: str) -> bool:
        return particle_id in self._index

    def numeric_column(self, name: str) -> np.ndarray:
        """Raw values of one numeric attribute in row order."""
        d = self.schema.require(name)
        if not d.is_numeric:
            raise ValueError(f"attribute {name!r} is not numeric")
        return np.array([p.values[name] for p in self.particles], dtype=np.float64)

    def category_column(self, name: str) -> list[str]:
        d = self.schema.require(name)
        if d.is_numeric:
            raise ValueError(f"attribute {name!r} is not categorical/ordinal")
        return [str(p.values[name]) for p in self.particles]


@dataclass(frozen=True)
class Violation:
    """One schema violation found by validate_dataset."""

    kind: str
    particle_id: str | None
    attribute: str | None
    message: str

    def __str__(self) -> str:
        where = []
        if self.particle_id is not None:
            where.append(f"particle={self.particle_id}")
        if self.attribute is not None:
            where.append(f"attribute={self.attribute}")
        loc = f" ({', '.join(where)})" if where else ""
        return f"[{self.kind}]{loc} {self.message}"


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Collect every schema violation; an empty list means the dataset is valid.

    Violations are data, not errors: the function never raises on bad particle
    content and never mutates its input.
    """
    report: list[Violation] = []
    schema = dataset.schema
    expected = set(schema.names)

    seen: set[str] = set()
    for p in dataset.particles:
        if p.id in seen:
            report.append(
                Violation("duplicate-id", p.id, None, f"id {p.id!r} appears more than once")
            )
        seen.add(p.id)

        got = set(p.values.keys())
        for missing in sorted(expected - got):
            report.append(
                Violation("missing-attribute", p.id, missing, "value missing")
            )
        for unknown in sorted(got - expected):
            report.append(
                Violation("unknown-attribute", p.id, unknown, "not defined by schema")
            )

        for d in schema.descriptors:
            if d.name not in p.values:
                continue
            v = p.values[d.name]
            if d.is_numeric:
                try:
                    fv = float(v)
                except (TypeError, ValueError):
                    report.append(
                        Violation("non-numeric", p.id, d.name, f"value {v!r} is not a number")
                    )
                    continue
                if not np.isfinite(fv):
                    report.append(
                        Violation("non-finite", p.id, d.name, f"value {v!r} is not finite")
                    )
            else:
                if str(v) not in d.category_order:
                    report.append(
                        Violation(
                            "unknown-category",
                            p.id,
                            d.name,
                            f"category {v!r} not in category-order",
                        )
                    )
    return report


def reference_schema() -> AttributeSchema:
    """The bundled 12-attribute reference schema (3+3+6 role split)."""
    doc = json.loads(
        resources.files("daedalus").joinpath("reference_schema.json").read_text("utf-8")
    )
    return AttributeSchema.from_dict(doc)


def check_reference_counts(schema: AttributeSchema) -> None:
    """Reference-shaped schemas must split 3 production-context / 3 shape / 6 size."""
    counts = schema.role_counts()
    expected = {PRODUCTION_CONTEXT: 3, SHAPE: 3, SIZE: 6}
    if counts != expected:
        raise ValueError(f"reference schema role counts {counts} != {expected}")


def iter_rows(particles: Iterable[ParticleRecord], names: list[str]):
    for p in particles:
        yield [p.values[n] for n in names]
