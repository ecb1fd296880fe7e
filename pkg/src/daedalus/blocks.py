"""Binary coordinate-block container.

One format serves both projections and grid layouts: a 4-byte magic, a
little-endian u32 header length, a canonical JSON header (sorted keys,
compact separators), then the (n, 2) float32 little-endian coordinate
payload. Headers carry only inputs (config, attribute selection, column
table), never wall-clock metadata, so re-running the same request yields a
byte-identical file.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import BlockFormatError
from .layout import BinSpec, GridLayout, LayoutColumn, LayoutConfig
from .projection.pipeline import ProjectionConfig, ProjectionResult

MAGIC = b"DDLB"


def _pack(header: dict, payload: bytes) -> bytes:
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<I", len(head)) + head + payload


def _unpack(blob: bytes) -> tuple[dict, bytes]:
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise BlockFormatError("not a coordinate block (bad magic)")
    (head_len,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + head_len:
        raise BlockFormatError("truncated block header")
    try:
        header = json.loads(blob[8 : 8 + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BlockFormatError(f"unreadable block header: {exc}") from exc
    return header, blob[8 + head_len :]


def _coords_payload(coordinates: np.ndarray) -> bytes:
    return np.ascontiguousarray(coordinates, dtype="<f4").tobytes()


def _coords_from(payload: bytes, rows: int) -> np.ndarray:
    expected = rows * 2 * 4
    if len(payload) != expected:
        raise BlockFormatError(
            f"coordinate payload is {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(rows, 2).copy()


def projection_to_bytes(result: ProjectionResult) -> bytes:
    header = {
        "kind": "projection",
        "rows": int(result.coordinates.shape[0]),
        "config": result.config.to_dict(),
        "attributes": list(result.attributes),
        "alphabet": result.alphabet_id,
    }
    return _pack(header, _coords_payload(result.coordinates))


def projection_from_bytes(blob: bytes) -> ProjectionResult:
    header, payload = _unpack(blob)
    if header.get("kind") != "projection":
        raise BlockFormatError(f"expected a projection block, got {header.get('kind')!r}")
    coords = _coords_from(payload, int(header["rows"]))
    return ProjectionResult(
        coordinates=coords,
        config=ProjectionConfig.from_dict(header["config"]),
        attributes=tuple(header["attributes"]),
        alphabet_id=header.get("alphabet"),
    )


@dataclass(frozen=True)
class LayoutBlock:
    """Deserialized layout: world positions plus the column-header table."""

    attribute: str
    columns: list[LayoutColumn]
    config: LayoutConfig
    positions: np.ndarray
    bin_spec: BinSpec | None = None


def layout_to_bytes(layout: GridLayout) -> bytes:
    header = {
        "kind": "layout",
        "rows": int(layout.positions.shape[0]),
        "attribute": layout.attribute,
        "config": {
            "cell_size": layout.config.cell_size,
            "column_gap": layout.config.column_gap,
            "aspect": layout.config.aspect,
            "sort_attribute": layout.config.sort_attribute,
        },
        "columns": [
            {
                "label": c.label,
                "count": c.count,
                "x_offset": c.x_offset,
                "width": c.width,
                "height": c.height,
            }
            for c in layout.columns
        ],
        "bins": None
        if layout.bin_spec is None
        else {
            "attribute": layout.bin_spec.attribute,
            "edges": [float(e) for e in layout.bin_spec.edges],
            "width": float(layout.bin_spec.width),
        },
    }
    return _pack(header, _coords_payload(layout.positions))


def layout_from_bytes(blob: bytes) -> LayoutBlock:
    header, payload = _unpack(blob)
    if header.get("kind") != "layout":
        raise BlockFormatError(f"expected a layout block, got {header.get('kind')!r}")
    positions = _coords_from(payload, int(header["rows"]))
    columns = [
        LayoutColumn(
            label=c["label"],
            count=c["count"],
            x_offset=c["x_offset"],
            width=c["width"],
            height=c["height"],
        )
        for c in header["columns"]
    ]
    cfg = header["config"]
    config = LayoutConfig(
        cell_size=cfg["cell_size"],
        column_gap=cfg["column_gap"],
        aspect=cfg["aspect"],
        sort_attribute=cfg["sort_attribute"],
    )
    bins = header.get("bins")
    bin_spec = None
    if bins is not None:
        bin_spec = BinSpec(
            attribute=bins["attribute"],
            edges=tuple(bins["edges"]),
            width=bins["width"],
        )
    return LayoutBlock(
        attribute=header["attribute"],
        columns=columns,
        config=config,
        positions=positions,
        bin_spec=bin_spec,
    )


def write_block(path, blob: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(blob)


def read_block(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()
