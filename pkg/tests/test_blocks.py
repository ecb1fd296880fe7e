"""Binary coordinate-block serialization round trips and corruption handling."""

import json
import struct

import numpy as np
import pytest

from daedalus.blocks import (
    MAGIC,
    layout_from_bytes,
    layout_to_bytes,
    projection_from_bytes,
    projection_to_bytes,
    read_block,
    write_block,
)
from daedalus.errors import BlockFormatError
from daedalus.layout import LayoutConfig, attribute_layout, bin_numeric_attribute
from daedalus.projection.pipeline import ProjectionConfig, ProjectionResult


def sample_result(rows=7):
    coords = np.random.default_rng(0).normal(size=(rows, 2)).astype(np.float32)
    return ProjectionResult(
        coordinates=coords,
        config=ProjectionConfig(n_neighbors=5, seed=9),
        attributes=("Area", "Elongation"),
        alphabet_id="A1",
        computed_at="2024-01-05T00:00:00+00:00",
    )


class TestProjectionBlocks:
    def test_round_trip(self):
        result = sample_result()
        back = projection_from_bytes(projection_to_bytes(result))
        np.testing.assert_array_equal(back.coordinates, result.coordinates)
        assert back.config == result.config
        assert back.attributes == result.attributes
        assert back.alphabet_id == "A1"

    def test_wall_clock_metadata_never_reaches_the_bytes(self):
        result = sample_result()
        twin = ProjectionResult(
            coordinates=result.coordinates,
            config=result.config,
            attributes=result.attributes,
            alphabet_id=result.alphabet_id,
            computed_at="1999-01-01T00:00:00+00:00",
        )
        assert projection_to_bytes(result) == projection_to_bytes(twin)
        assert projection_from_bytes(projection_to_bytes(result)).computed_at is None

    def test_magic_prefix(self):
        assert projection_to_bytes(sample_result())[:4] == MAGIC

    def test_bad_magic_rejected(self):
        blob = projection_to_bytes(sample_result())
        with pytest.raises(BlockFormatError, match="magic"):
            projection_from_bytes(b"XXXX" + blob[4:])

    def test_truncated_header_rejected(self):
        blob = projection_to_bytes(sample_result())
        with pytest.raises(BlockFormatError, match="truncated"):
            projection_from_bytes(blob[:10])

    def test_unreadable_header_rejected(self):
        junk = b"\xff\xfe{not json"
        blob = MAGIC + struct.pack("<I", len(junk)) + junk
        with pytest.raises(BlockFormatError, match="unreadable"):
            projection_from_bytes(blob)

    def test_payload_size_must_match_rows(self):
        blob = projection_to_bytes(sample_result())
        with pytest.raises(BlockFormatError, match="payload"):
            projection_from_bytes(blob + b"\x00" * 4)
        with pytest.raises(BlockFormatError, match="payload"):
            projection_from_bytes(blob[:-4])

    def test_layout_block_is_not_a_projection(self, synth_small):
        dataset, _, _ = synth_small
        layout = attribute_layout(dataset, "Supplier")
        with pytest.raises(BlockFormatError, match="projection"):
            projection_from_bytes(layout_to_bytes(layout))


class TestLayoutBlocks:
    def test_categorical_round_trip(self, synth_small):
        dataset, _, _ = synth_small
        layout = attribute_layout(dataset, "Supplier", config=LayoutConfig(column_gap=3))
        back = layout_from_bytes(layout_to_bytes(layout))
        np.testing.assert_array_equal(back.positions, layout.positions)
        assert back.attribute == "Supplier"
        assert back.config == layout.config
        assert back.bin_spec is None
        assert [c.label for c in back.columns] == [c.label for c in layout.columns]
        assert [c.x_offset for c in back.columns] == [c.x_offset for c in layout.columns]
        assert sum(c.count for c in back.columns) == len(dataset)

    def test_numeric_round_trip_keeps_bins(self, synth_small):
        dataset, _, _ = synth_small
        spec = bin_numeric_attribute(dataset.numeric_column("Area"), 6, "Area")
        layout = attribute_layout(dataset, "Area", bins=spec)
        back = layout_from_bytes(layout_to_bytes(layout))
        assert back.bin_spec is not None
        assert back.bin_spec.width == layout.bin_spec.width
        assert tuple(back.bin_spec.edges) == tuple(
            float(e) for e in layout.bin_spec.edges
        )

    def test_projection_block_is_not_a_layout(self):
        with pytest.raises(BlockFormatError, match="layout"):
            layout_from_bytes(projection_to_bytes(sample_result()))

    def test_header_is_canonical_json(self, synth_small):
        dataset, _, _ = synth_small
        layout = attribute_layout(dataset, "Supplier")
        blob = layout_to_bytes(layout)
        (head_len,) = struct.unpack("<I", blob[4:8])
        header = json.loads(blob[8 : 8 + head_len])
        assert header["kind"] == "layout"
        assert list(header) == sorted(header)


class TestFileHelpers:
    def test_write_then_read(self, tmp_path):
        blob = projection_to_bytes(sample_result())
        path = tmp_path / "coords.ddlb"
        write_block(path, blob)
        assert read_block(path) == blob
