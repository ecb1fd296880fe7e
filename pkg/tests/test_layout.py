"""Nice binning and grid layout placement rules."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from daedalus.errors import ConfigError
from daedalus.layout import (
    UNLABELED,
    BinSpec,
    LayoutConfig,
    alphabet_layout,
    attribute_layout,
    bin_numeric_attribute,
)
from daedalus.model import Dataset

from test_model import particle, tiny_schema


class TestBinning:
    def test_even_span_target_five(self):
        spec = bin_numeric_attribute(np.array([0.0, 10.0]), 5)
        assert spec.edges == (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)
        assert spec.width == 2.0

    def test_ragged_span_snaps_to_same_edges(self):
        spec = bin_numeric_attribute(np.array([0.13, 9.7]), 5)
        assert spec.edges == (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)

    def test_constant_column_degenerates(self):
        spec = bin_numeric_attribute(np.array([5.0, 5.0, 5.0]), 5)
        assert spec.edges == (5.0, 5.0)
        assert spec.width == 0.0
        assert spec.labels == ["[5]"]
        np.testing.assert_array_equal(spec.assign(np.array([5.0, 5.0])), [0, 0])

    def test_labels_are_half_open_until_the_last(self):
        spec = bin_numeric_attribute(np.array([0.0, 10.0]), 5)
        assert spec.labels[0] == "[0, 2)"
        assert spec.labels[-1] == "[8, 10]"

    def test_assign_clamps_outliers(self):
        spec = bin_numeric_attribute(np.array([0.0, 10.0]), 5)
        np.testing.assert_array_equal(
            spec.assign(np.array([-1.0, 0.0, 9.99, 10.0, 11.0])), [0, 0, 4, 4, 4]
        )

    def test_invalid_inputs(self):
        with pytest.raises(ConfigError):
            bin_numeric_attribute(np.array([1.0]), 0)
        with pytest.raises(ConfigError):
            bin_numeric_attribute(np.array([]), 5)
        with pytest.raises(ConfigError):
            bin_numeric_attribute(np.array([1.0, np.nan]), 5)

    @given(
        lo=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        span=st.floats(min_value=1e-6, max_value=1e6),
        target=st.integers(min_value=1, max_value=40),
    )
    @settings(max_examples=200)
    def test_nice_edges_cover_the_data(self, lo, span, target):
        values = np.array([lo, lo + span])
        spec = bin_numeric_attribute(values, target)
        assert spec.edges[0] <= lo
        assert spec.edges[-1] >= lo + span
        # width comes off the 1/2/5 ladder
        mantissa = spec.width / (10.0 ** np.floor(np.log10(spec.width)))
        assert min(abs(mantissa - m) for m in (1.0, 2.0, 5.0, 10.0)) < 1e-9
        assert len(spec.labels) == spec.bin_count
        assert spec.assign(values).max() < spec.bin_count


def five_particle_dataset():
    # elongations 5..1 so the stacking order is the id order
    return Dataset(
        schema=tiny_schema(),
        particles=[
            particle(f"P{i + 1}", supplier="A", elongation=float(5 - i))
            for i in range(5)
        ],
    )


class TestGridPlacement:
    def test_bottom_row_fills_first(self):
        ds = five_particle_dataset()
        # aspect 2 -> sub-grid width ceil(sqrt(5/2)) = 2
        grid = attribute_layout(ds, "Supplier", config=LayoutConfig(aspect=2.0))
        assert grid.columns[0].width == 2
        assert grid.columns[0].height == 3
        rows = {p: int(grid.row_of[i]) for i, p in enumerate(ds.ids)}
        subs = {p: int(grid.sub_column_of[i]) for i, p in enumerate(ds.ids)}
        assert (rows["P1"], subs["P1"]) == (0, 0)  # most elongated, bottom-left
        assert (rows["P2"], subs["P2"]) == (0, 1)
        assert (rows["P3"], subs["P3"]) == (1, 0)
        assert (rows["P4"], subs["P4"]) == (1, 1)
        assert (rows["P5"], subs["P5"]) == (2, 0)

    def test_ties_break_by_id_ascending(self):
        ds = Dataset(
            schema=tiny_schema(),
            particles=[particle("P2", elongation=1.0), particle("P1", elongation=1.0)],
        )
        grid = attribute_layout(ds, "Supplier", config=LayoutConfig(aspect=0.5))
        assert grid.sub_column_of[ds.row_of("P1")] == 0
        assert grid.sub_column_of[ds.row_of("P2")] == 1

    def test_single_particle_sits_bottom_left_of_its_category(self):
        ds = Dataset(schema=tiny_schema(), particles=[particle("P1", supplier="C")])
        grid = attribute_layout(ds, "Supplier")
        i = ds.row_of("P1")
        assert grid.column_of[i] == 2  # C is third in schema order
        assert grid.row_of[i] == 0 and grid.sub_column_of[i] == 0
        assert grid.positions[i, 0] == grid.columns[2].x_offset
        assert grid.positions[i, 1] == 0.0

    def test_empty_categories_keep_header_columns(self):
        ds = Dataset(schema=tiny_schema(), particles=[particle("P1")])
        grid = attribute_layout(ds, "Supplier")
        assert [c.label for c in grid.columns] == list("ABCDEFGH")
        assert grid.column_counts() == [1, 0, 0, 0, 0, 0, 0, 0]
        assert all(c.width == 1 for c in grid.columns)

    def test_numeric_attribute_requires_bins(self, synth_small):
        dataset, _, _ = synth_small
        with pytest.raises(ConfigError):
            attribute_layout(dataset, "Area")
        spec = bin_numeric_attribute(dataset.numeric_column("Area"), 10, "Area")
        grid = attribute_layout(dataset, "Area", bins=spec)
        assert len(grid.columns) == spec.bin_count
        assert grid.bin_spec == spec

    def test_sort_attribute_override(self):
        ds = Dataset(
            schema=tiny_schema(),
            particles=[
                particle("P1", elongation=1.0, area=10.0),
                particle("P2", elongation=2.0, area=20.0),
            ],
        )
        by_area = attribute_layout(
            ds, "Supplier", config=LayoutConfig(sort_attribute="Area", aspect=0.5)
        )
        assert by_area.sub_column_of[ds.row_of("P2")] == 0  # larger area first


class TestLayoutInvariants:
    def test_supplier_layout_over_synthetic_corpus(self, synth_small):
        dataset, _, _ = synth_small
        grid = attribute_layout(dataset, "Supplier")
        assert len(grid.columns) == 8
        assert sum(grid.column_counts()) == len(dataset)

        # placements unique, positions on the cell grid, counts match groups
        seen = set()
        elong = dataset.numeric_column("Elongation")
        for i in range(len(dataset)):
            key = (int(grid.column_of[i]), int(grid.sub_column_of[i]), int(grid.row_of[i]))
            assert key not in seen
            seen.add(key)
        col_by_label = {c.label: c for c in grid.columns}
        suppliers = dataset.category_column("Supplier")
        for label, column in col_by_label.items():
            assert column.count == suppliers.count(label)

        # within each sub-column, elongation is non-increasing going up
        order = sorted(
            range(len(dataset)),
            key=lambda i: (grid.column_of[i], grid.sub_column_of[i], grid.row_of[i]),
        )
        for a, b in zip(order, order[1:]):
            same = (
                grid.column_of[a] == grid.column_of[b]
                and grid.sub_column_of[a] == grid.sub_column_of[b]
            )
            if same:
                assert elong[a] >= elong[b]

    def test_positions_are_cell_multiples(self, synth_small):
        dataset, _, _ = synth_small
        grid = attribute_layout(dataset, "Supplier", config=LayoutConfig(cell_size=2.5))
        np.testing.assert_array_equal(grid.positions % 2.5, 0.0)

    def test_column_offsets_respect_gap(self, synth_small):
        dataset, _, _ = synth_small
        grid = attribute_layout(dataset, "Supplier", config=LayoutConfig(column_gap=3))
        for left, right in zip(grid.columns, grid.columns[1:]):
            assert right.x_offset == left.x_offset + left.width + 3


class TestAlphabetLayout:
    def test_unlabeled_forms_trailing_column(self, synth_small):
        dataset, _, _ = synth_small
        ids = dataset.ids
        assignments = {ids[0]: "blue", ids[1]: "blue", ids[2]: "bright"}
        grid = alphabet_layout(dataset, "Color", ["blue", "bright"], assignments)
        assert [c.label for c in grid.columns] == ["blue", "bright", UNLABELED]
        assert grid.column_counts() == [2, 1, len(dataset) - 3]
        assert grid.attribute == "Color"

    def test_layout_config_validation(self):
        with pytest.raises(ConfigError):
            LayoutConfig(cell_size=0.0)
        with pytest.raises(ConfigError):
            LayoutConfig(aspect=-1.0)
        with pytest.raises(ConfigError):
            LayoutConfig(column_gap=-1)


class TestBinSpecContainer:
    def test_bin_count_and_degenerate_labels(self):
        spec = BinSpec(attribute="Area", edges=(0.0, 1.0, 2.0), width=1.0)
        assert spec.bin_count == 2
        assert len(spec.labels) == 2
