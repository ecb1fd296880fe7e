"""Label alphabets, assignment log, snapshots, and merges."""

import json

import numpy as np
import pytest

from daedalus.errors import LabelStoreError, SnapshotError
from daedalus.labels import (
    MERGE_POLICIES,
    LabelStore,
    replay_log,
    snapshot_to_json,
)
from daedalus.layout import UNLABELED

CLOCK = lambda: "2024-01-05T00:00:00+00:00"

UNIVERSE = [f"P{i:03d}" for i in range(1, 41)]


def color_store():
    store = LabelStore(clock=CLOCK)
    alpha = store.upsert_alphabet(
        {"name": "Color", "labels": [{"name": "blue"}, {"name": "bright"}]},
        who="tester",
    )
    return store, alpha


class TestAlphabetLifecycle:
    def test_create_assigns_ids_and_palette_colors(self):
        store, alpha = color_store()
        assert alpha.id == "A1"
        assert [l.id for l in alpha.labels] == ["L1", "L2"]
        assert alpha.label_order() == ["blue", "bright"]
        colors = [l.color for l in alpha.labels]
        assert len(set(colors)) == 2
        for c in colors:
            assert c == c.lower() and c.startswith("#")
        assert alpha.created_by == "tester"
        assert alpha.created_at == CLOCK()

    def test_invalid_definitions_rejected(self):
        store = LabelStore()
        with pytest.raises(LabelStoreError):
            store.upsert_alphabet({"name": "", "labels": [{"name": "x"}]})
        with pytest.raises(LabelStoreError):
            store.upsert_alphabet({"name": "Empty", "labels": []})
        with pytest.raises(LabelStoreError):
            store.upsert_alphabet({"name": "Bad", "labels": [{"name": UNLABELED}]})
        with pytest.raises(LabelStoreError):
            store.upsert_alphabet(
                {"name": "Dup", "labels": [{"name": "a"}, {"name": "a"}]}
            )
        with pytest.raises(LabelStoreError):
            store.upsert_alphabet(
                {
                    "name": "Clash",
                    "labels": [
                        {"name": "a", "color": "#112233"},
                        {"name": "b", "color": "#112233"},
                    ],
                }
            )

    def test_duplicate_name_rejected_but_update_keeps_name(self):
        store, alpha = color_store()
        with pytest.raises(LabelStoreError):
            store.upsert_alphabet({"name": "Color", "labels": [{"name": "x"}]})
        updated = store.upsert_alphabet(
            {"id": alpha.id, "name": "Color", "labels": [l.to_dict() for l in alpha.labels]}
        )
        assert updated.id == alpha.id

    def test_unknown_alphabet_id_rejected(self):
        store = LabelStore()
        with pytest.raises(LabelStoreError):
            store.upsert_alphabet({"id": "A9", "name": "x", "labels": [{"name": "y"}]})

    def test_rename_label_by_id_preserves_assignments(self):
        store, alpha = color_store()
        store.assign(alpha.id, ["P001", "P002"], "blue")
        labels = [l.to_dict() for l in alpha.labels]
        labels[0]["name"] = "navy"
        store.upsert_alphabet({"id": alpha.id, "name": "Color", "labels": labels})
        assert store.assignments_of(alpha.id) == {"P001": "navy", "P002": "navy"}

    def test_removing_assigned_label_needs_force(self):
        store, alpha = color_store()
        store.assign(alpha.id, ["P001"], "bright")
        keep_blue = [alpha.labels[0].to_dict()]
        with pytest.raises(LabelStoreError, match="still assigned"):
            store.upsert_alphabet({"id": alpha.id, "name": "Color", "labels": keep_blue})
        store.upsert_alphabet(
            {"id": alpha.id, "name": "Color", "labels": keep_blue}, force=True
        )
        assert store.assignments_of(alpha.id) == {}
        assert store.get_alphabet(alpha.id).label_order() == ["blue"]

    def test_resolve_by_id_or_unique_name(self):
        store, alpha = color_store()
        assert store.resolve(alpha.id).id == alpha.id
        assert store.resolve("Color").id == alpha.id
        with pytest.raises(LabelStoreError):
            store.resolve("Texture")


class TestAssignments:
    def test_assign_reports_changed_count(self):
        store, alpha = color_store()
        assert store.assign(alpha.id, UNIVERSE[:10], "blue") == 10
        # idempotent re-assign changes nothing
        assert store.assign(alpha.id, UNIVERSE[:10], "blue") == 0
        # overwrite counts only particles that actually flip
        assert store.assign(alpha.id, UNIVERSE[:4], "bright") == 4
        assert store.assignments_of(alpha.id)["P001"] == "bright"
        assert store.assignments_of(alpha.id)["P005"] == "blue"

    def test_assign_accepts_label_id(self):
        store, alpha = color_store()
        store.assign(alpha.id, ["P001"], alpha.labels[1].id)
        assert store.assignments_of(alpha.id) == {"P001": "bright"}

    def test_unknown_label_rejected(self):
        store, alpha = color_store()
        with pytest.raises(LabelStoreError, match="unknown label"):
            store.assign(alpha.id, ["P001"], "chartreuse")

    def test_unassign_is_the_inverse(self):
        store, alpha = color_store()
        store.assign(alpha.id, UNIVERSE[:6], "blue")
        assert store.unassign(alpha.id, UNIVERSE[:3]) == 3
        assert store.unassign(alpha.id, UNIVERSE[:3]) == 0
        assert len(store.assignments_of(alpha.id)) == 3

    def test_query_by_label_and_unlabeled_complement(self):
        store, alpha = color_store()
        store.assign(alpha.id, ["P002", "P001"], "blue")
        store.assign(alpha.id, ["P003"], "bright")
        assert store.query_by_label(alpha.id, "blue") == ["P001", "P002"]
        rest = store.query_by_label(alpha.id, UNLABELED, universe=UNIVERSE)
        assert rest == UNIVERSE[3:]
        with pytest.raises(LabelStoreError):
            store.query_by_label(alpha.id, UNLABELED)
        with pytest.raises(LabelStoreError, match="unknown label"):
            store.query_by_label(alpha.id, "mauve")

    def test_as_categorical_view(self):
        store, alpha = color_store()
        store.assign(alpha.id, ["P001"], "blue")
        order, assignments = store.as_categorical(alpha.id)
        assert order == ["blue", "bright", UNLABELED]
        assert assignments == {"P001": "blue"}

    def test_random_ops_keep_labels_a_partition(self):
        store, alpha = color_store()
        rng = np.random.default_rng(42)
        labels = alpha.label_order()
        for _ in range(400):
            pick = [UNIVERSE[i] for i in rng.choice(40, size=rng.integers(1, 8))]
            if rng.random() < 0.7:
                store.assign(alpha.id, pick, labels[rng.integers(0, len(labels))])
            else:
                store.unassign(alpha.id, pick)
        groups = [set(store.query_by_label(alpha.id, l)) for l in labels]
        groups.append(set(store.query_by_label(alpha.id, UNLABELED, universe=UNIVERSE)))
        assert sum(len(g) for g in groups) == len(UNIVERSE)
        assert set().union(*groups) == set(UNIVERSE)


class TestLogAndSnapshots:
    def test_log_file_replays_to_identical_state(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        store = LabelStore(log_path=path, clock=CLOCK)
        alpha = store.upsert_alphabet(
            {"name": "Color", "labels": [{"name": "blue"}, {"name": "bright"}]}
        )
        store.assign(alpha.id, UNIVERSE[:7], "blue")
        store.unassign(alpha.id, UNIVERSE[:2])
        store.assign(alpha.id, UNIVERSE[5:9], "bright")

        assert store.log_position == 4
        assert len(path.read_text().splitlines()) == 4

        replayed = replay_log(path)
        assert replayed.export_snapshot() == store.export_snapshot()

    def test_corrupt_log_line_is_reported_with_its_number(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        store = LabelStore(log_path=path)
        store.upsert_alphabet({"name": "Color", "labels": [{"name": "blue"}]})
        with open(path, "a") as f:
            f.write("{not json\n")
        with pytest.raises(LabelStoreError, match="corrupt log line 2"):
            LabelStore(log_path=path)

    def test_export_import_round_trip_is_byte_equal(self):
        store, alpha = color_store()
        store.assign(alpha.id, UNIVERSE[:12], "blue")
        store.assign(alpha.id, UNIVERSE[12:15], "bright")
        store.unassign(alpha.id, UNIVERSE[:2])
        text = snapshot_to_json(store.export_snapshot())

        fresh = LabelStore()
        report = fresh.import_snapshot(json.loads(text))
        assert report["conflicts"] == []
        assert snapshot_to_json(fresh.export_snapshot()) == text

    def test_import_rejects_invalid_documents(self):
        store, alpha = color_store()
        store.assign(alpha.id, ["P001"], "blue")
        doc = store.export_snapshot()

        bad_version = dict(doc, version=2)
        with pytest.raises(SnapshotError):
            LabelStore().import_snapshot(bad_version)

        twice = json.loads(snapshot_to_json(doc))
        twice["assignments"].append(["P001", alpha.id, alpha.labels[1].id])
        with pytest.raises(SnapshotError, match="assigned twice"):
            LabelStore().import_snapshot(twice)

        tampered = json.loads(snapshot_to_json(doc))
        tampered["assignments"] = []
        with pytest.raises(SnapshotError, match="disagree"):
            LabelStore().import_snapshot(tampered)

    def test_assignments_csv_uses_names(self):
        store, alpha = color_store()
        store.assign(alpha.id, ["P002", "P001"], "blue")
        text = store.export_assignments_csv()
        assert text.splitlines() == [
            "particle,alphabet,label",
            "P001,Color,blue",
            "P002,Color,blue",
        ]


def two_sided_fixtures():
    ours, a = color_store()
    ours.assign(a.id, ["P001", "P002"], "blue")

    theirs = LabelStore(clock=CLOCK)
    b = theirs.upsert_alphabet(
        {"name": "Color", "labels": [{"name": "blue"}, {"name": "bright"}]}
    )
    theirs.assign(b.id, ["P001"], "bright")  # conflicts with ours
    theirs.assign(b.id, ["P003"], "blue")  # novel assignment
    return ours, a, theirs.export_snapshot()


class TestMerge:
    def test_policies_tuple(self):
        assert MERGE_POLICIES == ("reject", "theirs", "ours")

    def test_reject_lists_conflicts(self):
        ours, a, doc = two_sided_fixtures()
        with pytest.raises(LabelStoreError, match="1 conflicting"):
            ours.import_snapshot(doc, policy="reject")

    def test_theirs_overwrites_conflicts(self):
        ours, a, doc = two_sided_fixtures()
        report = ours.import_snapshot(doc, policy="theirs")
        assert [c["particle"] for c in report["conflicts"]] == ["P001"]
        got = ours.assignments_of(a.id)
        assert got == {"P001": "bright", "P002": "blue", "P003": "blue"}

    def test_ours_keeps_local_assignments(self):
        ours, a, doc = two_sided_fixtures()
        report = ours.import_snapshot(doc, policy="ours")
        assert len(report["conflicts"]) == 1
        got = ours.assignments_of(a.id)
        assert got == {"P001": "blue", "P002": "blue", "P003": "blue"}

    def test_merge_creates_missing_alphabets_and_labels(self):
        ours, a = color_store()
        other = LabelStore(clock=CLOCK)
        t = other.upsert_alphabet(
            {"name": "Texture", "labels": [{"name": "rough"}]}
        )
        other.assign(t.id, ["P009"], "rough")
        ours.import_snapshot(other.export_snapshot(), policy="theirs")
        merged = ours.find_by_name("Texture")
        assert merged is not None
        assert ours.assignments_of(merged.id) == {"P009": "rough"}

    def test_unknown_policy_rejected(self):
        ours, a, doc = two_sided_fixtures()
        with pytest.raises(LabelStoreError, match="unknown merge policy"):
            ours.import_snapshot(doc, policy="vote")
