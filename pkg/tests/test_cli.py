"""End-to-end command-line flows over temporary directories."""

import json
import subprocess
import sys

import numpy as np
import pytest

from daedalus.blocks import layout_from_bytes, projection_from_bytes, read_block
from daedalus.cli import TRUTH_NAME, knn_purity, main
from daedalus.ingest import MANIFEST_NAME, PARTICLES_NAME, load_dataset
from daedalus.labels import LabelStore, replay_log
from daedalus.service import LABEL_LOG_NAME

FAST_PROJECT = [
    "--attrs", "Area,Elongation,Circularity",
    "--epochs", "30",
    "--n-neighbors", "10",
    "--seed", "3",
]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "corpus"
    code = main(
        ["synth", "--n", "150", "--classes", "3", "--lots", "5", "--suppliers", "4",
         "--seed", "7", "--no-images", "-o", str(out)]
    )
    assert code == 0
    return out


@pytest.fixture(scope="module")
def rendered_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-rendered") / "corpus"
    code = main(
        ["synth", "--n", "12", "--classes", "2", "--lots", "2", "--suppliers", "2",
         "--seed", "1", "-o", str(out)]
    )
    assert code == 0
    return out


class TestSynth:
    def test_writes_dataset_and_truth(self, synth_dir):
        assert (synth_dir / MANIFEST_NAME).is_file()
        assert (synth_dir / PARTICLES_NAME).is_file()
        truth = json.loads((synth_dir / TRUTH_NAME).read_text())
        assert len(truth) == 150
        dataset = load_dataset(synth_dir / MANIFEST_NAME)
        assert list(truth) == dataset.ids

    def test_rendered_corpus_includes_images(self, rendered_dir):
        assert len(list((rendered_dir / "thumbs").glob("*.png"))) == 12
        assert len(list((rendered_dir / "images").glob("*.png"))) == 12

    def test_invalid_counts_exit_2(self, tmp_path):
        code = main(["synth", "--n", "5", "--classes", "9", "-o", str(tmp_path / "x")])
        assert code == 2


class TestIngest:
    def test_round_trips_a_corpus(self, rendered_dir, tmp_path):
        out = tmp_path / "copy"
        code = main(["ingest", str(rendered_dir / MANIFEST_NAME), "-o", str(out)])
        assert code == 0
        original = load_dataset(rendered_dir / MANIFEST_NAME)
        copied = load_dataset(out / MANIFEST_NAME)
        assert copied.ids == original.ids
        np.testing.assert_array_equal(
            copied.numeric_column("Area"), original.numeric_column("Area")
        )
        assert len(list((out / "thumbs").glob("*.png"))) == 12

    def test_missing_manifest_exits_2(self, tmp_path):
        code = main(["ingest", str(tmp_path / "nope.json"), "-o", str(tmp_path / "o")])
        assert code == 2


class TestProject:
    def test_writes_a_parseable_block(self, synth_dir, tmp_path):
        out = tmp_path / "embedding.ddlb"
        code = main(["project", str(synth_dir), *FAST_PROJECT, "-o", str(out)])
        assert code == 0
        result = projection_from_bytes(read_block(out))
        assert result.coordinates.shape == (150, 2)
        assert result.attributes == ("Area", "Elongation", "Circularity")
        assert np.isfinite(result.coordinates).all()

    def test_repeat_runs_are_byte_identical(self, synth_dir, tmp_path):
        a, b = tmp_path / "a.ddlb", tmp_path / "b.ddlb"
        assert main(["project", str(synth_dir), *FAST_PROJECT, "-o", str(a)]) == 0
        assert main(["project", str(synth_dir), *FAST_PROJECT, "-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_attribute_exits_2(self, synth_dir, tmp_path):
        code = main(
            ["project", str(synth_dir), "--attrs", "Bogus,Area", "-o",
             str(tmp_path / "x.ddlb")]
        )
        assert code == 2

    def test_supervised_run_uses_the_label_log(self, synth_dir, tmp_path):
        store = LabelStore(log_path=synth_dir / LABEL_LOG_NAME)
        if store.find_by_name("CliColors") is None:
            alpha = store.upsert_alphabet(
                {"name": "CliColors", "labels": [{"name": "blue"}, {"name": "bright"}]}
            )
            dataset = load_dataset(synth_dir / MANIFEST_NAME)
            store.assign(alpha.id, dataset.ids[:40], "blue")
        out = tmp_path / "guided.ddlb"
        code = main(
            ["project", str(synth_dir), *FAST_PROJECT, "--alphabet", "CliColors",
             "-o", str(out)]
        )
        assert code == 0
        result = projection_from_bytes(read_block(out))
        assert result.alphabet_id == store.resolve("CliColors").id

    def test_warm_start_from_block(self, synth_dir, tmp_path):
        base = tmp_path / "base.ddlb"
        assert main(["project", str(synth_dir), *FAST_PROJECT, "-o", str(base)]) == 0
        out = tmp_path / "warm.ddlb"
        code = main(
            ["project", str(synth_dir), *FAST_PROJECT, "--initial", str(base),
             "-o", str(out)]
        )
        assert code == 0
        assert projection_from_bytes(read_block(out)).coordinates.shape == (150, 2)


class TestLayout:
    def test_categorical_layout_block(self, synth_dir, tmp_path):
        out = tmp_path / "supplier.ddlb"
        code = main(["layout", str(synth_dir), "--attr", "Supplier", "-o", str(out)])
        assert code == 0
        block = layout_from_bytes(read_block(out))
        assert block.attribute == "Supplier"
        assert sum(c.count for c in block.columns) == 150

    def test_numeric_layout_with_bins(self, synth_dir, tmp_path):
        out = tmp_path / "area.ddlb"
        code = main(
            ["layout", str(synth_dir), "--attr", "Area", "--bins", "6", "-o", str(out)]
        )
        assert code == 0
        assert layout_from_bytes(read_block(out)).bin_spec is not None

    def test_unknown_attribute_exits_2(self, synth_dir, tmp_path):
        code = main(["layout", str(synth_dir), "--attr", "Nope", "-o", str(tmp_path / "x")])
        assert code == 2


class TestLabelsCommand:
    def test_export_then_import_elsewhere(self, tmp_path):
        src, dst = tmp_path / "src", tmp_path / "dst"
        src.mkdir()
        dst.mkdir()
        store = LabelStore(log_path=src / LABEL_LOG_NAME)
        alpha = store.upsert_alphabet(
            {"name": "MovedColors", "labels": [{"name": "blue"}]}
        )
        store.assign(alpha.id, ["P000001", "P000002"], "blue")

        snapshot = tmp_path / "labels.json"
        assert main(["labels", "export", str(src), str(snapshot)]) == 0
        assert main(["labels", "import", str(dst), str(snapshot)]) == 0

        imported = replay_log(dst / LABEL_LOG_NAME)
        moved = imported.find_by_name("MovedColors")
        assert imported.assignments_of(moved.id) == {
            "P000001": "blue",
            "P000002": "blue",
        }
        # adopting a snapshot into an empty store preserves bytes
        exported_again = tmp_path / "again.json"
        assert main(["labels", "export", str(dst), str(exported_again)]) == 0
        assert exported_again.read_bytes() == snapshot.read_bytes()

    def test_import_conflict_exits_2(self, tmp_path):
        src, dst = tmp_path / "src", tmp_path / "dst"
        src.mkdir()
        dst.mkdir()
        a = LabelStore(log_path=src / LABEL_LOG_NAME)
        aa = a.upsert_alphabet({"name": "C", "labels": [{"name": "x"}, {"name": "y"}]})
        a.assign(aa.id, ["P1"], "x")
        b = LabelStore(log_path=dst / LABEL_LOG_NAME)
        bb = b.upsert_alphabet({"name": "C", "labels": [{"name": "x"}, {"name": "y"}]})
        b.assign(bb.id, ["P1"], "y")

        snapshot = tmp_path / "labels.json"
        assert main(["labels", "export", str(src), str(snapshot)]) == 0
        assert main(["labels", "import", str(dst), str(snapshot)]) == 2
        assert (
            main(["labels", "import", str(dst), str(snapshot), "--policy", "theirs"])
            == 0
        )
        merged = replay_log(dst / LABEL_LOG_NAME)
        assert merged.assignments_of(merged.find_by_name("C").id)["P1"] == "x"


class TestEvalPurity:
    def test_json_report(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "scored.ddlb"
        assert main(["project", str(synth_dir), *FAST_PROJECT, "-o", str(out)]) == 0
        code = main(
            ["eval-purity", str(out), "--truth", str(synth_dir / TRUTH_NAME), "--json"]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out.strip())
        assert set(report) == {"purity", "k", "count"}
        assert 0.0 <= report["purity"] <= 1.0
        assert report["count"] == 150
        assert report["k"] == 10

    def test_plain_output_is_a_bare_number(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "scored2.ddlb"
        assert main(["project", str(synth_dir), *FAST_PROJECT, "-o", str(out)]) == 0
        assert main(["eval-purity", str(out), "--truth", str(synth_dir / TRUTH_NAME)]) == 0
        text = capsys.readouterr().out.strip()
        assert 0.0 <= float(text) <= 1.0

    def test_truth_size_mismatch_exits_2(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "scored3.ddlb"
        assert main(["project", str(synth_dir), *FAST_PROJECT, "-o", str(out)]) == 0
        short = tmp_path / "short.json"
        truth = json.loads((synth_dir / TRUTH_NAME).read_text())
        short.write_text(json.dumps(dict(list(truth.items())[:10])))
        assert main(["eval-purity", str(out), "--truth", str(short)]) == 2


class TestKnnPurityOracle:
    def test_perfectly_separated_classes_score_one(self):
        coords = np.vstack(
            [np.random.default_rng(0).normal(0, 0.1, size=(20, 2)),
             np.random.default_rng(1).normal(100, 0.1, size=(20, 2))]
        )
        codes = np.array([0] * 20 + [1] * 20)
        assert knn_purity(coords, codes, k=5) == 1.0

    def test_interleaved_labels_score_low(self):
        coords = np.linspace(0, 1, 40).reshape(-1, 1) * np.ones((1, 2))
        codes = np.arange(40) % 2
        assert knn_purity(coords, codes, k=2) < 0.2

    def test_tiny_inputs(self):
        assert knn_purity(np.zeros((1, 2)), np.zeros(1, dtype=int), k=5) == 0.0


class TestHarness:
    def test_unknown_command_raises_system_exit(self):
        with pytest.raises(SystemExit):
            main(["conjure"])

    def test_console_script_help(self):
        proc = subprocess.run(
            [sys.executable, "-m", "daedalus.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "daedalus" in proc.stdout
