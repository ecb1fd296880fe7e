"""Command-line entry points.

Every subcommand is a thin composition of engine operations: ingest and
synth produce on-disk datasets, project and layout produce binary
coordinate blocks, labels moves snapshots in and out of the label log,
serve starts the HTTP API, and eval-purity scores an embedding against
synthetic ground truth. Logs go to stderr; data goes only to the paths
the user named. Exit codes: 0 success, 2 domain/validation error, 1
anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .blocks import (
    layout_to_bytes,
    projection_from_bytes,
    projection_to_bytes,
    read_block,
    write_block,
)
from .errors import ConfigError, DaedalusError
from .features import encode_target
from .ingest import (
    IMAGES_DIR,
    MANIFEST_NAME,
    load_dataset,
    load_images,
    write_dataset,
    write_image_store,
)
from .labels import MERGE_POLICIES, LabelStore, snapshot_to_json
from .layout import LayoutConfig, attribute_layout, bin_numeric_attribute
from .model import Dataset
from .projection import ProjectionConfig, project
from .service import LABEL_LOG_NAME, create_app
from .synth import SynthConfig, generate_synthetic

log = logging.getLogger("daedalus")

TRUTH_NAME = "truth.json"
DEFAULT_PORT = 8323


def _load(data_dir: str) -> Dataset:
    return load_dataset(Path(data_dir) / MANIFEST_NAME)


def cmd_ingest(args) -> int:
    t0 = time.monotonic()
    manifest = Path(args.manifest)
    dataset = load_dataset(manifest)
    log.info("loaded %d particles in %.1fs", len(dataset), time.monotonic() - t0)
    store = load_images(dataset, manifest.parent / IMAGES_DIR, workers=args.workers)
    if store.missing:
        log.warning("%d particles got placeholder thumbnails", len(store.missing))
    write_dataset(dataset, args.out)
    write_image_store(store, args.out)
    log.info("wrote dataset to %s", args.out)
    return 0


def cmd_synth(args) -> int:
    config = SynthConfig(
        particle_count=args.n,
        class_count=args.classes,
        lot_count=args.lots,
        supplier_count=args.suppliers,
        seed=args.seed,
        size_class_shift=args.size_shift,
    )
    t0 = time.monotonic()
    dataset, store, truth = generate_synthetic(
        config, render_images=not args.no_images, workers=args.workers
    )
    out = Path(args.out)
    write_dataset(dataset, out)
    write_image_store(store, out)
    # ground truth in dataset row order; eval-purity pairs rows positionally
    (out / TRUTH_NAME).write_text(
        json.dumps(truth, indent=0), encoding="utf-8"
    )
    log.info(
        "synthesized %d particles (%d classes) in %.1fs -> %s",
        len(dataset), args.classes, time.monotonic() - t0, out,
    )
    return 0


def cmd_project(args) -> int:
    dataset = _load(args.data_dir)
    attributes = [a.strip() for a in args.attrs.split(",") if a.strip()]
    config = ProjectionConfig(
        n_neighbors=args.n_neighbors,
        min_dist=args.min_dist,
        spread=args.spread,
        n_epochs=args.epochs,
        negative_sample_rate=args.negative_sample_rate,
        initial_learning_rate=args.learning_rate,
        far_weight=args.far_weight,
        unknown_weight=args.unknown_weight,
        seed=args.seed,
    )
    target = None
    alphabet_id = None
    if args.alphabet:
        store = LabelStore(log_path=Path(args.data_dir) / LABEL_LOG_NAME)
        alphabet = store.resolve(args.alphabet)
        alphabet_id = alphabet.id
        target = encode_target(
            dataset, store.assignments_of(alphabet.id), alphabet.label_order()
        )
        log.info(
            "supervising with %r (%.0f%% labeled)",
            alphabet.name, 100 * target.labeled_fraction(),
        )
    initial = None
    if args.initial:
        previous = projection_from_bytes(read_block(args.initial))
        initial = np.array(previous.coordinates, dtype=np.float64)

    t0 = time.monotonic()
    result = project(
        dataset, attributes, config, target=target,
        alphabet_id=alphabet_id, initial=initial,
    )
    log.info("projected %d particles in %.1fs", len(dataset), time.monotonic() - t0)
    write_block(args.out, projection_to_bytes(result))
    log.info("wrote %s", args.out)
    return 0


def cmd_layout(args) -> int:
    dataset = _load(args.data_dir)
    descriptor = dataset.schema.require(args.attr)
    bins = None
    if descriptor.is_numeric:
        bins = bin_numeric_attribute(
            dataset.numeric_column(args.attr), args.bins, args.attr
        )
    grid = attribute_layout(
        dataset, args.attr, bins=bins,
        config=LayoutConfig(sort_attribute=args.sort_attribute),
    )
    write_block(args.out, layout_to_bytes(grid))
    log.info(
        "laid out %d particles into %d columns -> %s",
        len(dataset), len(grid.columns), args.out,
    )
    return 0


def cmd_labels(args) -> int:
    store = LabelStore(log_path=Path(args.data_dir) / LABEL_LOG_NAME)
    if args.action == "export":
        Path(args.file).write_text(
            snapshot_to_json(store.export_snapshot()), encoding="utf-8"
        )
        log.info("exported %d alphabets to %s", len(store.alphabets()), args.file)
        return 0
    document = json.loads(Path(args.file).read_text(encoding="utf-8"))
    report = store.import_snapshot(document, policy=args.policy)
    log.info("import report: %s", json.dumps(report, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    port = args.port or int(os.environ.get("DAEDALUS_PORT", DEFAULT_PORT))
    app = create_app(args.data_dir, workers=args.workers)
    log.info("serving %s on port %d", args.data_dir, port)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


def knn_purity(coordinates: np.ndarray, codes: np.ndarray, k: int) -> float:
    """Mean fraction of each point's k nearest neighbors sharing its code.

    Exact all-pairs distances; ties broken by lower row index so results
    are reproducible on duplicate coordinates.
    """
    n = len(coordinates)
    if n <= 1:
        return 0.0
    k = min(k, n - 1)
    coords = np.asarray(coordinates, dtype=np.float64)
    row_index = np.arange(n)
    total = 0.0
    chunk = 512
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = coords[start:stop]
        d2 = ((block[:, None, :] - coords[None, :, :]) ** 2).sum(axis=-1)
        for i in range(stop - start):
            d2[i, start + i] = np.inf
            nearest = np.lexsort((row_index, d2[i]))[:k]
            total += float((codes[nearest] == codes[start + i]).mean())
    return total / n


def cmd_eval_purity(args) -> int:
    result = projection_from_bytes(read_block(args.result))
    truth = json.loads(Path(args.truth).read_text(encoding="utf-8"))
    n = result.coordinates.shape[0]
    if len(truth) != n:
        raise ConfigError(
            f"truth file has {len(truth)} entries but the result has {n} rows"
        )
    classes = sorted(set(truth.values()))
    index = {c: j for j, c in enumerate(classes)}
    codes = np.array([index[c] for c in truth.values()], dtype=np.int64)
    purity = knn_purity(result.coordinates.astype(np.float64), codes, args.k)
    if args.json:
        print(json.dumps({"purity": purity, "k": args.k, "count": n}))
    else:
        print(f"{purity:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daedalus", description="particle corpus exploration engine"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, validate, and normalize a dataset")
    p.add_argument("manifest", help="path to manifest.json")
    p.add_argument("-o", "--out", required=True, help="output dataset directory")
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--lots", type=int, default=70)
    p.add_argument("--suppliers", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size-shift", type=float, default=SynthConfig.size_class_shift,
                   help="class separation of the size attributes")
    p.add_argument("--no-images", action="store_true",
                   help="skip rendering; placeholder thumbnails only")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("project", help="compute a 2D embedding")
    p.add_argument("data_dir")
    p.add_argument("--attrs", required=True, help="comma-separated attribute names")
    p.add_argument("--alphabet", help="supervising label alphabet (name or id)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-neighbors", type=int, default=15)
    p.add_argument("--min-dist", type=float, default=0.1)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--negative-sample-rate", type=int, default=5)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--far-weight", type=float, default=0.0)
    p.add_argument("--unknown-weight", type=float, default=0.0)
    p.add_argument("--initial", help="warm-start from a previous result block")
    p.add_argument("-o", "--out", required=True, help="output result block path")
    p.set_defaults(fn=cmd_project)

    p = sub.add_parser("layout", help="compute an attribute grid layout")
    p.add_argument("data_dir")
    p.add_argument("--attr", required=True)
    p.add_argument("--bins", type=int, default=10,
                   help="target bin count for numeric attributes")
    p.add_argument("--sort-attribute", help="override the stacking sort key")
    p.add_argument("-o", "--out", required=True, help="output layout block path")
    p.set_defaults(fn=cmd_layout)

    p = sub.add_parser("labels", help="move label snapshots in and out")
    p.add_argument("action", choices=("export", "import"))
    p.add_argument("data_dir")
    p.add_argument("file")
    p.add_argument("--policy", choices=MERGE_POLICIES,
                   default="reject", help="conflict policy for import")
    p.set_defaults(fn=cmd_labels)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("data_dir")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0,
                   help=f"default $DAEDALUS_PORT or {DEFAULT_PORT}")
    p.add_argument("--workers", type=int, default=2,
                   help="projection job pool size")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("eval-purity", help="score an embedding against ground truth")
    p.add_argument("result", help="projection result block")
    p.add_argument("--truth", required=True, help="truth.json written by synth")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(fn=cmd_eval_purity)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DaedalusError as e:
        log.error("%s: %s", e.code, e.message)
        for detail in e.details:
            log.error("  %s", detail)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary maps to exit code
        log.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
