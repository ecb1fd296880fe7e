"""Dataset loading/writing and thumbnail preparation.

A dataset on disk is one ``manifest.json`` (schema + provenance) plus one
``particles.csv`` whose header is ``id, image`` followed by the attribute
names in schema order. Decimal separator is ".", encoding UTF-8.

Thumbnails are precomputed at ingest (image volume is the serving
bottleneck, not CPU) and stored per particle in two variants: the plain
RGBA thumbnail and a background-transparent one. Background extraction by
corner-color thresholding is only guaranteed for synthetic imagery, which
renders on a uniform background.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DatasetValidationError, IngestError, ParseError
from .model import AttributeSchema, Dataset, ParticleRecord, validate_dataset

MANIFEST_NAME = "manifest.json"
PARTICLES_NAME = "particles.csv"
IMAGES_DIR = "images"
THUMBS_DIR = "thumbs"
DEFAULT_THUMB_EDGE = 64

PLACEHOLDER_COLOR = (180, 180, 180, 255)
BACKGROUND_TOLERANCE = 12  # per-channel distance for background masking


@dataclass
class ImageStore:
    """Per-particle original path + precomputed thumbnail PNG bytes.

    ``thumbnails`` hold the plain variant (opaque alpha); ``transparent``
    holds the background-masked variant. ``missing`` lists particle ids whose
    source file was absent and got the placeholder.
    """

    thumb_edge: int
    originals: dict[str, str] = field(default_factory=dict)
    thumbnails: dict[str, bytes] = field(default_factory=dict)
    transparent: dict[str, bytes] = field(default_factory=dict)
    # full-size PNG bytes for stores built in memory (synthetic corpora);
    # empty when originals live on disk
    sources: dict[str, bytes] = field(default_factory=dict)
    missing: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.thumbnails)

    def __contains__(self, particle_id: str) -> bool:
        return particle_id in self.thumbnails


def write_dataset(dataset: Dataset, out_dir: Path | str) -> Path:
    """Write manifest + CSV; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": "daedalus-dataset",
        "version": 1,
        "provenance": dataset.provenance,
        "created_at": dataset.created_at,
        "particles": PARTICLES_NAME,
        "images_dir": IMAGES_DIR,
        "thumbs_dir": THUMBS_DIR,
        "schema": dataset.schema.to_dict(),
    }
    manifest_path = out / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")

    names = dataset.schema.names
    with open(out / PARTICLES_NAME, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "image"] + names)
        for p in dataset.particles:
            row = [p.id, p.image_ref]
            for n in names:
                v = p.values[n]
                row.append(repr(float(v)) if isinstance(v, (int, float)) else str(v))
            writer.writerow(row)
    return manifest_path


def load_dataset(manifest_path: Path | str) -> Dataset:
    """Load and validate a dataset; row order is the CSV order.

    Raises IngestError on unreadable files, ParseError (with a 1-based line
    number, header = line 1) on malformed rows, DatasetValidationError when
    the parsed dataset violates its schema.
    """
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as e:
        raise IngestError(f"cannot read manifest {manifest_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"manifest is not valid JSON: {e}") from e

    try:
        schema = AttributeSchema.from_dict(manifest["schema"])
        provenance = manifest.get("provenance", "real")
        csv_name = manifest.get("particles", PARTICLES_NAME)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"manifest missing or malformed field: {e}") from e

    csv_path = manifest_path.parent / csv_name
    names = schema.names
    expected_cols = 2 + len(names)
    numeric = {d.name for d in schema.descriptors if d.is_numeric}

    particles: list[ParticleRecord] = []
    try:
        f = open(csv_path, newline="", encoding="utf-8")
    except OSError as e:
        raise IngestError(f"cannot read particle table {csv_path}: {e}") from e
    with f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("particle table is empty (no header)", line=1)
        if header != ["id", "image"] + names:
            raise ParseError(
                f"header mismatch: expected id, image, {', '.join(names)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if len(row) != expected_cols:
                raise ParseError(
                    f"row has {len(row)} columns, expected {expected_cols}", line=lineno
                )
            values: dict[str, float | str] = {}
            for name, raw in zip(names, row[2:]):
                if name in numeric:
                    try:
                        values[name] = float(raw)
                    except ValueError:
                        values[name] = raw  # reported by validation below
                else:
                    values[name] = raw
            particles.append(ParticleRecord(id=row[0], image_ref=row[1], values=values))

    dataset = Dataset(
        schema=schema,
        particles=particles,
        provenance=provenance,
        created_at=manifest.get("created_at", ""),
    )
    violations = validate_dataset(dataset)
    if violations:
        raise DatasetValidationError(violations)
    return dataset


def _thumbnail_size(width: int, height: int, edge: int) -> tuple[int, int]:
    """Aspect-preserving target size with max(edge) bound; never upscales."""
    longest = max(width, height)
    if longest <= edge:
        return width, height
    scale = edge / longest
    return max(1, round(width * scale)), max(1, round(height * scale))


def _background_mask(rgba: np.ndarray, tolerance: int = BACKGROUND_TOLERANCE) -> np.ndarray:
    """Boolean mask of background pixels, estimated from the corner colors."""
    corners = np.stack(
        [rgba[0, 0, :3], rgba[0, -1, :3], rgba[-1, 0, :3], rgba[-1, -1, :3]]
    ).astype(np.int16)
    bg = np.median(corners, axis=0)
    dist = np.abs(rgba[:, :, :3].astype(np.int16) - bg[None, None, :]).max(axis=2)
    return dist <= tolerance


def thumbnail_variants(image: Image.Image, edge: int) -> tuple[bytes, bytes]:
    """(plain, transparent) RGBA PNG bytes for one source image."""
    img = image.convert("RGBA")
    img = img.resize(_thumbnail_size(img.width, img.height, edge), Image.LANCZOS)
    arr = np.asarray(img).copy()
    arr[:, :, 3] = 255

    plain = io.BytesIO()
    Image.fromarray(arr, "RGBA").save(plain, format="PNG")

    masked = arr.copy()
    masked[_background_mask(arr), 3] = 0
    transparent = io.BytesIO()
    Image.fromarray(masked, "RGBA").save(transparent, format="PNG")
    return plain.getvalue(), transparent.getvalue()


def _placeholder_variants(edge: int) -> tuple[bytes, bytes]:
    side = max(8, edge // 4)
    arr = np.full((side, side, 4), PLACEHOLDER_COLOR, dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, "RGBA").save(buf, format="PNG")
    data = buf.getvalue()
    return data, data


def load_images(
    dataset: Dataset,
    image_dir: Path | str,
    thumb_edge: int = DEFAULT_THUMB_EDGE,
    workers: int = 4,
) -> ImageStore:
    """Build the ImageStore for a dataset from a directory of source PNGs.

    Missing files are not fatal: the particle gets a placeholder thumbnail and
    its id is appended to ``store.missing``.
    """
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise IngestError(f"image directory {image_dir} is not readable")

    store = ImageStore(thumb_edge=thumb_edge)
    placeholder = _placeholder_variants(thumb_edge)

    def build(p) -> tuple[str, str, bytes, bytes, bool]:
        path = image_dir / p.image_ref
        try:
            with Image.open(path) as img:
                plain, transparent = thumbnail_variants(img, thumb_edge)
            return p.id, str(path), plain, transparent, False
        except OSError:
            return p.id, str(path), placeholder[0], placeholder[1], True

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(build, dataset.particles))

    # merge in particle order so the store is deterministic
    for pid, path, plain, transparent, is_missing in results:
        store.originals[pid] = path
        store.thumbnails[pid] = plain
        store.transparent[pid] = transparent
        if is_missing:
            store.missing.append(pid)
    return store


def write_image_store(store: ImageStore, out_dir: Path | str) -> None:
    """Persist thumbnails (thumbs/, thumbs_t/) and any in-memory source PNGs."""
    out = Path(out_dir)
    plain_dir = out / THUMBS_DIR
    trans_dir = out / (THUMBS_DIR + "_t")
    plain_dir.mkdir(parents=True, exist_ok=True)
    trans_dir.mkdir(parents=True, exist_ok=True)
    for pid, data in store.thumbnails.items():
        (plain_dir / f"{pid}.png").write_bytes(data)
    for pid, data in store.transparent.items():
        (trans_dir / f"{pid}.png").write_bytes(data)
    if store.sources:
        src_dir = out / IMAGES_DIR
        src_dir.mkdir(parents=True, exist_ok=True)
        for pid, data in store.sources.items():
            (src_dir / f"{pid}.png").write_bytes(data)


def load_image_store(dataset: Dataset, data_dir: Path | str,
                     thumb_edge: int = DEFAULT_THUMB_EDGE) -> ImageStore:
    """Read back a persisted thumbnail set; placeholders where files are gone."""
    data_dir = Path(data_dir)
    plain_dir = data_dir / THUMBS_DIR
    trans_dir = data_dir / (THUMBS_DIR + "_t")
    store = ImageStore(thumb_edge=thumb_edge)
    placeholder = _placeholder_variants(thumb_edge)
    for p in dataset.particles:
        plain_path = plain_dir / f"{p.id}.png"
        trans_path = trans_dir / f"{p.id}.png"
        store.originals[p.id] = str(data_dir / IMAGES_DIR / p.image_ref)
        if plain_path.is_file():
            store.thumbnails[p.id] = plain_path.read_bytes()
            store.transparent[p.id] = (
                trans_path.read_bytes() if trans_path.is_file() else store.thumbnails[p.id]
            )
        else:
            store.thumbnails[p.id] = placeholder[0]
            store.transparent[p.id] = placeholder[1]
            store.missing.append(p.id)
    return store
