"""Deterministic synthetic particle corpus generator.

Generates a dataset against the bundled reference schema: particles fall into
a configured number of ground-truth classes, each class a distinct blob color
with its own shape-attribute profile. Size attributes are log-normal (small
particles dominate) with only a weak class effect, so projections restricted
to size attributes separate classes poorly until labels inform them; shape
attributes separate classes strongly, so the full numeric set stays
1-NN-classifiable. Ground truth is returned separately and never stored in
the dataset.

Everything is a pure function of SynthConfig: one PCG64 stream for attribute
draws, a second for image parameters (drawn whether or not images are
rendered), so records do not shift when rendering is disabled.
"""

from __future__ import annotations

import colorsys
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ConfigError
from .ingest import ImageStore, thumbnail_variants
from .model import Dataset, ParticleRecord, reference_schema

# (name, hue degrees) in assignment order; many classes fall back to a hue wheel
CLASS_PALETTE = [
    ("blue", 210.0),
    ("amber", 42.0),
    ("teal", 172.0),
    ("crimson", 350.0),
    ("violet", 275.0),
    ("olive", 85.0),
    ("coral", 16.0),
    ("indigo", 240.0),
    ("rose", 330.0),
    ("lime", 100.0),
]

BACKGROUND_RGB = (235, 235, 235)

# profile whose lot sizes are pinned to the documented fixture counts
REFERENCE_PARTICLE_COUNT = 37857
REFERENCE_LOT_COUNT = 70
PINNED_LOT_INDEX = 26
PINNED_LOT_SIZE = 669

SYNTHETIC_CREATED_AT = "2023-12-31T00:00:00+00:00"


@dataclass(frozen=True)
class SynthConfig:
    particle_count: int = 5000
    class_count: int = 3
    lot_count: int = 70
    supplier_count: int = 8
    seed: int = 0
    min_image_px: int = 16
    max_image_px: int = 80
    # mean log-area gap between extreme classes, in units of the log-area sigma
    size_class_shift: float = 0.9
    thumb_edge: int = 64

    def __post_init__(self):
        if self.particle_count < 1:
            raise ConfigError("particle_count must be >= 1")
        if not 1 <= self.class_count <= self.particle_count:
            raise ConfigError("class_count must be in [1, particle_count]")
        if not 1 <= self.lot_count <= 70:
            raise ConfigError("lot_count must be in [1, 70]")
        if self.lot_count > self.particle_count:
            raise ConfigError("lot_count must not exceed particle_count")
        if not 1 <= self.supplier_count <= 8:
            raise ConfigError("supplier_count must be in [1, 8]")
        if not (10 <= self.min_image_px <= self.max_image_px <= 1000):
            raise ConfigError("image size range must satisfy 10 <= min <= max <= 1000")
        if self.thumb_edge < 8:
            raise ConfigError("thumb_edge must be >= 8")


def class_names(count: int) -> list[str]:
    names = [name for name, _ in CLASS_PALETTE[:count]]
    names += [f"class-{i + 1:02d}" for i in range(len(names), count)]
    return names


def class_hues(count: int) -> np.ndarray:
    hues = [hue for _, hue in CLASS_PALETTE[:count]]
    extra = count - len(hues)
    if extra > 0:
        hues += [(i * 360.0 / extra + 5.0) % 360.0 for i in range(extra)]
    return np.asarray(hues[:count], dtype=np.float64)


def _lot_sizes(rng: np.random.Generator, config: SynthConfig) -> np.ndarray:
    n, lots = config.particle_count, config.lot_count
    weights = rng.dirichlet(np.full(lots, 3.0))
    sizes = rng.multinomial(n - lots, weights) + 1
    if (
        n == REFERENCE_PARTICLE_COUNT
        and lots == REFERENCE_LOT_COUNT
        and sizes[PINNED_LOT_INDEX] != PINNED_LOT_SIZE
    ):
        delta = int(sizes[PINNED_LOT_INDEX]) - PINNED_LOT_SIZE
        sizes[PINNED_LOT_INDEX] = PINNED_LOT_SIZE
        others = [i for i in range(lots) if i != PINNED_LOT_INDEX]
        step = 1 if delta > 0 else -1
        moved = 0
        cursor = 0
        while moved < abs(delta):
            j = others[cursor % len(others)]
            cursor += 1
            if sizes[j] + step >= 1:
                sizes[j] += step
                moved += 1
    return sizes


def _draw_classes(
    rng: np.random.Generator, config: SynthConfig, lot_of: np.ndarray, sizes: np.ndarray
) -> np.ndarray:
    c = config.class_count
    lot_weights = rng.dirichlet(np.full(c, 4.0), size=config.lot_count)
    if c > 1 and config.lot_count > PINNED_LOT_INDEX:
        skew = np.full(c, 0.18 / (c - 1))
        skew[0] = 0.82
        lot_weights[PINNED_LOT_INDEX] = skew
    labels = np.empty(config.particle_count, dtype=np.int64)
    start = 0
    for lot in range(config.lot_count):
        stop = start + int(sizes[lot])
        labels[start:stop] = rng.choice(c, size=stop - start, p=lot_weights[lot])
        start = stop
    # every class must be represented
    present = np.bincount(labels, minlength=c) > 0
    for cls in np.nonzero(~present)[0]:
        labels[int(cls)] = cls
    return labels


def _production_columns(
    rng: np.random.Generator, config: SynthConfig, lot_of: np.ndarray
) -> tuple[list[str], list[str], list[str]]:
    lots = config.lot_count
    lot_names = [f"Lot {i + 1:03d}" for i in range(lots)]
    months = [f"2023-{(i * 12) // lots + 1:02d}" for i in range(lots)]
    supplier_letters = [chr(ord("A") + i) for i in range(config.supplier_count)]
    order = rng.permutation(lots)
    supplier_of_lot = [""] * lots
    for pos, lot in enumerate(order):
        supplier_of_lot[int(lot)] = supplier_letters[pos % config.supplier_count]
    lot_col = [lot_names[i] for i in lot_of]
    date_col = [months[i] for i in lot_of]
    supplier_col = [supplier_of_lot[i] for i in lot_of]
    return lot_col, date_col, supplier_col


def _numeric_columns(
    rng: np.random.Generator, config: SynthConfig, labels: np.ndarray
) -> dict[str, np.ndarray]:
    n, c = config.particle_count, config.class_count

    if c > 1:
        frac = labels / (c - 1)
    else:
        frac = np.full(n, 0.5)

    # shape: classes separate strongly
    log_el_lo, log_el_hi = math.log(1.15), math.log(3.2)
    elong = np.exp(rng.normal(log_el_lo + (log_el_hi - log_el_lo) * frac, 0.11))
    elong = np.clip(elong, 1.001, None)

    circularity = np.clip(
        1.04 * elong**-0.62 + rng.normal(0.0, 0.045, n), 0.02, 1.0
    )

    conv_rank = ((labels + 1) % c) / (c - 1) if c > 1 else np.full(n, 0.5)
    convexity = np.clip(rng.normal(0.97 - 0.22 * conv_rank, 0.035), 0.4, 0.995)

    # size: log-normal, weak monotone class shift; a second weak shift on the
    # feret aspect gives the size block two informative directions instead of
    # one, which label-informed projections can exploit
    sigma_log_area = 0.55
    shift = config.size_class_shift * sigma_log_area * (frac - 0.5)
    area = np.exp(rng.normal(math.log(140.0) + shift, sigma_log_area))

    equiv_d = np.sqrt(4.0 * area / math.pi) * np.exp(rng.normal(0.0, 0.02, n))
    sigma_log_aspect = 0.16
    aspect_shift = (
        config.size_class_shift * 0.6 * sigma_log_aspect * (conv_rank - 0.5)
    )
    aspect = np.clip(
        np.exp(rng.normal(math.log(1.35) + aspect_shift, sigma_log_aspect)), 1.0, None
    )
    feret_max = equiv_d * np.sqrt(aspect) * np.exp(rng.normal(0.0, 0.03, n))
    feret_min = equiv_d / np.sqrt(aspect) * np.exp(rng.normal(0.0, 0.03, n))
    feret_min = np.minimum(feret_min, feret_max * 0.999)

    a, b = feret_max / 2.0, feret_min / 2.0
    perimeter = (
        math.pi * (3.0 * (a + b) - np.sqrt((3.0 * a + b) * (a + 3.0 * b)))
    ) * np.exp(rng.normal(0.0, 0.035, n))
    bounding_width = feret_max * (1.0 + np.abs(rng.normal(0.0, 0.035, n)))

    return {
        "Elongation": elong,
        "Circularity": circularity,
        "Convexity": convexity,
        "Area": area,
        "Perimeter": perimeter,
        "Feret Max": feret_max,
        "Feret Min": feret_min,
        "Equivalent Diameter": equiv_d,
        "Bounding Width": bounding_width,
    }


def _render_particle(
    size_px: int,
    elong: float,
    angle: float,
    rgb: tuple[float, float, float],
) -> Image.Image:
    s = size_px
    yy, xx = np.mgrid[0:s, 0:s].astype(np.float64)
    cx = cy = (s - 1) / 2.0
    x, y = xx - cx, yy - cy
    ca, sa = math.cos(angle), math.sin(angle)
    u = x * ca + y * sa
    v = -x * sa + y * ca
    semi_major = 0.5 * s * 0.82
    semi_minor = max(semi_major / elong, 1.2)
    rr = (u / semi_major) ** 2 + (v / semi_minor) ** 2

    # ~1.5px anti-alias band expressed in the squared radial coordinate
    edge = 1.5 / semi_minor
    coverage = np.clip((1.0 - rr) / (2.0 * edge) + 0.5, 0.0, 1.0)

    color = np.asarray(rgb, dtype=np.float64) * 255.0
    shade = 1.0 - 0.18 * np.clip(rr, 0.0, 1.0)
    fg = color[None, None, :] * shade[:, :, None]
    bg = np.asarray(BACKGROUND_RGB, dtype=np.float64)[None, None, :]
    out = bg * (1.0 - coverage[:, :, None]) + fg * coverage[:, :, None]
    rgba = np.empty((s, s, 4), dtype=np.uint8)
    rgba[:, :, :3] = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    rgba[:, :, 3] = 255
    return Image.fromarray(rgba, "RGBA")


def generate_synthetic(
    config: SynthConfig, render_images: bool = True, workers: int = 4
) -> tuple[Dataset, ImageStore, dict[str, str]]:
    """Build (dataset, image store, ground truth) from a config.

    With render_images=False every particle gets a shared placeholder
    thumbnail; attribute values are identical either way.
    """
    schema = reference_schema()
    names = class_names(config.class_count)
    hues = class_hues(config.class_count)

    rng = np.random.default_rng(np.random.PCG64(config.seed))
    sizes = _lot_sizes(rng, config)
    lot_of = np.repeat(np.arange(config.lot_count), sizes)
    labels = _draw_classes(rng, config, lot_of, sizes)
    lot_col, date_col, supplier_col = _production_columns(rng, config, lot_of)
    numerics = _numeric_columns(rng, config, labels)

    # image parameters come from their own stream so rendering can be skipped
    # without shifting the attribute draws
    img_rng = np.random.default_rng(np.random.PCG64(config.seed + 0x9E3779B9))
    n = config.particle_count
    angles = img_rng.uniform(0.0, math.pi, n)
    hue_jitter = img_rng.normal(0.0, 3.0, n)
    sats = np.clip(img_rng.normal(0.58, 0.07, n), 0.25, 0.85)
    vals = np.clip(img_rng.normal(0.72, 0.05, n), 0.45, 0.92)

    order = np.argsort(numerics["Equivalent Diameter"], kind="stable")
    rank = np.empty(n, dtype=np.float64)
    rank[order] = np.arange(n)
    pct = rank / max(n - 1, 1)
    size_px = np.rint(
        config.min_image_px + pct * (config.max_image_px - config.min_image_px)
    ).astype(np.int64)

    width = max(6, len(str(n)))
    ids = [f"P{i + 1:0{width}d}" for i in range(n)]
    numeric_names = list(numerics.keys())

    particles = []
    for i in range(n):
        values: dict[str, float | str] = {
            "Lot Number": lot_col[i],
            "Production Date": date_col[i],
            "Supplier": supplier_col[i],
        }
        for nm in numeric_names:
            values[nm] = float(numerics[nm][i])
        particles.append(
            ParticleRecord(id=ids[i], image_ref=f"{ids[i]}.png", values=values)
        )

    dataset = Dataset(
        schema=schema,
        particles=particles,
        provenance="synthetic",
        created_at=SYNTHETIC_CREATED_AT,
    )
    truth = {ids[i]: names[labels[i]] for i in range(n)}

    store = ImageStore(thumb_edge=config.thumb_edge)
    if render_images:
        elong_col = numerics["Elongation"]

        def build(i: int):
            h = (hues[labels[i]] + hue_jitter[i]) % 360.0
            rgb = colorsys.hsv_to_rgb(h / 360.0, sats[i], vals[i])
            img = _render_particle(int(size_px[i]), float(elong_col[i]), float(angles[i]), rgb)
            source = io.BytesIO()
            img.save(source, format="PNG")
            plain, transparent = thumbnail_variants(img, config.thumb_edge)
            return source.getvalue(), plain, transparent

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            rendered = list(pool.map(build, range(n)))
        for i, (source, plain, transparent) in enumerate(rendered):
            store.originals[ids[i]] = f"{ids[i]}.png"
            store.thumbnails[ids[i]] = plain
            store.transparent[ids[i]] = transparent
            store.sources[ids[i]] = source
    else:
        from .ingest import _placeholder_variants

        plain, transparent = _placeholder_variants(config.thumb_edge)
        for pid in ids:
            store.originals[pid] = f"{pid}.png"
            store.thumbnails[pid] = plain
            store.transparent[pid] = transparent

    return dataset, store, truth
