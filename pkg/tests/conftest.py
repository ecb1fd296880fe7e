"""Shared fixtures: small synthetic corpora reused across test modules."""

import pytest

from daedalus.synth import SynthConfig, generate_synthetic


@pytest.fixture(scope="session")
def synth_small():
    """300 particles, 3 classes, no rendered images: (dataset, store, truth)."""
    return generate_synthetic(
        SynthConfig(particle_count=300, class_count=3, seed=7),
        render_images=False,
    )


@pytest.fixture(scope="session")
def synth_images():
    """60 particles with rendered thumbnails, for image-dependent tests."""
    return generate_synthetic(
        SynthConfig(particle_count=60, class_count=3, lot_count=6, seed=5),
        render_images=True,
        workers=4,
    )
