"""Shared fixtures: deterministic test images and standard-corpus discovery."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

# Standard 512x512 / 1024x1024 grayscale test images, provisioned by the
# user (see README).  Searched in tests/data/sipi or $RDHEI_SIPI_DIR.
CORPUS_NAMES = ("lena", "baboon", "airplane", "tiffany", "man")


def corpus_dir() -> Path | None:
    env = os.environ.get("RDHEI_SIPI_DIR")
    if env and Path(env).is_dir():
        return Path(env)
    local = Path(__file__).parent / "data" / "sipi"
    return local if local.is_dir() else None


def load_corpus_image(name: str) -> np.ndarray | None:
    """A provisioned standard image by stem name, or None when absent."""
    root = corpus_dir()
    if root is None:
        return None
    from rdhei import load_pgm

    for candidate in (root / f"{name}.pgm", root / f"{name.title()}.pgm"):
        if candidate.is_file():
            return load_pgm(candidate.read_bytes())
    return None


def require_corpus_image(name: str) -> np.ndarray:
    image = load_corpus_image(name)
    if image is None:
        pytest.skip(
            f"standard test image {name!r} not provisioned "
            "(put PGMs in tests/data/sipi or set RDHEI_SIPI_DIR)"
        )
    return image


def correlated_image(seed: int, shape: tuple[int, int] = (64, 64),
                     smoothness: int = 8, noise: float = 2.0) -> np.ndarray:
    """A natural-image stand-in: smooth random field plus mild noise.

    Bilinear upsampling of a coarse random grid gives local correlation,
    which is what the prediction stage needs; pure white noise has no
    vacatable redundancy at all.
    """
    rng = np.random.default_rng(seed)
    h, w = shape
    ch = max(2, h // smoothness)
    cw = max(2, w // smoothness)
    coarse = rng.uniform(0, 255, (ch, cw))
    ry = np.linspace(0, ch - 1, h)
    rx = np.linspace(0, cw - 1, w)
    y0 = np.clip(ry.astype(int), 0, ch - 2)
    x0 = np.clip(rx.astype(int), 0, cw - 2)
    fy = (ry - y0)[:, None]
    fx = (rx - x0)[None, :]
    field = (
        coarse[y0][:, x0] * (1 - fy) * (1 - fx)
        + coarse[y0 + 1][:, x0] * fy * (1 - fx)
        + coarse[y0][:, x0 + 1] * (1 - fy) * fx
        + coarse[y0 + 1][:, x0 + 1] * fy * fx
    )
    field = field + rng.normal(0, noise, shape)
    return np.clip(np.rint(field), 0, 255).astype(np.uint8)


@pytest.fixture
def small_image() -> np.ndarray:
    return correlated_image(1234)


@pytest.fixture(scope="session")
def bundled_images() -> dict[str, np.ndarray]:
    """Five real 512x512 grayscale photos shipped with scikit-image."""
    from skimage import data

    return {
        "camera": data.camera(),
        "moon": data.moon(),
        "brick": data.brick(),
        "grass": data.grass(),
        "gravel": data.gravel(),
    }
