"""Shared helpers for the demo scripts: images, keys, formatting."""

from __future__ import annotations

import numpy as np

from rdhei import Key

# distinguishing bytes go first: the keystream is seeded by the leading
# 8 key bytes
KEYS = {
    name: Key((0xDE40 + i).to_bytes(8, "little") + bytes(24))
    for i, name in enumerate(("e1", "e2", "h", "m", "p"))
}


def demo_image(name: str = "camera") -> np.ndarray:
    """A 512x512 grayscale photo, or a synthetic stand-in without skimage."""
    try:
        from skimage import data

        return getattr(data, name)()
    except ImportError:
        rng = np.random.default_rng(hash(name) & 0xFFFF)
        coarse = rng.uniform(0, 255, (64, 64))
        img = np.kron(coarse, np.ones((8, 8)))
        img += rng.normal(0, 2.0, img.shape)
        return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def random_bits(n: int, seed: int = 7) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, n, dtype=np.uint8)


def rule(title: str) -> None:
    print(f"\n=== {title} {'=' * max(0, 60 - len(title))}")
