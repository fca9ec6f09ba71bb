"""Image quality and encryption-quality measurements."""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

from .errors import ParameterError
from .image import BlockGrid, check_image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
_C1 = (0.01 * 255.0) ** 2
_C2 = (0.03 * 255.0) ** 2


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = check_image(a), check_image(b)
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; identical images give inf."""
    a, b = _check_pair(a, b)
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(255.0**2 / mse))


def _gaussian_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2.0 * SSIM_SIGMA**2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity with a Gaussian 11x11 window.

    Computed over valid windows only, on the 8-bit dynamic range.
    """
    a, b = _check_pair(a, b)
    if min(a.shape) < SSIM_WINDOW:
        raise ParameterError(f"images must be at least {SSIM_WINDOW} pixels per side")
    x = a.astype(np.float64)
    y = b.astype(np.float64)
    w = _gaussian_window()

    def smooth(img):
        return convolve2d(img, w, mode="valid")

    mx = smooth(x)
    my = smooth(y)
    vx = smooth(x * x) - mx * mx
    vy = smooth(y * y) - my * my
    cxy = smooth(x * y) - mx * my
    num = (2.0 * mx * my + _C1) * (2.0 * cxy + _C2)
    den = (mx * mx + my * my + _C1) * (vx + vy + _C2)
    return float(np.mean(num / den))


def abnormal_count(plain: np.ndarray, shifts: np.ndarray,
                   grid: BlockGrid) -> int:
    """Pixels whose modular shift wraps differently from their block.

    For each block the modulation either wraps a pixel past 255 or not;
    the minority side breaks the block's spatial correlation.  Counts the
    minority pixels over all blocks, given the plain image and the shift
    sequence actually used.
    """
    plain = check_image(plain)
    shifts = np.asarray(shifts, dtype=np.int64)
    if shifts.shape != (grid.n_blocks,):
        raise ParameterError("one shift per block is required")
    blocks = grid.gather_blocks(plain).reshape(grid.n_blocks, -1).astype(np.int64)
    wraps = (blocks + shifts[:, None] >= 256).sum(axis=1)
    return int(np.minimum(wraps, grid.block_pixels - wraps).sum())
