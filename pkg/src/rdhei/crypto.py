"""Keys, keystream generation, and the image encryption primitives.

The keystream generator is splitmix64.  It is fast, portable, and easy to
reproduce from a 64-bit seed, which is what the embedding pipeline needs,
but it is NOT a cryptographically strong cipher: anyone holding a key can
of course regenerate the stream, and the stream-XOR encryption must never
reuse a key across images (one-time-pad discipline).  Treat the security
level as "content scrambling", not "provable confidentiality".
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .image import BlockGrid

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


@dataclass(frozen=True)
class Key:
    """A 256-bit key, entered as 64 hex characters.

    Only the first 8 bytes seed the stream generator (see ``seed``), so
    keys that differ solely in their trailing bytes produce the same
    keystream.  Anyone deriving keys from counters must put the varying
    bytes first.
    """

    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, bytes) or len(self.data) != 32:
            raise ParameterError("key must be exactly 32 bytes")

    @classmethod
    def from_hex(cls, text: str) -> "Key":
        text = text.strip()
        if len(text) != 64:
            raise ParameterError(
                f"key must be 64 hex characters, got {len(text)}"
            )
        try:
            return cls(bytes.fromhex(text))
        except ValueError:
            raise ParameterError("key contains non-hex characters") from None

    @property
    def hex(self) -> str:
        return self.data.hex()

    @property
    def seed(self) -> int:
        """Stream seed: the first 8 key bytes, little-endian."""
        return int.from_bytes(self.data[:8], "little")


def splitmix64_words(seed: int, count: int) -> np.ndarray:
    """First `count` outputs of splitmix64 for the given 64-bit seed.

    The generator state after i steps is seed + i * golden (mod 2**64), so
    the whole sequence vectorizes.
    """
    if count < 0:
        raise ParameterError("count must be non-negative")
    steps = np.arange(1, count + 1, dtype=np.uint64)
    z = _U64(seed & 0xFFFFFFFFFFFFFFFF) + steps * _GOLDEN
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def keystream(key: Key, n_bytes: int) -> np.ndarray:
    """Deterministic byte stream for a key: 64-bit words, little-endian."""
    words = splitmix64_words(key.seed, -(-n_bytes // 8))
    return np.frombuffer(words.astype("<u8").tobytes(), dtype=np.uint8)[:n_bytes]


def xor_image(image: np.ndarray, key: Key) -> np.ndarray:
    """XOR every pixel with the keystream in raster order (an involution)."""
    stream = keystream(key, image.size).reshape(image.shape)
    return image ^ stream


def xor_bits(bits: np.ndarray, key: Key) -> np.ndarray:
    """XOR a bit array with the keystream expanded bit 0 of byte 0 first."""
    bits = np.asarray(bits, dtype=np.uint8)
    stream = keystream(key, -(-bits.size // 8))
    expanded = np.unpackbits(stream, bitorder="little")[: bits.size]
    return bits ^ expanded


def _mix_single(seed: int) -> int:
    """First splitmix64 output for a seed, as a python int."""
    z = (seed + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def check_zeta(zeta: float | None) -> float | None:
    if zeta is None:
        return None
    zeta = float(zeta)
    if not (0.0 <= zeta <= 1.0) or math.isnan(zeta):
        raise ParameterError(f"zeta must be in [0, 1] or none, got {zeta}")
    return zeta


def _shift_from_draw(draw: int, lo_max: int, ub_start: int, size: int) -> int:
    idx = draw % size
    if idx <= lo_max:
        return idx
    return ub_start + (idx - lo_max - 1)


def _allowed_interval(prev_min: int, prev_max: int, zeta: float) -> tuple[int, int, int]:
    """Bounds of the allowed shift set for a block, from its predecessor.

    Returns (lo_max, ub_start, size): the set is [0, lo_max] plus
    [ub_start, 255].  Shifts in it keep the block's modular wraps one-sided,
    which is what the spatial-correlation preservation relies on.
    """
    lo_max = math.floor(zeta * (255 - prev_max))
    ub_start = math.floor(255 - zeta * prev_min) + 1
    size = (lo_max + 1) + max(0, 256 - ub_start)
    return lo_max, ub_start, size


def modulation_shifts(image: np.ndarray, key: Key, zeta: float | None,
                      grid: BlockGrid) -> np.ndarray:
    """Per-block modulation shifts r' in snake order, from the plain image.

    Block 1 always uses the raw keystream byte.  With zeta = None every
    block does (the unconstrained legacy mode).  Otherwise block i draws
    from the allowed set computed off block i-1's plain min and max.
    """
    zeta = check_zeta(zeta)
    n = grid.n_blocks
    raw = keystream(key, n).astype(np.int64)
    shifts = np.empty(n, dtype=np.int64)
    shifts[0] = raw[0]
    if zeta is None:
        shifts[1:] = raw[1:]
        return shifts
    blocks = grid.gather_blocks(image)
    mins = blocks.reshape(n, -1).min(axis=1).astype(np.int64)
    maxs = blocks.reshape(n, -1).max(axis=1).astype(np.int64)
    # draw seeds depend only on (r_i, i): precompute vectorized
    idx = np.arange(1, n + 1, dtype=np.uint64)
    draw_seeds = raw.astype(np.uint64) ^ idx
    z = draw_seeds + _GOLDEN
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    draws = z ^ (z >> _U64(31))
    for i in range(1, n):
        lo_max, ub_start, size = _allowed_interval(
            int(mins[i - 1]), int(maxs[i - 1]), zeta
        )
        shifts[i] = _shift_from_draw(int(draws[i]), lo_max, ub_start, size)
    return shifts


def modulate(image: np.ndarray, key: Key, zeta: float | None,
             grid: BlockGrid) -> tuple[np.ndarray, np.ndarray]:
    """Encrypt the covered blocks by modular addition of per-block shifts.

    Returns (encrypted image, shift sequence).  Pass-through pixels outside
    the covered region are copied unchanged.
    """
    shifts = modulation_shifts(image, key, zeta, grid)
    out = image.copy()
    blocks = grid.gather_blocks(image).astype(np.int64)
    enc = (blocks + shifts[:, None, None]) % 256
    grid.scatter_blocks(out, enc.astype(np.uint8))
    return out, shifts


def demodulate(image: np.ndarray, key: Key, zeta: float | None,
               grid: BlockGrid) -> np.ndarray:
    """Invert :func:`modulate`.

    The shift for block i depends on the plain block i-1, so recovery walks
    the snake order sequentially, rebuilding each block before deriving the
    next shift.
    """
    zeta = check_zeta(zeta)
    n = grid.n_blocks
    raw = keystream(key, n).astype(np.int64)
    out = image.copy()
    enc_blocks = grid.gather_blocks(image).astype(np.int64)
    plain = np.empty_like(enc_blocks)
    prev = None
    for i in range(n):
        if i == 0 or zeta is None:
            shift = int(raw[i])
        else:
            lo_max, ub_start, size = _allowed_interval(
                int(prev.min()), int(prev.max()), zeta
            )
            draw = _mix_single(int(raw[i]) ^ (i + 1))
            shift = _shift_from_draw(draw, lo_max, ub_start, size)
        prev = (enc_blocks[i] - shift) % 256
        plain[i] = prev
    grid.scatter_blocks(out, plain.astype(np.uint8))
    return out


@dataclass(frozen=True)
class ArnoldParams:
    """Parameters of the per-tile Arnold block permutation."""

    a: int
    b: int
    iterations: int
    tile: int


def derive_arnold_params(key: Key, grid: BlockGrid) -> ArnoldParams:
    """Derive (a, b, t) from a key and the tile size from the grid shape.

    The tile is gcd(rows, cols); a degenerate tile (< 2) makes the
    permutation the identity, which is reported with a security warning.
    """
    w1, w2, w3 = (int(w) for w in splitmix64_words(key.seed, 3))
    tile = math.gcd(grid.rows, grid.cols)
    if tile < 2:
        warnings.warn(
            "block grid gcd < 2: Arnold permutation degenerates to identity",
            UserWarning,
            stacklevel=2,
        )
    return ArnoldParams(
        a=1 + (w1 % 255), b=1 + (w2 % 255), iterations=1 + (w3 % 16), tile=tile
    )


def arnold_map(params: ArnoldParams, k: np.ndarray, l: np.ndarray,
               inverse: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Apply the (possibly inverted) Arnold map `iterations` times.

    Forward: (k, l) -> (k + b*l, a*k + (a*b + 1)*l) mod tile.  The inverse
    uses the adjugate of that unimodular matrix.
    """
    m = params.tile
    if m < 2:
        return k, l
    a, b = params.a, params.b
    k = np.asarray(k, dtype=np.int64) % m
    l = np.asarray(l, dtype=np.int64) % m
    for _ in range(params.iterations):
        if inverse:
            k, l = ((a * b + 1) * k - b * l) % m, (-a * k + l) % m
        else:
            k, l = (k + b * l) % m, (a * k + (a * b + 1) * l) % m
    return k, l


def permute_blocks(image: np.ndarray, grid: BlockGrid, params: ArnoldParams,
                   inverse: bool = False) -> np.ndarray:
    """Permute covered blocks tile by tile; pass-through pixels stay put."""
    if params.tile < 2:
        return image.copy()
    rows, cols, m = grid.rows, grid.cols, params.tile
    gr, gc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    k, l = gr % m, gc % m
    nk, nl = arnold_map(params, k, l, inverse=inverse)
    dst_r = (gr // m) * m + nk
    dst_c = (gc // m) * m + nl
    out = image.copy()
    src = grid.block_view(image)[gr, gc]
    h, w = grid.covered_shape
    region = np.empty((h, w), dtype=image.dtype)
    view = region.reshape(rows, grid.n1, cols, grid.n2).swapaxes(1, 2)
    view[dst_r, dst_c] = src
    out[:h, :w] = region
    return out
