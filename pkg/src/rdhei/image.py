"""Grayscale image handling: PGM I/O, block partitioning, bit addressing.

Every module that touches pixel bits goes through :class:`BitCursor`, so the
bit-serialization order is fixed in exactly one place: plane-major over the
embedding pixels (all plane-0 bits in raster order, then plane 1, and so on),
with multi-bit integer fields written most significant bit first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import FormatError, ParameterError

PGM_MAXVAL = 255


def check_image(image: np.ndarray) -> np.ndarray:
    """Validate a grayscale image array and return it.

    Accepts 2-D uint8 arrays with both sides at least 2 pixels.
    """
    if not isinstance(image, np.ndarray):
        raise ParameterError("image must be a numpy array")
    if image.ndim != 2:
        raise ParameterError(f"image must be 2-D, got shape {image.shape}")
    if image.dtype != np.uint8:
        raise ParameterError(f"image must be uint8, got {image.dtype}")
    if image.shape[0] < 2 or image.shape[1] < 2:
        raise ParameterError(f"image must be at least 2x2, got {image.shape}")
    return image


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise FormatError(f"truncated PGM header at byte offset {pos}")
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def load_pgm(data: bytes) -> np.ndarray:
    """Parse a binary PGM (type P5, maxval 255) into a uint8 array.

    The header reader accepts arbitrary whitespace and ``#`` comments between
    tokens.  Malformed or truncated input raises :class:`FormatError` naming
    the byte offset of the problem.
    """
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise ParameterError("load_pgm expects bytes")
    data = bytes(data)
    if data[:2] != b"P5":
        raise FormatError("not a binary PGM: magic 'P5' missing at byte offset 0")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _next_token(data, pos)
        try:
            value = int(tok)
        except ValueError:
            raise FormatError(
                f"bad {name} token {tok!r} at byte offset {pos - len(tok)}"
            ) from None
        fields.append(value)
    width, height, maxval = fields
    if maxval != PGM_MAXVAL:
        raise FormatError(
            f"unsupported maxval {maxval} at byte offset {pos} (only 255)"
        )
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError(f"missing whitespace after maxval at byte offset {pos}")
    pos += 1
    if width < 2 or height < 2:
        raise FormatError(f"image must be at least 2x2, got {width}x{height}")
    need = width * height
    if len(data) - pos < need:
        raise FormatError(
            f"truncated pixel data at byte offset {len(data)}: "
            f"expected {need} bytes from offset {pos}, found {len(data) - pos}"
        )
    pixels = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return pixels.reshape(height, width).copy()


def save_pgm(image: np.ndarray) -> bytes:
    """Serialize an image to canonical binary PGM bytes.

    The header is exactly ``P5\\n<width> <height>\\n255\\n`` followed by the
    raw pixel rows, so equal images produce identical files.
    """
    check_image(image)
    header = b"P5\n%d %d\n255\n" % (image.shape[1], image.shape[0])
    return header + image.tobytes()


@dataclass(frozen=True)
class BlockGrid:
    """Partition of an image into non-overlapping n1 x n2 blocks.

    Blocks are indexed in snake (boustrophedon) order: grid row 0 left to
    right, grid row 1 right to left, and so on, which keeps consecutive
    blocks spatially adjacent.  Pixels outside the covered region (when the
    image sides are not multiples of the block sides) are untouched
    pass-through pixels.
    """

    image_shape: tuple[int, int]
    n1: int
    n2: int

    def __post_init__(self):
        h, w = self.image_shape
        if not (1 <= self.n1 <= h and 1 <= self.n2 <= w):
            raise ParameterError(
                f"block {self.n1}x{self.n2} does not fit image {h}x{w}"
            )

    @property
    def rows(self) -> int:
        return self.image_shape[0] // self.n1

    @property
    def cols(self) -> int:
        return self.image_shape[1] // self.n2

    @property
    def n_blocks(self) -> int:
        return self.rows * self.cols

    @property
    def block_pixels(self) -> int:
        return self.n1 * self.n2

    @property
    def covered_shape(self) -> tuple[int, int]:
        return (self.rows * self.n1, self.cols * self.n2)

    @cached_property
    def snake_coords(self) -> np.ndarray:
        """(n_blocks, 2) grid coordinates in snake order."""
        idx = np.arange(self.n_blocks)
        gr = idx // self.cols
        gc = idx % self.cols
        gc = np.where(gr % 2 == 1, self.cols - 1 - gc, gc)
        return np.stack([gr, gc], axis=1)

    def block_view(self, image: np.ndarray) -> np.ndarray:
        """Covered region as a (rows, cols, n1, n2) array.

        May be a copy when the covered region is not contiguous, so treat it
        as read-only; writes go through :meth:`scatter_blocks`.
        """
        h, w = self.covered_shape
        region = np.ascontiguousarray(image[:h, :w])
        return region.reshape(self.rows, self.n1, self.cols, self.n2).swapaxes(1, 2)

    def scatter_blocks(self, image: np.ndarray, blocks: np.ndarray) -> None:
        """Write all (n_blocks, n1, n2) snake-ordered blocks into the image."""
        h, w = self.covered_shape
        region = np.empty((h, w), dtype=image.dtype)
        view = region.reshape(self.rows, self.n1, self.cols, self.n2).swapaxes(1, 2)
        coords = self.snake_coords
        view[coords[:, 0], coords[:, 1]] = blocks
        image[:h, :w] = region

    def gather_blocks(self, image: np.ndarray) -> np.ndarray:
        """Read the covered blocks in snake order: (n_blocks, n1, n2)."""
        view = self.block_view(image)
        coords = self.snake_coords
        return view[coords[:, 0], coords[:, 1]]


def partition(image_shape: tuple[int, int], n1: int, n2: int) -> BlockGrid:
    return BlockGrid(tuple(image_shape), n1, n2)


class BitCursor:
    """Plane-major bit addressing over a fixed set of embedding pixels.

    Bit position t maps to bit plane ``t // n`` of embedding pixel
    ``t % n`` where n is the embedding-pixel count and the pixels are listed
    in image raster order.  Reference and pass-through pixels are excluded
    from the cursor entirely.
    """

    def __init__(self, shape: tuple[int, int], embed_flat: np.ndarray):
        self.shape = tuple(shape)
        self.embed_flat = np.ascontiguousarray(embed_flat, dtype=np.int64)
        if self.embed_flat.size == 0:
            raise ParameterError("cursor needs at least one embedding pixel")
        self.n_pixels = int(self.embed_flat.size)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "BitCursor":
        """Build a cursor from a boolean embedding mask over the image."""
        flat = np.flatnonzero(mask.ravel())
        return cls(mask.shape, flat)

    @property
    def capacity(self) -> int:
        """Total addressable bits: 8 per embedding pixel."""
        return 8 * self.n_pixels

    def _segments(self, start: int, stop: int):
        # Decompose [start, stop) into per-plane contiguous pixel ranges.
        if not (0 <= start <= stop <= self.capacity):
            raise ParameterError(
                f"bit range [{start}, {stop}) outside capacity {self.capacity}"
            )
        n = self.n_pixels
        pos = start
        while pos < stop:
            plane = pos // n
            lo = pos % n
            hi = min(n, lo + (stop - pos))
            yield plane, lo, hi
            pos += hi - lo

    def read(self, image: np.ndarray, start: int, stop: int) -> np.ndarray:
        """Read bits [start, stop) as a uint8 array of 0/1 values."""
        flat = image.ravel()
        out = np.empty(stop - start, dtype=np.uint8)
        at = 0
        for plane, lo, hi in self._segments(start, stop):
            vals = flat[self.embed_flat[lo:hi]]
            out[at : at + hi - lo] = (vals >> plane) & 1
            at += hi - lo
        return out

    def write(self, image: np.ndarray, start: int, bits: np.ndarray) -> None:
        """Write a 0/1 array into bit positions [start, start + len(bits))."""
        bits = np.asarray(bits, dtype=np.uint8)
        if not image.flags.c_contiguous:
            raise ParameterError("cursor writes need a C-contiguous image")
        flat = image.ravel()
        at = 0
        for plane, lo, hi in self._segments(start, start + bits.size):
            idx = self.embed_flat[lo:hi]
            seg = bits[at : at + hi - lo]
            mask = np.uint8(~(1 << plane) & 0xFF)
            flat[idx] = (flat[idx] & mask) | (seg << plane)
            at += hi - lo


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Fixed-width big-endian bit array (most significant bit first)."""
    if value < 0 or (width < 64 and value >> width):
        raise ParameterError(f"value {value} does not fit in {width} bits")
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    return ((np.uint64(value) >> shifts) & np.uint64(1)).astype(np.uint8)


def bits_to_int(bits: np.ndarray) -> int:
    """Inverse of :func:`int_to_bits`."""
    value = 0
    for b in np.asarray(bits, dtype=np.uint8):
        value = (value << 1) | int(b)
    return value


def bytes_to_bits(data: bytes | np.ndarray) -> np.ndarray:
    """Expand bytes into bits, most significant bit of each byte first."""
    arr = np.frombuffer(bytes(data), dtype=np.uint8) if isinstance(
        data, (bytes, bytearray, memoryview)
    ) else np.asarray(data, dtype=np.uint8)
    return np.unpackbits(arr)


def bits_to_bytes(bits: np.ndarray) -> bytes:
    """Pack bits (MSB first per byte), zero-padding the final byte."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()
