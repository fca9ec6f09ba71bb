"""Room generation: vacate an image's redundancy into itself.

The image is partitioned into blocks (or treated as one block covering the
whole image).  Every non-reference pixel is predicted from already known
neighbors, the prediction errors are entropy coded, and the coded stream is
written back over the pixels it describes, low planes first:

    length field | CD1 (model header) | CD2 (coded symbols) | AD (literals)

Everything after the stream, up to the last bit plane of the last embedding
pixel, is free room for payload.  The length field is ``3 + w`` bits and
every count field is ``w`` bits, with ``w = ceil(log2(N1 * N2))`` for an
N1 x N2 image, so the layout is self-describing given the grid geometry.
Restoration reads the stream, decodes the errors, and replays the
prediction in the same canonical order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coder
from .errors import CorruptionError, ParameterError
from .image import (
    BitCursor,
    BlockGrid,
    bits_to_bytes,
    bits_to_int,
    bytes_to_bits,
    check_image,
    int_to_bits,
)
from .predictor import (
    DEFAULT_REFERENCE_SEED,
    error_histogram,
    predict_image,
    recover_image,
    select_references,
)


@dataclass(frozen=True)
class RoomParams:
    """How to vacate: entropy backend, block geometry, reference seed.

    block = None treats the whole image as a single block with its
    reference pinned to the top-left corner (the vacate-before-encryption
    pipeline); a (n1, n2) tuple partitions the image and draws one
    reference per block from the seeded stream.
    """

    backend: str = "arith"
    block: tuple[int, int] | None = None
    seed: int = DEFAULT_REFERENCE_SEED

    def __post_init__(self):
        coder.check_backend(self.backend)
        if self.block is not None:
            n1, n2 = self.block
            if n1 * n2 < 2:
                raise ParameterError("blocks need at least two pixels")


@dataclass(frozen=True)
class RoomLayout:
    """Geometry derived from an image shape and RoomParams."""

    grid: BlockGrid
    refs: np.ndarray
    cursor: BitCursor
    count_bits: int
    header_bits: int


def layout_for(image_shape: tuple[int, int], params: RoomParams) -> RoomLayout:
    h, w = image_shape
    if params.block is None:
        grid = BlockGrid((h, w), h, w)
    else:
        grid = BlockGrid((h, w), params.block[0], params.block[1])
    refs = select_references(grid, params.seed,
                             whole_image=params.block is None)
    mask = np.zeros((h, w), dtype=bool)
    ch, cw = grid.covered_shape
    mask[:ch, :cw] = True
    coords = grid.snake_coords
    mask[coords[:, 0] * grid.n1 + refs[:, 0],
         coords[:, 1] * grid.n2 + refs[:, 1]] = False
    return RoomLayout(
        grid=grid,
        refs=refs,
        cursor=BitCursor.from_mask(mask),
        count_bits=coder.count_field_bits(h * w),
        header_bits=coder.length_field_bits(h * w),
    )


@dataclass(frozen=True)
class VacateResult:
    image: np.ndarray
    threshold: int
    capacity: int
    coded_len: int
    header_bits: int


def vacate(image: np.ndarray, params: RoomParams) -> VacateResult:
    """Self-embed the coded description; returns the carrier and its room."""
    image = check_image(image)
    lay = layout_for(image.shape, params)
    errors, values = predict_image(image, lay.grid, lay.refs)
    hist = error_histogram(errors)
    choice = coder.optimize_threshold(
        errors, hist, lay.cursor.n_pixels, lay.count_bits, lay.header_bits,
        params.backend,
    )
    model = choice.model
    symbols = coder.classify_errors(errors, choice.threshold)
    joint = symbols == model.n_symbols - 1
    ad = bytes_to_bits(values.ravel()[joint].astype(np.uint8))
    if params.backend == "arith":
        cd2 = bytes_to_bits(coder.rc_encode_bytes(symbols, model))
        cd1 = coder.build_cd1_arith(model, lay.count_bits, cd2.size)
    else:
        lengths = coder.huffman_lengths(model.counts + 1)
        codes = coder.canonical_codes(lengths)
        cd1 = coder.build_cd1_huffman(choice.threshold, lengths, codes)
        cd2 = coder.huffman_encode_bits(symbols, codes, lengths)
    coded_len = int(cd1.size + cd2.size + ad.size)
    capacity = lay.cursor.capacity - lay.header_bits - coded_len
    assert capacity == choice.capacity, "room accounting drifted"
    out = image.copy()
    lay.cursor.write(
        out, 0,
        np.concatenate([int_to_bits(coded_len, lay.header_bits), cd1, cd2, ad]),
    )
    return VacateResult(out, choice.threshold, capacity, coded_len,
                        lay.header_bits)


def read_stream_len(image: np.ndarray, lay: RoomLayout) -> int:
    """The self-embedded stream length, validated against the capacity."""
    coded_len = bits_to_int(lay.cursor.read(image, 0, lay.header_bits))
    if lay.header_bits + coded_len > lay.cursor.capacity:
        raise CorruptionError("coded stream does not fit the carrier")
    return coded_len


def payload_offset(image: np.ndarray, params: RoomParams) -> int:
    """First free bit position after the self-embedded stream."""
    lay = layout_for(image.shape, params)
    return lay.header_bits + read_stream_len(image, lay)


def room_capacity(image: np.ndarray, params: RoomParams) -> int:
    """Free bits available for payload in an already vacated carrier."""
    lay = layout_for(image.shape, params)
    return lay.cursor.capacity - lay.header_bits - read_stream_len(image, lay)


def restore(image: np.ndarray, params: RoomParams) -> np.ndarray:
    """Rebuild the pre-vacate image from a carrier (payload may be present)."""
    image = check_image(image)
    lay = layout_for(image.shape, params)
    n_emb = lay.cursor.n_pixels
    coded_len = read_stream_len(image, lay)
    bits = lay.cursor.read(image, lay.header_bits,
                           lay.header_bits + coded_len)
    if params.backend == "arith":
        model, cd2_bits, pos = coder.parse_cd1_arith(
            bits, 0, lay.count_bits, n_emb
        )
        threshold = model.threshold
        if pos + cd2_bits > bits.size:
            raise CorruptionError("coded stream truncated")
        cd2 = np.frombuffer(bits_to_bytes(bits[pos : pos + cd2_bits]),
                            dtype=np.uint8)
        symbols = coder.rc_decode_symbols(cd2, model, n_emb)
        pos += cd2_bits
        joint = symbols == 2 * threshold
        if int(joint.sum()) != model.joint_count:
            raise CorruptionError("decoded stream disagrees with its header")
    else:
        threshold, lengths, codes, pos = coder.parse_cd1_huffman(bits, 0)
        symbols, pos = coder.huffman_decode_bits(bits, pos, n_emb, codes,
                                                 lengths)
        joint = symbols == 2 * threshold
    n_joint = int(joint.sum())
    if pos + 8 * n_joint != coded_len:
        raise CorruptionError("coded stream length mismatch")
    literals = np.frombuffer(bits_to_bytes(bits[pos : pos + 8 * n_joint]),
                             dtype=np.uint8)
    values = np.empty(symbols.size, dtype=np.int64)
    values[~joint] = symbols[~joint] - threshold
    values[joint] = literals
    npix = lay.grid.block_pixels - 1
    return recover_image(
        image, lay.grid, lay.refs,
        values.reshape(-1, npix), joint.reshape(-1, npix).astype(np.uint8),
    )
