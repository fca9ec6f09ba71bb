"""Entropy coding of prediction errors and threshold optimization.

A threshold T splits errors into independent values in [-T, T-1], coded by
symbol index e + T, and joint pixels (everything else), coded as the single
escape symbol 2T whose original bytes travel verbatim in the auxiliary
stream.  Two interchangeable backends produce the coded stream:

* "arith": a static range coder (32-bit registers, byte renormalization,
  carry propagation).  CD1 carries T, the 2T+1 raw counts, and the CD2 bit
  length; probabilities are the raw counts.
* "huffman": canonical prefix codes, lengths capped at 8 bits so any
  codeword fits one pixel, built from add-one-smoothed counts.  CD1 carries
  T and the codeword table; CD2 is self-delimiting given the symbol count.

The best T maximizes the exact net capacity, scanning every T in [1, 255]
(Huffman: alphabets above 256 symbols cannot meet the 8-bit cap and are
skipped).  Ties prefer the smaller T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CorruptionError, NoRoomError, ParameterError
from .image import bits_to_int, int_to_bits
from .predictor import ERROR_OFFSET

BACKENDS = ("arith", "huffman")
MAX_THRESHOLD = 255
MAX_CODE_LEN = 8
# Largest total count the range coder can divide range by without starving.
MAX_TOTAL = 1 << 24


def check_backend(backend: str) -> str:
    if backend not in BACKENDS:
        raise ParameterError(f"backend must be one of {BACKENDS}, got {backend!r}")
    return backend


def length_field_bits(total_pixels: int) -> int:
    """Bit width of the stream-length header: 3 + ceil(log2(N1*N2))."""
    return 3 + count_field_bits(total_pixels)


def count_field_bits(total_pixels: int) -> int:
    """Bit width of one histogram count: ceil(log2(N1*N2))."""
    if total_pixels < 2:
        raise ParameterError("image too small")
    return int(math.ceil(math.log2(total_pixels)))


@dataclass(frozen=True)
class SymbolModel:
    """Counts for the 2T+1 symbol alphabet: errors -T..T-1, then joint."""

    threshold: int
    counts: np.ndarray

    @property
    def n_symbols(self) -> int:
        return int(self.counts.size)

    @property
    def joint_count(self) -> int:
        return int(self.counts[-1])

    @property
    def independent_total(self) -> int:
        return int(self.counts[:-1].sum())

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def cumulative(self) -> np.ndarray:
        cum = np.zeros(self.n_symbols + 1, dtype=np.int64)
        np.cumsum(self.counts, out=cum[1:])
        return cum


def model_from_histogram(hist: np.ndarray, threshold: int) -> SymbolModel:
    """Build the symbol model for a threshold from the error histogram."""
    t = threshold
    if not (1 <= t <= MAX_THRESHOLD):
        raise ParameterError(f"threshold must be in [1, 255], got {t}")
    counts = np.zeros(2 * t + 1, dtype=np.int64)
    counts[: 2 * t] = hist[ERROR_OFFSET - t : ERROR_OFFSET + t]
    counts[2 * t] = int(hist.sum()) - int(counts[: 2 * t].sum())
    return SymbolModel(t, counts)


def classify_errors(errors: np.ndarray, threshold: int) -> np.ndarray:
    """Map errors to symbol indices: e + T if independent, else 2T."""
    t = threshold
    e = errors.ravel()
    return np.where((e >= -t) & (e < t), e + t, 2 * t).astype(np.int64)


# ---------------------------------------------------------------------------
# Range coder backend


def rc_encode_bytes(symbols: np.ndarray, model: SymbolModel) -> np.ndarray:
    """Range-encode symbols; returns the byte stream, trailing zeros cut.

    The decoder zero-pads past the end of the stream, and the final code
    value with zeros appended always stays inside the last interval, so
    stripping zero bytes is free compression of the terminal flush.  A
    degenerate stream whose model has a single nonzero count encodes to
    zero bytes.
    """
    if model.total > MAX_TOTAL:
        raise ParameterError("model total exceeds range coder capacity")
    symbols = np.ascontiguousarray(symbols, dtype=np.int64)
    out = np.empty(4 * symbols.size + 16, dtype=np.uint8)
    n = _kernels.rc_encode(symbols, model.cumulative(), out)
    while n > 0 and out[n - 1] == 0:
        n -= 1
    return out[:n].copy()


def rc_decode_symbols(data: np.ndarray, model: SymbolModel,
                      count: int) -> np.ndarray:
    """Decode `count` symbols from a range-coded byte stream."""
    if model.total > MAX_TOTAL or model.total <= 0:
        raise CorruptionError("invalid model counts")
    out = np.empty(count, dtype=np.int64)
    _kernels.rc_decode(
        np.ascontiguousarray(data, dtype=np.uint8), model.cumulative(), out
    )
    return out


# ---------------------------------------------------------------------------
# Huffman backend


def huffman_lengths(weights: np.ndarray, limit: int = MAX_CODE_LEN) -> np.ndarray:
    """Optimal prefix-code lengths under a maximum length.

    Uses the plain two-queue construction when it already fits the cap and
    package-merge otherwise.  weights must be positive.
    """
    weights = np.asarray(weights, dtype=np.int64)
    if weights.size < 2:
        raise ParameterError("need at least two symbols")
    if np.any(weights <= 0):
        raise ParameterError("weights must be positive")
    if (1 << limit) < weights.size:
        raise ParameterError(
            f"{weights.size} symbols cannot fit codes of <= {limit} bits"
        )
    order = np.argsort(weights, kind="stable")
    sorted_lengths = _kernels.huffman_lengths_sorted(weights[order])
    if sorted_lengths.max() > limit:
        sorted_lengths = _kernels.package_merge_sorted(weights[order], limit)
        if sorted_lengths[0] < 0:
            raise ParameterError("length-limited code construction failed")
    lengths = np.empty_like(sorted_lengths)
    lengths[order] = sorted_lengths
    return lengths


def canonical_codes(lengths: np.ndarray) -> np.ndarray:
    """Canonical codeword values: codes assigned by (length, symbol index)."""
    lengths = np.asarray(lengths, dtype=np.int64)
    order = np.lexsort((np.arange(lengths.size), lengths))
    codes = np.zeros(lengths.size, dtype=np.int64)
    code = 0
    prev = int(lengths[order[0]])
    for i, sym in enumerate(order):
        length = int(lengths[sym])
        if i > 0:
            code = (code + 1) << (length - prev)
        codes[sym] = code
        prev = length
        if code >> length:
            raise ParameterError("code lengths violate the Kraft inequality")
    return codes


def huffman_encode_bits(symbols: np.ndarray, codes: np.ndarray,
                        lengths: np.ndarray) -> np.ndarray:
    """Concatenated codewords, each written MSB first."""
    cs = codes[symbols]
    ls = lengths[symbols]
    bitmat = (cs[:, None] >> np.arange(MAX_CODE_LEN - 1, -1, -1)) & 1
    mask = np.arange(MAX_CODE_LEN) >= (MAX_CODE_LEN - ls[:, None])
    return bitmat[mask].astype(np.uint8)


def huffman_table(codes: np.ndarray, lengths: np.ndarray):
    """256-entry peek table (symbols, lengths) for the decoder.

    Raises CorruptionError for overlapping codewords, which can only come
    from a damaged CD1.
    """
    table_sym = np.zeros(256, dtype=np.int64)
    table_len = np.zeros(256, dtype=np.uint8)
    for sym in range(codes.size):
        length = int(lengths[sym])
        if not (1 <= length <= MAX_CODE_LEN):
            raise CorruptionError("invalid codeword length")
        lo = int(codes[sym]) << (MAX_CODE_LEN - length)
        hi = (int(codes[sym]) + 1) << (MAX_CODE_LEN - length)
        if lo >= 256 or hi > 256:
            raise CorruptionError("codeword does not fit its length")
        if table_len[lo:hi].any():
            raise CorruptionError("overlapping codewords in stream header")
        table_sym[lo:hi] = sym
        table_len[lo:hi] = length
    return table_sym, table_len


def huffman_decode_bits(bits: np.ndarray, start: int, count: int,
                        codes: np.ndarray, lengths: np.ndarray):
    """Decode `count` codewords; returns (symbols, end bit position)."""
    table_sym, table_len = huffman_table(codes, lengths)
    out = np.empty(count, dtype=np.int64)
    end = _kernels.huffman_decode(
        np.ascontiguousarray(bits, dtype=np.uint8), start,
        table_sym, table_len, out,
    )
    if end < 0:
        raise CorruptionError("undecodable codeword in symbol stream")
    return out, int(end)


# ---------------------------------------------------------------------------
# Stream headers (CD1)


def build_cd1_arith(model: SymbolModel, count_bits: int,
                    cd2_bits: int) -> np.ndarray:
    parts = [int_to_bits(model.threshold, 8)]
    for c in model.counts:
        parts.append(int_to_bits(int(c), count_bits))
    parts.append(int_to_bits(cd2_bits, count_bits + 3))
    return np.concatenate(parts)


def parse_cd1_arith(bits: np.ndarray, offset: int, count_bits: int,
                    n_pixels: int):
    """Returns (model, cd2_bits, position after CD1)."""
    pos = offset
    if pos + 8 > bits.size:
        raise CorruptionError("stream header truncated")
    t = bits_to_int(bits[pos : pos + 8])
    pos += 8
    if not (1 <= t <= MAX_THRESHOLD):
        raise CorruptionError(f"invalid threshold {t}")
    need = (2 * t + 1) * count_bits + count_bits + 3
    if pos + need > bits.size:
        raise CorruptionError("stream header truncated")
    counts = np.empty(2 * t + 1, dtype=np.int64)
    for i in range(2 * t + 1):
        counts[i] = bits_to_int(bits[pos : pos + count_bits])
        pos += count_bits
    cd2_bits = bits_to_int(bits[pos : pos + count_bits + 3])
    pos += count_bits + 3
    if int(counts.sum()) != n_pixels:
        raise CorruptionError("histogram counts do not match the pixel count")
    if cd2_bits % 8:
        raise CorruptionError("coded stream length is not byte aligned")
    return SymbolModel(t, counts), cd2_bits, pos


def build_cd1_huffman(threshold: int, lengths: np.ndarray,
                      codes: np.ndarray) -> np.ndarray:
    """T, then per symbol a 3-bit (length - 1) field and the codeword."""
    parts = [int_to_bits(threshold, 8)]
    for sym in range(lengths.size):
        length = int(lengths[sym])
        parts.append(int_to_bits(length - 1, 3))
        parts.append(int_to_bits(int(codes[sym]), length))
    return np.concatenate(parts)


def parse_cd1_huffman(bits: np.ndarray, offset: int):
    """Returns (threshold, lengths, codes, position after CD1)."""
    pos = offset
    if pos + 8 > bits.size:
        raise CorruptionError("stream header truncated")
    t = bits_to_int(bits[pos : pos + 8])
    pos += 8
    if not (1 <= t <= 127):
        raise CorruptionError(f"invalid threshold {t}")
    n_sym = 2 * t + 1
    lengths = np.empty(n_sym, dtype=np.int64)
    codes = np.empty(n_sym, dtype=np.int64)
    for sym in range(n_sym):
        if pos + 3 > bits.size:
            raise CorruptionError("stream header truncated")
        length = bits_to_int(bits[pos : pos + 3]) + 1
        pos += 3
        if pos + length > bits.size:
            raise CorruptionError("stream header truncated")
        lengths[sym] = length
        codes[sym] = bits_to_int(bits[pos : pos + length])
        pos += length
    return t, lengths, codes, pos


# ---------------------------------------------------------------------------
# Net capacity and the threshold scan


def ec_arith(independent_total: int, threshold: int, count_bits: int,
             header_bits: int, cd2_bits: int) -> int:
    """Exact net room of the range-coder stream for one threshold."""
    return (
        8 * independent_total
        - 11
        - header_bits
        - (2 * threshold + 2) * count_bits
        - cd2_bits
    )


def ec_huffman(independent_total: int, threshold: int, header_bits: int,
               weighted_length: int) -> int:
    """Exact net room of the Huffman stream for one threshold.

    weighted_length is sum((count_s + 1) * len_s): the smoothed weights
    times the code lengths, which equals the table cost plus the coded
    symbol cost.
    """
    return (
        8 * (independent_total - 1)
        - 3 * (2 * threshold + 1)
        - header_bits
        - weighted_length
    )


@dataclass(frozen=True)
class ThresholdChoice:
    threshold: int
    capacity: int
    model: SymbolModel


def optimize_threshold(errors: np.ndarray, hist: np.ndarray, n_pixels: int,
                       count_bits: int, header_bits: int,
                       backend: str) -> ThresholdChoice:
    """Exhaustive exact scan of T in [1, 255] for the given backend.

    Every candidate stream is actually built (the range coder runs for each
    T; Huffman lengths are exact by construction), so the reported capacity
    is the real one, not an entropy estimate.
    """
    check_backend(backend)
    total = int(hist.sum())
    if total != n_pixels:
        raise ParameterError("histogram does not match pixel count")
    if total > MAX_TOTAL:
        raise ParameterError("image too large for the range coder")
    # prefix[t] = number of errors in [-t, t-1]
    center = np.cumsum(hist)
    best_t = 0
    best_ec = None
    scratch = np.empty(4 * errors.size + 16, dtype=np.uint8)
    errors = errors.ravel()
    top = MAX_THRESHOLD if backend == "arith" else 127
    for t in range(1, top + 1):
        indep = int(center[ERROR_OFFSET + t - 1] - center[ERROR_OFFSET - t - 1])
        if backend == "arith":
            symbols = classify_errors(errors, t)
            model = model_from_histogram(hist, t)
            nbytes = _kernels.rc_encode(symbols, model.cumulative(), scratch)
            while nbytes > 0 and scratch[nbytes - 1] == 0:
                nbytes -= 1
            ec = ec_arith(indep, t, count_bits, header_bits, 8 * nbytes)
        else:
            model = model_from_histogram(hist, t)
            weights = model.counts + 1
            lengths = huffman_lengths(weights, MAX_CODE_LEN)
            weighted = int((weights * lengths).sum())
            ec = ec_huffman(indep, t, header_bits, weighted)
        if best_ec is None or ec > best_ec:
            best_ec = ec
            best_t = t
    if best_ec is None or best_ec <= 0:
        raise NoRoomError(
            "no threshold yields positive embedding room for this image"
        )
    return ThresholdChoice(best_t, best_ec, model_from_histogram(hist, best_t))
