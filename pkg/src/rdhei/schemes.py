"""The two reversible hiding pipelines over encrypted images.

Vacate-before-encryption (vrbe_*): the content owner vacates room in the
plain image (whole image, one reference pixel), stream-encrypts every
pixel with key E1, and re-protects the length field with key E2 so the
data hider can locate the free room without learning the image.  The data
hider embeds payload bits encrypted with the hiding key.  A receiver with
E2 + the hiding key extracts; a receiver with E1 + E2 recovers the image
exactly; the two operations are independent.

Vacate-after-encryption (vrae_*): the owner encrypts first, per-block
modular shifts (optionally correlation-preserving, see `zeta`) followed by
an Arnold block permutation.  The data hider vacates room directly in the
encrypted image, which works because the modulation leaves intra-block
structure largely intact.  Extraction needs only the hiding key and the
public grid geometry; recovery undoes the vacating, the permutation, and
the modulation with the owner's keys.

Payloads are arrays of 0/1 bits everywhere; callers pack and unpack bytes.
"""

from __future__ import annotations

import numpy as np

from . import room
from .crypto import (
    Key,
    demodulate,
    derive_arnold_params,
    modulate,
    permute_blocks,
    xor_bits,
    xor_image,
)
from .errors import CapacityError, CorruptionError, ParameterError
from .image import BlockGrid, bits_to_int, check_image, int_to_bits
from .predictor import DEFAULT_REFERENCE_SEED
from .room import RoomParams, VacateResult


def _check_payload(payload: np.ndarray) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.uint8).ravel()
    if payload.size and payload.max() > 1:
        raise ParameterError("payload must be an array of 0/1 bits")
    return payload


def _whole_image_params(backend: str) -> RoomParams:
    return RoomParams(backend=backend, block=None)


# ---------------------------------------------------------------------------
# Vacate room before encryption


def vrbe_prepare(image: np.ndarray, key_e1: Key, key_e2: Key,
                 backend: str = "arith") -> VacateResult:
    """Vacate the plain image, encrypt it, re-key the length field.

    Returns the encrypted carrier plus the room bookkeeping (threshold,
    free capacity in bits, coded stream length).
    """
    res = room.vacate(check_image(image), _whole_image_params(backend))
    lay = room.layout_for(image.shape, _whole_image_params(backend))
    enc = xor_image(res.image, key_e1)
    len_bits = int_to_bits(res.coded_len, lay.header_bits)
    lay.cursor.write(enc, 0, xor_bits(len_bits, key_e2))
    return VacateResult(enc, res.threshold, res.capacity, res.coded_len,
                        res.header_bits)


def _vrbe_offset(carrier: np.ndarray, lay: room.RoomLayout,
                 key_e2: Key) -> int:
    """Payload start position, reading the E2-protected length field."""
    enc_len = lay.cursor.read(carrier, 0, lay.header_bits)
    coded_len = bits_to_int(xor_bits(enc_len, key_e2))
    if lay.header_bits + coded_len > lay.cursor.capacity:
        raise CorruptionError(
            "length field invalid: damaged carrier or wrong key"
        )
    return lay.header_bits + coded_len


def vrbe_capacity(carrier: np.ndarray, key_e2: Key) -> int:
    """Free payload bits of a prepared carrier."""
    carrier = check_image(carrier)
    lay = room.layout_for(carrier.shape, _whole_image_params("arith"))
    return lay.cursor.capacity - _vrbe_offset(carrier, lay, key_e2)


def vrbe_embed(carrier: np.ndarray, payload: np.ndarray, key_e2: Key,
               key_h: Key) -> np.ndarray:
    """Write an encrypted payload into the free room of a prepared carrier."""
    carrier = check_image(carrier)
    payload = _check_payload(payload)
    lay = room.layout_for(carrier.shape, _whole_image_params("arith"))
    offset = _vrbe_offset(carrier, lay, key_e2)
    free = lay.cursor.capacity - offset
    if payload.size > free:
        raise CapacityError(
            f"payload of {payload.size} bits exceeds free room of {free}"
        )
    out = carrier.copy()
    lay.cursor.write(out, offset, xor_bits(payload, key_h))
    return out


def vrbe_extract(carrier: np.ndarray, key_e2: Key, key_h: Key,
                 n_bits: int) -> np.ndarray:
    """Read back n_bits of payload; needs only the E2 and hiding keys."""
    carrier = check_image(carrier)
    if n_bits < 0:
        raise ParameterError("n_bits must be nonnegative")
    lay = room.layout_for(carrier.shape, _whole_image_params("arith"))
    offset = _vrbe_offset(carrier, lay, key_e2)
    if offset + n_bits > lay.cursor.capacity:
        raise CapacityError("requested more bits than the carrier holds")
    return xor_bits(lay.cursor.read(carrier, offset, offset + n_bits), key_h)


def vrbe_recover(carrier: np.ndarray, key_e1: Key, key_e2: Key,
                 backend: str = "arith") -> np.ndarray:
    """Rebuild the original image exactly; payload presence is irrelevant."""
    carrier = check_image(carrier)
    params = _whole_image_params(backend)
    lay = room.layout_for(carrier.shape, params)
    offset = _vrbe_offset(carrier, lay, key_e2)
    coded_len = offset - lay.header_bits
    plain = xor_image(carrier, key_e1)
    lay.cursor.write(plain, 0, int_to_bits(coded_len, lay.header_bits))
    return room.restore(plain, params)


# ---------------------------------------------------------------------------
# Vacate room after encryption


def vrae_encrypt(image: np.ndarray, key_m: Key, key_p: Key,
                 block: tuple[int, int], zeta: float | None) -> np.ndarray:
    """Per-block modulation with key M, then Arnold permutation with key P."""
    image = check_image(image)
    grid = BlockGrid(image.shape, block[0], block[1])
    enc, _ = modulate(image, key_m, zeta, grid)
    return permute_blocks(enc, grid, derive_arnold_params(key_p, grid))


def vrae_embed(image: np.ndarray, payload: np.ndarray, key_h: Key,
               block: tuple[int, int],
               seed: int = DEFAULT_REFERENCE_SEED,
               backend: str = "arith") -> VacateResult:
    """Vacate room in an encrypted image and embed an encrypted payload.

    Returns the marked carrier plus the room bookkeeping.  Raises
    NoRoomError when the encrypted image has no compressible structure
    (zeta too large, or plain-image embedding of white noise).
    """
    payload = _check_payload(payload)
    params = RoomParams(backend=backend, block=tuple(block), seed=seed)
    res = room.vacate(check_image(image), params)
    if payload.size > res.capacity:
        raise CapacityError(
            f"payload of {payload.size} bits exceeds free room of "
            f"{res.capacity}"
        )
    lay = room.layout_for(image.shape, params)
    lay.cursor.write(res.image, lay.header_bits + res.coded_len,
                     xor_bits(payload, key_h))
    return res


def vrae_capacity(carrier: np.ndarray, block: tuple[int, int],
                  seed: int = DEFAULT_REFERENCE_SEED) -> int:
    """Free payload bits of a vacated carrier (length field is plaintext)."""
    carrier = check_image(carrier)
    params = RoomParams(block=tuple(block), seed=seed)
    return room.room_capacity(carrier, params)


def vrae_extract(carrier: np.ndarray, key_h: Key, block: tuple[int, int],
                 seed: int = DEFAULT_REFERENCE_SEED,
                 n_bits: int = 0) -> np.ndarray:
    """Read back n_bits of payload with the hiding key and grid geometry."""
    carrier = check_image(carrier)
    if n_bits < 0:
        raise ParameterError("n_bits must be nonnegative")
    params = RoomParams(block=tuple(block), seed=seed)
    lay = room.layout_for(carrier.shape, params)
    offset = lay.header_bits + room.read_stream_len(carrier, lay)
    if offset + n_bits > lay.cursor.capacity:
        raise CapacityError("requested more bits than the carrier holds")
    return xor_bits(lay.cursor.read(carrier, offset, offset + n_bits), key_h)


def vrae_recover(carrier: np.ndarray, key_m: Key, key_p: Key,
                 block: tuple[int, int], zeta: float | None,
                 seed: int = DEFAULT_REFERENCE_SEED,
                 backend: str = "arith") -> np.ndarray:
    """Undo vacating, the permutation, and the modulation, in that order."""
    carrier = check_image(carrier)
    params = RoomParams(backend=backend, block=tuple(block), seed=seed)
    restored = room.restore(carrier, params)
    grid = BlockGrid(carrier.shape, block[0], block[1])
    unpermuted = permute_blocks(
        restored, grid, derive_arnold_params(key_p, grid), inverse=True
    )
    return demodulate(unpermuted, key_m, zeta, grid)
