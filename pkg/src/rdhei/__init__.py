"""Reversible data hiding in encrypted grayscale images.

High-capacity embedding room is generated by predicting pixels from a
per-block reference, entropy coding the prediction errors, and writing the
coded description back over the pixels it describes; everything left over
carries payload.  Two pipelines expose this: vacate room before encryption
(vrbe_*) and vacate room after encryption (vrae_*).  Extraction and image
recovery are exact and use disjoint key subsets.
"""

from .bench import CSV_HEADER, run as run_benchmark, to_csv as benchmark_csv
from .crypto import (
    ArnoldParams,
    Key,
    derive_arnold_params,
    demodulate,
    keystream,
    modulate,
    modulation_shifts,
    permute_blocks,
    splitmix64_words,
    xor_bits,
    xor_image,
)
from .errors import (
    CapacityError,
    CorruptionError,
    FormatError,
    NoRoomError,
    ParameterError,
    RdheiError,
)
from .image import BitCursor, BlockGrid, load_pgm, partition, save_pgm
from .metrics import abnormal_count, psnr, ssim
from .predictor import (
    DEFAULT_REFERENCE_SEED,
    canonical_order,
    med,
    predict_block,
    predict_image,
    recover_block,
    recover_image,
    select_references,
)
from .room import (
    RoomParams,
    VacateResult,
    restore,
    room_capacity,
    vacate,
)
from .schemes import (
    vrae_capacity,
    vrae_embed,
    vrae_encrypt,
    vrae_extract,
    vrae_recover,
    vrbe_capacity,
    vrbe_embed,
    vrbe_extract,
    vrbe_prepare,
    vrbe_recover,
)

__version__ = "0.1.0"

__all__ = [
    "ArnoldParams",
    "BitCursor",
    "BlockGrid",
    "CSV_HEADER",
    "CapacityError",
    "CorruptionError",
    "DEFAULT_REFERENCE_SEED",
    "FormatError",
    "Key",
    "NoRoomError",
    "ParameterError",
    "RdheiError",
    "RoomParams",
    "VacateResult",
    "abnormal_count",
    "benchmark_csv",
    "canonical_order",
    "demodulate",
    "derive_arnold_params",
    "keystream",
    "load_pgm",
    "med",
    "modulate",
    "modulation_shifts",
    "partition",
    "permute_blocks",
    "predict_block",
    "predict_image",
    "psnr",
    "recover_block",
    "recover_image",
    "restore",
    "room_capacity",
    "run_benchmark",
    "save_pgm",
    "select_references",
    "splitmix64_words",
    "ssim",
    "vacate",
    "vrae_capacity",
    "vrae_embed",
    "vrae_encrypt",
    "vrae_extract",
    "vrae_recover",
    "vrbe_capacity",
    "vrbe_embed",
    "vrbe_extract",
    "vrbe_prepare",
    "vrbe_recover",
    "xor_bits",
    "xor_image",
    "__version__",
]
