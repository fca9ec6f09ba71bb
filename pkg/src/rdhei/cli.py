"""Command line front end.

Exit codes: 0 success, 2 bad parameters or capacity, 3 corrupt carrier or
wrong key, 4 unreadable or malformed files.  Keys are 64 hex characters
and can come from RDHEI_KEY_* environment variables instead of flags.

Payload length bookkeeping: embed writes a `<out>.meta` sidecar holding
`payload_bits=N`; extract reads the carrier's sidecar unless
--payload-bits is given explicitly.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import numpy as np

from . import bench as bench_mod
from . import metrics, room, schemes
from .crypto import Key
from .errors import (
    CapacityError,
    CorruptionError,
    FormatError,
    ParameterError,
    RdheiError,
)
from .image import bits_to_bytes, bytes_to_bits, load_pgm, save_pgm
from .predictor import DEFAULT_REFERENCE_SEED


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, CorruptionError):
        return 3
    if isinstance(exc, FormatError):
        return 4
    if isinstance(exc, (ParameterError, CapacityError)):
        return 2
    if isinstance(exc, OSError):
        return 4
    return 1


def guarded(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (RdheiError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_exit_code(exc))

    return wrapper


def _parse_key(_ctx, _param, value) -> Key | None:
    if value is None:
        return None
    try:
        return Key.from_hex(value)
    except ParameterError as exc:
        raise click.BadParameter(str(exc))


def _parse_block(_ctx, _param, value):
    if value is None:
        return None
    try:
        n1, _, n2 = value.lower().partition("x")
        block = (int(n1), int(n2))
    except ValueError:
        raise click.BadParameter(f"expected ROWSxCOLS, got {value!r}")
    if block[0] < 1 or block[1] < 1:
        raise click.BadParameter("block sides must be positive")
    return block


def _parse_zeta(_ctx, _param, value):
    if value is None or value.lower() == "none":
        return None
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter(f"expected a float or 'none', got {value!r}")


def _key_option(name: str, required: bool = True):
    flag = f"--key-{name.replace('_', '')}"
    return click.option(
        flag, name, required=required, callback=_parse_key,
        envvar=f"RDHEI_KEY_{name.upper()}", metavar="HEX64",
        help=f"256-bit key {name.upper()} as 64 hex characters.",
    )


_block_option = click.option(
    "--block", callback=_parse_block, default="4x4", show_default=True,
    metavar="ROWSxCOLS", help="Block geometry, e.g. 8x8.",
)
_zeta_option = click.option(
    "--zeta", callback=_parse_zeta, default="none", show_default=True,
    metavar="FLOAT|none",
    help="Correlation-preserving modulation strength in [0, 1], or none.",
)
_coder_option = click.option(
    "--coder", type=click.Choice(["arith", "huffman"]), default="arith",
    show_default=True, help="Entropy coding backend.",
)
_seed_option = click.option(
    "--seed", type=int, default=DEFAULT_REFERENCE_SEED, show_default=True,
    help="Reference-pixel selection seed (public grid parameter).",
)
_out_option = click.option(
    "--out", type=click.Path(dir_okay=False, path_type=Path), required=True,
    help="Output file.",
)


def _read_image(path: Path) -> np.ndarray:
    return load_pgm(Path(path).read_bytes())


def _write_image(path: Path, image: np.ndarray) -> None:
    Path(path).write_bytes(save_pgm(image))


def _write_payload_meta(out: Path, n_bits: int) -> None:
    Path(str(out) + ".meta").write_text(f"payload_bits={n_bits}\n")


def _read_payload_bits(carrier: Path, explicit: int | None) -> int:
    if explicit is not None:
        if explicit < 0:
            raise ParameterError("--payload-bits must be nonnegative")
        return explicit
    meta = Path(str(carrier) + ".meta")
    if not meta.exists():
        raise ParameterError(
            f"no --payload-bits given and no sidecar {meta} found"
        )
    text = meta.read_text().strip()
    for line in text.splitlines():
        key, _, val = line.partition("=")
        if key.strip() == "payload_bits":
            try:
                return int(val)
            except ValueError:
                raise FormatError(f"bad payload_bits value in {meta}")
    raise FormatError(f"no payload_bits entry in {meta}")


@click.group()
def main():
    """Reversible data hiding in encrypted grayscale images."""


# ---------------------------------------------------------------------------
# Vacate room before encryption


@main.command("vrbe-prepare")
@click.argument("image", type=click.Path(exists=True, dir_okay=False,
                                         path_type=Path))
@_key_option("e1")
@_key_option("e2")
@_coder_option
@_out_option
@guarded
def vrbe_prepare(image, e1, e2, coder, out):
    """Vacate room in a plain image and encrypt it."""
    res = schemes.vrbe_prepare(_read_image(image), e1, e2, coder)
    _write_image(out, res.image)
    click.echo(f"threshold={res.threshold} capacity_bits={res.capacity} "
               f"rate_bpp={res.capacity / res.image.size:.4f}")


@main.command("vrbe-embed")
@click.argument("carrier", type=click.Path(exists=True, dir_okay=False,
                                           path_type=Path))
@_key_option("e2")
@_key_option("h")
@click.option("--payload", type=click.Path(exists=True, dir_okay=False,
                                           path_type=Path), required=True,
              help="File whose bytes become the payload.")
@_out_option
@guarded
def vrbe_embed(carrier, e2, h, payload, out):
    """Embed a payload file into a prepared carrier."""
    bits = bytes_to_bits(Path(payload).read_bytes())
    marked = schemes.vrbe_embed(_read_image(carrier), bits, e2, h)
    _write_image(out, marked)
    _write_payload_meta(out, bits.size)
    click.echo(f"embedded_bits={bits.size}")


@main.command("vrbe-extract")
@click.argument("carrier", type=click.Path(exists=True, dir_okay=False,
                                           path_type=Path))
@_key_option("e2")
@_key_option("h")
@click.option("--payload-bits", type=int, default=None,
              help="Payload length; defaults to the carrier's sidecar.")
@_out_option
@guarded
def vrbe_extract(carrier, e2, h, payload_bits, out):
    """Extract the payload from a marked carrier."""
    n_bits = _read_payload_bits(carrier, payload_bits)
    bits = schemes.vrbe_extract(_read_image(carrier), e2, h, n_bits)
    Path(out).write_bytes(bits_to_bytes(bits))
    click.echo(f"extracted_bits={n_bits}")


@main.command("vrbe-recover")
@click.argument("carrier", type=click.Path(exists=True, dir_okay=False,
                                           path_type=Path))
@_key_option("e1")
@_key_option("e2")
@_coder_option
@_out_option
@guarded
def vrbe_recover(carrier, e1, e2, coder, out):
    """Recover the original image from a carrier."""
    _write_image(out, schemes.vrbe_recover(_read_image(carrier), e1, e2,
                                           coder))
    click.echo("recovered")


# ---------------------------------------------------------------------------
# Vacate room after encryption


@main.command("vrae-encrypt")
@click.argument("image", type=click.Path(exists=True, dir_okay=False,
                                         path_type=Path))
@_key_option("m")
@_key_option("p")
@_block_option
@_zeta_option
@_out_option
@guarded
def vrae_encrypt(image, m, p, block, zeta, out):
    """Encrypt an image by block modulation plus block permutation."""
    _write_image(out, schemes.vrae_encrypt(_read_image(image), m, p, block,
                                           zeta))
    click.echo("encrypted")


@main.command("vrae-embed")
@click.argument("carrier", type=click.Path(exists=True, dir_okay=False,
                                           path_type=Path))
@_key_option("h")
@_block_option
@_seed_option
@_coder_option
@click.option("--payload", type=click.Path(exists=True, dir_okay=False,
                                           path_type=Path), required=True,
              help="File whose bytes become the payload.")
@_out_option
@guarded
def vrae_embed(carrier, h, block, seed, coder, payload, out):
    """Vacate room in an encrypted image and embed a payload file."""
    bits = bytes_to_bits(Path(payload).read_bytes())
    res = schemes.vrae_embed(_read_image(carrier), bits, h, block, seed,
                             coder)
    _write_image(out, res.image)
    _write_payload_meta(out, bits.size)
    click.echo(f"threshold={res.threshold} capacity_bits={res.capacity} "
               f"embedded_bits={bits.size}")


@main.command("vrae-extract")
@click.argument("carrier", type=click.Path(exists=True, dir_okay=False,
                                           path_type=Path))
@_key_option("h")
@_block_option
@_seed_option
@click.option("--payload-bits", type=int, default=None,
              help="Payload length; defaults to the carrier's sidecar.")
@_out_option
@guarded
def vrae_extract(carrier, h, block, seed, payload_bits, out):
    """Extract the payload from a marked encrypted carrier."""
    n_bits = _read_payload_bits(carrier, payload_bits)
    bits = schemes.vrae_extract(_read_image(carrier), h, block, seed, n_bits)
    Path(out).write_bytes(bits_to_bytes(bits))
    click.echo(f"extracted_bits={n_bits}")


@main.command("vrae-recover")
@click.argument("carrier", type=click.Path(exists=True, dir_okay=False,
                                           path_type=Path))
@_key_option("m")
@_key_option("p")
@_block_option
@_zeta_option
@_seed_option
@_coder_option
@_out_option
@guarded
def vrae_recover(carrier, m, p, block, zeta, seed, coder, out):
    """Recover the original image from a marked encrypted carrier."""
    _write_image(out, schemes.vrae_recover(_read_image(carrier), m, p, block,
                                           zeta, seed, coder))
    click.echo("recovered")


# ---------------------------------------------------------------------------
# Analysis


@main.command("capacity")
@click.argument("image", type=click.Path(exists=True, dir_okay=False,
                                         path_type=Path))
@click.option("--block", callback=_parse_block, default=None,
              metavar="ROWSxCOLS",
              help="Block geometry; omit for whole-image vacating.")
@_seed_option
@_coder_option
@guarded
def capacity(image, block, seed, coder):
    """Report the net embedding room this image would give."""
    img = _read_image(image)
    res = room.vacate(img, room.RoomParams(backend=coder, block=block,
                                           seed=seed))
    click.echo(f"threshold={res.threshold} capacity_bits={res.capacity} "
               f"rate_bpp={res.capacity / img.size:.4f}")


@main.command("metrics")
@click.argument("reference", type=click.Path(exists=True, dir_okay=False,
                                             path_type=Path))
@click.argument("other", type=click.Path(exists=True, dir_okay=False,
                                         path_type=Path))
@guarded
def metrics_cmd(reference, other):
    """PSNR and SSIM between two images."""
    a = _read_image(reference)
    b = _read_image(other)
    click.echo(f"psnr={metrics.psnr(a, b):.4f} ssim={metrics.ssim(a, b):.4f}")


@main.command("bench")
@click.argument("directory", type=click.Path(exists=True, file_okay=False,
                                             path_type=Path))
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False,
                                                  path_type=Path),
              default=None, help="Write the report here instead of stdout.")
@guarded
def bench(directory, csv_out):
    """Benchmark both pipelines over every PGM image in a directory."""
    rows = bench_mod.run(bench_mod.discover(directory))
    text = bench_mod.to_csv(rows)
    if csv_out is None:
        click.echo(text, nl=False)
    else:
        Path(csv_out).write_text(text)
        click.echo(f"wrote {len(rows)} rows to {csv_out}")


if __name__ == "__main__":
    main()
