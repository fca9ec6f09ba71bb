"""Vacate-after-encryption: hiding data in an image you cannot read.

The owner encrypts with block modulation plus block permutation, chosen
so that blocks stay internally correlated. The hider then runs the same
room generation on the ciphertext. The scale factor zeta trades
encryption noise against capacity; the block size trades reference
overhead against prediction quality.

Run: python3 demos/03_vrae_walkthrough.py
"""

import numpy as np

from _common import KEYS, demo_image, random_bits, rule
from rdhei import BlockGrid, metrics, schemes
from rdhei.crypto import modulation_shifts

image = demo_image("camera")
block, zeta = (8, 8), 0.5

rule(f"owner: encrypt (n={block[0]}x{block[1]}, zeta={zeta})")
grid = BlockGrid(image.shape, *block)
shifts = modulation_shifts(image, KEYS["m"], zeta, grid)
enc = schemes.vrae_encrypt(image, KEYS["m"], KEYS["p"], block, zeta)
print(f"abnormal pixels (minority wraps): "
      f"{metrics.abnormal_count(image, shifts, grid)} of {image.size}")
print(f"encrypted vs original: psnr {metrics.psnr(image, enc):.2f} dB, "
      f"ssim {metrics.ssim(image, enc):.3f}")

rule("hider: vacate the ciphertext and embed (key h)")
cap = schemes.vrae_embed(enc, np.zeros(0, np.uint8), KEYS["h"], block).capacity
payload = random_bits(cap)
res = schemes.vrae_embed(enc, payload, KEYS["h"], block)
print(f"threshold {res.threshold}, room {cap} bits "
      f"({cap / image.size:.3f} bpp)")
print(f"marked vs original: psnr {metrics.psnr(image, res.image):.2f} dB")

rule("receiver A: extract with key h and the grid geometry")
got = schemes.vrae_extract(res.image, KEYS["h"], block, n_bits=payload.size)
print("payload intact:", bool(np.array_equal(got, payload)))

rule("receiver B: recover with keys m, p")
recovered = schemes.vrae_recover(res.image, KEYS["m"], KEYS["p"], block, zeta)
print("image bit-identical:", bool(np.array_equal(recovered, image)))

rule("capacity across configurations")
print(f"{'config':>18}  rate")
for b in ((4, 4), (8, 8)):
    for z in (0.0, 0.5, 1.0, None):
        e = schemes.vrae_encrypt(image, KEYS["m"], KEYS["p"], b, z)
        c = schemes.vrae_embed(e, np.zeros(0, np.uint8), KEYS["h"], b).capacity
        label = "none" if z is None else f"{z:.2f}"
        print(f"  {b[0]}x{b[1]}, zeta={label:>4}  {c / image.size:.3f} bpp")
