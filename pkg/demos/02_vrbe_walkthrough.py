"""Vacate-before-encryption, one actor at a time.

The owner vacates room in the plain image and encrypts; the hider sees
only ciphertext yet can locate the room and fill it; two different
receivers pull the payload and the original image back out with
disjoint key subsets. Run: python3 demos/02_vrbe_walkthrough.py
"""

import numpy as np

from _common import KEYS, demo_image, random_bits, rule
from rdhei import metrics, schemes

image = demo_image("camera")

rule("owner: vacate + encrypt (keys e1, e2)")
res = schemes.vrbe_prepare(image, KEYS["e1"], KEYS["e2"])
print(f"threshold {res.threshold}, room {res.capacity} bits "
      f"({res.capacity / image.size:.3f} bpp)")
print(f"carrier vs original: psnr {metrics.psnr(image, res.image):.2f} dB, "
      f"ssim {metrics.ssim(image, res.image):.3f}")

rule("hider: embed at full capacity (keys e2, h)")
payload = random_bits(schemes.vrbe_capacity(res.image, KEYS["e2"]))
marked = schemes.vrbe_embed(res.image, payload, KEYS["e2"], KEYS["h"])
print(f"embedded {payload.size} bits")
print(f"marked vs original: psnr {metrics.psnr(image, marked):.2f} dB, "
      f"ssim {metrics.ssim(image, marked):.3f}")

rule("receiver A: extract only (keys e2, h)")
got = schemes.vrbe_extract(marked, KEYS["e2"], KEYS["h"], payload.size)
print("payload intact:", bool(np.array_equal(got, payload)))

rule("receiver B: recover only (keys e1, e2)")
recovered = schemes.vrbe_recover(marked, KEYS["e1"], KEYS["e2"])
print("image bit-identical:", bool(np.array_equal(recovered, image)))

rule("eavesdropper: wrong hiding key")
junk = schemes.vrbe_extract(marked, KEYS["e2"], KEYS["p"], payload.size)
print(f"bit error rate vs payload: {np.mean(junk != payload):.3f} "
      "(indistinguishable from coin flips)")
