"""What an attacker sees: quality metrics and wrong-key behavior.

Run: python3 demos/05_security_metrics.py
"""

import numpy as np

from _common import KEYS, demo_image, random_bits, rule
from rdhei import metrics, schemes
from rdhei.errors import RdheiError

image = demo_image("camera")

rule("ciphertext quality (lower is better hiding)")
print(f"{'carrier':>24}  {'psnr':>8}  {'ssim':>6}")
enc_b = schemes.vrbe_prepare(image, KEYS["e1"], KEYS["e2"]).image
print(f"{'vrbe encrypted':>24}  {metrics.psnr(image, enc_b):>7.2f}dB"
      f"  {metrics.ssim(image, enc_b):>6.3f}")
for zeta in (0.25, 0.5, 1.0, None):
    enc_a = schemes.vrae_encrypt(image, KEYS["m"], KEYS["p"], (8, 8), zeta)
    label = "none" if zeta is None else f"{zeta:.2f}"
    print(f"{f'vrae encrypted z={label}':>24}  "
          f"{metrics.psnr(image, enc_a):>7.2f}dB"
          f"  {metrics.ssim(image, enc_a):>6.3f}")

rule("correlation with the original")
flat = image.ravel().astype(float)
for label, carrier in (("vrbe", enc_b), ("vrae z=0.50",
                        schemes.vrae_encrypt(image, KEYS["m"], KEYS["p"],
                                             (8, 8), 0.5))):
    r = np.corrcoef(flat, carrier.ravel().astype(float))[0, 1]
    print(f"  {label}: pixel correlation {r:+.4f}")

rule("wrong keys fail loudly or uselessly")
res = schemes.vrbe_prepare(image, KEYS["e1"], KEYS["e2"])
payload = random_bits(100_000)
marked = schemes.vrbe_embed(res.image, payload, KEYS["e2"], KEYS["h"])
junk = schemes.vrbe_extract(marked, KEYS["e2"], KEYS["p"], payload.size)
print(f"  wrong hiding key: payload BER {np.mean(junk != payload):.3f}")
try:
    out = schemes.vrbe_recover(marked, KEYS["p"], KEYS["e2"])
    print(f"  wrong image key: {np.mean(out != image) * 100:.1f}% "
          "of pixels wrong")
except RdheiError as exc:
    print(f"  wrong image key: rejected ({exc})")
