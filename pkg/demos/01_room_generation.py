"""How an image's own redundancy becomes embedding room.

Walks the three stages on one photo: predict every non-reference pixel,
classify the prediction errors against the capacity-optimal threshold,
and self-embed the entropy-coded description so that everything behind
it is free space. Run: python3 demos/01_room_generation.py
"""

import numpy as np

from _common import demo_image, rule
from rdhei import RoomParams, room
from rdhei.coder import classify_errors, model_from_histogram
from rdhei.predictor import error_histogram, predict_image

image = demo_image("camera")
params = RoomParams(backend="arith", block=None)

rule("prediction")
lay = room.layout_for(image.shape, params)
errors, _ = predict_image(image, lay.grid, lay.refs)
hist = error_histogram(errors)
print(f"image {image.shape[0]}x{image.shape[1]}, "
      f"{lay.cursor.n_pixels} predicted pixels, "
      f"{lay.grid.n_blocks} reference pixel(s)")
print(f"errors: mean |e| = {np.abs(errors).mean():.2f}, "
      f"within [-8, 8): {np.mean(np.abs(errors + 0.5) < 8.5) * 100:.1f}%")

rule("threshold choice")
res = room.vacate(image, params)
model = model_from_histogram(hist, res.threshold)
symbols = classify_errors(errors, res.threshold)
joint = int((symbols == model.n_symbols - 1).sum())
print(f"optimal threshold T = {res.threshold}")
print(f"independent pixels (|e| < T-ish, entropy coded): "
      f"{symbols.size - joint}")
print(f"joint pixels (outliers, stored as 8-bit literals): {joint}")

rule("self-embedded layout")
total = lay.cursor.capacity
print(f"bit budget        {total:>9} (8 bits x {lay.cursor.n_pixels} pixels)")
print(f"length field      {res.header_bits:>9}")
print(f"coded description {res.coded_len:>9}")
print(f"free room         {res.capacity:>9}  "
      f"= {res.capacity / image.size:.3f} bpp")
assert res.header_bits + res.coded_len + res.capacity == total

rule("round trip")
restored = room.restore(res.image, params)
print("restore(vacate(image)) == image:",
      bool(np.array_equal(restored, image)))
