"""Range coder vs canonical Huffman as the room-generation backend.

Same prediction errors, two entropy coders. The range coder tracks the
histogram's true entropy; Huffman pays the integer-length penalty but
owns a far smaller model header and decodes with a flat table.

Run: python3 demos/04_coder_showdown.py
"""

import time

from _common import demo_image, rule
from rdhei import RoomParams, room

for name in ("camera", "moon", "grass"):
    image = demo_image(name)
    rule(name)
    print(f"{'backend':>8}  {'T':>3}  {'stream bits':>11}  "
          f"{'room bits':>9}  {'bpp':>6}  {'vacate':>7}")
    for backend in ("arith", "huffman"):
        t0 = time.perf_counter()
        res = room.vacate(image, RoomParams(backend=backend))
        dt = time.perf_counter() - t0
        print(f"{backend:>8}  {res.threshold:>3}  {res.coded_len:>11}  "
              f"{res.capacity:>9}  {res.capacity / image.size:>6.3f}  "
              f"{dt:>6.2f}s")
