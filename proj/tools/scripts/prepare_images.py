#!/usr/bin/env python3
"""Center-crop and resize the freely licensed scikit-image samples to 512x512 PNGs."""
import sys
from pathlib import Path

import numpy as np
import skimage.data
from PIL import Image

# astronaut: public domain (NASA); coffee: CC0; rocket: public domain (SpaceX)
NAMES = ["astronaut", "coffee", "rocket"]

out = Path(sys.argv[1])
out.mkdir(parents=True, exist_ok=True)
for name in NAMES:
    img = getattr(skimage.data, name)()
    h, w = img.shape[:2]
    side = min(h, w)
    y0, x0 = (h - side) // 2, (w - side) // 2
    crop = Image.fromarray(np.ascontiguousarray(img[y0:y0 + side, x0:x0 + side, :3]))
    if side != 512:
        crop = crop.resize((512, 512), Image.LANCZOS)
    crop.save(out / f"{name}.png", optimize=False)
