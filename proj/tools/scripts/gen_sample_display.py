#!/usr/bin/env python3
"""Generate the bundled OLED-like spectrometer sample (data/display_oled_sample.csv).

Each primary is a two-lobe Gaussian emission profile, normalized per channel to a
peak of one, with a small seeded measurement noise floor. Output: 301 rows, 400..700 nm.
"""
import argparse

import numpy as np

PRIMARIES = {
    "r": [(0.90, 622.0, 11.0), (0.25, 640.0, 18.0)],
    "g": [(1.00, 528.0, 14.0), (0.20, 555.0, 22.0)],
    "b": [(1.00, 458.0, 9.0), (0.30, 475.0, 15.0)],
}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("out")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--noise", type=float, default=0.002)
    args = parser.parse_args()

    wl = np.arange(400, 701, dtype=np.float64)
    rng = np.random.default_rng(args.seed)
    cols = {}
    for name, comps in PRIMARIES.items():
        s = np.zeros_like(wl)
        for w, mu, sigma in comps:
            s += w * np.exp(-((wl - mu) ** 2) / (2.0 * sigma**2))
        s /= s.max()
        s += args.noise * rng.standard_normal(wl.shape)
        cols[name] = np.clip(s, 0.0, 1.0)

    assert len(wl) == 301 and wl[0] == 400 and wl[-1] == 700
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("# OLED-like sample display, relative intensity normalized per channel\n")
        f.write("wavelength_nm,r,g,b\n")
        for i, w in enumerate(wl):
            f.write(f"{int(w)},{cols['r'][i]:.6f},{cols['g'][i]:.6f},{cols['b'][i]:.6f}\n")


if __name__ == "__main__":
    main()
