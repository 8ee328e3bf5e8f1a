#!/usr/bin/env python3
"""Export the CIE 2006 2-degree LMS cone fundamentals (Stockman & Sharpe, energy
units, 1 nm) from colour-science into data/cone_fundamentals_cie2006_2deg.csv."""
import sys

import colour

cmfs = colour.MSDS_CMFS["Stockman & Sharpe 2 Degree Cone Fundamentals"]
with open(sys.argv[1], "w", encoding="utf-8") as f:
    f.write("# CIE 2006 2-degree LMS cone fundamentals (Stockman & Sharpe), linear energy, 1 nm\n")
    f.write("wavelength_nm,l,m,s\n")
    for wl, (l, m, s) in zip(cmfs.wavelengths, cmfs.values):
        f.write(f"{int(wl)},{l:.8g},{m:.8g},{s:.8g}\n")
