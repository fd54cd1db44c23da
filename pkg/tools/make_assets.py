#!/usr/bin/env python3
"""Regenerate the shipped data assets (gradient table, golden images).

Deterministic: running this twice produces identical bytes. The golden
colorized ramp is produced by the library itself and frozen; the
acceptance suite compares against the committed copy byte-for-byte.
"""

import sys
from pathlib import Path

import numpy as np

SRC = Path(__file__).resolve().parent.parent / "src"
sys.path.insert(0, str(SRC))

DATA = SRC / "usvsim" / "data"

# warm (near) -> cool (far): red, yellow, cyan, blue anchor colors
ANCHORS = [(255, 0, 0), (255, 255, 0), (0, 255, 255), (0, 0, 255)]


def gradient_rows():
    stops = np.linspace(0, 255, len(ANCHORS))
    rows = []
    for i in range(256):
        seg = min(int(np.searchsorted(stops, i, side="right")), len(stops) - 1)
        a, b = ANCHORS[seg - 1], ANCHORS[seg]
        t = (i - stops[seg - 1]) / (stops[seg] - stops[seg - 1])
        rows.append(tuple(int(np.floor(a[c] + (b[c] - a[c]) * t + 0.5))
                          for c in range(3)))
    return rows


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "golden").mkdir(exist_ok=True)

    table = DATA / "warm_cool_256.csv"
    lines = ["# warm(near) -> cool(far) gradient, 256 x r,g,b"]
    lines += [f"{r},{g},{b}" for r, g, b in gradient_rows()]
    table.write_text("\n".join(lines) + "\n")
    print(f"wrote {table}")

    from usvsim import depth

    # 16 x 64 left-to-right ramp spanning the full range
    ramp = np.tile(np.linspace(0.0, 1.0, 64), (16, 1))
    ramp_pgm = DATA / "golden" / "ramp16.pgm"
    depth.write_pgm16(ramp_pgm, ramp)
    print(f"wrote {ramp_pgm}")

    rgb = depth.colorize(depth.read_pgm16(ramp_pgm))
    golden = DATA / "golden" / "ramp_colorized.ppm"
    depth.write_ppm(golden, rgb)
    print(f"wrote {golden}")
    print("near pixel:", rgb[0, 0], "far pixel:", rgb[0, -1])


if __name__ == "__main__":
    main()
