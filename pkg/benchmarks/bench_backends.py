#!/usr/bin/env python3
"""Benchmark the kernel backends: compiled extension vs pure fallback.

Measures the two hot paths through the public surface:

- scenario ticks/second (the full per-tick control + dynamics stack),
  on a lengthened waypoint course;
- depth grid kernels on VGA-sized maps (losses, resize, normalize,
  affine fit).

Runs itself once per backend via USVSIM_KERNELS and prints a table.
"""

import argparse
import dataclasses
import json
import os
import subprocess
import sys
import time


def bench_once(repeats: int) -> dict:
    import numpy as np

    from usvsim import backend_name, depth
    from usvsim.guidance import Mission, Waypoint
    from usvsim.harness.runner import run_scenario
    from usvsim.harness.scenarios import builtin_scenario

    scn = builtin_scenario("waypoint_square")
    loop = tuple(Waypoint(w.x_m, w.y_m, w.speed_mps, w.accept_radius_m)
                 for w in scn.mission.waypoints * 3)
    scn = dataclasses.replace(scn, duration_s=300.0,
                              mission=Mission(waypoints=loop))
    ticks = round(scn.duration_s / scn.dt_s)

    best_rate = 0.0
    for _ in range(repeats):
        t0 = time.perf_counter()
        run_scenario(scn)
        best_rate = max(best_rate, ticks / (time.perf_counter() - t0))

    rng = np.random.default_rng(0)
    a = rng.uniform(0.0, 2.0, (480, 640))
    b = rng.uniform(0.0, 2.0, (480, 640))
    mask = rng.random((480, 640)) < 0.5

    def rate(fn, n=repeats * 3):
        t0 = time.perf_counter()
        for _ in range(n):
            fn()
        return n / (time.perf_counter() - t0)

    grid = {
        "labeled_loss/s": rate(lambda: depth.labeled_loss(a, b)),
        "cutmix_loss/s": rate(lambda: depth.cutmix_loss(a, b, b, mask)),
        "resize_640->320/s": rate(lambda: depth._K.bilinear_resize(a, 240, 320)),
        "minmax_unit/s": rate(lambda: depth._K.minmax_unit(a)),
        "fit_affine/s": rate(lambda: depth.fit_affine(a, b)),
        "colorize/s": rate(lambda: depth.colorize(a)),
    }
    return {"backend": backend_name(), "sim_ticks_per_s": best_rate, **grid}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--_once", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args._once:
        print(json.dumps(bench_once(args.repeats)))
        return

    rows = []
    for backend in ("pure", "c"):
        env = dict(os.environ, USVSIM_KERNELS=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__),
             "--_once", "--repeats", str(args.repeats)],
            env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"{backend}: unavailable ({proc.stderr.strip().splitlines()[-1]})")
            continue
        rows.append(json.loads(proc.stdout.strip().splitlines()[-1]))

    if not rows:
        return
    keys = [k for k in rows[0] if k != "backend"]
    width = max(len(k) for k in keys) + 2
    header = " " * width + "".join(f"{r['backend']:>14}" for r in rows)
    print(header)
    for k in keys:
        line = f"{k:<{width}}" + "".join(f"{r[k]:>14,.0f}" for r in rows)
        if len(rows) == 2 and rows[0][k] > 0:
            line += f"   x{rows[1][k] / rows[0][k]:.2f}"
        print(line)


if __name__ == "__main__":
    main()
