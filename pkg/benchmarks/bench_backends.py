"""Times the compiled kernels against the pure-Python fallback.

Backend selection happens at import, so each measurement runs in a child
process: one with SANDTABLE_PURE=1, one without.

    python3 benchmarks/bench_backends.py [--steps 2000] [--frames 200]
"""

import argparse
import json
import os
import subprocess
import sys
import time
from pathlib import Path

SRC = str(Path(__file__).resolve().parent.parent / "src")


def measure(steps: int, frames: int) -> dict:
    import numpy as np

    from sandtable.backend import BACKEND
    from sandtable.env import Env, EnvConfig
    from sandtable.raster import rasterize
    from sandtable.worldgen import Task, make_puzzles

    puzzle = make_puzzles(Task.TOOL_USE, 0, 1)[0]  # busiest world shape
    env = Env(EnvConfig.for_task(Task.TOOL_USE))
    env.reset(puzzle=puzzle)
    rng = np.random.default_rng(0)
    actions = rng.integers(0, 8, steps)

    t0 = time.perf_counter()
    for a in actions:
        res = env.step(int(a))
        if res.done:
            env.reset(puzzle=puzzle)
    dt_step = time.perf_counter() - t0

    t0 = time.perf_counter()
    for _ in range(frames):
        rasterize(env.world, 84)
    dt_raster = time.perf_counter() - t0

    return {
        "backend": BACKEND,
        "macro_steps_per_s": steps / dt_step,
        "frames_per_s": frames / dt_raster,
    }


def run_child(pure: bool, steps: int, frames: int) -> dict:
    env = dict(os.environ, PYTHONPATH=SRC)
    if pure:
        env["SANDTABLE_PURE"] = "1"
    else:
        env.pop("SANDTABLE_PURE", None)
    out = subprocess.run(
        [sys.executable, __file__, "--worker", "--steps", str(steps),
         "--frames", str(frames)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--worker", action="store_true")
    args = ap.parse_args()

    if args.worker:
        print(json.dumps(measure(args.steps, args.frames)))
        return 0

    rows = [run_child(False, args.steps, args.frames),
            run_child(True, args.steps, args.frames)]
    if rows[0]["backend"] != "speed":
        print("warning: compiled extension unavailable; both rows are pure")
    print("%-8s %18s %14s" % ("backend", "macro-steps/s", "frames/s"))
    for r in rows:
        print("%-8s %18.0f %14.0f"
              % (r["backend"], r["macro_steps_per_s"], r["frames_per_s"]))
    if rows[0]["backend"] == "speed":
        print("speedup: %.1fx stepping, %.1fx raster"
              % (rows[0]["macro_steps_per_s"] / rows[1]["macro_steps_per_s"],
                 rows[0]["frames_per_s"] / rows[1]["frames_per_s"]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
