"""Time the compiled hex core against the pure-Python fallback.

    python benchmarks/bench_hexcore.py --size 128 --repeat 20
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ecsflow import _backend, _hexcore_py


def _time(fn, frames, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for f in frames:
            fn(f)
        best = min(best, time.perf_counter() - t0)
    return best / len(frames)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=96, help="lattice side length")
    ap.add_argument("--frames", type=int, default=20)
    ap.add_argument("--density", type=float, default=0.3)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    frames = [rng.random((args.size, args.size)) < args.density for _ in range(args.frames)]
    cores = {"python": _hexcore_py}
    if _backend.BACKEND == "cython":
        from ecsflow import _hexcore

        cores["cython"] = _hexcore
    else:
        print("compiled core not built; timing the fallback only")

    for name, mod in cores.items():
        for f in frames[:3]:
            assert mod.count_both(f) == _hexcore_py.count_both(f)
    print(f"{args.size}x{args.size} lattices, density {args.density}, {args.frames} frames (best of {args.repeat})")
    print(f"{'core':<8}{'op':<12}{'ms/frame':>12}")
    results = {}
    for name, mod in cores.items():
        for op in ("dilate_step", "count_both"):
            ms = 1e3 * _time(getattr(mod, op), frames, args.repeat)
            results[name, op] = ms
            print(f"{name:<8}{op:<12}{ms:>12.3f}")
    if "cython" in cores:
        for op in ("dilate_step", "count_both"):
            print(f"speedup {op}: {results['python', op] / results['cython', op]:.1f}x")
    return results


if __name__ == "__main__":
    main()
