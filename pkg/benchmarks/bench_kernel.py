"""Time the compiled and pure-Python simulation loops on the bundled scenarios.

    python benchmarks/bench_kernel.py [--duration S] [--repeat N]
"""

import argparse
import time

from se2track import kernel
from se2track.scenario import load_scenario, shipped_scenarios
from se2track.simulate import run


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=2.0, help="simulated seconds per run")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = sorted(kernel.BACKENDS)
    print(f"{'scenario':16s} {'steps':>6s} " + " ".join(f"{b + ' [ms]':>14s}" for b in backends) + "   speedup")
    for name in shipped_scenarios():
        sc = load_scenario(name).with_overrides(duration=args.duration)
        times = {b: best_of(lambda: run(sc, b), args.repeat) for b in backends}
        cols = " ".join(f"{times[b] * 1e3:14.2f}" for b in backends)
        speed = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else "       -"
        print(f"{name:16s} {sc.nsteps:6d} {cols} {speed}")


if __name__ == "__main__":
    main()
