"""Time the compiled and pure-Python integration kernels on a preset.

Usage: python benchmarks/bench_kernels.py [--scenario example1] [--repeat 3]
"""

import argparse
import time

import numpy as np

from etrc import _backend, pipeline
from etrc.scenario import load_scenario


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", default="example1")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--horizon", type=float, default=None)
    args = parser.parse_args()

    d = pipeline.design(load_scenario(args.scenario))
    steps = int(round((args.horizon or d.cfg.sim.horizon) / d.cfg.sim.dt))
    print(f"scenario {args.scenario}: {steps} RK4 steps per run")
    print(f"{'kind':<10} {'backend':<8} {'seconds':>9} {'steps/s':>12} {'speedup':>8}")
    for kind in ("periodic", "static", "dynamic"):
        results = {}
        for name in _backend.AVAILABLE[::-1]:
            t, trace = best_time(lambda: pipeline.run(d, kind, horizon=args.horizon,
                                                      backend=name), args.repeat)
            results[name] = (t, trace)
        base = results["python"][0]
        for name, (t, _) in results.items():
            print(f"{kind:<10} {name:<8} {t:>9.4f} {steps / t:>12.0f} {base / t:>7.1f}x")
        if len(results) == 2:
            same = all(np.array_equal(getattr(results["python"][1], f),
                                      getattr(results["cython"][1], f), equal_nan=True)
                       for f in ("states", "inputs", "eta", "flags"))
            print(f"{'':<10} traces bitwise identical: {same}")


if __name__ == "__main__":
    main()
