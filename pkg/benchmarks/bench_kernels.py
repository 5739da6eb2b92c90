"""Compare the compiled and pure-Python kernels on random inputs.

    python benchmarks/bench_kernels.py [--repeat 2000]
"""
import argparse
import timeit

import numpy as np

from szfdpc import _kernels_py

try:
    from szfdpc import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def cases(rng, n):
    x = rng.normal(0, 2, n)
    w = rng.uniform(0.1, 3.0, n)
    inv = rng.uniform(0.01, 10.0, n)
    return x, w, inv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)] + ([("cython", compiled)] if compiled else [])
    print(f"{'kernel':<14}{'n':>6}" + "".join(f"{name:>14}" for name, _ in backends)
          + ("     speedup" if compiled else ""))
    for n in (8, 64, 512):
        x, w, inv = cases(rng, n)
        for kernel, call in (("simplex_gamma", lambda m: m.simplex_gamma(x, w, 1.0)),
                             ("water_level", lambda m: m.water_level(inv, 5.0))):
            us = [timeit.timeit(lambda: call(mod), number=args.repeat) / args.repeat * 1e6
                  for _, mod in backends]
            line = f"{kernel:<14}{n:>6}" + "".join(f"{t:>11.2f} us" for t in us)
            if compiled:
                line += f"{us[0] / us[1]:>11.1f}x"
            print(line)
    if compiled is None:
        print("compiled extension not available; build with `pip install -e .`")


if __name__ == "__main__":
    main()
