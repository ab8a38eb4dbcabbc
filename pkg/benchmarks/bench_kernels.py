"""Time the numba kernels against their numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once on each path before timing, so numba compilation is
not counted.  Results from the two paths are compared as well.
"""
import argparse
import time

import numpy as np

from mercer_kit import _kernels


def _cases(rng):
    u = np.linspace(-40.0, 40.0, 20001)
    weights = rng.uniform(0.0, 1.0, 400)
    x = np.linspace(-8.0, 8.0, 4001)
    a = rng.standard_normal((64, 2000)) + 1j * rng.standard_normal((64, 2000))
    b = rng.standard_normal((64, 2000)) + 1j * rng.standard_normal((64, 2000))
    return {
        "meyer_table": lambda impl: impl.meyer_table(u, 0.5, 0.01, weights, 2),
        "hermite_table": lambda impl: impl.hermite_table(x, 32),
        "bilinear_kahan": lambda impl: impl.bilinear_kahan(a, b),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if _kernels.numba_impl is None:
        print("numba is not available; nothing to compare")
        return 1
    impls = {"numpy": _kernels.numpy_impl, "numba": _kernels.numba_impl}
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max diff':>12}")
    for name, run in _cases(np.random.default_rng(args.seed)).items():
        ref = np.asarray(run(impls["numpy"]))
        got = np.asarray(run(impls["numba"]))
        diff = float(np.abs(ref - got).max())
        t_np = best_of(lambda: run(impls["numpy"]), args.repeat)
        t_nb = best_of(lambda: run(impls["numba"]), args.repeat)
        print(f"{name:<16}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}{diff:>12.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
