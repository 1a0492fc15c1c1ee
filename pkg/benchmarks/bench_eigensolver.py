"""Time the compiled eigen-kernel against the pure-Python one and LAPACK.

    python3 benchmarks/bench_eigensolver.py --sizes 50 100 200 400 --repeats 3

Each row reports the best wall time over the repeats and the largest
eigenvalue deviation from ``numpy.linalg.eigvalsh``.
"""
import argparse
import time

import numpy as np

from projlab import _eigkernel_py

try:
    from projlab._eigkernel import eigh_kernel as compiled_kernel
except ImportError:
    compiled_kernel = None


def best_time(fn, a, repeats):
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(a)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--python-max", type=int, default=400,
                        help="skip the pure-Python kernel above this order")
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    kernels = [("lapack", np.linalg.eigh)]
    if compiled_kernel is not None:
        kernels.append(("compiled", compiled_kernel))
    else:
        print("compiled kernel not built; install with a C compiler and Cython to include it")
    kernels.append(("python", _eigkernel_py.eigh_kernel))

    print(f"{'order':>6} {'kernel':>9} {'seconds':>10} {'max |dev|':>10} {'vs lapack':>10}")
    for n in args.sizes:
        g = rng.standard_normal((n, n))
        a = (g + g.T) / 2
        ref = np.linalg.eigvalsh(a)
        base = None
        for name, fn in kernels:
            if name == "python" and n > args.python_max:
                continue
            t, out = best_time(fn, a, args.repeats)
            values = np.sort(out[0])
            dev = float(np.max(np.abs(values - ref)))
            base = t if base is None else base
            print(f"{n:>6} {name:>9} {t:>10.4f} {dev:>10.1e} {t / base:>9.1f}x")


if __name__ == "__main__":
    main()
