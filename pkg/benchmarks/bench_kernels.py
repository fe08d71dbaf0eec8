"""Time the compiled kernels against the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Each row reports the
median of several repeats, in microseconds per call.
"""

import argparse
import timeit

import numpy as np

from powalloc import _pykernels

try:
    from powalloc import _ckernels
except ImportError:
    _ckernels = None


def cases(k):
    a = np.ascontiguousarray(np.linspace(2.0, 60.0, 10))
    nu = np.full(10, 19.0)
    xlo = np.full(10, np.log(1e-12))
    xhi = np.full(10, np.log1p(-1e-9))
    x = np.full(10, -1.0)
    z = np.linspace(-8, 8, 1000)
    return {
        "norm_cdf_array(1000)": lambda: k.norm_cdf_array(z),
        "chi2_ppf(0.025, 19)": lambda: k.chi2_ppf(0.025, 19.0),
        "chi2_isf(1e-10, 4)": lambda: k.chi2_isf(1e-10, 4.0),
        "f_cdf(1.7, 19)": lambda: k.f_cdf(1.7, 19.0),
        "f_ppf(0.95, 19)": lambda: k.f_ppf(0.95, 19.0),
        "kappa_derivs(19, -0.1)": lambda: k.kappa_derivs(19.0, -0.1),
        "path_point(M=10)": lambda: k.path_point(a, nu, 1.0, xlo, xhi, x),
    }


def bench(fun, repeat, number):
    return 1e6 * min(timeit.repeat(fun, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=200)
    args = ap.parse_args(argv)
    py = cases(_pykernels)
    cy = cases(_ckernels) if _ckernels is not None else {}
    print(f"{'kernel':<26}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for name, fun in py.items():
        t_py = bench(fun, args.repeat, max(1, args.number // 10))
        if name in cy:
            t_cy = bench(cy[name], args.repeat, args.number)
            print(f"{name:<26}{t_py:>12.2f}{t_cy:>12.2f}{t_py / t_cy:>10.1f}")
        else:
            print(f"{name:<26}{t_py:>12.2f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
