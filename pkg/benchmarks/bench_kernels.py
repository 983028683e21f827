"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeats 3] [--quick]

Cases mirror the solver's hot paths: the banded LU of the 1D (tridiagonal)
and 2D (bandwidth N_x - 1) truth systems, the band matvec used by the RB
offline stage, and the small dense LU of the online stage.  Both variants are
compiled/warmed up before timing; the reported figure is the best of
``--repeats`` runs.
"""

import argparse
import time

import numpy as np

from rbpb import _kernels
from rbpb._accel import HAVE_NUMBA


def _band_system(n, bw, seed=0):
    rng = np.random.default_rng(seed)
    bands = rng.standard_normal((2 * bw + 1, n))
    bands[bw] += 4.0 * bw
    return bands, rng.standard_normal(n)


def _time(fn, repeats):
    fn()  # warm-up (JIT compile on first call)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(quick):
    nx2 = 60 if quick else 200
    yield "band LU factor+solve, 1D n=9999 bw=1", "lu", (9999, 1)
    yield f"band LU factor+solve, 2D n={(nx2 - 1) * (nx2 + 1)} bw={nx2 - 1}", "lu", ((nx2 - 1) * (nx2 + 1), nx2 - 1)
    yield f"band matvec, 2D n={(nx2 - 1) * (nx2 + 1)} bw={nx2 - 1} (5 diagonals)", "mv", ((nx2 - 1) * (nx2 + 1), nx2 - 1)
    yield "dense LU factor+solve, 20x20 (x1000)", "dense", (20, 1000)


def run(repeats, quick):
    rows = []
    for label, kind, shape in cases(quick):
        times = {}
        for name, k in _kernels.VARIANTS.items():
            if kind == "lu":
                n, bw = shape
                bands, b = _band_system(n, bw)

                def fn(k=k, bands=bands, b=b, bw=bw, n=n):
                    lu = _kernels.pack_band_work(bands, bw, bw)
                    piv = np.zeros(n, dtype=np.int64)
                    k["band_lu_factor"](lu, bw, bw, piv, 0.0)
                    k["band_lu_solve"](lu, bw, bw, piv, b)

            elif kind == "mv":
                n, bw = shape
                bands, x = _band_system(n, bw)
                rows_active = np.array([0, bw - 1, bw, bw + 1, 2 * bw])

                def fn(k=k, bands=bands, x=x, bw=bw, r=rows_active):
                    for _ in range(20):
                        k["band_matvec"](bands, bw, bw, x, r)

            else:
                m, reps = shape
                rng = np.random.default_rng(1)
                a = rng.standard_normal((m, m)) + m * np.eye(m)
                b = rng.standard_normal(m)

                def fn(k=k, a=a, b=b, m=m, reps=reps):
                    for _ in range(reps):
                        w = a.copy()
                        piv = np.zeros(m, dtype=np.int64)
                        k["dense_lu_factor"](w, piv, 0.0)
                        k["dense_lu_solve"](w, piv, b)

            times[name] = _time(fn, repeats)
        rows.append((label, times["numba"], times["numpy"]))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller 2D case")
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; the 'numba' column runs the same Python code")
    print(f"{'case':62s} {'numba [s]':>10s} {'numpy [s]':>10s} {'ratio':>7s}")
    for label, tn, tp in run(args.repeats, args.quick):
        print(f"{label:62s} {tn:10.4f} {tp:10.4f} {tp / tn:7.1f}")


if __name__ == "__main__":
    main()
