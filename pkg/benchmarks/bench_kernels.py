"""Numba versus pure-numpy timings for the hot kernels.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs with BESOVCH_NUMBA=1 and BESOVCH_NUMBA=0 (the flag is read
at call time).  The numba path is warmed up first so compile time is not
counted.  Results are checked to agree before timing.
"""
import argparse
import os
import time

import numpy as np

from besovch.kernels import cexp_sum, max_abs_re_prod, peakon_rhs, peakon_sum
from besovch.littlewood_paley import band_sup


def _cases(rng):
    p = rng.normal(size=64)
    q = np.sort(rng.uniform(-20, 20, size=64))
    x = np.linspace(-32, 32, 1 << 14, endpoint=False)
    coef = rng.normal(size=512) + 1j * rng.normal(size=512)
    idx = rng.integers(0, 1 << 20, size=4096)
    g = rng.normal(size=1 << 20) + 1j * rng.normal(size=1 << 20)
    c = np.exp(2j * np.pi * rng.uniform(size=1 << 20))
    n = 1 << 16
    lo, hi = 1000, 3000
    seg = (rng.normal(size=hi - lo) + 1j * rng.normal(size=hi - lo)) * np.hanning(hi - lo)
    return {
        "peakon_rhs(k=64)": lambda: peakon_rhs(p, q),
        "peakon_sum(k=64, n=2^14)": lambda: peakon_sum(p, q, x, 64.0),
        "cexp_sum(512 x 4096)": lambda: cexp_sum(coef, 12345, 1 << 20, idx),
        "max_abs_re_prod(2^20)": lambda: max_abs_re_prod(g, c),
        "band_sup(2000 modes, n=2^16)": lambda: band_sup(seg, lo, hi, n),
    }


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _flat(v):
    if isinstance(v, tuple):
        return np.concatenate([np.ravel(a) for a in v])
    return np.ravel(np.asarray(v))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':32s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}")
    saved = os.environ.get("BESOVCH_NUMBA")
    try:
        for name, fn in cases.items():
            os.environ["BESOVCH_NUMBA"] = "1"
            a = fn()  # compile
            t_nb = _time(fn, args.repeat)
            os.environ["BESOVCH_NUMBA"] = "0"
            b = fn()
            t_np = _time(fn, args.repeat)
            fa, fb = _flat(a), _flat(b)
            err = np.max(np.abs(fa - fb)) / max(np.max(np.abs(fb)), 1e-300)
            if err > 1e-9:
                raise SystemExit(f"{name}: numba and numpy disagree (rel {err:.2e})")
            print(f"{name:32s} {1e3 * t_nb:11.3f} {1e3 * t_np:11.3f} {t_np / t_nb:8.1f}")
    finally:
        if saved is None:
            os.environ.pop("BESOVCH_NUMBA", None)
        else:
            os.environ["BESOVCH_NUMBA"] = saved


if __name__ == "__main__":
    main()
