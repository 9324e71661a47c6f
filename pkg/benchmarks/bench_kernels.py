"""Compare the compiled kernels with the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json results.json]

Each kernel is timed on random inputs for a few atom counts ``m`` (tables of
length ``2**m``); the best of ``--repeat`` runs is reported along with the
speed-up of the native backend.  Results of the two backends are also
compared, so a run doubles as a consistency check.
"""
from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from radoncone import kernels


def cases(rng):
    for m in (8, 12, 16, 20):
        v = rng.uniform(-1, 1, 1 << m)
        yield f"subset_zeta m={m}", lambda k, v=v: k.subset_zeta(v)
        yield f"subset_mobius m={m}", lambda k, v=v: k.subset_mobius(v)
    for m in (6, 9, 12):
        g1 = rng.uniform(-1, 1, 1 << m)
        g2 = rng.uniform(-1, 1, 1 << m)
        yield f"star_table m={m}", lambda k, a=g1, b=g2: k.star_table(a, b)
        yield f"star_value m={m}", lambda k, a=g1, b=g2, m=m: k.star_value(a, b, (1 << m) - 1)
    for m in (10, 100, 1000):
        w = rng.uniform(0.1, 10, m)
        yield f"elementary_symmetric m={m} n=5", lambda k, w=w: k.elementary_symmetric(w, 5)


def best_time(fn, repeat: int) -> float:
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 1 << 16:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the results to this file")
    args = ap.parse_args(argv)
    if "native" not in kernels.available_backends():
        print("native kernels are not built; only the fallback is available", file=sys.stderr)
        return 1
    native, python = kernels.get_backend("native"), kernels.get_backend("python")
    rows = []
    print(f"{'kernel':34s} {'python':>12s} {'native':>12s} {'speed-up':>9s}  max|diff|")
    for name, fn in cases(np.random.default_rng(0)):
        diff = float(np.max(np.abs(np.asarray(fn(native), dtype=float) - np.asarray(fn(python), dtype=float))))
        tp = best_time(lambda: fn(python), args.repeat)
        tn = best_time(lambda: fn(native), args.repeat)
        rows.append({"kernel": name, "python_s": tp, "native_s": tn, "speedup": tp / tn, "max_abs_diff": diff})
        print(f"{name:34s} {tp * 1e3:10.3f}ms {tn * 1e3:10.3f}ms {tp / tn:8.1f}x  {diff:.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
