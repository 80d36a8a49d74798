"""Wall-clock comparison of the compiled and numpy kernel-sum backends.

Run with ``python benchmarks/bench_backends.py``; prints a CSV table.
"""
import argparse
import logging
import sys
import time

import numpy as np

from sphvqi import _backend
from sphvqi.point_sets import fibonacci_points
from sphvqi.test_fields import field1
from sphvqi.zonal_kernels import kernel_for_order

log = logging.getLogger("bench")


def time_once(backend, kernel, X, nodes, F, w, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        backend.kernel_sum(kernel, X, nodes, F, w)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-list", default="1000,4000,16000")
    ap.add_argument("--eval-size", type=int, default=2000)
    ap.add_argument("--family", default="we32")
    ap.add_argument("--order", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    names = _backend.available()
    if "cython" not in names:
        log.warning("compiled core not built, timing numpy only")
    X = fibonacci_points(args.eval_size).nodes
    print("N,M,backend,seconds,pairs_per_second,max_abs_diff")
    for N in (int(v) for v in args.n_list.split(",")):
        P = fibonacci_points(N)
        F = field1(P.nodes).f
        w = P.quadrature_weights()
        k = kernel_for_order(args.family, 0.75 * N ** -0.25, args.order)
        ref = None
        for name in names:
            be = _backend.get(name)
            t = time_once(be, k, X, P.nodes, F, w, args.repeats)
            d, c, _ = be.kernel_sum(k, X, P.nodes, F, w)
            diff = 0.0 if ref is None else max(np.abs(d - ref[0]).max(), np.abs(c - ref[1]).max())
            ref = ref or (d, c)
            print(f"{N},{len(X)},{name},{t:.4g},{N * len(X) / t:.4g},{diff:.3g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
