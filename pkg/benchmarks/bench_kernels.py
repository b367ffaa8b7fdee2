"""Compare the numpy and compiled kernels on representative workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the median wall time per backend and checks that both agree.
"""

import argparse
import statistics
import time

import numpy as np

from bpbkit import kernels
from bpbkit.spaces import COMPLEX, SpaceDesc, SumSpaceDesc, gaussian, sample_block_sphere


def _time(fn, repeat):
    out, times = None, []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def workloads():
    rng = np.random.default_rng(0)
    dom = SumSpaceDesc(SpaceDesc(COMPLEX, 2.0, 2), 3)
    T = gaussian(rng, (3, 3, 2), COMPLEX)
    X0 = sample_block_sphere(dom, 1, 24).astype(complex)
    yield ("ascent l2^2 -> l1^3, 24 starts",
           lambda k: k.ascent(T, X0, 2.0, 1.0, 1, 3, kernels.OUTER_MAX, 2000, 1e-15),
           lambda a, b: float(np.abs(a[1] - b[1]).max()))
    dom4 = SumSpaceDesc(SpaceDesc(COMPLEX, 2.0, 2), 8)
    L = gaussian(rng, (8, 16, 2), COMPLEX)
    X1 = sample_block_sphere(dom4, 2, 64).astype(complex)
    yield ("ascent l_inf^8(l2^2) -> l1^8(l2^2), 64 starts",
           lambda k: k.ascent(L, X1, 2.0, 2.0, 8, 2, kernels.OUTER_SUM, 2000, 1e-15),
           lambda a, b: float(np.abs(a[1] - b[1]).max()))
    th = np.linspace(0, np.pi / 2, 40)
    xs = np.stack([np.cos(th), np.sin(th)], axis=1).astype(complex)
    ph = np.exp(1j * np.linspace(0, 2 * np.pi, 60, endpoint=False))
    ys = np.stack([np.cos(th)[:, None] * np.ones_like(ph), np.sin(th)[:, None] * ph], axis=-1).reshape(-1, 2)
    lams = np.exp(2j * np.pi * np.arange(128) / 128)
    yield ("C-modulus grid, complex l1^2",
           lambda k: k.c_modulus_grid(xs, ys, lams, 0.5, 1.0),
           lambda a, b: float(np.abs(a[0] - b[0]).max()))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    try:
        backends = {"python": kernels.backend("python"), "cython": kernels.backend("cython")}
    except ImportError:
        backends = {"python": kernels.backend("python")}
        print("compiled kernels not built; timing the numpy path only")
    print(f"{'workload':48s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for name, run, diff in workloads():
        res = {b: _time(lambda k=k: run(k), args.repeat) for b, k in backends.items()}
        tp = res["python"][0]
        if "cython" in res:
            tc = res["cython"][0]
            d = diff(res["python"][1], res["cython"][1])
            print(f"{name:48s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {d:9.1e}")
        else:
            print(f"{name:48s} {tp:11.4f}")


if __name__ == "__main__":
    main()
