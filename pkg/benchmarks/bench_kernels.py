"""Compare the numba and numpy kernel backends on the two hot loops.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is timed on
both backends (numba after a warm-up call so compilation is excluded), and
the results are checked against each other.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from multispin_sg import csl, kernels
from multispin_sg.materials import NAPHTHALENE
from multispin_sg.params import derive_from_values
from multispin_sg.trajectories import ProtocolTimes


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_lambda(rows: int, nodes: int, repeat: int):
    rng = np.random.default_rng(0)
    deltas = rng.integers(-40, 41, size=(rows, 3)).astype(float)
    U = rng.normal(size=(3, nodes))
    w = rng.uniform(0.0, 1e-4, size=nodes)
    a = 0.3
    kernels.lambda_batch(deltas[:2], U, w, a, backend="numba")  # compile
    t_np, r_np = _best(lambda: kernels.lambda_batch(deltas, U, w, a, backend="numpy"), repeat)
    t_nb, r_nb = _best(lambda: kernels.lambda_batch(deltas, U, w, a, backend="numba"), repeat)
    err = float(np.max(np.abs(r_np - r_nb) / np.maximum(np.abs(r_np), 1e-300)))
    return t_np, t_nb, err


def bench_direct(N: int, repeat: int):
    d = derive_from_values(44e-9, 1e4, NAPHTHALENE)
    times = ProtocolTimes("modified", 1.1 / d.Omega, 0.4 / d.Omega, 0.7 / d.Omega)
    run = lambda b: csl.modified_M_ratio(N, times, d, csl.GRW, mode="physical", n_bar=0.5,  # noqa: E731
                                         backend=b).ratio
    run("numba")  # compile
    t_np, r_np = _best(lambda: run("numpy"), repeat)
    t_nb, r_nb = _best(lambda: run("numba"), repeat)
    return t_np, t_nb, abs(r_np - r_nb)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=20000)
    p.add_argument("--nodes", type=int, default=2048)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--repeat", type=int, default=3)
    a = p.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba unavailable; only the numpy backend can run")
        return 1
    print(f"{'kernel':<28}{'numpy [s]':>12}{'numba [s]':>12}{'speed-up':>10}{'max diff':>12}")
    t_np, t_nb, err = bench_lambda(a.rows, a.nodes, a.repeat)
    print(f"{f'lambda_batch {a.rows}x{a.nodes}':<28}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{err:>12.2e}")
    t_np, t_nb, err = bench_direct(a.N, a.repeat)
    print(f"{f'six-index sum N={a.N}':<28}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{err:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
