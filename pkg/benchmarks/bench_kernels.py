"""Compare the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--samples N] [--repeat R]

Prints the best-of-R wall time per kernel and backend, the speedup, and the
largest absolute difference between the two backends' outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from wristarc._kernels import available_backends


def dcd_inputs(n: int, d: int = 49, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(np.hstack([rng.normal(size=(n, d - 1)), np.ones((n, 1))]))
    y = np.where(rng.normal(size=n) + X[:, 0] > 0, 1.0, -1.0)
    qii = np.einsum("ij,ij->i", X, X)
    order = rng.permutation(n).astype(np.int64)
    return X, y, qii, order


def run_dcd(backend, X, y, qii, order, epochs: int = 3):
    alpha = np.zeros(len(y))
    w = np.zeros(X.shape[1])
    for _ in range(epochs):
        backend.dcd_epoch(X, y, alpha, w, qii, order, 1.0)
    return w


def fusion_inputs(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    gyro = 0.3 * rng.normal(size=(n, 3))
    acc = np.array([0.0, 0.0, 9.81]) + 0.2 * rng.normal(size=(n, 3))
    mag = np.array([22.0, 0.0, -42.0]) + rng.normal(size=(n, 3))
    return gyro, acc, mag


def run_fusion(backend, gyro, acc, mag):
    return np.asarray(backend.fuse_quaternions(gyro, acc, mag, 0.01, 0.1, True,
                                               np.array([1.0, 0.0, 0.0, 0.0])))


def best_time(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=6000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend unavailable; timing the Python kernels only")
    dcd = dcd_inputs(args.samples)
    fus = fusion_inputs(args.samples)
    jobs = {
        "dcd_epoch x3": lambda b: run_dcd(b, *dcd),
        "fuse_quaternions": lambda b: run_fusion(b, *fus),
    }
    print(f"{'kernel':<18}{'backend':<9}{'seconds':>10}{'speedup':>9}{'max |diff|':>12}")
    for name, job in jobs.items():
        times, outs = {}, {}
        for label, mod in backends.items():
            times[label], outs[label] = best_time(lambda: job(mod), args.repeat)
        for label in backends:
            speed = times["python"] / times[label]
            diff = float(np.max(np.abs(outs[label] - outs["python"])))
            print(f"{name:<18}{label:<9}{times[label]:>10.4f}{speed:>8.1f}x{diff:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
