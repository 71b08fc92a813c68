"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Reports the median wall time per call for the two split-search and
Laplace-mode kernels, and for the end-to-end fits built on them, and
checks that both backends return the same numbers.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from childtalk import kernels
from childtalk.mixedfx import CLMMObjective
from childtalk.models import GBMParams, gbm_fit


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return float(np.median(times))


def split_case(rng, n=2000, p=61):
    X = np.round(rng.normal(size=(n, p)), 2)
    resid = rng.normal(size=n)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))
    node_of = rng.integers(0, 4, n).astype(np.int64)
    sums = np.bincount(node_of, resid, 4)
    cnts = np.bincount(node_of, minlength=4).astype(float)
    perm = rng.permutation(p).astype(np.int64)
    return (X, order, resid, node_of, 4, perm, sums, cnts)


def laplace_case(rng, n_groups=300, per=40, R=10):
    group = np.repeat(np.arange(n_groups), per).astype(np.int64)
    eta = rng.normal(size=group.size)
    y = rng.integers(0, R, group.size).astype(np.int64)
    theta = np.concatenate([[-np.inf], np.linspace(-3, 3, R - 1), [np.inf]])
    return (y, eta, theta, group, n_groups, 0.5, np.zeros(n_groups))


def clmm_case(rng, n_groups=90, per=30, p=12, R=10):
    X = rng.normal(size=(n_groups * per, p))
    g = np.repeat(np.arange(n_groups), per)
    u = rng.normal(0, 0.6, n_groups)[g]
    lat = X @ rng.normal(0, 0.5, p) + u + rng.logistic(size=len(g))
    y = 1 + np.searchsorted(np.linspace(-4, 4, R - 1), lat)
    return X, y, g


def _cold_eval(obj):
    obj.u = np.zeros(obj.G)
    return obj.value_and_grad(obj.start())[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    backends = kernels.available()
    if "compiled" not in backends:
        print("compiled kernels not built; only the numpy fallback is timed")

    cases = {
        "best_splits (2000x61, 4 nodes)": ("best_splits", split_case(rng)),
        "laplace_mode (300 groups x 40)": ("laplace_mode", laplace_case(rng)),
    }
    Xg = rng.normal(size=(240, 61))
    yg = Xg[:, 0] ** 2 + np.sin(3 * Xg[:, 1]) + rng.normal(0, 0.1, 240)
    Xc, yc, gc = clmm_case(rng)

    print(f"{'case':42s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    rows = []
    for label, (name, case) in cases.items():
        outs, ts = {}, {}
        for b in backends:
            fn = getattr(kernels.get(b), name)
            outs[b] = fn(*case)
            ts[b] = _median_time(lambda: fn(*case), args.repeat)
        rows.append((label, ts, outs))
    for label, make in (
        ("gbm_fit (240x61, 500 trees)",
         lambda b: lambda: gbm_fit(Xg, yg, GBMParams(), backend=b).stage_losses[-1]),
        ("CLMM value+grad, cold modes (2700 obs)",
         lambda b: (lambda obj: lambda: _cold_eval(obj))(CLMMObjective(Xc, yc, gc, backend=b))),
    ):
        outs, ts = {}, {}
        for b in backends:
            fn = make(b)
            outs[b] = fn()
            ts[b] = _median_time(fn, max(1, args.repeat // 2) if "gbm" in label else args.repeat)
        rows.append((label, ts, outs))

    for label, ts, outs in rows:
        line = f"{label:42s}" + "".join(f"{ts[b] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            line += f"{ts['python'] / ts['compiled']:10.1f}x"
            a, c = outs["python"], outs["compiled"]
            a = a if isinstance(a, tuple) else (a,)
            c = c if isinstance(c, tuple) else (c,)
            diff = max(float(np.max(np.abs(np.asarray(x, float) - np.asarray(y, float))))
                       for x, y in zip(a, c))
            line += f"   max|diff| {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
