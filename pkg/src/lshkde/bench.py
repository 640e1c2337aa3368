"""Timing harness for build / update / query / rebuild scaling."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .datasets import make_dataset
from .estimator import DynamicKernelDensity


@dataclass
class BenchRow:
    n: int
    build_s: float
    update_s: float
    query_s: float
    rebuild_s: float
    candidates_examined: int


def _median_time(fn, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


def run_bench(sizes, est_params: dict, d: int = 8, seed: int = 0,
              repeats: int = 11, dataset: str = "gaussian_cluster"):
    """Median-of-``repeats`` wall times per dataset size.

    ``candidates_examined`` is taken from the timed query's report, so work
    units are visible alongside wall clock.  Deterministic in ``seed``
    except for the timings themselves.
    """
    rows = []
    for n in sizes:
        n = int(n)
        X = make_dataset(dataset, n, d, seed=seed)
        params = dict(est_params, seed=seed)

        build_s = _median_time(
            lambda: DynamicKernelDensity(**params).fit(X), repeats)
        est = DynamicKernelDensity(**params).fit(X)

        rng = np.random.default_rng(seed + 1)
        q = X[rng.integers(n)] + rng.normal(size=d) * 0.5

        def one_update():
            i = int(rng.integers(n))
            est.update(est.X_[i] + rng.normal(size=d) * 0.01, i)

        update_s = _median_time(one_update, repeats)
        query_s = _median_time(lambda: est.query(q), repeats)
        candidates = est.query(q).candidates_examined
        rebuild_s = _median_time(
            lambda: DynamicKernelDensity(**params).fit(est.X_), repeats)

        rows.append(BenchRow(n=n, build_s=build_s, update_s=update_s,
                             query_s=query_s, rebuild_s=rebuild_s,
                             candidates_examined=candidates))
    return rows


def write_bench_csv(rows, path):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "build_s", "update_s", "query_s", "rebuild_s",
                         "candidates_examined"])
        for r in rows:
            writer.writerow([r.n, repr(r.build_s), repr(r.update_s),
                             repr(r.query_s), repr(r.rebuild_s),
                             r.candidates_examined])
