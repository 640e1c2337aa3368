"""Ground truth and statistical verification.

``exact_kde`` is the brute-force oracle every estimate is judged against;
it sums with ``math.fsum`` so the result is the correctly rounded sum and
therefore permutation invariant to the last bit.

The ``run_*`` functions are Monte Carlo audits of the estimator's claimed
statistical behavior.  Each declares its preconditions and raises
``ConfigurationError`` (not an assertion failure) when a run is set up
outside them.  All are bit-reproducible under a fixed seed; tolerances are
3-sigma bands with trial counts configurable per call.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .collision import CollisionModel
from .errors import ConfigurationError, ParameterError
from .estimator import DynamicKernelDensity
from .kernels import KernelSpec, make_kernel, weight_levels_of
from .levels import build_level_schedule
from .lsh import LshTable
from .rng import mix64

_TAG_TRIAL = 0x5452


@dataclass(frozen=True)
class TrialStats:
    """Summary of one Monte Carlo run.

    ``stderr`` is sqrt((second_moment - mean^2) / trials).  ``pass_fraction``
    is the fraction of trials satisfying the run's per-trial predicate, or a
    0/1 indicator when the predicate applies to the aggregate.
    """

    trials: int
    mean: float
    second_moment: float
    stderr: float
    pass_fraction: float


def _stats(values, pass_fraction) -> TrialStats:
    vals = list(values)
    m = math.fsum(vals) / len(vals)
    m2 = math.fsum(v * v for v in vals) / len(vals)
    var = max(m2 - m * m, 0.0)
    return TrialStats(
        trials=len(vals), mean=m, second_moment=m2,
        stderr=math.sqrt(var / len(vals)), pass_fraction=pass_fraction,
    )


# ---------------------------------------------------------------------------
# exact oracle
# ---------------------------------------------------------------------------


def exact_kde(points: np.ndarray, kernel: KernelSpec, q: np.ndarray) -> float:
    """Exact kernel density at q: the compensated mean of all weights."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ParameterError("exact_kde needs a nonempty 2-D point array")
    w = kernel.eval_many(np.linalg.norm(points - np.asarray(q, dtype=np.float64), axis=1))
    return math.fsum(w.tolist()) / len(points)


def check_lipschitz(points, kernel: KernelSpec, q1, q2) -> bool:
    """Whether the density moves slower than the kernel's Lipschitz constant
    between two queries (with a 1e-12 absolute cushion)."""
    gap = abs(exact_kde(points, kernel, q1) - exact_kde(points, kernel, q2))
    dist = float(np.linalg.norm(np.asarray(q1, float) - np.asarray(q2, float)))
    return gap <= kernel.lipschitz_const * dist + 1e-12


def tune_bandwidth(points, kind: str, q, target: float,
                   lo: float = 1e-3, hi: float = 1e3, iters: int = 80) -> float:
    """Bandwidth at which the exact density at q equals ``target``.

    The density is monotone increasing in the bandwidth, so bisection
    applies; raises ``ConfigurationError`` if the bracket does not
    straddle the target.
    """
    f_lo = exact_kde(points, make_kernel(kind, lo), q)
    f_hi = exact_kde(points, make_kernel(kind, hi), q)
    if not (f_lo <= target <= f_hi):
        raise ConfigurationError(
            f"target density {target} outside attainable range [{f_lo}, {f_hi}]")
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if exact_kde(points, make_kernel(kind, mid), q) < target:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def sample_queries_in_band(points, kernel: KernelSpec, f_kde: float, count: int,
                           seed: int = 0, lo_frac: float = 0.25,
                           hi_frac: float = 1.0, max_tries: int = 20000):
    """Rejection-sample queries whose exact density lies in
    [lo_frac * f_kde, hi_frac * f_kde].  Returns (queries, densities)."""
    points = np.asarray(points, dtype=np.float64)
    rng = np.random.default_rng(seed)
    n, d = points.shape
    queries, densities = [], []
    for _ in range(max_tries):
        if len(queries) >= count:
            break
        base = points[rng.integers(n)]
        q = base + rng.normal(size=d) * rng.uniform(0.2, 2.5) * kernel.bandwidth
        f = exact_kde(points, kernel, q)
        if lo_frac * f_kde <= f <= hi_frac * f_kde:
            queries.append(q)
            densities.append(f)
    if len(queries) < count:
        raise ConfigurationError(
            f"found only {len(queries)}/{count} queries in the density band")
    return np.array(queries), np.array(densities)


# ---------------------------------------------------------------------------
# statistical audits
# ---------------------------------------------------------------------------


def _require_band(f_star: float, f_kde: float):
    if not (f_kde / 4.0 <= f_star <= f_kde):
        raise ConfigurationError(
            f"query density {f_star} outside the required band "
            f"[{f_kde / 4}, {f_kde}] for f_kde={f_kde}")


def collect_group_sums(points, q, trials: int, est_params: dict, seed: int = 0,
                       enforce_band: bool = True):
    """First-group normalized sums T_1 / n from ``trials`` independently
    seeded builds.

    Verifies the density-band precondition first; ``enforce_band=False``
    skips it for degenerate scenarios (a singleton dataset queried at its
    own point has density 1, which no valid f_kde can bracket, yet the
    estimator there is exact by construction).
    """
    kernel = make_kernel(est_params["kernel"], est_params["bandwidth"])
    f_star = exact_kde(points, kernel, q)
    if enforce_band:
        _require_band(f_star, est_params["f_kde"])
    n = len(points)
    values = np.empty(trials)
    for t in range(trials):
        params = dict(est_params, seed=mix64(seed, _TAG_TRIAL, t))
        est = DynamicKernelDensity(**params).fit(points)
        values[t] = est.query(q).per_group_T[0] / n
    return values, f_star


def run_unbiasedness_test(points, q, trials: int, est_params: dict,
                          seed: int = 0, values=None, f_star=None,
                          enforce_band: bool = True):
    """Mean of T_1 / n over independent builds versus the exact density.

    Passes when |mean - f_star| <= 3 * stderr.  ``values``/``f_star`` may be
    supplied to reuse an existing ``collect_group_sums`` run.
    """
    if values is None:
        values, f_star = collect_group_sums(points, q, trials, est_params, seed,
                                            enforce_band=enforce_band)
    stats = _stats(values, 0.0)
    passed = abs(stats.mean - f_star) <= 3.0 * stats.stderr
    return TrialStats(stats.trials, stats.mean, stats.second_moment,
                      stats.stderr, 1.0 if passed else 0.0), f_star


def run_variance_test(points, q, trials: int, est_params: dict,
                      seed: int = 0, values=None, f_star=None,
                      slack: float = 1.5, enforce_band: bool = True):
    """Empirical second moment of T_1 / n against its bound
    4 * f_kde^2 * slack.
    """
    if values is None:
        values, f_star = collect_group_sums(points, q, trials, est_params, seed,
                                            enforce_band=enforce_band)
    stats = _stats(values, 0.0)
    bound = 4.0 * est_params["f_kde"] ** 2 * slack
    passed = stats.second_moment <= bound
    return TrialStats(stats.trials, stats.mean, stats.second_moment,
                      stats.stderr, 1.0 if passed else 0.0), bound


def run_recovery_test(level: int, trials: int, est_params: dict,
                      n_for_schedule: int = 256, dim: int = 8,
                      distance_factor: float = 0.99, seed: int = 0,
                      far: bool = False):
    """Recovery frequency of a planted point at ``distance_factor`` times
    the level's near radius, against the collision model's prediction.

    For near plants (``far=False``) the run passes when the frequency is at
    least predicted - 3 * binomial stderr; for far plants, at most
    predicted + 3 * binomial stderr.  Returns (TrialStats, predicted).
    """
    kernel = make_kernel(est_params["kernel"], est_params["bandwidth"])
    model = CollisionModel(est_params.get("bucket_width_factor", 1.5))
    sched = build_level_schedule(
        kernel, n_for_schedule, est_params["f_kde"], model,
        slack=est_params.get("level_slack", 1.0),
        table_scale=est_params.get("table_scale", 3.0))
    if not (1 <= level <= sched.R):
        raise ConfigurationError(f"level {level} outside schedule with R={sched.R}")
    z = float(sched.z[level - 1])
    k, L = int(sched.k[level - 1]), int(sched.K2[level - 1])
    dist = distance_factor * z
    p_atom = float(model.prob_at(dist, z))
    predicted = 1.0 - (1.0 - p_atom**k) ** L

    q = np.zeros(dim)
    x = q.copy()
    x[0] = dist
    hits = 0
    for t in range(trials):
        table = LshTable(k=k, num_tables=L, near_distance=z, dim=dim,
                         seed=mix64(seed, _TAG_TRIAL, level, t),
                         bucket_width_factor=model.bucket_width_factor)
        table.build(x.reshape(1, -1), [0])
        if len(table.recover(q)):
            hits += 1
    freq = hits / trials
    se = math.sqrt(max(predicted * (1.0 - predicted), 0.0) / trials)
    passed = freq <= predicted + 3.0 * se if far else freq >= predicted - 3.0 * se
    stats = TrialStats(trials=trials, mean=freq, second_moment=freq,
                       stderr=se, pass_fraction=1.0 if passed else 0.0)
    return stats, predicted


def run_update_equivalence_test(points, updates, queries, est_params: dict,
                                seed: int = 0) -> bool:
    """Whether every query report after applying ``updates`` (pairs of
    (index, new_point)) equals, bit-exactly, the report of a same-seed
    rebuild on the final dataset."""
    params = dict(est_params, seed=seed)
    est = DynamicKernelDensity(**params).fit(points)
    final = np.array(points, dtype=np.float64, copy=True)
    for i, v in updates:
        est.update(v, i)
        final[int(i)] = v
    rebuilt = DynamicKernelDensity(**params).fit(final)
    return all(est.query(q) == rebuilt.query(q) for q in queries)


def level_candidate_profile(est: DynamicKernelDensity, queries):
    """Per-bucket, per-level candidate counts across a query batch.

    Returns (counts, inspections): ``counts[i-1]`` is how many bucket
    entries across all inspected buckets belonged to weight level i, and
    ``inspections`` is the number of buckets inspected.  The mean level-i
    load per bucket is counts[i-1] / inspections.
    """
    R = est.schedule_.R
    counts = np.zeros(R + 1, dtype=np.int64)
    inspections = 0
    for q in queries:
        q = np.asarray(q, dtype=np.float64)
        dist = np.linalg.norm(est.X_ - q, axis=1)
        levels = weight_levels_of(est.kernel_spec_.eval_many(dist), R)
        for group in est.groups_:
            for slot in group.levels:
                inspections += slot.table.num_tables
                for bucket in slot.table.recover_per_table(q):
                    for idx in bucket:
                        counts[levels[idx] - 1] += 1
    return counts, inspections


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


class Reporter:
    """Collects test outcomes; emits key=value lines and a CSV summary."""

    def __init__(self, stream=None):
        self.rows = []
        self.stream = stream

    def record(self, name: str, trials: int, mean: float, bound: float,
               passed: bool, kind: str = "check"):
        row = {"name": name, "trials": trials, "mean": mean,
               "bound": bound, "pass": int(bool(passed)), "kind": kind}
        self.rows.append(row)
        line = " ".join(f"{k}={row[k]}" for k in ("name", "kind", "trials", "mean", "bound", "pass"))
        if self.stream is not None:
            print(line, file=self.stream)
        else:
            print(line)

    @property
    def all_passed(self) -> bool:
        return all(r["pass"] for r in self.rows if r["kind"] != "config_error")

    @property
    def config_errors(self) -> int:
        return sum(1 for r in self.rows if r["kind"] == "config_error")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["name", "trials", "mean", "bound", "pass"])
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: row[k] for k in writer.fieldnames})
