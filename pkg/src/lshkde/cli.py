"""Command-line surface: build, query, update, bench, verify.

Exit codes: 0 success, 2 usage, 3 data/configuration error, 4 verification
failure.  All commands honor ``--seed`` and are bit-reproducible: equal
inputs and seeds produce byte-equal outputs.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import run_bench, write_bench_csv
from .config import RunConfig
from .dataio import read_points_csv, read_updates_csv, write_results_csv
from .datasets import make_dataset
from .errors import CapacityError, ConfigurationError, ConsistencyError, ParameterError
from .estimator import DynamicKernelDensity
from .harness import (
    Reporter,
    check_lipschitz,
    collect_group_sums,
    exact_kde,
    level_candidate_profile,
    run_recovery_test,
    run_unbiasedness_test,
    run_update_equivalence_test,
    run_variance_test,
    sample_queries_in_band,
    tune_bandwidth,
)
from .kernels import make_kernel, weight_levels_of
from .levels import kernel_cost
from .robust import RobustKernelDensity
from .snapshot import load_snapshot, save_snapshot

_DATA_ERRORS = (ParameterError, CapacityError, ConsistencyError, OSError)


def _add_config_flags(parser):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument("--f-kde", dest="f_kde", type=float, default=None)
    parser.add_argument("--kernel", choices=("gaussian", "exponential"), default=None)
    parser.add_argument("--bandwidth", type=float, default=None)


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for name in ("seed", "epsilon", "f_kde", "kernel", "bandwidth"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg.validate()


def _cmd_build(args) -> int:
    cfg = _resolve_config(args)
    X = read_points_csv(args.data)
    if args.auto_f_kde:
        kernel = make_kernel(cfg.kernel, cfg.bandwidth)
        probes = read_points_csv(args.auto_f_kde)
        cfg.f_kde = max(exact_kde(X, kernel, q) for q in probes)
        print("warning: f_kde set from probe queries; the lower-bound "
              "precondition is now only empirical", file=sys.stderr)
    est = DynamicKernelDensity(**cfg.estimator_params()).fit(X)
    save_snapshot(est, args.out)
    sched = est.schedule_
    print(f"n={est.n_} d={est.d_} R={sched.R} K1={est.K1_} "
          f"cost={kernel_cost(sched, cfg.level_slack)}")
    for r in range(1, sched.R + 1):
        print(f"level={r} z={float(sched.z[r - 1])!r} k={int(sched.k[r - 1])} "
              f"K2={int(sched.K2[r - 1])} p_near={float(sched.p_near[r - 1])!r}")
    print(f"snapshot={args.out}")
    return 0


def _cmd_query(args) -> int:
    est = load_snapshot(args.snapshot)
    queries = read_points_csv(args.queries)
    if queries.shape[1] != est.d_:
        raise ParameterError(
            f"queries have dimension {queries.shape[1]}, snapshot has {est.d_}")
    robust = None
    if args.robust:
        seed = est.seed if args.seed is None else args.seed
        robust = RobustKernelDensity(
            n_members=args.ensemble_size, seed=seed,
            **{k: getattr(est, k) for k in (
                "kernel", "bandwidth", "epsilon", "f_kde", "group_scale",
                "table_scale", "level_slack", "bucket_width_factor",
                "median_blocks", "max_levels", "max_tables")})
        robust.fit(est.X_)
    rows = []
    for q in queries:
        report = est.query(q)
        estimate = robust.query(q) if robust is not None else report.estimate
        row = {
            "estimate": estimate,
            "candidates_examined": report.candidates_examined,
            "levels_hit": report.levels_hit,
        }
        if args.with_oracle:
            exact = exact_kde(est.X_, est.kernel_spec_, q)
            row["exact"] = exact
            row["relative_error"] = (abs(estimate - exact) / exact
                                     if exact > 0 else float("inf"))
        rows.append(row)
    write_results_csv(args.out, rows, with_oracle=args.with_oracle)
    print(f"queries={len(rows)} results={args.out}")
    return 0


def _cmd_update(args) -> int:
    est = load_snapshot(args.snapshot)
    updates = read_updates_csv(args.updates, dim=est.d_, n=est.n_)
    for idx, point in updates:
        est.update(point, idx)
    save_snapshot(est, args.out)
    print(f"applied={len(updates)} snapshot={args.out}")
    return 0


def _cmd_bench(args) -> int:
    cfg = _resolve_config(args)
    sizes = [int(tok) for tok in args.sizes.split(",") if tok]
    if not sizes:
        raise ParameterError("--sizes must list at least one dataset size")
    rows = run_bench(sizes, cfg.estimator_params(), d=args.d, seed=cfg.seed,
                     repeats=args.repeats, dataset=args.dataset)
    write_bench_csv(rows, args.out)
    for row in rows:
        print(f"n={row.n} build_s={row.build_s!r} update_s={row.update_s!r} "
              f"query_s={row.query_s!r} rebuild_s={row.rebuild_s!r} "
              f"candidates={row.candidates_examined}")
    print(f"bench={args.out}")
    return 0


def _cmd_verify(args) -> int:
    cfg = _resolve_config(args)
    trials = 50 if args.quick else args.trials
    reporter = Reporter()
    seed = cfg.seed

    # Shared scenario: two clusters, bandwidth tuned so a reference query
    # sits at density 0.05; the configured f_kde must bracket it.
    X = make_dataset("two_clusters", 500, 8, seed=seed)
    q_ref = X[0] + 0.5
    bandwidth = tune_bandwidth(X, cfg.kernel, q_ref, target=0.05)
    params = cfg.estimator_params()
    params["bandwidth"] = bandwidth
    thin = dict(params, group_scale=0.01)  # single group; audits look at T_1

    try:
        values, f_star = collect_group_sums(X, q_ref, trials, thin, seed=seed)
        stats, f_star = run_unbiasedness_test(
            X, q_ref, trials, thin, values=values, f_star=f_star)
        reporter.record("unbiasedness", stats.trials, stats.mean,
                        3.0 * stats.stderr, stats.pass_fraction == 1.0)
        stats, bound = run_variance_test(
            X, q_ref, trials, thin, values=values, f_star=f_star)
        reporter.record("variance", stats.trials, stats.second_moment, bound,
                        stats.pass_fraction == 1.0)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        reporter.record("unbiasedness", 0, float("nan"), float("nan"), False,
                        kind="config_error")

    kernel = make_kernel(cfg.kernel, bandwidth)
    from .collision import CollisionModel
    from .levels import build_level_schedule

    sched = build_level_schedule(kernel, 256, cfg.f_kde,
                                 CollisionModel(cfg.bucket_width_factor),
                                 slack=cfg.level_slack, table_scale=cfg.table_scale)
    rec_params = dict(params, f_kde=cfg.f_kde)
    for r in range(1, sched.R + 1):
        stats, predicted = run_recovery_test(
            r, 20 * trials, rec_params, seed=seed)
        reporter.record(f"recovery_near_r{r}", stats.trials, stats.mean,
                        predicted - 3.0 * stats.stderr, stats.pass_fraction == 1.0)
    stats, predicted = run_recovery_test(
        1, 20 * trials, rec_params, distance_factor=8.0, seed=seed, far=True)
    reporter.record("recovery_far_r1", stats.trials, stats.mean,
                    predicted + 3.0 * stats.stderr, stats.pass_fraction == 1.0)

    # Deterministic level-size bound on every generator.
    rng = np.random.default_rng(seed)
    violations = 0
    total = 0
    for name in ("gaussian_cluster", "two_clusters", "uniform_cube", "line"):
        Xg = make_dataset(name, 300, 6, seed=seed)
        for _ in range(25):
            q = Xg[rng.integers(len(Xg))] + rng.normal(size=6)
            w = kernel.eval_many(np.linalg.norm(Xg - q, axis=1))
            f_star_q = float(np.sum(w)) / len(Xg)
            levels = weight_levels_of(w, sched.R)
            for r in range(1, sched.R + 1):
                total += 1
                if np.count_nonzero(levels == r) > 2.0**r * len(Xg) * f_star_q:
                    violations += 1
    reporter.record("level_sizes", total, violations, 0, violations == 0)

    pairs = 2000 if args.quick else 10000
    Xl = make_dataset("gaussian_cluster", 100, 6, seed=seed)
    lip_ok = all(
        check_lipschitz(Xl, kernel, rng.normal(size=6) * 2, rng.normal(size=6) * 2)
        for _ in range(pairs))
    reporter.record("lipschitz", pairs, int(lip_ok), 1, lip_ok)

    upd_params = dict(params, group_scale=0.5, epsilon=0.5)
    Xu = make_dataset("two_clusters", 300, 8, seed=seed + 1)
    updates = [(int(rng.integers(len(Xu))), rng.normal(size=8)) for _ in range(30)]
    queries = [Xu[rng.integers(len(Xu))] + rng.normal(size=8) for _ in range(10)]
    equal = run_update_equivalence_test(Xu, updates, queries, upd_params, seed=seed)
    reporter.record("update_equivalence", len(queries), int(equal), 1, equal)

    prof_est = DynamicKernelDensity(**dict(params, group_scale=0.2)).fit(X)
    counts, inspections = level_candidate_profile(
        prof_est, [X[rng.integers(len(X))] + rng.normal(size=8) for _ in range(10)])
    worst = float(np.max(counts / max(inspections, 1)))
    reporter.record("level_candidates", inspections, worst, 2.0, worst <= 2.0)

    if args.out:
        reporter.write_csv(args.out)
    if reporter.config_errors or not reporter.all_passed:
        return 4
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lshkde",
        description="Dynamic LSH-backed kernel density estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a structure from a point CSV")
    p.add_argument("data", help="points CSV")
    p.add_argument("--out", required=True, help="snapshot path")
    p.add_argument("--auto-f-kde", metavar="PROBES",
                   help="set f_kde from the max exact density over probe queries")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("query", help="answer queries from a snapshot")
    p.add_argument("snapshot")
    p.add_argument("queries", help="queries CSV")
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--robust", action="store_true")
    p.add_argument("--ensemble-size", type=int, default=None)
    p.add_argument("--with-oracle", action="store_true")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed for robust ensemble derivation "
                        "(default: the snapshot's seed)")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("update", help="apply point replacements to a snapshot")
    p.add_argument("snapshot")
    p.add_argument("updates", help="updates CSV: index,coord1,...")
    p.add_argument("--out", required=True, help="output snapshot path")
    p.set_defaults(func=_cmd_update)

    p = sub.add_parser("bench", help="time build/update/query/rebuild")
    p.add_argument("--sizes", required=True, help="comma-separated dataset sizes")
    p.add_argument("--out", required=True, help="timing CSV")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--repeats", type=int, default=11)
    p.add_argument("--dataset", default="gaussian_cluster")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("verify", help="run the statistical verification suite")
    p.add_argument("--quick", action="store_true", help="50-trial variant")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--out", help="report CSV")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 4
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
