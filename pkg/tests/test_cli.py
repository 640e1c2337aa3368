"""Command-line flows: build, query, update, bench, and exit codes."""

import csv

import numpy as np
import pytest

from lshkde import DynamicKernelDensity, load_snapshot
from lshkde.cli import main
from lshkde.datasets import two_clusters


def write_points(path, X):
    with open(path, "w") as fh:
        for row in np.atleast_2d(X):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def workspace(tmp_path):
    X = two_clusters(200, 4, seed=1)
    data = tmp_path / "data.csv"
    write_points(data, X)
    return tmp_path, X, data


BUILD_FLAGS = ["--epsilon", "0.5", "--f-kde", "0.1", "--bandwidth", "2.0",
               "--seed", "7"]


def build(tmp_path, data, name="state.snap", extra=()):
    snap = tmp_path / name
    code = main(["build", str(data), "--out", str(snap), *BUILD_FLAGS, *extra])
    assert code == 0
    return snap


def test_build_summary_and_snapshot(workspace, capsys):
    from lshkde import CollisionModel, build_level_schedule, make_kernel

    tmp_path, X, data = workspace
    snap = build(tmp_path, data)
    out = capsys.readouterr().out
    assert "n=200 d=4 R=4" in out and "K1=" in out and "cost=" in out
    # reported table counts must match an independent schedule recomputation
    sched = build_level_schedule(make_kernel("gaussian", 2.0), 200, 0.1,
                                 CollisionModel(1.5))
    for r in range(1, sched.R + 1):
        assert f"level={r} " in out and f"K2={int(sched.K2[r - 1])}" in out
    est = load_snapshot(snap)
    direct = DynamicKernelDensity(kernel="gaussian", bandwidth=2.0, epsilon=0.5,
                                  f_kde=0.1, seed=7).fit(X)
    q = X[0] + 0.3
    assert est.query(q) == direct.query(q)


def test_build_is_deterministic(workspace):
    tmp_path, X, data = workspace
    a = build(tmp_path, data, "a.snap")
    b = build(tmp_path, data, "b.snap")
    assert a.read_bytes() == b.read_bytes()


def test_empty_data_file_is_data_error(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["build", str(empty), "--out", str(tmp_path / "x.snap")]) == 3
    assert "no data rows" in capsys.readouterr().err


def test_malformed_row_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,2.0\n3.0,4.0\n5.0,oops\n")
    assert main(["build", str(bad), "--out", str(tmp_path / "x.snap")]) == 3
    assert ":3:" in capsys.readouterr().err


def test_header_autodetected(tmp_path):
    data = tmp_path / "headed.csv"
    data.write_text("x,y\n0.0,0.0\n1.0,1.0\n2.0,0.5\n")
    snap = build(tmp_path, data)
    assert load_snapshot(snap).n_ == 3


def test_query_singleton_dataset(tmp_path):
    data = tmp_path / "one.csv"
    data.write_text("1.0,2.0\n")
    snap = tmp_path / "one.snap"
    assert main(["build", str(data), "--out", str(snap),
                 "--epsilon", "0.5", "--f-kde", "0.5", "--seed", "3"]) == 0
    queries = tmp_path / "q.csv"
    queries.write_text("1.0,2.0\n")
    out = tmp_path / "res.csv"
    assert main(["query", str(snap), str(queries), "--out", str(out)]) == 0
    rows = read_csv_rows(out)
    assert float(rows[0]["estimate"]) == 1.0


def test_query_with_oracle_accuracy(workspace):
    from lshkde import make_kernel
    from lshkde.harness import sample_queries_in_band

    tmp_path, X, data = workspace
    snap = build(tmp_path, data)
    kern = make_kernel("gaussian", 2.0)
    in_band, _ = sample_queries_in_band(X, kern, 0.1, 20, seed=5)
    queries = tmp_path / "q.csv"
    write_points(queries, in_band)
    out = tmp_path / "res.csv"
    assert main(["query", str(snap), str(queries), "--out", str(out),
                 "--with-oracle"]) == 0
    rows = read_csv_rows(out)
    assert len(rows) == 20
    assert {"estimate", "exact", "relative_error", "candidates_examined",
            "levels_hit"} <= set(rows[0])
    within = sum(float(r["relative_error"]) <= 0.5 for r in rows)
    assert within >= 19  # at least 95% of in-band rows within epsilon


def test_robust_single_member_matches_plain(workspace):
    tmp_path, X, data = workspace
    snap = build(tmp_path, data)
    queries = tmp_path / "q.csv"
    write_points(queries, X[:6] + 0.25)
    plain, robust = tmp_path / "plain.csv", tmp_path / "robust.csv"
    assert main(["query", str(snap), str(queries), "--out", str(plain)]) == 0
    assert main(["query", str(snap), str(queries), "--out", str(robust),
                 "--robust", "--ensemble-size", "1"]) == 0
    plain_rows = read_csv_rows(plain)
    robust_rows = read_csv_rows(robust)
    assert [r["estimate"] for r in plain_rows] == [r["estimate"] for r in robust_rows]


def test_update_empty_script_preserves_bytes(workspace):
    tmp_path, X, data = workspace
    snap = build(tmp_path, data)
    updates = tmp_path / "none.csv"
    updates.write_text("")
    out = tmp_path / "updated.snap"
    assert main(["update", str(snap), str(updates), "--out", str(out)]) == 0
    assert out.read_bytes() == snap.read_bytes()


def test_update_then_query_matches_direct(workspace):
    tmp_path, X, data = workspace
    snap = build(tmp_path, data)
    rng = np.random.default_rng(6)
    script = [(int(rng.integers(200)), rng.normal(size=4)) for _ in range(10)]
    updates = tmp_path / "upd.csv"
    with open(updates, "w") as fh:
        for i, v in script:
            fh.write(f"{i}," + ",".join(repr(float(x)) for x in v) + "\n")
    out_snap = tmp_path / "updated.snap"
    assert main(["update", str(snap), str(updates), "--out", str(out_snap)]) == 0

    est = load_snapshot(out_snap)
    direct = load_snapshot(snap)
    for i, v in script:
        direct.update(v, i)
    q = X[0] + 0.1
    assert est.query(q) == direct.query(q)
    assert est.update_count_ == 10


def test_update_out_of_range_index(workspace, capsys):
    tmp_path, X, data = workspace
    snap = build(tmp_path, data)
    updates = tmp_path / "upd.csv"
    updates.write_text("999,0.0,0.0,0.0,0.0\n")
    assert main(["update", str(snap), str(updates),
                 "--out", str(tmp_path / "o.snap")]) == 3
    assert ":1:" in capsys.readouterr().err


def test_bench_emits_csv_with_deterministic_work_counts(tmp_path):
    flags = ["--sizes", "200,400", "--repeats", "3", "--d", "4",
             "--epsilon", "0.5", "--f-kde", "0.1", "--bandwidth", "1.5",
             "--seed", "4"]
    out_a, out_b = tmp_path / "bench_a.csv", tmp_path / "bench_b.csv"
    assert main(["bench", *flags, "--out", str(out_a)]) == 0
    assert main(["bench", *flags, "--out", str(out_b)]) == 0
    rows = read_csv_rows(out_a)
    assert [r["n"] for r in rows] == ["200", "400"]
    assert all(float(r["update_s"]) < float(r["rebuild_s"]) for r in rows)
    # wall times vary between runs; the work counts must not
    counts = lambda path: [r["candidates_examined"] for r in read_csv_rows(path)]
    assert counts(out_a) == counts(out_b)


def test_missing_snapshot_is_data_error(tmp_path, capsys):
    queries = tmp_path / "q.csv"
    queries.write_text("0.0,0.0\n")
    assert main(["query", str(tmp_path / "nope.snap"), str(queries),
                 "--out", str(tmp_path / "r.csv")]) == 3


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["query"])  # missing required arguments
    assert exc.value.code == 2
