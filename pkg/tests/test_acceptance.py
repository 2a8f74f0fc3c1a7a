"""Acceptance suite.

Each test checks one gate criterion at its stated tolerance and prints one
PASS/FAIL line (run with -s to see them inline). The comparison matrix is
built once per session: four constrained synthetic models sized per the
published recipe, 10,000-candidate pools, 20 seeds per algorithm.
"""

import itertools
import json
import math
import random
import statistics
import time

import numpy as np
import pytest

import isneak.geometry as geometry
from isneak.baselines import FlashConfig, NgaConfig, flash_run, nga_run
from isneak.engine import auto_oracle, oracle_schema, run_isneak
from isneak.evalkit import bench, d2h, hamlet_samples, rank_all, sweep_S
from isneak.geometry import build_tree, pick_poles, project_and_split
from isneak.model_io import enumerate_valid, generate_synthetic_model
from isneak.preprocess import Bin, encode_pool, equal_width_bins, merge_bins
from isneak.ranking import GoalView, boolean_dominates, zitzler_worse

BENCH_RECIPE = [(125, 0.25), (250, 0.5), (500, 0.25), (1000, 0.5)]
REPEATS = 20
SEED0 = 0


def report(name: str, ok: bool, detail: str):
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="session")
def bench_pools():
    pools = []
    build_seconds = {}
    for feats, ratio in BENCH_RECIPE:
        model, spec = generate_synthetic_model(feats, ratio, seed=42)
        t0 = time.perf_counter()
        pool = enumerate_valid(model, 10000, seed=5, spec=spec)
        build_seconds[pool.name] = time.perf_counter() - t0
        encode_pool(pool)
        pools.append(pool)
    return pools, build_seconds


@pytest.fixture(scope="session")
def bench_report(bench_pools):
    pools, build_seconds = bench_pools
    t0 = time.perf_counter()
    rep = bench(pools, ["isneak", "flash", "nga"], repeats=REPEATS, seed0=SEED0)
    wall = time.perf_counter() - t0
    return rep, wall + sum(build_seconds.values()), build_seconds


def rows_of(rep, model, algorithm):
    return [r for r in rep.rows if r.model == model and r.algorithm == algorithm and not r.failed]


def test_hamlet_bound():
    t0 = time.perf_counter()
    n = hamlet_samples(0.999, 0.01)
    elapsed_ms = (time.perf_counter() - t0) * 1000
    report(
        "hamlet-bound",
        n == 688 and elapsed_ms < 1.0,
        f"hamlet_samples(0.999, 0.01) = {n} in {elapsed_ms:.3f} ms",
    )


def test_evaluation_frugality(bench_pools, bench_report):
    pools, build_seconds = bench_pools
    rep, _, _ = bench_report
    pool125 = pools[0]
    assert pool125.n == 10000
    isneak_rows = rows_of(rep, pool125.name, "isneak")
    flash_rows = rows_of(rep, pool125.name, "flash")
    nga_rows = rows_of(rep, pool125.name, "nga")
    worst = max(r.y_evals for r in isneak_rows)
    runtime = build_seconds[pool125.name] + sum(r.ms for r in isneak_rows) / 1000
    ok = (
        len(isneak_rows) == REPEATS
        and worst <= 80
        and all(r.y_evals == 120 for r in flash_rows)
        and all(r.y_evals == 10000 for r in nga_rows)
        and runtime < 300
    )
    report(
        "evaluation-frugality",
        ok,
        f"isneak max y-evals {worst} (<=80), flash 120 exactly, nga 10000, "
        f"{runtime:.0f}s (<300s) on the 10k-candidate 125-feature pool",
    )


def test_interaction_budget(bench_report):
    rep, _, _ = bench_report
    medians, max_size, med_sizes = [], 0, []
    for model in rep.models():
        rows = rows_of(rep, model, "isneak")
        medians.append(statistics.median(r.I for r in rows))
        med_sizes.append(statistics.median(r.median_S for r in rows))
        for r in rows:
            max_size = max(max_size, r.median_S)
    all_sizes_ok = all(
        r.max_S <= 6 and r.median_S <= 6
        for m in rep.models()
        for r in rows_of(rep, m, "isneak")
    )
    non_growing = med_sizes[-1] <= med_sizes[0]
    ok = all(5 <= m <= 30 for m in medians) and all_sizes_ok and non_growing
    report(
        "interaction-budget",
        ok,
        f"median I per model {medians} (within [5,30]), every question size <= 6, "
        f"median sizes {med_sizes} do not grow with model size",
    )


def test_validity(bench_report):
    rep, _, _ = bench_report
    isneak_ok = all(
        r.valid_fraction == 1.0 for m in rep.models() for r in rows_of(rep, m, "isneak")
    )
    nga_below = all(
        r.valid_fraction < 1.0 for m in rep.models() for r in rows_of(rep, m, "nga")
    )
    report(
        "validity",
        isneak_ok and nga_below,
        "every selected candidate satisfies the CNF on all seeds; "
        "genetic baseline's final populations are never fully valid",
    )


def test_comparative_d2h_trend(bench_report):
    rep, total_seconds, _ = bench_report
    lines = []
    ok = True
    for model in rep.models():
        mi = rep.median(model, "isneak")
        mf = rep.median(model, "flash")
        mn = rep.median(model, "nga")
        ok = ok and mi < mf and mi < mn and mi <= 0.05
        lines.append(f"{model}: isneak {mi:.4f} < flash {mf:.4f}, nga {mn:.4f}")
    ok = ok and total_seconds <= 1800
    report(
        "comparative-d2h-trend",
        ok,
        "; ".join(lines) + f"; matrix wall time {total_seconds:.0f}s (<=1800s)",
    )


def test_oracle_equivalence_desk_scale():
    results = []
    for feats, ratio, gen_seed in [(20, 0.5, 0), (32, 0.5, 1)]:
        model, spec = generate_synthetic_model(feats, ratio, seed=gen_seed)
        pool = enumerate_valid(model, 64, seed=5, spec=spec)
        assert pool.n <= 64
        encode_pool(pool)
        ranked = rank_all(pool)
        top = set(ranked.order[: math.ceil(pool.n * 0.2)])
        hits = 0
        for seed in range(20):
            res = run_isneak(pool, auto_oracle(oracle_schema(pool), seed), seed)
            if {c.index for c in res.selected} & top:
                hits += 1
        results.append((pool.name, pool.n, hits))
    ok = all(hits >= 18 for _, _, hits in results)
    report(
        "oracle-equivalence",
        ok,
        "; ".join(f"{name} (n={n}): top-20% hit in {hits}/20 seeds" for name, n, hits in results),
    )


def test_knee_reproduction():
    model, spec = generate_synthetic_model(128, 0.25, seed=42)
    pool = enumerate_valid(model, 4000, seed=5, spec=spec)
    encode_pool(pool)
    table = sweep_S(pool, [1, 6], repeats=10, seed0=0)
    by_s = {row["S"]: row["median_I"] for row in table}
    ok = by_s[1] >= 3 * by_s[6]
    report(
        "knee-reproduction",
        ok,
        f"median I at S=1 is {by_s[1]:g} vs {by_s[6]:g} at S=6 "
        f"(ratio {by_s[1] / by_s[6]:.1f}, need >= 3)",
    )


def test_determinism_all_algorithms():
    model, spec = generate_synthetic_model(24, 0.5, seed=5)
    pool = enumerate_valid(model, 300, seed=5, spec=spec)
    encode_pool(pool)

    def run_twice(fn):
        a, b = fn(), fn()
        da, db = a.to_dict(pool), b.to_dict(pool)
        da.pop("ms"), db.pop("ms")
        return json.dumps(da) == json.dumps(db)

    ok = (
        run_twice(lambda: run_isneak(pool, auto_oracle(oracle_schema(pool), 3), 3))
        and run_twice(lambda: flash_run(pool, FlashConfig(m0=20, budget=40, seed=3)))
        and run_twice(lambda: nga_run(pool, NgaConfig(population=20, generations=10, seed=3)))
    )
    report("determinism", ok, "byte-identical result JSON (timing excluded) for all algorithms")


def test_unit_property_suites(mid_pool):
    failures = []

    # Zitzler asymmetry + dominance consistency over a 5x5 grid of 2-goal vectors
    grid = np.linspace(0, 1, 5)
    for w in ([-1, -1], [-1, 1]):
        for x in itertools.product(grid, repeat=2):
            for y in itertools.product(grid, repeat=2):
                vx = GoalView(np.array(x), np.array(w, dtype=float))
                vy = GoalView(np.array(y), np.array(w, dtype=float))
                if zitzler_worse(vx, vy) and zitzler_worse(vy, vx):
                    failures.append(f"asymmetry broken at {x} vs {y}")
                if boolean_dominates(vx, vy) and not zitzler_worse(vy, vx):
                    failures.append(f"dominance inconsistency at {x} vs {y}")

    # FASTMAP pole heuristic costs exactly 2n distance computations
    calls = {"n": 0}
    real = geometry.distance

    def counting(u, v):
        calls["n"] += 1
        return real(u, v)

    geometry.distance = counting
    try:
        members = np.arange(mid_pool.n)
        pick_poles(members, mid_pool, random.Random(0))
    finally:
        geometry.distance = real
    if calls["n"] != 2 * mid_pool.n:
        failures.append(f"pole search used {calls['n']} != 2n distance calls")

    # bin merge idempotence
    rng = np.random.default_rng(1)
    for _ in range(10):
        merged = merge_bins(equal_width_bins(rng.normal(size=80)))
        if merge_bins(merged) != merged:
            failures.append("bin merge not idempotent")

    # one-true-per-attribute encoding on a numeric column
    from isneak.model_io import Goal, ObjectiveSpec, load_candidate_table

    spec = ObjectiveSpec((Goal("cost", "minimize"),))
    rows = "t,cost\n" + "\n".join(f"{v:.4f},{v:.4f}" for v in rng.random(50) * 11)
    p = load_candidate_table(rows, spec)
    p, scheme = encode_pool(p)
    e = scheme.entries[0]
    if not (p.encoded[:, e.first_column : e.first_column + e.n_columns].sum(axis=1) == 1).all():
        failures.append("one-hot encoding not one-true-per-attribute")

    # median-split ordering
    tree = build_tree(mid_pool, seed=4)
    east_half, west_half, x = project_and_split(tree, mid_pool)
    pos = {int(m): x[i] for i, m in enumerate(tree.members)}
    if max(pos[int(m)] for m in east_half) > min(pos[int(m)] for m in west_half) + 1e-12:
        failures.append("median split ordering broken")

    report(
        "unit-property-suites",
        not failures,
        "zero failures across domination grid, pole-cost bound, bin-merge "
        "idempotence, one-hot encoding, median split"
        + (f" -- {failures[:3]}" if failures else ""),
    )
