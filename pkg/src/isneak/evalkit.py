"""Scoring and benchmarking.

Ground truth is the whole pool sorted best-to-worst under the continuous
domination comparator; a result's d2h is its 0-based rank over the pool
size. Evaluations spent building ground truth are bookkeeping, not part of
any algorithm's budget.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .baselines import FlashConfig, NgaConfig, flash_run, nga_run
from .engine import BudgetConfig, RunResult, auto_oracle, oracle_schema, run_isneak, zitzler_sort
from .errors import ContractViolation
from .model_io import CandidatePool
from .preprocess import encode_pool


@dataclass
class RankedPool:
    pool: CandidatePool
    order: list[int]  # best to worst
    index_of: dict[int, int]

    def __len__(self) -> int:
        return len(self.order)


def rank_all(pool: CandidatePool) -> RankedPool:
    """Stable comparator sort of every candidate, best first."""
    if pool._goals is None:
        raise ContractViolation("pool has no goal data to rank")
    order = zitzler_sort(pool, list(range(pool.n)))
    return RankedPool(pool, order, {idx: r for r, idx in enumerate(order)})


def d2h(candidate_index: int, ranked: RankedPool) -> float:
    """Normalized 0-based rank; 0 is the best candidate, lower is better."""
    if candidate_index not in ranked.index_of:
        raise ContractViolation(f"unknown candidate index {candidate_index}")
    return ranked.index_of[candidate_index] / len(ranked)


def d2h_of_goals(goals: np.ndarray, ranked: RankedPool) -> float:
    """d2h for a candidate outside the pool: its insertion rank is the number
    of pool candidates that beat it under the comparator."""
    pool = ranked.pool
    bounds = pool.goal_bounds
    lo, hi = bounds[:, 0], bounds[:, 1]
    span = np.where(hi > lo, hi - lo, 1.0)
    o_pool = np.where(hi > lo, (pool.peek_goals() - lo) / span, 0.5)
    x = np.where(hi > lo, (np.asarray(goals, dtype=float) - lo) / span, 0.5)
    w = pool.objective_spec.weights
    n = len(w)
    e_xz = np.exp(w * (x - o_pool) / n).sum(axis=1)
    e_zx = np.exp(w * (o_pool - x) / n).sum(axis=1)
    beaten_by = int((e_xz < e_zx).sum())  # -e_xz > -e_zx: x loses more
    return beaten_by / len(ranked)


def hamlet_samples(confidence: float, p: float) -> int:
    """Sample count for seeing an event of probability p at the given
    confidence: ceil(log(1-c) / log(1-p))."""
    if confidence == 0:
        return 0
    if not 0 < confidence < 1:
        raise ContractViolation("confidence must be in (0, 1)")
    if not 0 < p < 1:
        raise ContractViolation("p must be in (0, 1)")
    return math.ceil(math.log(1 - confidence) / math.log(1 - p))


@dataclass
class BenchRow:
    model: str
    algorithm: str
    seed: int
    d2h: float
    I: int
    median_S: float
    valid_fraction: float
    y_evals: int
    ms: float
    failed: bool = False
    max_S: int = 0  # bookkeeping only; not part of the report schema


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    repeats: int = 20

    def median(self, model: str, algorithm: str, attr: str = "d2h") -> float:
        vals = [
            getattr(r, attr)
            for r in self.rows
            if r.model == model and r.algorithm == algorithm and not r.failed
        ]
        if not vals:
            return float("nan")
        return statistics.median(vals)

    def models(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.model not in seen:
                seen.append(r.model)
        return seen

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["model", "algorithm", "seed", "d2h", "I", "median_S", "valid_fraction", "y_evals", "ms"]
        )
        for r in self.rows:
            writer.writerow(
                [
                    r.model,
                    r.algorithm,
                    r.seed,
                    "" if r.failed else repr(r.d2h),
                    r.I,
                    repr(r.median_S),
                    repr(r.valid_fraction),
                    r.y_evals,
                    f"{r.ms:.1f}",
                ]
            )
        return out.getvalue()


def run_algorithm(
    pool: CandidatePool,
    algorithm: str,
    seed: int,
    budget: Optional[BudgetConfig] = None,
) -> RunResult:
    if algorithm == "isneak":
        oracle = auto_oracle(oracle_schema(pool), seed)
        return run_isneak(pool, oracle, seed, budget)
    if algorithm == "nga":
        return nga_run(pool, NgaConfig(seed=seed))
    if algorithm == "flash":
        return flash_run(pool, FlashConfig(seed=seed))
    raise ContractViolation(f"unknown algorithm {algorithm!r}")


def score_result(result: RunResult, ranked: RankedPool) -> BenchRow:
    if result.best is None:
        return BenchRow(
            model=result.model,
            algorithm=result.algorithm,
            seed=result.seed,
            d2h=1.0,
            I=result.log.I,
            median_S=0.0,
            valid_fraction=result.extra.get("validity_fraction", 0.0),
            y_evals=result.log.y_evaluations,
            ms=result.wall_ms,
        )
    if result.best.index is not None:
        score = d2h(result.best.index, ranked)
    else:
        score = d2h_of_goals(result.best.goals, ranked)
    if result.algorithm == "isneak":
        valid_fraction = float(np.mean([c.valid for c in result.selected]))
    else:
        valid_fraction = result.extra.get("validity_fraction", 1.0)
    median_s = float(statistics.median(result.log.sizes)) if result.log.sizes else 0.0
    return BenchRow(
        model=result.model,
        algorithm=result.algorithm,
        seed=result.seed,
        d2h=score,
        I=result.log.I,
        median_S=median_s,
        valid_fraction=valid_fraction,
        y_evals=result.log.y_evaluations,
        ms=result.wall_ms,
        max_S=max(result.log.sizes, default=0),
    )


def bench(
    pools: Sequence[CandidatePool],
    algorithms: Sequence[str],
    repeats: int = 20,
    seed0: int = 0,
    out_dir: Optional[str] = None,
) -> BenchReport:
    """Run every algorithm on every pool over `repeats` seeds and score the
    results against the exhaustive ranking. Failed runs become failed rows."""
    report = BenchReport(repeats=repeats)
    out_path = Path(out_dir) if out_dir else None
    if out_path:
        out_path.mkdir(parents=True, exist_ok=True)
    for pool in pools:
        encode_pool(pool)
        ranked = rank_all(pool)
        for algorithm in algorithms:
            for seed in range(seed0, seed0 + repeats):
                try:
                    result = run_algorithm(pool, algorithm, seed)
                    row = score_result(result, ranked)
                except Exception:
                    row = BenchRow(
                        model=pool.name,
                        algorithm=algorithm,
                        seed=seed,
                        d2h=float("nan"),
                        I=0,
                        median_S=0.0,
                        valid_fraction=0.0,
                        y_evals=0,
                        ms=0.0,
                        failed=True,
                    )
                    result = None
                report.rows.append(row)
                if out_path and result is not None:
                    doc = result.to_dict(pool)
                    doc["d2h"] = row.d2h
                    name = f"{pool.name}_{algorithm}_{seed}.json"
                    (out_path / name).write_text(json.dumps(doc, indent=2))
    if out_path:
        (out_path / "report.csv").write_text(report.to_csv())
    return report


def sweep_S(
    pool: CandidatePool,
    s_values: Sequence[int],
    repeats: int = 20,
    seed0: int = 0,
) -> list[dict]:
    """Median interaction count per question-size cap.

    The per-run interaction guard is lifted here: the sweep exists to
    measure how far I climbs when questions carry fewer attributes.
    """
    encode_pool(pool)
    n_attrs = len(pool.attributes)
    for s in s_values:
        if not 1 <= s <= n_attrs:
            raise ContractViolation(f"question size {s} outside [1, {n_attrs}]")
    table = []
    for s in s_values:
        counts = []
        for seed in range(seed0, seed0 + repeats):
            oracle = auto_oracle(oracle_schema(pool), seed)
            budget = BudgetConfig(question_cap=s, max_interactions=10_000)
            result = run_isneak(pool, oracle, seed, budget)
            counts.append(result.log.I)
        table.append({"S": s, "median_I": float(statistics.median(counts))})
    return table
