"""The two-pass search.

Pass 1 walks the cluster tree top-down: repeatedly pick the highest-scoring
subtree, ask the oracle to choose between its two half representatives,
and prune the half the preference-augmented comparator ranks worse. Pass 2
re-clusters the survivors and prunes automatically by comparing evaluated
poles, returning roughly N^(1/4) candidates.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractViolation, OracleError
from .geometry import ClusterNode, _distances_to, _median_split, build_tree, pick_poles
from .model_io import CandidatePool, EvalMeter
from .preprocess import encode_pool
from .ranking import (
    Answer,
    Question,
    build_question,
    goal_view,
    half_support,
    node_representatives,
    pref_worse,
    zitzler_worse,
)


@dataclass
class BudgetConfig:
    question_cap: int = 6
    max_interactions: int = 30  # fatigue guard; typical runs stop well short

    @property
    def set_size(self) -> int:
        # one prune consumes one ranked attribute set: the informative top-6,
        # or more when the user accepts bigger questions
        return max(self.question_cap, 6)


@dataclass
class SubtreeScore:
    node: ClusterNode
    s_term: int
    gain_east: float
    gain_west: float
    open: float
    depth: int
    score: float


@dataclass
class Interaction:
    question: Question
    answer: Answer
    pruned: int


@dataclass
class InteractionLog:
    interactions: list[Interaction] = field(default_factory=list)
    sizes: list[int] = field(default_factory=list)
    y_evaluations: int = 0

    @property
    def I(self) -> int:  # noqa: E743 - the established name for interaction count
        return len(self.interactions)

    def to_dict(self, pool: CandidatePool) -> dict:
        return {
            "I": self.I,
            "sizes": list(self.sizes),
            "y_evaluations": self.y_evaluations,
            "interactions": [
                {
                    "question": it.question.to_dict(pool),
                    "answer": it.answer.choice,
                    "p_east": it.answer.p_east,
                    "p_west": it.answer.p_west,
                    "pruned": it.pruned,
                }
                for it in self.interactions
            ],
        }


@dataclass
class SelectedCandidate:
    index: Optional[int]  # pool index, None for evolved candidates
    goals: np.ndarray
    bits: Optional[np.ndarray] = None
    valid: bool = True


@dataclass
class RunResult:
    algorithm: str
    model: str
    seed: int
    selected: list[SelectedCandidate]
    best: Optional[SelectedCandidate]  # None when a run found nothing valid
    log: InteractionLog
    wall_ms: float
    extra: dict = field(default_factory=dict)

    def to_dict(self, pool: CandidatePool) -> dict:
        goal_names = pool.objective_spec.names

        def cand(c: SelectedCandidate) -> dict:
            if c.index is not None:
                assignment = {
                    e.name: e.value_label(int(pool.value_idx[c.index, ai]))
                    for ai, e in enumerate(pool.scheme.entries)
                }
            else:
                assignment = {
                    e.name: e.value_label(int(bool(c.bits[ai])))
                    for ai, e in enumerate(pool.scheme.entries)
                }
            return {
                "index": c.index,
                "assignment": assignment,
                "goals": {g: float(v) for g, v in zip(goal_names, c.goals)},
                "valid": bool(c.valid),
            }

        out = {
            "algorithm": self.algorithm,
            "model": self.model,
            "seed": self.seed,
            "selected": [cand(c) for c in self.selected],
            "best": cand(self.best) if self.best is not None else None,
            "log": self.log.to_dict(pool),
            "ms": self.wall_ms,
        }
        out.update(self.extra)
        return out


class Oracle:
    """Answer source for preference questions."""

    def answer(self, question: Question) -> str:
        raise NotImplementedError

    def rate(self, pairs) -> int:
        raise NotImplementedError


class AutoOracle(Oracle):
    """Seeded random priorities per (attribute, value) pair; answers pick the
    option with the larger priority sum (ties go to A)."""

    def __init__(self, schema: list[tuple[int, int]], seed: int):
        rng = random.Random(seed)
        self.priorities: dict[tuple[int, int], float] = {}
        for attr_id, n_values in schema:
            for v in range(n_values):
                self.priorities[(attr_id, v)] = rng.random()
        self.seed = seed

    def _score(self, pairs) -> float:
        return sum(self.priorities[(a, v)] for a, v in pairs)

    def answer(self, question: Question) -> str:
        return "A" if self._score(question.option_a) >= self._score(question.option_b) else "B"

    def rate(self, pairs) -> int:
        by_attr: dict[int, float] = {}
        for (a, v), p in self.priorities.items():
            by_attr[a] = max(by_attr.get(a, 0.0), p)
        best = sum(by_attr[a] for a, _ in pairs)
        if best <= 0:
            return 0
        return round(5 * self._score(pairs) / best)


def oracle_schema(pool: CandidatePool) -> list[tuple[int, int]]:
    """All (attribute id, value count) pairs of an encoded pool."""
    if pool.scheme is None:
        encode_pool(pool)
    return [(ai, e.n_values) for ai, e in enumerate(pool.scheme.entries)]


def candidate_pairs(pool: CandidatePool, index: int) -> list[tuple[int, int]]:
    """A candidate's full (attribute, value) assignment, for oracle rating."""
    if pool.value_idx is None:
        encode_pool(pool)
    row = pool.value_idx[index]
    return [(ai, int(v)) for ai, v in enumerate(row)]


def auto_oracle(schema: list[tuple[int, int]], seed: int) -> AutoOracle:
    return AutoOracle(schema, seed)


def _question_stats(node: ClusterNode, pool: CandidatePool, asked: set, cap: int):
    """(S, open fraction) of the node's buildable question, without ranking."""
    item1, item2 = node_representatives(node)
    v1 = pool.value_idx[item1]
    v2 = pool.value_idx[item2]
    differ = np.where(v1 != v2)[0]
    if len(differ) == 0:
        return 0, 0.0
    n_open = sum(1 for a in differ if a not in asked)
    return min(cap, 6, n_open), n_open / len(differ)


def score_subtrees(
    tree: ClusterNode, asked: set, pool: CandidatePool, cap: int = 6
) -> list[SubtreeScore]:
    """Score every live internal node with two live children; sorted descending."""
    out = []

    def walk(node: ClusterNode):
        if not node.alive or node.is_leaf:
            return
        e_child, w_child = node.children
        if e_child.alive and w_child.alive:
            s, open_frac = _question_stats(node, pool, asked, cap)
            ge = max(0.0, node.entropy - e_child.entropy)
            gw = max(0.0, node.entropy - w_child.entropy)
            score = s * ge * gw * open_frac / node.depth
            out.append(SubtreeScore(node, s, ge, gw, open_frac, node.depth, score))
        for ch in node.children:
            if ch.alive:
                walk(ch)

    walk(tree)
    out.sort(key=lambda s: (-s.score, s.depth, s.node.node_id))
    return out


def _kill(node: ClusterNode):
    node.alive = False
    for ch in node.children:
        _kill(ch)


def pass1(
    pool: CandidatePool,
    tree: ClusterNode,
    oracle: Oracle,
    budget: BudgetConfig,
    meter: EvalMeter,
    asked: Optional[set] = None,
) -> tuple[np.ndarray, InteractionLog]:
    """Preference-guided pruning until fewer than sqrt(N) candidates remain
    (or no subtree scores above zero). Attributes in `asked` are never
    presented (they count as already shown)."""
    log = InteractionLog()
    live = np.ones(pool.n, dtype=bool)
    threshold = math.sqrt(pool.n)
    asked = set() if asked is None else set(asked)
    qid = 0

    while live.sum() >= threshold and log.I < budget.max_interactions:
        scores = score_subtrees(tree, asked, pool, budget.question_cap)
        if not scores or scores[0].score <= 0:
            break
        node = scores[0].node
        # one prune consumes one ranked attribute set, shown to the oracle in
        # pages of at most question_cap values per interaction
        full = build_question(node, pool, asked, budget.set_size, qid)
        asked.update(full.attribute_ids)
        node.asked.update(full.attribute_ids)
        page_size = budget.question_cap
        pages = [
            (
                full.attribute_ids[i : i + page_size],
                full.option_a[i : i + page_size],
                full.option_b[i : i + page_size],
            )
            for i in range(0, len(full.attribute_ids), page_size)
        ]

        selected_values: list[tuple[int, int]] = []
        answers: list[tuple[Question, str]] = []
        for attrs, opt_a, opt_b in pages:
            question = Question(qid, node.node_id, list(attrs), list(opt_a), list(opt_b))
            qid += 1
            try:
                choice = oracle.answer(question)
            except Exception as e:
                err = OracleError(f"oracle failed on question {question.qid}: {e}")
                err.log = log
                raise err from e
            if choice not in ("A", "B"):
                err = OracleError(f"oracle returned {choice!r}, expected 'A' or 'B'")
                err.log = log
                raise err
            selected_values.extend(opt_a if choice == "A" else opt_b)
            answers.append((question, choice))

        east_child, west_child = node.children
        rep_east, rep_west = node_representatives(node)
        p_east = half_support(east_child.members, selected_values, pool)
        p_west = half_support(west_child.members, selected_values, pool)
        goals_east = meter.evaluate(rep_east)
        goals_west = meter.evaluate(rep_west)
        view_east = goal_view(pool, goals_east)
        view_west = goal_view(pool, goals_west)

        if pref_worse(view_east, view_west, p_east, p_west):
            doomed = east_child
        else:
            doomed = west_child  # covers west-worse and the exact tie
        _kill(doomed)
        live[doomed.members] = False
        for i, (question, choice) in enumerate(answers):
            final = i == len(answers) - 1
            log.interactions.append(
                Interaction(
                    question,
                    Answer(choice, p_east if final else 0.0, p_west if final else 0.0),
                    len(doomed.members) if final else 0,
                )
            )
            log.sizes.append(question.size)
        notify = getattr(oracle, "notify", None)
        if notify is not None:
            notify(log.I, int(live.sum()))

    return np.where(live)[0], log


def pass2_sway(
    survivors: np.ndarray,
    pool: CandidatePool,
    seed: int,
    meter: Optional[EvalMeter] = None,
) -> np.ndarray:
    """Automatic pruning: re-cluster the survivors, keep the half whose
    evaluated pole is not worse, stop at sqrt(survivor count) members."""
    survivors = np.asarray(survivors)
    if len(survivors) < 2:
        raise ContractViolation("pass 2 needs at least 2 survivors")
    if meter is None:
        meter = EvalMeter(pool)
    rng = random.Random(seed)
    stop = max(2.0, math.sqrt(len(survivors)))
    encoded = pool.encoded

    members = survivors
    while len(members) > stop:
        east, west, c, d_east = pick_poles(members, pool, rng)
        if c <= 0:
            break  # zero diameter, nothing left to separate
        b = _distances_to(encoded[west], members, encoded)
        east_half, west_half, _ = _median_split(members, d_east, b, c)
        view_east = goal_view(pool, meter.evaluate(east))
        view_west = goal_view(pool, meter.evaluate(west))
        if zitzler_worse(view_east, view_west):
            members = west_half
        else:
            members = east_half
    return members


def zitzler_sort(pool: CandidatePool, indices, goals_by_index=None) -> list[int]:
    """Stable sort best-first under the continuous-domination comparator."""
    import functools

    views = {}
    for i in indices:
        raw = goals_by_index[i] if goals_by_index is not None else pool.peek_goals()[i]
        views[i] = goal_view(pool, raw)

    def cmp(i, j):
        if zitzler_worse(views[i], views[j]):
            return 1
        if zitzler_worse(views[j], views[i]):
            return -1
        return 0

    return sorted(indices, key=functools.cmp_to_key(cmp))


def run_isneak(
    pool: CandidatePool,
    oracle: Oracle,
    seed: int,
    budget: Optional[BudgetConfig] = None,
) -> RunResult:
    """Full two-pass run over an encoded pool; deterministic per
    (pool, oracle state, seed)."""
    if pool.n < 16:
        raise ContractViolation("need a pool of at least 16 candidates")
    if pool.encoded is None:
        encode_pool(pool)
    budget = budget or BudgetConfig()
    t0 = time.perf_counter()
    meter = EvalMeter(pool)

    tree = build_tree(pool, seed)
    survivors, log = pass1(pool, tree, oracle, budget, meter)
    selected_idx = pass2_sway(survivors, pool, seed + 1, meter)

    goals = {int(i): meter.evaluate(int(i)).copy() for i in selected_idx}
    ordered = zitzler_sort(pool, [int(i) for i in selected_idx], goals)
    selected = [
        SelectedCandidate(index=i, goals=goals[i], valid=bool(pool.valid[i]))
        for i in ordered
    ]
    log.y_evaluations = meter.count
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return RunResult(
        algorithm="isneak",
        model=pool.name,
        seed=seed,
        selected=selected,
        best=selected[0],
        log=log,
        wall_ms=wall_ms,
    )
