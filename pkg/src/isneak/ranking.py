"""Domination predicates, attribute ranking, and question construction.

Continuous domination compares exponential losses: worse(x, y) holds when
abandoning y for x loses more than abandoning x for y. The preference
variant adds one more exponential term driven by the oracle-backed support
fraction P, with every exponent divided by n+1 instead of n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ContractViolation
from .geometry import ClusterNode
from .model_io import CandidatePool


@dataclass
class GoalView:
    """A candidate's goals scaled to 0..1 by the pool bounds."""

    normalized: np.ndarray
    weights: np.ndarray

    @property
    def n_goals(self) -> int:
        return len(self.normalized)


def normalize_goals(raw: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    lo = bounds[:, 0]
    hi = bounds[:, 1]
    span = hi - lo
    out = np.full(len(raw), 0.5)
    nz = span > 0
    out[nz] = (np.asarray(raw, dtype=float)[nz] - lo[nz]) / span[nz]
    return out


def goal_view(pool: CandidatePool, raw: np.ndarray) -> GoalView:
    return GoalView(
        normalized=normalize_goals(raw, pool.goal_bounds),
        weights=pool.objective_spec.weights,
    )


def boolean_dominates(x: GoalView, y: GoalView) -> bool:
    """Classical Pareto dominance: no weighted goal worse, at least one better."""
    if x.n_goals != y.n_goals:
        raise ContractViolation("goal dimension mismatch")
    dx = x.weights * x.normalized
    dy = y.weights * y.normalized
    return bool((dx >= dy).all() and (dx > dy).any())


def _loss(x: np.ndarray, y: np.ndarray, weights: np.ndarray, divisor: float) -> float:
    return float(-np.exp(weights * (x - y) / divisor).sum())


def zitzler_worse(x: GoalView, y: GoalView) -> bool:
    """Continuous domination: x is worse when leaving x loses less than leaving y."""
    if x.n_goals != y.n_goals:
        raise ContractViolation("goal dimension mismatch")
    n = x.n_goals
    return _loss(x.normalized, y.normalized, x.weights, n) > _loss(
        y.normalized, x.normalized, x.weights, n
    )


def pref_worse(x: GoalView, y: GoalView, p_x: float, p_y: float) -> bool:
    """Continuous domination with an extra preference-support term.

    The support fraction is weighted +1 (preferred-value coverage is
    maximized) and all exponents use divisor n+1.
    """
    if x.n_goals != y.n_goals:
        raise ContractViolation("goal dimension mismatch")
    n = x.n_goals
    loss_xy = _loss(x.normalized, y.normalized, x.weights, n + 1) - math.exp(
        (p_x - p_y) / (n + 1)
    )
    loss_yx = _loss(y.normalized, x.normalized, x.weights, n + 1) - math.exp(
        (p_y - p_x) / (n + 1)
    )
    return loss_xy > loss_yx


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    h = np.zeros_like(p, dtype=float)
    inner = (p > 0) & (p < 1)
    pi = p[inner]
    h[inner] = -(pi * np.log2(pi) + (1 - pi) * np.log2(1 - pi))
    return h


def infogain_rank(
    members: np.ndarray, half_labels: np.ndarray, pool: CandidatePool
) -> list[int]:
    """Attributes ordered by information gain about half membership.

    Gain is computed per one-hot column; a multi-column attribute scores by
    its best column. Ties break by ascending column index.
    """
    labels = np.asarray(half_labels, dtype=bool)
    m = len(labels)
    if labels.all() or not labels.any():
        raise ContractViolation("need both half labels present")
    enc = pool.encoded[np.asarray(members)]
    n1 = enc.sum(axis=0).astype(float)
    n0 = m - n1
    pos_total = labels.sum()
    pos1 = (enc & labels[:, None]).sum(axis=0).astype(float)
    pos0 = pos_total - pos1

    h_label = _binary_entropy(np.array([pos_total / m]))[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        p1 = np.where(n1 > 0, pos1 / np.maximum(n1, 1), 0.0)
        p0 = np.where(n0 > 0, pos0 / np.maximum(n0, 1), 0.0)
    gain = h_label - (n1 / m) * _binary_entropy(p1) - (n0 / m) * _binary_entropy(p0)

    ranked = []
    for ai, e in enumerate(pool.scheme.entries):
        cols = range(e.first_column, e.first_column + e.n_columns)
        best_col = min(cols, key=lambda c: (-gain[c], c))
        ranked.append((ai, gain[best_col], best_col))
    ranked.sort(key=lambda t: (-t[1], t[2]))
    return [ai for ai, _, _ in ranked]


@dataclass
class Question:
    qid: int
    node_id: int
    attribute_ids: list[int]
    option_a: list[tuple[int, int]]  # (attribute id, value index)
    option_b: list[tuple[int, int]]

    @property
    def size(self) -> int:
        return len(self.attribute_ids)

    def to_dict(self, pool: CandidatePool) -> dict:
        scheme = pool.scheme

        def side(option):
            return [
                {
                    "attr": scheme.entries[a].name,
                    "value": scheme.entries[a].value_label(v),
                }
                for a, v in option
            ]

        return {
            "id": self.qid,
            "optionA": side(self.option_a),
            "optionB": side(self.option_b),
        }


@dataclass
class Answer:
    choice: str  # "A" | "B"
    p_east: float = 0.0
    p_west: float = 0.0


def node_representatives(node: ClusterNode) -> tuple[int, int]:
    """One representative per half: the node's own east and west poles, the
    maximally separated pair (falling back to a child pole in the rare case
    a pole was median-split into the opposite half)."""
    east_child, west_child = node.children
    rep_east = node.east
    if np.searchsorted(east_child.members, rep_east) >= len(east_child.members) or (
        east_child.members[np.searchsorted(east_child.members, rep_east)] != rep_east
    ):
        rep_east = east_child.east
    rep_west = node.west
    if np.searchsorted(west_child.members, rep_west) >= len(west_child.members) or (
        west_child.members[np.searchsorted(west_child.members, rep_west)] != rep_west
    ):
        rep_west = west_child.east
    return int(rep_east), int(rep_west)


def build_question(
    node: ClusterNode,
    pool: CandidatePool,
    asked: set,
    cap: int = 6,
    qid: int = 0,
) -> Optional[Question]:
    """Question contrasting the two half representatives on their most
    informative unasked differing attributes. None when nothing is open."""
    if len(node.children) != 2:
        raise ContractViolation("question needs a node with two children")
    east_child, west_child = node.children
    item1, item2 = node_representatives(node)
    v1 = pool.value_idx[item1]
    v2 = pool.value_idx[item2]
    differ = np.where(v1 != v2)[0]
    open_attrs = [a for a in differ if a not in asked]
    if not open_attrs:
        return None

    labels = np.isin(node.members, west_child.members, assume_unique=True)
    order = infogain_rank(node.members, labels, pool)
    pos = {a: i for i, a in enumerate(order)}
    open_attrs.sort(key=lambda a: pos[a])
    chosen = open_attrs[: min(cap, len(open_attrs))]
    return Question(
        qid=qid,
        node_id=node.node_id,
        attribute_ids=chosen,
        option_a=[(a, int(v1[a])) for a in chosen],
        option_b=[(a, int(v2[a])) for a in chosen],
    )


def half_support(
    half_members: np.ndarray,
    selected_values: Sequence[tuple[int, int]],
    pool: CandidatePool,
) -> float:
    """Fraction of half members carrying at least one selected value."""
    if not len(selected_values):
        raise ContractViolation("selected values must be nonempty")
    members = np.asarray(half_members)
    if len(members) == 0:
        return 0.0
    mask = np.zeros(len(members), dtype=bool)
    for a, v in selected_values:
        mask |= pool.value_idx[members, a] == v
    return float(mask.mean())
