"""Comparison optimizers: a non-interactive genetic algorithm and FLASH-style
sequential model-based optimization with CART regression-tree surrogates."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractViolation, UnsupportedOperationError
from .engine import (
    EvalMeter,
    InteractionLog,
    RunResult,
    SelectedCandidate,
    zitzler_sort,
)
from .model_io import CandidatePool, validity_mask
from .preprocess import encode_pool
from .ranking import zitzler_worse


@dataclass
class NgaConfig:
    population: int = 100
    generations: int = 100
    crossover_rate: float = 0.90
    mutation_rate: Optional[float] = None  # defaults to 1/A
    seed: int = 0

    def __post_init__(self):
        if self.population <= 0 or self.generations <= 0:
            raise ContractViolation("population and generations must be positive")
        if not 0 <= self.crossover_rate <= 1:
            raise ContractViolation("crossover_rate must be in [0,1]")


@dataclass
class FlashConfig:
    m0: int = 60
    budget: int = 120
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.m0 < self.budget:
            raise ContractViolation("need 0 < m0 < budget")


def nga_run(pool: CandidatePool, config: NgaConfig) -> RunResult:
    """Generational GA: binary tournaments under continuous domination,
    single-point crossover, per-bit mutation at 1/A.

    Offspring validity is recorded but invalid offspring keep evolving;
    they are rejected only in the final report.
    """
    if pool.bits is None or pool.objective_spec is None:
        raise UnsupportedOperationError("the genetic baseline needs a feature-model pool")
    pfv = pool.objective_spec.per_feature_values
    if pfv is None:
        raise UnsupportedOperationError("the genetic baseline needs per-feature goal values")
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    n_attrs = pool.bits.shape[1]
    p_mut = config.mutation_rate if config.mutation_rate is not None else 1.0 / n_attrs
    meter = EvalMeter(pool)
    weights = pool.objective_spec.weights
    bounds = pool.goal_bounds

    valid_idx = np.where(pool.valid)[0]
    if len(valid_idx) < config.population:
        raise ContractViolation("pool has fewer valid candidates than the population size")
    chosen = rng.choice(valid_idx, size=config.population, replace=False)
    pop = pool.bits[chosen].copy()
    pop_goals = pool.peek_goals()[chosen].copy()  # pre-evaluated database rows
    pop_valid = np.ones(config.population, dtype=bool)

    def norm(goals):
        lo, hi = bounds[:, 0], bounds[:, 1]
        span = np.where(hi > lo, hi - lo, 1.0)
        out = (goals - lo) / span
        return np.where(bounds[:, 1] > bounds[:, 0], out, 0.5)

    def worse(gi, gj) -> bool:
        ni, nj = norm(gi), norm(gj)
        k = len(weights)
        li = -np.exp(weights * (ni - nj) / k).sum()
        lj = -np.exp(weights * (nj - ni) / k).sum()
        return li > lj

    def tournament() -> int:
        i, j = rng.integers(0, config.population, size=2)
        return int(j) if worse(pop_goals[i], pop_goals[j]) else int(i)

    def comparator_best(goals, mask=None) -> int:
        idxs = range(len(goals)) if mask is None else np.where(mask)[0]
        best = None
        for i in idxs:
            if best is None or worse(goals[best], goals[i]):
                best = int(i)
        return best

    for _gen in range(config.generations):
        elite = comparator_best(pop_goals)
        offspring = np.empty_like(pop)
        for k in range(config.population):
            p1 = pop[tournament()]
            if rng.random() < config.crossover_rate:
                p2 = pop[tournament()]
                cut = int(rng.integers(1, n_attrs))
                child = np.concatenate([p1[:cut], p2[cut:]])
            else:
                child = p1.copy()
            flips = rng.random(n_attrs) < p_mut
            child = child ^ flips
            offspring[k] = child
        off_goals = offspring.astype(float) @ pfv
        for k in range(config.population):
            meter.evaluate_external(off_goals[k])
        offspring[0] = pop[elite]
        off_goals[0] = pop_goals[elite]
        pop = offspring
        pop_goals = off_goals
        pop_valid = validity_mask(pool.model, pop)

    validity_fraction = float(pop_valid.mean())
    log = InteractionLog()
    log.y_evaluations = meter.count
    wall_ms = (time.perf_counter() - t0) * 1000.0

    if not pop_valid.any():
        return RunResult(
            algorithm="nga",
            model=pool.name,
            seed=config.seed,
            selected=[],
            best=None,
            log=log,
            wall_ms=wall_ms,
            extra={"validity_fraction": validity_fraction},
        )
    best_i = comparator_best(pop_goals, pop_valid)
    best = SelectedCandidate(
        index=None, goals=pop_goals[best_i].copy(), bits=pop[best_i].copy(), valid=True
    )
    return RunResult(
        algorithm="nga",
        model=pool.name,
        seed=config.seed,
        selected=[best],
        best=best,
        log=log,
        wall_ms=wall_ms,
        extra={"validity_fraction": validity_fraction},
    )


@dataclass
class _Node:
    col: int = -1
    value: float = 0.0
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None  # right = column true

    @property
    def is_leaf(self) -> bool:
        return self.col < 0


@dataclass
class RegressionTree:
    root: _Node
    n_columns: int


def cart_fit(X: np.ndarray, y: np.ndarray, min_node: int = 4) -> RegressionTree:
    """Greedy variance-reduction tree over boolean one-hot columns."""
    X = np.asarray(X, dtype=bool)
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ContractViolation("need at least 2 training rows")

    def build(idx: np.ndarray) -> _Node:
        sub_y = y[idx]
        node_var = float(sub_y.var())
        if len(idx) < min_node or node_var <= 0:
            return _Node(value=float(sub_y.mean()))
        sub_x = X[idx]
        n = len(idx)
        n1 = sub_x.sum(axis=0).astype(float)
        n0 = n - n1
        s1 = sub_x.T.astype(float) @ sub_y
        q1 = sub_x.T.astype(float) @ (sub_y * sub_y)
        s_all, q_all = sub_y.sum(), (sub_y * sub_y).sum()
        with np.errstate(invalid="ignore", divide="ignore"):
            var1 = q1 / np.maximum(n1, 1) - (s1 / np.maximum(n1, 1)) ** 2
            s0, q0 = s_all - s1, q_all - q1
            var0 = q0 / np.maximum(n0, 1) - (s0 / np.maximum(n0, 1)) ** 2
        splittable = (n1 > 0) & (n0 > 0)
        weighted = (n1 * var1 + n0 * var0) / n
        reduction = np.where(splittable, node_var - weighted, -np.inf)
        best = int(np.argmax(reduction))
        if reduction[best] <= 1e-12:
            return _Node(value=float(sub_y.mean()))
        mask = sub_x[:, best]
        return _Node(
            col=best,
            left=build(idx[~mask]),
            right=build(idx[mask]),
        )

    return RegressionTree(build(np.arange(len(y))), X.shape[1])


def cart_predict(tree: RegressionTree, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=bool)
    out = np.zeros(len(X))

    def walk(node: _Node, idx: np.ndarray):
        if node.is_leaf:
            out[idx] = node.value
            return
        mask = X[idx, node.col]
        walk(node.right, idx[mask])
        walk(node.left, idx[~mask])

    walk(tree.root, np.arange(len(X)))
    return out


def flash_run(pool: CandidatePool, config: FlashConfig) -> RunResult:
    """Sequential model-based optimization: evaluate m0 random candidates,
    then repeatedly fit one CART per goal and acquire the unevaluated
    candidate with the best randomly-projected predicted goals."""
    if pool.encoded is None:
        encode_pool(pool)
    if pool.n <= config.budget:
        raise ContractViolation("pool must be larger than the evaluation budget")
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    meter = EvalMeter(pool)
    X = pool.encoded
    weights = pool.objective_spec.weights
    n_goals = len(weights)

    evaluated = list(rng.choice(pool.n, size=config.m0, replace=False))
    goals = {int(i): meter.evaluate(int(i)).copy() for i in evaluated}

    while len(evaluated) < config.budget:
        mask = np.zeros(pool.n, dtype=bool)
        mask[evaluated] = True
        uneval = np.where(~mask)[0]
        if len(uneval) == 0:
            break
        train_y = np.array([goals[int(i)] for i in evaluated])
        train_x = X[evaluated]
        preds = np.zeros((len(uneval), n_goals))
        for j in range(n_goals):
            tree = cart_fit(train_x, train_y[:, j])
            preds[:, j] = cart_predict(tree, X[uneval])
        lo, hi = preds.min(axis=0), preds.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        norm = (preds - lo) / span
        # every candidate gets its own random projection of the predicted goals
        r = rng.random((len(uneval), n_goals))
        scores = (norm * weights * r).sum(axis=1)
        acquired = int(uneval[int(np.argmax(scores))])
        goals[acquired] = meter.evaluate(acquired).copy()
        evaluated.append(acquired)

    ordered = zitzler_sort(pool, [int(i) for i in evaluated], goals)
    best_i = ordered[0]
    best = SelectedCandidate(index=best_i, goals=goals[best_i], valid=bool(pool.valid[best_i]))
    log = InteractionLog()
    log.y_evaluations = meter.count
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return RunResult(
        algorithm="flash",
        model=pool.name,
        seed=config.seed,
        selected=[best],
        best=best,
        log=log,
        wall_ms=wall_ms,
    )
