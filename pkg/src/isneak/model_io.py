"""Model and pool ingestion.

Covers DIMACS CNF parsing, validity checking, seeded AllSAT enumeration via
blocking clauses, synthetic feature-model generation, CSV candidate tables,
and per-feature goal evaluation with y-evaluation accounting.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ContractViolation,
    GenerationError,
    ParseError,
    SchemaError,
    UnsatisfiableModelError,
    UnsupportedOperationError,
)
from .sat import DpllSolver, SatBackend

# goal name, direction, value range, fraction of features with a nonzero value
# (cost only applies to bought-in features; defects need past history)
SYNTHETIC_GOALS = (
    ("effort", "minimize", 1.0, 10.0, 1.0),
    ("cost", "minimize", 0.0, 5.0, 0.3),
    ("defects", "minimize", 0.0, 4.0, 0.4),
    ("success", "maximize", 0.0, 10.0, 0.6),
)

GENERATION_RETRIES = 25


@dataclass(frozen=True)
class Goal:
    name: str
    direction: str  # "minimize" | "maximize"

    @property
    def weight(self) -> int:
        return 1 if self.direction == "maximize" else -1


@dataclass(frozen=True)
class ObjectiveSpec:
    """Named goals with direction weights, plus optional per-feature values."""

    goals: tuple[Goal, ...]
    per_feature_values: Optional[np.ndarray] = None  # (num_vars, n_goals)

    def __post_init__(self):
        if not self.goals:
            raise ContractViolation("objective spec needs at least one goal")
        names = [g.name for g in self.goals]
        if len(set(names)) != len(names):
            raise ContractViolation("goal names must be unique")
        for g in self.goals:
            if g.direction not in ("minimize", "maximize"):
                raise ContractViolation(f"bad goal direction: {g.direction}")

    @property
    def names(self) -> list[str]:
        return [g.name for g in self.goals]

    @property
    def weights(self) -> np.ndarray:
        return np.array([g.weight for g in self.goals], dtype=float)

    @property
    def n_goals(self) -> int:
        return len(self.goals)

    def to_sidecar_json(self) -> str:
        return json.dumps(
            {"objectives": [{"column": g.name, "goal": g.direction} for g in self.goals]},
            indent=2,
        )

    @staticmethod
    def from_sidecar_json(text: str) -> "ObjectiveSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"objective sidecar is not valid JSON: {e}") from e
        objs = doc.get("objectives")
        if not isinstance(objs, list) or not objs:
            raise SchemaError("sidecar must contain a non-empty 'objectives' list")
        goals = []
        for o in objs:
            if "column" not in o or "goal" not in o:
                raise SchemaError(f"objective entry missing column/goal: {o}")
            goals.append(Goal(str(o["column"]), str(o["goal"])))
        return ObjectiveSpec(tuple(goals))


@dataclass(frozen=True)
class CnfModel:
    """A CNF formula over boolean decision variables."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    var_names: tuple[str, ...]
    name: str = "cnf"

    def __post_init__(self):
        if self.num_vars < 1:
            raise ContractViolation("model needs at least one variable")
        if len(self.var_names) != self.num_vars:
            raise ContractViolation("var_names length must equal num_vars")
        seen = set()
        for nm in self.var_names:
            if not nm or nm in seen:
                raise ContractViolation(f"variable names must be unique and nonempty: {nm!r}")
            seen.add(nm)
        for c in self.clauses:
            if not c:
                raise ContractViolation("empty clause")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ContractViolation(f"literal {lit} out of range 1..{self.num_vars}")


@dataclass
class Attribute:
    name: str
    kind: str  # "boolean" | "numeric" | "categorical"


@dataclass
class Candidate:
    """One complete assignment to the decision attributes of a pool."""

    bits: Optional[np.ndarray]  # boolean decision vector (model pools)
    goals: Optional[np.ndarray]
    valid: bool
    pool: Optional["CandidatePool"] = None
    index: Optional[int] = None


class CandidatePool:
    """Immutable universe of candidates the search prunes.

    Goal vectors are stored internally for every candidate (they are needed
    for 0..1 normalization bounds and ground-truth ranking), but algorithms
    only see them through `y_evaluate`, which counts first evaluations.
    """

    def __init__(
        self,
        attributes: list[Attribute],
        raw_columns: list[np.ndarray],
        objective_spec: Optional[ObjectiveSpec],
        goals_matrix: Optional[np.ndarray],
        valid: np.ndarray,
        model: Optional[CnfModel] = None,
        bits: Optional[np.ndarray] = None,
        name: str = "pool",
    ):
        self.attributes = attributes
        self.raw_columns = raw_columns
        self.objective_spec = objective_spec
        self.model = model
        self.bits = bits
        self.name = name
        self.n = len(valid)
        self.valid = valid
        self._goals = goals_matrix
        if goals_matrix is not None:
            lo = goals_matrix.min(axis=0)
            hi = goals_matrix.max(axis=0)
            self.goal_bounds = np.stack([lo, hi], axis=1)
        else:
            self.goal_bounds = None
        self._evaluated = np.zeros(self.n, dtype=bool)
        self._lock = threading.Lock()
        self.y_evaluations = 0
        self.encoded: Optional[np.ndarray] = None
        self.value_idx: Optional[np.ndarray] = None  # (N, n_attrs) value indices
        self.scheme = None  # set by preprocess.encode_pool

    def __len__(self) -> int:
        return self.n

    def candidate(self, i: int) -> Candidate:
        if not 0 <= i < self.n:
            raise ContractViolation(f"candidate index {i} out of range")
        bits = self.bits[i] if self.bits is not None else None
        goals = self._goals[i].copy() if self._goals is not None and self._evaluated[i] else None
        return Candidate(bits=bits, goals=goals, valid=bool(self.valid[i]), pool=self, index=i)

    def y_evaluate(self, i: int) -> np.ndarray:
        """Return candidate i's goal vector, counting the first evaluation."""
        if self._goals is None:
            raise UnsupportedOperationError("pool has no objective data")
        with self._lock:
            if not self._evaluated[i]:
                self._evaluated[i] = True
                self.y_evaluations += 1
        return self._goals[i]

    def peek_goals(self) -> np.ndarray:
        """Ground-truth goal matrix; bypasses the evaluation counter.

        Only scoring code (full-pool ranking) may use this: those
        evaluations are outside every algorithm's budget.
        """
        if self._goals is None:
            raise UnsupportedOperationError("pool has no objective data")
        return self._goals

    def attribute_values(self, attr_index: int) -> np.ndarray:
        return self.raw_columns[attr_index]


class EvalMeter:
    """Per-run y-evaluation ledger over a shared pool."""

    def __init__(self, pool: CandidatePool):
        self.pool = pool
        self.seen: set[int] = set()
        self.external = 0

    def evaluate(self, i: int) -> np.ndarray:
        self.seen.add(int(i))
        return self.pool.y_evaluate(i)

    def evaluate_external(self, goals: np.ndarray) -> np.ndarray:
        self.external += 1
        return goals

    @property
    def count(self) -> int:
        return len(self.seen) + self.external


def parse_dimacs(text: str, name: str = "cnf") -> CnfModel:
    """Parse DIMACS CNF text into a CnfModel.

    Comment lines start with 'c'; a comment of the form `c var <i> <name>`
    names variable i. Exactly one `p cnf <vars> <clauses>` line is required.
    """
    num_vars = None
    declared_clauses = None
    names: dict[int, str] = {}
    clause_tokens: list[tuple[int, int]] = []  # (literal, line number)

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("c"):
            parts = stripped.split(maxsplit=3)
            if len(parts) == 4 and parts[1] == "var":
                try:
                    names[int(parts[2])] = parts[3].strip()
                except ValueError:
                    pass  # ordinary comment that happens to start with "c var"
            continue
        if stripped.startswith("p"):
            if num_vars is not None:
                raise ParseError("duplicate problem line", line=lineno)
            parts = stripped.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"malformed problem line: {stripped!r}", line=lineno)
            try:
                num_vars = int(parts[2])
                declared_clauses = int(parts[3])
            except ValueError:
                raise ParseError(f"malformed problem line: {stripped!r}", line=lineno)
            if num_vars < 1 or declared_clauses < 0:
                raise ParseError(f"bad counts in problem line: {stripped!r}", line=lineno)
            continue
        if num_vars is None:
            raise ParseError(f"clause before problem line: {stripped!r}", line=lineno)
        for tok in stripped.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal token {tok!r}", line=lineno)
            clause_tokens.append((lit, lineno))

    if num_vars is None:
        raise ParseError("missing problem line `p cnf <vars> <clauses>`")

    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for lit, lineno in clause_tokens:
        if lit == 0:
            if not current:
                raise ParseError("empty clause", line=lineno)
            clauses.append(tuple(current))
            current = []
        else:
            if abs(lit) > num_vars:
                raise ParseError(f"literal {lit} out of range 1..{num_vars}", line=lineno)
            current.append(lit)
    if current:
        raise ParseError("unterminated clause at end of file")
    if len(clauses) != declared_clauses:
        raise ParseError(
            f"clause count mismatch: declared {declared_clauses}, found {len(clauses)}"
        )

    var_names = tuple(names.get(i, f"x{i}") for i in range(1, num_vars + 1))
    return CnfModel(num_vars=num_vars, clauses=tuple(clauses), var_names=var_names, name=name)


def write_dimacs(model: CnfModel) -> str:
    lines = [f"c var {i + 1} {nm}" for i, nm in enumerate(model.var_names)]
    lines.append(f"p cnf {model.num_vars} {len(model.clauses)}")
    for c in model.clauses:
        lines.append(" ".join(str(lit) for lit in c) + " 0")
    return "\n".join(lines) + "\n"


def check_validity(model: CnfModel, bits: Sequence[bool]) -> bool:
    """True iff every clause has at least one satisfied literal."""
    if len(bits) != model.num_vars:
        raise ContractViolation(
            f"assignment length {len(bits)} != num_vars {model.num_vars}"
        )
    for clause in model.clauses:
        for lit in clause:
            if bool(bits[abs(lit) - 1]) == (lit > 0):
                break
        else:
            return False
    return True


def validity_mask(model: CnfModel, bits_matrix: np.ndarray) -> np.ndarray:
    """Vectorized check_validity over the rows of a (N, num_vars) bool matrix."""
    n_clauses = len(model.clauses)
    pos = np.zeros((model.num_vars, n_clauses), dtype=np.float32)
    neg = np.zeros((model.num_vars, n_clauses), dtype=np.float32)
    for j, clause in enumerate(model.clauses):
        for lit in clause:
            if lit > 0:
                pos[lit - 1, j] = 1.0
            else:
                neg[-lit - 1, j] = 1.0
    b = bits_matrix.astype(np.float32)
    sat = b @ pos + (1.0 - b) @ neg
    return (sat > 0.0).all(axis=1)


def enumerate_valid(
    model: CnfModel,
    count: int,
    seed: int,
    spec: Optional[ObjectiveSpec] = None,
    backend: Optional[SatBackend] = None,
) -> CandidatePool:
    """Enumerate up to `count` distinct valid assignments into a pool.

    After each solution its negation is added as a blocking clause before
    re-solving. Decision order and phases are reseeded per solution so the
    pool samples the valid space broadly while staying reproducible.
    """
    if count < 1:
        raise ContractViolation("count must be >= 1")
    rng = random.Random(seed)
    solver = backend if backend is not None else DpllSolver(model.num_vars, model.clauses)
    if backend is not None:
        for c in model.clauses:
            solver.add_clause(c)
    order = list(range(1, model.num_vars + 1))
    rows: list[list[bool]] = []
    while len(rows) < count:
        rng.shuffle(order)
        phases = [0] + [rng.getrandbits(1) for _ in range(model.num_vars)]
        sol = solver.solve(order, phases)
        if sol is None:
            break
        rows.append(sol[1:])
        solver.add_clause([-(v) if sol[v] else v for v in range(1, model.num_vars + 1)])
    if not rows:
        raise UnsatisfiableModelError(f"model {model.name!r} has no valid assignment")

    bits = np.array(rows, dtype=bool)
    goals = None
    if spec is not None and spec.per_feature_values is not None:
        goals = bits.astype(float) @ spec.per_feature_values
    attributes = [Attribute(nm, "boolean") for nm in model.var_names]
    raw_columns = [bits[:, i] for i in range(model.num_vars)]
    return CandidatePool(
        attributes=attributes,
        raw_columns=raw_columns,
        objective_spec=spec,
        goals_matrix=goals,
        valid=np.ones(len(rows), dtype=bool),
        model=model,
        bits=bits,
        name=model.name,
    )


def _mandatory_core(features: int, parents: dict[int, int], mandatory: set[int]) -> set[int]:
    # features reachable from the root through mandatory edges only
    core = {1}
    changed = True
    while changed:
        changed = False
        for f in range(2, features + 1):
            if f in mandatory and f not in core and parents[f] in core:
                core.add(f)
                changed = True
    return core


def generate_synthetic_model(
    features: int, constraint_ratio: float, seed: int
) -> tuple[CnfModel, ObjectiveSpec]:
    """Generate a random feature tree as CNF plus cross-tree constraints.

    The root is mandatory; every other feature hangs off a random earlier
    feature as a mandatory/optional child or as part of an or/alternative
    group. ceil(constraint_ratio * features) random requires/excludes
    constraints are added across subtrees, and the result is verified
    satisfiable (regenerating with a perturbed seed if not).
    """
    if features < 4:
        raise ContractViolation("need at least 4 features")
    if not 0 <= constraint_ratio <= 1.5:
        raise ContractViolation("constraint_ratio must be in [0, 1.5]")

    n_constraints = math.ceil(constraint_ratio * features)
    for attempt in range(GENERATION_RETRIES):
        rng = random.Random(seed + attempt * 7919)
        parents = {f: rng.randrange(1, f) for f in range(2, features + 1)}
        children: dict[int, list[int]] = {}
        for f, p in parents.items():
            children.setdefault(p, []).append(f)

        clauses: list[tuple[int, ...]] = [(1,)]
        mandatory: set[int] = set()
        for f, p in parents.items():
            clauses.append((-f, p))  # child implies parent
        for p, cs in sorted(children.items()):
            group: list[int] = []
            if len(cs) >= 2 and rng.random() < 0.5:
                k = rng.randint(2, len(cs))
                group = rng.sample(cs, k)
            for c in cs:
                if c in group:
                    continue
                if rng.random() < 0.12:
                    mandatory.add(c)
                    clauses.append((-p, c))
            if group:
                group.sort()
                clauses.append(tuple([-p] + group))  # parent implies some member
                if rng.random() < 0.4:  # alternative: members mutually exclusive
                    for i in range(len(group)):
                        for j in range(i + 1, len(group)):
                            clauses.append((-group[i], -group[j]))

        core = _mandatory_core(features, parents, mandatory)
        ancestors: dict[int, set[int]] = {1: set()}
        for f in range(2, features + 1):
            ancestors[f] = {parents[f]} | ancestors[parents[f]]
        # cross-tree constraints between non-core features: a requires edge out
        # of the always-true core would force its target everywhere, and core
        # pairs under excludes are outright unsatisfiable
        free = [f for f in range(2, features + 1) if f not in core]
        if len(free) < 4:
            continue

        ok = True
        seen_pairs: set[tuple[int, int]] = set()
        for _ in range(n_constraints):
            for _retry in range(200):
                a, b = rng.sample(free, 2)
                if a in ancestors[b] or b in ancestors[a] or (a, b) in seen_pairs:
                    continue
                break
            else:
                ok = False
                break
            seen_pairs.add((a, b))
            excludes = rng.random() < 0.25
            clauses.append((-a, -b) if excludes else (-a, b))
        if not ok:
            continue

        solver = DpllSolver(features, clauses)
        order = list(range(1, features + 1))
        rng.shuffle(order)
        phases = [0] + [rng.getrandbits(1) for _ in range(features)]
        if solver.solve(order, phases) is None:
            continue

        values = np.zeros((features, len(SYNTHETIC_GOALS)))
        vrng = random.Random(seed * 1000003 + 17)
        for i in range(features):
            for j, (_, _, lo, hi, density) in enumerate(SYNTHETIC_GOALS):
                present = vrng.random() < density
                values[i, j] = vrng.uniform(lo, hi) if present else 0.0
        spec = ObjectiveSpec(
            tuple(Goal(nm, d) for nm, d, _, _, _ in SYNTHETIC_GOALS),
            per_feature_values=values,
        )
        var_names = tuple(f"f{i}" for i in range(1, features + 1))
        model = CnfModel(
            num_vars=features,
            clauses=tuple(clauses),
            var_names=var_names,
            name=f"synth-{features}f-{constraint_ratio:g}cr",
        )
        return model, spec

    raise GenerationError(
        f"no satisfiable model for features={features}, ratio={constraint_ratio} "
        f"after {GENERATION_RETRIES} attempts"
    )


def _sniff_kind(cells: list[str]) -> str:
    vals = {c.strip() for c in cells}
    if vals <= {"0", "1"} or {v.lower() for v in vals} <= {"true", "false"}:
        return "boolean"
    try:
        for c in cells:
            float(c)
        return "numeric"
    except ValueError:
        return "categorical"


def load_candidate_table(
    csv_text: str, spec: ObjectiveSpec, name: str = "csv-pool"
) -> CandidatePool:
    """Load an externally generated candidate table.

    Goal columns are taken from the objective spec; every other column is a
    decision attribute. Externally generated pools are trusted as valid.
    """
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty candidate table")
    header = [h.strip() for h in header]
    for g in spec.names:
        if g not in header:
            raise SchemaError(f"goal column {g!r} missing from candidate table")
    goal_idx = {g: header.index(g) for g in spec.names}
    dec_cols = [(i, h) for i, h in enumerate(header) if h not in goal_idx]
    if not dec_cols:
        raise SchemaError("candidate table has no decision columns")

    rows = [row for row in reader if row]
    if not rows:
        raise ParseError("candidate table has no data rows")
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"row has {len(row)} cells, expected {len(header)}", line=r + 2)

    goals = np.zeros((len(rows), spec.n_goals))
    for j, g in enumerate(spec.names):
        col = goal_idx[g]
        for r, row in enumerate(rows):
            try:
                goals[r, j] = float(row[col])
            except ValueError:
                raise ParseError(f"non-numeric goal cell {row[col]!r} in column {g!r}", line=r + 2)

    attributes = []
    raw_columns = []
    for col, h in dec_cols:
        cells = [row[col] for row in rows]
        kind = _sniff_kind(cells)
        if kind == "boolean":
            vals = np.array([c.strip().lower() in ("1", "true") for c in cells], dtype=bool)
        elif kind == "numeric":
            vals = np.array([float(c) for c in cells])
        else:
            vals = np.array([c.strip() for c in cells], dtype=object)
        attributes.append(Attribute(h, kind))
        raw_columns.append(vals)

    return CandidatePool(
        attributes=attributes,
        raw_columns=raw_columns,
        objective_spec=spec,
        goals_matrix=goals,
        valid=np.ones(len(rows), dtype=bool),
        model=None,
        bits=None,
        name=name,
    )


def pool_to_csv(pool: CandidatePool) -> str:
    """Serialize a pool as a candidate table (decision columns then goals)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    goal_names = pool.objective_spec.names if pool.objective_spec else []
    writer.writerow([a.name for a in pool.attributes] + goal_names)
    goals = pool._goals
    for i in range(pool.n):
        row = []
        for a, col in zip(pool.attributes, pool.raw_columns):
            v = col[i]
            if a.kind == "boolean":
                row.append("1" if v else "0")
            else:
                row.append(v)
        if goals is not None:
            row.extend(repr(float(g)) for g in goals[i])
        writer.writerow(row)
    return out.getvalue()


def evaluate_goals(candidate: Candidate, spec: ObjectiveSpec) -> np.ndarray:
    """Goal vector of a feature-model candidate: sum of per-feature values
    over the features set true. Cached per candidate; pool-bound candidates
    also feed the pool's y-evaluation counter."""
    if candidate.goals is not None:
        return candidate.goals
    if spec.per_feature_values is None:
        raise UnsupportedOperationError(
            "objective spec has no per-feature values; CSV pools carry their own goals"
        )
    if candidate.pool is not None and candidate.index is not None:
        goals = candidate.pool.y_evaluate(candidate.index).copy()
    else:
        goals = spec.per_feature_values[np.asarray(candidate.bits, dtype=bool)].sum(axis=0)
    candidate.goals = goals
    return goals


def feature_values_to_csv(spec: ObjectiveSpec, var_names: Sequence[str]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["feature"] + spec.names)
    for i, nm in enumerate(var_names):
        writer.writerow([nm] + [repr(float(v)) for v in spec.per_feature_values[i]])
    return out.getvalue()


def feature_values_from_csv(text: str, spec: ObjectiveSpec, var_names: Sequence[str]) -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[0] != "feature":
        raise SchemaError("per-feature table must start with a 'feature' column")
    col_of = {}
    for g in spec.names:
        if g not in header:
            raise SchemaError(f"per-feature table missing goal column {g!r}")
        col_of[g] = header.index(g)
    by_name = {}
    for row in reader:
        if row:
            by_name[row[0]] = row
    values = np.zeros((len(var_names), spec.n_goals))
    for i, nm in enumerate(var_names):
        if nm not in by_name:
            raise SchemaError(f"per-feature table missing feature {nm!r}")
        for j, g in enumerate(spec.names):
            values[i, j] = float(by_name[nm][col_of[g]])
    return values
