"""Boolean distance, FASTMAP pole selection, and the recursive cluster tree.

Pole finding uses the linear-time heuristic (pivot -> furthest -> furthest),
which costs exactly 2n distance computations for n members. Projection onto
the east-west line uses the cosine rule with denominator 2c, so the east
pole lands at x = 0.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractViolation
from .model_io import CandidatePool


def distance(u: np.ndarray, v: np.ndarray) -> float:
    """Normalized Hamming distance between two boolean vectors."""
    if len(u) != len(v):
        raise ContractViolation(f"vector lengths differ: {len(u)} != {len(v)}")
    return float((np.asarray(u, dtype=bool) != np.asarray(v, dtype=bool)).mean())


@dataclass
class Projection:
    a: float  # distance to east pole
    b: float  # distance to west pole
    c: float  # east-west distance
    x: float  # position on the east->west line


def project(a: float, b: float, c: float) -> Projection:
    if c <= 0:
        raise ContractViolation("projection needs c > 0")
    return Projection(a, b, c, (a * a + c * c - b * b) / (2 * c))


@dataclass
class ClusterNode:
    members: np.ndarray  # pool indices, ascending
    depth: int
    entropy: float
    east: Optional[int] = None
    west: Optional[int] = None
    c: float = 0.0
    children: tuple = ()
    asked: set = field(default_factory=set)
    alive: bool = True
    node_id: int = 0

    @property
    def is_leaf(self) -> bool:
        return not self.children


def _distances_to(pool_row: np.ndarray, members: np.ndarray, encoded: np.ndarray) -> np.ndarray:
    return np.array([distance(pool_row, encoded[m]) for m in members])


def pick_poles(members: np.ndarray, pool: CandidatePool, rng: random.Random):
    """FASTMAP pole heuristic: random pivot, east = furthest from pivot,
    west = furthest from east. Exactly 2*len(members) distance calls."""
    members = np.asarray(members)
    if len(members) < 2:
        raise ContractViolation("pole selection needs at least 2 members")
    encoded = pool.encoded
    pivot = int(members[rng.randrange(len(members))])
    d_pivot = _distances_to(encoded[pivot], members, encoded)
    east = int(members[int(np.argmax(d_pivot))])
    d_east = _distances_to(encoded[east], members, encoded)
    west = int(members[int(np.argmax(d_east))])
    c = float(d_east.max())
    return east, west, c, d_east


def project_and_split(node: ClusterNode, pool: CandidatePool):
    """Project members onto the east-west line and split at the median x.

    Returns (east_half, west_half, x_values) or None when the node has zero
    diameter (unsplittable; the caller keeps it as a leaf).
    """
    if node.east is None or node.c <= 0:
        return None
    encoded = pool.encoded
    members = node.members
    a = _distances_to(encoded[node.east], members, encoded)
    b = _distances_to(encoded[node.west], members, encoded)
    return _median_split(members, a, b, node.c)


def _median_split(members: np.ndarray, a: np.ndarray, b: np.ndarray, c: float):
    x = (a * a + c * c - b * b) / (2 * c)
    order = np.argsort(x, kind="stable")  # ties keep ascending pool-index order
    cut = (len(members) + 1) // 2
    east_half = np.sort(members[order[:cut]])
    west_half = np.sort(members[order[cut:]])
    return east_half, west_half, x


def column_entropy(encoded_rows: np.ndarray) -> float:
    """Mean over columns of the Shannon entropy of each column's true rate."""
    p = encoded_rows.mean(axis=0)
    h = np.zeros_like(p)
    inner = (p > 0) & (p < 1)
    pi = p[inner]
    h[inner] = -(pi * np.log2(pi) + (1 - pi) * np.log2(1 - pi))
    return float(h.mean())


def build_tree(pool: CandidatePool, seed: int) -> ClusterNode:
    """Recursive FASTMAP bi-clustering down to nodes of < sqrt(N) members."""
    if pool.encoded is None:
        raise ContractViolation("pool must be encoded before clustering")
    if pool.n < 4:
        raise ContractViolation("pool too small to cluster")
    rng = random.Random(seed)
    threshold = math.sqrt(pool.n)
    encoded = pool.encoded
    counter = [0]

    def make(members: np.ndarray, depth: int) -> ClusterNode:
        node = ClusterNode(
            members=members,
            depth=depth,
            entropy=column_entropy(encoded[members]),
            node_id=counter[0],
        )
        counter[0] += 1
        if len(members) < threshold or len(members) < 2:
            node.east = node.west = int(members[0])
            return node
        east, west, c, d_east = pick_poles(members, pool, rng)
        node.east, node.west, node.c = east, west, c
        if c <= 0:
            return node  # zero diameter: all members identical
        b = _distances_to(encoded[west], members, encoded)
        east_half, west_half, _ = _median_split(members, d_east, b, c)
        node.children = (make(east_half, depth + 1), make(west_half, depth + 1))
        return node

    return make(np.arange(pool.n), 1)


def tree_to_dict(node: ClusterNode) -> dict:
    d = {
        "id": node.node_id,
        "depth": node.depth,
        "size": int(len(node.members)),
        "entropy": node.entropy,
    }
    if node.east is not None:
        d["east"] = node.east
        d["west"] = node.west
        d["c"] = node.c
    if node.children:
        d["children"] = [tree_to_dict(ch) for ch in node.children]
    return d


def tree_to_json(node: ClusterNode) -> str:
    return json.dumps(tree_to_dict(node), indent=2)
