"""Discretization and one-hot encoding.

Numeric decision attributes are cut into 16 equal-width bins, adjacent bins
are merged while the combined spread stays under the size-weighted spread of
the parts, and the pool is flattened to a boolean matrix for distance work.
Boolean model variables keep a single column (true <-> 1): a second column
would only double every Hamming distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractViolation
from .model_io import CandidatePool

DEFAULT_BINS = 16


@dataclass
class Bin:
    lo: float  # inclusive
    hi: float  # exclusive; last bin of an attribute is inclusive
    n: int
    mean: float
    sd: float

    def label(self) -> str:
        return f"[{self.lo:g}, {self.hi:g})"


def equal_width_bins(values, n_bins: int = DEFAULT_BINS) -> list[Bin]:
    """Cut values into n_bins equal-width bins spanning [min, max]."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise ContractViolation("cannot bin an empty column")
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        b = Bin(lo, lo + 1.0, int(vals.size), lo, 0.0)
        return [b]
    width = (hi - lo) / n_bins
    idx = np.minimum(((vals - lo) / width).astype(int), n_bins - 1)
    bins = []
    for k in range(n_bins):
        members = vals[idx == k]
        n = int(members.size)
        mean = float(members.mean()) if n else 0.0
        sd = float(members.std()) if n else 0.0  # population sd
        bins.append(Bin(lo + k * width, lo + (k + 1) * width, n, mean, sd))
    return bins


def _combine(a: Bin, b: Bin) -> Bin:
    n = a.n + b.n
    if n == 0:
        return Bin(a.lo, b.hi, 0, 0.0, 0.0)
    mean = (a.n * a.mean + b.n * b.mean) / n
    var = (
        a.n * (a.sd * a.sd + (a.mean - mean) ** 2)
        + b.n * (b.sd * b.sd + (b.mean - mean) ** 2)
    ) / n
    return Bin(a.lo, b.hi, n, mean, math.sqrt(max(var, 0.0)))


def merge_bins(bins: list[Bin]) -> list[Bin]:
    """Fold adjacent bins while the pooled spread does not exceed the
    size-weighted spread of the parts; empty bins always merge."""
    out = list(bins)
    merged = True
    while merged:
        merged = False
        i = 0
        while i + 1 < len(out):
            a, b = out[i], out[i + 1]
            k = _combine(a, b)
            if a.n == 0 or b.n == 0 or k.sd <= (a.n / k.n) * a.sd + (b.n / k.n) * b.sd:
                out[i : i + 2] = [k]
                merged = True
            else:
                i += 1
    return out


@dataclass
class AttributeEncoding:
    name: str
    kind: str  # "boolean" | "numeric" | "categorical"
    bins: Optional[list[Bin]]
    symbols: Optional[list[str]]
    first_column: int

    @property
    def n_columns(self) -> int:
        if self.kind == "boolean":
            return 1
        if self.kind == "numeric":
            return len(self.bins)
        return len(self.symbols)

    @property
    def n_values(self) -> int:
        # booleans carry two values on one column
        return 2 if self.kind == "boolean" else self.n_columns

    def value_index(self, raw) -> int:
        if self.kind == "boolean":
            return 1 if raw else 0
        if self.kind == "numeric":
            x = float(raw)
            if x < self.bins[0].lo or x > self.bins[-1].hi:
                raise ContractViolation(
                    f"value {x} outside encoded range of attribute {self.name!r}"
                )
            for i, b in enumerate(self.bins):
                if x < b.hi or (i == len(self.bins) - 1 and x <= b.hi):
                    return i
            return len(self.bins) - 1
        raw = str(raw)
        if raw not in self.symbols:
            raise ContractViolation(f"unknown symbol {raw!r} for attribute {self.name!r}")
        return self.symbols.index(raw)

    def value_label(self, value_index: int) -> str:
        if self.kind == "boolean":
            return "true" if value_index else "false"
        if self.kind == "numeric":
            return self.bins[value_index].label()
        return self.symbols[value_index]


class EncodingScheme:
    """Per-attribute bins/symbols and the one-hot column layout."""

    def __init__(self, entries: list[AttributeEncoding]):
        self.entries = entries
        self.total_columns = sum(e.n_columns for e in entries)

    def column_map(self) -> dict[tuple[int, int], int]:
        """(attribute index, bin-or-symbol index) -> one-hot column."""
        out = {}
        for ai, e in enumerate(self.entries):
            if e.kind == "boolean":
                out[(ai, 1)] = e.first_column
            else:
                for vi in range(e.n_columns):
                    out[(ai, vi)] = e.first_column + vi
        return out

    def to_json(self) -> str:
        doc = []
        for e in self.entries:
            entry = {"name": e.name, "kind": e.kind, "first_column": e.first_column}
            if e.bins is not None:
                entry["bins"] = [
                    {"lo": b.lo, "hi": b.hi, "n": b.n, "mean": b.mean, "sd": b.sd}
                    for b in e.bins
                ]
            if e.symbols is not None:
                entry["symbols"] = e.symbols
            doc.append(entry)
        return json.dumps({"attributes": doc}, indent=2)

    @staticmethod
    def from_json(text: str) -> "EncodingScheme":
        doc = json.loads(text)
        entries = []
        for d in doc["attributes"]:
            bins = None
            if "bins" in d:
                bins = [Bin(b["lo"], b["hi"], b["n"], b["mean"], b["sd"]) for b in d["bins"]]
            entries.append(
                AttributeEncoding(
                    name=d["name"],
                    kind=d["kind"],
                    bins=bins,
                    symbols=d.get("symbols"),
                    first_column=d["first_column"],
                )
            )
        return EncodingScheme(entries)


def build_scheme(pool: CandidatePool, n_bins: int = DEFAULT_BINS) -> EncodingScheme:
    entries = []
    col = 0
    for attr, raw in zip(pool.attributes, pool.raw_columns):
        if attr.kind == "boolean":
            e = AttributeEncoding(attr.name, "boolean", None, None, col)
        elif attr.kind == "numeric":
            bins = merge_bins(equal_width_bins(raw, n_bins))
            e = AttributeEncoding(attr.name, "numeric", bins, None, col)
        else:
            symbols = sorted(set(str(v) for v in raw))
            e = AttributeEncoding(attr.name, "categorical", None, symbols, col)
        entries.append(e)
        col += e.n_columns
    return EncodingScheme(entries)


def encode_pool(
    pool: CandidatePool,
    scheme: Optional[EncodingScheme] = None,
    n_bins: int = DEFAULT_BINS,
) -> tuple[CandidatePool, EncodingScheme]:
    """Attach a one-hot boolean matrix (and value-index matrix) to the pool."""
    if scheme is None:
        if pool.scheme is not None:
            return pool, pool.scheme
        scheme = build_scheme(pool, n_bins)

    n = pool.n
    encoded = np.zeros((n, scheme.total_columns), dtype=bool)
    value_idx = np.zeros((n, len(pool.attributes)), dtype=np.int32)
    for ai, (e, raw) in enumerate(zip(scheme.entries, pool.raw_columns)):
        if e.kind == "boolean":
            bits = np.asarray(raw, dtype=bool)
            encoded[:, e.first_column] = bits
            value_idx[:, ai] = bits.astype(np.int32)
        elif e.kind == "numeric":
            vals = np.asarray(raw, dtype=float)
            lo, hi = e.bins[0].lo, e.bins[-1].hi
            if vals.min() < lo or vals.max() > hi:
                raise ContractViolation(
                    f"attribute {e.name!r} has values outside the encoded range"
                )
            edges = np.array([b.hi for b in e.bins[:-1]])
            idx = np.searchsorted(edges, vals, side="right")
            value_idx[:, ai] = idx
            encoded[np.arange(n), e.first_column + idx] = True
        else:
            symbols = {s: i for i, s in enumerate(e.symbols)}
            try:
                idx = np.array([symbols[str(v)] for v in raw])
            except KeyError as err:
                raise ContractViolation(
                    f"unknown symbol {err.args[0]!r} for attribute {e.name!r}"
                )
            value_idx[:, ai] = idx
            encoded[np.arange(n), e.first_column + idx] = True

    pool.encoded = encoded
    pool.value_idx = value_idx
    pool.scheme = scheme
    return pool, scheme
