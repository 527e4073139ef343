"""Brute-force ground truth: full joins and exact set arithmetic over their results."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .errors import CapacityError
from .joins import JoinSpec, natural_join
from .relation import no_gc

DEFAULT_ROW_CAP = 10**6


def nested_loop_join(spec: JoinSpec, row_cap: int = DEFAULT_ROW_CAP) -> set:
    """Result set by scanning every relation per partial binding; no indexes."""
    schema = spec.output_schema
    rels = sorted(spec.relations, key=lambda r: r.name)
    out: set = set()
    binding: dict = {}

    def rec(i: int) -> None:
        if i == len(rels):
            out.add(tuple(binding[a] for a in schema))
            if len(out) > row_cap:
                raise CapacityError(_cap_message(spec, row_cap))
            return
        r = rels[i]
        for row in r.rows:
            added = []
            ok = True
            for a, v in zip(r.schema, row):
                if a in binding:
                    if binding[a] != v:
                        ok = False
                        break
                else:
                    binding[a] = v
                    added.append(a)
            if ok:
                rec(i + 1)
            for a in added:
                del binding[a]

    rec(0)
    return out


def hash_join(spec: JoinSpec, row_cap: int = DEFAULT_ROW_CAP) -> set:
    try:
        with no_gc():
            out = set(natural_join(spec.relations, spec.id, row_cap).rows)
    except CapacityError:
        raise CapacityError(_cap_message(spec, row_cap)) from None
    if len(out) > row_cap:
        raise CapacityError(_cap_message(spec, row_cap))
    return out


def _cap_message(spec: JoinSpec, row_cap: int) -> str:
    counts = ", ".join(f"{r.name}={len(r)}" for r in spec.relations)
    return f"join {spec.id!r} exceeds oracle row cap {row_cap} (relation rows: {counts})"


@dataclass
class OracleResult:
    ids: tuple
    results: dict  # id -> set of rows
    overlaps: dict  # frozenset -> int, singletons included
    table: dict  # id -> {k: |A_j^k|}
    union: set
    cover: dict  # id -> |J'_j| under ``ordering``
    ordering: tuple

    @property
    def union_size(self) -> int:
        return len(self.union)

    @property
    def sizes(self) -> dict:
        return {j: len(self.results[j]) for j in self.ids}


def oracle(specs: Sequence[JoinSpec], method: str = "hash", row_cap: int = DEFAULT_ROW_CAP,
           ordering: Sequence[str] | None = None) -> OracleResult:
    """Exact per-join results, every |O_Δ|, |A_j^k|, |U| and cover sizes.

    ``ordering`` defaults to descending join size, ties by id.
    """
    join = nested_loop_join if method == "nested" else hash_join
    ids = tuple(s.id for s in specs)
    results = {s.id: join(s, row_cap) for s in specs}
    with no_gc():
        return from_results(ids, results, ordering)


def from_results(ids: Sequence[str], results: dict, ordering: Sequence[str] | None = None) -> OracleResult:
    ids = tuple(ids)
    overlaps = {}
    for k in range(1, len(ids) + 1):
        for d in combinations(ids, k):
            overlaps[frozenset(d)] = len(set.intersection(*(results[j] for j in d)))
    union = set().union(*results.values()) if results else set()
    member = Counter(u for j in ids for u in results[j])
    table = {j: {k: 0 for k in range(1, len(ids) + 1)} for j in ids}
    for j in ids:
        for u in results[j]:
            table[j][member[u]] += 1
    order = tuple(ordering) if ordering is not None else tuple(sorted(ids, key=lambda j: (-len(results[j]), j)))
    seen: set = set()
    cover = {}
    for j in order:
        cover[j] = len(results[j] - seen)
        seen |= results[j]
    return OracleResult(ids, results, overlaps, table, union, cover, order)
