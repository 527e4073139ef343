"""Overlap sizes, k-overlap tables, union size and cover sizes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from statistics import NormalDist
from typing import Callable, Mapping, Sequence

from .errors import AlignmentError, IncompleteInputError, InsufficientSampleError, ParameterError
from .relation import Relation
from .sampler import WalkSample
from .template import LinkKind, Source, SplitJoin

log = logging.getLogger(__name__)

MAX_JOINS = 8


@dataclass
class OverlapBound:
    delta: frozenset
    value: float
    method: str  # "histogram" | "walk" | "exact"
    ci_halfwidth: float | None = None
    std_error: float | None = None
    k_sequence: tuple = ()


# -- per-source statistics ----------------------------------------------------


class SourceStats:
    """Degree statistics of a split source.

    Exact for a single relation. For a merged source they are upper bounds:
    a row of member x extends to at most C_x rows of the group, where C_x is
    the product of every other member's max degree on its key toward x.
    """

    def __init__(self, source: Source):
        self.source = source
        self.rels = source.relations
        self._deg: dict = {}
        self._cont: dict = {}
        if source.merged:
            self._completion = [self._completion_from(x) for x in range(len(self.rels))]

    def _completion_from(self, x: int) -> int:
        adj = {i: set() for i in range(len(self.rels))}
        for i, j in self.source.edges:
            adj[i].add(j)
            adj[j].add(i)
        total, seen, stack = 1, {x}, [x]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v in seen:
                    continue
                seen.add(v)
                stack.append(v)
                key = tuple(sorted(set(self.rels[u].schema) & set(self.rels[v].schema)))
                total *= self.rels[v].ensure_stats(key).max_degree
        return total

    def degree(self, attr: str) -> dict:
        if attr not in self._deg:
            if not self.source.merged:
                self._deg[attr] = self.rels[0].ensure_stats(attr).degree
            else:
                holders = [i for i, r in enumerate(self.rels) if attr in r.schema]
                maps = [(self.rels[i].ensure_stats(attr).degree, self._completion[i]) for i in holders]
                maps.sort(key=lambda m: len(m[0]))
                out = {}
                for v, d in maps[0][0].items():
                    best = d * maps[0][1]
                    for other, c in maps[1:]:
                        dv = other.get(v, 0)
                        if not dv:
                            best = 0
                            break
                        best = min(best, dv * c)
                    if best:
                        out[v] = best
                self._deg[attr] = out
        return self._deg[attr]

    def max_degree(self, attr: str) -> int:
        return max(self.degree(attr).values(), default=0)

    def avg_degree(self, attr: str) -> float:
        d = self.degree(attr)
        return sum(d.values()) / len(d) if d else 0.0

    def continuation(self, attr: str, nxt: str) -> int:
        """Max number of distinct ``nxt`` values following one prefix inside the source.

        The prefix is every run attribute up to and including ``attr``. For a
        single relation this is 1 exactly when the prefix determines ``nxt``.
        """
        key = (attr, nxt)
        if key not in self._cont:
            if self.source.merged:
                self._cont[key] = self.max_degree(attr)
            else:
                r: Relation = self.rels[0]
                run = self.source.run
                prefix = run[: run.index(attr) + 1]
                pp = [r.schema.index(a) for a in prefix]
                np_ = r.schema.index(nxt)
                groups: dict = {}
                for row in r.rows:
                    groups.setdefault(tuple(row[p] for p in pp), set()).add(row[np_])
                self._cont[key] = max((len(g) for g in groups.values()), default=0)
        return self._cont[key]


# -- histogram bound ----------------------------------------------------------


class HistogramOverlap:
    """Histogram overlap bounds over aligned SplitJoins, memoized across subsets.

    ``fake_mode="distinct"`` (default) multiplies a fake link by the number of
    distinct continuations inside the source, which keeps the bound sound when
    a relation's leading attributes do not determine the next one.
    ``fake_mode="one"`` uses a constant 1, which can undershoot in that case.
    """

    def __init__(self, splits: Mapping[str, SplitJoin], avg_degree: bool = False, fake_mode: str = "distinct"):
        if fake_mode not in ("distinct", "one"):
            raise ParameterError(f"fake_mode must be 'distinct' or 'one', got {fake_mode!r}")
        self.splits = dict(splits)
        orders = {s.order for s in self.splits.values()}
        if len(orders) > 1:
            raise AlignmentError(f"splits use different attribute orders: {sorted(orders)}")
        self.order = next(iter(orders))
        self.avg_degree = avg_degree
        self.fake_mode = fake_mode
        self.stats = {j: [SourceStats(src) for src in s.sources] for j, s in self.splits.items()}
        self._terms = {j: self._first_terms(j) for j in self.splits}
        self._mults = {j: self._multipliers(j) for j in self.splits}
        self._memo: dict = {}

    def _first_terms(self, j: str) -> dict:
        sj, st = self.splits[j], self.stats[j]
        if len(sj.subs) == 1:
            return dict(st[sj.subs[0].source].degree(self.order[1]))
        a1 = self.order[1]
        left, right = st[sj.subs[0].source], st[sj.subs[1].source]
        if sj.kinds[0] is LinkKind.FAKE:
            return dict(left.degree(a1))
        dl, dr = left.degree(a1), right.degree(a1)
        if len(dr) < len(dl):
            dl, dr = dr, dl
        return {v: d * dr[v] for v, d in dl.items() if v in dr}

    def _multipliers(self, j: str) -> list:
        sj, st = self.splits[j], self.stats[j]
        out = []
        for k in range(1, len(sj.kinds)):
            attr, nxt = self.order[k + 1], self.order[k + 2]
            src = st[sj.subs[k + 1].source]
            if sj.kinds[k] is LinkKind.REAL:
                out.append(src.avg_degree(attr) if self.avg_degree else src.max_degree(attr))
            elif self.fake_mode == "one":
                out.append(1)
            else:
                out.append(src.continuation(attr, nxt))
        return out

    def _terms_for(self, delta: frozenset) -> dict:
        if delta in self._memo:
            return self._memo[delta]
        if len(delta) == 1:
            (j,) = delta
            terms = self._terms[j]
        else:
            last = max(delta)
            base = self._terms_for(delta - {last})
            other = self._terms[last]
            if len(other) < len(base):
                terms = {v: min(d, base[v]) for v, d in other.items() if v in base}
            else:
                terms = {v: min(d, other[v]) for v, d in base.items() if v in other}
        self._memo[delta] = terms
        return terms

    def bound(self, delta) -> OverlapBound:
        delta = frozenset(delta)
        missing = delta - set(self.splits)
        if missing:
            raise IncompleteInputError(f"no split for joins {sorted(missing)}")
        k = sum(self._terms_for(delta).values())
        seq = [k]
        n_mult = len(next(iter(self._mults.values())))
        for i in range(n_mult):
            k = k * min(self._mults[j][i] for j in delta)
            seq.append(k)
        return OverlapBound(delta, k, "histogram", k_sequence=tuple(seq))


def histogram_overlap(splits: Sequence[SplitJoin], avg_degree: bool = False, fake_mode: str = "distinct") -> OverlapBound:
    """Upper bound on the common result tuples of the joins behind ``splits``."""
    if not splits:
        raise IncompleteInputError("no splits given")
    h = HistogramOverlap({s.source: s for s in splits}, avg_degree, fake_mode)
    return h.bound(h.splits)


# -- random-walk estimate ---------------------------------------------------------


def z_value(confidence: float) -> float:
    return NormalDist().inv_cdf(0.5 + confidence / 2)


def walk_overlap(delta, anchor: str, samples: Sequence[WalkSample],
                 membership: Mapping[str, Callable], size_j: float | None = None,
                 confidence: float = 0.9, variance: str = "corrected") -> OverlapBound:
    """Estimate |O_delta| from walks over the anchor join.

    Each successful anchor walk is weighted by 1/p; the estimate is the anchor
    size times the weighted share of walks whose row lies in every join of
    delta. ``size_j`` defaults to the Horvitz-Thompson size from the same walks.

    The half-width uses the product-of-independent-terms variance
    T2*q(1-q) + T2*q + T^2*q(1-q), with T the mean and T2 the variance of the
    per-walk terms and q the weighted share. ``variance="literal"`` replaces
    T^2 by T in the last term.
    """
    delta = frozenset(delta)
    if anchor not in delta:
        raise ParameterError(f"anchor {anchor!r} is not in {sorted(delta)}")
    n = len(samples)
    f = [1.0 / s.p if s.ok else 0.0 for s in samples]
    w_all = sum(f)
    if n == 0 or w_all == 0:
        raise InsufficientSampleError(f"no successful walks over {anchor!r}")
    others = [membership[j] for j in sorted(delta - {anchor})]
    w_in = sum(fi for fi, s in zip(f, samples) if s.ok and all(m(s.row) for m in others))
    t_mean = w_all / n
    t_var = sum((fi - t_mean) ** 2 for fi in f) / (n - 1) if n > 1 else 0.0
    q = w_in / w_all
    size = t_mean if size_j is None else size_j
    if variance == "literal":
        var = t_var * q * (1 - q) + t_var * q + t_mean * q * (1 - q)
    elif variance == "corrected":
        var = t_var * q * (1 - q) + t_var * q + t_mean**2 * q * (1 - q)
    else:
        raise ParameterError(f"unknown variance form {variance!r}")
    se = math.sqrt(var / n)
    return OverlapBound(delta, size * q, "walk", ci_halfwidth=z_value(confidence) * se, std_error=se)


def confidence_for(std_error: float | None, tolerance: float) -> float:
    """Confidence level at which the interval half-width equals ``tolerance``."""
    if std_error is None or std_error == 0:
        return 1.0
    return 2 * NormalDist().cdf(tolerance / std_error) - 1


# -- k-overlap table, union size, cover -------------------------------------------


@dataclass
class KOverlapTable:
    ids: tuple
    a: dict  # a[j][k] = |A_j^k|, k = 1..n
    union_size: float
    warnings: list = field(default_factory=list)


def _get(overlaps: Mapping, ids) -> float:
    key = frozenset(ids)
    if key not in overlaps:
        raise IncompleteInputError(f"missing overlap for {sorted(key)}")
    return overlaps[key]


def k_overlap_table(ids: Sequence[str], overlaps: Mapping[frozenset, float], clamp: bool = True) -> KOverlapTable:
    """|A_j^k| for every join and level by peeling higher levels off subset sums.

    ``overlaps`` maps frozensets of join ids (singletons give |J_j|) to sizes.
    With integer inputs the arithmetic is exact and |U| is returned as an int
    when integral.
    """
    ids = tuple(ids)
    n = len(ids)
    if n > MAX_JOINS:
        raise ParameterError(f"k-overlap table supports at most {MAX_JOINS} joins, got {n}")
    exact = all(isinstance(_get(overlaps, d), int) for k in range(1, n + 1) for d in combinations(ids, k))
    warnings = []
    a = {j: {} for j in ids}
    for j in ids:
        rest = [x for x in ids if x != j]
        for k in range(n, 0, -1):
            s = sum(_get(overlaps, (j,) + d) for d in combinations(rest, k - 1))
            for r in range(k + 1, n + 1):
                s -= math.comb(r - 1, k - 1) * a[j][r]
            if s < 0 and clamp:
                warnings.append(f"A[{j}][{k}] = {s} clamped to 0")
                log.debug("k-overlap A[%s][%d] = %s clamped to 0", j, k, s)
                s = 0
            a[j][k] = s
    if exact:
        u = sum(Fraction(a[j][k], k) for j in ids for k in range(1, n + 1))
        union = int(u) if u.denominator == 1 else float(u)
    else:
        union = sum(a[j][k] / k for j in ids for k in range(1, n + 1))
    return KOverlapTable(ids, a, union, warnings)


@dataclass
class Cover:
    ordering: tuple
    sizes: dict
    total: float
    warnings: list = field(default_factory=list)


def default_ordering(ids: Sequence[str], overlaps: Mapping[frozenset, float]) -> tuple:
    return tuple(sorted(ids, key=lambda j: (-_get(overlaps, (j,)), j)))


def cover_sizes(ids: Sequence[str], overlaps: Mapping[frozenset, float], ordering: Sequence[str] | None = None) -> Cover:
    """Sizes of J'_i = J_i minus every earlier join in the ordering (inclusion-exclusion)."""
    order = tuple(ordering) if ordering is not None else default_ordering(ids, overlaps)
    if sorted(order) != sorted(ids):
        raise ParameterError(f"ordering {order} is not a permutation of {tuple(ids)}")
    sizes, warnings = {}, []
    for i, j in enumerate(order):
        full = _get(overlaps, (j,))
        s = full
        for m in range(1, i + 1):
            sign = -1 if m % 2 else 1
            for d in combinations(order[:i], m):
                s += sign * _get(overlaps, d + (j,))
        if s and abs(s) <= 1e-9 * max(1.0, abs(full)):
            s = 0  # float residue of inclusion-exclusion
        if s < 0:
            warnings.append(f"|J'_{j}| = {s} clamped to 0")
            log.debug("cover size for %s = %s clamped to 0", j, s)
            s = 0
        elif s > full:
            warnings.append(f"|J'_{j}| = {s} clamped to |J_{j}| = {full}")
            s = full
        sizes[j] = s
    return Cover(order, sizes, sum(sizes.values()), warnings)
