"""Samplers over unions of joins.

All samplers draw with replacement and return exactly N rows. Rows are
tuples over the shared output schema; a row's value is the row itself, so
equal rows coming from different joins are the same union member.
"""

from __future__ import annotations

import math
import time
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Mapping, Sequence

from .errors import EmptyJoinError, InstabilityError, ParameterError, PoolCorruptionError
from .params import Parameters, all_subsets, from_overlaps, histogram_parameters
from .overlap import OverlapBound, confidence_for, walk_overlap
from .sampler import JoinSampler, WeightMode, as_rng, ht_size

COUNTERS = ("accepted", "draws", "fresh", "rejected_duplicate", "rejected_weight",
            "revisions", "revised_rows", "reused", "walks", "backtracks", "discarded_rounds")


def tuple_key(row: Sequence) -> bytes:
    """Canonical byte form of a row; equal values give equal keys whatever the source join."""
    return repr(tuple(row)).encode("utf-8")


@dataclass
class SampleReport:
    schema: tuple
    rows: list
    origins: list
    counters: dict = field(default_factory=lambda: dict.fromkeys(COUNTERS, 0))
    timing: dict = field(default_factory=lambda: {"warmup": 0.0, "accept": 0.0, "reject": 0.0})
    trace: list = field(default_factory=list)

    def distinct(self) -> "SampleReport":
        seen, rows, origins = set(), [], []
        for r, o in zip(self.rows, self.origins):
            if r not in seen:
                seen.add(r)
                rows.append(r)
                origins.append(o)
        return SampleReport(self.schema, rows, origins, dict(self.counters), dict(self.timing), list(self.trace))


def _by_id(samplers) -> dict:
    if isinstance(samplers, Mapping):
        return dict(samplers)
    return {s.id: s for s in samplers}


class _Selector:
    def __init__(self, weights: Mapping[str, float]):
        self.ids = [j for j, w in weights.items() if w > 0]
        if not self.ids:
            raise EmptyJoinError("every join has zero selection weight")
        self.cum = list(accumulate(weights[j] for j in self.ids))

    def pick(self, rng) -> str:
        k = bisect_right(self.cum, rng.random() * self.cum[-1])
        return self.ids[min(k, len(self.ids) - 1)]


class _Draw:
    """Times one join draw and tallies the sampler's internal rejections."""

    def __init__(self, report: SampleReport, sampler: JoinSampler, rng):
        before = sampler.rejections
        t0 = time.perf_counter()
        self.row = sampler.sample(rng)
        self.elapsed = time.perf_counter() - t0
        report.counters["draws"] += 1
        report.counters["fresh"] += 1
        report.counters["rejected_weight"] += sampler.rejections - before
        self.report = report

    def settle(self, accepted: bool) -> None:
        self.report.timing["accept" if accepted else "reject"] += self.elapsed


def sample_disjoint_union(samplers, n: int, rng, sizes: Mapping[str, float] | None = None) -> SampleReport:
    """Pick a join with probability |J_j| / sum |J|, then a uniform row of it."""
    rng = as_rng(rng)
    by = _by_id(samplers)
    sizes = dict(sizes) if sizes is not None else {j: s.exact_size() for j, s in by.items()}
    if not any(sizes.values()):
        raise EmptyJoinError("all joins are empty")
    sel = _Selector(sizes)
    schema = next(iter(by.values())).schema
    rep = SampleReport(schema, [], [])
    while len(rep.rows) < n:
        j = sel.pick(rng)
        d = _Draw(rep, by[j], rng)
        d.settle(True)
        rep.rows.append(d.row)
        rep.origins.append(j)
    rep.counters["accepted"] = len(rep.rows)
    return rep


def sample_set_union_bernoulli(samplers, n: int, rng, sizes: Mapping[str, float] | None = None,
                               union_size: float | None = None, ordering: Sequence[str] | None = None,
                               resample_cap: int = 10_000) -> SampleReport:
    """Rounds in which every join fires independently with probability |J_j| / |U|.

    A value is kept only from the join that first observed it. Two joins first
    observing one value in the same round: the earlier join in ``ordering``
    keeps it and the later one resamples. A round that would overshoot N is
    discarded whole.
    """
    rng = as_rng(rng)
    by = _by_id(samplers)
    sizes = dict(sizes) if sizes is not None else {j: s.exact_size() for j, s in by.items()}
    if union_size is None:
        raise ParameterError("the Bernoulli sampler needs a union size estimate")
    if union_size <= 0 or union_size < max(sizes.values()):
        raise ParameterError(f"union size {union_size} is below the largest join {max(sizes.values())}")
    order = tuple(ordering) if ordering else tuple(sorted(by, key=lambda j: (-sizes[j], j)))
    schema = next(iter(by.values())).schema
    rep = SampleReport(schema, [], [])
    orig: dict = {}
    while len(rep.rows) < n:
        round_rows, fresh = [], {}
        for j in order:
            if rng.random() >= sizes[j] / union_size:
                continue
            for _ in range(resample_cap):
                d = _Draw(rep, by[j], rng)
                first = fresh.get(d.row)
                if first is not None and first != j:
                    d.settle(False)
                    continue
                break
            else:
                continue
            u = d.row
            owner = orig.get(u)
            if owner is not None and owner != j:
                rep.counters["rejected_duplicate"] += 1
                d.settle(False)
                continue
            if owner is None:
                orig[u] = j
                fresh[u] = j
            d.settle(True)
            round_rows.append((u, j))
        if len(rep.rows) + len(round_rows) > n:
            rep.counters["discarded_rounds"] += 1
            for u in fresh:
                del orig[u]
            continue
        for u, j in round_rows:
            rep.rows.append(u)
            rep.origins.append(j)
    rep.counters["accepted"] = len(rep.rows)
    return rep


class _Result:
    """Accepted rows with tombstones so that revision can drop every copy of a value."""

    def __init__(self):
        self.entries: list = []  # [row, join, alive]
        self.where: dict = {}
        self.alive = 0

    def add(self, row, j) -> None:
        self.where.setdefault(row, []).append(len(self.entries))
        self.entries.append([row, j, True])
        self.alive += 1

    def drop_value(self, row) -> int:
        k = 0
        for i in self.where.pop(row, ()):
            if self.entries[i][2]:
                self.entries[i][2] = False
                k += 1
        self.alive -= k
        return k

    def drop(self, i: int) -> None:
        if self.entries[i][2]:
            self.entries[i][2] = False
            self.alive -= 1

    def compact(self) -> None:
        old = self.entries
        self.entries, self.where, self.alive = [], {}, 0
        for row, j, ok in old:
            if ok:
                self.add(row, j)

    def rows(self) -> list:
        return [(r, j) for r, j, ok in self.entries if ok]


def _accept(res: _Result, orig: dict, rank: dict, row, j, rep: SampleReport) -> bool:
    """Registry check for one candidate: False if an earlier join owns the value."""
    owner = orig.get(row)
    if owner is not None and rank[owner] < rank[j]:
        rep.counters["rejected_duplicate"] += 1
        return False
    if owner is not None and rank[owner] > rank[j]:
        rep.counters["revisions"] += 1
        rep.counters["revised_rows"] += res.drop_value(row)
    orig[row] = j
    return True


def _fresh_from(j: str, sampler: JoinSampler, res: _Result, orig: dict, rank: dict,
                rep: SampleReport, rng, retry_cap: int):
    """Draw from J_j until the value is not owned by an earlier join."""
    for _ in range(retry_cap):
        d = _Draw(rep, sampler, rng)
        ok = _accept(res, orig, rank, d.row, j, rep)
        d.settle(ok)
        if ok:
            return d.row
    return None


def check_cover(params: Parameters, tolerance: float = 0.01) -> None:
    """Cover total must match |U|; clamped estimates are exempt and renormalize instead."""
    if params.cover.warnings or params.table.warnings:
        return
    u, total = params.union_size, params.cover.total
    if u <= 0 or abs(total - u) > tolerance * u:
        raise ParameterError(f"cover total {total} deviates from union size {u} by more than {tolerance:.0%}")


def sample_set_union(samplers, n: int, rng, params: Parameters, retry_cap: int = 100_000,
                     check: bool = True) -> SampleReport:
    """Cover-based sampler: pick J_j with probability |J'_j| / |U|, then a row of J'_j.

    Rows of J_j are drawn until one is not owned by an earlier join in the
    cover order (rejection). A value owned by a later join is revised: every
    copy is dropped and the value moves to J_j.
    """
    rng = as_rng(rng)
    by = _by_id(samplers)
    if check:
        check_cover(params)
    rank = {j: i for i, j in enumerate(params.cover.ordering)}
    sel = _Selector(params.cover.sizes)
    schema = next(iter(by.values())).schema
    rep = SampleReport(schema, [], [])
    res, orig = _Result(), {}
    while res.alive < n:
        j = sel.pick(rng)
        row = _fresh_from(j, by[j], res, orig, rank, rep, rng, retry_cap)
        if row is not None:
            res.add(row, j)
    for row, j in res.rows():
        rep.rows.append(row)
        rep.origins.append(j)
    rep.counters["accepted"] = len(rep.rows)
    return rep


def reuse_accept(entry: tuple, l: float, size_j: float, rng) -> int:
    """Number of copies of a pooled walk row to accept: R = l / (p * |J|).

    floor(R) copies always and one more with probability R - floor(R); 0 is a rejection.
    """
    row, p = entry
    if p <= 0:
        raise PoolCorruptionError(f"pooled row has walk probability {p}")
    r = l / (p * size_j)
    k = math.floor(r)
    if rng.random() < r - k:
        k += 1
    return k


@dataclass
class SamplerState:
    params: Parameters
    result: _Result
    orig: dict
    pools: dict
    probs: dict
    walk_log: dict
    conf_level: float = 0.0


def backtrack(state: SamplerState, new_params: Parameters, rng, retention: str = "thin") -> SamplerState:
    """Rescale kept rows to new selection probabilities.

    A row from J_j has ratio R_j = new_sel_j / old_sel_j. ``retention="duplicate"``
    keeps floor(R_j) copies plus one more with probability R_j - floor(R_j).
    ``retention="thin"`` keeps a row with probability R_j / max(1, max R), so
    rows are only ever dropped. A join whose old selection was 0 and new one is
    positive has no rows to rescale, and a changed cover order moves values
    between joins; in both cases the whole sample is dropped.
    """
    if retention not in ("thin", "duplicate"):
        raise ParameterError(f"retention must be 'thin' or 'duplicate', got {retention!r}")
    rng = as_rng(rng)
    old_params = state.params
    old, new = old_params.selection(), new_params.selection()
    res = state.result
    state.params = new_params
    reordered = tuple(new_params.cover.ordering) != tuple(old_params.cover.ordering)
    if reordered or any(old.get(j, 0) == 0 and s > 0 for j, s in new.items()):
        for i in range(len(res.entries)):
            res.drop(i)
        res.compact()
        return state
    ratio = {j: new.get(j, 0) / s for j, s in old.items() if s > 0}
    if retention == "thin":
        top = max(1.0, max(ratio.values(), default=1.0))
        ratio = {j: r / top for j, r in ratio.items()}
    extra = []
    for i, (row, j, ok) in enumerate(list(res.entries)):
        if not ok:
            continue
        r = ratio.get(j, 0.0)
        if r == 1:
            continue
        k = math.floor(r)
        if rng.random() < r - k:
            k += 1
        if k == 0:
            res.drop(i)
        else:
            extra.extend([(row, j)] * (k - 1))
    for row, j in extra:
        res.add(row, j)
    res.compact()
    return state


def sample_online_union(samplers, n: int, phi: int, gamma: float, rng, *,
                        initial: Parameters | None = None, reuse: bool = True,
                        reuse_scale: str = "uniform", retention: str = "thin", tolerance: float = 0.02,
                        retry_cap: int = 100_000, max_walks: int | None = None) -> SampleReport:
    """Online union sampling with refinement by random walks, sample reuse and backtracking.

    Starts from ``initial`` (histogram parameters by default). While the
    confidence level is below ``gamma``, every iteration walks one join
    (round robin); walks are logged, pooled for reuse, and every ``phi`` walks
    the parameters are re-estimated and kept rows are backtracked.

    ``reuse_scale="uniform"`` accepts a pooled row with probability
    p_min / p(t), where p_min is the join's smallest walk probability, so each
    accepted copy is a uniform draw. ``reuse_scale="pool"`` uses the pool
    length as the numerator of the acceptance ratio.
    """
    rng = as_rng(rng)
    by = _by_id(samplers)
    ids = tuple(by)
    schema = next(iter(by.values())).schema
    rep = SampleReport(schema, [], [])
    t0 = time.perf_counter()
    params = initial if initial is not None else histogram_parameters(list(by.values()))
    rep.timing["warmup"] = time.perf_counter() - t0
    rep.trace.append(params.summary())
    exact_sizes = all(s.weights.mode is WeightMode.EXACT for s in by.values())
    p_min = {j: s.min_walk_probability() for j, s in by.items()} if reuse and reuse_scale == "uniform" else {}
    state = SamplerState(params, _Result(), {}, {j: [] for j in ids}, {j: [] for j in ids}, {j: [] for j in ids})
    res, orig = state.result, state.orig
    union_hist = [params.union_size]
    walks = 0
    sel = _Selector(params.cover.sizes)
    rank = {j: i for i, j in enumerate(params.cover.ordering)}
    while res.alive < n:
        j = sel.pick(rng)
        copies = 0
        row = None
        pool = state.pools[j]
        if reuse and pool:
            k = rng.randrange(len(pool))
            pool[k], pool[-1] = pool[-1], pool[k]
            entry = pool.pop()
            rep.counters["draws"] += 1
            size_j = state.params.sizes[j]
            if reuse_scale == "uniform":
                numer = p_min[j] * size_j
            else:
                numer = len(pool) + 1
            copies = reuse_accept(entry, numer, size_j, rng) if size_j > 0 else 0
            if copies and _accept(res, orig, rank, entry[0], j, rep):
                row = entry[0]
                rep.counters["reused"] += copies
            else:
                copies = 0
        if row is None:
            row = _fresh_from(j, by[j], res, orig, rank, rep, rng, retry_cap)
            copies = 1 if row is not None else 0
        for _ in range(min(copies, n - res.alive)):
            res.add(row, j)
        if res.alive >= n:
            break
        if state.conf_level < gamma and (max_walks is None or walks < max_walks):
            w = ids[walks % len(ids)]
            ws = by[w].walk(rng)
            walks += 1
            rep.counters["walks"] += 1
            state.walk_log[w].append(ws)
            state.probs[w].append(ws.p)
            if ws.ok and reuse:
                state.pools[w].append((ws.row, ws.p))
            if walks % phi == 0:
                new = _refresh(by, state, exact_sizes, tolerance)
                if new is not None:
                    u_prev = union_hist[-1]
                    union_hist.append(new.union_size)
                    if len(union_hist) > 10 and u_prev > 0 and abs(new.union_size - u_prev) > 0.5 * u_prev:
                        raise InstabilityError(f"union size moved from {u_prev} to {new.union_size}")
                    backtrack(state, new, rng, retention)
                    rep.counters["backtracks"] += 1
                    state.conf_level = new.confidence
                    rep.trace.append(new.summary())
                    sel = _Selector(new.cover.sizes)
                    rank = {x: i for i, x in enumerate(new.cover.ordering)}
    if res.alive > n:
        live = [i for i, e in enumerate(res.entries) if e[2]]
        for i in rng.sample(live, res.alive - n):
            res.drop(i)
    for row, j in res.rows():
        rep.rows.append(row)
        rep.origins.append(j)
    rep.counters["accepted"] = len(rep.rows)
    return rep


def _refresh(by: dict, state: SamplerState, exact_sizes: bool, tolerance: float) -> Parameters | None:
    ids = tuple(by)
    logs = state.walk_log
    if not all(any(w.ok for w in logs[j]) for j in ids if state.params.sizes[j] > 0):
        return None
    if exact_sizes:
        sizes = {j: by[j].exact_size() for j in ids}
        conf = 1.0
    else:
        sizes = {j: ht_size(logs[j]) if logs[j] else 0.0 for j in ids}
        conf = 1.0
        for j in ids:
            if len(logs[j]) > 1 and sizes[j] > 0:
                f = [1.0 / w.p if w.ok else 0.0 for w in logs[j]]
                m = sum(f) / len(f)
                var = sum((x - m) ** 2 for x in f) / (len(f) - 1)
                conf = min(conf, confidence_for((var / len(f)) ** 0.5, tolerance * sizes[j]))
    membership = {j: by[j].contains for j in ids}
    overlaps = {frozenset([j]): sizes[j] for j in ids}
    bounds = {}
    for d in all_subsets(ids):
        anchor = min(d, key=lambda j: (sizes[j], j))
        if sizes[anchor] == 0 or not any(w.ok for w in logs[anchor]):
            bounds[d] = OverlapBound(d, 0.0, "walk", 0.0, 0.0)
        else:
            b = walk_overlap(d, anchor, logs[anchor], membership, sizes[anchor])
            bounds[d] = b
            conf = min(conf, confidence_for(b.std_error, tolerance * sizes[anchor]))
        overlaps[d] = bounds[d].value
    p = from_overlaps(ids, overlaps, "walk", None, bounds)
    p.confidence = conf
    return p
