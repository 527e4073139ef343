"""Uniform sampling over a single join, size bounds, and random walks.

Chains and acyclic joins are sampled over their rooted join tree: a root row
is drawn in proportion to its weight and each child is extended from its
parent through the child's hash index. Cyclic joins are sampled through the
skeleton tree, after which the residual relation is probed on the bridge
attributes and accepted with probability (matches / max matches).
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from itertools import accumulate
from typing import Sequence

from .errors import EmptyJoinError, EstimatorError, ProbabilityError
from .joins import CycleDecomposition, JoinSpec, break_cycles, join_tree

DEFAULT_MAX_ATTEMPTS = 10**7


class WeightMode(Enum):
    EXACT = "exact"
    OLKEN = "olken"


SUCCESS = "success"
DEADEND = "deadend"


@dataclass(frozen=True)
class WalkSample:
    row: tuple | None
    p: float
    outcome: str = SUCCESS

    @property
    def ok(self) -> bool:
        return self.outcome == SUCCESS


def as_rng(rng) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    return random.Random(rng)


class JoinDataGraph:
    """Join tree plus the hash indexes that resolve joinability between nodes."""

    def __init__(self, spec: JoinSpec, row_cap: int = 10**6):
        self.spec = spec
        self.schema = spec.output_schema
        self.decomposition: CycleDecomposition | None = None
        if spec.shape == "cyclic":
            self.decomposition = break_cycles(spec, row_cap)
            tree = join_tree(self.decomposition.skeleton)
        else:
            tree = join_tree(spec)
        self.tree = tree
        self.nodes = tree.nodes
        self.rels = [n.relation for n in tree.nodes]
        out = {a: i for i, a in enumerate(self.schema)}
        self.fill = [[(r.schema.index(a), out[a]) for a in r.schema] for r in self.rels]
        # For every non-root node: the parent's key getter and the child index on that key.
        self.parent_key = [None] * len(self.nodes)
        self.child_index = [None] * len(self.nodes)
        for i, n in enumerate(self.nodes):
            if n.parent is None:
                continue
            child = self.rels[i]
            child.ensure_stats(n.key)
            self.child_index[i] = child.index(n.key)
            self.parent_key[i] = self.rels[n.parent].key_getter(n.key)
        self.residual = None
        if self.decomposition is not None:
            dec = self.decomposition
            self.residual = dec.residual
            self.residual_fill = [(dec.residual.schema.index(a), out[a]) for a in dec.residual.schema]
            if dec.bridge_attrs:
                self.residual_index = dec.residual.index(dec.bridge_attrs)
                bpos = tuple(out[a] for a in dec.bridge_attrs)
                self.bridge_of = (lambda row, p=bpos[0]: row[p]) if len(bpos) == 1 else (lambda row, p=bpos: tuple(row[k] for k in p))
            else:
                everything = list(range(len(dec.residual)))
                self.residual_index = {(): everything}
                self.bridge_of = lambda row: ()
            self.residual_m = dec.residual_max_degree

    def successors(self, node: int, parent_row: tuple) -> list:
        return self.child_index[node].get(self.parent_key[node](parent_row), ())

    def assemble(self, picks: Sequence[int], out: list | None = None) -> list:
        out = out if out is not None else [None] * len(self.schema)
        for node, rid in enumerate(picks):
            row = self.rels[node].rows[rid]
            for src, dst in self.fill[node]:
                out[dst] = row[src]
        return out

    def residual_matches(self, partial: list) -> list:
        return self.residual_index.get(self.bridge_of(partial), ())

    def attach_residual(self, out: list, rid: int) -> None:
        row = self.residual.rows[rid]
        for src, dst in self.residual_fill:
            out[dst] = row[src]


@dataclass
class WeightIndex:
    """Per-node tuple weights over a join tree.

    ``weights[i][r]`` bounds (EXACT: equals) the number of results extending
    row r of node i within its subtree. In EXACT mode ``cums[i]`` maps a
    parent key value to the cumulative weights of its successors in node i.
    In OLKEN mode ``caps[i]`` is the max degree of node i on its parent key.
    """

    mode: WeightMode
    weights: list
    total: float
    root_cum: list | None = None
    root_rows: list | None = None
    cums: list | None = None
    caps: list | None = None


def exact_weights(spec_or_graph) -> WeightIndex:
    g = _graph(spec_or_graph)
    n = len(g.nodes)
    weights = [None] * n
    cums = [None] * n
    for i in reversed(range(n)):
        rel = g.rels[i]
        w = [1] * len(rel)
        for c in g.nodes[i].children:
            cw = weights[c]
            sums, cum_by_key = {}, {}
            for kv, ids in g.child_index[c].items():
                cum = list(accumulate(cw[r] for r in ids))
                if cum and cum[-1] > 0:
                    sums[kv] = cum[-1]
                    cum_by_key[kv] = cum
            cums[c] = cum_by_key
            get = g.parent_key[c]
            w = [wi * sums.get(get(row), 0) if wi else 0 for wi, row in zip(w, rel.rows)]
        weights[i] = w
    # Forward pass: rows no live parent reaches take part in no result.
    for i in range(1, n):
        p = g.nodes[i].parent
        live = {g.parent_key[i](row) for row, wp in zip(g.rels[p].rows, weights[p]) if wp}
        get = g.child_index[i]
        keep = set()
        for kv in live:
            keep.update(get.get(kv, ()))
        weights[i] = [w if r in keep else 0 for r, w in enumerate(weights[i])]
    root_cum = list(accumulate(weights[0]))
    total = root_cum[-1] if root_cum else 0
    return WeightIndex(WeightMode.EXACT, weights, total, root_cum=root_cum, cums=cums)


def olken_weights(spec_or_graph) -> WeightIndex:
    """Constant-per-level Olken weights with zero weight for rows missing a successor."""
    g = _graph(spec_or_graph)
    n = len(g.nodes)
    caps = [0] * n
    level = [1] * n
    for i in reversed(range(n)):
        if g.nodes[i].parent is not None:
            caps[i] = max((len(v) for v in g.child_index[i].values()), default=0)
        k = 1
        for c in g.nodes[i].children:
            k *= caps[c] * level[c]
        level[i] = k
    weights = []
    for i in range(n):
        rel, kids = g.rels[i], g.nodes[i].children
        w = []
        for row in rel.rows:
            ok = all(g.child_index[c].get(g.parent_key[c](row)) for c in kids)
            w.append(level[i] if ok else 0)
        weights.append(w)
    root_rows = [r for r, w in enumerate(weights[0]) if w]
    total = level[0] * len(root_rows)
    return WeightIndex(WeightMode.OLKEN, weights, total, root_rows=root_rows, caps=caps)


def make_weights(spec_or_graph, mode: WeightMode | str) -> WeightIndex:
    mode = WeightMode(mode)
    return exact_weights(spec_or_graph) if mode is WeightMode.EXACT else olken_weights(spec_or_graph)


def olken_bound(spec: JoinSpec) -> int:
    """|R_root| times the product of every other node's max degree on its parent key.

    For cyclic joins the skeleton bound is multiplied by the residual's max degree.
    """
    g = _graph(spec)
    bound = len(g.rels[0])
    for i in range(1, len(g.nodes)):
        bound *= max((len(v) for v in g.child_index[i].values()), default=0)
    if g.decomposition is not None:
        bound *= g.residual_m
    return bound


def _graph(x) -> JoinDataGraph:
    return x if isinstance(x, JoinDataGraph) else JoinDataGraph(x)


class JoinSampler:
    """Accept/reject uniform sampler for one join, with walk and membership support."""

    def __init__(self, spec: JoinSpec, weight_mode: WeightMode | str = WeightMode.EXACT,
                 max_attempts: int = DEFAULT_MAX_ATTEMPTS, row_cap: int = 10**6):
        self.spec = spec
        self.id = spec.id
        self.graph = JoinDataGraph(spec, row_cap)
        self.weights = make_weights(self.graph, weight_mode)
        self.max_attempts = max_attempts
        self.attempts = 0
        self.rejections = 0
        self.draws = 0
        self.walks = 0
        self._exact_size = None

    @property
    def schema(self) -> tuple:
        return self.graph.schema

    @property
    def bound(self) -> float:
        """Total weight; the exact size for acyclic joins in EXACT mode."""
        t = self.weights.total
        return t * self.graph.residual_m if self.graph.decomposition is not None else t

    def exact_size(self) -> int:
        if self._exact_size is None:
            if self.graph.decomposition is None:
                w = self.weights if self.weights.mode is WeightMode.EXACT else exact_weights(self.graph)
                self._exact_size = w.total
            else:
                self._exact_size = _cyclic_size(self.graph)
        return self._exact_size

    def size_estimate(self) -> float:
        return self.exact_size() if self.weights.mode is WeightMode.EXACT else self.bound

    def sample(self, rng) -> tuple:
        rng = as_rng(rng)
        self.draws += 1
        return sample_join(self.graph, self.weights, rng, self)

    def walk(self, rng) -> WalkSample:
        self.walks += 1
        return random_walk(self.graph, as_rng(rng))

    def contains(self, row: Sequence) -> bool:
        return self.spec.contains(tuple(row))

    def min_walk_probability(self) -> float:
        """Smallest probability random_walk assigns to any result row (a lower bound for cyclic joins)."""
        g = self.graph
        w = self.weights if self.weights.mode is WeightMode.EXACT else exact_weights(g)
        n = len(g.nodes)
        worst = [None] * n
        for i in reversed(range(n)):
            rel = g.rels[i]
            out = []
            for r, row in enumerate(rel.rows):
                if not w.weights[i][r]:
                    out.append(0)
                    continue
                prod = 1
                for c in g.nodes[i].children:
                    succ = g.successors(c, row)
                    prod *= len(succ) * max(worst[c][s] for s in succ if w.weights[c][s])
                out.append(prod)
            worst[i] = out
        top = max(worst[0], default=0)
        if not top:
            return 0.0
        p = 1.0 / (len(g.rels[0]) * top)
        if g.decomposition is not None:
            p /= g.residual_m
        return p


def _cyclic_size(g: JoinDataGraph) -> int:
    w = exact_weights(g)
    total = 0
    # Enumerate skeleton results depth-first and count residual matches for each.
    n = len(g.nodes)
    picks = [0] * n
    out = [None] * len(g.schema)

    def rec(i: int) -> None:
        nonlocal total
        if i == n:
            total += len(g.residual_matches(out))
            return
        if i == 0:
            cands = [r for r, x in enumerate(w.weights[0]) if x]
        else:
            parent_row = g.rels[g.nodes[i].parent].rows[picks[g.nodes[i].parent]]
            cands = [r for r in g.successors(i, parent_row) if w.weights[i][r]]
        for r in cands:
            picks[i] = r
            row = g.rels[i].rows[r]
            for src, dst in g.fill[i]:
                out[dst] = row[src]
            rec(i + 1)

    rec(0)
    return total


def sample_join(graph, weights: WeightIndex, rng, stats: JoinSampler | None = None) -> tuple:
    """One uniform result row. Counts attempts and rejections on ``stats`` if given."""
    g = _graph(graph)
    rng = as_rng(rng)
    cap = stats.max_attempts if stats is not None else DEFAULT_MAX_ATTEMPTS
    if weights.total == 0 or (g.decomposition is not None and g.residual_m == 0):
        raise EmptyJoinError(f"join {g.spec.id!r} is empty")
    n = len(g.nodes)
    exact = weights.mode is WeightMode.EXACT
    picks = [0] * n
    for attempt in range(cap):
        if stats is not None:
            stats.attempts += 1
        if exact:
            picks[0] = bisect_right(weights.root_cum, rng.random() * weights.total)
            picks[0] = min(picks[0], len(weights.root_cum) - 1)
        else:
            picks[0] = weights.root_rows[rng.randrange(len(weights.root_rows))]
        ok = True
        for i in range(1, n):
            parent_row = g.rels[g.nodes[i].parent].rows[picks[g.nodes[i].parent]]
            kv = g.parent_key[i](parent_row)
            succ = g.child_index[i].get(kv, ())
            if exact:
                cum = weights.cums[i][kv]
                k = bisect_right(cum, rng.random() * cum[-1])
                picks[i] = succ[min(k, len(succ) - 1)]
            else:
                k = rng.randrange(weights.caps[i])
                if k >= len(succ) or weights.weights[i][succ[k]] == 0:
                    ok = False
                    break
                picks[i] = succ[k]
        if ok:
            out = g.assemble(picks)
            if g.decomposition is None:
                return tuple(out)
            matches = g.residual_matches(out)
            k = rng.randrange(g.residual_m)
            if k < len(matches):
                g.attach_residual(out, matches[k])
                return tuple(out)
        if stats is not None:
            stats.rejections += 1
    raise EstimatorError(f"join {g.spec.id!r}: no sample accepted after {cap} attempts")


def random_walk(graph, rng) -> WalkSample:
    """Uniform root row, then a uniform successor at every child; p is the product of choices."""
    g = _graph(graph)
    rng = as_rng(rng)
    root = g.rels[0]
    if not len(root):
        raise EmptyJoinError(f"join {g.spec.id!r}: root relation {root.name!r} is empty")
    n = len(g.nodes)
    picks = [0] * n
    picks[0] = rng.randrange(len(root))
    p = 1.0 / len(root)
    for i in range(1, n):
        parent_row = g.rels[g.nodes[i].parent].rows[picks[g.nodes[i].parent]]
        succ = g.successors(i, parent_row)
        if not succ:
            return WalkSample(None, 0.0, DEADEND)
        picks[i] = succ[rng.randrange(len(succ))]
        p /= len(succ)
    out = g.assemble(picks)
    if g.decomposition is not None:
        matches = g.residual_matches(out)
        if not matches:
            return WalkSample(None, 0.0, DEADEND)
        g.attach_residual(out, matches[rng.randrange(len(matches))])
        p /= len(matches)
    return WalkSample(tuple(out), p, SUCCESS)


def walk_probability(graph, row: Sequence) -> float:
    """Probability that random_walk returns ``row`` (0 if the row is not a result)."""
    g = _graph(graph)
    pos = {a: i for i, a in enumerate(g.schema)}
    picks = []
    p = 1.0 / len(g.rels[0]) if len(g.rels[0]) else 0.0
    for i, rel in enumerate(g.rels):
        proj = tuple(row[pos[a]] for a in rel.schema)
        if proj not in rel.row_set:
            return 0.0
        if i:
            parent = g.rels[g.nodes[i].parent]
            prow = tuple(row[pos[a]] for a in parent.schema)
            p /= len(g.successors(i, prow))
    if g.decomposition is not None:
        proj = tuple(row[pos[a]] for a in g.residual.schema)
        if proj not in g.residual.row_set:
            return 0.0
        p /= len(g.residual_matches(list(row)))
    return p


def ht_size(samples: Sequence[WalkSample]) -> float:
    """Horvitz-Thompson size estimate; dead ends count in the denominator with value 0."""
    if not samples:
        raise EstimatorError("no walk samples")
    return sum(1.0 / s.p for s in samples if s.ok) / len(samples)


def ht_update(current: float, m: int, p0: float | None) -> float:
    """Fold one more walk into an estimate over m walks. ``p0=None`` is a dead end."""
    if p0 is None:
        return current + (0.0 - current) / (m + 1)
    if p0 <= 0:
        raise ProbabilityError(f"walk probability must be positive, got {p0}")
    return current + (1.0 / p0 - current) / (m + 1)
