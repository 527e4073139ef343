"""Two-attribute chain templates and lossless splitting of joins onto them.

A template is an ordering a_0, a_1, ..., a_m of the output attributes. A join
is realized on it by grouping its relations into *sources*: each source is a
connected set of relations (merged when it holds more than one) whose
attributes form a contiguous run of the ordering, consecutive sources meeting
in exactly one attribute. Pairs inside a source are linked by fake joins
(row identity), pairs across sources by real equi-joins.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import StructureError, TemplateError
from .joins import JoinSpec, break_cycles, join_tree, natural_join, shared
from .relation import Relation

EXACT_SEARCH_LIMIT = 8


class LinkKind(Enum):
    REAL = "real"
    FAKE = "fake"


@dataclass(frozen=True)
class Template:
    order: tuple
    total_score: float = 0.0

    @property
    def pairs(self) -> tuple:
        return tuple(zip(self.order, self.order[1:]))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple], total_score: float = 0.0) -> "Template":
        pairs = [tuple(p) for p in pairs]
        if not pairs:
            raise TemplateError("template needs at least one pair")
        order = list(pairs[0])
        if len(pairs) > 1 and order[0] in pairs[1]:
            order.reverse()
        for p in pairs[1:]:
            if order[-1] not in p:
                raise TemplateError(f"pairs {pairs} do not form a chain")
            nxt = p[1] if p[0] == order[-1] else p[0]
            order.append(nxt)
        if len(set(order)) != len(order):
            raise TemplateError(f"pairs {pairs} revisit an attribute")
        return cls(tuple(order), total_score)


# -- scoring ------------------------------------------------------------------


def _relation_graph(spec: JoinSpec) -> tuple:
    if spec.shape != "cyclic":
        return _tree_adj(spec)
    rels = spec.relations
    adj = {i: set() for i in range(len(rels))}
    for i in range(len(rels)):
        for j in range(i + 1, len(rels)):
            if shared(rels[i], rels[j]):
                adj[i].add(j)
                adj[j].add(i)
    return rels, adj


def attribute_distance(spec: JoinSpec, a: str, b: str) -> int:
    """Fewest tree edges between a relation holding a and one holding b."""
    rels, adj = _relation_graph(spec)
    src = [i for i, r in enumerate(rels) if a in r.schema]
    dst = {i for i, r in enumerate(rels) if b in r.schema}
    if not src or not dst:
        missing = a if not src else b
        raise StructureError(f"join {spec.id!r} has no attribute {missing!r}")
    dist = {i: 0 for i in src}
    q = deque(src)
    while q:
        u = q.popleft()
        if u in dst:
            return dist[u]
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    raise StructureError(f"join {spec.id!r}: {a!r} and {b!r} are disconnected")


def pairwise_score(specs: Sequence[JoinSpec], a: str, b: str, zero_dist_weight: float = 0) -> float:
    """Sum over joins of the tree distance between the homes of a and b.

    Co-located pairs (distance 0) cost ``zero_dist_weight`` each.
    """
    if a == b:
        return 0
    total = 0
    for s in specs:
        d = attribute_distance(s, a, b)
        total += d if d > 0 else zero_dist_weight
    return total


def choose_template(specs: Sequence[JoinSpec], zero_dist_weight: float = 0) -> Template:
    """Attribute ordering minimizing the summed pairwise score of consecutive attributes.

    Exhaustive branch-and-bound up to EXACT_SEARCH_LIMIT attributes, nearest
    neighbour from every start beyond. Ties break lexicographically.
    """
    attrs = sorted({a for s in specs for r in s.relations for a in r.schema})
    if len(attrs) < 2:
        raise TemplateError("a template needs at least two attributes")
    score = {(a, b): pairwise_score(specs, a, b, zero_dist_weight) for a in attrs for b in attrs if a != b}
    if len(attrs) <= EXACT_SEARCH_LIMIT:
        order, total = _exact_order(attrs, score)
    else:
        order, total = _greedy_order(attrs, score)
    return Template(order, total)


def _exact_order(attrs: list, score: dict) -> tuple:
    n = len(attrs)
    cheapest = min(score.values())
    best = [math.inf, None]

    def extend(path: list, cost: float, left: set) -> None:
        if not left:
            cand = tuple(path)
            # A path and its reverse are the same template; keep the smaller spelling.
            cand = min(cand, cand[::-1])
            if cost < best[0] or (cost == best[0] and cand < best[1]):
                best[0], best[1] = cost, cand
            return
        if cost + cheapest * len(left) > best[0]:
            return
        for b in sorted(left):
            path.append(b)
            left.remove(b)
            extend(path, cost + score[path[-2], b], left)
            left.add(b)
            path.pop()

    for a in attrs:
        extend([a], 0, set(attrs) - {a})
    assert best[1] is not None and len(best[1]) == n
    return best[1], best[0]


def _greedy_order(attrs: list, score: dict) -> tuple:
    best = (math.inf, None)
    for start in attrs:
        path, left, cost = [start], set(attrs) - {start}, 0
        while left:
            nxt = min(sorted(left), key=lambda b: score[path[-1], b])
            cost += score[path[-1], nxt]
            path.append(nxt)
            left.remove(nxt)
        cand = min(tuple(path), tuple(path[::-1]))
        if (cost, cand) < (best[0], best[1] or ()):
            best = (cost, cand)
    return best[1], best[0]


# -- split joins --------------------------------------------------------------


@dataclass
class Source:
    """A relation, or a connected group of relations merged by fake joins."""

    relations: tuple
    edges: tuple  # (i, j) index pairs into relations: a spanning tree of the group
    run: tuple  # the group's attributes in template order

    @property
    def name(self) -> str:
        return "+".join(r.name for r in self.relations)

    @property
    def merged(self) -> bool:
        return len(self.relations) > 1

    def materialize(self) -> Relation:
        """The group's rows over ``run`` (a natural join when merged)."""
        if len(self.relations) == 1:
            r = self.relations[0]
            perm = [r.schema.index(a) for a in self.run]
            return Relation(r.name, self.run, [tuple(row[p] for p in perm) for row in r.rows])
        j = natural_join(self.relations, self.name)
        perm = [j.schema.index(a) for a in self.run]
        return Relation(self.name, self.run, [tuple(row[p] for p in perm) for row in j.rows])


@dataclass(frozen=True)
class SubRelation:
    attrs: tuple
    source: int


@dataclass
class SplitJoin:
    source: str
    order: tuple
    subs: tuple
    kinds: tuple
    sources: tuple

    @property
    def links(self) -> list:
        return [(self.subs[i], self.kinds[i], self.subs[i + 1]) for i in range(len(self.kinds))]

    def provenance(self, i: int) -> tuple:
        sub = self.subs[i]
        return self.sources[sub.source].name, sub.attrs

    def describe(self) -> str:
        parts = [f"({','.join(self.subs[0].attrs)})"]
        for k, sub in zip(self.kinds, self.subs[1:]):
            parts.append(" ⋈ " if k is LinkKind.REAL else " ⋈' ")
            parts.append(f"({','.join(sub.attrs)})")
        return "".join(parts)


def _group_layout(groups: list, rels: list, pos: dict) -> list | None:
    """Return groups sorted along the template if they realize it, else None."""
    spans = []
    for g in groups:
        ps = sorted(pos[a] for i in g for a in rels[i].schema)
        ps = sorted(set(ps))
        if len(ps) < 2 or ps[-1] - ps[0] + 1 != len(ps):
            return None
        spans.append((ps[0], ps[-1], g))
    spans.sort(key=lambda s: s[0])
    if spans[0][0] != 0 or spans[-1][1] != len(pos) - 1:
        return None
    for (lo1, hi1, _), (lo2, hi2, _) in zip(spans, spans[1:]):
        if hi1 != lo2:
            return None
    return spans


def _path(adj: dict, a: int, b: int) -> list:
    prev = {a: None}
    q = deque([a])
    while q:
        u = q.popleft()
        if u == b:
            break
        for v in sorted(adj[u]):
            if v not in prev:
                prev[v] = u
                q.append(v)
    out = [b]
    while prev[out[-1]] is not None:
        out.append(prev[out[-1]])
    return out


def _realize(spec_id: str, rels: list, adj: dict, groups: list, template: Template, allow_merge: bool) -> SplitJoin:
    order = template.order
    attrs = {a for r in rels for a in r.schema}
    if set(order) != attrs:
        raise TemplateError(f"join {spec_id!r}: template attributes {sorted(order)} differ from {sorted(attrs)}")
    pos = {a: i for i, a in enumerate(order)}
    groups = [frozenset(g) for g in groups]

    def owner(i: int) -> int:
        return next(k for k, g in enumerate(groups) if i in g)

    def merge(ks: set) -> None:
        nonlocal groups
        merged = frozenset().union(*(groups[k] for k in ks))
        groups = [g for k, g in enumerate(groups) if k not in ks] + [merged]

    while True:
        spans = _group_layout(groups, rels, pos)
        if spans is not None:
            break
        if not allow_merge:
            raise TemplateError(f"join {spec_id!r} cannot be laid out on template {list(order)} without merging relations")
        # 1. A template pair that no group holds: merge along the tree path between its ends.
        fixed = False
        gattrs = [{a for i in g for a in rels[i].schema} for g in groups]
        for a, b in template.pairs:
            if any(a in ga and b in ga for ga in gattrs):
                continue
            ra = [i for i, r in enumerate(rels) if a in r.schema]
            rb = [i for i, r in enumerate(rels) if b in r.schema]
            path = min((_path(adj, x, y) for x in ra for y in rb), key=len)
            merge({owner(i) for i in path})
            fixed = True
            break
        if fixed:
            continue
        # 2. Adjacent groups meeting in more than one attribute or off the run ends.
        for k, g in enumerate(groups):
            for i in g:
                for j in adj[i]:
                    h = owner(j)
                    if h == k:
                        continue
                    common = gattrs[k] & gattrs[h]
                    ok = False
                    if len(common) == 1:
                        (x,) = common
                        pk = sorted(pos[a] for a in gattrs[k])
                        ph = sorted(pos[a] for a in gattrs[h])
                        ok = pos[x] in (pk[0], pk[-1]) and pos[x] in (ph[0], ph[-1])
                    if not ok:
                        merge({k, h})
                        fixed = True
                        break
                if fixed:
                    break
            if fixed:
                break
        if fixed:
            continue
        # 3. Anything else (a too-short or gapped run): absorb a neighbour.
        for k, g in enumerate(groups):
            ps = sorted(pos[a] for a in gattrs[k])
            if len(ps) < 2 or ps[-1] - ps[0] + 1 != len(ps):
                nbrs = {owner(j) for i in g for j in adj[i]} - {k}
                if not nbrs:
                    raise TemplateError(f"join {spec_id!r}: template demands a pair across disconnected attributes")
                merge({k, min(nbrs)})
                break
        else:
            raise TemplateError(f"join {spec_id!r}: cannot realize template {list(order)}")

    sources, subs, kinds = [], [], []
    for lo, hi, g in spans:
        members = sorted(g, key=lambda i: rels[i].name)
        local = {i: n for n, i in enumerate(members)}
        edges = _spanning_edges(members, adj, local)
        sources.append(Source(tuple(rels[i] for i in members), edges, tuple(order[lo : hi + 1])))
        s = len(sources) - 1
        for p in range(lo, hi):
            if subs:
                kinds.append(LinkKind.FAKE if subs[-1].source == s else LinkKind.REAL)
            subs.append(SubRelation((order[p], order[p + 1]), s))
    return SplitJoin(spec_id, tuple(order), tuple(subs), tuple(kinds), tuple(sources))


def _spanning_edges(members: list, adj: dict, local: dict) -> tuple:
    inside = set(members)
    root = members[0]
    seen, q, edges = {root}, deque([root]), []
    while q:
        u = q.popleft()
        for v in sorted(adj[u]):
            if v in inside and v not in seen:
                seen.add(v)
                edges.append((local[u], local[v]))
                q.append(v)
    return tuple(edges)


def _tree_adj(spec: JoinSpec) -> tuple:
    tree = join_tree(spec)
    rels = tree.relations()
    adj = {i: set() for i in range(len(rels))}
    for i, n in enumerate(tree.nodes):
        if n.parent is not None:
            adj[i].add(n.parent)
            adj[n.parent].add(i)
    return rels, adj


def split(spec: JoinSpec, template: Template) -> SplitJoin:
    """Cut a chain join into two-attribute sub-relations without merging relations."""
    if spec.shape != "chain":
        raise StructureError(f"split expects a chain join, {spec.id!r} is {spec.shape}")
    rels, adj = _tree_adj(spec)
    return _realize(spec.id, rels, adj, [{i} for i in range(len(rels))], template, allow_merge=False)


def acyclic_to_chain(spec: JoinSpec, template: Template) -> SplitJoin:
    """Lay a chain or tree join on the template, fake-joining subtrees where needed."""
    if spec.shape == "cyclic":
        return cyclic_to_chain(spec, template)
    rels, adj = _tree_adj(spec)
    return _realize(spec.id, rels, adj, [{i} for i in range(len(rels))], template, allow_merge=True)


def cyclic_to_chain(spec: JoinSpec, template: Template, row_cap: int = 10**6) -> SplitJoin:
    """Skeleton plus residual, with the residual and every skeleton relation it
    bridges to pre-merged into one source so the cycle's equalities stay internal."""
    dec = break_cycles(spec, row_cap)
    rels, adj = _tree_adj(dec.skeleton)
    rels = list(rels) + [dec.residual]
    r = len(rels) - 1
    adj[r] = set()
    touch = [i for i in range(r) if set(rels[i].schema) & set(dec.residual.schema)]
    if touch:
        adj[r].add(touch[0])
        adj[touch[0]].add(r)
    seed = {r}
    for i in touch:
        seed.update(_path(adj, r, i))
    groups = [seed] + [{i} for i in range(r) if i not in seed]
    return _realize(spec.id, rels, adj, groups, template, allow_merge=True)


def to_split(spec: JoinSpec, template: Template) -> SplitJoin:
    if spec.shape == "chain":
        try:
            return split(spec, template)
        except TemplateError:
            pass
    return acyclic_to_chain(spec, template)


def evaluate_split(sj: SplitJoin) -> set:
    """Evaluate a SplitJoin literally: fake links match source row ids, real links match values.

    Returns rows in sorted-attribute order, comparable with ``joins.evaluate``.
    """
    mats = [s.materialize() for s in sj.sources]
    # sub-relation rows: (row id in source, left value, right value)
    sub_rows = []
    for sub in sj.subs:
        m = mats[sub.source]
        i, j = m.schema.index(sub.attrs[0]), m.schema.index(sub.attrs[1])
        sub_rows.append([(rid, row[i], row[j]) for rid, row in enumerate(m.rows)])
    partial = [((a, b), rid) for rid, a, b in sub_rows[0]]
    for k, kind in enumerate(sj.kinds):
        nxt_rows = sub_rows[k + 1]
        if kind is LinkKind.FAKE:
            by_id = {rid: (a, b) for rid, a, b in nxt_rows}
            partial = [
                (vals + (by_id[rid][1],), rid)
                for vals, rid in partial
                if rid in by_id and by_id[rid][0] == vals[-1]
            ]
        else:
            by_val: dict = {}
            for rid, a, b in nxt_rows:
                by_val.setdefault(a, []).append((rid, b))
            partial = [(vals + (b,), rid2) for vals, _ in partial for rid2, b in by_val.get(vals[-1], ())]
    out_schema = sorted(sj.order)
    perm = [sj.order.index(a) for a in out_schema]
    return {tuple(vals[p] for p in perm) for vals, _ in partial}
