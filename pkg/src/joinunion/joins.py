"""Join declarations, join trees, GYO reduction and cycle breaking."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from .errors import CapacityError, NotCyclicError, StructureError
from .relation import Relation, build_stats

SHAPES = ("chain", "acyclic", "cyclic")


@dataclass
class JoinSpec:
    """A natural join over named relations.

    ``join_attrs`` is used by chains (one label per consecutive pair) and
    ``edges`` by acyclic joins as ``(parent, child, label)`` triples. Cyclic
    joins need neither: their structure is the relations' shared attributes.
    """

    id: str
    shape: str
    relations: list
    join_attrs: tuple = ()
    edges: tuple = ()
    _tree: "JoinTree | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise StructureError(f"join {self.id!r}: unknown shape {self.shape!r}")
        self.relations = list(self.relations)
        self.join_attrs = tuple(self.join_attrs)
        self.edges = tuple(tuple(e) for e in self.edges)
        names = [r.name for r in self.relations]
        if len(set(names)) != len(names):
            raise StructureError(f"join {self.id!r}: relation names must be unique, got {names}")
        if not self.relations:
            raise StructureError(f"join {self.id!r}: no relations")

    @property
    def output_schema(self) -> tuple:
        return tuple(sorted({a for r in self.relations for a in r.schema}))

    def relation(self, name: str) -> Relation:
        for r in self.relations:
            if r.name == name:
                return r
        raise StructureError(f"join {self.id!r} has no relation {name!r}")

    def contains(self, row: tuple) -> bool:
        """Membership of an output-schema row: every relation holds its projection."""
        schema = self.output_schema
        pos = {a: i for i, a in enumerate(schema)}
        for r in self.relations:
            if tuple(row[pos[a]] for a in r.schema) not in r.row_set:
                return False
        return True


@dataclass
class TreeNode:
    relation: Relation
    parent: int | None
    key: tuple  # attributes shared with the parent, sorted
    children: list = field(default_factory=list)


@dataclass
class JoinTree:
    """A rooted join tree in breadth-first order; nodes[0] is the root."""

    nodes: list

    def relations(self) -> list:
        return [n.relation for n in self.nodes]

    def path_to_root(self, i: int) -> list:
        out = [i]
        while self.nodes[out[-1]].parent is not None:
            out.append(self.nodes[out[-1]].parent)
        return out


def shared(r: Relation, s: Relation) -> tuple:
    return tuple(sorted(set(r.schema) & set(s.schema)))


def _check_running_intersection(spec_id: str, rels: Sequence[Relation], adj: dict) -> None:
    # Each attribute must occupy a connected set of tree nodes, otherwise the
    # tree join drops an equality the natural join enforces.
    attrs = {a for r in rels for a in r.schema}
    for a in sorted(attrs):
        holders = {i for i, r in enumerate(rels) if a in r.schema}
        start = min(holders)
        seen, stack = {start}, [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v in holders and v not in seen:
                    seen.add(v)
                    stack.append(v)
        if seen != holders:
            names = sorted(rels[i].name for i in holders)
            raise StructureError(
                f"join {spec_id!r}: attribute {a!r} is shared by {names} but not along tree edges (cyclic)"
            )


def _bfs_tree(rels: Sequence[Relation], adj: dict, root: int) -> JoinTree:
    order, parent = [root], {root: None}
    q = deque([root])
    while q:
        u = q.popleft()
        for v in sorted(adj[u], key=lambda k: rels[k].name):
            if v not in parent:
                parent[v] = u
                order.append(v)
                q.append(v)
    if len(order) != len(rels):
        raise StructureError("join tree is disconnected")
    slot = {old: new for new, old in enumerate(order)}
    nodes = []
    for old in order:
        p = parent[old]
        key = shared(rels[old], rels[p]) if p is not None else ()
        nodes.append(TreeNode(rels[old], slot[p] if p is not None else None, key))
    for i, n in enumerate(nodes):
        if n.parent is not None:
            nodes[n.parent].children.append(i)
    return JoinTree(nodes)


def join_tree(spec: JoinSpec) -> JoinTree:
    """Rooted join tree of a chain or acyclic spec (validated on first use)."""
    if spec._tree is not None:
        return spec._tree
    rels = spec.relations
    idx = {r.name: i for i, r in enumerate(rels)}
    adj = {i: set() for i in range(len(rels))}
    if spec.shape == "chain":
        if len(spec.join_attrs) != len(rels) - 1:
            raise StructureError(
                f"join {spec.id!r}: {len(rels)} relations need {len(rels) - 1} join attributes, "
                f"got {len(spec.join_attrs)}"
            )
        for i, a in enumerate(spec.join_attrs):
            for r in (rels[i], rels[i + 1]):
                if a not in r.schema:
                    raise StructureError(f"join {spec.id!r}: join attribute {a!r} missing from relation {r.name!r}")
            adj[i].add(i + 1)
            adj[i + 1].add(i)
        root = 0
    elif spec.shape == "acyclic":
        if len(spec.edges) != len(rels) - 1:
            raise StructureError(f"join {spec.id!r}: a tree over {len(rels)} relations needs {len(rels) - 1} edges")
        for p, c, a in spec.edges:
            for name in (p, c):
                if name not in idx:
                    raise StructureError(f"join {spec.id!r}: edge names unknown relation {name!r}")
            for name in (p, c):
                if a not in rels[idx[name]].schema:
                    raise StructureError(f"join {spec.id!r}: join attribute {a!r} missing from relation {name!r}")
            adj[idx[p]].add(idx[c])
            adj[idx[c]].add(idx[p])
        root = min(range(len(rels)), key=lambda i: rels[i].name)
    else:
        raise StructureError(f"join {spec.id!r} is cyclic; use break_cycles")
    _check_running_intersection(spec.id, rels, adj)
    spec._tree = _bfs_tree(rels, adj, root)
    return spec._tree


def validate_workload(specs: Sequence[JoinSpec]) -> None:
    """Check structure of every spec and that all share one output schema."""
    if not specs:
        raise StructureError("empty workload")
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        raise StructureError(f"duplicate join ids in {ids}")
    for s in specs:
        if s.shape == "cyclic":
            if not connected(s.relations):
                raise StructureError(f"join {s.id!r}: relations are not connected by shared attributes")
            if is_acyclic(s.relations):
                raise StructureError(f"join {s.id!r} is declared cyclic but is acyclic")
        else:
            join_tree(s)
    first = specs[0]
    for s in specs[1:]:
        if s.output_schema != first.output_schema:
            raise StructureError(
                f"output schema mismatch between {first.id!r} {list(first.output_schema)} "
                f"and {s.id!r} {list(s.output_schema)}"
            )


# -- hypergraph utilities ---------------------------------------------------


def connected(rels: Sequence[Relation]) -> bool:
    if not rels:
        return False
    seen, stack = {0}, [0]
    while stack:
        u = stack.pop()
        for v in range(len(rels)):
            if v not in seen and set(rels[u].schema) & set(rels[v].schema):
                seen.add(v)
                stack.append(v)
    return len(seen) == len(rels)


def gyo(rels: Sequence[Relation]) -> tuple:
    """GYO reduction. Returns (acyclic, parent) where parent maps an eliminated
    edge to the edge that absorbed it (a join tree when acyclic)."""
    edges = {i: set(r.schema) for i, r in enumerate(rels)}
    alive = sorted(edges, key=lambda i: rels[i].name)
    parent = {}
    changed = True
    while changed and len(alive) > 1:
        changed = False
        counts: dict = {}
        for i in alive:
            for a in edges[i]:
                counts[a] = counts.get(a, 0) + 1
        for i in alive:
            lonely = {a for a in edges[i] if counts[a] == 1}
            if lonely:
                edges[i] -= lonely
                changed = True
        for i in list(alive):
            hosts = [j for j in alive if j != i and edges[i] <= edges[j]]
            if hosts:
                orig = set(rels[i].schema)
                j = min(hosts, key=lambda k: (-len(orig & set(rels[k].schema)), rels[k].name))
                parent[i] = j
                alive.remove(i)
                changed = True
    return len(alive) <= 1, parent


def is_acyclic(rels: Sequence[Relation]) -> bool:
    return gyo(rels)[0]


def acyclic_spec(spec_id: str, rels: Sequence[Relation]) -> JoinSpec:
    """Build an acyclic JoinSpec over relations whose hypergraph is acyclic and connected."""
    ok, parent = gyo(rels)
    if not ok:
        raise StructureError(f"{spec_id}: relations are cyclic")
    edges = []
    for c, p in sorted(parent.items()):
        common = shared(rels[p], rels[c])
        if not common:
            raise StructureError(f"{spec_id}: relations are not connected")
        edges.append((rels[p].name, rels[c].name, common[0]))
    shape = "acyclic"
    return JoinSpec(spec_id, shape, list(rels), edges=tuple(edges))


# -- evaluation -------------------------------------------------------------


def natural_join(rels: Sequence[Relation], name: str = "join", row_cap: int | None = None) -> Relation:
    """Hash-based natural join; output schema is the sorted attribute union."""
    rels = list(rels)
    if not rels:
        raise StructureError("natural join of no relations")
    # Greedy order: always extend with a relation sharing attributes if possible.
    order = [min(range(len(rels)), key=lambda i: (len(rels[i]), rels[i].name))]
    covered = set(rels[order[0]].schema)
    while len(order) < len(rels):
        rest = [i for i in range(len(rels)) if i not in order]
        linked = [i for i in rest if covered & set(rels[i].schema)]
        nxt = min(linked or rest, key=lambda i: (len(rels[i]), rels[i].name))
        order.append(nxt)
        covered |= set(rels[nxt].schema)
    schema = list(rels[order[0]].schema)
    partial = list(rels[order[0]].rows)
    for i in order[1:]:
        r = rels[i]
        common = [a for a in r.schema if a in schema]
        extra = [a for a in r.schema if a not in schema]
        lpos = [schema.index(a) for a in common]
        rpos = [r.schema.index(a) for a in common]
        epos = [r.schema.index(a) for a in extra]
        table: dict = {}
        for row in r.rows:
            table.setdefault(tuple(row[p] for p in rpos), []).append(tuple(row[p] for p in epos))
        nxt_rows = []
        for row in partial:
            for ext in table.get(tuple(row[p] for p in lpos), ()):
                nxt_rows.append(row + ext)
            if row_cap is not None and len(nxt_rows) > row_cap:
                raise CapacityError(f"{name}: intermediate join exceeds row cap {row_cap}")
        partial = nxt_rows
        schema += extra
    out_schema = sorted(schema)
    perm = [schema.index(a) for a in out_schema]
    return Relation(name, tuple(out_schema), [tuple(row[p] for p in perm) for row in partial])


def evaluate(spec: JoinSpec, row_cap: int | None = None) -> set:
    """Result rows of a spec in output-schema order."""
    return set(natural_join(spec.relations, spec.id, row_cap).rows)


# -- cycle breaking ---------------------------------------------------------


@dataclass
class CycleDecomposition:
    skeleton: JoinSpec
    residual: Relation
    removed: tuple
    bridge_attrs: tuple
    residual_max_degree: int


def break_cycles(spec: JoinSpec, row_cap: int = 10**6) -> CycleDecomposition:
    """Remove the fewest relations (at most two) that leave a connected acyclic skeleton.

    Ties go to the smallest total removed row count, then to the skeleton
    whose sorted relation names come first (the rightmost relations go).
    The removed relations are joined into one residual relation.
    """
    rels = spec.relations
    if is_acyclic(rels):
        raise NotCyclicError(f"join {spec.id!r} is not cyclic")
    best = None
    for size in (1, 2):
        for combo in combinations(range(len(rels)), size):
            keep = [r for i, r in enumerate(rels) if i not in combo]
            if not keep or not connected(keep) or not is_acyclic(keep):
                continue
            cost = (sum(len(rels[i]) for i in combo), sorted(r.name for r in keep))
            if best is None or cost < best[0]:
                best = (cost, combo, keep)
        if best is not None:
            break
    if best is None:
        raise StructureError(f"join {spec.id!r}: no removal set of at most 2 relations acyclifies it")
    _, combo, keep = best
    removed = [rels[i] for i in combo]
    residual = natural_join(removed, "residual(" + ",".join(r.name for r in removed) + ")", row_cap)
    if len(residual) > row_cap:
        raise CapacityError(f"join {spec.id!r}: residual has {len(residual)} rows, cap {row_cap}")
    skeleton = acyclic_spec(f"{spec.id}/skeleton", keep)
    skel_attrs = {a for r in keep for a in r.schema}
    bridge = tuple(a for a in residual.schema if a in skel_attrs)
    if bridge:
        build_stats(residual, [bridge])
        mdeg = residual.histogram(bridge).max_degree
    else:
        mdeg = len(residual)
    return CycleDecomposition(skeleton, residual, tuple(r.name for r in removed), bridge, mdeg)
