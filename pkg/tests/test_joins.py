import random
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import product_join, random_relation
from joinunion.errors import CapacityError, NotCyclicError, StructureError
from joinunion.joins import (
    JoinSpec,
    break_cycles,
    evaluate,
    gyo,
    is_acyclic,
    join_tree,
    natural_join,
    validate_workload,
)
from joinunion.relation import make_relation


def rel(name, schema, rows=()):
    return make_relation(name, schema, rows)


def chain(jid, *schemas, attrs):
    return JoinSpec(jid, "chain", [rel(f"R{i}", s) for i, s in enumerate(schemas)], attrs)


def test_validate_same_schema_ok():
    a = chain("J1", ("A", "B"), ("B", "C", "D"), ("D", "E"), attrs=("B", "D"))
    b = chain("J2", ("A", "B", "C"), ("C", "D", "E"), attrs=("C",))
    validate_workload([a, b])


def test_validate_schema_mismatch_names_both():
    a = chain("J1", ("A", "B"), ("B", "C"), attrs=("B",))
    b = chain("J2", ("A", "B"), ("B", "D"), attrs=("B",))
    with pytest.raises(StructureError, match="'J1'.*'J2'"):
        validate_workload([a, b])


def test_validate_dangling_attribute():
    a = chain("J1", ("A", "B"), ("C", "D"), attrs=("B",))
    with pytest.raises(StructureError, match="'B' missing from relation 'R1'"):
        validate_workload([a])


def test_validate_empty_and_duplicate_ids():
    with pytest.raises(StructureError):
        validate_workload([])
    a = chain("J1", ("A", "B"), ("B", "C"), attrs=("B",))
    with pytest.raises(StructureError):
        validate_workload([a, a])


def test_acyclic_edges_need_shared_label():
    r, s, t = rel("R", ("A", "B")), rel("S", ("B", "C")), rel("T", ("C", "D"))
    ok = JoinSpec("J", "acyclic", [r, s, t], edges=(("R", "S", "B"), ("S", "T", "C")))
    assert [n.relation.name for n in join_tree(ok).nodes] == ["R", "S", "T"]
    bad = JoinSpec("J", "acyclic", [r, s, t], edges=(("R", "S", "B"), ("R", "T", "C")))
    with pytest.raises(StructureError):
        join_tree(bad)


def test_running_intersection_is_checked():
    # A appears in R and T but not on the tree path through S.
    r, s, t = rel("R", ("A", "B")), rel("S", ("B", "C")), rel("T", ("C", "A"))
    with pytest.raises(StructureError):
        join_tree(JoinSpec("J", "chain", [r, s, t], ("B", "C")))


def test_gyo_classifies_triangle_and_path():
    tri = [rel("R", ("A", "B")), rel("S", ("B", "C")), rel("T", ("A", "C"))]
    path = [rel("R", ("A", "B")), rel("S", ("B", "C")), rel("T", ("C", "D"))]
    assert not is_acyclic(tri)
    assert is_acyclic(path)
    ok, parent = gyo(path)
    assert ok and len(parent) == 2


def triangle(rows=None):
    rows = rows or {}
    return JoinSpec("tri", "cyclic", [rel("R", ("A", "B"), rows.get("R", [(1, 1), (2, 2)])),
                                      rel("S", ("B", "C"), rows.get("S", [(1, 1), (2, 2)])),
                                      rel("T", ("A", "C"), rows.get("T", [(1, 1), (2, 2)]))])


def test_break_cycles_triangle():
    d = break_cycles(triangle())
    assert d.removed == ("T",)
    assert sorted(r.name for r in d.skeleton.relations) == ["R", "S"]
    assert d.bridge_attrs == ("A", "C")
    assert d.residual_max_degree == 1


def test_break_cycles_not_cyclic():
    spec = chain("J", ("A", "B"), ("B", "C"), attrs=("B",))
    with pytest.raises(NotCyclicError):
        break_cycles(JoinSpec("J", "cyclic", spec.relations))


def test_break_cycles_prefers_tiny_relation_on_four_cycle():
    rng = random.Random(3)
    rels = [random_relation(rng, "R", ("A", "B"), 20, 5), random_relation(rng, "S", ("B", "C"), 20, 5),
            random_relation(rng, "T", ("C", "D"), 3, 5), random_relation(rng, "U", ("D", "A"), 20, 5)]
    d = break_cycles(JoinSpec("sq", "cyclic", rels))
    # Enumerate single-relation break sets by hand: each leaves a path, so the lightest wins.
    sizes = {r.name: len(r) for r in rels}
    assert d.removed == (min(sizes, key=sizes.get),) == ("T",)


def test_break_cycles_residual_cap():
    full = [(i, j) for i in range(5) for j in range(5)]
    rows = {"R": full, "S": full, "T": full}
    with pytest.raises(CapacityError):
        break_cycles(triangle(rows), row_cap=10)


def _recombine(d):
    skel = product_join(d.skeleton.relations)
    skel_schema = sorted({a for r in d.skeleton.relations for a in r.schema})
    res_schema = list(d.residual.schema)
    out_schema = sorted(set(skel_schema) | set(res_schema))
    out = set()
    for s in skel:
        b = dict(zip(skel_schema, s))
        for t in d.residual.rows:
            if all(b.get(a, v) == v for a, v in zip(res_schema, t)):
                full = {**b, **dict(zip(res_schema, t))}
                out.add(tuple(full[a] for a in out_schema))
    return out


@given(st.integers(0, 10**6))
def test_break_cycles_lossless(seed):
    rng = random.Random(seed)
    spec = JoinSpec("tri", "cyclic", [random_relation(rng, "R", ("A", "B"), 12, 4),
                                      random_relation(rng, "S", ("B", "C"), 12, 4),
                                      random_relation(rng, "T", ("A", "C", "D"), 12, 4),
                                      random_relation(rng, "V", ("D", "E"), 6, 4)])
    if is_acyclic(spec.relations):
        return
    d = break_cycles(spec)
    assert is_acyclic(d.skeleton.relations)
    assert sorted(d.removed + tuple(r.name for r in d.skeleton.relations)) == ["R", "S", "T", "V"]
    assert _recombine(d) == product_join(spec.relations)
    if d.bridge_attrs:
        combos = {}
        pos = [d.residual.schema.index(a) for a in d.bridge_attrs]
        for t in d.residual.rows:
            k = tuple(t[p] for p in pos)
            combos[k] = combos.get(k, 0) + 1
        assert d.residual_max_degree == max(combos.values(), default=0)


@given(st.integers(0, 10**6))
def test_natural_join_matches_product(seed):
    rng = random.Random(seed)
    rels = [random_relation(rng, "R", ("A", "B"), 10, 4), random_relation(rng, "S", ("B", "C"), 10, 4),
            random_relation(rng, "T", ("C", "A", "D"), 10, 4)]
    j = natural_join(rels)
    assert j.schema == ("A", "B", "C", "D")
    assert set(j.rows) == product_join(rels)
    assert len(j.rows) == len(set(j.rows))


def test_natural_join_row_cap():
    rels = [rel("R", ("A",), [(i,) for i in range(10)]), rel("S", ("B",), [(i,) for i in range(10)])]
    with pytest.raises(CapacityError):
        natural_join(rels, row_cap=50)


def test_contains_is_projection_membership():
    spec = chain("J", ("A", "B"), ("B", "C"), attrs=("B",))
    spec.relations[0].rows.extend([(1, 2)])
    spec.relations[1].rows.extend([(2, 3)])
    assert spec.contains((1, 2, 3))
    assert not spec.contains((1, 2, 4))
    assert evaluate(spec) == {(1, 2, 3)}


def test_tree_root_is_smallest_name_for_acyclic():
    r, s, t = rel("b", ("A", "B")), rel("a", ("B", "C")), rel("c", ("B", "D"))
    spec = JoinSpec("J", "acyclic", [r, s, t], edges=(("a", "b", "B"), ("a", "c", "B")))
    tree = join_tree(spec)
    assert tree.nodes[0].relation.name == "a"
    assert [tree.nodes[i].relation.name for i in tree.nodes[0].children] == ["b", "c"]


def test_all_two_relation_break_sets_considered():
    # Two triangles sharing the pair (A, C); the chosen break set must be of minimal size.
    rels = [rel(n, s, [(1, 1)]) for n, s in
            [("P", ("A", "B")), ("Q", ("B", "C")), ("R", ("C", "A")), ("S", ("A", "D")), ("T", ("D", "C"))]]
    spec = JoinSpec("k", "cyclic", rels)
    d = break_cycles(spec)
    keep = [r for r in rels if r.name not in d.removed]
    assert is_acyclic(keep)
    smaller = [c for c in combinations(range(5), len(d.removed) - 1)
               if is_acyclic([r for i, r in enumerate(rels) if i not in c])] if len(d.removed) > 1 else []
    assert not smaller
