import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from joinunion.errors import DuplicateRowError, IngestionError, PredicateError, SchemaError, StatsMissingError
from joinunion.relation import (
    Predicate,
    build_stats,
    domain_intersection,
    load_csv,
    make_relation,
    push_down,
    write_csv,
)

rows_2 = st.sets(st.tuples(st.integers(0, 9), st.integers(0, 9)), max_size=40)


def test_load_csv_three_lines(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("A,B\n1,2\n3,4\n5,x\n")
    r = load_csv(p, "R", ["A", "B"])
    assert len(r) == 3 and r.schema == ("A", "B")
    assert r.rows[2] == (5, "x")
    assert r.indexes == {}


def test_load_csv_empty_data(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("A,B\n")
    assert len(load_csv(p, "R", ["A", "B"])) == 0


def test_load_csv_arity_error_names_line(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("A,B\n1,2\n1,2,3\n")
    with pytest.raises(IngestionError, match=r"r\.csv:3"):
        load_csv(p, "R", ["A", "B"])


def test_load_csv_rejects_duplicates_unless_dedup(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("A,B\n1,2\n1,2\n")
    with pytest.raises(DuplicateRowError):
        load_csv(p, "R")
    assert load_csv(p, "R", dedup=True).rows == [(1, 2)]


def test_load_csv_missing_field_and_header_mismatch(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("A,B\n1,\n")
    with pytest.raises(IngestionError, match="missing field"):
        load_csv(p, "R")
    with pytest.raises(IngestionError, match="header"):
        load_csv(p, "R", ["A", "C"])


def test_csv_round_trip_with_quoted_commas(tmp_path):
    p = tmp_path / "r.csv"
    rows = [(1, "a,b"), (-2, "c")]
    write_csv(p, ("A", "B"), rows)
    assert load_csv(p, "R").rows == rows


def test_build_stats_counts_by_hand():
    r = make_relation("R", ["A", "K"], [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)])
    h = build_stats(r, ["A"]).histogram("A")
    assert h.degree == {1: 1, 2: 2, 3: 3}
    assert h.max_degree == 3 and h.cardinality == 3


def test_build_stats_empty_relation():
    h = build_stats(make_relation("R", ["A"], []), ["A"]).histogram("A")
    assert h.degree == {} and h.max_degree == 0 and h.cardinality == 0


def test_build_stats_unknown_attribute():
    with pytest.raises(SchemaError):
        build_stats(make_relation("R", ["A"], [(1,)]), ["Z"])


def test_degree_sum_on_uniform_column():
    rng = random.Random(7)
    r = make_relation("R", ["A", "I"], [(rng.randint(1, 10), i) for i in range(100)])
    h = build_stats(r, ["A"]).histogram("A")
    recount = {}
    for v, _ in r.rows:
        recount[v] = recount.get(v, 0) + 1
    assert sum(h.degree.values()) == 100
    assert h.degree == recount


@given(rows_2)
def test_index_matches_linear_scan(rows):
    r = build_stats(make_relation("R", ["A", "B"], sorted(rows)), ["A", ("A", "B")])
    for v in range(10):
        assert r.index("A").get(v, []) == [i for i, row in enumerate(r.rows) if row[0] == v]
    h = r.histogram("A")
    assert sum(h.degree.values()) == len(r)
    assert h.max_degree == max(h.degree.values(), default=0)
    assert all(len(ids) == 1 for ids in r.index(("A", "B")).values())


def test_push_down_examples():
    r = make_relation("R", ["A"], [(1,), (2,), (3,)])
    assert push_down(r, Predicate("A", "≥", 2)).rows == [(2,), (3,)]
    assert push_down(r, Predicate("A", ">", 9)).rows == []


def test_push_down_rebuilds_existing_stats():
    r = build_stats(make_relation("R", ["A", "B"], [(1, 1), (2, 1), (3, 2)]), ["B"])
    out = push_down(r, Predicate("A", "<", 3))
    assert out.histogram("B").degree == {1: 2}


def test_push_down_type_mismatch():
    r = make_relation("R", ["A"], [(1,), (2,)])
    with pytest.raises(PredicateError):
        push_down(r, Predicate("A", "<", "x"))
    with pytest.raises(PredicateError):
        push_down(r, Predicate("Z", "=", 1))
    with pytest.raises(PredicateError):
        Predicate("A", "~", 1)


ops = st.sampled_from(["=", "!=", "<", "<=", ">", ">="])


@given(rows_2, ops, st.integers(0, 9))
def test_push_down_is_linear_filter_and_idempotent(rows, op, c):
    r = make_relation("R", ["A", "B"], sorted(rows))
    p = Predicate("B", op, c)
    out = push_down(r, p)
    check = {"=": lambda v: v == c, "!=": lambda v: v != c, "<": lambda v: v < c,
             "<=": lambda v: v <= c, ">": lambda v: v > c, ">=": lambda v: v >= c}[op]
    assert out.rows == [row for row in r.rows if check(row[1])]
    assert push_down(out, p).rows == out.rows


def test_domain_intersection_examples():
    r = build_stats(make_relation("R", ["A"], [(1,), (2,), (3,)]), ["A"])
    s = build_stats(make_relation("S", ["B"], [(2,), (3,), (4,)]), ["B"])
    e = build_stats(make_relation("E", ["A"], []), ["A"])
    assert domain_intersection([(r, "A"), (s, "B")]) == {2, 3}
    assert domain_intersection([(r, "A"), (e, "A"), (s, "B")]) == set()


def test_domain_intersection_needs_index():
    r = make_relation("R", ["A"], [(1,)])
    with pytest.raises(StatsMissingError):
        domain_intersection([(r, "A")])


@given(st.lists(st.sets(st.integers(0, 12), max_size=10), min_size=1, max_size=3))
def test_domain_intersection_against_nested_filter(domains):
    rels = [build_stats(make_relation(f"R{i}", ["A"], [(v,) for v in sorted(d)]), ["A"])
            for i, d in enumerate(domains)]
    expect = {v for v in range(13) if all(v in d for d in domains)}
    assert domain_intersection([(r, "A") for r in rels]) == expect


def test_make_relation_rejects_bad_rows():
    with pytest.raises(IngestionError):
        make_relation("R", ["A", "B"], [(1,)])
    with pytest.raises(DuplicateRowError):
        make_relation("R", ["A"], [(1,), (1,)])
    with pytest.raises(SchemaError):
        make_relation("R", ["A", "A"], [])
