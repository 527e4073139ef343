import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import overlapping_chains, product_join, random_relation
from joinunion.errors import CapacityError, MembershipError
from joinunion.joins import JoinSpec
from joinunion.oracle import from_results, hash_join, nested_loop_join, oracle
from joinunion.relation import make_relation
from joinunion.verify import _merge, check_membership, chi_square_uniform, lag1_autocorrelation, ratio_table, verify


def test_single_tuple_join():
    spec = JoinSpec("J1", "chain", [make_relation("R", ("A", "B"), [(1, 2)])])
    o = oracle([spec])
    assert o.union_size == 1 and o.table == {"J1": {1: 1}}


def test_micro_case_table():
    o = from_results(["J1", "J2", "J3"], {"J1": {"x", "y", "z"}, "J2": {"y", "z"}, "J3": {"z"}})
    assert o.table == {"J1": {1: 1, 2: 1, 3: 1}, "J2": {1: 0, 2: 1, 3: 1}, "J3": {1: 0, 2: 0, 3: 1}}
    assert o.overlaps[frozenset(["J1", "J2"])] == 2
    assert o.cover == {"J1": 3, "J2": 0, "J3": 0}


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_union_identity(seed, n):
    o = oracle(overlapping_chains(seed, n=n))
    assert sum(Fraction(o.table[j][k], k) for j in o.ids for k in o.table[j]) == o.union_size
    assert sum(o.cover.values()) == o.union_size


@given(st.integers(0, 10**6))
def test_nested_and_hash_agree_with_product(seed):
    rng = random.Random(seed)
    rels = [random_relation(rng, "R", ("A", "B"), 10, 4), random_relation(rng, "S", ("B", "C"), 10, 4),
            random_relation(rng, "T", ("A", "C"), 10, 4)]
    spec = JoinSpec("tri", "cyclic", rels)
    truth = product_join(rels)
    assert nested_loop_join(spec) == truth == hash_join(spec)
    assert oracle([spec], "nested").union == oracle([spec]).union


def test_cap_refusal_reports_row_counts():
    rels = [make_relation("R", ("A",), [(i,) for i in range(30)]), make_relation("S", ("B",), [(i,) for i in range(30)])]
    spec = JoinSpec("J1", "acyclic", rels, edges=())
    for method in ("hash", "nested"):
        with pytest.raises(CapacityError, match="R=30, S=30"):
            oracle([spec], method, row_cap=100)


def uniform_universe(k=40):
    return {(i, i % 3) for i in range(k)}


def test_null_calibration_passes():
    u = sorted(uniform_universe())
    passes = 0
    for seed in range(20):
        rng = random.Random(seed)
        rows = [rng.choice(u) for _ in range(100 * len(u))]
        passes += verify(rows, set(u)).passed
    assert passes >= 18


def test_first_join_only_fails():
    specs = overlapping_chains(2, n=3)
    o = oracle(specs)
    first = sorted(o.results["J1"])
    assert len(first) < o.union_size
    rng = random.Random(0)
    rows = [rng.choice(first) for _ in range(100 * o.union_size)]
    assert not verify(rows, o.union).passed


def test_membership_is_a_hard_failure():
    with pytest.raises(MembershipError):
        check_membership([(1,), (9,)], {(1,)})
    with pytest.raises(MembershipError):
        verify([(9,)], {(1,)})


def test_merge_reaches_min_expected():
    exp, obs = _merge([2.0] * 7, [1, 2, 3, 4, 5, 6, 7], 5)
    assert exp == [6.0, 8.0] and obs == [6, 22]
    assert sum(obs) == 28


def test_chi_square_degenerate_inputs():
    assert chi_square_uniform([], {(1,)}).passed
    assert chi_square_uniform([(1,)] * 10, {(1,)}).dof == 0


def test_lag1_autocorrelation():
    u = [(i,) for i in range(10)]
    sorted_run = [u[i // 100] for i in range(1000)]
    r, sigma = lag1_autocorrelation(sorted_run, u)
    assert r > 0.9 and sigma == pytest.approx(1 / 1000**0.5)
    rng = random.Random(1)
    r, sigma = lag1_autocorrelation([rng.choice(u) for _ in range(5000)], u)
    assert abs(r) < 4 * sigma


def test_ratio_table():
    t = ratio_table({"J1": 10, "J2": 5}, {"J1": 8, "J2": 6}, 12, 12)
    assert t[0]["estimated"] == pytest.approx(10 / 12)
    assert t[0]["relative_error"] == pytest.approx(0.25)
