import random
import statistics
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import chi_square_p, product_join, random_chain, random_relation
from joinunion.errors import EmptyJoinError, EstimatorError, ProbabilityError
from joinunion.joins import JoinSpec
from joinunion.relation import make_relation
from joinunion.sampler import (
    DEADEND,
    JoinDataGraph,
    JoinSampler,
    WalkSample,
    WeightMode,
    exact_weights,
    ht_size,
    ht_update,
    olken_bound,
    random_walk,
    walk_probability,
)


def rel(name, schema, rows):
    return make_relation(name, schema, rows)


def chain(*rels, attrs):
    return JoinSpec("J", "chain", list(rels), attrs)


def test_olken_bound_product_formula():
    r1 = rel("R1", ("A", "B"), [(0, 1), (1, 1), (2, 2)])
    r2 = rel("R2", ("B", "C"), [(1, 1), (1, 2), (2, 1)])
    r3 = rel("R3", ("C", "D"), [(1, 1), (1, 2), (1, 3), (2, 1)])
    assert olken_bound(chain(r1, r2, r3, attrs=("B", "C"))) == 3 * 2 * 3


def test_olken_bound_empty_relation():
    r1 = rel("R1", ("A", "B"), [(0, 1)])
    assert olken_bound(chain(r1, rel("R2", ("B", "C"), []), attrs=("B",))) == 0


@given(st.integers(0, 10**6))
def test_olken_bound_is_sound(seed):
    rng = random.Random(seed)
    spec = random_chain(rng, rows=rng.randint(1, 30), domain=5)
    assert olken_bound(spec) >= len(product_join(spec.relations))


def test_exact_weights_single_path():
    r1 = rel("R1", ("A", "B"), [(0, 1), (5, 9)])
    r2 = rel("R2", ("B", "C"), [(1, 2), (8, 8)])
    r3 = rel("R3", ("C", "D"), [(2, 3), (7, 7)])
    w = exact_weights(chain(r1, r2, r3, attrs=("B", "C")))
    assert w.weights == [[1, 0], [1, 0], [1, 0]]
    assert w.total == 1


def test_exact_weights_empty_join():
    r1 = rel("R1", ("A", "B"), [(0, 1)])
    r2 = rel("R2", ("B", "C"), [(2, 2)])
    w = exact_weights(chain(r1, r2, attrs=("B",)))
    assert w.total == 0 and all(x == 0 for ws in w.weights for x in ws)
    with pytest.raises(EmptyJoinError):
        JoinSampler(chain(r1, r2, attrs=("B",))).sample(0)


@given(st.integers(0, 10**6))
def test_exact_weights_total_is_join_size(seed):
    rng = random.Random(seed)
    spec = random_chain(rng, rows=rng.randint(1, 20), domain=4)
    assert exact_weights(spec).total == len(product_join(spec.relations))


def test_single_result_is_always_returned():
    r1 = rel("R1", ("A", "B"), [(0, 1), (3, 4)])
    r2 = rel("R2", ("B", "C"), [(1, 2)])
    for mode in WeightMode:
        s = JoinSampler(chain(r1, r2, attrs=("B",)), mode)
        assert {s.sample(random.Random(i)) for i in range(30)} == {(0, 1, 2)}


def four_results():
    r1 = rel("R1", ("A", "B"), [(0, 0), (1, 0)])
    r2 = rel("R2", ("B", "C"), [(0, 0), (0, 1)])
    return chain(r1, r2, attrs=("B",))


@pytest.mark.parametrize("mode", list(WeightMode))
def test_uniform_over_four_results(mode):
    spec = four_results()
    truth = sorted(product_join(spec.relations))
    assert len(truth) == 4
    s, rng = JoinSampler(spec, mode), random.Random(1)
    counts = Counter(s.sample(rng) for _ in range(40000))
    assert set(counts) == set(truth)
    assert all(abs(counts[t] / 40000 - 0.25) <= 0.01 for t in truth)
    assert chi_square_p(counts, truth) > 0.01


def skewed():
    r1 = rel("R1", ("A", "B"), [(i, i % 3) for i in range(12)])
    r2 = rel("R2", ("B", "C"), [(0, c) for c in range(10)] + [(1, 0), (2, 0), (2, 1)])
    r3 = rel("R3", ("C", "D"), [(c, d) for c in range(10) for d in range(1 + (c == 0) * 5)])
    return chain(r1, r2, r3, attrs=("B", "C"))


def test_olken_on_skew_is_uniform_with_more_rejections():
    spec = skewed()
    truth = sorted(product_join(spec.relations))
    exact, olken = JoinSampler(spec, "exact"), JoinSampler(spec, "olken")
    rng = random.Random(4)
    ce = Counter(exact.sample(rng) for _ in range(10000))
    co = Counter(olken.sample(rng) for _ in range(10000))
    assert exact.rejections == 0
    assert olken.rejections > exact.rejections
    assert chi_square_p(ce, truth) > 0.01
    assert chi_square_p(co, truth) > 0.01


def test_cyclic_sampling_is_uniform():
    rng = random.Random(8)
    rels = [random_relation(rng, "R", ("A", "B"), 20, 4), random_relation(rng, "S", ("B", "C"), 20, 4),
            random_relation(rng, "T", ("A", "C"), 8, 4)]
    spec = JoinSpec("tri", "cyclic", rels)
    truth = sorted(product_join(rels))
    s = JoinSampler(spec)
    assert s.exact_size() == len(truth)
    assert s.bound >= len(truth)
    counts = Counter(s.sample(rng) for _ in range(100 * len(truth)))
    assert set(counts) <= set(truth)
    assert chi_square_p(counts, truth) > 0.01


def walk_example():
    # Root R has 5 rows; a1 reaches 2 rows of S and b2 reaches 3 rows of T.
    r = rel("R", ("A", "B"), [(1, 10), (2, 20), (3, 20), (4, 30), (5, 40)])
    s = rel("S", ("B", "C"), [(10, 100), (10, 200), (20, 100)])
    t = rel("T", ("C", "D"), [(200, 1), (200, 2), (200, 3), (100, 1)])
    return chain(r, s, t, attrs=("B", "C"))


def test_walk_probability_example():
    g = JoinDataGraph(walk_example())
    p = walk_probability(g, (1, 10, 200, 1))
    assert Fraction(p).limit_denominator(1000) == Fraction(1, 5) * Fraction(1, 2) * Fraction(1, 3)
    rng, hits, n = random.Random(2), 0, 60000
    for _ in range(n):
        w = random_walk(g, rng)
        hits += w.ok and w.row == (1, 10, 200, 1)
        if w.ok:
            assert w.p == pytest.approx(walk_probability(g, w.row))
    assert abs(hits / n - 1 / 30) < 4 * (1 / 30 * (29 / 30) / n) ** 0.5


def test_walk_probability_single_path():
    r = rel("R", ("A", "B"), [(0, 1), (2, 3), (4, 5)])
    s = rel("S", ("B", "C"), [(1, 9), (3, 9), (5, 9)])
    g = JoinDataGraph(chain(r, s, attrs=("B",)))
    assert walk_probability(g, (0, 1, 9)) == pytest.approx(1 / 3)
    assert walk_probability(g, (0, 1, 8)) == 0.0


def test_walk_dead_end():
    r = rel("R", ("A", "B"), [(0, 7)])
    s = rel("S", ("B", "C"), [(1, 1)])
    w = random_walk(JoinDataGraph(chain(r, s, attrs=("B",))), random.Random(0))
    assert w.outcome == DEADEND and w.row is None and not w.ok


def test_ht_size_examples():
    assert ht_size([WalkSample((1,), 1 / 20)]) == pytest.approx(20)
    assert ht_size([WalkSample(None, 0.0, DEADEND)] * 4) == 0
    with pytest.raises(EstimatorError):
        ht_size([])


def big_chain(seed):
    rng = random.Random(seed)
    r1 = rel("R1", ("A", "B"), [(i, rng.randrange(40)) for i in range(250)])
    r2 = rel("R2", ("B", "C"), sorted({(rng.randrange(40), rng.randrange(60)) for _ in range(400)}))
    r3 = rel("R3", ("C", "D"), sorted({(rng.randrange(60), rng.randrange(100)) for _ in range(120)}))
    return chain(r1, r2, r3, attrs=("B", "C"))


def test_ht_size_error_below_five_percent():
    errs = []
    for seed in range(5):
        spec = big_chain(seed)
        truth = exact_weights(spec).total
        assert 3000 <= truth <= 8000
        s, rng = JoinSampler(spec), random.Random(seed)
        errs.append(abs(ht_size([s.walk(rng) for _ in range(10000)]) - truth) / truth)
    assert statistics.median(errs) < 0.05


def test_ht_update_examples():
    assert ht_update(10, 1, 1 / 20) == pytest.approx(15)
    assert ht_update(20, 7, 1 / 20) == pytest.approx(20)
    assert ht_update(10, 1, None) == pytest.approx(5)
    with pytest.raises(ProbabilityError):
        ht_update(10, 1, 0.0)


def test_streaming_equals_batch():
    s, rng = JoinSampler(big_chain(9)), random.Random(9)
    walks = [s.walk(rng) for _ in range(1000)]
    est = 0.0
    for m, w in enumerate(walks):
        est = ht_update(est, m, w.p if w.ok else None)
    batch = ht_size(walks)
    assert abs(est - batch) <= 1e-9 * batch


def test_ht_is_unbiased_by_enumeration():
    # Exact expectation over all walks: sum over results of p(t) * 1/p(t) = |J|.
    spec = walk_example()
    g = JoinDataGraph(spec)
    truth = product_join(spec.relations)
    assert sum(walk_probability(g, t) * (1 / walk_probability(g, t)) for t in truth) == pytest.approx(len(truth))
    assert sum(walk_probability(g, t) for t in truth) <= 1 + 1e-12


def test_contains_and_size_estimate():
    spec = four_results()
    s = JoinSampler(spec, "olken")
    assert s.contains((0, 0, 1)) and not s.contains((0, 1, 1))
    assert s.exact_size() == 4 and s.size_estimate() == s.bound >= 4
    assert JoinSampler(spec).size_estimate() == 4
