"""Test helpers: brute-force oracles by cartesian product and small random workloads."""

import random
from itertools import product

from scipy import stats as sps

from joinunion.joins import JoinSpec
from joinunion.relation import make_relation


def product_join(relations):
    """Natural join by filtering the full cartesian product; rows in sorted-attribute order."""
    schema = sorted({a for r in relations for a in r.schema})
    out = set()
    for combo in product(*(r.rows for r in relations)):
        binding = {}
        ok = True
        for r, row in zip(relations, combo):
            for a, v in zip(r.schema, row):
                if binding.setdefault(a, v) != v:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.add(tuple(binding[a] for a in schema))
    return out


def spec_result(spec):
    return product_join(spec.relations)


def chi_square_p(counts, keys):
    """Plain chi-square p-value against uniform over ``keys`` (no cell merging)."""
    n = sum(counts.get(k, 0) for k in keys)
    obs = [counts.get(k, 0) for k in keys]
    exp = [n / len(keys)] * len(keys)
    return sps.chisquare(obs, exp).pvalue


def random_relation(rng, name, schema, rows, domain):
    data = {tuple(rng.randrange(domain) for _ in schema) for _ in range(rows)}
    return make_relation(name, schema, sorted(data))


def random_chain(rng, jid="J", attrs=("A", "B", "C", "D"), rows=8, domain=4, prefix=""):
    rels = [random_relation(rng, f"{prefix}R{i + 1}", (attrs[i], attrs[i + 1]), rows, domain)
            for i in range(len(attrs) - 1)]
    return JoinSpec(jid, "chain", rels, tuple(attrs[1:-1]))


def variant(rng, spec, jid, keep=0.7, extra=3, domain=4):
    """A copy of ``spec`` with some rows dropped and a few random rows added."""
    rels = []
    for r in spec.relations:
        rows = {t for t in r.rows if rng.random() < keep}
        rows |= {tuple(rng.randrange(domain) for _ in r.schema) for _ in range(extra)}
        rels.append(make_relation(r.name, r.schema, sorted(rows)))
    return JoinSpec(jid, spec.shape, rels, spec.join_attrs, spec.edges)


def overlapping_chains(seed, n=3, attrs=("A", "B", "C", "D"), rows=8, domain=4):
    rng = random.Random(seed)
    base = random_chain(rng, "J1", attrs, rows, domain)
    return [base] + [variant(rng, base, f"J{j + 1}", domain=domain) for j in range(1, n)]
