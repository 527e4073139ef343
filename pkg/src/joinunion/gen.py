"""Synthetic TPC-H-like workloads with a controllable share of common data.

Every join variant is built from full tuples over the key attributes. A
variant keeps each tuple of a common base with probability ``overlap_scale``
and fills up to ``scale`` tuples with fresh ones whose values lie in a key
range private to that variant. Relations are deduplicated projections of the
variant's tuples, so overlap 0 gives disjoint joins and overlap 1 gives
identical relations for identical shapes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import accumulate
from pathlib import Path

from .errors import ConfigError
from .relation import make_relation, write_csv
from .workload import (
    JoinEntry,
    OracleConfig,
    RelationEntry,
    SamplerConfig,
    WorkloadConfig,
    assemble_specs,
)

KEYS = ("regionkey", "nationkey", "custkey", "orderkey", "partkey", "suppkey")
CHAIN_NAMES = ("nation", "customer", "orders", "lineitem", "partsupp")
SHAPES = ("chain", "wide", "wide_shift", "acyclic", "cyclic")


@dataclass
class GenSpec:
    scale: int = 100
    overlap_scale: float = 0.5
    skew: float = 0.0
    join_count: int = 3
    shape: str | tuple = "chain"
    attributes: int = 6
    domain: int | None = None

    def shapes(self) -> tuple:
        if isinstance(self.shape, str):
            return (self.shape,) * self.join_count
        if len(self.shape) != self.join_count:
            raise ConfigError(f"{len(self.shape)} shapes given for {self.join_count} joins")
        return tuple(self.shape)

    def validate(self) -> None:
        if self.scale < 1:
            raise ConfigError(f"scale must be at least 1, got {self.scale}")
        if not 0 <= self.overlap_scale <= 1:
            raise ConfigError(f"overlap scale must lie in [0, 1], got {self.overlap_scale}")
        if self.skew < 0:
            raise ConfigError(f"skew must be non-negative, got {self.skew}")
        if self.join_count < 1:
            raise ConfigError(f"join count must be positive, got {self.join_count}")
        if self.attributes < 3:
            raise ConfigError(f"need at least 3 attributes, got {self.attributes}")
        for s in self.shapes():
            if s not in SHAPES:
                raise ConfigError(f"unknown shape {s!r}; expected one of {SHAPES}")
            if s in ("acyclic", "cyclic") and self.attributes < 4:
                raise ConfigError(f"shape {s!r} needs at least 4 attributes")


def attribute_names(k: int) -> tuple:
    return KEYS[:k] if k <= len(KEYS) else tuple(f"key{i}" for i in range(k))


def layout(shape: str, attrs: tuple) -> tuple:
    """Relation (name, schema) pairs plus chain join attributes or tree edges."""
    k = len(attrs)
    if shape == "chain":
        names = CHAIN_NAMES if k - 1 <= len(CHAIN_NAMES) else tuple(f"rel{i}" for i in range(k - 1))
        rels = [(names[i], (attrs[i], attrs[i + 1])) for i in range(k - 1)]
        return rels, [attrs[i + 1] for i in range(k - 2)], []
    if shape in ("wide", "wide_shift"):
        cuts = list(range(0, k - 1, 2)) if shape == "wide" else [0] + list(range(1, k - 1, 2))
        rels, joins = [], []
        for i, a in enumerate(cuts):
            b = cuts[i + 1] if i + 1 < len(cuts) else k - 1
            rels.append((f"part{i}", attrs[a:b + 1]))
            if i:
                joins.append(attrs[a])
        return rels, joins, []
    if shape == "acyclic":
        rels = [("hub", attrs[1:4]), ("leaf0", (attrs[0], attrs[1]))]
        edges = [("hub", "leaf0", attrs[1])]
        for i in range(4, k):
            rels.append((f"leaf{i - 3}", (attrs[3], attrs[i])))
            edges.append(("hub", f"leaf{i - 3}", attrs[3]))
        return rels, [], edges
    if shape == "cyclic":
        rels = [("tri0", (attrs[0], attrs[1])), ("tri1", (attrs[1], attrs[2])), ("tri2", (attrs[0], attrs[2]))]
        for i in range(3, k):
            rels.append((f"tail{i - 3}", (attrs[i - 1], attrs[i])))
        return rels, [], []
    raise ConfigError(f"unknown shape {shape!r}")


class _Keys:
    def __init__(self, domain: int, skew: float, rng: random.Random):
        self.domain, self.rng = domain, rng
        self.cum = list(accumulate(1.0 / (i + 1) ** skew for i in range(domain))) if skew > 0 else None

    def draw(self, k: int, offset: int = 0) -> list:
        if self.cum is None:
            return [offset + self.rng.randrange(self.domain) for _ in range(k)]
        return [offset + v for v in self.rng.choices(range(self.domain), cum_weights=self.cum, k=k)]


def variant_tuples(spec: GenSpec, seed) -> list:
    """Full tuples of each join variant, before projection."""
    spec.validate()
    rng = random.Random(seed)
    k = spec.attributes
    domain = spec.domain or spec.scale
    keys = _Keys(domain, spec.skew, rng)
    base = [tuple(col) for col in zip(*(keys.draw(spec.scale) for _ in range(k)))]
    out = []
    for j in range(spec.join_count):
        kept = [t for t in base if rng.random() < spec.overlap_scale]
        fresh_n = spec.scale - len(kept)
        offset = domain * (j + 1)
        fresh = [tuple(col) for col in zip(*(keys.draw(fresh_n, offset) for _ in range(k)))] if fresh_n > 0 else []
        out.append(kept + fresh)
    return out


def build(spec: GenSpec, seed, prefix: str = "J") -> tuple:
    """In-memory relations (by name) and join entries for a generated workload."""
    attrs = attribute_names(spec.attributes)
    tuples = variant_tuples(spec, seed)
    rels, joins = {}, []
    for j, (shape, tup) in enumerate(zip(spec.shapes(), tuples)):
        jid = f"{prefix}{j + 1}"
        schemas, join_attrs, edges = layout(shape, attrs)
        names = {}
        for name, schema in schemas:
            pos = [attrs.index(a) for a in schema]
            rows = sorted({tuple(t[p] for p in pos) for t in tup})
            full = f"{jid}_{name}"
            names[name] = full
            rels[full] = make_relation(full, schema, rows)
        joins.append(JoinEntry(jid, "chain" if shape in ("chain", "wide", "wide_shift") else shape,
                               [names[n] for n, _ in schemas], list(join_attrs),
                               [[names[p], names[c], a] for p, c, a in edges]))
    return rels, joins


def generate_specs(spec: GenSpec, seed) -> list:
    rels, joins = build(spec, seed)
    return assemble_specs(rels, joins)


def write_workload(rels: dict, joins: list, out_dir, sampler: SamplerConfig | None = None,
                   oracle: OracleConfig | None = None) -> WorkloadConfig:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, r in rels.items():
        write_csv(out / f"{name}.csv", r.schema, r.rows)
        entries.append(RelationEntry(name, f"{name}.csv"))
    cfg = WorkloadConfig(entries, joins, sampler or SamplerConfig(), oracle or OracleConfig(), out)
    cfg.save(out / "workload.json")
    return cfg


def generate(spec: GenSpec, seed, out_dir, sampler: SamplerConfig | None = None) -> WorkloadConfig:
    """Write relation CSVs and ``workload.json`` into ``out_dir``."""
    rels, joins = build(spec, seed)
    return write_workload(rels, joins, out_dir, sampler)


# -- presets ----------------------------------------------------------------


def uq1(scale: int = 100, overlap_scale: float = 0.5, skew: float = 0.0) -> GenSpec:
    """Five chain joins of five relations each."""
    return GenSpec(scale, overlap_scale, skew, 5, "chain", 6)


def uq3(scale: int = 100, overlap_scale: float = 0.5, skew: float = 0.0) -> GenSpec:
    """One acyclic join and two chains over three-attribute relations."""
    return GenSpec(scale, overlap_scale, skew, 3, ("acyclic", "wide", "wide_shift"), 6)


def cyclic(scale: int = 100, overlap_scale: float = 0.5, skew: float = 0.0) -> GenSpec:
    return GenSpec(scale, overlap_scale, skew, 2, ("cyclic", "chain"), 5)


def build_uq2(scale: int = 100, seed=0, skew: float = 0.0) -> tuple:
    """Three chains over the same relations, told apart by overlapping range predicates."""
    rels, joins = build(GenSpec(scale, 1.0, skew, 1, "chain", 6), seed, prefix="base")
    base = joins[0]
    domain = scale
    cust = next(n for n in base.relations if n.endswith("customer"))
    ranges = [(0, 0.6), (0.2, 0.8), (0.4, 1.0)]
    out = []
    for j, (lo, hi) in enumerate(ranges):
        preds = [{"relation": cust, "attribute": "custkey", "op": ">=", "value": int(lo * domain)},
                 {"relation": cust, "attribute": "custkey", "op": "<", "value": int(hi * domain)}]
        out.append(JoinEntry(f"J{j + 1}", "chain", list(base.relations), list(base.join_attrs), [], preds))
    return rels, out


PRESETS = ("uq1", "uq2", "uq3", "cyclic")


def build_preset(name: str, scale: int = 100, seed=0, overlap_scale: float = 0.5, skew: float = 0.0) -> tuple:
    if name == "uq2":
        return build_uq2(scale, seed, skew)
    makers = {"uq1": uq1, "uq3": uq3, "cyclic": cyclic}
    if name not in makers:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")
    return build(makers[name](scale, overlap_scale, skew), seed)


def preset_specs(name: str, scale: int = 100, seed=0, overlap_scale: float = 0.5, skew: float = 0.0) -> list:
    rels, joins = build_preset(name, scale, seed, overlap_scale, skew)
    return assemble_specs(rels, joins)
