"""JSON workload files: relations, joins, sampler settings and oracle limits.

Example::

    {
      "relations": [{"name": "nation", "path": "nation.csv"}, ...],
      "joins": [{"id": "J1", "shape": "chain", "relations": ["nation", "customer"],
                 "join_attrs": ["nationkey"],
                 "predicates": [{"relation": "customer", "attribute": "custkey", "op": "<", "value": 50}]}],
      "sampler": {"mode": "cover", "n": 1000, "phi": 500, "gamma": 0.9,
                  "weight_mode": "exact", "estimator": "walk", "seed": 0},
      "oracle": {"enabled": true, "row_cap": 1000000}
    }

Relation paths are relative to the workload file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError, JoinUnionError
from .joins import JoinSpec, validate_workload
from .relation import Predicate, load_csv, push_down

MODES = ("disjoint", "bernoulli", "cover", "online")
ESTIMATORS = ("histogram", "walk", "exact")


@dataclass
class SamplerConfig:
    mode: str = "cover"
    n: int = 1000
    phi: int = 500
    gamma: float = 0.9
    weight_mode: str = "exact"
    estimator: str | None = None
    seed: int = 0
    reuse: bool = True

    @property
    def parameter_source(self) -> str:
        """Estimator in effect: online warm-up uses histograms, the others random walks."""
        if self.estimator is not None:
            return self.estimator
        return "histogram" if self.mode == "online" else "walk"

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"sampler mode must be one of {MODES}, got {self.mode!r}")
        if self.estimator is not None and self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.weight_mode not in ("exact", "olken"):
            raise ConfigError(f"weight mode must be exact or olken, got {self.weight_mode!r}")
        if self.n < 1:
            raise ConfigError(f"sample size must be positive, got {self.n}")
        if self.phi < 1:
            raise ConfigError(f"backtrack period must be positive, got {self.phi}")
        if not 0 <= self.gamma <= 1:
            raise ConfigError(f"confidence target must lie in [0, 1], got {self.gamma}")


@dataclass
class OracleConfig:
    enabled: bool = True
    row_cap: int = 10**6


@dataclass
class RelationEntry:
    name: str
    path: str
    schema: list | None = None
    dedup: bool = False


@dataclass
class JoinEntry:
    id: str
    shape: str
    relations: list
    join_attrs: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    predicates: list = field(default_factory=list)


@dataclass
class WorkloadConfig:
    relations: list
    joins: list
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    base: Path = field(default=Path("."), repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base")
        return d

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _entries(cls, items, what: str) -> list:
    out = []
    for i, item in enumerate(items):
        try:
            out.append(cls(**item))
        except TypeError as exc:
            raise ConfigError(f"{what} entry {i}: {exc}") from None
    return out


def parse_workload(data: dict, base: Path = Path(".")) -> WorkloadConfig:
    for key in ("relations", "joins"):
        if key not in data:
            raise ConfigError(f"workload is missing {key!r}")
    try:
        sampler = SamplerConfig(**data.get("sampler", {}))
        oracle = OracleConfig(**data.get("oracle", {}))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    sampler.validate()
    return WorkloadConfig(_entries(RelationEntry, data["relations"], "relation"),
                          _entries(JoinEntry, data["joins"], "join"), sampler, oracle, Path(base))


def load_workload(path) -> WorkloadConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read workload {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return parse_workload(data, path.parent)


def build_specs(cfg: WorkloadConfig) -> list:
    """Load relations, push predicates down per join and validate the workload."""
    rels = {}
    for e in cfg.relations:
        if e.name in rels:
            raise ConfigError(f"duplicate relation name {e.name!r}")
        rels[e.name] = load_csv(cfg.base / e.path, e.name, e.schema, dedup=e.dedup)
    if cfg.oracle.enabled:
        big = {n: len(r) for n, r in rels.items() if len(r) > cfg.oracle.row_cap}
        if big:
            raise ConfigError(f"relations exceed the oracle row cap {cfg.oracle.row_cap}: {big}")
    return assemble_specs(rels, cfg.joins)


def assemble_specs(rels: dict, joins: list) -> list:
    """JoinSpecs from loaded relations and join entries, predicates applied per join."""
    specs = []
    for j in joins:
        members = []
        for name in j.relations:
            if name not in rels:
                raise ConfigError(f"join {j.id!r} names unknown relation {name!r}")
            members.append(rels[name])
        for p in j.predicates:
            try:
                k = j.relations.index(p["relation"])
                pred = Predicate(p["attribute"], p["op"], p["value"])
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"join {j.id!r}: bad predicate {p}: {exc}") from None
            members[k] = push_down(members[k], pred)
        specs.append(JoinSpec(j.id, j.shape, members, tuple(j.join_attrs), tuple(tuple(e) for e in j.edges)))
    try:
        validate_workload(specs)
    except JoinUnionError as exc:
        raise ConfigError(str(exc)) from None
    return specs
