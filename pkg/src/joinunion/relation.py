"""In-memory relations with hash indexes and exact degree histograms."""

from __future__ import annotations

import csv
import gc
import operator
import re
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .errors import (
    DuplicateRowError,
    IngestionError,
    PredicateError,
    SchemaError,
    StatsMissingError,
)

Scalar = Union[int, str]
# A single attribute name, or a tuple of names for a composite key.
AttrKey = Union[str, tuple]

_INT_RE = re.compile(r"^[+-]?\d+$")


def parse_scalar(token: str) -> Scalar:
    return int(token) if _INT_RE.match(token) else token


def _norm_key(attrs: AttrKey) -> tuple:
    return (attrs,) if isinstance(attrs, str) else tuple(attrs)


@dataclass
class Histogram:
    attribute: AttrKey
    degree: dict
    max_degree: int
    cardinality: int

    @classmethod
    def from_index(cls, attribute: AttrKey, index: dict) -> "Histogram":
        degree = {v: len(ids) for v, ids in index.items()}
        return cls(attribute, degree, max(degree.values(), default=0), len(degree))

    def d(self, value) -> int:
        return self.degree.get(value, 0)


@dataclass
class Relation:
    """A duplicate-free bag of rows over an ordered schema.

    Indexes and histograms are keyed by attribute name, or by a tuple of
    names for composite keys. Index values for a composite key are tuples.
    """

    name: str
    schema: tuple
    rows: list
    indexes: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.schema = tuple(self.schema)
        if len(set(self.schema)) != len(self.schema):
            raise SchemaError(f"relation {self.name!r}: repeated attribute in schema {self.schema}")
        self._row_set = None

    def __len__(self) -> int:
        return len(self.rows)

    def position(self, attr: str) -> int:
        try:
            return self.schema.index(attr)
        except ValueError:
            raise SchemaError(f"relation {self.name!r} has no attribute {attr!r}") from None

    def positions(self, attrs: AttrKey) -> tuple:
        return tuple(self.position(a) for a in _norm_key(attrs))

    def key_getter(self, attrs: AttrKey):
        """Return a function row -> key value (scalar for one attribute, tuple otherwise)."""
        pos = self.positions(attrs)
        if isinstance(attrs, str) or len(pos) == 1:
            return operator.itemgetter(pos[0])
        if not pos:
            return lambda row: ()
        return operator.itemgetter(*pos)

    def has_index(self, attrs: AttrKey) -> bool:
        return _canon(attrs) in self.indexes

    def index(self, attrs: AttrKey) -> dict:
        key = _canon(attrs)
        if key not in self.indexes:
            raise StatsMissingError(f"relation {self.name!r} has no index on {attrs!r}")
        return self.indexes[key]

    def histogram(self, attrs: AttrKey) -> Histogram:
        key = _canon(attrs)
        if key not in self.stats:
            raise StatsMissingError(f"relation {self.name!r} has no statistics on {attrs!r}")
        return self.stats[key]

    def ensure_stats(self, attrs: AttrKey) -> Histogram:
        if not self.has_index(attrs):
            build_stats(self, [attrs])
        return self.histogram(attrs)

    @property
    def row_set(self) -> frozenset:
        if self._row_set is None:
            self._row_set = frozenset(self.rows)
        return self._row_set

    def column(self, attr: str) -> list:
        p = self.position(attr)
        return [r[p] for r in self.rows]


def _canon(attrs: AttrKey) -> AttrKey:
    if isinstance(attrs, str):
        return attrs
    t = tuple(attrs)
    return t[0] if len(t) == 1 else t


def make_relation(name: str, schema: Sequence[str], rows: Iterable, *, dedup: bool = False) -> Relation:
    """Build a relation from Python rows, enforcing arity and the no-duplicates rule."""
    schema = tuple(schema)
    out, seen = [], set()
    for i, row in enumerate(rows):
        row = tuple(row)
        if len(row) != len(schema):
            raise IngestionError(f"{name}: row {i} has {len(row)} values, schema has {len(schema)}")
        if row in seen:
            if dedup:
                continue
            raise DuplicateRowError(f"{name}: duplicate row {row!r}")
        seen.add(row)
        out.append(row)
    return Relation(name, schema, out)


def load_csv(path, name: str, schema: Sequence[str] | None = None, *, dedup: bool = False) -> Relation:
    """Read a headed CSV file. Integer-looking fields become ints, everything else str."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: missing header row") from None
        if schema is not None and list(schema) != header:
            raise IngestionError(f"{path}: header {header} does not match schema {list(schema)}")
        width = len(header)
        rows, seen = [], set()
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != width:
                raise IngestionError(f"{path}:{line}: expected {width} fields, found {len(row)}")
            if any(tok == "" for tok in row):
                raise IngestionError(f"{path}:{line}: missing field")
            tup = tuple(parse_scalar(tok) for tok in row)
            if tup in seen:
                if dedup:
                    continue
                raise DuplicateRowError(f"{path}:{line}: duplicate row {tup!r}")
            seen.add(tup)
            rows.append(tup)
    return Relation(name, tuple(header), rows)


def write_csv(path, schema: Sequence[str], rows: Iterable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(schema)
        w.writerows(rows)


def build_stats(r: Relation, attrs: Iterable[AttrKey]) -> Relation:
    """Build hash indexes and degree histograms on each attribute (or composite key)."""
    with no_gc():
        for attr in attrs:
            key = _canon(attr)
            get = r.key_getter(key)
            index: dict = {}
            lookup = index.get
            for rid, v in enumerate(map(get, r.rows)):
                ids = lookup(v)
                if ids is None:
                    index[v] = [rid]
                else:
                    ids.append(rid)
            r.indexes[key] = index
            r.stats[key] = Histogram.from_index(key, index)
    return r


@contextmanager
def no_gc():
    # Index construction allocates one list per key; cyclic GC passes over a
    # large heap dominate the cost and find nothing to free.
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


_COMPARATORS = {
    "=": operator.eq,
    "==": operator.eq,
    "!=": operator.ne,
    "≠": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    "≤": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "≥": operator.ge,
}


@dataclass(frozen=True)
class Predicate:
    attribute: str
    comparator: str
    constant: Scalar

    def __post_init__(self):
        if self.comparator not in _COMPARATORS:
            raise PredicateError(f"unknown comparator {self.comparator!r}")

    def test(self, value) -> bool:
        return _COMPARATORS[self.comparator](value, self.constant)


def push_down(r: Relation, p: Predicate) -> Relation:
    """Filter rows by a selection predicate, rebuilding stats that existed on the input."""
    if p.attribute not in r.schema:
        raise PredicateError(f"relation {r.name!r} has no attribute {p.attribute!r}")
    pos = r.position(p.attribute)
    kinds = {type(row[pos]) for row in r.rows}
    if kinds and type(p.constant) not in kinds:
        raise PredicateError(
            f"{r.name}.{p.attribute}: constant {p.constant!r} has type "
            f"{type(p.constant).__name__}, column holds {sorted(k.__name__ for k in kinds)}"
        )
    try:
        rows = [row for row in r.rows if p.test(row[pos])]
    except TypeError as exc:  # mixed-type column compared with an ordering operator
        raise PredicateError(f"{r.name}.{p.attribute}: {exc}") from None
    out = Relation(r.name, r.schema, rows)
    return build_stats(out, list(r.indexes))


def domain_intersection(relations: Sequence[tuple]) -> set:
    """Values present in every (relation, attribute) domain; the attributes must be indexed."""
    domains = []
    for rel, attr in relations:
        if not rel.has_index(attr):
            raise StatsMissingError(f"relation {rel.name!r} has no index on {attr!r}")
        domains.append(rel.index(attr).keys())
    if not domains:
        return set()
    domains.sort(key=len)
    out = set(domains[0])
    for d in domains[1:]:
        out.intersection_update(d)
        if not out:
            break
    return out
