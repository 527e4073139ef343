"""End-to-end parameter estimation: join sizes, overlaps, |U| and the cover."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

from .overlap import (
    Cover,
    HistogramOverlap,
    KOverlapTable,
    OverlapBound,
    confidence_for,
    cover_sizes,
    k_overlap_table,
    walk_overlap,
)
from .sampler import JoinSampler, as_rng, ht_size, olken_bound
from .template import Template, choose_template, to_split


@dataclass
class Parameters:
    sizes: dict
    overlaps: dict  # frozenset(ids) -> size, singletons included
    table: KOverlapTable
    cover: Cover
    method: str
    bounds: dict = field(default_factory=dict)  # frozenset -> OverlapBound
    confidence: float = 1.0
    timing: dict = field(default_factory=dict)

    @property
    def union_size(self) -> float:
        return self.table.union_size

    def selection(self) -> dict:
        """Probability of selecting each join: cover size over the cover total."""
        total = self.cover.total
        return {j: (s / total if total else 0.0) for j, s in self.cover.sizes.items()}

    def summary(self) -> dict:
        return {
            "method": self.method,
            "sizes": {j: float(v) for j, v in self.sizes.items()},
            "union_size": float(self.union_size),
            "cover_order": list(self.cover.ordering),
            "cover_sizes": {j: float(v) for j, v in self.cover.sizes.items()},
            "overlaps": {"&".join(sorted(d)): float(v) for d, v in sorted(self.overlaps.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))) if len(d) > 1},
            "confidence": self.confidence,
            "warnings": self.table.warnings + self.cover.warnings,
        }


def all_subsets(ids: Sequence[str], min_size: int = 2):
    for k in range(min_size, len(ids) + 1):
        for d in combinations(ids, k):
            yield frozenset(d)


def tighten(ids: Sequence[str], overlaps: Mapping[frozenset, float]) -> dict:
    """Cap every overlap by the overlaps of its subsets (an intersection only shrinks)."""
    out = {frozenset([j]): overlaps[frozenset([j])] for j in ids}
    for d in all_subsets(ids):
        v = overlaps[d]
        for x in d:
            v = min(v, out[d - {x}])
        out[d] = max(v, 0)
    return out


def from_overlaps(ids: Sequence[str], overlaps: Mapping[frozenset, float], method: str,
                  ordering: Sequence[str] | None = None, bounds: Mapping | None = None) -> Parameters:
    ids = tuple(ids)
    o = tighten(ids, overlaps)
    table = k_overlap_table(ids, o)
    cover = cover_sizes(ids, o, ordering)
    sizes = {j: o[frozenset([j])] for j in ids}
    return Parameters(sizes, o, table, cover, method, dict(bounds or {}))


def histogram_parameters(joins: Sequence, template: Template | None = None,
                         zero_dist_weight: float = 0, avg_degree: bool = False,
                         fake_mode: str = "distinct", ordering=None) -> Parameters:
    """Histogram overlap bounds plus join sizes.

    ``joins`` holds JoinSamplers, whose weights give the sizes (exact or Olken
    bound), or bare JoinSpecs, whose sizes are Olken bounds from the histograms.
    """
    t0 = time.perf_counter()
    specs = [s.spec if isinstance(s, JoinSampler) else s for s in joins]
    ids = tuple(s.id for s in specs)
    if template is None:
        template = choose_template(specs, zero_dist_weight)
    splits = {s.id: to_split(s, template) for s in specs}
    hist = HistogramOverlap(splits, avg_degree, fake_mode)
    overlaps, bounds = {}, {}
    for s in joins:
        overlaps[frozenset([s.id])] = s.size_estimate() if isinstance(s, JoinSampler) else olken_bound(s)
    for d in all_subsets(ids):
        b = hist.bound(d)
        bounds[d] = b
        overlaps[d] = b.value
    p = from_overlaps(ids, overlaps, "histogram", ordering, bounds)
    p.timing["estimate"] = time.perf_counter() - t0
    return p


def collect_walks(sampler: JoinSampler, rng, confidence: float = 0.9, tolerance: float = 0.05,
                  max_walks: int = 1000, min_walks: int = 30, batch: int = 50) -> list:
    """Walk until the size estimate reaches the confidence target or ``max_walks``."""
    rng = as_rng(rng)
    walks = []
    while len(walks) < max_walks:
        walks.extend(sampler.walk(rng) for _ in range(min(batch, max_walks - len(walks))))
        if len(walks) >= min_walks and size_confidence(walks, tolerance) >= confidence:
            break
    return walks


def size_confidence(walks, tolerance: float) -> float:
    f = [1.0 / w.p if w.ok else 0.0 for w in walks]
    n = len(f)
    mean = sum(f) / n
    if mean == 0 or n < 2:
        return 0.0
    var = sum((x - mean) ** 2 for x in f) / (n - 1)
    return confidence_for((var / n) ** 0.5, tolerance * mean)


def walk_parameters(samplers: Sequence[JoinSampler], rng, walks: Mapping[str, list] | None = None,
                    confidence: float = 0.9, tolerance: float = 0.05, max_walks: int = 1000,
                    exact_sizes: bool = True, ordering=None) -> Parameters:
    """Overlaps estimated from random walks, anchored on the smallest join of each subset.

    With ``exact_sizes`` the join sizes come from exact weights; otherwise from
    the Horvitz-Thompson estimate over the same walks.
    """
    t0 = time.perf_counter()
    rng = as_rng(rng)
    ids = tuple(s.id for s in samplers)
    by_id = {s.id: s for s in samplers}
    if walks is None:
        walks = {s.id: collect_walks(s, rng, confidence, tolerance, max_walks) for s in samplers}
    sizes = {j: (by_id[j].exact_size() if exact_sizes else ht_size(walks[j])) for j in ids}
    membership = {j: by_id[j].contains for j in ids}
    overlaps = {frozenset([j]): sizes[j] for j in ids}
    bounds = {}
    conf = 1.0 if exact_sizes else min(size_confidence(walks[j], tolerance) for j in ids)
    for d in all_subsets(ids):
        anchor = min(d, key=lambda j: (sizes[j], j))
        if sizes[anchor] == 0 or not any(w.ok for w in walks[anchor]):
            b = OverlapBound(d, 0.0, "walk", 0.0, 0.0)
        else:
            b = walk_overlap(d, anchor, walks[anchor], membership, sizes[anchor], confidence)
            conf = min(conf, confidence_for(b.std_error, tolerance * sizes[anchor]))
        bounds[d] = b
        overlaps[d] = b.value
    p = from_overlaps(ids, overlaps, "walk", ordering, bounds)
    p.confidence = conf
    p.timing["estimate"] = time.perf_counter() - t0
    return p
