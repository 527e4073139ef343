"""Uniform sampling over unions of joins."""

from .errors import JoinUnionError
from .joins import JoinSpec, break_cycles, evaluate, validate_workload
from .oracle import oracle
from .overlap import cover_sizes, histogram_overlap, k_overlap_table, walk_overlap
from .params import Parameters, histogram_parameters, walk_parameters
from .relation import Predicate, Relation, build_stats, load_csv, make_relation, push_down
from .sampler import JoinSampler, WeightMode, ht_size, ht_update, olken_bound, random_walk
from .template import Template, acyclic_to_chain, choose_template, split, to_split
from .union import (
    SampleReport,
    backtrack,
    reuse_accept,
    sample_disjoint_union,
    sample_online_union,
    sample_set_union,
    sample_set_union_bernoulli,
    tuple_key,
)
from .verify import verify

__all__ = [
    "JoinSampler", "JoinSpec", "JoinUnionError", "Parameters", "Predicate", "Relation", "SampleReport",
    "Template", "WeightMode", "acyclic_to_chain", "backtrack", "break_cycles", "build_stats",
    "choose_template", "cover_sizes", "evaluate", "histogram_overlap", "histogram_parameters", "ht_size",
    "ht_update", "k_overlap_table", "load_csv", "make_relation", "olken_bound", "oracle", "push_down",
    "random_walk", "reuse_accept", "sample_disjoint_union", "sample_online_union", "sample_set_union",
    "sample_set_union_bernoulli", "split", "to_split", "tuple_key", "validate_workload", "verify",
    "walk_overlap", "walk_parameters",
]
