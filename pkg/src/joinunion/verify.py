"""Statistical checks of a sample against oracle ground truth."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from scipy import stats as sps

from .errors import MembershipError

ALPHA = 0.01
MIN_EXPECTED = 5.0


@dataclass
class ChiSquare:
    statistic: float
    p_value: float
    dof: int
    cells: int
    alpha: float

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha


@dataclass
class Verdict:
    chi_square: ChiSquare
    autocorrelation: float
    autocorrelation_sigma: float
    ratios: list = field(default_factory=list)

    @property
    def uniform(self) -> bool:
        return self.chi_square.passed

    @property
    def independent(self) -> bool:
        return abs(self.autocorrelation) <= 3 * self.autocorrelation_sigma

    @property
    def passed(self) -> bool:
        return self.uniform

    def to_dict(self) -> dict:
        c = self.chi_square
        return {
            "passed": self.passed,
            "chi_square": {"statistic": c.statistic, "p_value": c.p_value, "dof": c.dof,
                           "cells": c.cells, "alpha": c.alpha},
            "lag1_autocorrelation": self.autocorrelation,
            "lag1_sigma": self.autocorrelation_sigma,
            "ratios": self.ratios,
        }


def _merge(expected: Sequence[float], observed: Sequence[int], min_expected: float) -> tuple:
    """Merge adjacent cells until each expected count reaches ``min_expected``."""
    exp, obs = [], []
    e_acc = o_acc = 0
    for e, o in zip(expected, observed):
        e_acc += e
        o_acc += o
        if e_acc >= min_expected:
            exp.append(e_acc)
            obs.append(o_acc)
            e_acc = o_acc = 0
    if e_acc or o_acc:
        if exp:
            exp[-1] += e_acc
            obs[-1] += o_acc
        else:
            exp.append(e_acc)
            obs.append(o_acc)
    return exp, obs


def chi_square_uniform(rows: Iterable, universe: Iterable, alpha: float = ALPHA,
                       min_expected: float = MIN_EXPECTED) -> ChiSquare:
    """Goodness of fit of sampled rows to the uniform distribution over ``universe``."""
    keys = sorted(set(universe), key=repr)
    counts = Counter(rows)
    n = sum(counts.values())
    observed = [counts.get(u, 0) for u in keys]
    if n == 0 or not keys:
        return ChiSquare(0.0, 1.0, 0, len(keys), alpha)
    e = n / len(keys)
    exp, obs = _merge([e] * len(keys), observed, min_expected)
    if len(exp) < 2:
        return ChiSquare(0.0, 1.0, 0, len(exp), alpha)
    res = sps.chisquare(obs, exp)
    return ChiSquare(float(res.statistic), float(res.pvalue), len(exp) - 1, len(exp), alpha)


def check_membership(rows: Iterable, universe: set) -> None:
    outside = [r for r in rows if r not in universe]
    if outside:
        raise MembershipError(f"{len(outside)} sampled rows are not in the union, first {outside[0]!r}")


def lag1_autocorrelation(rows: Sequence, universe: Iterable) -> tuple:
    """Lag-1 autocorrelation of the sampled value-index stream and its null standard deviation."""
    pos = {u: i for i, u in enumerate(sorted(set(universe), key=repr))}
    x = [pos[r] for r in rows]
    n = len(x)
    if n < 3:
        return 0.0, math.inf
    m = sum(x) / n
    den = sum((v - m) ** 2 for v in x)
    if den == 0:
        return 0.0, 1 / math.sqrt(n)
    num = sum((x[i] - m) * (x[i + 1] - m) for i in range(n - 1))
    return num / den, 1 / math.sqrt(n)


def ratio_table(estimated: dict, exact_sizes: dict, est_union: float, exact_union: float) -> list:
    """Estimated vs exact |J_j| / |U| per join, with relative error."""
    out = []
    for j in exact_sizes:
        truth = exact_sizes[j] / exact_union if exact_union else 0.0
        est = estimated.get(j, 0.0) / est_union if est_union else 0.0
        err = abs(est - truth) / truth if truth else abs(est)
        out.append({"join": j, "estimated": est, "exact": truth, "relative_error": err})
    return out


def verify(rows: Sequence, universe: set, alpha: float = ALPHA, estimated_sizes: dict | None = None,
           estimated_union: float | None = None, exact_sizes: dict | None = None) -> Verdict:
    check_membership(rows, universe)
    chi = chi_square_uniform(rows, universe, alpha)
    r, sigma = lag1_autocorrelation(rows, universe)
    ratios = []
    if estimated_sizes is not None and exact_sizes is not None and estimated_union is not None:
        ratios = ratio_table(estimated_sizes, exact_sizes, estimated_union, len(universe))
    return Verdict(chi, r, sigma, ratios)
