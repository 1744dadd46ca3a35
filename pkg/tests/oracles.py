"""Independent reference implementations the tests check the package against."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product

from tutorlab.bkt import BktParams


def bayes_oracle(p_mastery: float, params: BktParams, correct: bool) -> Fraction:
    """Exact-arithmetic reference for the evidence-posterior math."""
    pl = Fraction(p_mastery)
    ps = Fraction(params.p_s)
    pg = Fraction(params.p_g)
    if correct:
        num = pl * (1 - ps)
        den = num + (1 - pl) * pg
        if den == 0:
            return Fraction(0)
    else:
        num = pl * ps
        den = num + (1 - pl) * (1 - pg)
        if den == 0:
            return Fraction(1)
    return num / den


def full_update_oracle(p_mastery: float, params: BktParams, correct: bool) -> Fraction:
    cond = bayes_oracle(p_mastery, params, correct)
    return cond + (1 - cond) * Fraction(params.p_t)


def random_valid_params(rng: random.Random) -> BktParams:
    while True:
        p_s = rng.uniform(0.0, 0.6)
        p_g = rng.uniform(0.0, 0.6)
        if p_s + p_g < 1.0:
            return BktParams(p_l0=rng.random(), p_t=rng.random(), p_s=p_s, p_g=p_g)


def wilcoxon_brute_force(diffs: list[float]) -> tuple[float, float]:
    """Two-sided signed-rank p by enumerating every sign assignment.

    Returns (W+ for the observed signs, p). Zero differences are dropped;
    magnitudes get average ranks.
    """
    nonzero = [d for d in diffs if d != 0.0]
    n = len(nonzero)
    if n == 0:
        return 0.0, 1.0
    mags = sorted(range(n), key=lambda i: abs(nonzero[i]))
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and abs(nonzero[mags[j + 1]]) == abs(nonzero[mags[i]]):
            j += 1
        for k in range(i, j + 1):
            ranks[mags[k]] = (i + j + 2) / 2.0
        i = j + 1
    observed = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    sums = []
    for signs in product((0, 1), repeat=n):
        sums.append(sum(r for r, s in zip(ranks, signs) if s))
    count_le = sum(1 for s in sums if s <= observed + 1e-9)
    count_ge = sum(1 for s in sums if s >= observed - 1e-9)
    p = min(1.0, 2.0 * min(count_le, count_ge) / len(sums))
    return observed, p
