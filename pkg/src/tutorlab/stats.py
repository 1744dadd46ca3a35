"""Paired significance testing: Wilcoxon signed-rank with an exact small-sample path.

The exact path builds the null distribution of the positive-rank sum by
dynamic programming over the (tie-averaged) ranks, so it stays cheap up to
the exact/approximate crossover. Larger samples use the normal approximation
with tie and continuity corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

#: Largest sample size handled by exact enumeration of the rank-sum distribution.
EXACT_MAX_N = 20


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # W+: sum of ranks of positive differences
    p_value: float
    n: int  # differences remaining after zero-drop
    method: str  # "exact" | "normal" | "degenerate"
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": self.n,
            "method": self.method,
            "degenerate": self.degenerate,
        }


def _signed_ranks(differences: Sequence[float]) -> tuple[list[float], list[int]]:
    """Average ranks of |d| for nonzero d, with the signs kept alongside."""
    nonzero = [d for d in differences if d != 0.0]
    order = sorted(range(len(nonzero)), key=lambda i: abs(nonzero[i]))
    ranks = [0.0] * len(nonzero)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and abs(nonzero[order[j + 1]]) == abs(nonzero[order[i]]):
            j += 1
        avg = (i + j + 2) / 2.0  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    signs = [1 if d > 0 else -1 for d in nonzero]
    return ranks, signs


def _exact_two_sided_p(ranks: list[float], w_plus: float) -> float:
    """Two-sided p by full enumeration of the sign-flip null distribution.

    Works on doubled ranks so tie-averaged half-integer ranks stay on an
    integer lattice; the distribution is the coefficient table of
    prod(1 + x^(2r)) over the ranks.
    """
    doubled = [round(2 * r) for r in ranks]
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled:
        for s in range(total - r, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
    w2 = round(2 * w_plus)
    n_assignments = 2 ** len(ranks)
    p_le = sum(counts[: w2 + 1]) / n_assignments
    p_ge = sum(counts[w2:]) / n_assignments
    return min(1.0, 2.0 * min(p_le, p_ge))


def _normal_two_sided_p(ranks: list[float], w_plus: float) -> float:
    """Normal approximation with tie correction and continuity correction."""
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # Tie correction: each group of t tied magnitudes removes (t^3 - t)/48.
    seen: dict[float, int] = {}
    for r in ranks:
        seen[r] = seen.get(r, 0) + 1
    for t in seen.values():
        if t > 1:
            var -= (t**3 - t) / 48.0
    if var <= 0:
        return 1.0
    delta = w_plus - mean
    # Continuity correction pulls the statistic half a unit toward the mean.
    if delta > 0:
        delta -= 0.5
    elif delta < 0:
        delta += 0.5
    z = delta / math.sqrt(var)
    return math.erfc(abs(z) / math.sqrt(2.0))


def wilcoxon_signed_rank(paired_differences: Sequence[float]) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped. With n <= EXACT_MAX_N remaining, the p-value
    comes from the exact sign-flip distribution; beyond that, from the normal
    approximation with tie and continuity corrections. An all-zero sample is
    degenerate: p = 1.0 with the flag set.
    """
    if len(paired_differences) == 0:
        raise ValueError("need at least one paired difference")
    ranks, signs = _signed_ranks(paired_differences)
    n = len(ranks)
    if n == 0:
        return WilcoxonResult(statistic=0.0, p_value=1.0, n=0, method="degenerate", degenerate=True)
    w_plus = sum(r for r, s in zip(ranks, signs) if s > 0)
    if n <= EXACT_MAX_N:
        p = _exact_two_sided_p(ranks, w_plus)
        method = "exact"
    else:
        p = _normal_two_sided_p(ranks, w_plus)
        method = "normal"
    return WilcoxonResult(statistic=w_plus, p_value=p, n=n, method=method)
