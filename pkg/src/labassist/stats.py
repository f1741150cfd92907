"""Group statistics and the Mann-Whitney U test.

U is computed with the rank-sum formula over midranks (ties contribute 0.5
per pair). The two-sided p value is exact where feasible:

* no ties: dynamic-programming enumeration of the U count distribution,
* ties with both group sizes <= 12: exact enumeration conditional on the
  observed pooled multiset, via a DP over tie groups,
* otherwise: tie-corrected normal approximation (continuity correction 0.5).

"Two-sided" is defined by distance from the null mean m*n/2, which matches
the classic definition for the symmetric tie-free distribution and stays
well-defined for the (possibly asymmetric) conditional distribution under
ties.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from functools import lru_cache

from .errors import EmptyGroup

# Exact enumeration limits. The tie-free DP is cheap for desk-scale samples;
# the tie-aware DP is bounded to group sizes of 12 each.
EXACT_MAX_PAIRS = 2500
EXACT_MAX_TIED_GROUP = 12

METHOD_COUNT_DISTRIBUTION = "count_distribution"
METHOD_TIE_ENUMERATION = "tie_enumeration"
METHOD_NORMAL = "normal_approximation"


@dataclass(frozen=True)
class GroupStats:
    n: int
    mean: float
    std: float            # sample standard deviation (n - 1)
    min: float
    max: float
    std_population: float  # divisor n, reported only in verbose output


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    p_exact: float
    p_normal: float
    method: str  # how p_exact was obtained


def group_stats(values: list[float]) -> GroupStats:
    if not values:
        raise EmptyGroup("group_stats requires at least one value")
    mean = statistics.fmean(values)
    if len(values) > 1:
        std = statistics.stdev(values)
    else:
        std = 0.0
    return GroupStats(
        n=len(values),
        mean=mean,
        std=std,
        min=min(values),
        max=max(values),
        std_population=statistics.pstdev(values),
    )


def _midranks(pooled: list[float]) -> dict[float, float]:
    """Midrank per distinct value of an already sorted pooled sample."""
    ranks: dict[float, float] = {}
    i = 0
    while i < len(pooled):
        j = i
        while j < len(pooled) and pooled[j] == pooled[i]:
            j += 1
        # positions i+1 .. j (1-based); midrank is their average
        ranks[pooled[i]] = (i + 1 + j) / 2.0
        i = j
    return ranks


def _u_statistic(xs: list[float], ys: list[float]) -> float:
    pooled = sorted(xs + ys)
    ranks = _midranks(pooled)
    m = len(xs)
    r1 = sum(ranks[x] for x in xs)
    return r1 - m * (m + 1) / 2.0


@lru_cache(maxsize=None)
def _u_counts(m: int, n: int) -> tuple[int, ...]:
    """Counts of U values 0..m*n over all C(m+n, m) tie-free arrangements."""
    if m == 0 or n == 0:
        return (1,)
    shifted = _u_counts(m - 1, n)   # largest x removed: contributes n
    smaller = _u_counts(m, n - 1)   # largest y removed: contributes 0
    size = m * n + 1
    out = [0] * size
    for u, c in enumerate(shifted):
        out[u + n] += c
    for u, c in enumerate(smaller):
        out[u] += c
    return tuple(out)


def _p_exact_no_ties(u: float, m: int, n: int) -> float:
    counts = _u_counts(m, n)
    total = math.comb(m + n, m)
    center = m * n / 2.0
    dist = abs(u - center)
    tail = sum(c for v, c in enumerate(counts) if abs(v - center) >= dist - 1e-12)
    return min(1.0, tail / total)


def _tie_groups(pooled: list[float]) -> list[int]:
    groups: list[int] = []
    i = 0
    while i < len(pooled):
        j = i
        while j < len(pooled) and pooled[j] == pooled[i]:
            j += 1
        groups.append(j - i)
        i = j
    return groups


def _p_exact_with_ties(u: float, xs: list[float], ys: list[float]) -> float:
    """Exact conditional p given the observed pooled multiset.

    DP over tie groups in ascending value order. Choosing j of a group's t
    elements for sample X adds 2*j*(earlier elements assigned to Y) +
    j*(t - j) to twice the U statistic, which keeps all weights integral.
    """
    m = len(xs)
    pooled = sorted(xs + ys)
    groups = _tie_groups(pooled)
    dist: dict[tuple[int, int], int] = {(0, 0): 1}  # (x_used, 2u) -> count
    prefix = 0
    for t in groups:
        nxt: dict[tuple[int, int], int] = {}
        for (x_used, two_u), count in dist.items():
            y_before = prefix - x_used
            for j in range(0, min(t, m - x_used) + 1):
                key = (x_used + j, two_u + 2 * j * y_before + j * (t - j))
                nxt[key] = nxt.get(key, 0) + count * math.comb(t, j)
        dist = nxt
        prefix += t
    total = math.comb(len(pooled), m)
    center = m * len(ys)  # 2 * (m*n/2)
    target = abs(round(2 * u) - center)
    tail = sum(
        c for (x_used, two_u), c in dist.items()
        if x_used == m and abs(two_u - center) >= target
    )
    return min(1.0, tail / total)


def _p_normal(u: float, xs: list[float], ys: list[float]) -> float:
    m, n = len(xs), len(ys)
    big_n = m + n
    mu = m * n / 2.0
    tie_term = sum(t**3 - t for t in _tie_groups(sorted(xs + ys)))
    var = (m * n / 12.0) * ((big_n + 1) - tie_term / (big_n * (big_n - 1)))
    if var <= 0.0:
        return 1.0
    diff = u - mu
    if abs(diff) <= 0.5:
        return 1.0
    z = (abs(diff) - 0.5) / math.sqrt(var)
    return math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(xs: list[float], ys: list[float]) -> MannWhitneyResult:
    """Mann-Whitney U of xs over ys with two-sided p values.

    U counts pairs (x, y) with x > y plus 0.5 per tied pair, so
    U(xs, ys) + U(ys, xs) == len(xs) * len(ys) exactly.
    """
    if not xs or not ys:
        raise EmptyGroup("mann_whitney_u requires non-empty groups")
    m, n = len(xs), len(ys)
    u = _u_statistic(xs, ys)
    p_normal = _p_normal(u, xs, ys)

    pooled = sorted(xs + ys)
    has_ties = any(a == b for a, b in zip(pooled, pooled[1:]))
    if not has_ties and m * n <= EXACT_MAX_PAIRS:
        p_exact = _p_exact_no_ties(u, m, n)
        method = METHOD_COUNT_DISTRIBUTION
    elif has_ties and m <= EXACT_MAX_TIED_GROUP and n <= EXACT_MAX_TIED_GROUP:
        p_exact = _p_exact_with_ties(u, xs, ys)
        method = METHOD_TIE_ENUMERATION
    else:
        p_exact = p_normal
        method = METHOD_NORMAL
    return MannWhitneyResult(u=u, p_exact=p_exact, p_normal=p_normal, method=method)
