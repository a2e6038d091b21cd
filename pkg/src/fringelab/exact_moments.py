"""Exact rational moments of fringe-subtree counts in uniform trees.

Everything here is evaluated in arbitrary-precision rational arithmetic
(``fractions.Fraction``); no rounding occurs in this module.  The central
quantity is the joint factorial moment

    E[ (N_1)_{q_1} ... (N_m)_{q_m} ]

of the counts N_j of fringe subtrees equal to the pattern T_j in a uniform
random tree with prescribed degree counts.  The moment decomposes over the
number b_j of marked copies of T_j that sit inside another marked copy
("bound" copies); each term is a ratio of falling factorials of the degree
counts times a combinatorial factor counting the placements of the bound
copies.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from .distributions import OffspringDistribution
from .errors import (
    CapExceeded,
    DuplicatePatterns,
    InfeasibleSize,
    IrrationalWeights,
    SizeTooSmall,
)
from .tree_core import DegreeStatistic, PlaneTree, count_fringe, degree_statistic

PARTIAL_SUM_CAP = 5000


def falling_factorial(x, q: int):
    """x (x-1) ... (x-q+1); equals 1 for q = 0 and vanishes for natural x
    once the product crosses zero."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    out = x**0  # 1 of the same type as x
    for j in range(q):
        out *= x - j
        if out == 0:
            return out
    return out


def mean_count(stat: DegreeStatistic, pattern: PlaneTree) -> Fraction:
    """E[N_T] = |n| / (|n|)_{|T|} * prod_i (n(i))_{n_T(i)}, exact."""
    n = stat.size
    if n < pattern.size:
        raise SizeTooSmall(f"|n| = {n} < |T| = {pattern.size}")
    value = Fraction(n, falling_factorial(n, pattern.size))
    for degree, count in degree_statistic(pattern).items:
        value *= falling_factorial(stat.count(degree), count)
        if value == 0:
            return Fraction(0)
    return value


def factorial_moment(stat: DegreeStatistic, pattern: PlaneTree, q: int) -> Fraction:
    """E[(N_T)_q] = |n| / (|n|)_{q|T|-q+1} * prod_i (n(i))_{q n_T(i)}."""
    if q == 0:
        return Fraction(1)
    n = stat.size
    needed = q * pattern.size - q + 1
    if n < needed:
        raise SizeTooSmall(f"|n| = {n} < {needed} for q = {q}")
    value = Fraction(n, falling_factorial(n, needed))
    for degree, count in degree_statistic(pattern).items:
        value *= falling_factorial(stat.count(degree), q * count)
        if value == 0:
            return Fraction(0)
    return value


def product_moment(
    stat: DegreeStatistic, pattern: PlaneTree, pattern2: PlaneTree
) -> Fraction:
    """E[N_T N_T'] for distinct patterns: the two cross-containment terms
    plus the disjoint-pair term."""
    if pattern == pattern2:
        raise DuplicatePatterns("patterns must be distinct plane trees")
    n = stat.size
    needed = pattern.size + pattern2.size - 1
    if n < needed:
        raise SizeTooSmall(f"|n| = {n} < {needed}")
    value = count_fringe(pattern2, pattern) * mean_count(stat, pattern2)
    value += count_fringe(pattern, pattern2) * mean_count(stat, pattern)
    disjoint = Fraction(n, falling_factorial(n, needed))
    prof, prof2 = degree_statistic(pattern).as_dict(), degree_statistic(pattern2).as_dict()
    for degree in set(prof) | set(prof2):
        disjoint *= falling_factorial(
            stat.count(degree), prof.get(degree, 0) + prof2.get(degree, 0)
        )
        if disjoint == 0:
            break
    return value + disjoint


def containment_matrix(patterns) -> list:
    """matrix[j][k] = number of proper fringe copies of pattern j inside
    pattern k (zero diagonal).  Strictly triangular when patterns are
    ordered by size."""
    patterns = list(patterns)
    if len(set(patterns)) != len(patterns):
        raise DuplicatePatterns("patterns must be pairwise distinct")
    return [
        [0 if j == k else count_fringe(pk, pj) for k, pk in enumerate(patterns)]
        for j, pj in enumerate(patterns)
    ]


def joint_factorial_moment(stat: DegreeStatistic, patterns, q) -> Fraction:
    """E[prod_j (N_{T_j})_{q_j}] as the sum over bound-count vectors b.

    Each marked copy of T_j is either free (disjoint from the other marked
    copies) or bound inside a free one; with b_j bound copies of T_j the
    expectation contributes

        |n| / (|n|)_{1 + sum_j (q_j-b_j)(|T_j|-1)}
          * prod_i (n(i))_{sum_j (q_j-b_j) n_{T_j}(i)}
          * prod_j (q_j)_{b_j} (sum_k (q_k-b_k) tau_{jk})_{b_j} / b_j!

    where tau_{jk} counts proper fringe copies of T_j in T_k.
    """
    patterns = list(patterns)
    q = [int(x) for x in q]
    if len(patterns) != len(q):
        raise ValueError("patterns and q must have equal length")
    if any(x < 1 for x in q):
        raise ValueError("q entries must be positive")
    n = stat.size
    needed = sum(qj * (pj.size - 1) for qj, pj in zip(q, patterns)) + 1
    if n < needed:
        raise SizeTooSmall(f"|n| = {n} < {needed}")
    tau = containment_matrix(patterns)
    profiles = [degree_statistic(p).as_dict() for p in patterns]
    m = len(patterns)

    total = Fraction(0)
    b = [0] * m
    while True:
        total += _bound_term(stat, patterns, profiles, q, b, tau)
        # advance b through the box prod_j [0, q_j]
        j = 0
        while j < m:
            b[j] += 1
            if b[j] <= q[j]:
                break
            b[j] = 0
            j += 1
        if j == m:
            return total


def _bound_term(stat, patterns, profiles, q, b, tau) -> Fraction:
    m = len(patterns)
    free = [q[j] - b[j] for j in range(m)]
    placements = Fraction(1)
    for j in range(m):
        if b[j] == 0:
            continue
        hosts = sum(free[k] * tau[j][k] for k in range(m))
        placements *= Fraction(
            falling_factorial(q[j], b[j]) * falling_factorial(hosts, b[j]),
            _factorial(b[j]),
        )
        if placements == 0:
            return Fraction(0)
    n = stat.size
    depth = 1 + sum(free[j] * (patterns[j].size - 1) for j in range(m))
    value = Fraction(n, falling_factorial(n, depth))
    degrees = set()
    for prof in profiles:
        degrees |= set(prof)
    for degree in degrees:
        pulls = sum(free[j] * profiles[j].get(degree, 0) for j in range(m))
        value *= falling_factorial(stat.count(degree), pulls)
        if value == 0:
            return Fraction(0)
    return value * placements


@lru_cache(maxsize=None)
def _factorial(k: int) -> int:
    out = 1
    for j in range(2, k + 1):
        out *= j
    return out


class PartialSumDistribution(NamedTuple):
    """Distribution of a sum of iid child counts; ``exact`` reports whether
    the values are Fractions (rational weights) or floats (fallback)."""

    pmf: dict
    exact: bool


def partial_sum_pmf(
    w: OffspringDistribution, m: int, cap: int = PARTIAL_SUM_CAP
) -> PartialSumDistribution:
    """Distribution of S_m, the sum of m iid draws from w, by iterated
    dense convolution over the reachable support [0, m * max_degree]."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m > cap:
        raise CapExceeded(f"m = {m} exceeds partial-sum cap {cap}")
    # Fraction(1,2) == 0.5 hashes identically, so exact and float variants of
    # one distribution would share a cache slot without the explicit flag
    return _partial_sum_cached(w, m, w.is_exact)


@lru_cache(maxsize=None)
def _partial_sum_cached(
    w: OffspringDistribution, m: int, exact: bool
) -> PartialSumDistribution:
    step_items = sorted(w.probabilities().items())
    if exact:
        step_items = [(i, Fraction(p)) for i, p in step_items]
    else:
        step_items = [(i, float(p)) for i, p in step_items]
    if m == 0:
        one = Fraction(1) if exact else 1.0
        return PartialSumDistribution({0: one}, exact)
    prev = _partial_sum_cached(w, m - 1, exact).pmf
    zero = Fraction(0) if exact else 0.0
    max_prev = max(prev)
    dense = [zero] * (max_prev + step_items[-1][0] + 1)
    for s, mass in prev.items():
        for i, p in step_items:
            dense[s + i] += mass * p
    pmf = {s: mass for s, mass in enumerate(dense) if mass}
    return PartialSumDistribution(pmf, exact)


def degree_factorial_moment(
    w: OffspringDistribution, n: int, q, cap: int = PARTIAL_SUM_CAP
) -> Fraction:
    """Exact joint factorial moment of the per-degree vertex counts of a
    size-n tree drawn proportionally to its offspring weights:

        E[prod_i (n(i))_{q_i}]
          = (n)_{sum q} * prod_i w_i^{q_i}
            * P(S_{n - sum q} = n - 1 - sum_i i q_i) / P(S_n = n - 1).
    """
    if not w.is_exact:
        raise IrrationalWeights("exact mode needs finite rational weights")
    if w.kind not in ("finite",):
        raise IrrationalWeights("exact mode needs finite support")
    q = {int(i): int(v) for i, v in dict(q).items() if v}
    if any(v < 0 for v in q.values()):
        raise ValueError("q entries must be nonnegative")
    denominator = partial_sum_pmf(w, n, cap).pmf.get(n - 1, Fraction(0))
    if denominator == 0:
        raise InfeasibleSize(f"no size-{n} tree has positive weight")
    q_total = sum(q.values())
    weighted = sum(i * v for i, v in q.items())
    if q_total > n or n - 1 - weighted < 0:
        return Fraction(0)
    value = Fraction(falling_factorial(n, q_total))
    for i, v in q.items():
        value *= w.p(i) ** v
        if value == 0:
            return Fraction(0)
    numerator = partial_sum_pmf(w, n - q_total, cap).pmf.get(
        n - 1 - weighted, Fraction(0)
    )
    return value * numerator / denominator
