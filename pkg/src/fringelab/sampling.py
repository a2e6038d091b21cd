"""Exact-uniform samplers for trees with prescribed degrees.

The core construction: shuffle the degree multiset uniformly (Fisher-Yates
inside numpy's permutation), read the shuffled degrees as a lattice bridge
with increments degree - 1, rotate the bridge at its first minimum to get
an excursion, and decode the excursion as a tree.  The rotation is an
|n|-to-1 map from bridges onto excursions with the same increment counts,
so the resulting tree is exactly uniform.

Randomness is PCG64 with explicit SeedSequence stream derivation: a Seed
is (value, stream_id), and replicate r of a batch uses the spawn key
(stream_id, r).  Identical seeds reproduce identical output on any worker
layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import OffspringDistribution, sample_offspring
from .errors import AttemptsExhausted, InfeasibleSize, InvalidDegreeSequence
from .tree_core import DegreeStatistic, PlaneTree, _unchecked_tree

FEASIBILITY_DP_LIMIT = 100_000


@dataclass(frozen=True)
class Seed:
    """Reproducible RNG root: (value, stream_id) -> a PCG64 stream."""

    value: int
    stream_id: int = 0

    def __post_init__(self):
        if self.value < 0 or self.stream_id < 0:
            raise ValueError("seed components must be nonnegative")

    def generator(self, *extra: int) -> np.random.Generator:
        """Generator for this stream; extra indices derive disjoint
        sub-streams (e.g. one per replicate) via the spawn key."""
        key = (self.stream_id,) + tuple(int(x) for x in extra)
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=self.value, spawn_key=key))
        )


def _as_generator(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return seed_or_rng.generator()


@dataclass(frozen=True)
class DegreeSequence:
    """Per-label child counts (d_1, ..., d_n) with sum d_i = n - 1."""

    degrees: tuple

    def __post_init__(self):
        n = len(self.degrees)
        if n == 0 or sum(self.degrees) != n - 1 or min(self.degrees) < 0:
            raise InvalidDegreeSequence(
                f"degrees must be nonnegative and sum to {n - 1}"
            )

    @property
    def size(self) -> int:
        return len(self.degrees)

    def statistic(self) -> DegreeStatistic:
        counts = {}
        for d in self.degrees:
            counts[d] = counts.get(d, 0) + 1
        return DegreeStatistic.from_counts(counts)


def sample_uniform_tree(stat: DegreeStatistic, seed) -> PlaneTree:
    """One exact-uniform tree with the given degree counts."""
    return _sample_tree(stat, _as_generator(seed))


def sample_uniform_trees(stat: DegreeStatistic, reps: int, seed) -> list:
    """A reproducible batch drawn from one stream."""
    rng = _as_generator(seed)
    return [_sample_tree(stat, rng) for _ in range(reps)]


def _sample_tree(stat: DegreeStatistic, rng: np.random.Generator) -> PlaneTree:
    multiset = np.array(stat.degree_multiset(), dtype=np.int64)
    return _unchecked_tree(tuple(excursion_degrees(multiset, rng).tolist()))


def excursion_degrees(multiset: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Shuffle a degree multiset and rotate the induced bridge at its first
    minimum; the result is the preorder degree word of a uniform tree."""
    shuffled = rng.permutation(multiset)
    walk = np.cumsum(shuffled - 1)
    shift = int(np.argmin(walk)) + 1  # argmin takes the first minimum
    rotated = np.roll(shuffled, -shift)
    excursion = np.cumsum(rotated - 1)
    assert excursion[-1] == -1 and (excursion[:-1] >= 0).all()
    return rotated


def sample_labelled_tree(dseq: DegreeSequence, seed):
    """Uniform labelled unordered tree with the given per-label degrees.

    Returns (tree, labels) with labels[i] the 1-based label of the i-th
    preorder vertex.  The plane shape is uniform given the degree counts,
    and within each degree class the labels occupy the class's preorder
    slots through a uniform random bijection; forgetting the order then
    gives the uniform labelled law.
    """
    rng = _as_generator(seed)
    tree = _sample_tree(dseq.statistic(), rng)
    labels = [0] * tree.size
    by_degree = {}
    for label, degree in enumerate(dseq.degrees, start=1):
        by_degree.setdefault(degree, []).append(label)
    positions = {}
    for pos, degree in enumerate(tree.degrees):
        positions.setdefault(degree, []).append(pos)
    for degree, slots in positions.items():
        names = by_degree[degree]
        for slot, pick in zip(slots, rng.permutation(len(names))):
            labels[slot] = names[pick]
    return tree, tuple(labels)


def sample_conditioned_gw(
    w: OffspringDistribution,
    n: int,
    seed,
    max_attempts: int = 1_000_000,
    batch: int = 256,
) -> PlaneTree:
    """Size-conditioned branching-process tree, exact by rejection.

    Draw n iid child counts until they sum to n - 1; conditioned on the
    acceptance, the degree counts follow the exact conditional law, and the
    uniform-tree sampler finishes the job.
    """
    if n < 1:
        raise InfeasibleSize("n must be at least 1")
    _check_feasible(w, n)
    rng = _as_generator(seed)
    attempts = 0
    while attempts < max_attempts:
        block = min(batch, max_attempts - attempts)
        draws = sample_offspring(w, rng, block * n).reshape(block, n)
        hits = np.nonzero(draws.sum(axis=1) == n - 1)[0]
        if hits.size:
            attempts += int(hits[0]) + 1
            row = draws[hits[0]]
            degrees, counts = np.unique(row, return_counts=True)
            stat = DegreeStatistic.from_counts(
                {int(d): int(c) for d, c in zip(degrees, counts)}
            )
            return _sample_tree(stat, rng)
        attempts += block
    raise AttemptsExhausted(
        f"no size-{n} hit in {attempts} attempts",
        acceptance_rate=1.0 / max(attempts, 1),
    )


def _check_feasible(w: OffspringDistribution, n: int) -> None:
    """Reject (w, n) pairs for which no degree draw can sum to n - 1.

    Only finite supports can be infeasible; the check is a coin-style
    reachability table over sums of at most n - 1 positive degrees, run
    when n is small enough to afford it.
    """
    if w.kind != "finite" or n > FEASIBILITY_DP_LIMIT:
        return
    if w.p(0) == 0 and n > 1:
        raise InfeasibleSize("trees need leaves: p_0 = 0")
    if n == 1:
        if w.p(0) == 0:
            raise InfeasibleSize("a single vertex needs p_0 > 0")
        return
    coins = [d for d in w.support() if d >= 1]
    target = n - 1
    reachable = np.zeros(target + 1, dtype=bool)
    reachable[0] = True
    for value in range(1, target + 1):
        reachable[value] = any(
            c <= value and reachable[value - c] for c in coins
        )
    # each positive degree adds >= 1 to the sum, so at most n - 1 coins are
    # ever used and the unbounded table is valid
    if not reachable[target]:
        raise InfeasibleSize(f"sum {target} unreachable from degrees {coins}")


def sample_hub_tree(n0: int, n1: int, seed) -> PlaneTree:
    """Uniform tree whose profile is n0 leaves, n1 single-child vertices and
    one hub of degree n0.

    Such trees are in bijection with compositions of n1 into n0 + 1 parts:
    the trunk above the hub and the n0 legs below it carry the degree-1
    vertices.  Sampling a uniform composition (stars and bars) therefore
    gives an exact-uniform tree, independently of the bridge-rotation
    sampler.
    """
    if n0 < 2 or n1 < 0:
        raise ValueError("need n0 >= 2 and n1 >= 0")
    rng = _as_generator(seed)
    parts = _uniform_composition(n1, n0 + 1, rng)
    degrees = [1] * parts[0] + [n0]
    for leg in parts[1:]:
        degrees.extend([1] * leg)
        degrees.append(0)
    return PlaneTree(tuple(degrees))


def _uniform_composition(total: int, parts: int, rng) -> list:
    """Uniform weak composition of ``total`` into ``parts`` parts."""
    if total == 0:
        return [0] * parts
    bars = np.sort(rng.choice(total + parts - 1, size=parts - 1, replace=False))
    out = []
    prev = -1
    for b in bars:
        out.append(int(b) - prev - 1)
        prev = int(b)
    out.append(total + parts - 2 - prev)
    return out
