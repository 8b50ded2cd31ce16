"""Exhaustive enumeration oracle for small intervals.

Deliberately brute force: the exact Gibbs distribution, partition value and
tail probabilities computed here are the ground truth against which the
Markov chain and the uncrossing-map properties are validated.  Finite p
enumerates all (2n+1)! permutations (capped); infinite p enumerates only the
band support S_W by backtracking, which reaches much larger intervals.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .core import ModelParams, Permutation, cycle_of, energy

# Largest interval size 2n+1 admitted to the factorial mode (9! = 362880
# permutations keeps every oracle run under a few seconds).
FULL_ENUMERATION_CAP = 9

# Largest band-support size the p = infinity mode will stream.
BAND_ENUMERATION_CAP = 2_000_000


class CapacityError(RuntimeError):
    """The requested instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class ExactDistribution:
    """The exact Gibbs distribution on an enumerable instance.

    entries lists every admissible permutation with its probability; for
    infinite p these are exactly the members of S_W, each with probability
    1/|S_W|, and partition_value is |S_W|.  For finite p entries cover all
    (2n+1)! permutations and partition_value is the sum of Gibbs weights.
    """

    params: ModelParams
    entries: tuple[tuple[Permutation, float], ...]
    partition_value: float

    @property
    def support_size(self) -> int:
        return len(self.entries)

    def as_dict(self) -> dict[Permutation, float]:
        return dict(self.entries)


def count_band_permutations(m: int, W: int) -> int:
    """Number of permutations of m points with every displacement <= W.

    Profile dynamic programming over a sliding window of 2W+1 values;
    independent of the backtracking generator, so the two can cross-check
    each other.  For W = 1 this reproduces the Fibonacci numbers.
    """
    if m < 1 or W < 1:
        raise ValueError("m and W must be positive")
    if W >= m - 1:
        return math.factorial(m)
    width = 2 * W + 1

    def blocked(q: int, o: int) -> bool:
        v = q - W + o
        return v < 0 or v >= m

    init = 0
    for o in range(width):
        if blocked(0, o):
            init |= 1 << o
    states = {init: 1}
    for q in range(m):
        nxt: dict[int, int] = {}
        for mask, cnt in states.items():
            for o in range(width):
                if mask >> o & 1:
                    continue
                filled = mask | (1 << o)
                if not filled & 1:
                    # value q - W would drift out of reach unused
                    continue
                shifted = filled >> 1
                if blocked(q + 1, width - 1):
                    shifted |= 1 << (width - 1)
                nxt[shifted] = nxt.get(shifted, 0) + cnt
        states = nxt
    return sum(states.values())


def _band_images(n: int, W: int) -> Iterator[tuple[int, ...]]:
    """All band-W image tuples on [-n, n], in lexicographic order.

    Backtracking with one pruning rule: once position q is reached, the
    value q - W can only be placed at q, so it is forced while still free.
    With that rule no branch dead-ends.
    """
    m = 2 * n + 1
    used = [False] * m
    image = [0] * m

    def rec(q: int) -> Iterator[tuple[int, ...]]:
        if q == m:
            yield tuple(image)
            return
        must = q - W
        if must >= 0 and not used[must]:
            candidates: Sequence[int] = (must,)
        else:
            candidates = range(max(0, q - W), min(m - 1, q + W) + 1)
        for v in candidates:
            if used[v]:
                continue
            used[v] = True
            image[q] = v - n
            yield from rec(q + 1)
            used[v] = False

    return rec(0)


def enumerate_permutations(params: ModelParams) -> Iterator[Permutation]:
    """Every admissible permutation exactly once, in lexicographic image order.

    Finite p: all (2n+1)! permutations (full Gibbs support).  Infinite p:
    exactly the members of S_W.  Raises CapacityError, naming the cap, when
    the instance is too large.
    """
    if params.infinite_p:
        total = count_band_permutations(params.interval_size, params.W)
        if total > BAND_ENUMERATION_CAP:
            raise CapacityError(
                f"|S_W| = {total} exceeds the band enumeration cap "
                f"{BAND_ENUMERATION_CAP} (W={params.W}, 2n+1={params.interval_size})"
            )
        return (Permutation(img) for img in _band_images(params.n, params.W))
    m = params.interval_size
    if m > FULL_ENUMERATION_CAP:
        raise CapacityError(
            f"interval size {m} exceeds the exhaustive cap "
            f"{FULL_ENUMERATION_CAP} for finite p ((2n+1)! mode)"
        )
    return (
        Permutation(img)
        for img in itertools.permutations(range(-params.n, params.n + 1))
    )


def exact_distribution(params: ModelParams) -> ExactDistribution:
    """Materialize the exact Gibbs distribution for an enumerable instance."""
    if params.infinite_p:
        perms = list(enumerate_permutations(params))
        prob = 1.0 / len(perms)
        entries = tuple((pi, prob) for pi in perms)
        return ExactDistribution(params, entries, float(len(perms)))
    perms = []
    weights = []
    for pi in enumerate_permutations(params):
        perms.append(pi)
        weights.append(math.exp(-energy(pi, params)))
    z = math.fsum(weights)
    entries = tuple((pi, w / z) for pi, w in zip(perms, weights))
    return ExactDistribution(params, entries, z)


def exact_partition(params: ModelParams) -> tuple[float, int]:
    """(partition value, support size) without materializing the entries.

    For infinite p both equal |S_W|, available from the counting DP; for
    finite p the weights are streamed.
    """
    if params.infinite_p:
        total = count_band_permutations(params.interval_size, params.W)
        if total > BAND_ENUMERATION_CAP:
            raise CapacityError(
                f"|S_W| = {total} exceeds the band enumeration cap "
                f"{BAND_ENUMERATION_CAP} (W={params.W}, 2n+1={params.interval_size})"
            )
        return float(total), total
    weights = [
        math.exp(-energy(pi, params)) for pi in enumerate_permutations(params)
    ]
    return math.fsum(weights), len(weights)


def exact_tail_curve(
    params: ModelParams, j: int, lam_grid: Sequence[int]
) -> list[tuple[int, float]]:
    """P(diam of the cycle of j >= lam) for each lam, in one enumeration pass."""
    n = params.n
    if not -n <= j <= n:
        raise ValueError(f"base point {j} outside [{-n}, {n}]")
    for lam in lam_grid:
        if lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {lam}")
    # weight mass grouped by cycle diameter (diameters are in 0..2n)
    mass = [0.0] * (2 * n + 1)
    if params.infinite_p:
        for pi in enumerate_permutations(params):
            mass[cycle_of(pi, j).diam] += 1.0
    else:
        for pi in enumerate_permutations(params):
            mass[cycle_of(pi, j).diam] += math.exp(-energy(pi, params))
    suffix = [0.0] * (2 * n + 2)
    for d in range(2 * n, -1, -1):
        suffix[d] = suffix[d + 1] + mass[d]
    total = suffix[0]  # same accumulation, so survival at lambda 0 is exactly 1
    return [
        (lam, (suffix[lam] / total if lam <= 2 * n else 0.0)) for lam in lam_grid
    ]


def exact_tail(params: ModelParams, j: int, lam: int) -> float:
    """P(diam of the cycle of j >= lam) under the exact distribution."""
    return exact_tail_curve(params, j, [lam])[0][1]


def exact_expectation(params: ModelParams, observable) -> float:
    """Expectation of observable(pi) under the exact distribution.

    Streams the enumeration twice instead of materializing it, so it works
    at the full capacity of the enumerator.
    """
    if params.infinite_p:
        total = 0
        acc = []
        for pi in enumerate_permutations(params):
            acc.append(observable(pi))
            total += 1
        return math.fsum(acc) / total
    z_terms = []
    num_terms = []
    for pi in enumerate_permutations(params):
        w = math.exp(-energy(pi, params))
        z_terms.append(w)
        num_terms.append(w * observable(pi))
    return math.fsum(num_terms) / math.fsum(z_terms)
