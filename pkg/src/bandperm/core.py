"""Permutations of a symmetric integer interval and their displacement algebra.

Everything in this package is built on bijections pi of the interval
[-n, n].  This module holds the value types (model parameters, permutations,
cycle statistics) and the handful of primitives the other modules consume:
orbit extraction, displacement energy, band-support membership and the
image-swap move.

All operations are pure: inputs are never mutated and results are fresh
values, so they are safe to call from concurrent workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

INFINITY = math.inf


class DomainError(ValueError):
    """An index or image value falls outside the interval [-n, n]."""


class DegenerateSwapError(ValueError):
    """swap_images was asked to swap a position with itself."""


class UnsupportedExponentError(ValueError):
    """The operation needs a finite displacement exponent."""


@dataclass(frozen=True)
class ModelParams:
    """The model triple: displacement exponent p, bandwidth W, half-length n.

    p may be any real >= 1 or ``math.inf``; at infinite p the displacement
    penalty degenerates to a hard cap of W on every |pi(i) - i|.  The domain
    of all permutations is [-n, n], of size 2n + 1.
    """

    p: float
    W: int
    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.W, int) or self.W < 1:
            raise ValueError(f"W must be a positive integer, got {self.W!r}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        p = self.p
        if not isinstance(p, (int, float)) or math.isnan(p) or p < 1:
            raise ValueError(f"p must be a real >= 1 or infinity, got {p!r}")

    @property
    def infinite_p(self) -> bool:
        return self.p == INFINITY

    @property
    def interval_size(self) -> int:
        return 2 * self.n + 1


@dataclass(frozen=True)
class Permutation:
    """A bijection of [-n, n], stored as the image tuple (pi(-n), ..., pi(n)).

    The constructor validates bijectivity, so any held instance is a genuine
    permutation.  The wire format (shared with the CLI) is the same image
    sequence as a JSON array; see :meth:`to_list` / :meth:`from_list`.
    """

    image: tuple[int, ...]

    def __post_init__(self) -> None:
        image = tuple(self.image)
        object.__setattr__(self, "image", image)
        m = len(image)
        if m < 3 or m % 2 == 0:
            raise ValueError(f"image length must be odd and >= 3, got {m}")
        n = m // 2
        seen = [False] * m
        for v in image:
            if not isinstance(v, int) or not -n <= v <= n:
                raise DomainError(f"image value {v!r} outside [{-n}, {n}]")
            if seen[v + n]:
                raise ValueError(f"value {v} repeated: image is not a bijection")
            seen[v + n] = True

    @property
    def n(self) -> int:
        return len(self.image) // 2

    def __call__(self, i: int) -> int:
        n = self.n
        if not -n <= i <= n:
            raise DomainError(f"point {i} outside [{-n}, {n}]")
        return self.image[i + n]

    def domain(self) -> range:
        return range(-self.n, self.n + 1)

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(tuple(range(-n, n + 1)))

    @classmethod
    def from_mapping(cls, n: int, mapping: Mapping[int, int]) -> Permutation:
        """Identity on [-n, n] except at the explicitly mapped points.

        >>> Permutation.from_mapping(2, {0: 1, 1: 0}).image
        (-2, -1, 1, 0, 2)
        """
        image = list(range(-n, n + 1))
        for i, v in mapping.items():
            if not -n <= i <= n:
                raise DomainError(f"point {i} outside [{-n}, {n}]")
            image[i + n] = v
        return cls(tuple(image))

    def to_list(self) -> list[int]:
        """The JSON wire format: images for i = -n..n as a plain list."""
        return list(self.image)

    @classmethod
    def from_list(cls, values: Iterable[int]) -> Permutation:
        return cls(tuple(int(v) for v in values))


@dataclass(frozen=True)
class CycleStats:
    """The orbit of one point: its element set, period, extremes and diameter.

    diam is max - min of the element set; a fixed point has diam 0 and
    length 1.
    """

    elements: frozenset[int]
    length: int
    min: int
    max: int
    diam: int


def cycle_of(pi: Permutation, j: int) -> CycleStats:
    """Orbit of j under iteration of pi, with its summary statistics.

    Terminates after exactly ``length`` applications of pi (bijectivity
    guarantees the walk returns to j).
    """
    n = pi.n
    if not -n <= j <= n:
        raise DomainError(f"point {j} outside [{-n}, {n}]")
    image = pi.image
    members = []
    x = j
    while True:
        members.append(x)
        x = image[x + n]
        if x == j:
            break
    lo = min(members)
    hi = max(members)
    return CycleStats(frozenset(members), len(members), lo, hi, hi - lo)


def energy(pi: Permutation, params: ModelParams) -> float:
    """Displacement energy (1/W^p) * sum_i |pi(i) - i|^p, finite p only.

    Zero exactly when pi is the identity.  At p = infinity there is no
    energy, only support membership; use :func:`in_support` instead.
    """
    if params.infinite_p:
        raise UnsupportedExponentError(
            "energy is undefined at p = infinity; use in_support"
        )
    if params.n != pi.n:
        raise DomainError(
            f"params are for [-{params.n}, {params.n}] but permutation is "
            f"for [-{pi.n}, {pi.n}]"
        )
    p = params.p
    n = pi.n
    total = 0.0
    for k, v in enumerate(pi.image):
        total += abs(v - (k - n)) ** p
    return total / params.W**p


def max_displacement(pi: Permutation) -> int:
    """max_i |pi(i) - i|."""
    n = pi.n
    return max(abs(v - (k - n)) for k, v in enumerate(pi.image))


def in_support(pi: Permutation, W: int) -> bool:
    """Whether every displacement |pi(i) - i| is at most W."""
    if not isinstance(W, int) or W < 1:
        raise ValueError(f"W must be a positive integer, got {W!r}")
    return max_displacement(pi) <= W


def swap_images(pi: Permutation, a: int, b: int) -> Permutation:
    """The permutation agreeing with pi except images at a and b trade places.

    An involution in (a, b): swapping twice restores pi.
    """
    if a == b:
        raise DegenerateSwapError(f"cannot swap position {a} with itself")
    n = pi.n
    if not -n <= a <= n or not -n <= b <= n:
        raise DomainError(f"positions ({a}, {b}) not both inside [{-n}, {n}]")
    image = list(pi.image)
    image[a + n], image[b + n] = image[b + n], image[a + n]
    return Permutation(tuple(image))


def reflect(pi: Permutation) -> Permutation:
    """Conjugate pi by the reflection i -> -i.

    The result maps i to -pi(-i); its displacement multiset equals pi's, so
    energy and band membership are preserved.
    """
    return Permutation(tuple(-v for v in reversed(pi.image)))
