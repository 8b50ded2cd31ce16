"""The uncrossing map and its verification machinery.

The orbit of 0 either stays at or below a threshold t, or it crosses above
and must cross back.  ``uncross`` swaps the images at the first up-crossing
source and the last down-crossing source, which removes every excursion of
the orbit above t, never increases the displacement energy, and keeps band
membership.  ``uncross_preimage`` inverts the map by candidate enumeration,
and ``crossing_ratio_check`` tests the weight-ratio inequality that controls
each preimage term at finite p.

Composition-order convention: the transposition of the two crossing targets
is applied after the permutation, which is the same as swapping the images
at the two crossing sources.  This is the reading under which the mapped
orbit no longer exceeds the threshold; the test suite demonstrates
mechanically that the opposite reading does not have that property.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import (
    INFINITY,
    DomainError,
    ModelParams,
    Permutation,
    UnsupportedExponentError,
    cycle_of,
    energy,
    in_support,
    reflect,
    swap_images,
)

# Multiplicative slack for floating-point comparisons of energy ratios.
RATIO_GUARD = 1e-9

# Frozen regression bound for the per-fiber weighted sum at finite p:
# sum over the fiber of P(pi)/P(tau) <= K * W^2 * exp(-|t - max C(0)|^p / W^p).
# Brute force over the exhaustive range (2n+1 = 7, p in {1, 1.5, 2, 4},
# W in {1, 2}, t in 0..2) observed a maximum quotient of 0.657.
RATIO_SUM_K = 1.0


class NoCrossingError(ValueError):
    """uncross was called on an orbit that never exceeds the threshold."""


class CrossingConditionError(ValueError):
    """The (a, b) pair does not straddle the threshold as required."""


@dataclass(frozen=True)
class UpCrossing:
    """First step of the orbit of 0 from <= threshold to > threshold.

    source = pi^index(0) <= t and target = pi^(index+1)(0) > t.
    """

    index: int
    source: int
    target: int


@dataclass(frozen=True)
class DownCrossing:
    """Last step of the orbit of 0 from > threshold back to <= threshold.

    source = pi^index(0) > t and target = pi^(index+1)(0) <= t; the index is
    the largest such in [0, period), where period is the length of the cycle
    of 0.
    """

    index: int
    source: int
    target: int


@dataclass(frozen=True)
class CrossingRecord:
    """Both crossings of one orbit at one threshold."""

    threshold: int
    up: UpCrossing
    down: DownCrossing

    def __post_init__(self) -> None:
        t = self.threshold
        if not (self.up.source <= t < self.up.target):
            raise ValueError("up-crossing does not straddle the threshold")
        if not (self.down.target <= t < self.down.source):
            raise ValueError("down-crossing does not straddle the threshold")
        if self.up.source == self.down.source:
            raise ValueError("up and down crossing sources coincide")


def _orbit_of_zero(pi: Permutation) -> list[int]:
    image = pi.image
    n = pi.n
    orbit = [0]
    x = image[n]
    while x != 0:
        orbit.append(x)
        x = image[x + n]
    return orbit


def first_upcrossing(pi: Permutation, t: int) -> Optional[UpCrossing]:
    """Least j >= 0 with pi^j(0) <= t < pi^(j+1)(0), or None if the orbit
    never exceeds t.  Requires t >= 0 so that the orbit starts below."""
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    orbit = _orbit_of_zero(pi)
    period = len(orbit)
    for j in range(period):
        here = orbit[j]
        nxt = orbit[(j + 1) % period]
        if here <= t < nxt:
            return UpCrossing(j, here, nxt)
    return None


def last_downcrossing(pi: Permutation, t: int) -> Optional[DownCrossing]:
    """Greatest j in [0, period) with pi^(j+1)(0) <= t < pi^j(0), or None.

    period is the length of the cycle of 0, so the search covers exactly one
    traversal and pi^period(0) = 0 closes it.
    """
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    orbit = _orbit_of_zero(pi)
    period = len(orbit)
    for j in range(period - 1, -1, -1):
        here = orbit[j]
        nxt = orbit[(j + 1) % period]
        if nxt <= t < here:
            return DownCrossing(j, here, nxt)
    return None


def crossing_record(pi: Permutation, t: int) -> Optional[CrossingRecord]:
    """Both crossings at threshold t, or None when the orbit stays below."""
    up = first_upcrossing(pi, t)
    if up is None:
        return None
    down = last_downcrossing(pi, t)
    assert down is not None  # an orbit that goes up must come back down
    return CrossingRecord(t, up, down)


def uncross(pi: Permutation, t: int) -> Permutation:
    """Remove the orbit-of-0 excursion above t by one image swap.

    The images at the up-crossing source and the down-crossing source trade
    places.  The result rho satisfies max C_rho(0) <= t; at finite p its
    energy never exceeds pi's; and if pi lies in S_W then so does rho, with
    max C_rho(0) > t - 2W.
    """
    rec = crossing_record(pi, t)
    if rec is None:
        raise NoCrossingError(
            f"orbit of 0 never exceeds {t}; permutation is outside the map's domain"
        )
    return swap_images(pi, rec.up.source, rec.down.source)


def uncross_min(pi: Permutation, t: int) -> Permutation:
    """Mirror of :func:`uncross` acting on the minimum of the cycle of 0.

    Implemented by conjugating with the reflection i -> -i; the result has
    min C(0) >= -t.
    """
    return reflect(uncross(reflect(pi), t))


def _preimage_candidates(
    tau: Permutation, t: int, params: ModelParams
) -> Iterable[tuple[int, int]]:
    """Candidate (a, b) source pairs whose image swap might invert the map.

    a runs over the cycle of 0 with a, tau(a) <= t; b over points with
    b, tau(b) > t.  At infinite p both are pinned to W-windows around the
    threshold because band membership forces the crossing sources there.
    """
    n = tau.n
    cyc = cycle_of(tau, 0).elements
    if params.infinite_p:
        W = params.W
        a_lo, a_hi = max(-n, t - W + 1), min(n, t)
        b_hi = min(n, t + W)
    else:
        a_lo, a_hi = -n, min(n, t)
        b_hi = n
    a_values = [
        a for a in range(a_lo, a_hi + 1) if a in cyc and tau(a) <= t
    ]
    b_values = [b for b in range(t + 1, b_hi + 1) if tau(b) > t]
    for a in a_values:
        for b in b_values:
            yield a, b


def uncross_preimage(
    tau: Permutation, t: int, params: ModelParams
) -> list[Permutation]:
    """All permutations the uncrossing map sends to tau at threshold t.

    Requires max C_tau(0) <= t (the map's image never exceeds the
    threshold).  Candidates are image swaps of tau at the admissible source
    pairs, kept when the round trip through :func:`uncross` returns tau; at
    infinite p the preimage is additionally restricted to S_W, which caps
    its size at W^2.  Results are sorted by image tuple.
    """
    if cycle_of(tau, 0).max > t:
        raise DomainError(
            f"max of the cycle of 0 exceeds {t}; tau is outside the map's image"
        )
    found = []
    infinite = params.infinite_p
    for a, b in _preimage_candidates(tau, t, params):
        candidate = swap_images(tau, a, b)
        if infinite and not in_support(candidate, params.W):
            continue
        rec = crossing_record(candidate, t)
        if rec is None:
            continue
        if swap_images(candidate, rec.up.source, rec.down.source) == tau:
            found.append(candidate)
    found.sort(key=lambda pi: pi.image)
    return found


@dataclass(frozen=True)
class RatioCheck:
    """ratio and bound can underflow to 0.0 at large p; the log fields and
    the satisfied flag are computed in log space and never do."""

    ratio: float
    bound: float
    satisfied: bool
    log_ratio: float
    log_bound: float


def crossing_ratio_check(
    tau: Permutation, a: int, b: int, t: int, params: ModelParams
) -> RatioCheck:
    """Check the weight-ratio inequality for one straddling swap at finite p.

    With a, tau(a) <= t < b, tau(b), the swap of images at (a, b) recreates
    a crossing; its Gibbs weight relative to tau is exp(-delta_energy) and
    must not exceed exp(-|min(b, tau(b)) - max(a, tau(a))|^p / W^p), up to a
    1e-9 multiplicative float guard.
    """
    if params.infinite_p:
        raise UnsupportedExponentError("the ratio inequality is a finite-p statement")
    n = tau.n
    if not -n <= a <= n or not -n <= b <= n:
        raise DomainError(f"positions ({a}, {b}) not both inside [{-n}, {n}]")
    ta, tb = tau(a), tau(b)
    if not (a <= t and ta <= t and b > t and tb > t):
        raise CrossingConditionError(
            f"need a, tau(a) <= {t} < b, tau(b); got a={a}, tau(a)={ta}, "
            f"b={b}, tau(b)={tb}"
        )
    p, W = params.p, params.W
    wp = float(W) ** p
    delta = (
        abs(tb - a) ** p + abs(ta - b) ** p - abs(ta - a) ** p - abs(tb - b) ** p
    ) / wp
    gap = min(b, tb) - max(a, ta)
    log_ratio = -delta
    log_bound = -(abs(gap) ** p) / wp
    satisfied = log_ratio <= log_bound + math.log1p(RATIO_GUARD)
    return RatioCheck(
        math.exp(log_ratio), math.exp(log_bound), satisfied, log_ratio, log_bound
    )


# ---------------------------------------------------------------------------
# Exhaustive verification sweeps
# ---------------------------------------------------------------------------


@dataclass
class VerificationCertificate:
    """Outcome of the exhaustive invariant sweep for one interval size.

    counts holds instances checked per property; violations holds one dict
    per failure (empty when everything passed).  Extremal witnesses are kept
    even on success so the certificate documents observed margins.
    """

    n: int
    w_values: tuple[int, ...]
    p_values: tuple[float, ...]
    lam_values: tuple[int, ...]
    counts: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    max_preimage_size: int = 0
    max_preimage_witness: Optional[dict] = None
    max_ratio_quotient: float = 0.0
    max_ratio_witness: Optional[dict] = None
    max_ratio_sum_quotient: float = 0.0
    max_ratio_sum_witness: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def _bump(self, key: str, amount: int = 1) -> None:
        self.counts[key] = self.counts.get(key, 0) + amount

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "w_values": list(self.w_values),
            "p_values": ["inf" if math.isinf(p) else p for p in self.p_values],
            "lam_values": list(self.lam_values),
            "counts": dict(sorted(self.counts.items())),
            "violations": self.violations,
            "violations_total": len(self.violations),
            "max_preimage_size": self.max_preimage_size,
            "max_preimage_witness": self.max_preimage_witness,
            "max_ratio_quotient": self.max_ratio_quotient,
            "max_ratio_witness": self.max_ratio_witness,
            "max_ratio_sum_quotient": self.max_ratio_sum_quotient,
            "max_ratio_sum_witness": self.max_ratio_sum_witness,
        }


def _band_members(n: int, W: int) -> list[Permutation]:
    from .exact import enumerate_permutations

    return list(enumerate_permutations(ModelParams(p=INFINITY, W=W, n=n)))


def verify_one_step_membership(
    cert: VerificationCertificate, n: int, W: int, lam_values: Iterable[int]
) -> None:
    """Image membership at thresholds lam + 2W over all of S_W.

    For every band permutation whose 0-cycle exceeds lam + 2W, the uncrossed
    permutation must stay in S_W with max C(0) in (lam, lam + 2W].  Small
    intervals may admit no instances at all; the count records how many were
    actually exercised.
    """
    members = _band_members(n, W)
    cert.counts.setdefault("one_step_membership", 0)
    for lam in lam_values:
        t = lam + 2 * W
        for pi in members:
            if cycle_of(pi, 0).max <= t:
                continue
            cert._bump("one_step_membership")
            rho = uncross(pi, t)
            top = cycle_of(rho, 0).max
            if not (in_support(rho, W) and lam < top <= t):
                cert.violations.append(
                    {
                        "check": "one_step_membership",
                        "W": W,
                        "lam": lam,
                        "pi": pi.to_list(),
                        "rho": rho.to_list(),
                        "max_c0": top,
                    }
                )


def verify_uncross_contract(
    cert: VerificationCertificate, n: int, W: int, t_values: Iterable[int]
) -> None:
    """General-threshold guarantees of the map over all of S_W."""
    members = _band_members(n, W)
    cert.counts.setdefault("uncross_contract", 0)
    for t in t_values:
        for pi in members:
            if cycle_of(pi, 0).max <= t:
                continue
            cert._bump("uncross_contract")
            rho = uncross(pi, t)
            top = cycle_of(rho, 0).max
            if not (top <= t and in_support(rho, W) and top > t - 2 * W):
                cert.violations.append(
                    {
                        "check": "uncross_contract",
                        "W": W,
                        "t": t,
                        "pi": pi.to_list(),
                        "rho": rho.to_list(),
                        "max_c0": top,
                    }
                )


def verify_preimages_band(
    cert: VerificationCertificate, n: int, W: int, t_values: Iterable[int]
) -> None:
    """Preimage enumeration against brute-force inversion over S_W.

    The forward map is applied to every band permutation with a crossing and
    the resulting fibers are compared, as sets, with uncross_preimage; fiber
    sizes must never exceed W^2.
    """
    members = _band_members(n, W)
    cert.counts.setdefault("preimage_sets_band", 0)
    params = ModelParams(p=INFINITY, W=W, n=n)
    for t in t_values:
        fibers: dict[Permutation, list[Permutation]] = {}
        for pi in members:
            if cycle_of(pi, 0).max > t:
                fibers.setdefault(uncross(pi, t), []).append(pi)
        for tau in members:
            if cycle_of(tau, 0).max > t:
                continue
            cert._bump("preimage_sets_band")
            expected = sorted(fibers.get(tau, []), key=lambda q: q.image)
            got = uncross_preimage(tau, t, params)
            size = len(got)
            if size > cert.max_preimage_size:
                cert.max_preimage_size = size
                cert.max_preimage_witness = {
                    "W": W,
                    "t": t,
                    "tau": tau.to_list(),
                    "size": size,
                }
            if got != expected or size > W * W:
                cert.violations.append(
                    {
                        "check": "preimage_sets_band",
                        "W": W,
                        "t": t,
                        "tau": tau.to_list(),
                        "expected": [q.to_list() for q in expected],
                        "got": [q.to_list() for q in got],
                    }
                )


def verify_energy_monotonicity(
    cert: VerificationCertificate, n: int, p: float, t_values: Iterable[int]
) -> None:
    """Uncrossing never increases energy, over all permutations of [-n, n]."""
    from .exact import enumerate_permutations

    params = ModelParams(p=p, W=1, n=n)
    for t in t_values:
        for pi in enumerate_permutations(params):
            if cycle_of(pi, 0).max <= t:
                continue
            cert._bump("energy_monotonicity")
            rho = uncross(pi, t)
            before = energy(pi, params)
            after = energy(rho, params)
            if after > before + 1e-9:
                cert.violations.append(
                    {
                        "check": "energy_monotonicity",
                        "p": p,
                        "t": t,
                        "pi": pi.to_list(),
                        "energy_before": before,
                        "energy_after": after,
                    }
                )


def verify_ratio_bound(
    cert: VerificationCertificate,
    n: int,
    p: float,
    W: int,
    t_values: Iterable[int],
) -> None:
    """The weight-ratio inequality over every admissible (tau, a, b, t)."""
    from .exact import enumerate_permutations

    params = ModelParams(p=p, W=W, n=n)
    for tau in enumerate_permutations(params):
        image = tau.image
        for t in t_values:
            lows = [a for a in range(-n, t + 1) if image[a + n] <= t]
            highs = [b for b in range(t + 1, n + 1) if image[b + n] > t]
            for a in lows:
                for b in highs:
                    cert._bump("ratio_bound")
                    check = crossing_ratio_check(tau, a, b, t, params)
                    quotient = math.exp(
                        min(check.log_ratio - check.log_bound, 700.0)
                    )
                    if quotient > cert.max_ratio_quotient:
                        cert.max_ratio_quotient = quotient
                        cert.max_ratio_witness = {
                            "p": p,
                            "W": W,
                            "t": t,
                            "tau": tau.to_list(),
                            "a": a,
                            "b": b,
                            "ratio": check.ratio,
                            "bound": check.bound,
                        }
                    if not check.satisfied:
                        cert.violations.append(
                            {
                                "check": "ratio_bound",
                                "p": p,
                                "W": W,
                                "t": t,
                                "tau": tau.to_list(),
                                "a": a,
                                "b": b,
                                "ratio": check.ratio,
                                "bound": check.bound,
                            }
                        )


def verify_ratio_sum(
    cert: VerificationCertificate,
    n: int,
    p: float,
    W: int,
    t_values: Iterable[int],
    k_bound: float = RATIO_SUM_K,
) -> None:
    """The fiber-summed weight ratio against its frozen regression bound.

    For every tau whose 0-cycle stays at or below t, the weights of its
    uncrossing fiber, relative to tau, must sum to at most
    k_bound * W^2 * exp(-|t - max C(0)|^p / W^p).
    """
    from .exact import enumerate_permutations

    params = ModelParams(p=p, W=W, n=n)
    wp = float(W) ** p
    cert.counts.setdefault("ratio_sum", 0)
    for tau in enumerate_permutations(params):
        e_tau = energy(tau, params)
        top = cycle_of(tau, 0).max
        for t in t_values:
            if top > t:
                continue
            fiber = uncross_preimage(tau, t, params)
            if not fiber:
                continue
            cert._bump("ratio_sum")
            total = sum(
                math.exp(-(energy(pi, params) - e_tau)) for pi in fiber
            )
            bound = k_bound * W * W * math.exp(-abs(t - top) ** p / wp)
            quotient = total / bound
            if quotient > cert.max_ratio_sum_quotient:
                cert.max_ratio_sum_quotient = quotient
                cert.max_ratio_sum_witness = {
                    "p": p,
                    "W": W,
                    "t": t,
                    "tau": tau.to_list(),
                    "fiber_size": len(fiber),
                    "ratio_sum": total,
                    "bound": bound,
                }
            if total > bound * (1.0 + RATIO_GUARD):
                cert.violations.append(
                    {
                        "check": "ratio_sum",
                        "p": p,
                        "W": W,
                        "t": t,
                        "tau": tau.to_list(),
                        "ratio_sum": total,
                        "bound": bound,
                    }
                )


def verify_preimages_full(
    cert: VerificationCertificate, n: int, t_values: Iterable[int]
) -> None:
    """Finite-p preimage enumeration against brute-force inversion.

    At finite p the map acts on every permutation with a crossing and the
    preimage enumeration is independent of p and W, so one sweep covers all
    finite exponents.
    """
    from .exact import enumerate_permutations

    params = ModelParams(p=1.0, W=1, n=n)
    everyone = list(enumerate_permutations(params))
    for t in t_values:
        fibers: dict[Permutation, list[Permutation]] = {}
        for pi in everyone:
            if cycle_of(pi, 0).max > t:
                fibers.setdefault(uncross(pi, t), []).append(pi)
        for tau in everyone:
            if cycle_of(tau, 0).max > t:
                continue
            cert._bump("preimage_sets_full")
            expected = sorted(fibers.get(tau, []), key=lambda q: q.image)
            got = uncross_preimage(tau, t, params)
            if got != expected:
                cert.violations.append(
                    {
                        "check": "preimage_sets_full",
                        "t": t,
                        "tau": tau.to_list(),
                        "expected": [q.to_list() for q in expected],
                        "got": [q.to_list() for q in got],
                    }
                )


def run_verification(
    n: int,
    w_values: Iterable[int],
    p_values: Iterable[float],
    lam_values: Optional[Iterable[int]] = None,
    t_values: Optional[Iterable[int]] = None,
) -> VerificationCertificate:
    """Run the exhaustive invariant suite and return its certificate.

    Band checks run for every W; finite-p checks run for every finite p in
    p_values (and need 2n+1 within the factorial enumeration cap).
    """
    w_values = tuple(sorted(set(w_values)))
    p_values = tuple(sorted(set(p_values)))
    lam_tuple = tuple(lam_values) if lam_values is not None else tuple(range(0, min(4, 2 * n) + 1))
    t_tuple = tuple(t_values) if t_values is not None else tuple(range(0, n))
    cert = VerificationCertificate(n, w_values, p_values, lam_tuple)

    if any(math.isinf(p) for p in p_values):
        for W in w_values:
            verify_one_step_membership(cert, n, W, lam_tuple)
            verify_uncross_contract(cert, n, W, t_tuple)
            verify_preimages_band(cert, n, W, t_tuple)

    finite_ps = [p for p in p_values if not math.isinf(p)]
    if finite_ps:
        verify_preimages_full(cert, n, t_tuple)
        for p in finite_ps:
            verify_energy_monotonicity(cert, n, p, t_tuple)
            for W in w_values:
                verify_ratio_bound(cert, n, p, W, t_tuple)
                verify_ratio_sum(cert, n, p, W, t_tuple)
    return cert
