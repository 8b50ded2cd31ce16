"""Survival curves, scaling fits, preimage-size statistics and the
tail-bound recurrence checker.

This layer turns sample streams and exact oracles into the quantitative
statements of interest: how fast P(diam C(j) >= lam) decays in lam, how the
mean cycle diameter and the mean displacement scale with the bandwidth, how
large the uncrossing preimages actually are, and whether a candidate
exponential tail bound is preserved by the summation-by-parts recurrence
that closes the localization argument.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import ModelParams, Permutation, cycle_of
from .uncross import uncross_preimage

# Default fit-window rules (both overridable per call): drop grid points
# with fewer than this many surviving samples, and drop the boundary head
# lam <= 2W where the one-step geometry distorts the decay.
MIN_SURVIVORS = 10


class NoDataError(ValueError):
    """The input stream contained no usable samples."""


class UnfittableError(ValueError):
    """The requested fit is degenerate on this input."""


@dataclass(frozen=True)
class TailPoint:
    lam: int
    survival: float
    stderr: float
    count: int


@dataclass(frozen=True)
class TailCurve:
    """Empirical survival probabilities P(diam >= lam) over a lambda grid.

    mean_diam carries the plain sample mean of the diameters with a
    jackknife standard error over contiguous chain blocks, for use by the
    bandwidth-scaling fit.
    """

    params: ModelParams
    j: int
    points: tuple[TailPoint, ...]
    mean_diam: Optional[float] = None
    mean_diam_stderr: Optional[float] = None

    def __post_init__(self) -> None:
        last = 1.0
        for pt in self.points:
            if pt.survival > last + 1e-12:
                raise ValueError("survival must be nonincreasing in lambda")
            last = pt.survival
            if pt.lam == 0 and pt.survival != 1.0:
                raise ValueError("survival at lambda = 0 must be 1")

    def survival_at(self, lam: int) -> float:
        for pt in self.points:
            if pt.lam == lam:
                return pt.survival
        raise KeyError(lam)


def _jackknife_mean(values: np.ndarray, blocks: int) -> tuple[float, float]:
    mean = float(values.mean())
    if len(values) < 2:
        return mean, 0.0
    blocks = max(2, min(blocks, len(values)))
    parts = np.array_split(values, blocks)
    part_sums = np.array([p.sum() for p in parts], dtype=float)
    part_lens = np.array([len(p) for p in parts], dtype=float)
    total = part_sums.sum()
    count = part_lens.sum()
    leave_out = (total - part_sums) / (count - part_lens)
    stderr = math.sqrt(
        (blocks - 1) / blocks * float(((leave_out - leave_out.mean()) ** 2).sum())
    )
    return mean, stderr


def estimate_tail_curve(
    diams: Sequence[int],
    lam_grid: Sequence[float],
    params: ModelParams,
    j: int = 0,
    jackknife_blocks: int = 20,
) -> TailCurve:
    """Survival curve of a diameter stream over the given lambda grid.

    survival(lam) is the fraction of samples with diam >= lam and stderr is
    the binomial sqrt(s(1-s)/count).  Real-valued thresholds reduce to the
    integer lattice by rounding down, which only weakens the tail being
    bounded (diameters are integers, so P(diam >= lam) = P(diam >= ceil
    lam) <= P(diam >= floor lam)).
    """
    arr = np.asarray(list(diams), dtype=np.int64)
    count = len(arr)
    if count == 0:
        raise NoDataError("empty diameter stream")
    arr_sorted = np.sort(arr)
    points = []
    for lam in sorted(int(math.floor(x)) for x in lam_grid):
        surv = float(count - np.searchsorted(arr_sorted, lam, side="left")) / count
        stderr = math.sqrt(surv * (1.0 - surv) / count)
        points.append(TailPoint(lam, surv, stderr, count))
    mean, mean_err = _jackknife_mean(arr.astype(float), jackknife_blocks)
    return TailCurve(params, j, tuple(points), mean, mean_err)


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit summary; residual is the R^2 of the primary fit.

    decay_rate_c_hat is the slope of -log survival against lambda within the
    fit window; exponent_alpha_hat is the slope of log(mean) against log(W)
    across curves (None when only one curve is supplied).  window records
    the lambda range (single curve) or W range (cross-curve) actually used.
    """

    decay_rate_c_hat: Optional[float]
    exponent_alpha_hat: Optional[float]
    residual: float
    window: tuple[float, float]
    n_points: int
    per_curve: tuple["FitResult", ...] = ()


def _least_squares_line(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Slope, intercept and R^2 of the ordinary least-squares line."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 2:
        raise UnfittableError("need at least two points to fit a line")
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise UnfittableError("all abscissae coincide")
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    ss_res = float(((y - slope * x - intercept) ** 2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r_squared


def decay_fit_window(
    curve: TailCurve,
    head_cut: Optional[int] = None,
    min_survivors: int = MIN_SURVIVORS,
) -> list[TailPoint]:
    """Grid points used for the decay fit.

    Excludes the boundary head lam <= head_cut (default 2W) and points whose
    surviving count falls below min_survivors or whose survival reached 0 or
    1 exactly; all three cutoffs are exposed to configuration.
    """
    if head_cut is None:
        head_cut = 2 * curve.params.W
    picked = []
    for pt in curve.points:
        if pt.lam <= head_cut:
            continue
        if pt.survival <= 0.0 or pt.survival >= 1.0:
            continue
        if pt.survival * pt.count < min_survivors:
            continue
        picked.append(pt)
    return picked


def fit_exponential_decay(
    curve: TailCurve,
    head_cut: Optional[int] = None,
    min_survivors: int = MIN_SURVIVORS,
) -> FitResult:
    """Least-squares fit of -log survival against lambda inside the window."""
    picked = decay_fit_window(curve, head_cut, min_survivors)
    if len(picked) < 3:
        raise UnfittableError(
            f"only {len(picked)} usable grid points after windowing; need >= 3"
        )
    xs = [pt.lam for pt in picked]
    ys = [-math.log(pt.survival) for pt in picked]
    slope, _, r_squared = _least_squares_line(xs, ys)
    return FitResult(
        decay_rate_c_hat=slope,
        exponent_alpha_hat=None,
        residual=r_squared,
        window=(float(xs[0]), float(xs[-1])),
        n_points=len(picked),
    )


def fit_decay_and_exponent(
    curves: Sequence[TailCurve],
    head_cut: Optional[int] = None,
    min_survivors: int = MIN_SURVIVORS,
) -> FitResult:
    """Per-curve decay rates plus the cross-curve diameter-scaling exponent.

    With one curve this is exactly :func:`fit_exponential_decay`.  With a
    W-grid of curves, log(mean diam) is regressed on log(W); the returned
    decay_rate_c_hat is the largest-W curve's rate and per_curve holds every
    individual decay fit.
    """
    if not curves:
        raise NoDataError("no curves supplied")
    fits = tuple(
        fit_exponential_decay(c, head_cut, min_survivors) for c in curves
    )
    if len(curves) == 1:
        return fits[0]
    ws = [c.params.W for c in curves]
    means = [c.mean_diam for c in curves]
    if len(set(ws)) != len(ws):
        raise UnfittableError("curves must have distinct bandwidths W")
    if any(m is None or m <= 0 for m in means):
        raise UnfittableError("every curve needs a positive mean_diam")
    order = np.argsort(ws)
    xs = [math.log(ws[i]) for i in order]
    ys = [math.log(means[i]) for i in order]
    slope, _, r_squared = _least_squares_line(xs, ys)
    return FitResult(
        decay_rate_c_hat=fits[int(order[-1])].decay_rate_c_hat,
        exponent_alpha_hat=slope,
        residual=r_squared,
        window=(float(min(ws)), float(max(ws))),
        n_points=len(curves),
        per_curve=fits,
    )


def band_structure_stat(
    displacements_by_w: Mapping[int, Sequence[float]],
) -> FitResult:
    """Regression of log mean |pi(0)| on log W across a bandwidth grid.

    A slope near 1 reproduces the linear band-structure law for the typical
    displacement.  Raises UnfittableError when any bandwidth's mean is zero
    (the log scale is then meaningless).
    """
    if len(displacements_by_w) < 2:
        raise UnfittableError("need at least two bandwidths")
    xs, ys = [], []
    for w in sorted(displacements_by_w):
        samples = np.asarray(list(displacements_by_w[w]), dtype=float)
        if len(samples) == 0:
            raise NoDataError(f"no samples for W={w}")
        mean = float(samples.mean())
        if mean <= 0.0:
            raise UnfittableError(f"mean displacement at W={w} is zero")
        xs.append(math.log(w))
        ys.append(math.log(mean))
    slope, _, r_squared = _least_squares_line(xs, ys)
    ws = sorted(displacements_by_w)
    return FitResult(
        decay_rate_c_hat=None,
        exponent_alpha_hat=slope,
        residual=r_squared,
        window=(float(ws[0]), float(ws[-1])),
        n_points=len(ws),
    )


@dataclass(frozen=True)
class PreimageSizeStats:
    """Empirical distribution of uncrossing preimage sizes at one threshold."""

    W: int
    t: int
    histogram: dict[int, int]
    count: int
    median: float
    q90: float
    max_size: int

    @property
    def w_scale(self) -> int:
        return self.W

    @property
    def w_squared_scale(self) -> int:
        return self.W * self.W


def preimage_size_stats(
    params: ModelParams, t: int, taus: Iterable[Permutation]
) -> PreimageSizeStats:
    """Histogram of |preimage| over a stream of admissible band permutations.

    Admissible means max C_tau(0) <= t; other samples are skipped.  Only the
    hard-support model is meaningful here, since that is where the W^2
    versus W entropy question lives.
    """
    if not params.infinite_p:
        raise ValueError("preimage size statistics require p = infinity")
    sizes = []
    for tau in taus:
        if cycle_of(tau, 0).max > t:
            continue
        sizes.append(len(uncross_preimage(tau, t, params)))
    if not sizes:
        raise NoDataError("no admissible samples (max C(0) <= t never held)")
    hist: dict[int, int] = {}
    for s in sizes:
        hist[s] = hist.get(s, 0) + 1
    arr = np.asarray(sizes, dtype=float)
    return PreimageSizeStats(
        W=params.W,
        t=t,
        histogram=dict(sorted(hist.items())),
        count=len(sizes),
        median=float(np.quantile(arr, 0.5)),
        q90=float(np.quantile(arr, 0.9)),
        max_size=int(arr.max()),
    )


# ---------------------------------------------------------------------------
# Recurrence propagation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecurrenceResult:
    propagated: bool
    first_failure_k: Optional[int]
    c: float  # contraction constant derived from C0


def _convolve(f: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Direct convolution with the kernel trimmed at its underflow point.

    The weight-increment kernel decays to exact float zeros, so dropping the
    trailing zeros changes nothing while keeping the cost near-linear.  FFT
    convolution is not usable here: its absolute noise floor (~1e-13) swamps
    the tail values being compared, which reach far below it.
    """
    nonzero = np.nonzero(h)[0]
    cut = int(nonzero[-1]) + 1 if len(nonzero) else 1
    return np.convolve(f, h[:cut])


def recurrence_check(
    p: float, W: int, C0: float, c0: float, k_max: int
) -> RecurrenceResult:
    """Does f(k) = min(1, 2 exp(-c0 k / W^3)) survive the tail recurrence?

    The one-step bound rearranges, by summation by parts with weights
    w_j = exp(-|k-j|^p / W^p) and w_{-1} = 0, into

        p_{k+1} <= (1 - c W^{-2}) * sum_{j<=k} p_j (w_j - w_{j-1}),

    with c = 1 / (C0 + W^{-2}).  The check substitutes f for p on the right
    (valid since the weight increments are nonnegative) and requires the
    result not to exceed f(k+1), for every k < k_max, up to a 1e-9 relative
    float guard.  Returns the first failing k when propagation breaks.
    """
    if math.isinf(p) or p < 1:
        raise ValueError(f"p must be a finite real >= 1, got {p!r}")
    if W < 1 or k_max < 1:
        raise ValueError("W and k_max must be positive")
    if C0 <= 0:
        raise ValueError(f"C0 must be positive, got {C0!r}")
    if c0 < 0:
        raise ValueError(f"c0 must be nonnegative, got {c0!r}")
    c = 1.0 / (C0 + W**-2)
    factor = 1.0 - c / W**2
    ks = np.arange(k_max + 2, dtype=float)
    f = np.minimum(1.0, 2.0 * np.exp(-c0 * ks[: k_max + 1] / W**3))
    g = np.exp(-((ks / W) ** p))
    h = g[: k_max + 1] - g[1 : k_max + 2]
    conv = _convolve(f, h)[: k_max + 1]
    rhs = factor * (conv + f[0] * g[1 : k_max + 2])
    target = np.minimum(1.0, 2.0 * np.exp(-c0 * np.arange(1, k_max + 1) / W**3))
    bad = rhs[: k_max] > target * (1.0 + 1e-9)
    if not bad.any():
        return RecurrenceResult(True, None, c)
    return RecurrenceResult(False, int(np.argmax(bad)), c)


def largest_propagating_c0(
    p: float,
    W: int,
    C0: float,
    k_max: int,
    hi: float = 4.0,
    tol: float = 1e-3,
) -> float:
    """Largest decay coefficient (up to tol) that the recurrence sustains.

    Geometric descent from hi brackets the boundary, then bisection narrows
    it; the returned value is always verified to propagate.  c0 = 0 always
    propagates (the weights telescope), so the search cannot come back
    empty.
    """
    if recurrence_check(p, W, C0, hi, k_max).propagated:
        return hi
    upper = hi
    lower = hi
    for _ in range(200):
        lower *= 0.7
        if recurrence_check(p, W, C0, lower, k_max).propagated:
            break
        upper = lower
    else:
        return 0.0
    while upper - lower > tol:
        mid = 0.5 * (upper + lower)
        if recurrence_check(p, W, C0, mid, k_max).propagated:
            lower = mid
        else:
            upper = mid
    return lower
