"""Poincare series partial sums and estimators of the exponent of
convergence.

Everything is accumulated in log space; the exponent is only ever
estimated, by two independent routes that cross-validate each other:
the root of the word-length pressure, and the growth rate of the orbit
counting function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import orbits
from .freegroup import QuotientHom
from .schottky import MarkedGroup, OrbitEntry


class NoSignChange(ValueError):
    """Pressure stayed nonnegative on the whole bracket grid."""


class EmptyWindow(ValueError):
    """No entries fall inside the requested radius window."""


class EmptyKernel(ValueError):
    """No nontrivial kernel member found within the cutoff."""


def logsumexp(values) -> float:
    """log(sum(exp(values))), stable for arbitrarily negative inputs."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return -math.inf
    m = float(arr.max())
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.exp(arr - m).sum()))


@dataclass(frozen=True)
class SeriesEstimate:
    """Truncated Poincare sum at exponent s over the ball of radius L."""

    s: float
    L: int
    log_sum: float
    per_length: tuple[float, ...]  # log of each length layer's subtotal

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "L": self.L,
            "log_sum": self.log_sum,
            "per_length": list(self.per_length),
        }


@dataclass(frozen=True)
class DeltaEstimate:
    """Exponent-of-convergence estimate with method tag and diagnostics."""

    value: float
    method: str  # pressure_root | counting_regression
    cutoff: int
    residual: float
    bracket: tuple[float, float]
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("exponent estimate must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "cutoff": self.cutoff,
            "residual": self.residual,
            "bracket": [self.bracket[0], self.bracket[1]],
            "diagnostics": self.diagnostics,
        }


class DisplacementTable:
    """Per-length displacement arrays for a ball; shared by the estimators
    so the orbit walk happens once per (group, L)."""

    def __init__(self, group: MarkedGroup, L: int, arrays: Sequence[np.ndarray]):
        self.group = group
        self.L = L
        self.arrays = list(arrays)

    @classmethod
    def build(
        cls, group: MarkedGroup, L: int, *, workers: int | None = None
    ) -> "DisplacementTable":
        return cls(group, L, orbits.collect_displacements(group, L, workers=workers))

    def layer(self, length: int) -> np.ndarray:
        return self.arrays[length]

    def all_displacements(self, max_length: int | None = None) -> np.ndarray:
        top = self.L if max_length is None else max_length
        return np.concatenate(self.arrays[: top + 1])

    def min_top(self, length: int | None = None) -> float:
        return float(self.layer(self.L if length is None else length).min())


def _displacements_of(entries) -> tuple[np.ndarray, np.ndarray | None]:
    """Accept OrbitEntry streams or plain displacement arrays/iterables.
    Returns (displacements, word lengths or None)."""
    if isinstance(entries, DisplacementTable):
        lengths = np.concatenate(
            [np.full(a.size, l) for l, a in enumerate(entries.arrays)]
        )
        return entries.all_displacements(), lengths
    if isinstance(entries, np.ndarray):
        return entries.astype(float), None
    entries = list(entries)
    if entries and isinstance(entries[0], OrbitEntry):
        d = np.array([e.displacement for e in entries])
        lengths = np.array([len(e.word) for e in entries])
        return d, lengths
    return np.asarray(entries, dtype=float), None


def poincare_partial(entries, s: float) -> SeriesEstimate:
    """Log-space partial sum of exp(-s d) over the given entries, bucketed
    by word length when lengths are available."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    d, lengths = _displacements_of(entries)
    if lengths is None:
        per = (logsumexp(-s * d),) if d.size else ()
        return SeriesEstimate(s, 0, per[0] if per else -math.inf, per)
    L = int(lengths.max(initial=0))
    per = tuple(
        logsumexp(-s * d[lengths == l]) for l in range(L + 1)
    )
    return SeriesEstimate(s, L, logsumexp(np.array(per)), per)


def pressure(
    group: MarkedGroup,
    s: float,
    L: int,
    *,
    table: DisplacementTable | None = None,
    workers: int | None = None,
) -> float:
    """(1/L) log sum over the length-L layer of exp(-s d(0, w(0)))."""
    if L < 1:
        raise ValueError("pressure needs a positive length cutoff")
    if table is None:
        table = DisplacementTable.build(group, L, workers=workers)
    return logsumexp(-s * table.layer(L)) / L


def delta_via_pressure(
    group: MarkedGroup,
    L: int,
    tol: float = 1e-4,
    *,
    table: DisplacementTable | None = None,
    workers: int | None = None,
    grid_step: float = 0.1,
    s_max: float = 4.0,
) -> DeltaEstimate:
    """Bisection root of s -> pressure(s, L).

    The bracket comes from the first grid point with negative pressure;
    NoSignChange if the grid is exhausted while the pressure stays >= 0.
    """
    if table is None:
        table = DisplacementTable.build(group, L, workers=workers)
    layer = table.layer(L)
    pres = lambda s: logsumexp(-s * layer) / L
    if pres(0.0) <= 0:
        raise ValueError("pressure at s=0 must be positive")
    lo, hi = 0.0, None
    s = grid_step
    while s <= s_max + 1e-12:
        if pres(s) < 0:
            hi = s
            break
        lo = s
        s += grid_step
    if hi is None:
        raise NoSignChange(f"pressure still >= 0 at s = {s_max}")
    p_lo, p_hi = pres(lo), pres(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pres(mid) < 0:
            hi = mid
        else:
            lo = mid
    return DeltaEstimate(
        value=0.5 * (lo + hi),
        method="pressure_root",
        cutoff=L,
        residual=hi - lo,
        bracket=(lo, hi),
        diagnostics={"pressure_lo": pres(lo), "pressure_hi": pres(hi),
                     "grid_bracket": [p_lo, p_hi]},
    )


def growth_slope(radii, log_counts) -> tuple[float, float, float]:
    """Least-squares slope/intercept of log N(R) against R, plus RMS residual."""
    radii = np.asarray(radii, dtype=float)
    log_counts = np.asarray(log_counts, dtype=float)
    design = np.vstack([radii, np.ones_like(radii)]).T
    sol, *_ = np.linalg.lstsq(design, log_counts, rcond=None)
    rms = float(np.sqrt(np.mean((log_counts - design @ sol) ** 2)))
    return float(sol[0]), float(sol[1]), rms


def delta_via_counting(
    entries,
    R_lo: float,
    R_hi: float,
    *,
    bin_width: float = 0.5,
) -> DeltaEstimate:
    """Regression slope of log N(R) on a radius grid, N(R) = #{d <= R}."""
    if R_hi <= R_lo:
        raise ValueError("radius window must satisfy R_hi > R_lo")
    d, _ = _displacements_of(entries)
    d = np.sort(d)
    radii = np.arange(R_lo, R_hi + 1e-9, bin_width)
    if radii.size < 5:
        raise ValueError("need at least 5 radius bins")
    counts = np.searchsorted(d, radii, side="right")
    keep = counts > 0
    if not keep.any() or d.size == 0 or not ((d >= R_lo) & (d <= R_hi)).any():
        raise EmptyWindow(f"no entries with displacement in [{R_lo}, {R_hi}]")
    radii, counts = radii[keep], counts[keep]
    slope, intercept, rms = growth_slope(radii, np.log(counts))
    return DeltaEstimate(
        value=slope,
        method="counting_regression",
        cutoff=int(math.ceil(R_hi)),
        residual=rms,
        bracket=(R_lo, R_hi),
        diagnostics={"intercept": intercept, "bins": int(radii.size),
                     "count_at_R_hi": int(counts[-1])},
    )


def default_counting_window(table: DisplacementTable) -> tuple[float, float]:
    """Radius window for counting regressions: up to the smallest
    displacement on the top layer (past it the ball is visibly incomplete),
    starting at half that."""
    hi = table.min_top()
    return hi / 2.0, hi


def subgroup_delta(
    group: MarkedGroup,
    hom: QuotientHom,
    L: int,
    window: tuple[float, float] | None = None,
    *,
    workers: int | None = None,
    bin_width: float = 0.5,
    table: DisplacementTable | None = None,
) -> DeltaEstimate:
    """Counting-regression estimate over the kernel-filtered orbit."""
    per = orbits.collect_kernel_displacements(group, hom, L, workers=workers)
    nontrivial = sum(a.size for a in per[1:])
    if nontrivial == 0:
        raise EmptyKernel(f"no nonidentity kernel member within length {L}")
    kernel_d = np.concatenate(per)
    if window is None:
        if table is None:
            table = DisplacementTable.build(group, L, workers=workers)
        window = default_counting_window(table)
    est = delta_via_counting(kernel_d, window[0], window[1], bin_width=bin_width)
    diag = dict(est.diagnostics)
    diag.update({"kernel_size": int(kernel_d.size), "cutoff_length": L})
    # qualitative divergence-type proxy: truncated kernel sums at the
    # estimated exponent over growing cutoffs (no finite test exists)
    partials = []
    for l in range(L + 1):
        chunk = np.concatenate(per[: l + 1])
        partials.append(logsumexp(-est.value * chunk))
    tail = [p for p in partials[-4:] if math.isfinite(p)]
    diag["divergence_proxy"] = {
        "log_partial_sums": partials[-4:],
        "growing": bool(len(tail) >= 2 and all(x < y for x, y in zip(tail, tail[1:]))),
    }
    return DeltaEstimate(est.value, est.method, L, est.residual, est.bracket, diag)


def stabilization_diagnostic(
    group: MarkedGroup,
    cutoffs: Sequence[int],
    *,
    table: DisplacementTable | None = None,
    workers: int | None = None,
    tol: float = 1e-7,
) -> list[float]:
    """|delta(L_i) - delta(L_{i+1})| for the pressure roots at the given
    cutoffs; reported as a stabilization trend, not a proof of convergence."""
    cutoffs = sorted(cutoffs)
    if table is None:
        table = DisplacementTable.build(group, max(cutoffs), workers=workers)
    vals = [
        delta_via_pressure(group, L, tol=tol, table=table).value for L in cutoffs
    ]
    return [abs(x - y) for x, y in zip(vals, vals[1:])]


def coset_series_constant(s: float, t_h: float) -> float:
    """Closed form of 2^{2s} * sum over n in Z of exp(-s (|n| - 2) t_h):
    4^s e^{2 s t_h} (1 + e^{-s t_h}) / (1 - e^{-s t_h})."""
    if s <= 0:
        raise ValueError("the coset series diverges for s <= 0")
    if t_h <= 0:
        raise ValueError("translation length must be positive")
    q = math.exp(-s * t_h)
    return 4.0**s * math.exp(2.0 * s * t_h) * (1.0 + q) / (1.0 - q)
