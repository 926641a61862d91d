"""Auditable numeric checks of the proof inequalities.

Every check reports its worst signed slack (>= -tolerance passes) together
with the witness that attains it, and is bit-identical across reruns for a
fixed configuration.  Truncation is engineered per check so a pass never
rests on terms missing from the favorable side; the one deliberately
partial check (the truncated coset sum) says so in its notes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import orbits
from .disc import boost, conjugate_to_standard, dist, displacement, project_to_geodesic, Geodesic
from .freegroup import QuotientHom, ReducedWord, primitive_root
from .injections import conj_map
from .schottky import MarkedGroup, coset_reps, coset_window, evaluate
from .series import (
    DisplacementTable,
    delta_via_pressure,
    coset_series_constant,
    logsumexp,
    subgroup_delta,
)

TOLERANCE = 1e-9


@dataclass(frozen=True)
class CheckReport:
    name: str
    cases: int
    worst_slack: float
    params: dict
    passed: bool
    tolerance: float = TOLERANCE
    witness: str | None = None
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cases": self.cases,
            "worst_slack": self.worst_slack,
            "params": self.params,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "witness": self.witness,
            "notes": self.notes,
        }


def _report(name, cases, worst, params, tolerance, witness=None, notes=""):
    return CheckReport(
        name=name,
        cases=cases,
        worst_slack=worst,
        params=params,
        passed=bool(worst >= -tolerance),
        tolerance=tolerance,
        witness=witness,
        notes=notes,
    )


def check_triangle_conjugation(
    group: MarkedGroup,
    h: ReducedWord,
    L: int,
    *,
    workers: int | None = None,
    tolerance: float = TOLERANCE,
) -> CheckReport:
    """d(0, g^-1 h g(0)) <= 2 d(0, g(0)) + d(0, h(0)) for every |g| <= L."""
    if not h:
        raise ValueError("h must not be the identity")
    worst, witness, cases = orbits.triangle_audit(group, h, L, workers=workers)
    return _report(
        "triangle_conjugation",
        cases,
        worst,
        {"h": str(h), "L": L, "k": group.k},
        tolerance,
        witness=str(witness),
    )


def check_projection_cosine(
    samples: int = 10_000,
    *,
    seed: int = 0,
    max_distance: float = 15.0,
    tolerance: float = TOLERANCE,
) -> CheckReport:
    """Right-triangle defect at the origin: with P the projection of x onto
    a geodesic through 0, d(0,x) + 2 log 2 >= d(0,P) + d(P,x)."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    witness = None
    for _ in range(samples):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        endpoint = complex(math.cos(theta), math.sin(theta))
        geodesic = Geodesic(endpoint, -endpoint)
        radius = math.tanh(rng.uniform(0.0, max_distance) / 2.0)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        x = radius * complex(math.cos(phi), math.sin(phi))
        foot, _ = project_to_geodesic(x, geodesic)
        slack = dist(0j, x) + 2.0 * math.log(2.0) - dist(0j, foot) - dist(foot, x)
        if slack < worst:
            worst = slack
            witness = f"x={x!r} theta={theta!r}"
    return _report(
        "projection_cosine",
        samples,
        worst,
        {"samples": samples, "seed": seed, "max_distance": max_distance},
        tolerance,
        witness=witness,
    )


def _conjugated_displacement(frame, frame_inv, m) -> float:
    return displacement(frame * m * frame_inv)


def check_coset_series(
    group: MarkedGroup,
    h: ReducedWord,
    s: float,
    L: int,
    n_window: int = 20,
    *,
    tolerance: float = TOLERANCE,
) -> CheckReport:
    """Per-coset relative series bound: with the origin moved onto the axis
    of h, sum over |n| <= n_window of exp(-s d(0, h^n g0(0))) must stay
    below C(s, t_h) * exp(-s * coset displacement).

    The truncated left side is a lower bound of the full coset sum, so a
    failure is genuine while a pass is necessary-but-partial evidence; the
    dropped tail is below 2 e^{-s W t_h} / (1 - e^{-s t_h}).
    """
    if s <= 0:
        raise ValueError("s must be positive")
    hm = evaluate(group, h)
    frame = conjugate_to_standard(hm)
    frame_inv = frame.inverse()
    cw = coset_window(group, h)
    t_h = cw.t_h
    constant = coset_series_constant(s, t_h)
    # widen the displacement window: conjugation shifts displacements by at
    # most 2 d(0, frame(0)), which can move the minimizing translate
    cushion = math.ceil(4.0 * displacement(frame) / t_h) + 2

    reps = coset_reps(group, h, L)
    worst = math.inf
    witness = None
    for rep in reps:
        base = frame * evaluate(group, rep) * frame_inv
        w_disp = cw.size(len(rep)) + cushion
        width = max(n_window, w_disp)
        disps = np.empty(2 * width + 1)
        for i, n in enumerate(range(-width, width + 1)):
            disps[i] = displacement(boost(n * t_h) * base)
        center = width
        lhs_terms = disps[center - n_window : center + n_window + 1]
        lhs = float(np.exp(-s * lhs_terms).sum())
        coset_disp = float(disps[center - w_disp : center + w_disp + 1].min())
        slack = constant * math.exp(-s * coset_disp) - lhs
        if slack < worst:
            worst = slack
            witness = str(rep)
    return _report(
        "coset_series",
        len(reps),
        worst,
        {
            "h": str(h),
            "s": s,
            "L": L,
            "n_window": n_window,
            "t_h": t_h,
            "constant": constant,
        },
        tolerance,
        witness=witness,
        notes=(
            "origin conjugated onto the axis of h; truncated LHS is a lower "
            "bound of the coset sum (tail <= 2 e^{-s W t_h}/(1-e^{-s t_h}))"
        ),
    )


def check_main_chain(
    group: MarkedGroup,
    hom: QuotientHom,
    h: ReducedWord,
    s: float,
    L: int,
    *,
    workers: int | None = None,
    tolerance: float = TOLERANCE,
) -> CheckReport:
    """Truncated main inequality: the ball sum of exp(-s d) is bounded by
    k C(s) e^{s d(0,h(0))/2} times the half-exponent sum over the images of
    the scanned cosets under the conjugation map.

    Runs with the origin on the axis of h.  The image set provably covers
    every scanned coset's image (word length <= 2L + |h|, displacement
    <= 2 D_L + d(0,h(0)) by the triangle bound), so the comparison is sound;
    using only the true images keeps the right side as small as possible.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if not hom.is_kernel_member(h):
        raise ValueError("h must lie in the kernel of the homomorphism")
    hm = evaluate(group, h)
    frame = conjugate_to_standard(hm)
    frame_inv = frame.inverse()
    cw = coset_window(group, h)
    t_h = cw.t_h
    _, exponent = primitive_root(h)
    k_bound = exponent + 1
    constant = coset_series_constant(s, t_h)

    layers = orbits.collect_displacements(group, L, frame=frame, workers=workers)
    lhs = float(math.exp(logsumexp(np.concatenate([-s * a for a in layers]))))
    d_max = max(float(a.max()) for a in layers)

    reps = coset_reps(group, h, L)
    images = {conj_map(h, rep).codes for rep in reps}
    image_disps = np.empty(len(images))
    for i, codes in enumerate(sorted(images)):
        m = frame * evaluate(group, ReducedWord(codes)) * frame_inv
        image_disps[i] = displacement(m)
    rhs_sum = float(np.exp(-0.5 * s * image_disps).sum())
    rhs = k_bound * constant * math.exp(0.5 * s * t_h) * rhs_sum
    worst = rhs - lhs
    return _report(
        "main_chain",
        len(reps),
        worst,
        {
            "h": str(h),
            "s": s,
            "L": L,
            "k_bound": k_bound,
            "t_h": t_h,
            "constant": constant,
            "lhs": lhs,
            "rhs": rhs,
            "distinct_images": len(images),
            "image_displacement_bound": 2.0 * d_max + t_h,
            "image_length_bound": 2 * L + len(h),
        },
        tolerance,
        witness=None,
        notes="origin conjugated onto the axis of h; RHS over distinct scanned images",
    )


def check_theorem_bound(
    group: MarkedGroup,
    hom: QuotientHom,
    L: int,
    *,
    workers: int | None = None,
    margin: float = 0.02,
    tolerance: float = TOLERANCE,
) -> CheckReport:
    """Desk-scale main theorem: the normal subgroup's estimated exponent
    must be at least half the group's, within the estimator margin."""
    table = DisplacementTable.build(group, L, workers=workers)
    delta = delta_via_pressure(group, L, table=table)
    delta_hat = subgroup_delta(group, hom, L, workers=workers, table=table)
    worst = delta_hat.value - (0.5 * delta.value - margin)
    return _report(
        "theorem_bound",
        2,
        worst,
        {
            "L": L,
            "delta": delta.value,
            "delta_method": delta.method,
            "delta_hat": delta_hat.value,
            "delta_hat_method": delta_hat.method,
            "margin": margin,
            "kernel_size": delta_hat.diagnostics.get("kernel_size"),
        },
        tolerance,
        witness=None,
        notes="delta via pressure root, subgroup delta via counting regression",
    )


LEMMA_CHECKS = ("triangle_conjugation", "projection_cosine", "coset_series", "main_chain")
ALL_CHECKS = LEMMA_CHECKS + ("theorem_bound",)


def run_checks(
    group: MarkedGroup,
    hom: QuotientHom,
    h: ReducedWord,
    *,
    checks=LEMMA_CHECKS,
    L: int = 10,
    s: float = 0.5,
    n_window: int = 20,
    samples: int = 10_000,
    seed: int = 0,
    coset_L: int | None = None,
    theorem_L: int | None = None,
    workers: int | None = None,
    tolerance: float = TOLERANCE,
) -> dict[str, CheckReport]:
    """Run the named checks and return the manifest dict (insertion order
    follows ALL_CHECKS)."""
    out: dict[str, CheckReport] = {}
    for name in ALL_CHECKS:
        if name not in checks:
            continue
        if name == "triangle_conjugation":
            out[name] = check_triangle_conjugation(
                group, h, L, workers=workers, tolerance=tolerance
            )
        elif name == "projection_cosine":
            out[name] = check_projection_cosine(
                samples, seed=seed, tolerance=tolerance
            )
        elif name == "coset_series":
            out[name] = check_coset_series(
                group, h, s, coset_L if coset_L is not None else L,
                n_window, tolerance=tolerance,
            )
        elif name == "main_chain":
            out[name] = check_main_chain(
                group, hom, h, s, L, workers=workers, tolerance=tolerance
            )
        elif name == "theorem_bound":
            out[name] = check_theorem_bound(
                group, hom, theorem_L if theorem_L is not None else max(L, 12),
                workers=workers, tolerance=tolerance,
            )
    return out
