"""Maps from the group into a normal subgroup: the conjugation map on
cosets with its fiber statistics, and the two explicit injections (free
case and malnormal case) with an exhaustive injectivity scan.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable

from .freegroup import (
    Letter,
    QuotientHom,
    ReducedWord,
    SubgroupGraph,
    concat,
    enumerate_words,
    invert,
    malnormal_violations,
    primitive_root,
)
from .schottky import MarkedGroup, coset_reps


class MalnormalityViolated(ValueError):
    """Bounded scan found pairs refuting malnormality of the subgroup."""

    def __init__(self, pairs):
        self.pairs = pairs
        shown = ", ".join(f"({g}, {h})" for g, h in pairs[:3])
        super().__init__(f"subgroup is not malnormal; witnesses: {shown}")


def conj_map(h: ReducedWord, g: ReducedWord) -> ReducedWord:
    """g^-1 h g, freely reduced; constant on <h>-cosets <h>g."""
    if not h:
        raise ValueError("h must not be the identity")
    return h.conjugated_by(g)


@dataclass(frozen=True)
class FiberReport:
    """Observed fiber sizes of the conjugation map over scanned cosets."""

    histogram: dict[int, int]
    max_fiber: int
    bound: int
    cosets_scanned: int
    max_length: int

    def __post_init__(self):
        total = sum(size * n for size, n in self.histogram.items())
        if total != self.cosets_scanned:
            raise ValueError("fiber histogram does not add up to the coset count")

    @property
    def within_bound(self) -> bool:
        return self.max_fiber <= self.bound

    def to_dict(self) -> dict:
        return {
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "max_fiber": self.max_fiber,
            "bound": self.bound,
            "cosets_scanned": self.cosets_scanned,
            "max_length": self.max_length,
        }


def fiber_statistics(
    group: MarkedGroup, h: ReducedWord, hom: QuotientHom, max_length: int
) -> FiberReport:
    """Group canonical coset representatives by their conjugation image.

    The declared bound is (exponent of h over its primitive root) + 1: for a
    torsion-free purely hyperbolic group the stabilizer of the axis is the
    cyclic group on the primitive root, of index = exponent over <h>.
    """
    if not h:
        raise ValueError("h must not be the identity")
    if not hom.is_kernel_member(h):
        raise ValueError("h must lie in the kernel of the homomorphism")
    _, exponent = primitive_root(h)
    bound = exponent + 1
    fibers: Counter = Counter()
    reps = coset_reps(group, h, max_length)
    for rep in reps:
        fibers[conj_map(h, rep).codes] += 1
    histogram = Counter(fibers.values())
    return FiberReport(
        histogram=dict(histogram),
        max_fiber=max(fibers.values()),
        bound=bound,
        cosets_scanned=len(reps),
        max_length=max_length,
    )


# ----------------------------------------------------------------------
# Free case: g -> g alpha h0 alpha^-1 g^-1 with alpha dodging cancellation.
# ----------------------------------------------------------------------


def free_case_injection(
    g: ReducedWord, h0: ReducedWord, k: int = 2
) -> tuple[Letter, ReducedWord]:
    """Pick alpha among the first two generators' letters, excluding the
    inverse of g's last letter, the inverse of h0's first letter and h0's
    last letter, then return (alpha, g alpha h0 alpha^-1 g^-1).

    The exclusions kill every cancellation, so the image has length exactly
    2|g| + |h0| + 2; that is the injectivity mechanism.
    """
    if k < 2:
        raise ValueError("the free-case map needs rank at least 2")
    if not h0:
        raise ValueError("h0 must not be the identity")
    excluded = {h0.codes[0] ^ 1, h0.codes[-1]}
    if g.codes:
        excluded.add(g.codes[-1] ^ 1)
    alpha_code = next(c for c in range(4) if c not in excluded)
    alpha = ReducedWord((alpha_code,))
    conj = concat(concat(alpha, h0), invert(alpha))
    image = concat(concat(g, conj), invert(g))
    return Letter.from_code(alpha_code), image


def finite_image_set(h0: ReducedWord) -> list[ReducedWord]:
    """The candidate conjugates alpha h0 alpha^-1 over the four alpha."""
    out = []
    for c in range(4):
        alpha = ReducedWord((c,))
        out.append(concat(concat(alpha, h0), invert(alpha)))
    return out


# ----------------------------------------------------------------------
# Malnormal case: decompose g over the coset tables of H = <h1, h2>.
# ----------------------------------------------------------------------


def malnormal_case_injection(
    g: ReducedWord, graph: SubgroupGraph
) -> tuple[ReducedWord, ReducedWord]:
    """tau(g) is h2 when the H-part of g ends with a power of h1, else h1
    (and h1 when the H-part is trivial); returns (tau, g tau g^-1).

    g decomposes as (canonical left-coset rep) * h with h in H rewritten
    over the subgroup generators via the folded graph.
    """
    if len(graph.generators) != 2:
        raise ValueError("the malnormal-case map needs exactly two generators")
    rep = graph.coset_canonical_rep(g)
    h_part = concat(invert(rep), g)
    letters = graph.rewrite_in_generators(h_part)
    if letters:
        last_gen = letters[-1][0]
        tau = graph.generators[1] if last_gen == 0 else graph.generators[0]
    else:
        tau = graph.generators[0]
    image = concat(concat(g, tau), invert(g))
    return tau, image


# ----------------------------------------------------------------------
# Exhaustive scans.
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class InjectionReport:
    scanned: int
    collisions: list[tuple[str, str]]
    max_image_length: int
    kernel_failures: list[str]
    max_length: int
    case: str = "free"
    length_formula_violations: int = 0

    @property
    def injective_on_scan(self) -> bool:
        return not self.collisions

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "scanned": self.scanned,
            "max_length": self.max_length,
            "collisions": [list(pair) for pair in self.collisions],
            "kernel_failures": list(self.kernel_failures),
            "max_image_length": self.max_image_length,
            "length_formula_violations": self.length_formula_violations,
        }


def injectivity_scan(
    map_fn: Callable[[ReducedWord], ReducedWord],
    max_length: int,
    hom: QuotientHom | None = None,
    *,
    k: int = 2,
    case: str = "custom",
    expected_length: Callable[[int], int] | None = None,
) -> InjectionReport:
    """Apply the map to every reduced word of length <= max_length and
    record collisions and kernel-membership failures of the images."""
    images: dict[tuple[int, ...], ReducedWord] = {}
    collisions: list[tuple[str, str]] = []
    kernel_failures: list[str] = []
    scanned = 0
    max_image_len = 0
    formula_violations = 0
    for g in enumerate_words(k, max_length):
        image = map_fn(g)
        scanned += 1
        max_image_len = max(max_image_len, len(image))
        if expected_length is not None and len(image) != expected_length(len(g)):
            formula_violations += 1
        prev = images.get(image.codes)
        if prev is not None:
            collisions.append((str(prev), str(g)))
        else:
            images[image.codes] = g
        if hom is not None and not hom.is_kernel_member(image):
            kernel_failures.append(str(g))
    return InjectionReport(
        scanned=scanned,
        collisions=collisions,
        max_image_length=max_image_len,
        kernel_failures=kernel_failures,
        max_length=max_length,
        case=case,
        length_formula_violations=formula_violations,
    )


def free_injection_scan(
    h0: ReducedWord, max_length: int, hom: QuotientHom | None = None, *, k: int = 2
) -> InjectionReport:
    """Scan the free-case injection; also verifies the exact image-length
    formula 2|g| + |h0| + 2 on every input."""
    if hom is not None and not hom.is_kernel_member(h0):
        raise ValueError("h0 must lie in the kernel of the homomorphism")
    base = len(h0) + 2
    return injectivity_scan(
        lambda g: free_case_injection(g, h0, k)[1],
        max_length,
        hom,
        k=k,
        case="free",
        expected_length=lambda m: 2 * m + base,
    )


def malnormal_injection_scan(
    graph: SubgroupGraph,
    max_length: int,
    hom: QuotientHom | None = None,
    *,
    k: int = 2,
    violation_bound: int = 4,
) -> InjectionReport:
    """Scan the malnormal-case injection, first refusing subgroups whose
    malnormality is refuted by the bounded violation scan."""
    pairs = malnormal_violations(graph, violation_bound, k)
    if pairs:
        raise MalnormalityViolated(pairs)
    return injectivity_scan(
        lambda g: malnormal_case_injection(g, graph)[1],
        max_length,
        hom,
        k=k,
        case="malnormal",
    )
