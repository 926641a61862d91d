"""Marked Schottky groups: symbols bound to isometries with a ping-pong
certificate.

Discreteness and freeness are certified, not assumed: the 2k isometric
circles of the generators and their inverses must be pairwise disjoint
(classical Schottky), which also forces the group to be purely hyperbolic.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .disc import Isometry, classify, displacement, translation_length
from .freegroup import (
    ReducedWord,
    concat,
    cyclic_reduce,
    invert,
    words_of_length,
)


class CertificateFailed(ValueError):
    """The isometric-circle disjointness certificate does not hold."""


@dataclass(frozen=True, slots=True)
class IsometricCircle:
    center: complex
    radius: float


def isometric_circle(m: Isometry) -> IsometricCircle:
    """Circle on which m acts as a euclidean isometry: |conj(b) z + conj(a)| = 1."""
    if abs(m.b) == 0:
        raise CertificateFailed("element fixes the origin; no isometric circle")
    return IsometricCircle(-m.a.conjugate() / m.b.conjugate(), 1.0 / abs(m.b))


@dataclass(frozen=True)
class MarkedGroup:
    """Rank-k Schottky group: generator isometries plus the certificate."""

    k: int
    generators: tuple[Isometry, ...]
    t: float | None = None  # translation parameter of the symmetric family
    circles: tuple[IsometricCircle, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.k < 2 or len(self.generators) != self.k:
            raise ValueError("need k >= 2 generator isometries")
        if not self.circles:
            object.__setattr__(self, "circles", certify(self.generators))

    # generator matrices indexed by letter code (gen j -> 2j, inverse -> 2j+1)
    def matrix_of_code(self, code: int) -> Isometry:
        g = self.generators[code >> 1]
        return g.inverse() if code & 1 else g

    def code_matrices(self) -> list[tuple[complex, complex]]:
        """Raw (a, b) pairs per letter code; the picklable worker payload."""
        out = []
        for j in range(self.k):
            g = self.generators[j]
            out.append((g.a, g.b))
            out.append((g.a.conjugate(), -g.b))
        return out

    def max_generator_displacement(self) -> float:
        return max(displacement(g) for g in self.generators)

    # -- config round trip ------------------------------------------------

    def to_config(self) -> dict:
        if self.t is not None:
            return {"kind": "schottky_symmetric", "k": self.k, "t": self.t}
        return {
            "kind": "matrices",
            "generators": [list(g.to_floats()) for g in self.generators],
        }

    @classmethod
    def from_config(cls, config: dict | str) -> "MarkedGroup":
        if isinstance(config, str):
            config = json.loads(config)
        kind = config.get("kind")
        if kind == "schottky_symmetric":
            return schottky_symmetric(int(config.get("k", 2)), float(config.get("t", 3.0)))
        if kind == "matrices":
            gens = tuple(Isometry.from_floats(row) for row in config["generators"])
            return cls(len(gens), gens)
        raise ValueError(f"unknown group config kind {kind!r}")


def certify(generators: Sequence[Isometry]) -> tuple[IsometricCircle, ...]:
    """Check hyperbolicity and pairwise disjointness of the 2k isometric
    circles; returns them or raises CertificateFailed."""
    for i, g in enumerate(generators):
        c = classify(g)
        if c.kind != "hyperbolic":
            raise CertificateFailed(f"generator {i} is {c.kind}, not hyperbolic")
    circles = []
    for g in generators:
        circles.append(isometric_circle(g))
        circles.append(isometric_circle(g.inverse()))
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            gap = abs(circles[i].center - circles[j].center)
            if gap <= circles[i].radius + circles[j].radius:
                raise CertificateFailed(
                    f"isometric circles {i} and {j} overlap "
                    f"(gap {gap:.6g} <= radii sum {circles[i].radius + circles[j].radius:.6g})"
                )
    return tuple(circles)


def schottky_symmetric(k: int, t: float) -> MarkedGroup:
    """Symmetric family: generator j translates by t along the axis through
    the origin at angle pi*j/k."""
    if k < 2:
        raise ValueError("rank must be >= 2")
    if t <= 0:
        raise ValueError("translation length must be positive")
    c, s = math.cosh(t / 2), math.sinh(t / 2)
    gens = tuple(
        Isometry(complex(c), s * cmath.exp(1j * math.pi * j / k)) for j in range(k)
    )
    return MarkedGroup(k, gens, t=t)


def evaluate(group: MarkedGroup, w: ReducedWord) -> Isometry:
    """Ordered product of generator matrices along the word."""
    if w.max_generator() >= group.k:
        raise ValueError("word uses a generator outside the group's rank")
    m = Isometry(1 + 0j, 0j)
    for c in w.codes:
        m = m * group.matrix_of_code(c)
    return m


@dataclass(frozen=True, slots=True)
class OrbitEntry:
    word: ReducedWord
    matrix: Isometry
    displacement: float


def orbit_enumerate(
    group: MarkedGroup, max_length: int, radius: float | None = None
) -> Iterator[OrbitEntry]:
    """Stream every reduced word of length <= max_length exactly once, in
    shortlex order, with matrices built incrementally along the tree.

    Entries with displacement > radius are filtered out post hoc when a
    radius is given.  For bulk aggregation prefer :mod:`explab.orbits`.
    """
    mats = group.code_matrices()
    ncodes = 2 * group.k
    ident = (1 + 0j, 0j)

    def emit(codes: tuple[int, ...], mat: tuple[complex, complex]) -> OrbitEntry | None:
        d = 2.0 * math.log(abs(mat[0]) + abs(mat[1]))
        if radius is not None and d > radius:
            return None
        return OrbitEntry(ReducedWord(codes), Isometry(*mat), d)

    first = emit((), ident)
    if first is not None:
        yield first

    # iterative deepening keeps shortlex order without storing a frontier
    for target in range(1, max_length + 1):
        stack: list[int] = []

        def rec(depth: int, mat: tuple[complex, complex]) -> Iterator[OrbitEntry]:
            forbidden = stack[-1] ^ 1 if stack else -1
            a, b = mat
            for c in range(ncodes):
                if c == forbidden:
                    continue
                ga, gb = mats[c]
                m2 = (a * ga + b * gb.conjugate(), a * gb + b * ga.conjugate())
                stack.append(c)
                if depth == target:
                    entry = emit(tuple(stack), m2)
                    if entry is not None:
                        yield entry
                else:
                    yield from rec(depth + 1, m2)
                stack.pop()

        yield from rec(1, ident)


def write_orbit_csv(path, entries: Iterable[OrbitEntry]) -> int:
    """Dump entries as CSV with columns word,displacement; returns row count."""
    n = 0
    with open(path, "w") as fh:
        fh.write("word,displacement\n")
        for e in entries:
            fh.write(f"{e.word},{e.displacement!r}\n")
            n += 1
    return n


# ----------------------------------------------------------------------
# Right cosets <h> g: canonical representatives and coset displacements.
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CosetWindow:
    """Precomputed data for windowed <h>-coset scans."""

    h: ReducedWord
    core_length: int
    t_h: float
    t_max: float

    def size(self, word_length: int) -> int:
        """Window bound N for a coset element of the given length.

        The first term is the displacement heuristic (audited); the second
        rigorously covers every coset element of word length <= the input,
        which makes the shortlex minimum exact and dedup consistent.
        """
        geometric = math.ceil(word_length * self.t_max / self.t_h) + 2
        combinatorial = (2 * word_length) // max(1, self.core_length) + 1
        return max(geometric, combinatorial)


def coset_window(group: MarkedGroup, h: ReducedWord) -> CosetWindow:
    if not h:
        raise ValueError("h must not be the identity")
    core, _ = cyclic_reduce(h)
    t_h = translation_length(evaluate(group, h))
    return CosetWindow(h, len(core), t_h, group.max_generator_displacement())


def coset_translates(h: ReducedWord, g: ReducedWord, window: int) -> list[ReducedWord]:
    """The words h^n g for |n| <= window."""
    out = [g]
    hw = h
    cur = g
    for _ in range(window):
        cur = concat(hw, cur)
        out.append(cur)
    cur = g
    hi = invert(h)
    for _ in range(window):
        cur = concat(hi, cur)
        out.append(cur)
    return out


def canonical_coset_rep(cw: CosetWindow, g: ReducedWord) -> ReducedWord:
    """Shortlex-least element of {h^n g} over the coset window."""
    best = g
    bkey = g.shortlex_key()
    for cand in coset_translates(cw.h, g, cw.size(len(g))):
        key = cand.shortlex_key()
        if key < bkey:
            best, bkey = cand, key
    return best


def coset_displacement(
    group: MarkedGroup, cw: CosetWindow, g: ReducedWord, extra: int = 0
) -> float:
    """min d(0, h^n g(0)) over the window (optionally widened by ``extra``)."""
    window = cw.size(len(g)) + extra
    return min(
        displacement(evaluate(group, w)) for w in coset_translates(cw.h, g, window)
    )


def coset_reps(
    group: MarkedGroup, h: ReducedWord, max_length: int
) -> list[ReducedWord]:
    """Canonical representative of every <h>-coset meeting the ball of the
    given word-length radius, in shortlex order."""
    cw = coset_window(group, h)
    seen: dict[tuple, ReducedWord] = {}
    for l in range(max_length + 1):
        for g in words_of_length(group.k, l):
            rep = canonical_coset_rep(cw, g)
            seen.setdefault(rep.codes, rep)
    reps = sorted(seen.values(), key=ReducedWord.shortlex_key)
    return reps


def coset_enumerate(
    group: MarkedGroup, h: ReducedWord, max_length: int
) -> Iterator[tuple[ReducedWord, float]]:
    """One canonical representative per <h>-coset intersecting the ball,
    paired with the windowed coset displacement."""
    cw = coset_window(group, h)
    for rep in coset_reps(group, h, max_length):
        yield rep, coset_displacement(group, cw, rep)
