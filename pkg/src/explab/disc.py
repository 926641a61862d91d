"""Numeric hyperbolic geometry in the Poincare disc.

Orientation-preserving isometries are SU(1,1) matrices [[a, b], [conj b,
conj a]] acting by z -> (a z + b)/(conj(b) z + conj(a)).  Displacements are
evaluated in log space, 2*log(|a|+|b|), which stays accurate long after the
orbit point itself has been squashed into the boundary.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

TOLERANCE = 1e-9

# renormalizing by the determinant only helps while |a|^2 - |b|^2 carries
# full precision; past this scale the subtraction cancels and the "correction"
# would inject ~|a|^2 * eps of noise, far above the true ~n*eps drift of long
# products (which is harmless: the action is projective and displacements
# shift by ~log(det)/2)
_RENORM_LIMIT = 32.0


class NonHyperbolicError(ValueError):
    """Operation requires a hyperbolic isometry."""


@dataclass(frozen=True, slots=True)
class Isometry:
    """SU(1,1) element stored by its top row (a, b)."""

    a: complex
    b: complex

    def det(self) -> float:
        return abs(self.a) ** 2 - abs(self.b) ** 2

    def __mul__(self, other: "Isometry") -> "Isometry":
        a1, b1 = self.a, self.b
        a2, b2 = other.a, other.b
        a = a1 * a2 + b1 * b2.conjugate()
        b = a1 * b2 + b1 * a2.conjugate()
        if abs(a) < _RENORM_LIMIT:
            scale = 1.0 / math.sqrt(abs(a) ** 2 - abs(b) ** 2)
            a *= scale
            b *= scale
        return Isometry(a, b)

    def inverse(self) -> "Isometry":
        return Isometry(self.a.conjugate(), -self.b)

    def trace(self) -> float:
        return 2.0 * self.a.real

    def is_identity(self, tol: float = TOLERANCE) -> bool:
        # +I and -I act identically (the action is projective)
        return (
            abs(self.b) <= tol
            and abs(abs(self.a.real) - 1.0) <= tol
            and abs(self.a.imag) <= tol
        )

    # -- serialization: four floats, 17 significant digits ---------------

    def to_floats(self) -> tuple[float, float, float, float]:
        return (self.a.real, self.a.imag, self.b.real, self.b.imag)

    def serialize(self) -> str:
        return " ".join(f"{x:.17g}" for x in self.to_floats())

    @classmethod
    def from_floats(cls, vals) -> "Isometry":
        re_a, im_a, re_b, im_b = (float(v) for v in vals)
        return cls(complex(re_a, im_a), complex(re_b, im_b))

    @classmethod
    def deserialize(cls, text: str) -> "Isometry":
        return cls.from_floats(text.split())


IDENTITY = Isometry(1 + 0j, 0j)


def identity() -> Isometry:
    return IDENTITY


def boost(t: float) -> Isometry:
    """Translation by t along the real axis, attracting +1."""
    return Isometry(complex(math.cosh(t / 2)), complex(math.sinh(t / 2)))


def rotation(theta: float) -> Isometry:
    """Rotation by theta about the origin."""
    return Isometry(cmath.exp(-0.5j * theta), 0j)


def apply(m: Isometry, z: complex) -> complex:
    """Mobius action of m on a point of the open disc."""
    num = m.a * z + m.b
    den = m.b.conjugate() * z + m.a.conjugate()
    if den == 0 or not (
        math.isfinite(num.real)
        and math.isfinite(num.imag)
        and math.isfinite(den.real)
        and math.isfinite(den.imag)
    ):
        raise OverflowError("ill-conditioned Mobius evaluation")
    return num / den


def dist(z1: complex, z2: complex) -> float:
    """Hyperbolic distance 2*artanh |(z1-z2)/(1-conj(z1) z2)|."""
    r = abs((z1 - z2) / (1.0 - z1.conjugate() * z2))
    if r >= 1.0:
        raise ValueError("points must lie in the open disc")
    return 2.0 * math.atanh(r)


def displacement(m: Isometry) -> float:
    """d(0, m(0)) computed stably as 2*log(|a|+|b|)."""
    return 2.0 * math.log(abs(m.a) + abs(m.b))


@dataclass(frozen=True, slots=True)
class Classification:
    kind: str  # identity | elliptic | parabolic | hyperbolic
    translation_length: float | None = None
    ambiguous: bool = False


def classify(m: Isometry, tol: float = TOLERANCE) -> Classification:
    """Classify by |trace| against 2; hyperbolic gets translation length
    2*arccosh|Re a|.  Traces within tol of 2 are flagged ambiguous."""
    if m.is_identity(tol):
        return Classification("identity", 0.0)
    t = abs(m.trace())
    if t > 2.0 + tol:
        return Classification("hyperbolic", 2.0 * math.acosh(t / 2.0))
    if t < 2.0 - tol:
        return Classification("elliptic")
    return Classification("parabolic", ambiguous=True)


def translation_length(m: Isometry) -> float:
    c = classify(m)
    if c.kind != "hyperbolic":
        raise NonHyperbolicError(f"element is {c.kind}, not hyperbolic")
    return c.translation_length


@dataclass(frozen=True, slots=True)
class Geodesic:
    """Oriented geodesic given by distinct boundary endpoints p -> q."""

    p: complex
    q: complex

    def __post_init__(self):
        for z in (self.p, self.q):
            if abs(abs(z) - 1.0) > 1e-12:
                raise ValueError("geodesic endpoints must be unit complex numbers")
        if abs(self.p - self.q) <= 1e-12:
            raise ValueError("geodesic endpoints must be distinct")


def axis(m: Isometry) -> Geodesic:
    """Invariant geodesic of a hyperbolic element, attracting endpoint first."""
    c = classify(m)
    if c.kind != "hyperbolic":
        raise NonHyperbolicError(f"element is {c.kind}, not hyperbolic")
    a, b = m.a, m.b
    # fixed points solve conj(b) z^2 + (conj(a) - a) z - b = 0
    r = math.sqrt(a.real * a.real - 1.0)
    sign = 1.0 if a.real > 0 else -1.0
    attract = (1j * a.imag + sign * r) / b.conjugate()
    repel = (1j * a.imag - sign * r) / b.conjugate()
    attract /= abs(attract)
    repel /= abs(repel)
    return Geodesic(attract, repel)


def _disc_to_halfplane(z: complex) -> complex:
    return 1j * (1 + z) / (1 - z)


def _halfplane_to_disc(w: complex) -> complex:
    return (w - 1j) / (w + 1j)


def _normalizer(g: Geodesic) -> Isometry:
    """Isometry sending g to the real diameter with g.p -> -1, g.q -> +1
    (so the induced coordinate increases from p toward q)."""
    p, q = g.p, g.q
    if abs(p + q) <= 1e-12:
        z0 = 0j  # already a diameter
    else:
        # euclidean center c of the orthocircle through p, q solves
        # Re(c conj(p)) = 1 = Re(c conj(q))
        det = p.real * q.imag - p.imag * q.real
        if abs(det) <= 1e-15:
            raise ValueError("degenerate geodesic endpoints")
        cx = (q.imag - p.imag) / det
        cy = (p.real - q.real) / det
        c = complex(cx, cy)
        radius = math.sqrt(abs(c) ** 2 - 1.0)
        z0 = c * (1.0 - radius / abs(c))  # closest point of g to the origin
    a0 = 1.0 / math.sqrt(1.0 - abs(z0) ** 2)
    trans = Isometry(complex(a0), -a0 * z0)
    psi = cmath.phase(apply(trans, q))
    return rotation(psi) * trans


def project_to_geodesic(z: complex, g: Geodesic) -> tuple[complex, float]:
    """Orthogonal projection of z onto g.

    Returns the foot and the signed arclength coordinate of the foot along
    g, measured from the point of g nearest the origin, increasing p -> q.
    """
    if abs(z) >= 1.0:
        raise ValueError("point must lie in the open disc")
    m = _normalizer(g)
    w = apply(m, z)
    # on the real diameter the projection comes from the half-plane picture:
    # u in H projects to i|u| on the imaginary axis
    u = _disc_to_halfplane(w)
    foot_real = (abs(u) - 1.0) / (abs(u) + 1.0)
    foot = apply(m.inverse(), complex(foot_real))
    # m sends the point of g nearest the origin to 0, so the normalized
    # coordinate is already measured from there
    coord = 2.0 * math.atanh(foot_real)
    return foot, coord


def conjugate_to_standard(h: Isometry) -> Isometry:
    """Conjugator m with m h m^-1 a pure boost along the real axis.

    Realizes the usual normalization that puts the origin on the axis of a
    hyperbolic element (attracting endpoint sent to +1).
    """
    g = axis(h)
    # axis oriented repelling -> attracting so the boost translates toward +1
    return _normalizer(Geodesic(g.q, g.p))
