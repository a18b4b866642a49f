"""Rational angles and their 4-adic Small/Big classification.

An angle is encoded by its tangent.  For ``tan(theta) = p/q`` in lowest
terms the residues ``p*`` and ``q*`` (the odd-after-powers-of-4 part mod 4)
decide how the four-corner Cantor set projects in that direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

from .errors import DomainError

SMALL = "small"
BIG = "big"
IRRATIONAL = "irrational"


class Slope(NamedTuple):
    """Direction with rational tangent ``p/q``; ``q = 0`` means vertical.

    The direction vector is ``(q, p)``; sign is normalised so that ``q > 0``,
    or ``p = 1`` when vertical.
    """

    p: int
    q: int

    @classmethod
    def of(cls, p: int, q: int) -> "Slope":
        if p == 0 and q == 0:
            raise DomainError("slope 0/0 has no direction")
        g = math.gcd(p, q)
        p, q = p // g, q // g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        return cls(p, q)

    @property
    def theta(self) -> float:
        """Angle in [0, pi) whose tangent is p/q."""
        return math.atan2(self.p, self.q) % math.pi

    @property
    def norm(self) -> float:
        return math.hypot(self.p, self.q)

    def perpendicular(self) -> "Slope":
        # (q, p) rotated by +90 degrees is (-p, q)
        return Slope.of(q=-self.p, p=self.q)

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


def parse_slope(text: str) -> Slope:
    """Parse ``"p/q"`` (or an integer ``"p"``) into a reduced Slope."""
    text = text.strip()
    if "/" in text:
        p, q = text.split("/", 1)
        return Slope.of(int(p), int(q))
    return Slope.of(int(text), 1)


def star(m: int) -> int:
    """Residue mod 4 of ``m`` after removing every factor of 4.

    >>> star(6), star(112), star(4)
    (2, 3, 1)
    """
    m = int(m)
    if m < 1:
        raise DomainError(f"star(m) is defined for m >= 1, got {m}")
    while m % 4 == 0:
        m //= 4
    return m % 4


@dataclass(frozen=True)
class AngleClass:
    kind: str
    p: Optional[int] = None
    q: Optional[int] = None
    p_star: Optional[int] = None
    q_star: Optional[int] = None


def classify_angle(p: int, q: int) -> AngleClass:
    """Small when both stars are odd, Big otherwise.

    Inputs are reduced to coprime form first.  Signs are dropped: the
    classification is taken on ``|p|/|q|``.
    """
    p, q = abs(int(p)), abs(int(q))
    if p < 1 or q < 1:
        raise DomainError("classify_angle needs p, q >= 1")
    g = math.gcd(p, q)
    p, q = p // g, q // g
    ps, qs = star(p), star(q)
    kind = SMALL if (ps % 2 == 1 and qs % 2 == 1) else BIG
    return AngleClass(kind, p, q, ps, qs)


@dataclass(frozen=True)
class SumsetPrediction:
    """Expected behaviour of C(1/4) + N_theta for one angle class."""

    angle: AngleClass
    measure_zero: Optional[bool]
    dimension: str
    interior: Optional[bool]

    @property
    def summary(self) -> str:
        if self.angle.kind == IRRATIONAL:
            return "measure-zero,dim=2"
        if self.angle.kind == SMALL:
            return "dim<2"
        return "interior-nonempty"


def predict_sumset(theta_spec: Union[Slope, tuple, float]) -> SumsetPrediction:
    """Prediction for C(1/4) + N_theta.

    ``theta_spec`` is a :class:`Slope` or ``(p, q)`` pair for a rational
    tangent, or a float tangent value treated as irrational.
    """
    if isinstance(theta_spec, (Slope, tuple)):
        p, q = theta_spec
        if p == 0 or q == 0:
            # axis directions project C(1/4) onto C_{1/4} itself (dimension 1/2)
            cls = AngleClass(SMALL, abs(p), abs(q), None, None)
        else:
            cls = classify_angle(p, q)
        if cls.kind == SMALL:
            return SumsetPrediction(cls, None, "<2", None)
        return SumsetPrediction(cls, False, "2", True)
    return SumsetPrediction(AngleClass(IRRATIONAL), True, "2", False)
