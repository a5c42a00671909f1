"""Exact single-edge solutions of -u'' + kappa2 u = 0 and their flux blocks.

On an interval of length ``l`` with potential ``kappa2 = k^2 >= 0`` the
solutions form a two dimensional space.  The map from endpoint values
``(uA, uB)`` to outward endpoint derivatives (pointing away from the edge
interior) is the symmetric positive semidefinite block

    H = k * [[coth(k l), -csch(k l)], [-csch(k l), coth(k l)]]

with the k -> 0 limit ``(1/l) [[1, -1], [-1, 1]]``.  All hyperbolics are
evaluated through ``exp``/``expm1`` of nonpositive arguments, so deep-tree
products ``k*l`` of any size neither overflow nor cancel.  Branch thresholds
live in the two module constants below; the branches agree to better than
1e-12 at both crossovers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "EdgeDNBlock",
    "EdgeSolution",
    "edge_dn_block",
    "solve_edge",
    "edge_energy",
]

SERIES_PRODUCT = 1e-6  # below this k*l: Taylor branch around the k=0 block
ASYMPTOTIC_PRODUCT = 350.0  # above this k*l: coth -> 1, csch -> 2 exp(-k l)


def _coth_csch(z: float) -> tuple[float, float]:
    # coth z = (2 + E) / (-E), csch z = 2 exp(-z) / (-E), E = expm1(-2z) < 0.
    em = math.expm1(-2.0 * z)
    return -(2.0 + em) / em, -2.0 * math.exp(-z) / em


@dataclass(frozen=True)
class EdgeDNBlock:
    """Symmetric 2x2 block mapping endpoint values to outward derivatives."""

    h_aa: float
    h_ab: float
    h_ba: float
    h_bb: float

    def as_rows(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.h_aa, self.h_ab), (self.h_ba, self.h_bb))


def edge_dn_block(length: float, kappa2: float) -> EdgeDNBlock:
    """Closed-form flux block of one edge.

    Three branches on ``z = sqrt(kappa2) * length``: a Taylor expansion for
    tiny ``z`` (continuous with the zero-potential block), the hyperbolic
    formula in the middle, and the flat asymptote for huge ``z``.
    """
    if not (length > 0.0 and math.isfinite(length)):
        raise DomainError(f"edge length must be positive, got {length}")
    if not (kappa2 >= 0.0 and math.isfinite(kappa2)):
        raise DomainError(f"potential must be nonnegative, got {kappa2}")

    kappa = math.sqrt(kappa2)
    z = kappa * length
    if z < SERIES_PRODUCT:
        z2 = z * z
        diag = (1.0 + z2 / 3.0 - z2 * z2 / 45.0) / length
        off = -(1.0 - z2 / 6.0 + 7.0 * z2 * z2 / 360.0) / length
    elif z > ASYMPTOTIC_PRODUCT:
        diag = kappa
        off = -2.0 * kappa * math.exp(-z)
    else:
        coth, csch = _coth_csch(z)
        diag = kappa * coth
        off = -kappa * csch
    return EdgeDNBlock(h_aa=diag, h_ab=off, h_ba=off, h_bb=diag)


@dataclass(frozen=True)
class EdgeSolution:
    """One edge solution, pinned by its endpoint values.

    ``(c0, c1)`` are the coefficients in the basis
    ``{cosh(k x), sinh(k x)/k}`` (``{1, x}`` at ``k = 0``), i.e. the value
    and derivative at endpoint a.  Evaluation uses the endpoint
    interpolation form, which is stable for any ``k * length``.
    """

    length: float
    kappa2: float
    value_a: float
    value_b: float
    c0: float
    c1: float

    def _check_x(self, x: float) -> None:
        if not (0.0 <= x <= self.length):
            raise DomainError(f"coordinate {x} outside [0, {self.length}]")

    def __call__(self, x: float) -> float:
        self._check_x(x)
        kappa = math.sqrt(self.kappa2)
        if kappa == 0.0:
            return self.value_a + (self.value_b - self.value_a) * x / self.length
        denom = math.expm1(-2.0 * kappa * self.length)
        w_a = math.exp(-kappa * x) * math.expm1(-2.0 * kappa * (self.length - x))
        w_b = math.exp(-kappa * (self.length - x)) * math.expm1(-2.0 * kappa * x)
        return (self.value_a * w_a + self.value_b * w_b) / denom

    def derivative(self, x: float) -> float:
        """Derivative in the a-to-b coordinate."""
        self._check_x(x)
        kappa = math.sqrt(self.kappa2)
        if kappa == 0.0:
            return (self.value_b - self.value_a) / self.length
        denom = -math.expm1(-2.0 * kappa * self.length)
        v_a = (
            kappa
            * math.exp(-kappa * x)
            * (1.0 + math.exp(-2.0 * kappa * (self.length - x)))
            / denom
        )
        v_b = (
            kappa
            * math.exp(-kappa * (self.length - x))
            * (1.0 + math.exp(-2.0 * kappa * x))
            / denom
        )
        return -self.value_a * v_a + self.value_b * v_b

    def outward_a(self) -> float:
        """Outward derivative at endpoint a (away from the edge interior)."""
        block = edge_dn_block(self.length, self.kappa2)
        return block.h_aa * self.value_a + block.h_ab * self.value_b

    def outward_b(self) -> float:
        block = edge_dn_block(self.length, self.kappa2)
        return block.h_ba * self.value_a + block.h_bb * self.value_b

    def interior_extremum(self) -> tuple[float, float] | None:
        """Location and value of the single interior critical point, if any.

        Zero-potential solutions are linear and have none; hyperbolic
        solutions have at most one, at ``tanh(k x) = -c1/(k c0)``.
        """
        kappa = math.sqrt(self.kappa2)
        if kappa == 0.0 or self.c0 == 0.0:
            return None
        t = -self.c1 / (kappa * self.c0)
        if not (0.0 < t < math.tanh(kappa * self.length)):
            return None
        x_star = math.atanh(t) / kappa
        w = kappa * x_star
        value = 2.0 * self.c0 * math.exp(-w) / (1.0 + math.exp(-2.0 * w))
        return x_star, value


def solve_edge(
    length: float, kappa2: float, value_a: float, value_b: float
) -> EdgeSolution:
    """The unique edge solution with the given endpoint values."""
    block = edge_dn_block(length, kappa2)
    # c1 = u'(0) is minus the outward derivative at a.
    c1 = -(block.h_aa * value_a + block.h_ab * value_b)
    return EdgeSolution(
        length=length,
        kappa2=kappa2,
        value_a=value_a,
        value_b=value_b,
        c0=value_a,
        c1=c1,
    )


def edge_energy(s: EdgeSolution) -> float:
    """Closed-form value of ``int (u')^2 + kappa2 u^2`` over the edge.

    Uses the cancellation-free regrouping

        k/2 * [ (uA - uB)^2 coth(k l / 2) + (uA + uB)^2 tanh(k l / 2) ]

    whose two terms are individually nonnegative; the tiny-``k l`` branch is
    the Taylor limit ``(uB - uA)^2 / l + kappa2 l (uA^2 + uA uB + uB^2) / 3``.
    """
    a, b = s.value_a, s.value_b
    kappa = math.sqrt(s.kappa2)
    z = kappa * s.length
    if z < SERIES_PRODUCT:
        diff = (b - a) ** 2 / s.length
        mass = s.kappa2 * s.length * (a * a + a * b + b * b) / 3.0
        return diff + mass
    coth_half, _ = _coth_csch(0.5 * z)
    tanh_half = math.tanh(0.5 * z)
    return 0.5 * kappa * ((a - b) ** 2 * coth_half + (a + b) ** 2 * tanh_half)
