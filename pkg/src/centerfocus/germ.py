"""Germs of one-dimensional diffeomorphisms fixing the origin.

Truncated invertible series z -> lam*z + ..., with exact composition and
inversion, a finite-order test driven by the multiplier, and numerically
iterated pseudo-orbits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .series import GR_ONE, GR_ZERO, GaussianRational, Scalar, gr

__all__ = [
    "Germ1",
    "OrbitRecord",
    "InconclusiveOrder",
    "compose",
    "invert",
    "power",
    "finite_order",
    "pseudo_orbit",
]

# Gaussian-rational roots of unity and their orders; nothing else in Q(i)
# lies on the unit circle and has finite multiplicative order.
_UNIT_ORDERS = {
    gr(1): 1,
    gr(-1): 2,
    gr(0, 1): 4,
    gr(0, -1): 4,
}


class InconclusiveOrder(Exception):
    """f^m equals the identity at this truncation, but too few degrees
    remain to distinguish finite order from tangency to the identity.
    Retry with truncation_degree >= needed_degree."""

    def __init__(self, order: int, needed_degree: int):
        super().__init__(
            f"f^{order} = id at the current truncation; "
            f"retry with truncation degree >= {needed_degree}"
        )
        self.order = order
        self.needed_degree = needed_degree


class Germ1:
    """Truncated series germ with nonzero multiplier and no constant term."""

    __slots__ = ("coeffs", "truncation_degree")

    def __init__(self, coeffs: Mapping[int, Scalar], truncation_degree: int):
        if truncation_degree < 1:
            raise ValueError("truncation degree must be at least 1")
        clean: dict[int, GaussianRational] = {}
        for k, c in coeffs.items():
            if k < 1:
                raise ValueError("germ fixes the origin: degrees start at 1")
            if k > truncation_degree:
                raise ValueError(f"degree {k} exceeds truncation {truncation_degree}")
            c = GaussianRational.coerce(c)
            if c:
                clean[k] = c
        if 1 not in clean:
            raise ValueError("multiplier (degree-1 coefficient) must be nonzero")
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "truncation_degree", truncation_degree)

    def __setattr__(self, name, value):
        raise AttributeError("Germ1 is immutable")

    @classmethod
    def identity(cls, truncation_degree: int) -> "Germ1":
        return cls({1: 1}, truncation_degree)

    @property
    def multiplier(self) -> GaussianRational:
        return self.coeffs[1]

    def coefficient(self, k: int) -> GaussianRational:
        return self.coeffs.get(k, GR_ZERO)

    def is_identity(self) -> bool:
        return self.coeffs == {1: GR_ONE}

    def __eq__(self, other):
        if not isinstance(other, Germ1):
            return NotImplemented
        return (
            self.coeffs == other.coeffs
            and self.truncation_degree == other.truncation_degree
        )

    __hash__ = None

    def __repr__(self):
        body = " + ".join(
            f"({c})z^{k}" if k > 1 else f"({c})z"
            for k, c in sorted(self.coeffs.items())
        )
        return f"Germ1[{body or '0'}; N={self.truncation_degree}]"

    def evaluate(self, z: complex) -> complex:
        """Binary64 Horner evaluation of the truncated polynomial."""
        n = self.truncation_degree
        acc = 0j
        for k in range(n, 0, -1):
            acc = acc * z + self.coefficient(k).to_complex()
        return acc * z


def _umul(a: dict[int, GaussianRational], b: dict[int, GaussianRational],
          n: int) -> dict[int, GaussianRational]:
    out: dict[int, GaussianRational] = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = ka + kb
            if k > n:
                continue
            v = out.get(k, GR_ZERO) + ca * cb
            if v:
                out[k] = v
            elif k in out:
                del out[k]
    return out


def compose(f: Germ1, g: Germ1) -> Germ1:
    """Truncated series of f(g(z))."""
    n = min(f.truncation_degree, g.truncation_degree)
    gt = {k: c for k, c in g.coeffs.items() if k <= n}
    # Horner in g: sum_m f_m g^m = g*(f_1 + g*(f_2 + ...))
    acc: dict[int, GaussianRational] = {}
    top = f.coefficient(n)
    if top:
        acc[0] = top
    for m in range(n - 1, 0, -1):
        acc = _umul(acc, gt, n)
        c = f.coefficient(m)
        if c:
            v = acc.get(0, GR_ZERO) + c
            if v:
                acc[0] = v
            elif 0 in acc:
                del acc[0]
    acc = _umul(acc, gt, n)
    return Germ1(acc, n)


def invert(f: Germ1) -> Germ1:
    """g with f(g(z)) = z to the shared truncation."""
    n = f.truncation_degree
    coeffs: dict[int, GaussianRational] = {1: GR_ONE / f.multiplier}
    for k in range(2, n + 1):
        resid = compose(f, Germ1(coeffs, n))
        c = resid.coefficient(k)
        if c:
            coeffs[k] = -c / f.multiplier
    return Germ1(coeffs, n)


def power(f: Germ1, k: int) -> Germ1:
    """k-fold composition f o ... o f (k >= 1)."""
    if k < 1:
        raise ValueError("power requires k >= 1")
    out = f
    for _ in range(k - 1):
        out = compose(out, f)
    return out


def multiplier_order(lam: GaussianRational) -> int | None:
    """Multiplicative order of lam when it is a root of unity, else None."""
    if lam.abs2() != Fraction(1):
        return None
    return _UNIT_ORDERS.get(lam)


def finite_order(f: Germ1, k_max: int) -> int | None:
    """Smallest k <= k_max with f^k = id to truncation, or None.

    Dichotomy: the multiplier must be a root of unity of some order m; if
    so, either f^m is the identity (order m) or it is tangent to the
    identity with a nonzero higher term and no finite order exists.
    Raises InconclusiveOrder when f^m looks like the identity but the
    truncation is below 2m.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    m = multiplier_order(f.multiplier)
    if m is None or m > k_max:
        return None
    fm = power(f, m)
    if fm.is_identity():
        if f.truncation_degree < 2 * m:
            raise InconclusiveOrder(m, 2 * m)
        return m
    return None


@dataclass(frozen=True)
class OrbitRecord:
    """Numerically iterated pseudo-orbit of a point under a germ."""

    z0: complex
    status: str  # "periodic" | "escaped" | "undecided"
    period: int | None
    iterates: list[complex] = field(repr=False)
    return_tolerance: float = 1e-9
    escape_radius: float = 1.0


def pseudo_orbit(
    f: Germ1,
    z0: complex,
    k_max: int,
    escape_radius: float = 1.0,
    return_tolerance: float = 1e-9,
) -> OrbitRecord:
    """Track f^n(z0) for n = 0..k_max through the truncated polynomial.

    Periodic when an iterate returns within return_tolerance of z0,
    escaped when it leaves the escape radius, undecided otherwise.
    """
    z0 = complex(z0)
    if abs(z0) >= escape_radius:
        raise ValueError("starting point must lie inside the escape radius")
    iterates = [z0]
    z = z0
    for n in range(1, k_max + 1):
        z = f.evaluate(z)
        iterates.append(z)
        if abs(z) > escape_radius:
            return OrbitRecord(z0, "escaped", None, iterates,
                               return_tolerance, escape_radius)
        if abs(z - z0) <= return_tolerance:
            return OrbitRecord(z0, "periodic", n, iterates,
                               return_tolerance, escape_radius)
    return OrbitRecord(z0, "undecided", None, iterates,
                       return_tolerance, escape_radius)
