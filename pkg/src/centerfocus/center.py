"""Symbolic center-focus certification for rotational planar singularities.

Normalizes the linear part to the standard rotation, builds a formal first
integral F = x^2 + y^2 + ... degree by degree, and reads off the exact
obstruction coefficients along powers of x^2 + y^2.  All obstructions zero
up to the truncation order means "center to order N"; the first nonzero
one certifies a focus together with its sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import linsolve
from .series import (
    GR_ZERO,
    GaussianRational,
    Poly2,
    VectorField2,
    gr,
    lie_derivative,
)

__all__ = [
    "NotARotation",
    "IrrationalRotationFrequency",
    "RotationNormalization",
    "LyapunovReport",
    "MorseReport",
    "CenterVerdict",
    "normalize_rotation",
    "lyapunov_quantities",
    "morse_check",
    "certify_center",
]


class NotARotation(ValueError):
    """The linear part does not generate a rotation (trace != 0 or det <= 0)."""


class IrrationalRotationFrequency(ValueError):
    """The linear part is a rotation but its frequency sqrt(det) is not
    rational, so the normalization cannot be carried out exactly."""


@dataclass(frozen=True)
class RotationNormalization:
    """Exact conjugation of a rotational field to (-y + ...) d/dx + (x + ...) d/dy."""

    original: VectorField2
    change_matrix: tuple[tuple[GaussianRational, GaussianRational],
                         tuple[GaussianRational, GaussianRational]]
    time_rescale: GaussianRational
    normalized: VectorField2


@dataclass(frozen=True)
class LyapunovReport:
    truncation_degree: int
    first_integral: Poly2
    obstructions: list[tuple[int, GaussianRational]]  # (even degree, eta)
    first_nonzero: int | None  # index into obstructions


@dataclass(frozen=True)
class MorseReport:
    nondegenerate: bool
    definite: bool


@dataclass(frozen=True)
class CenterVerdict:
    status: str  # CENTER_TO_ORDER_N | FOCUS | NOT_APPLICABLE
    order: int
    normalization: RotationNormalization | None = None
    report: LyapunovReport | None = None
    morse: MorseReport | None = None
    focus_degree: int | None = None
    focus_coefficient: GaussianRational | None = None
    message: str = ""


def _rational_sqrt(value: Fraction) -> Fraction | None:
    if value < 0:
        return None
    ns = math.isqrt(value.numerator)
    ds = math.isqrt(value.denominator)
    if ns * ns != value.numerator or ds * ds != value.denominator:
        return None
    return Fraction(ns, ds)


def normalize_rotation(field: VectorField2) -> RotationNormalization:
    """Conjugate a rotational linear part exactly to -y d/dx + x d/dy.

    Checks trace = 0 and det > 0 over the rationals, rescales time by
    1/omega (omega^2 = det) and applies a rational linear change.  Raises
    NotARotation when the hypothesis fails, IrrationalRotationFrequency
    when det is not the square of a rational.
    """
    if not field.real:
        raise ValueError("normalization expects a real vector field")
    if not field.singular_at_origin:
        raise ValueError("field must be singular at the origin")
    (a11, a12), (a21, a22) = field.linear_part_matrix()
    trace = a11.re + a22.re
    det = a11.re * a22.re - a12.re * a21.re
    if trace != 0 or det <= 0:
        raise NotARotation(
            f"linear part has trace {trace} and determinant {det}; "
            "eigenvalues are not +-i*omega"
        )
    omega = _rational_sqrt(det)
    if omega is None:
        raise IrrationalRotationFrequency(
            f"determinant {det} is not a rational square; "
            "exact normalization is unavailable"
        )
    # A t1 = omega t2 and A t2 = -omega t1 with t1 = (1, 0); det > 0 with
    # trace 0 forces a21 != 0, so T is invertible.
    t = ((gr(1), gr(a11.re / omega)), (gr(0), gr(a21.re / omega)))
    det_t = t[0][0] * t[1][1] - t[0][1] * t[1][0]
    tinv = (
        (t[1][1] / det_t, -t[0][1] / det_t),
        (-t[1][0] / det_t, t[0][0] / det_t),
    )
    p_sub = field.p.substitute_linear(t)
    q_sub = field.q.substitute_linear(t)
    scale = gr(1 / omega)
    new_p = (tinv[0][0] * p_sub + tinv[0][1] * q_sub) * scale
    new_q = (tinv[1][0] * p_sub + tinv[1][1] * q_sub) * scale
    normalized = VectorField2(new_p, new_q)
    lin = normalized.linear_part_matrix()
    assert lin[0][0] == GR_ZERO and lin[0][1] == gr(-1), "normalization failed"
    assert lin[1][0] == gr(1) and lin[1][1] == GR_ZERO, "normalization failed"
    return RotationNormalization(field, t, scale, normalized)


def _rotation_operator_matrix(k: int) -> list[list[GaussianRational]]:
    """Matrix of f -> -y df/dx + x df/dy on monomials x^(k-j) y^j."""
    m = [[GR_ZERO] * (k + 1) for _ in range(k + 1)]
    for j in range(k + 1):
        i = k - j
        if i >= 1:
            m[j + 1][j] = m[j + 1][j] + gr(-i)
        if j >= 1:
            m[j - 1][j] = m[j - 1][j] + gr(j)
    return m


def _radius_power_vector(k: int) -> list[GaussianRational]:
    """Coefficients of (x^2 + y^2)^(k/2) on monomials x^(k-j) y^j."""
    half = k // 2
    s = [GR_ZERO] * (k + 1)
    for a in range(half + 1):
        s[k - 2 * a] = gr(math.comb(half, a))
    return s


def lyapunov_quantities(norm: RotationNormalization, n: int) -> LyapunovReport:
    """Build F = x^2 + y^2 + sum F_k and the obstruction sequence.

    At each degree the rotational part is inverted on the monomial basis;
    at even degrees 2j the cokernel direction (x^2+y^2)^j carries the
    obstruction eta_j, and F_{2j} is normalized to have zero component
    along (x^2+y^2)^j.  Requires the normalized field to be known to
    degree n at least.
    """
    if n < 4:
        raise ValueError("truncation order must be at least 4")
    field = norm.normalized
    if field.truncation_degree < n:
        raise ValueError(
            f"normalized field truncated at {field.truncation_degree}; "
            f"lift it to at least {n} before requesting order {n}"
        )
    f_terms: dict[tuple[int, int], GaussianRational] = {
        (2, 0): gr(1),
        (0, 2): gr(1),
    }
    obstructions: list[tuple[int, GaussianRational]] = []
    for k in range(3, n + 1):
        partial = Poly2(f_terms, k + 1)
        residual = lie_derivative(field, partial).homogeneous_part(k)
        rhs = [-residual.coefficient(k - j, j) for j in range(k + 1)]
        m = _rotation_operator_matrix(k)
        if k % 2 == 1:
            sol = linsolve.solve(m, rhs)
            assert sol is not None, "odd-degree homological solve failed"
            coeffs, eta = sol, None
        else:
            s = _radius_power_vector(k)
            aug = [row + [-s[r]] for r, row in enumerate(m)]
            sol = linsolve.solve(aug, rhs)
            assert sol is not None, "even-degree homological solve failed"
            coeffs, eta = sol[: k + 1], sol[k + 1]
            # remove the kernel component along (x^2+y^2)^(k/2)
            dot = sum((c * sv for c, sv in zip(coeffs, s)), GR_ZERO)
            norm2 = sum((sv * sv for sv in s), GR_ZERO)
            tpar = dot / norm2
            coeffs = [c - tpar * sv for c, sv in zip(coeffs, s)]
            if k >= 4:
                obstructions.append((k, eta))
        for j, c in enumerate(coeffs):
            if c:
                f_terms[(k - j, j)] = c
    first_integral = Poly2(f_terms, n)
    # exact consistency guard: X(F) must equal the obstruction series
    check = lie_derivative(field.lift(max(field.truncation_degree, n + 1)),
                           first_integral.lift(n + 1))
    r2 = Poly2({(2, 0): 1, (0, 2): 1}, n)
    expected = Poly2.zero(n)
    for deg, eta in obstructions:
        if eta:
            expected = expected + r2 ** (deg // 2) * eta
    assert check.truncate(n) == expected, "obstruction decomposition failed"
    first_nonzero = next(
        (idx for idx, (_, eta) in enumerate(obstructions) if eta), None
    )
    return LyapunovReport(n, first_integral, obstructions, first_nonzero)


def morse_check(f: Poly2) -> MorseReport:
    """Nondegeneracy and definiteness of the quadratic-part Hessian."""
    if f.coefficient(0, 0) or f.coefficient(1, 0) or f.coefficient(0, 1):
        raise ValueError("Morse check expects no constant or linear terms")
    if not f.real:
        raise ValueError("Morse definiteness is defined for real series")
    a = f.coefficient(2, 0).re
    b = f.coefficient(1, 1).re
    c = f.coefficient(0, 2).re
    disc = 4 * a * c - b * b
    return MorseReport(nondegenerate=disc != 0, definite=disc > 0)


def certify_center(field: VectorField2, n: int = 10) -> CenterVerdict:
    """Full symbolic pipeline: normalize, obstructions, Morse check.

    The input is treated as an exact polynomial field and lifted to the
    requested order when its declared truncation is lower.  A failed
    rotation hypothesis yields the NOT_APPLICABLE verdict.
    """
    if field.truncation_degree < n:
        field = field.lift(n)
    try:
        norm = normalize_rotation(field)
    except NotARotation as exc:
        return CenterVerdict("NOT_APPLICABLE", n, message=str(exc))
    report = lyapunov_quantities(norm, n)
    morse = morse_check(report.first_integral)
    if report.first_nonzero is None:
        return CenterVerdict(
            "CENTER_TO_ORDER_N", n, norm, report, morse,
            message=f"all obstructions vanish up to degree {n}; "
            "first integral is Morse "
            + ("definite" if morse.definite else "indefinite"),
        )
    deg, eta = report.obstructions[report.first_nonzero]
    sign = "positive" if eta.re > 0 else "negative"
    return CenterVerdict(
        "FOCUS", n, norm, report, morse,
        focus_degree=deg, focus_coefficient=eta,
        message=f"first nonzero obstruction at degree {deg} is {sign} ({eta})",
    )
