"""Complex-analytic side: Siegel resonant forms, quadratic blow-up,
formal first integrals, branch factorization and totally real slices.

All symbolic work stays exact; numerics appear only where a value is
inherently a sample (divisor singularities, slice points, contact ranks).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy as sp

from .center import RotationNormalization
from .series import (
    GR_ZERO,
    GaussianRational,
    OneForm2,
    Poly2,
    gr,
)

__all__ = [
    "NotIsolated",
    "SingularPoint",
    "BranchFailure",
    "NoSamples",
    "SiegelForm",
    "DivisorSingularity",
    "BlowupResult",
    "FactorPair",
    "SliceGrid",
    "RealSlice",
    "SliceVerification",
    "complexify",
    "siegel_check",
    "blowup",
    "formal_first_integral_siegel",
    "factor_fg",
    "real_slice",
    "contact_order",
]


class NotIsolated(ValueError):
    """The 1-form's components share a nonunit common factor."""


class SingularPoint(ValueError):
    """The 1-form vanishes at the requested point."""


class BranchFailure(RuntimeError):
    """Order-by-order branch solve or unit division hit an unsolvable step."""


class NoSamples(RuntimeError):
    """Slice refinement failed at every seed."""


@dataclass(frozen=True)
class SiegelForm:
    """1-form with linear part exactly x dy + y dx, plus how we got there."""

    form: OneForm2
    change_matrix: tuple[tuple[GaussianRational, GaussianRational],
                         tuple[GaussianRational, GaussianRational]]
    scale_applied: GaussianRational


@dataclass(frozen=True)
class DivisorSingularity:
    chart: str  # "t" (y = t x) or "s" (x = s y)
    location: complex
    eigenvalues: tuple[complex, complex]
    ratio: complex | None  # smaller/larger by modulus


@dataclass(frozen=True)
class BlowupResult:
    chart_t: OneForm2  # A dx + B dt in coordinates (x, t)
    chart_s: OneForm2  # A ds + B dy in coordinates (s, y)
    divided_power_t: int
    divided_power_s: int
    divisor_invariant: bool
    singularities_on_E: list[DivisorSingularity]


@dataclass(frozen=True)
class FactorPair:
    """Branches of a Morse level set: F = f * g * unit to truncation."""

    f: Poly2  # y - a(x)
    g: Poly2  # x - b(y)
    unit: Poly2
    general_position: bool
    verified_degree: int

    def absorbed(self) -> tuple[Poly2, Poly2]:
        """(f*unit, g): a pair whose plain product equals F to truncation."""
        return self.f * self.unit, self.g


@dataclass(frozen=True)
class SliceGrid:
    radii: tuple[float, ...] = (0.05, 0.08, 0.12, 0.16, 0.2)
    n_angles: int = 12


@dataclass(frozen=True)
class RealSlice:
    """Samples of V2 = (Re f = Re g) cap (Im f = -Im g)."""

    sample_points: list[tuple[complex, complex]]
    tol: float


@dataclass(frozen=True)
class SliceVerification:
    n_samples: int
    n_failed_seeds: int
    max_abs_im_fg: float
    min_re_fg: float
    contact_orders: list[int]
    residual_tol: float
    step_tol: float


# ---------------------------------------------------------------------------
# complexification


def complexify(norm: RotationNormalization) -> SiegelForm:
    """Promote a normalized real field to its Siegel resonant dual form.

    The substitution x = (u+v)/2, y = -i(u-v)/2 diagonalizes the rotation;
    the dual 1-form q dx - p dy pulls back to a scalar multiple of
    u dv + v du, and the scalar is removed exactly.
    """
    fld = norm.normalized
    w = OneForm2(fld.q.promote_complex(), -fld.p.promote_complex())
    half = Fraction(1, 2)
    m = (
        (gr(half), gr(half)),
        (gr(0, -half), gr(0, half)),
    )
    pulled = w.pullback_linear(m)
    c = pulled.b.coefficient(1, 0)
    assert c, "rotational linear part did not survive complexification"
    siegel = pulled.scale(1 / c)
    assert siegel_check(siegel), "complexified form is not in Siegel shape"
    return SiegelForm(siegel, m, 1 / c)


def siegel_check(form: OneForm2) -> bool:
    """True iff the linear part is exactly x dy + y dx with no constants."""
    a, b = form.a, form.b
    return (
        not a.coefficient(0, 0)
        and not b.coefficient(0, 0)
        and a.coefficient(0, 1) == gr(1)
        and not a.coefficient(1, 0)
        and b.coefficient(1, 0) == gr(1)
        and not b.coefficient(0, 1)
    )


# ---------------------------------------------------------------------------
# quadratic blow-up

_SX, _SY = sp.symbols("x y")


def _poly_to_sympy(p: Poly2):
    expr = sp.Integer(0)
    for (i, j), c in p.terms.items():
        expr += (sp.Rational(c.re) + sp.Rational(c.im) * sp.I) * _SX**i * _SY**j
    return expr


def _check_isolated(form: OneForm2) -> None:
    if form.a.is_zero() or form.b.is_zero():
        raise NotIsolated("a vanishing component makes the singular set a curve")
    pa = sp.Poly(_poly_to_sympy(form.a), _SX, _SY, domain="QQ_I")
    pb = sp.Poly(_poly_to_sympy(form.b), _SX, _SY, domain="QQ_I")
    g = pa.gcd(pb)
    if g.total_degree() > 0:
        raise NotIsolated(
            f"components share the common factor {g.as_expr()} to truncation"
        )


def _chart_components(form: OneForm2, chart: str) -> tuple[Poly2, Poly2, int]:
    """Substituted, divided chart components and the power divided out.

    Chart "t": y = t x gives [a(x,tx) + t b(x,tx)] dx + x b(x,tx) dt,
    then the maximal common power of x is removed.  Chart "s" mirrors it.
    """
    n = form.truncation_degree
    first: dict[tuple[int, int], GaussianRational] = {}
    second: dict[tuple[int, int], GaussianRational] = {}

    def add(acc, key, val):
        acc[key] = acc.get(key, GR_ZERO) + val

    if chart == "t":
        for (i, j), c in form.a.terms.items():
            add(first, (i + j, j), c)          # a(x, tx) dx
        for (i, j), c in form.b.terms.items():
            add(first, (i + j, j + 1), c)      # t b(x, tx) dx
            add(second, (i + j + 1, j), c)     # x b(x, tx) dt
    else:
        for (i, j), c in form.b.terms.items():
            add(second, (i, i + j), c)         # b(sy, y) dy
        for (i, j), c in form.a.terms.items():
            add(second, (i + 1, i + j), c)     # s a(sy, y) dy
            add(first, (i, i + j + 1), c)      # y a(sy, y) ds
    first = {k: v for k, v in first.items() if v}
    second = {k: v for k, v in second.items() if v}
    axis = 0 if chart == "t" else 1  # exponent of the divisor variable
    m = min(k[axis] for k in list(first) + list(second))
    shift = (lambda k: (k[0] - m, k[1])) if chart == "t" else \
        (lambda k: (k[0], k[1] - m))
    bound = n - m
    comp_a = Poly2(
        {shift(k): v for k, v in first.items()
         if shift(k)[0] + shift(k)[1] <= bound},
        bound, real=False,
    )
    comp_b = Poly2(
        {shift(k): v for k, v in second.items()
         if shift(k)[0] + shift(k)[1] <= bound},
        bound, real=False,
    )
    return comp_a, comp_b, m


def _restrict_to_divisor(p: Poly2, chart: str) -> dict[int, GaussianRational]:
    """Univariate coefficients of p on the exceptional divisor of a chart."""
    if chart == "t":
        return {j: c for (i, j), c in p.terms.items() if i == 0}
    return {i: c for (i, j), c in p.terms.items() if j == 0}


def _uni_roots(coeffs: dict[int, GaussianRational]) -> np.ndarray:
    if not coeffs:
        return np.array([], dtype=complex)
    deg = max(coeffs)
    arr = np.zeros(deg + 1, dtype=complex)
    for k, c in coeffs.items():
        arr[deg - k] = c.to_complex()
    roots = np.roots(arr) if deg >= 1 else np.array([], dtype=complex)
    return roots


def _uni_eval(coeffs: dict[int, GaussianRational], z: complex) -> complex:
    return sum(c.to_complex() * z**k for k, c in coeffs.items())


def _divisor_singularities(chart: str, comp_a: Poly2,
                           comp_b: Poly2) -> list[DivisorSingularity]:
    a0 = _restrict_to_divisor(comp_a, chart)
    b0 = _restrict_to_divisor(comp_b, chart)
    if not a0 and not b0:
        return []
    base = a0 if a0 else b0
    other = b0 if a0 else a0
    candidates: list[complex] = []
    for r in _uni_roots(base):
        scale = 1.0 + abs(r) ** max(other, default=0)
        if not other or abs(_uni_eval(other, r)) <= 1e-8 * scale:
            candidates.append(complex(r))
    # dedupe numerically coincident roots
    unique: list[complex] = []
    for c in candidates:
        if all(abs(c - u) > 1e-7 * (1 + abs(c)) for u in unique):
            unique.append(c)
    return [_linearize(chart, comp_a, comp_b, loc) for loc in unique]


def _linearize(chart, comp_a, comp_b, loc: complex) -> DivisorSingularity:
    # dual field of A dx + B dt is (B, -A); its Jacobian at the point
    if chart == "t":
        point = (0.0, loc)
    else:
        point = (loc, 0.0)
    j11 = comp_b.diff_x().evaluate(point)
    j12 = comp_b.diff_y().evaluate(point)
    j21 = -comp_a.diff_x().evaluate(point)
    j22 = -comp_a.diff_y().evaluate(point)
    eig = np.linalg.eigvals(np.array([[j11, j12], [j21, j22]], dtype=complex))
    e1, e2 = sorted(eig, key=abs)
    ratio = None if abs(e2) < 1e-12 else complex(e1 / e2)
    return DivisorSingularity(chart, loc, (complex(e1), complex(e2)), ratio)


def blowup(form: OneForm2) -> BlowupResult:
    """Quadratic blow-up in the two affine charts.

    Substitutes y = t x (and x = s y), removes the maximal common power of
    the divisor variable, decides divisor invariance exactly, and locates
    the singular points on the exceptional divisor with their linearized
    eigenvalues.  Chart s contributes only the point s = 0 that chart t
    cannot see.
    """
    if form.a.coefficient(0, 0) or form.b.coefficient(0, 0):
        raise ValueError("1-form does not vanish at the origin")
    _check_isolated(form)
    at, bt, mt = _chart_components(form, "t")
    as_, bs, ms = _chart_components(form, "s")
    # E = {x = 0} is invariant iff the dt-component vanishes on it
    invariant_t = not _restrict_to_divisor(bt, "t")
    invariant_s = not _restrict_to_divisor(as_, "s")
    assert invariant_t == invariant_s, "charts disagree on divisor invariance"
    sings = _divisor_singularities("t", at, bt)
    sings += _divisor_singularities_chart_s(as_, bs)
    return BlowupResult(
        chart_t=OneForm2(at, bt),
        chart_s=OneForm2(as_, bs),
        divided_power_t=mt,
        divided_power_s=ms,
        divisor_invariant=invariant_t,
        singularities_on_E=sings,
    )


def _divisor_singularities_chart_s(as_: Poly2, bs: Poly2) -> list[DivisorSingularity]:
    # only the origin of chart s (t = infinity) is new
    a0 = _restrict_to_divisor(as_, "s")
    b0 = _restrict_to_divisor(bs, "s")
    singular = not a0.get(0, GR_ZERO) and not b0.get(0, GR_ZERO)
    if not singular:
        return []
    return [_linearize("s", as_, bs, 0j)]


# ---------------------------------------------------------------------------
# formal first integral in the Siegel resonant case


def wedge_coefficient(f: Poly2, form: OneForm2) -> Poly2:
    """Coefficient of dx^dy in df ^ form, i.e. f_x b - f_y a."""
    return f.diff_x() * form.b - f.diff_y() * form.a


def formal_first_integral_siegel(
    form: OneForm2, n: int
) -> tuple[Poly2, list[tuple[int, GaussianRational]]]:
    """Seek F = xy + ... with dF ^ form = 0 to degree n.

    The linear part acts diagonally on monomials with eigenvalue i - j, so
    every nonresonant coefficient is solved directly; the resonant (xy)^j
    coefficients of the wedge residual are returned as the obstruction
    list (all zero iff a formal first integral exists to this order).
    F's own (xy)^j coefficients are fixed to zero.
    """
    if not siegel_check(form):
        raise ValueError("form is not in Siegel resonant shape")
    if form.truncation_degree < n:
        raise ValueError(
            f"form truncated at {form.truncation_degree}; lift it to {n} first"
        )
    f_terms: dict[tuple[int, int], GaussianRational] = {(1, 1): gr(1)}
    obstructions: list[tuple[int, GaussianRational]] = []
    for k in range(3, n + 1):
        partial = Poly2(f_terms, k + 1, real=False)
        resid = wedge_coefficient(partial, form).homogeneous_part(k)
        for j in range(k + 1):
            i = k - j
            r = resid.coefficient(i, j)
            if i == j:
                obstructions.append((k, r))
            elif r:
                f_terms[(i, j)] = -r / (i - j)
    return Poly2(f_terms, n, real=False), obstructions


# ---------------------------------------------------------------------------
# branch factorization F = f g unit


def _useries_mul(a: dict[int, GaussianRational], b: dict[int, GaussianRational],
                 n: int) -> dict[int, GaussianRational]:
    out: dict[int, GaussianRational] = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = ka + kb
            if k <= n:
                out[k] = out.get(k, GR_ZERO) + ca * cb
    return {k: v for k, v in out.items() if v}


def _branch_substitute(F: Poly2, branch: dict[int, GaussianRational],
                       n: int, solve_for_y: bool) -> dict[int, GaussianRational]:
    """Coefficients of F(x, branch(x)) (or F(branch(y), y)) up to degree n."""
    max_pow = max((j if solve_for_y else i) for i, j in F.terms)
    powers: list[dict[int, GaussianRational]] = [{0: gr(1)}]
    for _ in range(max_pow):
        powers.append(_useries_mul(powers[-1], branch, n))
    out: dict[int, GaussianRational] = {}
    for (i, j), c in F.terms.items():
        base, pw = (i, j) if solve_for_y else (j, i)
        for d, bc in powers[pw].items():
            k = base + d
            if k <= n:
                out[k] = out.get(k, GR_ZERO) + c * bc
    return {k: v for k, v in out.items() if v}


def _solve_branch(F: Poly2, solve_for_y: bool) -> dict[int, GaussianRational]:
    n = F.truncation_degree
    branch: dict[int, GaussianRational] = {}
    for k in range(2, n):
        resid = _branch_substitute(F, branch, k + 1, solve_for_y)
        low = {d: c for d, c in resid.items() if d <= k}
        if low:
            raise BranchFailure(
                f"branch residual has unexpected low-order terms {sorted(low)}"
            )
        c = resid.get(k + 1, GR_ZERO)
        if c:
            branch[k] = -c
    return branch


def factor_fg(F: Poly2, n: int) -> FactorPair:
    """Split a Morse level set F = xy + h.o.t. into its two branches.

    Solves F(x, a(x)) = 0 and F(b(y), y) = 0 order by order, returns
    f = y - a(x), g = x - b(y) together with the unit making
    F = f * g * unit hold exactly to degree n.  Requires F to be known to
    degree n + 3 (lift exact polynomials first).
    """
    if (F.coefficient(0, 0) or F.coefficient(1, 0) or F.coefficient(0, 1)
            or F.coefficient(2, 0) or F.coefficient(0, 2)
            or F.coefficient(1, 1) != gr(1)):
        raise ValueError("F must be xy + higher order terms")
    m = F.truncation_degree
    if m < n + 3:
        raise ValueError(f"F truncated at {m}; degree {n + 3} is needed "
                         f"to verify the factorization to degree {n}")
    a = _solve_branch(F, solve_for_y=True)
    b = _solve_branch(F, solve_for_y=False)
    f = Poly2({(0, 1): gr(1), **{(k, 0): -c for k, c in a.items()}},
              m - 1, real=False)
    g = Poly2({(1, 0): gr(1), **{(0, k): -c for k, c in b.items()}},
              m - 1, real=False)
    prod = f * g
    unit_terms: dict[tuple[int, int], GaussianRational] = {}
    for d in range(0, m - 2):
        upartial = Poly2(unit_terms, m - 1, real=False)
        resid = (F.truncate(m - 1) - prod * upartial).homogeneous_part(d + 2)
        for (i, j), c in resid.terms.items():
            if i == 0 or j == 0:
                raise BranchFailure(
                    f"residual term x^{i} y^{j} is not divisible by xy"
                )
            unit_terms[(i - 1, j - 1)] = unit_terms.get((i - 1, j - 1),
                                                        GR_ZERO) + c
    unit = Poly2({k: v for k, v in unit_terms.items() if v}, m - 3, real=False)
    recon = f * g * unit
    if recon.truncate(n) != F.truncate(n).promote_complex():
        raise BranchFailure("f * g * unit fails to reconstruct F")
    return FactorPair(f, g, unit, general_position=True, verified_degree=n)


# ---------------------------------------------------------------------------
# totally real slice sampling


class _CEval:
    """Fast binary64 evaluation of a Poly2 and its partial derivatives."""

    def __init__(self, p: Poly2):
        self.terms = p.as_float_terms()
        self.dx = p.diff_x().as_float_terms()
        self.dy = p.diff_y().as_float_terms()

    @staticmethod
    def _ev(terms, x, y):
        return sum(c * x**i * y**j for i, j, c in terms)

    def value(self, x, y):
        return self._ev(self.terms, x, y)

    def grad(self, x, y):
        return self._ev(self.dx, x, y), self._ev(self.dy, x, y)


def _slice_residual(h1: _CEval, h2: _CEval, u: np.ndarray) -> np.ndarray:
    x = complex(u[0], u[1])
    y = complex(u[2], u[3])
    return np.array([h1.value(x, y).real, h2.value(x, y).imag])


def _slice_jacobian(h1: _CEval, h2: _CEval, u: np.ndarray) -> np.ndarray:
    x = complex(u[0], u[1])
    y = complex(u[2], u[3])
    d1x, d1y = h1.grad(x, y)
    d2x, d2y = h2.grad(x, y)
    # for analytic h: d/d(Re x) = h_x, d/d(Im x) = i h_x
    return np.array([
        [d1x.real, -d1x.imag, d1y.real, -d1y.imag],
        [d2x.imag, d2x.real, d2y.imag, d2y.real],
    ])


def _refine(h1, h2, u0, residual_tol, step_tol, max_iter=60):
    u = np.asarray(u0, dtype=float)
    r = _slice_residual(h1, h2, u)
    for _ in range(max_iter):
        if np.linalg.norm(r) <= residual_tol:
            return u
        jac = _slice_jacobian(h1, h2, u)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        lam = 1.0
        while lam > 2 ** -20:
            trial = u + lam * step
            rt = _slice_residual(h1, h2, trial)
            if np.linalg.norm(rt) < np.linalg.norm(r):
                u, r = trial, rt
                break
            lam /= 2
        else:
            return None
        if np.linalg.norm(lam * step) < step_tol and \
                np.linalg.norm(r) > residual_tol:
            return None
    return u if np.linalg.norm(r) <= residual_tol else None


def real_slice(
    pair: FactorPair,
    grid: SliceGrid = SliceGrid(),
    tol: float = 1e-9,
    residual_tol: float = 1e-10,
    step_tol: float = 1e-12,
) -> tuple[RealSlice, SliceVerification]:
    """Sample the totally real surface Re f = Re g, Im f = -Im g.

    The unit is absorbed into f so that the product of the pair equals the
    first integral; damped Gauss-Newton refinement is run from a polar
    seed grid around the model slice y = conj(x).  Each converged sample
    is checked for a real, nonnegative product and for contact order one
    of the level foliation with the slice.
    """
    if not pair.general_position:
        raise ValueError("branches must be in general position")
    fa, gb = pair.absorbed()
    h1 = _CEval(fa - gb)
    h2 = _CEval(fa + gb)
    fa_ev, gb_ev = _CEval(fa), _CEval(gb)
    first_integral = fa * gb
    form = OneForm2(first_integral.diff_x(), first_integral.diff_y())
    samples: list[tuple[complex, complex]] = []
    bases: list[np.ndarray] = []
    failed = 0
    for r in grid.radii:
        for kk in range(grid.n_angles):
            theta = 2 * np.pi * kk / grid.n_angles
            x0 = r * np.exp(1j * theta)
            u0 = [x0.real, x0.imag, x0.real, -x0.imag]  # y = conj(x)
            u = _refine(h1, h2, u0, residual_tol, step_tol)
            if u is None:
                failed += 1
                continue
            x = complex(u[0], u[1])
            y = complex(u[2], u[3])
            samples.append((x, y))
            jac = _slice_jacobian(h1, h2, u)
            _, _, vh = np.linalg.svd(jac)
            bases.append(vh[2:])  # nullspace rows span the tangent plane
    if not samples:
        raise NoSamples("no seed converged to the slice")
    max_im = 0.0
    min_re = float("inf")
    contact = []
    for (x, y), basis in zip(samples, bases):
        val = fa_ev.value(x, y) * gb_ev.value(x, y)
        max_im = max(max_im, abs(val.imag))
        min_re = min(min_re, val.real)
        contact.append(contact_order(form, (x, y), (basis[0], basis[1])))
    return (
        RealSlice(samples, tol),
        SliceVerification(len(samples), failed, max_im, min_re, contact,
                          residual_tol, step_tol),
    )


def contact_order(form: OneForm2, point, tangent_basis) -> int:
    """Real dimension of (leaf tangent) cap (surface tangent) at a point.

    The leaf tangent of a dx + b dy = 0 is the complex line (-b, a),
    viewed as a real 2-plane in R^4 with coordinates
    (Re x, Im x, Re y, Im y).  Returns 0 (transverse), 1 (totally real
    non-invariant) or 2 (invariant direction).
    """
    x, y = complex(point[0]), complex(point[1])
    if x == 0 and y == 0:
        raise ValueError("contact order is defined away from the origin")
    av = form.a.evaluate((x, y))
    bv = form.b.evaluate((x, y))
    if max(abs(av), abs(bv)) <= 1e-12:
        raise SingularPoint(f"form vanishes at {point}")
    w = np.array([-bv, av], dtype=complex)
    w1 = np.array([w[0].real, w[0].imag, w[1].real, w[1].imag])
    iw = 1j * w
    w2 = np.array([iw[0].real, iw[0].imag, iw[1].real, iw[1].imag])
    rows = [w1 / np.linalg.norm(w1), w2 / np.linalg.norm(w2)]
    for t in tangent_basis:
        t = np.asarray(t, dtype=float)
        rows.append(t / np.linalg.norm(t))
    rank = np.linalg.matrix_rank(np.array(rows), tol=1e-8)
    return 4 - rank
