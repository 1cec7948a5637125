"""The vector-field families: separable Hamiltonian chains and their perturbations.

The base family has

    P(y) = y - y**3,      Q_r(x) = product of (x - k) for k in -r..r,

so the field X_r = (P, Q_r) is Hamiltonian with H = F(x) + U(y),
U(y) = y**4/4 - y**2/2, F = integral of Q_r.  Singular points sit on the
integer grid of the lines y in {-1, 0, 1}; the centers on y = +-1 carry the
period annuli that the certification pipeline fills with nested ovals.

Note on the product: Q_r is the single product over k in [-r, r]; its k = 0
factor supplies the leading x, so Q_r expands to exactly r + 1 monomials
(an odd polynomial).  A variant with an extra origin factor (double root at
x = 0) is available for comparison only; its center layout degenerates and
it is never used for certification.
"""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .polyalg import (
    Monomial2,
    SparsePoly2,
    antiderivative,
    differentiate,
    evaluate,
    evaluate_exact,
)

__all__ = [
    "BoundPair",
    "NotHamiltonian",
    "PerturbationSpec",
    "PlanarField",
    "SingularityReport",
    "base_field",
    "center_determinant",
    "classify_singularities",
    "five_monomial_field",
    "four_monomial_field",
    "hamiltonian_of",
    "monomial_count",
    "nested_cycle_count",
    "optimal_split",
    "perturbation_poly",
    "perturbed_field",
    "quadratic_lower_bound",
]

log = logging.getLogger(__name__)


class NotHamiltonian(ValueError):
    """The field has nonzero divergence; carries the residual polynomial."""

    def __init__(self, residual: SparsePoly2):
        self.residual = residual
        super().__init__(f"divergence is {residual}, not identically zero")


@dataclass(frozen=True)
class PlanarField:
    """A planar polynomial field (xdot, ydot) = (P, Q)."""

    P: SparsePoly2
    Q: SparsePoly2

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        return evaluate(self.P, x, y), evaluate(self.Q, x, y)

    def jacobian_polys(self) -> tuple[SparsePoly2, SparsePoly2, SparsePoly2, SparsePoly2]:
        return (
            differentiate(self.P, "x"),
            differentiate(self.P, "y"),
            differentiate(self.Q, "x"),
            differentiate(self.Q, "y"),
        )


def monomial_count(field: PlanarField) -> int:
    """Total number of monomials across both components (exact)."""
    return field.P.term_count() + field.Q.term_count()


@dataclass(frozen=True)
class SingularityReport:
    point: tuple[float, float]
    det: float
    trace: float
    kind: str  # center | saddle | degenerate | focus-candidate


# ----- the base family -----


def base_field(r: int, extra_origin_factor: bool = False) -> PlanarField:
    """The unperturbed chain field X_r with r + 3 monomials.

    P = y - y**3 is shared; Q_r has simple roots at the integers -r..r.
    ``extra_origin_factor`` multiplies one more x in (double root at the
    origin); kept only so the degenerate variant can be inspected.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    P = SparsePoly2.from_terms([(1, 0, 1), (-1, 0, 3)])
    Q = SparsePoly2.constant(1)
    for k in range(-r, r + 1):
        Q = Q * SparsePoly2.from_terms([(1, 1, 0), (-k, 0, 0)])
    if extra_origin_factor:
        Q = Q * SparsePoly2.variable("x")
    return PlanarField(P, Q)


def hamiltonian_of(field: PlanarField) -> SparsePoly2:
    """H with dH/dx = Q, dH/dy = -P and H(0, 0) = 0.

    Raises NotHamiltonian (with the divergence polynomial as residual) when
    the field is not area-preserving.
    """
    divergence = differentiate(field.P, "x") + differentiate(field.Q, "y")
    if not divergence.is_zero():
        raise NotHamiltonian(divergence)
    H = antiderivative(field.Q, "x") + antiderivative(-field.P.restrict_x0(), "y")
    # Internal consistency: the closed-form construction must reproduce the
    # field exactly (rational arithmetic end to end).
    assert differentiate(H, "x") == field.Q
    assert differentiate(H, "y") == -field.P
    return H


def center_determinant(r: int, j: int) -> int:
    """Closed-form Jacobian determinant of X_r at (j, +-1).

    det DX_r(j, +-1) = 2 * Q_r'(j) = 2 * (-1)**(r - j) * prod |j - k| over
    k != j; positive (a center) exactly when j and r share parity.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if abs(j) > r:
        raise ValueError("j must lie in [-r, r]")
    prod = 1
    for k in range(-r, r + 1):
        if k != j:
            prod *= abs(j - k)
    sign = -1 if (r - j) % 2 else 1
    return 2 * sign * prod


def _newton_polish(
    field: PlanarField,
    jac: Sequence[SparsePoly2],
    x0: float,
    y0: float,
    tol: float,
    max_iter: int = 60,
) -> tuple[float, float, bool] | None:
    """Damped Newton for simultaneous zeros of (P, Q); None on failure.

    Returns (x, y, ill) where ill reports a multiple-root stall: once the
    residual meets tol, two more full steps are taken, and persistently
    halving step sizes (linear instead of quadratic convergence) mean the
    Jacobian is singular at the root, so the point is only resolved to the
    stall distance and must be classified degenerate.
    """
    x, y = x0, y0
    fx, fy = evaluate(field.P, x, y), evaluate(field.Q, x, y)
    res = math.hypot(fx, fy)
    converged = res <= tol
    for _ in range(max_iter):
        if converged:
            break
        a = evaluate(jac[0], x, y)
        b = evaluate(jac[1], x, y)
        c = evaluate(jac[2], x, y)
        d = evaluate(jac[3], x, y)
        det = a * d - b * c
        if det == 0.0 or not math.isfinite(det):
            return None
        dx = (d * fx - b * fy) / det
        dy = (-c * fx + a * fy) / det
        lam = 1.0
        for _ in range(40):
            xn, yn = x - lam * dx, y - lam * dy
            fxn, fyn = evaluate(field.P, xn, yn), evaluate(field.Q, xn, yn)
            resn = math.hypot(fxn, fyn)
            if resn < res:
                x, y, fx, fy, res = xn, yn, fxn, fyn, resn
                break
            lam *= 0.5
        else:
            return None
        converged = res <= tol
    if not converged:
        return None

    floor = 100.0 * sys.float_info.epsilon * (1.0 + abs(x) + abs(y))
    steps = []
    for _ in range(2):
        a = evaluate(jac[0], x, y)
        b = evaluate(jac[1], x, y)
        c = evaluate(jac[2], x, y)
        d = evaluate(jac[3], x, y)
        det = a * d - b * c
        if det == 0.0 or not math.isfinite(det):
            return x, y, True
        dx = (d * fx - b * fy) / det
        dy = (-c * fx + a * fy) / det
        step = math.hypot(dx, dy)
        steps.append(step)
        xn, yn = x - dx, y - dy
        fxn, fyn = evaluate(field.P, xn, yn), evaluate(field.Q, xn, yn)
        if math.hypot(fxn, fyn) <= res:
            x, y, fx, fy = xn, yn, fxn, fyn
            res = math.hypot(fx, fy)
        if step <= floor:
            return x, y, False
    ill = steps[1] > 0.2 * steps[0]
    return x, y, ill


def classify_singularities(
    field: PlanarField,
    box: tuple[float, float, float, float],
    grid: int = 96,
    det_tol_factor: float = 1e-8,
) -> list[SingularityReport]:
    """All common real zeros of (P, Q) inside the box, classified.

    Subdivision proposes candidate cells (a cell qualifies when each
    component either changes sign over the cell corners or is small there);
    damped Newton polishes from the cell center; duplicates are merged.
    Classification uses the Jacobian: for a Hamiltonian field the trace
    vanishes identically, so det > 0 means center and det < 0 saddle.
    |det| below det_tol_factor * scale**2 is reported as degenerate.  A
    nondegenerate linearization with nonzero trace (non-area-preserving
    case) is only ever a focus candidate here.
    """
    xmin, xmax, ymin, ymax = box
    jac = field.jacobian_polys()
    try:
        hamiltonian_of(field)
        is_ham = True
    except NotHamiltonian:
        is_ham = False

    xszs = np.linspace(xmin, xmax, grid + 1)
    yszs = np.linspace(ymin, ymax, grid + 1)
    XX, YY = np.meshgrid(xszs, yszs, indexing="ij")
    from .polyalg import evaluate_array

    PP = evaluate_array(field.P, XX, YY)
    QQ = evaluate_array(field.Q, XX, YY)
    scale_p = max(np.max(np.abs(PP)), 1.0)
    scale_q = max(np.max(np.abs(QQ)), 1.0)

    def straddles(vals: np.ndarray, scale: float) -> np.ndarray:
        corners = [vals[:-1, :-1], vals[1:, :-1], vals[:-1, 1:], vals[1:, 1:]]
        lo = np.minimum.reduce(corners)
        hi = np.maximum.reduce(corners)
        small = np.minimum.reduce([np.abs(c) for c in corners]) < 1e-3 * scale
        return (lo <= 0) & (hi >= 0) | small

    cand = straddles(PP, scale_p) & straddles(QQ, scale_q)
    cell_tol = 1e-12 * max(scale_p, scale_q)

    roots: list[tuple[float, float, bool]] = []
    # a stalled polish resolves a multiple root only to ~sqrt(tol), so the
    # merge radius must cover the proposal resolution, not float precision
    dedup = 0.5 * max((xmax - xmin) / grid, (ymax - ymin) / grid)
    for i, jdx in zip(*np.nonzero(cand)):
        cx = 0.5 * (xszs[i] + xszs[i + 1])
        cy = 0.5 * (yszs[jdx] + yszs[jdx + 1])
        sol = _newton_polish(field, jac, cx, cy, cell_tol)
        if sol is None:
            log.warning("root polish did not converge from cell (%g, %g)", cx, cy)
            continue
        x, y, ill = sol
        if not (xmin - 1e-9 <= x <= xmax + 1e-9 and ymin - 1e-9 <= y <= ymax + 1e-9):
            continue
        if any(math.hypot(x - rx, y - ry) < dedup for rx, ry, _ in roots):
            continue
        roots.append((x, y, ill))

    reports = []
    for x, y, ill in sorted(roots, key=lambda p: (round(p[1], 9), round(p[0], 9))):
        a = evaluate(jac[0], x, y)
        b = evaluate(jac[1], x, y)
        c = evaluate(jac[2], x, y)
        d = evaluate(jac[3], x, y)
        det = a * d - b * c
        trace = a + d
        scale = max(abs(a), abs(b), abs(c), abs(d), 1e-30)
        if ill or abs(det) <= det_tol_factor * scale * scale:
            kind = "degenerate"
        elif det < 0:
            kind = "saddle"
        elif is_ham:
            kind = "center"
        else:
            kind = "focus-candidate"
        reports.append(SingularityReport((x, y), det, trace, kind))
    return reports


# ----- perturbations -----


@dataclass(frozen=True)
class PerturbationSpec:
    """Amplitude thresholds a_0..a_n and exponents m_0..m_n of the pinch terms.

    a_0 = 1 and m_0 = 0 anchor the leading x**(2n+1) term; thereafter the
    thresholds increase strictly (each above 1) and the exponents increase
    strictly.  Thresholds are exact rationals so the perturbation's
    coefficients 1/a_k**(2 m_k) stay exact no matter how large m_k gets.
    """

    n: int
    a: tuple[Fraction, ...]
    m: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(Fraction(v) for v in self.a))
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if len(self.a) != self.n + 1 or len(self.m) != self.n + 1:
            raise ValueError("a and m must each have n + 1 entries")
        if self.a[0] != 1:
            raise ValueError("a[0] must equal 1")
        if self.m[0] != 0:
            raise ValueError("m[0] must equal 0")
        for i in range(1, self.n + 1):
            if self.a[i] <= self.a[i - 1] or self.a[i] <= 1:
                raise ValueError("thresholds must increase strictly above 1")
            if self.m[i] <= self.m[i - 1]:
                raise ValueError("exponents must increase strictly")


def perturbation_poly(spec: PerturbationSpec) -> SparsePoly2:
    """The alternating pinch polynomial with n + 1 monomials.

    sum over k of (-1)**k x**(2(n-k)+1) (y/a_k)**(2 m_k); the k-th
    coefficient is the exact rational (-1)**k / a_k**(2 m_k).
    """
    n = spec.n
    terms = []
    for k in range(n + 1):
        coeff = Fraction(-1 if k % 2 else 1, 1) / spec.a[k] ** (2 * spec.m[k])
        terms.append(Monomial2(coeff, 2 * (n - k) + 1, 2 * spec.m[k]))
    return SparsePoly2.from_terms(terms)


def perturbed_field(r: int, spec: PerturbationSpec, eps: float) -> PlanarField:
    """X_r with eps times the pinch polynomial added to the x-component.

    The pinch terms are odd in x while P is pure-y, so for eps != 0 the
    field has exactly n + r + 4 monomials.
    """
    base = base_field(r)
    if eps == 0:
        return base
    R = perturbation_poly(spec).scale(Fraction(eps))
    return PlanarField(base.P + R, base.Q)


# ----- the four- and five-monomial showcase families -----


def four_monomial_field(a: float) -> PlanarField:
    """(P, Q) = (a x**2 y**4 - a, x**2 y**2 - 1); reversible, 4 monomials.

    Singular at (1, 1) and (-1, -1); the linearization trace there is
    2a + 2, so a = -1 is the weak-focus parameter.
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    aq = Fraction(a)
    P = SparsePoly2.from_terms([(aq, 2, 4), (-aq, 0, 0)])
    Q = SparsePoly2.from_terms([(1, 2, 2), (-1, 0, 0)])
    return PlanarField(P, Q)


def five_monomial_field(a: float, b: float) -> PlanarField:
    """(P, Q) = (a y**6 + b x**2 y**4 - (a + b), x**2 y**2 - 1); 5 monomials.

    The constant term cancels P at (1, 1) exactly (rational arithmetic), so
    (1, 1) is singular for every (a, b); trace there is 2b + 2.
    """
    aq, bq = Fraction(a), Fraction(b)
    P = SparsePoly2.from_terms([(aq, 0, 6), (bq, 2, 4), (-(aq + bq), 0, 0)])
    Q = SparsePoly2.from_terms([(1, 2, 2), (-1, 0, 0)])
    return PlanarField(P, Q)


# a value for which the cubic return-map coefficient of the 5-monomial
# family vanishes at its trace zero b = -1, leaving a weak focus of order
# at least two at (1, 1)
SECOND_ORDER_A = 3.0 - 4.0 * math.sqrt(5.0) / 3.0


# ----- counting formulas -----


def nested_cycle_count(n: int, r: int) -> int:
    """Limit cycles certified by the nested-oval construction.

    2 n (r + 1) from the outer ladders of all 2(r+1) annuli, plus 2n more
    from the pinch ovals of the two x = 0 annuli when r is even.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if r < 0:
        raise ValueError("r must be >= 0")
    return 2 * n * (r + 1) + n * (1 + (-1) ** r)


@dataclass(frozen=True)
class BoundPair:
    simplified: Fraction
    refined: Fraction


def quadratic_lower_bound(m: int) -> BoundPair:
    """Lower bound m**2/2 - 3m - 8 for total monomial budget m >= 9.

    ``refined`` adds the parity term (9/4)(1 - (-1)**m), which makes the
    bound exactly 2 n (r + 1) at the optimal split for every m.
    """
    if m < 9:
        raise ValueError("the quadratic bound needs m >= 9")
    simplified = Fraction(m * m, 2) - 3 * m - 8
    refined = simplified + Fraction(9, 4) * (1 - (-1) ** m)
    return BoundPair(simplified, refined)


def optimal_split(m: int) -> int:
    """The chain order realizing the quadratic bound: r = floor(m / 2).

    With n = m - r - 4 stages this split gives 2 n (r + 1) equal to the
    refined bound exactly (plus the pinch bonus when r is even).  Larger
    counts exist at other splits for small m; this one yields the clean
    closed form.
    """
    if m < 9:
        raise ValueError("the optimal split is defined for m >= 9")
    return m // 2
