"""Period annuli and their ovals, traced as polylines by ray shooting.

The Hamiltonians handled here are separable, H(x, y) = F(x) + U(y), with
nondegenerate centers that are local minima of H, so every energy level
between the center value and the lowest reachable saddle value cuts a
closed star-shaped oval around the center.  Separability pins the oval
inside an exactly solved bounding box on whose boundary H >= h; each oval
is traced by bisecting rays from the center against the level set inside
that box, yielding a counterclockwise polyline.  Clipping to the box is
what makes the root search safe: no sampled march is involved, so thin
slivers of the level set near a separatrix cannot be stepped over.

Levels may approach the center value closely enough that the oval's width
leaves the double range conceptually; `shrink_to_xwidth` covers the
representable part of that regime and reports a degenerate level when the
requested width cannot be realized in floats, at which point callers switch
to the box-model `VirtualOval` and analytic certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .families import SingularityReport
from .polyalg import LogValue, SparsePoly2, differentiate, evaluate, evaluate_array

__all__ = [
    "AmplitudeUnreachable",
    "DegenerateLevel",
    "GeometryError",
    "LevelOutOfRange",
    "NoBoundingSaddle",
    "NotStarShaped",
    "Oval",
    "PeriodAnnulus",
    "VirtualOval",
    "axis_amplitude",
    "find_annulus",
    "oval_by_amplitude",
    "shrink_to_xwidth",
    "trace_oval",
]

LEVEL_CAP_FRACTION = 1e-6  # levels stop at h_sep - this fraction of the span
RAY_TOL = 1e-12  # ray-root tolerance |dt| <= RAY_TOL * (1 + t)
LEVEL_FIDELITY = 1e-9  # max |H(vertex) - h| <= LEVEL_FIDELITY * max(1, |h|)
AREA_STOP_REL = 1e-10  # doubling stops when extrapolated area settles to this
MAX_VERTICES = 16384


class GeometryError(RuntimeError):
    pass


class NoBoundingSaddle(GeometryError):
    pass


class NotStarShaped(GeometryError):
    pass


class LevelOutOfRange(GeometryError):
    pass


class AmplitudeUnreachable(GeometryError):
    def __init__(self, msg: str, reachable: tuple[float, float] | None = None):
        super().__init__(msg)
        self.reachable = reachable


class DegenerateLevel(GeometryError):
    """The requested level offset underflows what floats can represent."""


@dataclass(frozen=True)
class PeriodAnnulus:
    """A punctured center neighborhood foliated by closed orbits.

    Levels run over (h_center, h_sep); orientation_sign is +1 when the flow
    runs counterclockwise around the center.  hxx and hyy are the second
    partials of H at the center (both positive: H has a local minimum).
    """

    center: tuple[float, float]
    h_center: float
    h_sep: float
    orientation_sign: int
    hamiltonian: SparsePoly2
    hxx: float
    hyy: float

    @property
    def level_cap(self) -> float:
        return self.h_sep - LEVEL_CAP_FRACTION * (self.h_sep - self.h_center)


@dataclass(frozen=True)
class Oval:
    """A traced level oval: counterclockwise polyline plus summary scalars.

    alpha is max |y| over the closed region and b_min the min |y|; for the
    separable Hamiltonians here both extremes sit on the vertical line
    through the center and are solved exactly rather than read off the
    polyline.  area is the polygon area of the polyline.
    """

    annulus: PeriodAnnulus
    h: float
    points: np.ndarray  # (n, 2), open ring, counterclockwise
    alpha: float
    b_min: float
    area: float

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def x_range(self) -> tuple[float, float]:
        return float(np.min(self.points[:, 0])), float(np.max(self.points[:, 0]))

    @property
    def y_range(self) -> tuple[float, float]:
        return float(np.min(self.points[:, 1])), float(np.max(self.points[:, 1]))

    def max_abs_x(self) -> float:
        return float(np.max(np.abs(self.points[:, 0])))


@dataclass(frozen=True)
class VirtualOval:
    """Box model of an oval too thin to trace in floats.

    Stands for any level oval close enough to the center that its region
    satisfies |x - cx| <= x_halfwidth and |y - cy| <= y_halfwidth; such
    ovals exist for every sufficiently small level offset because the
    center is a nondegenerate minimum of H.  Certificates evaluate on this
    conservative box.
    """

    annulus: PeriodAnnulus
    x_halfwidth: LogValue
    y_halfwidth: LogValue

    @property
    def is_virtual(self) -> bool:
        return True


def _orientation_sign(H: SparsePoly2, center: tuple[float, float]) -> int:
    """Rotation sense of the Hamiltonian flow (-Hy, Hx) near the center."""
    P = -differentiate(H, "y")
    Q = differentiate(H, "x")
    cx, cy = center
    delta = 1e-4
    cross = 0.0
    for k in range(8):
        th = 2 * math.pi * k / 8
        dx, dy = delta * math.cos(th), delta * math.sin(th)
        fx = evaluate(P, cx + dx, cy + dy)
        fy = evaluate(Q, cx + dx, cy + dy)
        cross += dx * fy - dy * fx
    if cross == 0.0:
        raise GeometryError("cannot determine rotation sense at the center")
    return 1 if cross > 0 else -1


def _separable_parts(H: SparsePoly2) -> tuple[SparsePoly2, SparsePoly2]:
    """Split H into F(x) + U(y); mixed terms are a contract violation."""
    fx, uy = [], []
    for t in H.terms:
        if t.ey == 0:
            fx.append(t)
        elif t.ex == 0:
            uy.append(t)
        else:
            raise GeometryError(
                "oval tracing requires a separable Hamiltonian F(x) + U(y)"
            )
    return SparsePoly2(tuple(fx)), SparsePoly2(tuple(uy))


def _critical_points(poly: SparsePoly2, axis: str) -> np.ndarray:
    """Sorted real roots of the derivative of a single-variable polynomial."""
    d = differentiate(poly, axis)
    if d.is_zero():
        return np.array([])
    deg = max((t.ex if axis == "x" else t.ey) for t in d.terms)
    coeffs = np.zeros(deg + 1)
    for t in d.terms:
        e = t.ex if axis == "x" else t.ey
        coeffs[deg - e] = t.float_coeff()
    roots = np.roots(coeffs)
    keep = np.abs(roots.imag) <= 1e-9 * (1.0 + np.abs(roots.real))
    return np.sort(roots[keep].real)


def _monotone_edge(
    poly: SparsePoly2,
    axis: str,
    start: float,
    direction: float,
    target: float,
) -> float:
    """First coordinate past start, in direction, where poly reaches target.

    The search stays on the monotone piece of the polynomial adjacent to
    start: the nearest critical point beyond start bounds the bracket when
    one exists, and the piece runs to infinity otherwise.  Either way no
    crossing can be skipped, however thin the margin, which is what the
    tracer relies on for levels close to a separatrix.
    """
    if axis == "x":
        def g(v: float) -> float:
            return evaluate(poly, v, 0.0) - target
    else:
        def g(v: float) -> float:
            return evaluate(poly, 0.0, v) - target

    if g(start) >= 0.0:
        raise GeometryError("edge search starts outside the level")
    crits = _critical_points(poly, axis)
    tol = 1e-9 * (1.0 + abs(start))
    if direction > 0:
        ahead = crits[crits > start + tol]
        end = float(ahead[0]) if len(ahead) else None
    else:
        ahead = crits[crits < start - tol]
        end = float(ahead[-1]) if len(ahead) else None
    if end is not None:
        if g(end) < 0.0:
            raise GeometryError(
                "level spills past the critical point adjacent to the center"
            )
        a, b = (start, end) if direction > 0 else (end, start)
        return float(brentq(g, a, b, xtol=1e-15, rtol=9e-16))
    step = 0.25 * (1.0 + abs(start))
    prev, cur = start, start + direction * step
    for _ in range(200):
        if g(cur) >= 0.0:
            a, b = (prev, cur) if direction > 0 else (cur, prev)
            return float(brentq(g, a, b, xtol=1e-15, rtol=9e-16))
        step *= 1.25
        prev, cur = cur, cur + direction * step
    raise GeometryError("no level crossing in the search direction")


def _level_box(ann: PeriodAnnulus, h: float) -> tuple[float, float, float, float]:
    """Exact bounding box (xl, xr, yl, yr) of the level oval at h.

    On the oval F(x) <= h - U(cy) and U(y) <= h - F(cx), since the center
    minimizes each part over the box.  H >= h holds on the whole box
    boundary: an x-face has F(x) = h - U(cy), hence
    H = h + (U(y) - U(cy)) >= h, and likewise for y-faces.  Every ray from
    the center therefore crosses the level set before leaving the box.
    """
    F, U = _separable_parts(ann.hamiltonian)
    cx, cy = ann.center
    tF = h - evaluate(U, 0.0, cy)
    tU = h - evaluate(F, cx, 0.0)
    xl = _monotone_edge(F, "x", cx, -1.0, tF)
    xr = _monotone_edge(F, "x", cx, +1.0, tF)
    yl = _monotone_edge(U, "y", cy, -1.0, tU)
    yr = _monotone_edge(U, "y", cy, +1.0, tU)
    return xl, xr, yl, yr


def _trace_ring(ann: PeriodAnnulus, h: float, n: int) -> np.ndarray:
    """Ray-shoot the level oval at h; returns (n, 2) CCW vertices.

    Rays leave the center at uniform angles, each clipped to its exit from
    the level's bounding box, where H >= h is guaranteed; lockstep
    bisection between the center and the exit then cannot miss.  A linear
    scan between each crossing and its box exit watches for the level
    dipping back below h, which would mean the oval is not star-shaped
    about the center.
    """
    cx, cy = ann.center
    H = ann.hamiltonian
    xl, xr, yl, yr = _level_box(ann, h)
    theta = 2.0 * math.pi * np.arange(n) / n
    ux, uy = np.cos(theta), np.sin(theta)

    def h_at(ts: np.ndarray) -> np.ndarray:
        return evaluate_array(H, cx + ts * ux, cy + ts * uy)

    # Slab exit distances; the center is strictly inside the box, so every
    # ray has a finite positive exit along at least one axis.
    with np.errstate(divide="ignore"):
        tx = np.where(
            ux > 0, (xr - cx) / ux, np.where(ux < 0, (xl - cx) / ux, np.inf)
        )
        ty = np.where(
            uy > 0, (yr - cy) / uy, np.where(uy < 0, (yl - cy) / uy, np.inf)
        )
    t_exit = np.minimum(tx, ty)

    t_lo = np.zeros(n)
    t_hi = t_exit.copy()
    for _ in range(100):
        mid = 0.5 * (t_lo + t_hi)
        outside = h_at(mid) >= h
        t_hi = np.where(outside, mid, t_hi)
        t_lo = np.where(outside, t_lo, mid)
        if np.all(t_hi - t_lo <= RAY_TOL * (1.0 + t_hi)):
            break
    t = 0.5 * (t_lo + t_hi)

    # Star-shape guard: the level must stay >= h between the crossing and
    # the box exit, else some ray meets the level set more than once.
    dip_tol = 1e-7 * (1.0 + abs(h))
    gap = t_exit - t
    for k in range(1, 33):
        vals = h_at(t + gap * (k / 33.0))
        if np.any(vals < h - dip_tol):
            raise NotStarShaped("level set crosses a ray more than once")

    pts = np.column_stack((cx + t * ux, cy + t * uy))
    resid = np.max(np.abs(h_at(t) - h))
    if resid > LEVEL_FIDELITY * max(1.0, abs(h)):
        raise GeometryError(f"level fidelity violated: residual {resid:g}")
    return pts


def _polygon_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _make_oval(ann: PeriodAnnulus, h: float, pts: np.ndarray) -> Oval:
    area = _polygon_area(pts)
    if area <= 0:
        raise GeometryError("traced polyline is not counterclockwise")
    if abs(ann.center[1]) > 0.5:
        # both |y| extremes lie on the vertical ray through the center
        # (the only zero of H_x inside the oval's x range), so solve them
        # exactly instead of taking the vertex extremes
        inner = abs(_axis_crossing(ann, h, toward_axis=True))
        outer = abs(_axis_crossing(ann, h, toward_axis=False))
        alpha, b_min = max(inner, outer), min(inner, outer)
    else:
        ay = np.abs(pts[:, 1])
        alpha, b_min = float(np.max(ay)), float(np.min(ay))
    return Oval(
        annulus=ann,
        h=h,
        points=pts,
        alpha=alpha,
        b_min=b_min,
        area=area,
    )


def trace_oval(
    ann: PeriodAnnulus,
    h: float,
    n_vertices: int | None = None,
) -> Oval:
    """Trace the closed level oval of H at level h around the center.

    With n_vertices=None the vertex count starts at 1024 and doubles until
    the Richardson-extrapolated polygon area settles to one part in 1e10.
    """
    if not (ann.h_center < h <= ann.level_cap):
        raise LevelOutOfRange(
            f"level {h} outside ({ann.h_center}, {ann.level_cap}]"
        )
    if n_vertices is not None:
        return _make_oval(ann, h, _trace_ring(ann, h, n_vertices))

    n = 1024
    pts = _trace_ring(ann, h, n)
    area_prev = _polygon_area(pts)
    ext_prev = None
    while n < MAX_VERTICES:
        n *= 2
        pts = _trace_ring(ann, h, n)
        area = _polygon_area(pts)
        ext = area + (area - area_prev) / 3.0
        if ext_prev is not None and abs(ext - ext_prev) <= AREA_STOP_REL * abs(ext):
            break
        area_prev, ext_prev = area, ext
    return _make_oval(ann, h, pts)


def find_annulus(
    H: SparsePoly2,
    center: tuple[float, float],
    saddles: Sequence[SingularityReport],
) -> PeriodAnnulus:
    """The period annulus around a center that is a local minimum of H.

    The separatrix level is the smallest saddle value above the center
    value whose just-inside oval traces successfully; saddle levels that
    fail the probe are skipped.  Raises NoBoundingSaddle when no candidate
    level works.
    """
    cx, cy = center
    h_center = evaluate(H, cx, cy)
    hxx = evaluate(differentiate(differentiate(H, "x"), "x"), cx, cy)
    hyy = evaluate(differentiate(differentiate(H, "y"), "y"), cx, cy)
    if hxx <= 0 or hyy <= 0:
        raise GeometryError(
            "annulus tracing supports centers that are local minima of H"
        )
    orient = _orientation_sign(H, center)

    levels = sorted(
        {
            evaluate(H, s.point[0], s.point[1])
            for s in saddles
            if s.kind == "saddle"
        }
    )
    scale = max(abs(h_center), 1.0)
    for lvl in levels:
        if lvl <= h_center + 1e-12 * scale:
            continue
        candidate = PeriodAnnulus(
            center=(cx, cy),
            h_center=h_center,
            h_sep=lvl,
            orientation_sign=orient,
            hamiltonian=H,
            hxx=hxx,
            hyy=hyy,
        )
        try:
            trace_oval(candidate, candidate.level_cap, n_vertices=256)
        except GeometryError:
            continue
        return candidate
    raise NoBoundingSaddle(f"no bounding saddle level above h = {h_center}")


def _axis_crossing(ann: PeriodAnnulus, h: float, toward_axis: bool) -> float:
    """Signed y where the level oval meets the line x = x_center.

    One crossing on each side of the center; toward_axis picks the one
    between the center and the x-axis.  The crossing is a monotone root
    solve on the y-part of the Hamiltonian, so it cannot be skipped even
    when the level runs close to a separatrix.
    """
    F, U = _separable_parts(ann.hamiltonian)
    cx, cy = ann.center
    tU = h - evaluate(F, cx, 0.0)
    away = 1.0 if cy >= 0 else -1.0
    direction = -away if toward_axis else away
    return _monotone_edge(U, "y", cy, direction, tU)


def axis_amplitude(ann: PeriodAnnulus, h: float) -> float:
    """max |y| of the level oval, via the vertical ray through the center.

    For the separable Hamiltonians used here the |y| maximum of an oval
    sits directly above (or below, for lower-line centers) the center, so a
    single-ray root solve gives the amplitude exactly.
    """
    return abs(_axis_crossing(ann, h, toward_axis=False))


def oval_by_amplitude(
    ann: PeriodAnnulus,
    target: float,
    tol: float = 1e-9,
    n_vertices: int | None = None,
) -> Oval:
    """The oval whose amplitude max |y| equals target, to within tol.

    Monotone bisection on the level: amplitude grows strictly with h on
    these annuli (checked on the bracket).  AmplitudeUnreachable reports
    the attainable range when the target lies outside it.
    """
    alpha_min = abs(ann.center[1])
    cap = ann.level_cap
    alpha_max = axis_amplitude(ann, cap)
    if not (alpha_min + tol < target <= alpha_max):
        raise AmplitudeUnreachable(
            f"amplitude {target} outside reachable range "
            f"({alpha_min}, {alpha_max}]",
            reachable=(alpha_min, alpha_max),
        )
    h_lo = ann.h_center + 1e-14 * max(abs(ann.h_center), 1.0)
    h_hi = cap
    a_lo = axis_amplitude(ann, h_lo)
    if not a_lo < alpha_max:
        raise GeometryError("amplitude failed to increase across the annulus")
    h_star = None
    for _ in range(200):
        h_mid = 0.5 * (h_lo + h_hi)
        a_mid = axis_amplitude(ann, h_mid)
        if abs(a_mid - target) <= 0.25 * tol:
            h_star = h_mid  # trace this exact level, not the bracket midpoint
            break
        if a_mid < target:
            h_lo = h_mid
        else:
            h_hi = h_mid
    if h_star is None:
        h_star = 0.5 * (h_lo + h_hi)
    oval = trace_oval(ann, h_star, n_vertices=n_vertices)
    if abs(oval.alpha - target) > tol:
        raise GeometryError(
            f"amplitude polish missed target: {oval.alpha} vs {target}"
        )
    return oval


def shrink_to_xwidth(ann: PeriodAnnulus, xbound: LogValue) -> Oval:
    """An oval around an x = 0 center whose max |x| obeys the given bound.

    The level offset comes from the local quadratic model
    h - h_center = hxx * w**2 / 2 (with headroom), then the traced polyline
    is checked against the bound and the offset halved until it passes.
    DegenerateLevel signals that the bound is below what double precision
    can realize; callers then fall back to the box-model VirtualOval and
    the analytic sign certificate.
    """
    cx = ann.center[0]
    if abs(cx) > 1e-9:
        raise ValueError("shrink_to_xwidth requires a center on the line x = 0")
    if xbound.sign <= 0:
        raise ValueError("xbound must be a positive LogValue")

    offset_floor = max(abs(ann.h_center), 1e-30) * 1e-13
    w_log = xbound.logmag + math.log(0.5)  # aim for half the bound
    off_log = math.log(ann.hxx / 2.0) + 2.0 * w_log
    if off_log < math.log(offset_floor):
        raise DegenerateLevel(
            f"level offset exp({off_log:.3g}) below representable floor"
        )
    offset = math.exp(off_log)
    bound = xbound.to_float()
    for _ in range(60):
        h = ann.h_center + offset
        if h <= ann.h_center or offset < offset_floor:
            raise DegenerateLevel("level offset underflowed while polishing")
        oval = trace_oval(ann, h)
        if oval.max_abs_x() <= bound:
            return oval
        offset *= 0.25
    raise DegenerateLevel("could not realize the requested x-width")
