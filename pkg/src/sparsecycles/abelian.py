"""First-order displacement integrals over ovals, in three strengths.

line_integral is the plain double-precision route for tame integrands.
green_integral evaluates the same contour integral term by term in the log
domain with sign-grouped compensated accumulation, so single terms may
exceed float range pointwise while the integral stays finite.  When even
that cancels catastrophically, sign_certificate settles just the sign by a
dominance argument over a box enclosing the region: one term's magnitude
beats the combined opposition either pointwise (after factoring out the
shared power of x) or in integrated mass against an inscribed rectangle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Oval, VirtualOval
from .polyalg import (
    LogValue,
    SparsePoly2,
    differentiate,
    evaluate_array,
    log_abs,
    signed_log_sum,
)

__all__ = [
    "CatastrophicCancellation",
    "IntegralValue",
    "RegionBox",
    "SignOutcome",
    "green_integral",
    "line_integral",
    "region_box",
    "sign_certificate",
]

CANCEL_DIGITS = 13.0  # raise once fewer than ~3 of 16 digits survive


class SignOutcome(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1
    INCONCLUSIVE = 0

    @property
    def sign(self) -> int:
        return self.value


class CatastrophicCancellation(ArithmeticError):
    def __init__(self, msg: str, pos_logmag: float, neg_logmag: float, err: float):
        super().__init__(msg)
        self.pos_logmag = pos_logmag
        self.neg_logmag = neg_logmag
        self.err_estimate = err


@dataclass(frozen=True)
class IntegralValue:
    """A contour-integral value with an error estimate and log-domain form.

    value may be +-inf when the true magnitude exceeds float range; log_form
    is then the usable representation.
    """

    value: float
    err_estimate: float
    log_form: LogValue

    @property
    def sign(self) -> int:
        return self.log_form.sign

    def trustworthy_sign(self) -> bool:
        """Sign is resolved: the error estimate stays below the magnitude."""
        if self.log_form.sign == 0:
            return False
        if self.err_estimate == 0.0:
            return True
        return math.log(self.err_estimate) < self.log_form.logmag + math.log(0.5)


def _centered_weights(col: np.ndarray) -> np.ndarray:
    # trapezoid rule on a closed ring: vertex i weighted by half the span
    # of its two neighbors
    return 0.5 * (np.roll(col, -1) - np.roll(col, 1))


def _line_value(f: SparsePoly2, g: SparsePoly2, pts: np.ndarray) -> float:
    xs, ys = pts[:, 0], pts[:, 1]
    total = 0.0
    if not f.is_zero():
        wy = _centered_weights(ys)
        total += math.fsum((evaluate_array(f, xs, ys) * wy).tolist())
    if not g.is_zero():
        wx = _centered_weights(xs)
        total -= math.fsum((evaluate_array(g, xs, ys) * wx).tolist())
    return total


def line_integral(f: SparsePoly2, g: SparsePoly2, oval: Oval) -> IntegralValue:
    """Trapezoidal ∮ f dy − g dx over the oval's polyline, plain doubles.

    The error estimate compares against the half-resolution polyline.
    Suitable while coefficients and pointwise term values stay inside float
    range; green_integral covers the rest.
    """
    full = _line_value(f, g, oval.points)
    half = _line_value(f, g, oval.points[::2])
    err = abs(full - half) / 3.0
    return IntegralValue(
        value=full, err_estimate=err, log_form=LogValue.from_number(full)
    )


def _green_groups(R: SparsePoly2, pts: np.ndarray) -> tuple[float, float, float]:
    """Signed log-domain accumulation of ∮ R dy on one polyline.

    Returns (scale, pos, neg): the positive and negative contribution
    groups, each as a compensated sum scaled by e^scale.  Terms without x
    dependence integrate to zero over a closed loop and are dropped
    exactly.
    """
    xs, ys = pts[:, 0], pts[:, 1]
    wy = _centered_weights(ys)
    with np.errstate(divide="ignore"):
        lx = np.log(np.abs(xs))
        ly = np.log(np.abs(ys))
        lw = np.log(np.abs(wy))
    sx = np.sign(xs)
    sy = np.sign(ys)
    sw = np.sign(wy)

    logs = []
    signs = []
    for t in R.terms:
        if t.ex == 0:
            continue  # pure-y terms: exact zero over a closed loop
        c_log = log_abs(t.coeff)
        c_sign = 1 if t.coeff > 0 else -1
        lt = c_log + t.ex * lx + t.ey * ly + lw
        st = c_sign * np.where(sx == 0, 0, sx**t.ex)
        if t.ey % 2:
            st = st * sy
        st = st * sw
        logs.append(lt)
        signs.append(st)
    if not logs:
        return 0.0, 0.0, 0.0

    all_logs = np.concatenate(logs)
    all_signs = np.concatenate(signs)
    live = (all_signs != 0) & np.isfinite(all_logs)
    if not live.any():
        return 0.0, 0.0, 0.0
    scale = float(np.max(all_logs[live]))
    scaled = np.where(live, np.exp(all_logs - scale), 0.0)
    pos = math.fsum(scaled[live & (all_signs > 0)].tolist())
    neg = math.fsum(scaled[live & (all_signs < 0)].tolist())
    return scale, pos, neg


def _combine(scale: float, pos: float, neg: float) -> LogValue:
    diff = pos - neg
    if diff == 0.0 or (pos == 0.0 and neg == 0.0):
        return LogValue.zero()
    return LogValue(sign=1 if diff > 0 else -1, logmag=scale + math.log(abs(diff)))


def green_integral(R: SparsePoly2, oval: Oval) -> IntegralValue:
    """∮ R dy in the log domain with sign-grouped compensated summation.

    Equals the area integral of ∂R/∂x over the enclosed region for the
    positively oriented ovals produced by the geometry module.  Raises
    CatastrophicCancellation when the positive and negative groups agree
    through all but fewer than three decimal digits and the half-resolution
    error estimate swallows the value; callers then fall back to
    sign_certificate.
    """
    scale, pos, neg = _green_groups(R, oval.points)
    total = _combine(scale, pos, neg)
    scale_h, pos_h, neg_h = _green_groups(R, oval.points[::2])
    total_h = _combine(scale_h, pos_h, neg_h)
    diff, _, _ = _signed_pair_sum(total, -total_h)
    err_log = diff.logmag - math.log(3.0) if diff.sign != 0 else -math.inf
    err = math.exp(err_log) if err_log < 700 else math.inf

    value = total.to_float()
    if pos > 0.0 and neg > 0.0:
        big = scale + math.log(max(pos, neg))
        if total.sign == 0:
            lost = math.inf
        else:
            lost = (big - total.logmag) / math.log(10.0)
        if lost >= CANCEL_DIGITS and (
            total.sign == 0 or err_log >= total.logmag
        ):
            raise CatastrophicCancellation(
                f"sign groups cancel through {lost:.1f} digits",
                pos_logmag=scale + math.log(pos),
                neg_logmag=scale + math.log(neg),
                err=err,
            )
    return IntegralValue(value=value, err_estimate=err, log_form=total)


def _signed_pair_sum(a: LogValue, b: LogValue) -> tuple[LogValue, float, float]:
    return signed_log_sum([a, b])


@dataclass(frozen=True)
class RegionBox:
    """Box description of an oval's enclosed region for certificates.

    Outer bounds are conservative (slightly padded); the inner rectangle
    [ix_lo, ix_hi] x (height iy_span, y of one sign) is verified to sit
    inside the region and carries lower bounds for integrated mass.  All
    extents are LogValues because inner-oval widths routinely fall below
    float range.
    """

    x_absmin: LogValue
    x_absmax: LogValue
    x_sign: int  # 0 when the x-range straddles 0
    y_absmin: LogValue
    y_absmax: LogValue
    y_sign: int
    area_ub: LogValue
    ix_lo: LogValue | None = None
    ix_hi: LogValue | None = None
    iy_span: LogValue | None = None

    @property
    def has_inner(self) -> bool:
        return self.ix_lo is not None


def _interval_to_abs(lo: float, hi: float) -> tuple[LogValue, LogValue, int]:
    pad = 1e-3 * (hi - lo) + 1e-15 * max(abs(lo), abs(hi))
    lo, hi = lo - pad, hi + pad
    amax = LogValue.from_number(max(abs(lo), abs(hi)))
    if lo > 0:
        return LogValue.from_number(lo), amax, 1
    if hi < 0:
        return LogValue.from_number(-hi), amax, -1
    return LogValue.zero(), amax, 0


def _inner_rect_of_oval(oval: Oval) -> tuple[float, float, float, float] | None:
    """An axis-aligned rectangle inside the oval, from diagonal vertices.

    Candidate half-widths come from the polyline vertices nearest the four
    diagonal ray directions; the rectangle's boundary is then sampled
    against the level value and shrunk until it verifies.
    """
    ann = oval.annulus
    cx, cy = ann.center
    n = oval.n_vertices
    pts = oval.points
    idx = [n // 8, 3 * n // 8, 5 * n // 8, 7 * n // 8]
    rx = min(abs(pts[i, 0] - cx) for i in idx) * 0.95
    ry = min(abs(pts[i, 1] - cy) for i in idx) * 0.95
    if rx <= 0 or ry <= 0:
        return None
    H = ann.hamiltonian
    for _ in range(10):
        us = np.linspace(-1.0, 1.0, 9)
        bx = np.concatenate([us, us, np.full(9, -1.0), np.full(9, 1.0)])
        by = np.concatenate([np.full(9, -1.0), np.full(9, 1.0), us, us])
        vals = evaluate_array(H, cx + rx * bx, cy + ry * by)
        if np.all(vals < oval.h):
            return cx - rx, cx + rx, cy - ry, cy + ry
        rx *= 0.7
        ry *= 0.7
    return None


def region_box(region: Oval | VirtualOval) -> RegionBox:
    """Conservative box data for a traced oval or a virtual (box-model) one."""
    if isinstance(region, VirtualOval):
        wx = region.x_halfwidth
        wy = region.y_halfwidth
        cy = region.annulus.center[1]
        wyf = wy.to_float()
        y_lo, y_hi = cy - max(wyf, 1e-15 * abs(cy)), cy + max(wyf, 1e-15 * abs(cy))
        y_absmin, y_absmax, y_sign = _interval_to_abs(y_lo, y_hi)
        area = LogValue.from_number(4.0) * wx * wy
        half = wx.scaled(0.5)
        return RegionBox(
            x_absmin=LogValue.zero(),
            x_absmax=wx,
            x_sign=0,
            y_absmin=y_absmin,
            y_absmax=y_absmax,
            y_sign=y_sign,
            area_ub=area,
            ix_lo=-half,
            ix_hi=half,
            iy_span=wy,
        )

    x_lo, x_hi = region.x_range
    y_lo, y_hi = region.y_range
    x_absmin, x_absmax, x_sign = _interval_to_abs(x_lo, x_hi)
    y_absmin, y_absmax, y_sign = _interval_to_abs(y_lo, y_hi)
    pad = 1.002
    area = LogValue.from_number(pad * (x_hi - x_lo) * (y_hi - y_lo) + 1e-300)
    rect = _inner_rect_of_oval(region)
    if rect is None:
        ix_lo = ix_hi = iy_span = None
    else:
        rx_lo, rx_hi, ry_lo, ry_hi = rect
        ix_lo = LogValue.from_number(rx_lo)
        ix_hi = LogValue.from_number(rx_hi)
        iy_span = LogValue.from_number(ry_hi - ry_lo)
    return RegionBox(
        x_absmin=x_absmin,
        x_absmax=x_absmax,
        x_sign=x_sign,
        y_absmin=y_absmin,
        y_absmax=y_absmax,
        y_sign=y_sign,
        area_ub=area,
        ix_lo=ix_lo,
        ix_hi=ix_hi,
        iy_span=iy_span,
    )


def _term_sign_on_box(coeff_sign: int, ex: int, ey: int, box: RegionBox) -> int:
    """Constant sign of c x^ex y^ey over the box, or 0 when it varies."""
    s = coeff_sign
    if ex % 2:
        if box.x_sign == 0:
            return 0
        s *= box.x_sign
    if ey % 2:
        if box.y_sign == 0:
            return 0
        s *= box.y_sign
    return s


def _term_max(c_log: float, ex: int, ey: int, box: RegionBox) -> LogValue:
    return LogValue(1, c_log) * box.x_absmax**ex * box.y_absmax**ey


def _term_min(c_log: float, ex: int, ey: int, box: RegionBox) -> LogValue:
    return LogValue(1, c_log) * box.x_absmin**ex * box.y_absmin**ey


def _moment_lower(box: RegionBox, e: int) -> LogValue | None:
    """Lower bound for ∬_region x^e dA via the inscribed rectangle (e even)."""
    if not box.has_inner:
        return None
    hi_pow = box.ix_hi ** (e + 1)
    lo_pow = box.ix_lo ** (e + 1)
    diff, _, _ = signed_log_sum([hi_pow, -lo_pow])
    if diff.sign <= 0:
        return None
    return diff.scaled(1.0 / (e + 1)) * box.iy_span


def sign_certificate(
    R: SparsePoly2, region: Oval | VirtualOval
) -> SignOutcome:
    """Certified sign of ∬ ∂R/∂x over the region, or Inconclusive.

    Tries each derivative term as the dominant one.  Terms sharing the
    dominant's x-power or more are compared after factoring that power out:
    the dominant's box-minimum must exceed the opposing box-maxima summed
    (pointwise dominance of the factored bracket).  Terms with smaller
    x-power cannot be beaten pointwise near x = 0, so their total mass
    (box maximum times region-area upper bound) must instead fall below the
    dominant bracket's margin times an inscribed-rectangle lower bound of
    ∬ x^e dA.  Every comparison runs in LogValue arithmetic.
    """
    D = differentiate(R, "x")
    if D.is_zero():
        return SignOutcome.INCONCLUSIVE
    box = region_box(region)

    terms = []
    for t in D.terms:
        c = t.coeff
        c_sign = 1 if (c > 0) else -1
        terms.append((c_sign, log_abs(c), t.ex, t.ey))

    for d_sign, d_log, d_ex, d_ey in terms:
        s_d = _term_sign_on_box(d_sign, d_ex, d_ey, box)
        if s_d == 0:
            continue
        # Factored bracket: dominant minus everything with >= its x-power.
        entries = [_term_min(d_log, 0, d_ey, box)]
        ok = True
        rem: list[LogValue] = []
        for c_sign, c_log, ex, ey in terms:
            if (c_sign, c_log, ex, ey) == (d_sign, d_log, d_ex, d_ey):
                continue
            if ex >= d_ex:
                s_t = _term_sign_on_box(c_sign, ex, ey, box)
                if s_t == s_d:
                    continue  # helping term: dropping it is conservative
                entries.append(-_term_max(c_log, ex - d_ex, ey, box))
            else:
                rem.append(_term_max(c_log, ex, ey, box))
        margin, _, _ = signed_log_sum(entries)
        if margin.sign <= 0:
            continue
        if not rem:
            return SignOutcome(s_d)
        moment = _moment_lower(box, d_ex)
        if moment is None:
            continue
        core = margin * moment
        rem_total, _, _ = signed_log_sum(rem)
        rem_mass = rem_total * box.area_ub
        if rem_mass.mag_lt(core):
            return SignOutcome(s_d)
    return SignOutcome.INCONCLUSIVE
