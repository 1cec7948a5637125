"""Nested-oval systems whose alternating integral signs certify cycles.

Pipeline: discover the period annuli of a chain field, spread amplitude
targets across the thinnest annulus, trace one oval per target in every
annulus, then grow the perturbation one stage at a time.  Stage k picks the
exponent m_k by a doubling search until the integral signs over ovals
0..k alternate in every annulus.  For even r the two annuli centered on
x = 0 receive extra ovals shrunk toward the center, whose signs come from
the analytic dominance certificate because quadrature cancels there.  Each
adjacent sign change in the final table forces one limit cycle for small
perturbation strength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .abelian import (
    CatastrophicCancellation,
    SignOutcome,
    green_integral,
    sign_certificate,
)
from .families import (
    PerturbationSpec,
    PlanarField,
    base_field,
    classify_singularities,
    hamiltonian_of,
    nested_cycle_count,
)
from .geometry import (
    DegenerateLevel,
    GeometryError,
    Oval,
    PeriodAnnulus,
    VirtualOval,
    axis_amplitude,
    find_annulus,
    oval_by_amplitude,
    shrink_to_xwidth,
)
from .polyalg import LogValue, Monomial2, SparsePoly2

__all__ = [
    "AnnulusOvals",
    "CancellationUnresolved",
    "CertificateFailed",
    "CycleCertificate",
    "ExponentCapExceeded",
    "InfeasibleThresholds",
    "OvalSystem",
    "TableEntry",
    "attach_inner_ovals",
    "build_outer_system",
    "certify",
    "choose_thresholds",
    "discover_annuli",
    "select_exponents",
]

# stage exponent demands grow geometrically with the stage index and the
# annulus x-offset, peaking in the low tens of thousands at default
# resolutions; the cap sits above that so reaching it signals a bug
DEFAULT_M_CAP = 32768
THRESHOLD_GRID = 10**6  # amplitude targets snapped to exact rationals


class InfeasibleThresholds(RuntimeError):
    pass


class ExponentCapExceeded(RuntimeError):
    def __init__(self, msg: str, stage: int, condition: str):
        super().__init__(msg)
        self.stage = stage
        self.condition = condition


class CancellationUnresolved(RuntimeError):
    pass


class CertificateFailed(RuntimeError):
    def __init__(self, msg: str, stage: int):
        super().__init__(msg)
        self.stage = stage


@dataclass(frozen=True)
class AnnulusOvals:
    """One annulus with its nested ovals.

    outer holds the amplitude-targeted ovals, smallest first; inner (only
    on x = 0 annuli of even-r fields) holds the shrunk ovals ordered
    outermost first, so inner[k-1] corresponds to shrink stage k.
    """

    index: int  # 1-based position in the circular center enumeration
    annulus: PeriodAnnulus
    outer: tuple[Oval, ...]
    inner: tuple[Oval | VirtualOval, ...] = ()

    @property
    def center(self) -> tuple[float, float]:
        return self.annulus.center

    @property
    def on_x_axis_line(self) -> bool:
        return abs(self.annulus.center[0]) < 1e-9


@dataclass(frozen=True)
class OvalSystem:
    n: int
    r: int
    annuli: tuple[AnnulusOvals, ...]
    thresholds: tuple[Fraction, ...]  # a_1 < ... < a_n
    targets: tuple[Fraction, ...]  # t_0 < ... < t_n

    def interleaving_holds(self) -> bool:
        for ann in self.annuli:
            for i, a_i in enumerate(self.thresholds, start=1):
                if not (ann.outer[i - 1].alpha < a_i < ann.outer[i].alpha):
                    return False
        return True


@dataclass(frozen=True)
class TableEntry:
    """One signed integral in a certificate's per-annulus sequence."""

    position: int  # -n..-1 inner stages, 0..n outer ovals
    sign: int
    method: str  # "quadrature" or "certificate"
    h: float | None
    alpha: float | None
    virtual: bool
    value: float | None = None
    err: float | None = None


@dataclass(frozen=True)
class AnnulusTable:
    index: int
    center: tuple[float, float]
    entries: tuple[TableEntry, ...]

    def signs(self) -> tuple[int, ...]:
        return tuple(e.sign for e in self.entries)

    def sign_changes(self) -> int:
        s = self.signs()
        return sum(1 for a, b in zip(s, s[1:]) if a * b < 0)


@dataclass(frozen=True)
class CycleCertificate:
    n: int
    r: int
    perturbation: PerturbationSpec
    annuli: tuple[AnnulusTable, ...]
    count: int

    def method_census(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for tab in self.annuli:
            for e in tab.entries:
                out[e.method] = out.get(e.method, 0) + 1
        return out


def discover_annuli(
    r: int,
) -> tuple[PlanarField, SparsePoly2, tuple[PeriodAnnulus, ...]]:
    """Field, Hamiltonian, and the 2r+2 period annuli around |y| = 1 centers.

    Annuli are ordered circularly: lower-line centers by ascending x, then
    upper-line centers by descending x, so for even r the two x = 0 annuli
    sit at positions r/2 + 1 and 3r/2 + 2 (1-based).
    """
    field = base_field(r)
    H = hamiltonian_of(field)
    box = (-r - 0.8, r + 0.8, -1.6, 1.6)
    sings = classify_singularities(field, box)
    saddles = [s for s in sings if s.kind == "saddle"]
    centers = [
        s
        for s in sings
        if s.kind == "center" and abs(abs(s.point[1]) - 1.0) < 1e-6
    ]
    if len(centers) != 2 * r + 2:
        raise GeometryError(
            f"expected {2 * r + 2} centers on the lines y = +-1, "
            f"found {len(centers)}"
        )
    lower = sorted(
        (c for c in centers if c.point[1] < 0), key=lambda c: c.point[0]
    )
    upper = sorted(
        (c for c in centers if c.point[1] > 0), key=lambda c: -c.point[0]
    )
    annuli = tuple(
        find_annulus(H, c.point, saddles) for c in lower + upper
    )
    return field, H, annuli


def choose_thresholds(
    annuli: list[PeriodAnnulus] | tuple[PeriodAnnulus, ...], n: int
) -> tuple[list[Fraction], list[Fraction]]:
    """Amplitude thresholds a_1..a_n and targets t_0..t_n, as exact rationals.

    A is the smallest amplitude supremum over the annuli (probed at the
    level cap, then snapped down to the rational grid); targets divide
    [1, A] evenly with one spare gap at each end, and each threshold is the
    midpoint of its neighboring targets.  Exact rationals keep the
    perturbation coefficients 1/a_k^{2 m_k} exactly representable.
    """
    if n < 1:
        raise ValueError("need at least one nesting stage")

    sup = min(axis_amplitude(ann, ann.level_cap) for ann in annuli)
    A = Fraction(math.floor(sup * THRESHOLD_GRID), THRESHOLD_GRID)
    if A <= 1 + Fraction(n + 2, 10**4):
        raise InfeasibleThresholds(
            f"amplitude headroom {float(A):.6f} cannot hold {n} nested gaps"
        )
    t = [1 + Fraction(i + 1) * (A - 1) / (n + 2) for i in range(n + 1)]
    a = [(t[i - 1] + t[i]) / 2 for i in range(1, n + 1)]
    return a, t


def build_outer_system(
    r: int,
    n: int,
    annuli: tuple[PeriodAnnulus, ...],
    a: list[Fraction],
    t: list[Fraction],
) -> OvalSystem:
    """Trace the amplitude-targeted ovals and verify interleaving."""
    sets = []
    for idx, ann in enumerate(annuli, start=1):
        outer = tuple(oval_by_amplitude(ann, float(ti)) for ti in t)
        sets.append(AnnulusOvals(index=idx, annulus=ann, outer=outer))
    system = OvalSystem(
        n=n, r=r, annuli=tuple(sets), thresholds=tuple(a), targets=tuple(t)
    )
    if not system.interleaving_holds():
        raise InfeasibleThresholds(
            "amplitude interleaving failed on the traced ovals"
        )
    return system


def _partial_perturbation(
    n: int, a: list[Fraction], m: list[int], k: int
) -> SparsePoly2:
    """Stages 0..k of the perturbation whose final stage count is n.

    Term j carries x^(2(n-j)+1) (y/a_j)^(2 m_j) with sign (-1)^j; a_0 = 1
    and m_0 = 0 give the pure leading term x^(2n+1).
    """
    terms = []
    for j in range(k + 1):
        coeff = Fraction((-1) ** j) / (a[j] ** (2 * m[j]))
        terms.append(Monomial2(coeff, 2 * (n - j) + 1, 2 * m[j]))
    return SparsePoly2.from_terms(terms)


def _resolve_sign(
    R: SparsePoly2, region: Oval | VirtualOval
) -> tuple[int | None, str, float | None, float | None]:
    """Sign of the integral over one region: quadrature first, then the
    certificate; (None, "unresolved", ...) when neither settles it."""
    if isinstance(region, Oval):
        try:
            iv = green_integral(R, region)
            if iv.trustworthy_sign():
                return iv.sign, "quadrature", iv.value, iv.err_estimate
        except CatastrophicCancellation:
            pass
    out = sign_certificate(R, region)
    if out is not SignOutcome.INCONCLUSIVE:
        return out.sign, "certificate", None, None
    return None, "unresolved", None, None


def select_exponents(
    r: int,
    n: int,
    system: OvalSystem,
    m_cap: int = DEFAULT_M_CAP,
) -> PerturbationSpec:
    """Doubling search for exponents that alternate the integral signs.

    Stage k tries m_k = m_{k-1}+1, then doubles, until the integrals of the
    stage-k perturbation over ovals 0..k carry signs (+,-,+,...) in every
    annulus.  Deterministic: same system in, same spec out.
    """
    a_full = [Fraction(1)] + list(system.thresholds)
    m = [0]
    for k in range(1, n + 1):
        candidate = m[k - 1] + 1
        last_failure = "no candidate tried"
        while True:
            if candidate > m_cap:
                raise ExponentCapExceeded(
                    f"stage {k} exceeded exponent cap {m_cap}",
                    stage=k,
                    condition=last_failure,
                )
            R_k = _partial_perturbation(n, a_full, m + [candidate], k)
            failure = None
            for ann in system.annuli:
                for i in range(k + 1):
                    want = (-1) ** i
                    got, how, _, _ = _resolve_sign(R_k, ann.outer[i])
                    if got != want:
                        failure = (
                            f"annulus {ann.index}, oval {i}: wanted "
                            f"{want:+d}, got {got} ({how}) at m_{k}={candidate}"
                        )
                        break
                if failure:
                    break
            if failure is None:
                break
            last_failure = failure
            candidate *= 2
        m.append(candidate)
    return PerturbationSpec(n=n, a=tuple(a_full), m=tuple(m))


def _stage_xwidth_log(
    n: int,
    k: int,
    spec: PerturbationSpec,
    b0: float,
) -> float:
    """log of the stage-k x-halfwidth ceiling from term dominance.

    Comparing the stage-k derivative term against the stage-(k-1) one after
    factoring x^(2(n-k)) gives x^2 < ratio * (y/a_k)^(2m_k) (a_{k-1}/y)^(2m_{k-1})
    with ratio = (2(n-k)+1)/(2(n-k)+3), minimized over the y-range at b0.
    """
    ratio = (2 * (n - k) + 1) / (2 * (n - k) + 3)
    la_k = math.log(float(spec.a[k]))
    la_prev = math.log(float(spec.a[k - 1]))
    lb = math.log(b0)
    log_w2 = (
        math.log(ratio)
        + 2 * spec.m[k] * (lb - la_k)
        + 2 * spec.m[k - 1] * (la_prev - lb)
    )
    return 0.5 * log_w2


def attach_inner_ovals(
    r: int, n: int, spec: PerturbationSpec, system: OvalSystem
) -> OvalSystem:
    """Add the shrunk ovals at the two x = 0 annuli (even r only).

    Stage k's oval gets x-halfwidth at most the dominance ceiling, shrunk
    further until the sign certificate on the full perturbation returns
    (-1)^k.  Real traced ovals are used while the level offset is
    representable; past that point the box-model VirtualOval stands in.
    Raises CertificateFailed when no width in the window certifies.
    """
    if r % 2 == 1:
        return system
    R_n = _partial_perturbation(n, list(spec.a), list(spec.m), n)
    new_sets = []
    for ann_set in system.annuli:
        if not ann_set.on_x_axis_line:
            new_sets.append(ann_set)
            continue
        ann = ann_set.annulus
        b0 = ann_set.outer[0].b_min
        aspect = math.sqrt(ann.hxx / ann.hyy)
        inner: list[Oval | VirtualOval] = []
        prev_w: float | None = None  # log of previous stage's halfwidth
        gamma0_w = math.log(max(ann_set.outer[0].max_abs_x(), 1e-300))
        for k in range(1, n + 1):
            ceiling = _stage_xwidth_log(n, k, spec, b0)
            ceiling = min(ceiling, gamma0_w + math.log(0.1))
            if prev_w is not None:
                ceiling = min(ceiling, prev_w + math.log(0.25))
            want = SignOutcome((-1) ** k)
            placed = None
            w_log = ceiling + math.log(0.9)
            for _ in range(40):
                region = _realize_inner(ann, w_log, aspect)
                if sign_certificate(R_n, region) is want:
                    placed = (region, w_log)
                    break
                w_log += math.log(1.0 / 8.0)
            if placed is None:
                raise CertificateFailed(
                    f"no certifiable width at stage {k} for the annulus at "
                    f"{ann.center}",
                    stage=k,
                )
            region, w_log = placed
            inner.append(region)
            prev_w = w_log
        new_sets.append(replace(ann_set, inner=tuple(inner)))
    return replace(system, annuli=tuple(new_sets))


def _realize_inner(
    ann: PeriodAnnulus, w_log: float, aspect: float
) -> Oval | VirtualOval:
    """A real shrunk oval when floats allow it, else the box model."""
    bound = LogValue(1, w_log)
    try:
        return shrink_to_xwidth(ann, bound)
    except DegenerateLevel:
        y_half = LogValue(1, w_log + math.log(aspect) + math.log(1.05))
        return VirtualOval(annulus=ann, x_halfwidth=bound, y_halfwidth=y_half)


def certify(n: int, r: int, m_cap: int = DEFAULT_M_CAP) -> CycleCertificate:
    """Full pipeline: annuli, thresholds, ovals, exponents, sign table.

    The returned certificate's count equals the nested-cycle formula
    2n(r+1) + n(1+(-1)^r); each adjacent sign change in a per-annulus
    sequence forces one limit cycle for small perturbation strength.
    """
    if n < 1 or r < 0:
        raise ValueError("need n >= 1 and r >= 0")
    _, _, annuli = discover_annuli(r)
    a, t = choose_thresholds(annuli, n)
    system = build_outer_system(r, n, annuli, a, t)
    spec = select_exponents(r, n, system, m_cap)
    system = attach_inner_ovals(r, n, spec, system)
    R_n = _partial_perturbation(n, list(spec.a), list(spec.m), n)

    tables = []
    for ann_set in system.annuli:
        entries = []
        # inner ovals first, innermost (deepest stage) leading
        for k in range(len(ann_set.inner), 0, -1):
            region = ann_set.inner[k - 1]
            got, how, val, err = _resolve_sign(R_n, region)
            if got is None:
                raise CancellationUnresolved(
                    f"inner stage {k} sign unresolved at annulus "
                    f"{ann_set.index}"
                )
            virtual = isinstance(region, VirtualOval)
            entries.append(
                TableEntry(
                    position=-k,
                    sign=got,
                    method=how,
                    h=None if virtual else region.h,
                    alpha=None if virtual else region.alpha,
                    virtual=virtual,
                    value=val,
                    err=err,
                )
            )
        for i, oval in enumerate(ann_set.outer):
            got, how, val, err = _resolve_sign(R_n, oval)
            if got is None:
                raise CancellationUnresolved(
                    f"outer oval {i} sign unresolved at annulus "
                    f"{ann_set.index}"
                )
            entries.append(
                TableEntry(
                    position=i,
                    sign=got,
                    method=how,
                    h=oval.h,
                    alpha=oval.alpha,
                    virtual=False,
                    value=val,
                    err=err,
                )
            )
        tables.append(
            AnnulusTable(
                index=ann_set.index,
                center=ann_set.center,
                entries=tuple(entries),
            )
        )

    count = sum(tab.sign_changes() for tab in tables)
    expected = nested_cycle_count(n, r)
    if count != expected:
        raise CertificateFailed(
            f"sign table yields {count} changes, construction promises "
            f"{expected}",
            stage=-1,
        )
    return CycleCertificate(
        n=n, r=r, perturbation=spec, annuli=tuple(tables), count=count
    )
