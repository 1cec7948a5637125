"""Level-set tracing: annulus discovery, oval geometry, exceptional paths."""

from fractions import Fraction

import numpy as np
import pytest

import oracles
from sparsecycles.families import base_field, hamiltonian_of
from sparsecycles.geometry import (
    AmplitudeUnreachable,
    DegenerateLevel,
    GeometryError,
    LevelOutOfRange,
    PeriodAnnulus,
    axis_amplitude,
    oval_by_amplitude,
    shrink_to_xwidth,
    trace_oval,
)
from sparsecycles.polyalg import LogValue, SparsePoly2, evaluate, evaluate_exact

LEVEL_FIDELITY = 1e-9  # tracer contract: max |H - h| on returned vertices


def poly_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# ----- annulus discovery -----


def test_r0_annuli_levels_exact(annuli_of):
    _, H, anns = annuli_of(0)
    assert len(anns) == 2
    for ann in anns:
        assert ann.h_center == pytest.approx(-0.25, abs=1e-14)
        assert abs(ann.h_sep) <= 1e-12
        assert ann.orientation_sign == 1
        assert ann.hxx == pytest.approx(1.0, abs=1e-12)
        assert ann.hyy == pytest.approx(2.0, abs=1e-12)


def test_r2_annuli_levels_exact(annuli_of):
    _, H, anns = annuli_of(2)
    assert len(anns) == 6
    # F(x) = x^6/6 - 5 x^4/4 + 2 x^2, U(-+1) = -1/4
    for ann in anns:
        cx = round(ann.center[0])
        if cx == 0:
            assert ann.h_center == pytest.approx(-0.25, abs=1e-12)
            assert abs(ann.h_sep) <= 1e-10
        else:
            assert abs(cx) == 2
            assert ann.h_center == pytest.approx(float(Fraction(-19, 12)), abs=1e-10)
            assert ann.h_sep == pytest.approx(float(Fraction(-4, 3)), abs=1e-10)
        assert ann.orientation_sign == 1
        assert ann.level_cap < ann.h_sep


def test_hamiltonian_value_at_r2_centers():
    H = hamiltonian_of(base_field(2))
    assert evaluate_exact(H, 2, 1) == Fraction(-19, 12)
    assert evaluate_exact(H, 1, 1) == Fraction(2, 3)
    assert evaluate_exact(H, 2, 0) == Fraction(-4, 3)


# ----- tracing -----


def test_traced_oval_basics(annuli_of):
    _, H, anns = annuli_of(0)
    ann = anns[0]
    ov = trace_oval(ann, -0.1)
    assert ov.h == -0.1
    assert ov.n_vertices >= 1024
    # every vertex sits on the level to the advertised fidelity
    levels = [evaluate(H, float(x), float(y)) for x, y in ov.points]
    assert max(abs(l - ov.h) for l in levels) <= LEVEL_FIDELITY * (1 + abs(ov.h))
    # counterclockwise single loop around the center
    assert poly_area(ov.points) > 0
    dx = ov.points[:, 0] - ann.center[0]
    dy = ov.points[:, 1] - ann.center[1]
    angles = np.unwrap(np.arctan2(dy, dx))
    assert np.all(np.diff(angles) > 0)
    assert angles[-1] - angles[0] < 2 * np.pi
    assert oracles.contains_point(ov.points, ann.center)


def test_traced_oval_matches_independent_slices(annuli_of):
    _, _, anns = annuli_of(0)
    ann = anns[0]
    for h in (-0.2, -0.1, -0.02):
        ov = trace_oval(ann, h)
        area, err = oracles.area_oracle(ov)
        assert err < 1e-10 * area
        assert ov.area == pytest.approx(area, rel=2e-6)
        assert ov.alpha == pytest.approx(oracles.amplitude_oracle(ov), abs=1e-12)
        yl, yr = oracles.y_extent_oracle(ov)
        assert ov.b_min == pytest.approx(min(abs(yl), abs(yr)), abs=1e-12)


def test_near_separatrix_oval_of_pinched_annulus(annuli_of):
    # the x = 0 annulus of the r = 2 field is bounded by the saddle at the
    # origin: near the cap the oval flattens toward y = 0 (b_min -> 0)
    # while its x-extent stays at the separatrix width F(x) = 1/4
    _, H, anns = annuli_of(2)
    ann = next(a for a in anns if abs(a.center[0]) < 1e-9)
    ov = trace_oval(ann, ann.level_cap)
    xmin, xmax = ov.x_range
    assert 0.36 < xmax < 0.3695
    assert xmin == pytest.approx(-xmax, abs=1e-9)
    assert ov.b_min < 1e-3
    assert 1.40 < ov.alpha < 2**0.5
    levels = [evaluate(H, float(x), float(y)) for x, y in ov.points]
    assert max(abs(l - ov.h) for l in levels) <= LEVEL_FIDELITY * (1 + abs(ov.h))


def test_tracing_is_deterministic(annuli_of):
    _, _, anns = annuli_of(0)
    a = trace_oval(anns[0], -0.07)
    b = trace_oval(anns[0], -0.07)
    assert np.array_equal(a.points, b.points)
    assert a.area == b.area and a.alpha == b.alpha


def test_mirror_symmetry_between_lines(annuli_of):
    _, _, anns = annuli_of(0)
    lo = trace_oval(anns[0], -0.1)
    hi = trace_oval(anns[1], -0.1)
    assert lo.area == pytest.approx(hi.area, rel=1e-12)
    assert lo.alpha == pytest.approx(hi.alpha, abs=1e-12)
    # each oval is itself x-symmetric
    for ov in (lo, hi):
        xmin, xmax = ov.x_range
        assert xmin == pytest.approx(-xmax, abs=1e-9)


# ----- amplitude targeting -----


def test_oval_by_amplitude_hits_target(annuli_of):
    _, _, anns = annuli_of(0)
    ann = anns[0]
    targets = [1.05, 1.2, 1.35]
    ovals = [oval_by_amplitude(ann, t) for t in targets]
    for t, ov in zip(targets, ovals):
        assert abs(ov.alpha - t) <= 1e-9
    hs = [ov.h for ov in ovals]
    areas = [ov.area for ov in ovals]
    assert hs == sorted(hs) and areas == sorted(areas)
    assert oracles.strictly_nested(ovals[0].points, ovals[1].points)
    assert oracles.strictly_nested(ovals[1].points, ovals[2].points)


def test_axis_amplitude_monotone(annuli_of):
    _, _, anns = annuli_of(0)
    ann = anns[0]
    hs = np.linspace(ann.h_center + 0.01, ann.level_cap, 12)
    amps = [axis_amplitude(ann, float(h)) for h in hs]
    assert all(a < b for a, b in zip(amps, amps[1:]))
    assert amps[0] > abs(ann.center[1])


def test_amplitude_out_of_range(annuli_of):
    _, _, anns = annuli_of(0)
    with pytest.raises(AmplitudeUnreachable) as exc:
        oval_by_amplitude(anns[0], 5.0)
    lo, hi = exc.value.reachable
    assert lo == 1.0 and 1.40 < hi < 1.4143
    with pytest.raises(AmplitudeUnreachable):
        oval_by_amplitude(anns[0], 0.9)


# ----- level-range and structure errors -----


def test_level_out_of_range(annuli_of):
    _, _, anns = annuli_of(0)
    ann = anns[0]
    for h in (ann.h_center, ann.h_center - 0.1, ann.h_sep, 0.3):
        with pytest.raises(LevelOutOfRange):
            trace_oval(ann, h)


def test_non_separable_hamiltonian_rejected():
    H = SparsePoly2.from_terms([(1, 2, 0), (1, 1, 1), (1, 0, 2)])
    ann = PeriodAnnulus(
        center=(0.0, 0.0),
        h_center=0.0,
        h_sep=1.0,
        orientation_sign=1,
        hamiltonian=H,
        hxx=2.0,
        hyy=2.0,
    )
    with pytest.raises(GeometryError, match="separable"):
        trace_oval(ann, 0.5)


# ----- x-width shrinking -----


def test_shrink_to_xwidth(annuli_of):
    _, _, anns = annuli_of(0)
    ann = anns[0]
    bound = LogValue.from_number(1e-3)
    ov = shrink_to_xwidth(ann, bound)
    assert ov.max_abs_x() <= 1e-3
    assert ov.h > ann.h_center
    # quadratic well: level offset of order hxx * w^2 / 2
    assert ov.h - ann.h_center < 0.5 * ann.hxx * 1e-6


def test_shrink_requires_axis_center(annuli_of):
    _, _, anns = annuli_of(1)
    with pytest.raises(ValueError):
        shrink_to_xwidth(anns[0], LogValue.from_number(1e-3))


def test_shrink_below_float_resolution_degenerates(annuli_of):
    _, _, anns = annuli_of(0)
    with pytest.raises(DegenerateLevel):
        shrink_to_xwidth(anns[0], LogValue(1, -500.0))
