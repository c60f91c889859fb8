import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncertrack.search import (PlanError, circular_spiral, elliptical_spiral, expected_search_cost, first_hits,
                               pitch_for_tolerance, principal_axes, rotation_sweep, sweep_cost, sweep_hit,
                               whitened_spiral_keys)
from uncertrack.svg import ellipse_points, plan_svg, write_svg

TOL = 5e-4


def rot(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def grid_max_gap(waypoints, inside, extent, spacing=5e-5):
    """Largest distance from a grid point inside the region to its nearest probe (brute force)."""
    g = np.arange(-extent, extent + spacing / 2, spacing)
    xx, yy = np.meshgrid(g, g)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    pts = pts[inside(pts)]
    wp = np.asarray(waypoints)
    best = np.full(len(pts), np.inf)
    for chunk in np.array_split(np.arange(len(wp)), max(1, len(wp) // 200)):
        d = np.linalg.norm(pts[:, None, :] - wp[None, chunk, :], axis=2).min(axis=1)
        best = np.minimum(best, d)
    return best.max()


def test_circular_starts_at_origin_and_rings_are_pitch_apart():
    p = circular_spiral(1e-3, 6e-3)
    assert np.array_equal(p.waypoints[0], [0.0, 0.0])
    r = np.hypot(*p.waypoints.T)
    phi = np.unwrap(np.arctan2(p.waypoints[1:, 1], p.waypoints[1:, 0]))
    # Archimedean: r grows by exactly one pitch per turn
    b = np.polyfit(phi - phi[0], r[1:], 1)[0]
    assert b * 2 * math.pi == pytest.approx(1e-3, abs=1e-9)
    assert np.abs(r[1:] - (r[1] + b * (phi - phi[0]))).max() < 1e-9


def test_circular_consecutive_spacing_within_pitch():
    p = circular_spiral(7e-4, 5e-3)
    hop = np.linalg.norm(np.diff(p.waypoints, axis=0), axis=1)
    assert hop.max() <= 7e-4 + 1e-12


def test_circular_grid_coverage():
    pitch = pitch_for_tolerance(TOL)
    r_max = 4e-3
    p = circular_spiral(pitch, r_max)
    gap = grid_max_gap(p.waypoints, lambda q: np.hypot(*q.T) <= r_max, r_max)
    assert gap <= TOL


def test_circular_invalid():
    with pytest.raises(PlanError):
        circular_spiral(0.0, 1.0)
    with pytest.raises(PlanError):
        circular_spiral(2.0, 1.0)


def test_isotropic_equals_circular():
    s = 1.5e-3
    e = elliptical_spiral(s**2 * np.eye(2), TOL)
    c = circular_spiral(pitch_for_tolerance(TOL), 4 * s)
    assert e.waypoints.shape == c.waypoints.shape
    assert np.abs(e.waypoints - c.waypoints).max() < 1e-9


def test_elliptical_grid_coverage():
    cov = rot(0.4) @ np.diag([2e-3**2, 0.7e-3**2]) @ rot(0.4).T
    p = elliptical_spiral(cov, TOL)
    inv = np.linalg.inv(cov)
    inside = lambda q: np.einsum("ni,ij,nj->n", q, inv, q) <= 16.0
    assert grid_max_gap(p.waypoints, inside, 8.2e-3) <= TOL


def test_three_to_one_rings_fit_ellipse():
    cov = np.diag([3e-3**2, 1e-3**2])
    p = elliptical_spiral(cov, TOL)
    s_major, s_minor, ax = principal_axes(cov)
    key, _ = whitened_spiral_keys(p.waypoints @ ax, s_major, s_minor, p.pitch)
    turn = np.round((key - np.mod(key, 2 * math.pi)) / (2 * math.pi))
    # individual inner rings are only a handful of probes wide, so pool the
    # outer rings after normalizing each by its turn index
    sel = turn >= 4
    q = p.waypoints[sel] / turn[sel, None]
    m = np.column_stack([q[:, 0] ** 2, 2 * q[:, 0] * q[:, 1], q[:, 1] ** 2])
    a = np.linalg.lstsq(m, np.ones(len(q)), rcond=None)[0]
    lam = np.linalg.eigvalsh(np.array([[a[0], a[1]], [a[1], a[2]]]))
    assert math.sqrt(lam[1] / lam[0]) == pytest.approx(3.0, rel=0.01)


@settings(max_examples=20, deadline=None)
@given(st.floats(-math.pi / 2 + 0.05, math.pi / 2 - 0.05), st.floats(-0.6, 0.6), st.floats(1.5, 4.0))
def test_whitening_invariance(a, b, ratio):
    # both major-axis angles stay inside the canonical half-plane
    if abs(a + b) >= math.pi / 2 - 0.05:
        return
    cov = rot(a) @ np.diag([(ratio * 5e-4) ** 2, 5e-4**2]) @ rot(a).T
    s = rot(b)
    p1 = elliptical_spiral(cov, TOL)
    p2 = elliptical_spiral(s @ cov @ s.T, TOL)
    assert len(p1) == len(p2)
    assert np.abs(p1.waypoints @ s.T - p2.waypoints).max() < 1e-9


def test_elliptical_visits_rings_outward():
    cov = np.diag([2e-3**2, 0.5e-3**2])
    p = elliptical_spiral(cov, TOL)
    rho = np.sqrt(np.einsum("ni,ij,nj->n", p.waypoints, np.linalg.inv(cov), p.waypoints))
    half = len(p) // 2
    assert rho[:half].mean() < rho[half:].mean()
    assert rho.max() <= 4.0 + TOL / 0.5e-3


def test_degenerate_line_and_point():
    line = elliptical_spiral(np.diag([0.0, 1e-6]), TOL)
    assert line.kind == "line"
    assert np.allclose(line.waypoints[:, 0], 0.0)
    assert np.allclose(np.diff(np.sort(line.waypoints[:, 1])), 2 * TOL)
    reach = np.abs(line.waypoints[:, 1]).max()
    assert 4e-3 - TOL <= reach <= 4e-3 + 1e-12
    pt = elliptical_spiral(np.zeros((2, 2)), TOL)
    assert len(pt) == 1 and pt.kind == "point"


def test_elliptical_rejects_bad_input():
    with pytest.raises(PlanError):
        elliptical_spiral(np.array([[1e-6, 0.0], [0.0, -1e-6]]), TOL)
    with pytest.raises(PlanError):
        elliptical_spiral(np.array([[1e-6, 1e-7], [0.0, 1e-6]]), TOL)
    with pytest.raises(PlanError):
        elliptical_spiral(np.eye(2) * 1e-6, 0.0)


def test_plans_are_deterministic():
    cov = np.array([[4e-6, 1e-6], [1e-6, 1e-6]])
    assert np.array_equal(elliptical_spiral(cov, TOL).waypoints, elliptical_spiral(cov, TOL).waypoints)


def test_rotation_sweep_enumeration():
    p = rotation_sweep(math.radians(1), 3, math.radians(1))
    assert np.allclose(np.degrees(p.angles), [0, 1, -1, 2, -2, 3, -3])
    assert p.bound >= np.abs(p.angles).max()
    assert np.all(np.diff(np.abs(p.angles)) >= 0)
    with pytest.raises(PlanError):
        rotation_sweep(0.0, 3, 0.01)


def test_rotation_sweep_nearest_first_beats_monotone():
    sigma, tol = math.radians(2), math.radians(0.25)
    p = rotation_sweep(sigma, 4, 2 * tol)
    truth = np.random.default_rng(0).normal(0, sigma, 10_000)
    near = np.array([sweep_hit(p, t, tol) for t in truth])
    mono_angles = np.sort(p.angles)
    mono = np.array([np.flatnonzero(np.abs(mono_angles - t) <= tol)[:1] + 1 for t in truth], dtype=object)
    mono = np.array([m[0] if len(m) else len(p) for m in mono])
    near = np.where(near > 0, near, len(p))
    assert near.mean() < mono.mean()
    mean, _, rate = sweep_cost(p, sigma, tol, 10_000, np.random.default_rng(0))
    assert mean == pytest.approx(near.mean())
    assert rate > 0.99


def test_expected_cost_point_mass():
    p = circular_spiral(pitch_for_tolerance(TOL), 3e-3)
    mean, std, rate = expected_search_cost(p, np.zeros((2, 2)), TOL, 100, np.random.default_rng(0))
    assert (mean, std, rate) == (1.0, 0.0, 1.0)
    with pytest.raises(PlanError):
        expected_search_cost(p, np.zeros((2, 2)), TOL, 0, np.random.default_rng(0))


def test_first_hits_matches_brute_force():
    rng = np.random.default_rng(3)
    p = elliptical_spiral(np.diag([4e-6, 1e-6]), TOL)
    holes = rng.normal(scale=[2e-3, 1e-3], size=(300, 2))
    fast = first_hits(p.waypoints, holes, TOL)
    d = np.linalg.norm(holes[:, None] - p.waypoints[None], axis=2) <= TOL
    slow = np.where(d.any(axis=1), d.argmax(axis=1) + 1, 0)
    assert np.array_equal(fast, slow)


def test_isotropic_costs_agree():
    cov = 1e-6 * np.eye(2)
    e = elliptical_spiral(cov, TOL)
    c = circular_spiral(pitch_for_tolerance(TOL), 4e-3)
    me = expected_search_cost(e, cov, TOL, 10_000, np.random.default_rng(1))[0]
    mc = expected_search_cost(c, cov, TOL, 10_000, np.random.default_rng(1))[0]
    assert abs(me - mc) <= 0.1 * mc


def test_csv_export(tmp_path):
    p = elliptical_spiral(np.diag([4e-6, 1e-6]), TOL)
    path = tmp_path / "plan.csv"
    p.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "step,x,y"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 0], np.arange(len(p)))
    assert np.array_equal(data[:, 1:], p.waypoints)


def test_svg_overlay(tmp_path):
    cov = np.diag([4e-6, 1e-6])
    text = plan_svg(elliptical_spiral(cov, TOL).waypoints, cov)
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polygon") == 3 and "<polyline" in text
    e = ellipse_points(cov, 2.0, 36)
    m = np.einsum("ni,ij,nj->n", e, np.linalg.inv(cov), e)
    assert np.allclose(m, 4.0)
    write_svg(tmp_path / "a.svg", text)
    assert (tmp_path / "a.svg").read_text() == text
