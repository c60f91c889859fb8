"""Hole-search planning: Archimedean spirals, covariance-shaped spirals and
nearest-first rotation sweeps, plus a Monte Carlo cost evaluator.

Each waypoint is a probe: the hole is found at the first waypoint lying
within ``tol`` of it. A circular spiral with ring pitch and arc step both
slightly below ``sqrt(2) * tol`` leaves no point of its disk farther than ``tol``
from a probe.

The covariance-shaped plan keeps that uniform probe layout (laid out in the
principal frame of the covariance) and changes only the visiting order: the
probes are sorted by their position along a spiral drawn in whitened
coordinates, so they are visited in rings of increasing Mahalanobis radius
and the set is clipped to the ``n_sigma`` ellipse.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

N_SIGMA_DEFAULT = 4.0


class PlanError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpiralPlan:
    waypoints: np.ndarray
    pitch: float
    bound: float
    kind: str = "circular"
    axes: np.ndarray = field(default_factory=lambda: np.eye(2))
    sigmas: tuple = ()

    def __post_init__(self):
        w = np.array(self.waypoints, dtype=float).reshape(-1, 2)
        if len(w) == 0 or np.any(w[0] != 0.0):
            raise PlanError("a plan starts at the origin")
        w.setflags(write=False)
        object.__setattr__(self, "waypoints", w)

    def __len__(self):
        return len(self.waypoints)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["step", "x", "y"])
            for i, (x, y) in enumerate(self.waypoints):
                wr.writerow([i, repr(float(x)), repr(float(y))])


@dataclass(frozen=True, eq=False)
class RotationSweepPlan:
    angles: np.ndarray
    step: float
    bound: float

    def __len__(self):
        return len(self.angles)


# sqrt(2) leaves the square-grid bound exactly at tol; the 2% margin absorbs
# the curvature of the innermost turns
PITCH_FACTOR = 0.98 * math.sqrt(2.0)


def pitch_for_tolerance(tol: float) -> float:
    """Ring pitch (and arc step) whose probes cover the plane within ``tol``."""
    return PITCH_FACTOR * tol


def _arc_length(phi, b):
    return 0.5 * b * (phi * np.sqrt(1.0 + phi**2) + np.arcsinh(phi))


def _phase_at_length(s, b):
    # invert the Archimedean arc length with Newton steps
    phi = np.sqrt(2.0 * s / b)
    for _ in range(60):
        f = _arc_length(phi, b) - s
        phi_new = np.maximum(phi - f / (b * np.sqrt(1.0 + phi**2)), 0.0)
        if np.max(np.abs(phi_new - phi)) < 1e-15 * max(1.0, float(np.max(phi))):
            phi = phi_new
            break
        phi = phi_new
    return phi


def spiral_phases(pitch: float, r_max: float, arc_step: float | None = None) -> np.ndarray:
    """Phases of probes spaced ``arc_step`` apart along ``r = pitch * phi / (2 pi)``.

    The spiral is continued half a pitch past ``r_max`` so the last ring
    still covers the rim of the disk.
    """
    arc_step = pitch if arc_step is None else arc_step
    b = pitch / (2 * math.pi)
    phi_end = 2 * math.pi * (r_max + 0.5 * pitch) / pitch
    s_end = float(_arc_length(phi_end, b))
    s = np.arange(0.0, s_end + 0.5 * arc_step, arc_step)
    s = s[s <= s_end + 1e-12]
    phi = _phase_at_length(s, b)
    phi[0] = 0.0
    return phi


def circular_spiral(pitch: float, r_max: float, arc_step: float | None = None) -> SpiralPlan:
    """Archimedean spiral of the given ring pitch, probes at equal arc length."""
    if not (pitch > 0 and r_max >= pitch) or not math.isfinite(r_max):
        raise PlanError("need 0 < pitch <= r_max")
    if arc_step is not None and not 0 < arc_step <= pitch:
        raise PlanError("arc_step must lie in (0, pitch]")
    phi = spiral_phases(pitch, r_max, arc_step)
    r = pitch * phi / (2 * math.pi)
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    pts[0] = 0.0
    return SpiralPlan(pts, pitch, r_max, "circular")


def principal_axes(cov_xy):
    """Standard deviations (major, minor) and a right-handed axis matrix.

    The major axis is reported with its angle in (-pi/2, pi/2]; for an
    isotropic covariance the axes are the coordinate axes.
    """
    cov = np.asarray(cov_xy, dtype=float)
    if cov.shape != (2, 2) or not np.all(np.isfinite(cov)):
        raise PlanError("cov_xy must be a finite 2x2 matrix")
    if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, np.abs(cov).max()):
        raise PlanError("cov_xy must be symmetric")
    cov = 0.5 * (cov + cov.T)
    lam, vec = np.linalg.eigh(cov)
    scale = max(abs(lam).max(), 1e-300)
    if lam[0] < -1e-12 * scale - 1e-30:
        raise PlanError(f"cov_xy is not positive semidefinite (eigenvalue {lam[0]:.3e})")
    lam = np.clip(lam, 0.0, None)
    s_major, s_minor = math.sqrt(lam[1]), math.sqrt(lam[0])
    if s_major - s_minor <= 1e-9 * s_major:
        return s_major, s_major, np.eye(2)
    major = vec[:, 1]
    ang = math.atan2(major[1], major[0])
    if ang <= -math.pi / 2 or ang > math.pi / 2:
        major = -major
    minor = np.array([-major[1], major[0]])
    return s_major, s_minor, np.column_stack([major, minor])


def whitened_spiral_keys(pts_principal, s_major, s_minor, pitch):
    """Position of each point along a spiral of pitch ``pitch / s_major`` in whitened coordinates."""
    w = pts_principal / np.array([s_major, s_minor])
    rho = np.hypot(w[:, 0], w[:, 1])
    alpha = np.mod(np.arctan2(w[:, 1], w[:, 0]), 2 * math.pi)
    g = pitch / s_major
    turn = np.maximum(np.round((2 * math.pi * rho / g - alpha) / (2 * math.pi)), 0.0)
    return 2 * math.pi * turn + alpha, rho


def line_search(direction, tol: float, half_length: float) -> SpiralPlan:
    """Probes 2*tol apart along ``direction``, nearest first, alternating sides."""
    step = 2 * tol
    # fewest probes whose tol-disks still reach +-half_length
    n = max(int(math.ceil(half_length / step - 0.5 - 1e-9)), 0)
    k = np.arange(1, n + 1)
    offs = np.concatenate([[0.0], np.ravel(np.column_stack([k, -k]))]) * step
    pts = offs[:, None] * np.asarray(direction, dtype=float)[None]
    return SpiralPlan(pts, step, half_length, "line")


def elliptical_spiral(cov_xy, tol: float, n_sigma: float = N_SIGMA_DEFAULT) -> SpiralPlan:
    """Covariance-shaped search plan out to ``n_sigma`` standard deviations."""
    if not tol > 0:
        raise PlanError("tol must be positive")
    if not n_sigma > 0:
        raise PlanError("n_sigma must be positive")
    s_major, s_minor, axes = principal_axes(cov_xy)
    if s_major == 0.0:
        return SpiralPlan(np.zeros((1, 2)), pitch_for_tolerance(tol), n_sigma, "point", axes, (0.0, 0.0))
    if s_minor == 0.0:
        plan = line_search(axes[:, 0], tol, n_sigma * s_major)
        return SpiralPlan(plan.waypoints, plan.pitch, n_sigma, "line", axes, (s_major, 0.0))
    pitch = pitch_for_tolerance(tol)
    r_max = max(n_sigma * s_major, pitch)
    base = circular_spiral(pitch, r_max).waypoints
    key, rho = whitened_spiral_keys(base, s_major, s_minor, pitch)
    keep = np.flatnonzero(rho <= n_sigma + tol / s_minor)
    order = keep[np.argsort(key[keep], kind="stable")]
    pts = base[order]
    if axes is not None and not np.array_equal(axes, np.eye(2)):
        pts = pts @ axes.T
    return SpiralPlan(pts, pitch, n_sigma, "elliptical", axes, (s_major, s_minor))


def rotation_sweep(sigma_theta: float, k: float, step: float) -> RotationSweepPlan:
    """Angles 0, +step, -step, +2 step, ... up to k * sigma_theta."""
    if not (sigma_theta > 0 and step > 0 and k >= 0):
        raise PlanError("need sigma_theta > 0, step > 0 and k >= 0")
    bound = k * sigma_theta
    n = int(math.floor(bound / step + 1e-9))
    j = np.arange(1, n + 1)
    angles = np.concatenate([[0.0], np.ravel(np.column_stack([j, -j]))]) * step
    return RotationSweepPlan(angles, step, bound)


def first_hits(waypoints, offsets, tol: float) -> np.ndarray:
    """1-based index of the first waypoint within ``tol`` of each offset, 0 if none."""
    offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
    tree = cKDTree(np.asarray(waypoints, dtype=float))
    hits = tree.query_ball_point(offsets, tol)
    return np.array([min(h) + 1 if h else 0 for h in hits], dtype=int)


def sweep_hit(plan: RotationSweepPlan, truth: float, tol: float) -> int:
    """1-based index of the first sweep angle within ``tol`` of ``truth``, 0 if none."""
    idx = np.flatnonzero(np.abs(plan.angles - truth) <= tol)
    return int(idx[0]) + 1 if len(idx) else 0


def sample_offsets(cov_xy, n: int, rng: np.random.Generator) -> np.ndarray:
    cov = np.asarray(cov_xy, dtype=float)
    lam, vec = np.linalg.eigh(0.5 * (cov + cov.T))
    root = vec * np.sqrt(np.clip(lam, 0.0, None))
    return rng.standard_normal((n, 2)) @ root.T


def expected_search_cost(plan: SpiralPlan, true_cov, tol: float, n_mc: int, rng: np.random.Generator):
    """Monte Carlo (mean_steps, std_steps, success_rate) for holes drawn from ``true_cov``.

    A miss costs the whole plan.
    """
    if n_mc < 1:
        raise PlanError("n_mc must be at least 1")
    holes = sample_offsets(true_cov, n_mc, rng)
    hits = first_hits(plan.waypoints, holes, tol)
    steps = np.where(hits > 0, hits, len(plan)).astype(float)
    return float(steps.mean()), float(steps.std()), float(np.mean(hits > 0))


def sweep_cost(plan: RotationSweepPlan, sigma_theta: float, tol: float, n_mc: int, rng: np.random.Generator):
    truth = rng.normal(0.0, sigma_theta, n_mc)
    d = np.abs(plan.angles[None, :] - truth[:, None]) <= tol
    found = d.any(axis=1)
    steps = np.where(found, d.argmax(axis=1) + 1, len(plan)).astype(float)
    return float(steps.mean()), float(steps.std()), float(found.mean())
