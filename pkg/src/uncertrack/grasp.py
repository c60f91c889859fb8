"""Quasi-static parallel-jaw grasping of a convex polygon on a table.

Poses are planar ``(x, y, theta)`` of the object frame in the gripper frame.
Internally every particle is tracked by its centroid coordinates along the
jaw surface (``ct``) and along the closing axis (``cn``) plus its angle.

While only one jaw touches, the object is pushed by a frictionless jaw with
an ellipsoidal limit surface whose characteristic length is the polygon's
radius of gyration. Once both jaws touch, the object is squeezed: it turns
in the direction that reduces its support width until the width reaches a
local minimum, which for a polygon is always a flush (edge on jaw) angle,
and is centered between the jaws.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import wrap_angle
from .particles import ParticleSet, bayes_update, resample_if_degenerate

MAX_STEPS = 1_000_000


class GraspError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least three 2-D vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(cross <= 0):
            raise ValueError("polygon must be strictly convex with CCW vertices")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def rectangle(cls, length: float, width: float) -> "ConvexPolygon":
        a, b = length / 2, width / 2
        return cls([[-a, -b], [a, -b], [a, b], [-a, b]])

    def area_props(self):
        """Area, centroid and squared radius of gyration about the centroid."""
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        area = cr.sum() / 2
        cx = ((x + xn) * cr).sum() / (6 * area)
        cy = ((y + yn) * cr).sum() / (6 * area)
        ixx = ((y**2 + y * yn + yn**2) * cr).sum() / 12
        iyy = ((x**2 + x * xn + xn**2) * cr).sum() / 12
        polar = ixx + iyy - area * (cx**2 + cy**2)
        return area, np.array([cx, cy]), polar / area

    def support_width(self, theta, axis=(0.0, 1.0)) -> np.ndarray:
        axis = np.asarray(axis, dtype=float)
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        proj = _rotated_projection(self.vertices, theta, axis)
        return proj.max(axis=1) - proj.min(axis=1)

    def edge_angles(self) -> np.ndarray:
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        return np.arctan2(e[:, 1], e[:, 0])


def _rotated_projection(v, theta, axis):
    # projection of R(theta) v onto axis, shape (n, m)
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    x, y = v[:, 0][None], v[:, 1][None]
    return (c * x - s * y) * axis[0] + (s * x + c * y) * axis[1]


@dataclass(frozen=True)
class GraspParams:
    closing_axis: tuple = (0.0, 1.0)
    max_opening: float = 0.085
    closing_step: float = 1e-4
    sigma_d: float = 3e-4
    force_limit_proxy: float = 1e-7

    def __post_init__(self):
        n = np.asarray(self.closing_axis, dtype=float)
        if n.shape != (2,) or abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("closing_axis must be a unit 2-vector")
        if not 0 < self.closing_step <= 1e-3:
            raise ValueError("closing_step must be in (0, 1e-3]")
        if not self.sigma_d > 0:
            raise ValueError("sigma_d must be positive")
        if not self.max_opening > 0:
            raise ValueError("max_opening must be positive")
        if not self.force_limit_proxy > 0:
            raise ValueError("force_limit_proxy must be positive")

    @property
    def axes(self):
        n = np.asarray(self.closing_axis, dtype=float)
        return np.array([n[1], -n[0]]), n


@dataclass(frozen=True)
class GraspOutcome:
    final_pose: tuple
    width: float


class _Geometry:
    def __init__(self, poly: ConvexPolygon, g: GraspParams):
        _, self.centroid, self.gyr2 = poly.area_props()
        self.rel = poly.vertices - self.centroid
        self.t, self.n = g.axes
        self.edge_angles = poly.edge_angles()
        self.scale = np.abs(self.rel).max()

    def coords(self, theta):
        """Vertex offsets from the centroid along (t, n): two (N, m) arrays."""
        c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
        x, y = self.rel[:, 0][None], self.rel[:, 1][None]
        wx, wy = c * x - s * y, s * x + c * y
        return wx * self.t[0] + wy * self.t[1], wx * self.n[0] + wy * self.n[1]

    def width_slope(self, theta):
        """d(width)/d(theta) with generic (untied) supports."""
        qt, qn = self.coords(theta)
        rows = np.arange(len(theta))
        return qt[rows, qn.argmax(1)] - qt[rows, qn.argmin(1)]


def _descent_direction(geo, theta, tie):
    qt, qn = geo.coords(theta)
    top = qn >= qn.max(1, keepdims=True) - tie
    bot = qn <= qn.min(1, keepdims=True) + tie
    big = np.inf
    d_pos = np.where(top, qt, -big).max(1) - np.where(bot, qt, big).min(1)
    d_neg = np.where(top, -qt, -big).max(1) - np.where(bot, -qt, big).min(1)
    eps = 1e-12 * max(geo.scale, 1e-12)
    s = np.zeros(len(theta))
    s[d_pos < -eps] = 1.0
    s[(s == 0) & (d_neg < -eps)] = -1.0
    return s


def _squeeze(geo, theta, tie):
    """Turn each object to the next local minimum of its support width."""
    theta = theta.copy()
    s = _descent_direction(geo, theta, tie)
    moving = np.flatnonzero(s != 0)
    if len(moving) == 0:
        return theta
    beta = np.arctan2(geo.t[1], geo.t[0])
    flush = beta - geo.edge_angles  # flush angles modulo pi
    th = theta[moving]
    sm = s[moving]
    ahead = np.mod(sm[:, None] * (flush[None] - th[:, None]), np.pi)
    ahead = np.where(ahead < 1e-12, ahead + np.pi, ahead)
    order = np.sort(ahead, axis=1)
    final = np.full(len(moving), np.nan)
    pending = np.ones(len(moving), dtype=bool)
    for k in range(order.shape[1] * 2):
        if not pending.any():
            break
        idx = np.flatnonzero(pending)
        kk = k % order.shape[1]
        extra = np.pi * (k // order.shape[1])
        cand = th[idx] + sm[idx] * (order[idx, kk] + extra)
        probe = cand + sm[idx] * 1e-7
        rising = sm[idx] * geo.width_slope(probe) >= 0
        final[idx[rising]] = cand[rising]
        pending[idx[rising]] = False
    if pending.any():
        raise GraspError("squeeze did not reach a width minimum")
    theta[moving] = final
    return theta


def simulate_grasp_batch(states, poly: ConvexPolygon, g: GraspParams, trace: list | None = None):
    """Close the jaws on every planar pose in ``states`` (N, 3).

    Returns the final poses (N, 3) and the final support widths (N,).
    If ``trace`` is a list, ``(theta, half_opening)`` copies for all
    particles are appended after every closing step.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    geo = _Geometry(poly, g)
    t_ax, n_ax = geo.t, geo.n
    theta = states[:, 2].copy()
    c, s = np.cos(theta), np.sin(theta)
    cx = states[:, 0] + c * geo.centroid[0] - s * geo.centroid[1]
    cy = states[:, 1] + s * geo.centroid[0] + c * geo.centroid[1]
    ct = cx * t_ax[0] + cy * t_ax[1]
    cn = cx * n_ax[0] + cy * n_ax[1]

    _, qn = geo.coords(theta)
    top = cn + qn.max(1)
    bot = cn + qn.min(1)
    h_max = g.max_opening / 2
    if np.any(top - bot > g.max_opening):
        raise GraspError("polygon is wider than the maximum jaw opening")
    if np.any(top > h_max) or np.any(bot < -h_max):
        raise GraspError("polygon does not fit between the open jaws")

    tie = g.force_limit_proxy
    half = g.closing_step / 2
    c2 = geo.gyr2
    # skip free closing: start each particle at first contact
    h = np.maximum(top, -bot)
    flush = np.arctan2(t_ax[1], t_ax[0]) - geo.edge_angles
    squeezed = (top - bot) >= 2 * h - tie
    steps = 0
    active = np.flatnonzero(~squeezed)
    while len(active):
        steps += 1
        if steps > MAX_STEPS:
            raise GraspError("grasp did not converge")
        h[active] -= half
        th, cna, ha = theta[active], cn[active], h[active]
        qt, qn = geo.coords(th)
        qmax, qmin = qn.max(1), qn.min(1)
        pen_top = cna + qmax - ha
        pen_bot = -ha - (cna + qmin)
        upper = pen_top >= pen_bot  # which jaw is pushing
        sign = np.where(upper, -1.0, 1.0)
        pen = np.maximum(np.where(upper, pen_top, pen_bot), 0.0)
        sup = np.where(upper[:, None], qn >= qmax[:, None] - tie, qn <= qmin[:, None] + tie)
        lo = np.where(sup, qt, np.inf).min(1)
        hi = np.where(sup, qt, -np.inf).max(1)
        rt = np.clip(0.0, lo, hi)
        denom = c2 + rt**2
        dth = sign * pen * rt / denom
        # never turn past the next flush angle within one step
        sd = np.sign(dth)
        ahead = np.mod(sd[:, None] * (flush[None] - th[:, None]), np.pi)
        ahead = np.where(ahead < 1e-12, np.pi, ahead).min(1)
        th = th + sd * np.minimum(np.abs(dth), ahead)
        cna = cna + sign * pen * c2 / denom
        _, qn = geo.coords(th)
        qmax, qmin = qn.max(1), qn.min(1)
        # remove residual penetration by translation
        cna = np.where(upper, np.minimum(cna, ha - qmax), np.maximum(cna, -ha - qmin))
        # a flush push that passes through the centroid only translates the
        # object, so jump straight to contact with the other jaw
        glide = (lo <= 0.0) & (hi >= 0.0)
        ha = np.where(glide, np.minimum(ha, (qmax - qmin) / 2), ha)
        cna = np.where(glide, np.where(upper, ha - qmax, -ha - qmin), cna)
        theta[active], cn[active], h[active] = th, cna, ha
        done = (qmax - qmin) >= 2 * ha - tie
        squeezed[active[done]] = True
        active = active[~done]
        if trace is not None:
            trace.append((theta.copy(), h.copy()))

    theta = _squeeze(geo, theta, 1e-12 * geo.scale)
    _, qn = geo.coords(theta)
    qmax, qmin = qn.max(1), qn.min(1)
    width = qmax - qmin
    cn = -(qmax + qmin) / 2
    cx = ct * t_ax[0] + cn * n_ax[0]
    cy = ct * t_ax[1] + cn * n_ax[1]
    c, s = np.cos(theta), np.sin(theta)
    x = cx - (c * geo.centroid[0] - s * geo.centroid[1])
    y = cy - (s * geo.centroid[0] + c * geo.centroid[1])
    out = np.column_stack([x, y, wrap_angle(theta)])
    return out, width


def simulate_grasp(x0, poly: ConvexPolygon, g: GraspParams) -> GraspOutcome:
    final, width = simulate_grasp_batch(np.asarray(x0, dtype=float)[None], poly, g)
    return GraspOutcome(tuple(float(v) for v in final[0]), float(width[0]))


def width_likelihood(y, d_sim, sigma_d):
    if not sigma_d > 0:
        raise ValueError("sigma_d must be positive")
    r = (np.asarray(y, dtype=float) - np.asarray(d_sim, dtype=float)) / sigma_d
    return np.exp(-0.5 * r * r)


def grasp_update(prior: ParticleSet, poly: ConvexPolygon, g: GraspParams, y: float,
                 rng: np.random.Generator | None = None, resample_threshold: float = 0.5) -> ParticleSet:
    """Forward-simulate each planar particle through the grasp and weight by the width reading."""
    if prior.states.shape[1] != 3:
        raise ValueError("grasp_update expects planar particles")
    final, widths = simulate_grasp_batch(prior.states, poly, g)
    moved = ParticleSet(final, prior.weights, prior.generation, "planar")
    post = bayes_update(moved, lambda _: width_likelihood(y, widths, g.sigma_d))
    rng = np.random.default_rng(0) if rng is None else rng
    return resample_if_degenerate(post, rng, resample_threshold)
