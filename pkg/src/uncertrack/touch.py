"""Touch-based localization of a known convex object.

Contacts are scored with a proximity model (distance to the surface and
angle between measured and surface normals) and the pose is found with an
annealed, shrinking-neighborhood particle search.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import se3
from .belief import PoseBelief
from .particles import ParticleSet, poses_to_states, systematic_indices
from .se3 import Pose


class TouchError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TouchMeasurement:
    pos: np.ndarray
    nor: np.ndarray

    def __post_init__(self):
        p = np.array(self.pos, dtype=float).reshape(3)
        n = np.array(self.nor, dtype=float).reshape(3)
        norm = np.linalg.norm(n)
        if not np.all(np.isfinite(p)) or not norm > 0:
            raise ValueError("touch needs a finite position and a nonzero normal")
        if abs(norm - 1.0) > 1e-9:
            n = n / norm
        object.__setattr__(self, "pos", p)
        object.__setattr__(self, "nor", n)


def load_measurements(path) -> list[TouchMeasurement]:
    """Read touches from a CSV with columns px,py,pz,nx,ny,nz (SI units)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                vals = [float(v) for v in row[:6]]
            except ValueError:
                continue  # header
            out.append(TouchMeasurement(vals[:3], vals[3:6]))
    return out


def save_measurements(path, meas) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["px", "py", "pz", "nx", "ny", "nz"])
        for m in meas:
            wr.writerow([repr(float(v)) for v in (*m.pos, *m.nor)])


@dataclass(frozen=True, eq=False)
class ShapeModel:
    """Convex polyhedron ``{x : normals @ x <= offsets}`` in the object frame."""
    normals: np.ndarray
    offsets: np.ndarray
    half_extents: np.ndarray | None = None
    vertices: np.ndarray = field(init=False, repr=False)
    edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nrm = np.array(self.normals, dtype=float)
        off = np.array(self.offsets, dtype=float).reshape(-1)
        if nrm.ndim != 2 or nrm.shape[1] != 3 or len(nrm) != len(off) or len(nrm) < 4:
            raise ValueError("shape needs at least four (normal, offset) faces")
        lens = np.linalg.norm(nrm, axis=1)
        nrm = nrm / lens[:, None]
        off = off / lens
        verts, faces_of = [], []
        for i, j, k in itertools.combinations(range(len(nrm)), 3):
            a = nrm[[i, j, k]]
            if abs(np.linalg.det(a)) < 1e-12:
                continue
            x = np.linalg.solve(a, off[[i, j, k]])
            if np.all(nrm @ x <= off + 1e-9):
                if not any(np.linalg.norm(x - v) < 1e-9 for v in verts):
                    verts.append(x)
        verts = np.array(verts)
        if len(verts) < 4:
            raise ValueError("halfspaces do not bound a solid")
        if np.any(nrm @ verts.mean(axis=0) >= off):
            raise ValueError("normals must point outward")
        active = np.abs(verts @ nrm.T - off) < 1e-9
        faces_of = [set(np.flatnonzero(r)) for r in active]
        edges = [(a, b) for a, b in itertools.combinations(range(len(verts)), 2)
                 if len(faces_of[a] & faces_of[b]) >= 2]
        for arr in (nrm, off, verts):
            arr.setflags(write=False)
        object.__setattr__(self, "normals", nrm)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", np.array(edges, dtype=int))
        if self.half_extents is not None:
            object.__setattr__(self, "half_extents", np.asarray(self.half_extents, dtype=float))

    @classmethod
    def from_box(cls, size) -> "ShapeModel":
        h = np.asarray(size, dtype=float) / 2
        nrm = np.vstack([np.eye(3), -np.eye(3)])
        return cls(nrm, np.concatenate([h, h]), half_extents=h)

    def local_distance(self, q: np.ndarray):
        """Unsigned distance and outward normal for object-frame points (..., 3)."""
        if self.half_extents is not None:
            return _box_distance(q, self.half_extents)
        return _polytope_distance(q, self.normals, self.offsets, self.vertices, self.edges)


def _box_distance(q, h):
    a = np.abs(q)
    sgn = np.where(q < 0, -1.0, 1.0)
    over = a - h
    outside = np.maximum(over, 0.0)
    d_out = np.linalg.norm(outside, axis=-1)
    is_out = d_out > 0
    k = np.argmax(over, axis=-1)
    d_in = -np.take_along_axis(over, k[..., None], axis=-1)[..., 0]
    n_in = np.zeros(q.shape)
    np.put_along_axis(n_in, k[..., None], np.take_along_axis(sgn, k[..., None], axis=-1), axis=-1)
    safe = np.where(is_out, d_out, 1.0)[..., None]
    n_out = sgn * outside / safe
    dist = np.where(is_out, d_out, d_in)
    normal = np.where(is_out[..., None], n_out, n_in)
    return dist, normal


def _polytope_distance(q, nrm, off, verts, edges):
    shape = q.shape[:-1]
    q = q.reshape(-1, 3)
    s = q @ nrm.T - off
    k = np.argmax(s, axis=1)
    smax = s[np.arange(len(q)), k]
    dist = np.where(smax <= 0, -smax, np.inf)
    normal = nrm[k].copy()
    out = smax > 0
    if out.any():
        qo = q[out]
        best = np.full(len(qo), np.inf)
        foot = np.zeros_like(qo)
        # faces
        for i in range(len(nrm)):
            p = qo - (qo @ nrm[i] - off[i])[:, None] * nrm[i]
            ok = np.all(p @ nrm.T - off <= 1e-12, axis=1)
            d = np.linalg.norm(qo - p, axis=1)
            upd = ok & (d < best)
            best[upd], foot[upd] = d[upd], p[upd]
        # edges, endpoints included
        for a, b in edges:
            va, vb = verts[a], verts[b]
            e = vb - va
            u = np.clip((qo - va) @ e / (e @ e), 0.0, 1.0)
            p = va + u[:, None] * e
            d = np.linalg.norm(qo - p, axis=1)
            upd = d < best
            best[upd], foot[upd] = d[upd], p[upd]
        dist[out] = best
        normal[out] = (qo - foot) / best[:, None]
    return dist.reshape(shape), normal.reshape(shape + (3,))


def surface_distance(s: ShapeModel, x: Pose, p):
    """Distance from base-frame point(s) ``p`` to the surface of ``s`` at pose ``x``.

    Returns the distance and the outward unit normal (base frame) at the
    nearest surface point.
    """
    p = np.asarray(p, dtype=float)
    q = (p - x.t) @ x.r
    d, n_local = s.local_distance(q)
    return d, n_local @ x.r.T


def _angle_between(a, b):
    c = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    return np.arccos(c)


def proximity_likelihood(y: TouchMeasurement, x: Pose, s: ShapeModel, sigma_pos: float, sigma_nor: float) -> float:
    if not (sigma_pos > 0 and sigma_nor > 0):
        raise ValueError("sigmas must be positive")
    d, n = surface_distance(s, x, y.pos)
    alpha = _angle_between(y.nor, n)
    return float(np.exp(-0.5 * (d / sigma_pos) ** 2 - 0.5 * (alpha / sigma_nor) ** 2))


def log_likelihood_batch(rs, ts, meas_pos, meas_nor, s: ShapeModel, sigma_pos, sigma_nor, chunk: int = 4096):
    """Summed proximity log-likelihood of all measurements for each pose."""
    n = len(rs)
    out = np.empty(n)
    for lo in range(0, n, chunk):
        r = rs[lo:lo + chunk]
        t = ts[lo:lo + chunk]
        q = np.einsum("nji,nmj->nmi", r, meas_pos[None] - t[:, None])
        nl = np.einsum("nji,mj->nmi", r, meas_nor)
        d, normal = s.local_distance(q)
        alpha = _angle_between(nl, normal)
        out[lo:lo + chunk] = (-0.5 * (d / sigma_pos) ** 2 - 0.5 * (alpha / sigma_nor) ** 2).sum(axis=1)
    return out


@dataclass(frozen=True)
class ScalingSeriesParams:
    m_per_round: int = 50
    zoom: float = 0.5
    delta_init: tuple = (0.01, math.radians(10.0))
    delta_final: tuple = (5e-4, math.radians(0.5))
    sigma_pos: float = 5e-4
    sigma_nor: float = math.radians(5.0)
    prune_ratio: float = 0.01
    max_centers: int = 200
    planar: bool = False

    def __post_init__(self):
        if not 0 < self.zoom < 1:
            raise ValueError("zoom must lie in (0, 1)")
        if self.m_per_round < 1 or self.max_centers < 1:
            raise ValueError("m_per_round and max_centers must be positive")
        if not all(f < i for f, i in zip(self.delta_final, self.delta_init)):
            raise ValueError("delta_final must be smaller than delta_init componentwise")
        if not all(v > 0 for v in self.delta_final):
            raise ValueError("delta_final must be positive")
        if not (self.sigma_pos > 0 and self.sigma_nor > 0):
            raise ValueError("sigmas must be positive")

    def rounds(self) -> int:
        return max(math.ceil(math.log(f / i) / math.log(self.zoom) - 1e-12)
                   for f, i in zip(self.delta_final, self.delta_init))


def _sample_neighborhoods(rs, ts, delta, m, planar, rng):
    n = len(rs)
    dp, dr = delta
    if planar:
        u = rng.uniform(-1.0, 1.0, size=(n, m, 3))
        xi_r = np.zeros((n, m, 3))
        xi_r[..., 2] = dr * u[..., 2]
        xi_t = np.zeros((n, m, 3))
        xi_t[..., :2] = dp * u[..., :2]
    else:
        u = rng.uniform(-1.0, 1.0, size=(n, m, 6))
        xi_r = dr * u[..., :3]
        xi_t = dp * u[..., 3:]
    rot = se3.exp_so3_batch(xi_r.reshape(-1, 3)).reshape(n, m, 3, 3)
    new_r = np.einsum("nmij,njk->nmik", rot, rs).reshape(-1, 3, 3)
    new_t = (ts[:, None, :] + xi_t).reshape(-1, 3)
    return new_r, new_t


def scaling_series(prior: PoseBelief, meas, s: ShapeModel, params: ScalingSeriesParams,
                   rng: np.random.Generator) -> ParticleSet:
    """Annealed neighborhood search for the object pose given touches.

    Starts from a single neighborhood around ``prior.mean`` with half-widths
    ``delta_init``. Each round samples ``m_per_round`` poses per neighborhood,
    weights them with the proximity model at sigmas inflated by
    ``delta / delta_final``, keeps candidates above ``prune_ratio`` of the
    round maximum as the next centers and shrinks the neighborhoods by
    ``zoom``. The survivors of the last round are returned weighted by the
    untempered likelihood.
    """
    meas = list(meas)
    if not meas:
        raise TouchError("at least one touch measurement is required")
    mp = np.array([m.pos for m in meas])
    mn = np.array([m.nor for m in meas])
    rs = prior.mean.r[None].copy()
    ts = prior.mean.t[None].copy()
    delta = np.array(params.delta_init, dtype=float)
    final = np.array(params.delta_final, dtype=float)
    for _ in range(params.rounds()):
        cr, ct = _sample_neighborhoods(rs, ts, delta, params.m_per_round, params.planar, rng)
        temper = np.maximum(delta / final, 1.0)
        ll = log_likelihood_batch(cr, ct, mp, mn, s, params.sigma_pos * temper[0], params.sigma_nor * temper[1])
        keep = np.flatnonzero(ll >= ll.max() + math.log(params.prune_ratio))
        if len(keep) == 0 or not np.isfinite(ll.max()):
            raise TouchError("every candidate was pruned")
        if len(keep) > params.max_centers:
            w = np.exp(ll[keep] - ll[keep].max())
            pick = systematic_indices(w / w.sum(), params.max_centers, rng.random())
            keep = keep[np.unique(pick)]
        rs, ts, last_ll = cr[keep], ct[keep], ll[keep]
        delta = delta * params.zoom
    ll = log_likelihood_batch(rs, ts, mp, mn, s, params.sigma_pos, params.sigma_nor)
    w = np.exp(ll - ll.max())
    return ParticleSet(poses_to_states(rs, ts), w / w.sum(), params.rounds(), "pose")


def ray_intersect(s: ShapeModel, x: Pose, origin, direction):
    """First intersection of a ray with the placed shape: (point, outward normal) or None."""
    o = (np.asarray(origin, dtype=float) - x.t) @ x.r
    d = np.asarray(direction, dtype=float) @ x.r
    d = d / np.linalg.norm(d)
    t_enter, t_exit, face = 0.0, np.inf, -1
    for i, (nrm, off) in enumerate(zip(s.normals, s.offsets)):
        denom = nrm @ d
        dist = off - nrm @ o
        if abs(denom) < 1e-15:
            if dist < 0:
                return None
            continue
        t = dist / denom
        if denom < 0:
            if t > t_enter:
                t_enter, face = t, i
        else:
            t_exit = min(t_exit, t)
    if face < 0 or t_enter > t_exit:
        return None
    p_local = o + t_enter * d
    return se3.transform_point(x, p_local), x.r @ s.normals[face]
