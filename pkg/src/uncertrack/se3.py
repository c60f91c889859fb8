"""Rigid-body math on SO(3) x R^3.

Rotations are plain 3x3 numpy arrays; :class:`Pose` bundles a rotation with a
translation. Perturbations are applied on the left of the mean rotation,
``R = exp(hat(xi)) @ R_mean``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-9
LOG_ANGLE_LIMIT = np.pi - 1e-6


class SE3Error(ValueError):
    pass


def hat(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise SE3Error("hat expects a finite 3-vector")
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def vee(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.array([s[2, 1], s[0, 2], s[1, 0]])


def hat_batch(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def _rodrigues(v: np.ndarray) -> np.ndarray:
    # batched, v: (n, 3)
    theta = np.linalg.norm(v, axis=-1)
    small = theta < 1e-8
    th = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(th) / th)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(th)) / th**2)
    k = hat_batch(v)
    k2 = k @ k
    return np.eye(3) + a[..., None, None] * k + b[..., None, None] * k2


def exp_so3(v) -> np.ndarray:
    """Exponential map so(3) -> SO(3) on the principal branch ``|v| < pi``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise SE3Error("exp_so3 expects a finite 3-vector")
    if np.linalg.norm(v) >= np.pi:
        raise SE3Error("rotation vector norm must be < pi")
    return _rodrigues(v[None])[0]


def exp_so3_batch(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3:
        raise SE3Error("expected an (n, 3) array")
    if np.any(np.linalg.norm(v, axis=1) >= np.pi):
        raise SE3Error("rotation vector norm must be < pi")
    return _rodrigues(v)


def log_so3_batch(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    tr = np.trace(r, axis1=-2, axis2=-1)
    cos_t = np.clip(0.5 * (tr - 1.0), -1.0, 1.0)
    theta = np.arccos(cos_t)
    if np.any(theta >= LOG_ANGLE_LIMIT):
        raise SE3Error("rotation angle too close to pi for a unique logarithm")
    w = np.stack([r[..., 2, 1] - r[..., 1, 2],
                  r[..., 0, 2] - r[..., 2, 0],
                  r[..., 1, 0] - r[..., 0, 1]], axis=-1)
    small = theta < 1e-6
    th = np.where(small, 1.0, theta)
    # theta / (2 sin theta); series near zero
    f = np.where(small, 0.5 + theta**2 / 12.0, th / (2.0 * np.sin(th)))
    return f[..., None] * w


def log_so3(r) -> np.ndarray:
    """Inverse of :func:`exp_so3`; rejects angles at or beyond ``pi - 1e-6``."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise SE3Error("log_so3 expects a 3x3 matrix")
    return log_so3_batch(r[None])[0]


def is_rotation(m, tol: float = ORTHO_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    return (np.linalg.norm(m.T @ m - np.eye(3)) <= tol
            and abs(np.linalg.det(m) - 1.0) <= tol)


def project_to_so3(m) -> np.ndarray:
    """Nearest rotation in the Frobenius sense (polar factor via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class Pose:
    r: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float).reshape(3, 3)
        t = np.array(self.t, dtype=float).reshape(3)
        if not np.all(np.isfinite(t)):
            raise SE3Error("translation must be finite")
        if not is_rotation(r):
            # tolerate drift from long chains, reject anything else
            if (np.all(np.isfinite(r)) and np.linalg.norm(r.T @ r - np.eye(3)) < 1e-6
                    and np.linalg.det(r) > 0):
                r = project_to_so3(r)
            else:
                raise SE3Error("r is not a rotation matrix")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m) -> "Pose":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.r
        m[:3, 3] = self.t
        return m

    def to_dict(self) -> dict:
        return {"r": [float(x) for x in self.r.ravel()],
                "t": [float(x) for x in self.t]}

    @classmethod
    def from_dict(cls, d: dict) -> "Pose":
        r = np.asarray(d["r"], dtype=float)
        t = np.asarray(d["t"], dtype=float)
        if r.size != 9 or t.size != 3:
            raise SE3Error("pose JSON needs 9 rotation and 3 translation values")
        return cls(r.reshape(3, 3), t)

    def __repr__(self):
        return f"Pose(r={self.r.tolist()}, t={self.t.tolist()})"


def compose(a: Pose, b: Pose) -> Pose:
    return Pose(a.r @ b.r, a.r @ b.t + a.t)


def invert(a: Pose) -> Pose:
    rt = a.r.T
    return Pose(rt, -rt @ a.t)


def transform_point(a: Pose, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p @ a.r.T + a.t


def perturb(mean: Pose, xi) -> Pose:
    """Apply a left perturbation ``xi = (xi_R, xi_t)`` to ``mean``."""
    xi = np.asarray(xi, dtype=float)
    return Pose(exp_so3(xi[:3]) @ mean.r, mean.t + xi[3:])


def pose_error(a: Pose, b: Pose) -> np.ndarray:
    """Left perturbation taking ``b`` to ``a``: ``(log(Ra Rb^T), ta - tb)``."""
    return np.concatenate([log_so3(a.r @ b.r.T), a.t - b.t])
