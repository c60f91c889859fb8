"""Gaussian pose beliefs on SO(3) x R^3.

A belief is a mean pose plus a 6x6 covariance over the left perturbation
``(xi_R, xi_t)``, ordered rotation first. Composition and inversion are
propagated to first order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import se3
from .particles import ParticleSet, poses_to_states
from .se3 import Pose

PSD_FLOOR = -1e-12
SYM_TOL = 1e-12
KARCHER_TOL = 1e-10
KARCHER_MAX_ITER = 100


class BeliefError(ValueError):
    pass


def repair_psd(cov, name: str = "cov") -> np.ndarray:
    """Symmetrize and clamp tiny negative eigenvalues; reject real violations."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or not np.all(np.isfinite(cov)):
        raise BeliefError(f"{name} must be a finite square matrix")
    cov = 0.5 * (cov + cov.T)
    lam, vec = np.linalg.eigh(cov)
    if lam.min() < PSD_FLOOR:
        raise BeliefError(f"{name} is not positive semidefinite (eigenvalue {lam.min():.3e})")
    if lam.min() < 0:
        lam = np.clip(lam, 0.0, None)
        cov = (vec * lam) @ vec.T
        cov = 0.5 * (cov + cov.T)
    return cov


@dataclass(frozen=True, eq=False)
class PoseBelief:
    mean: Pose
    cov: np.ndarray

    def __post_init__(self):
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (6, 6):
            raise BeliefError("pose covariance must be 6x6")
        cov = repair_psd(cov)
        cov.setflags(write=False)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def exact(cls, mean: Pose) -> "PoseBelief":
        return cls(mean, np.zeros((6, 6)))

    @classmethod
    def from_sigmas(cls, mean: Pose, rot_sigma, trans_sigma) -> "PoseBelief":
        rs = np.broadcast_to(np.asarray(rot_sigma, dtype=float), (3,))
        ts = np.broadcast_to(np.asarray(trans_sigma, dtype=float), (3,))
        return cls(mean, np.diag(np.concatenate([rs, ts]) ** 2))

    @property
    def cov_rr(self):
        return self.cov[:3, :3]

    @property
    def cov_tt(self):
        return self.cov[3:, 3:]

    def to_dict(self) -> dict:
        return {"mean": self.mean.to_dict(), "cov": [float(x) for x in self.cov.ravel()]}

    @classmethod
    def from_dict(cls, d: dict) -> "PoseBelief":
        cov = np.asarray(d["cov"], dtype=float)
        if cov.size != 36:
            raise BeliefError("belief JSON needs 36 covariance values")
        return cls(Pose.from_dict(d["mean"]), cov.reshape(6, 6))


@dataclass(frozen=True, eq=False)
class PlanarBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.array(self.mean, dtype=float).reshape(3)
        m[2] = wrap_angle(m[2])
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (3, 3):
            raise BeliefError("planar covariance must be 3x3")
        cov = repair_psd(cov)
        m.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", cov)

    def to_dict(self) -> dict:
        return {"mean": [float(x) for x in self.mean], "cov": [float(x) for x in self.cov.ravel()]}


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


def compose_jacobians(a_mean: Pose, b_mean: Pose):
    ra = a_mean.r
    ja = np.eye(6)
    ja[3:, :3] = -se3.hat(ra @ b_mean.t)
    jb = np.zeros((6, 6))
    jb[:3, :3] = ra
    jb[3:, 3:] = ra
    return ja, jb


def compose_beliefs(a: PoseBelief, b: PoseBelief) -> PoseBelief:
    """Belief of ``a * b`` for independent ``a`` and ``b``."""
    ja, jb = compose_jacobians(a.mean, b.mean)
    cov = ja @ a.cov @ ja.T + jb @ b.cov @ jb.T
    return PoseBelief(se3.compose(a.mean, b.mean), cov)


def invert_jacobian(mean: Pose) -> np.ndarray:
    rt = mean.r.T
    j = np.zeros((6, 6))
    j[:3, :3] = -rt
    j[3:, :3] = -se3.hat(rt @ mean.t) @ rt
    j[3:, 3:] = -rt
    return j


def invert_belief(a: PoseBelief) -> PoseBelief:
    j = invert_jacobian(a.mean)
    return PoseBelief(se3.invert(a.mean), j @ a.cov @ j.T)


def draw_perturbations(cov: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws from N(0, cov) through the symmetric square root."""
    lam, vec = np.linalg.eigh(cov)
    root = vec * np.sqrt(np.clip(lam, 0.0, None))
    return rng.standard_normal((n, cov.shape[0])) @ root.T


def apply_perturbations(mean: Pose, xi: np.ndarray):
    rs = se3.exp_so3_batch(xi[:, :3]) @ mean.r
    ts = mean.t + xi[:, 3:]
    return rs, ts


def sample(b: PoseBelief, n: int, rng: np.random.Generator) -> ParticleSet:
    """n equally weighted pose particles drawn from ``b``."""
    if n < 1:
        raise BeliefError("sample count must be at least 1")
    xi = draw_perturbations(b.cov, n, rng)
    rs, ts = apply_perturbations(b.mean, xi)
    return ParticleSet(poses_to_states(rs, ts), np.full(n, 1.0 / n), 0, "pose")


def karcher_mean_rotation(rs: np.ndarray, w: np.ndarray, start=None) -> np.ndarray:
    r_bar = rs[int(np.argmax(w))] if start is None else np.asarray(start)
    for _ in range(KARCHER_MAX_ITER):
        xi = w @ se3.log_so3_batch(rs @ r_bar.T)
        r_bar = se3.project_to_so3(se3.exp_so3(xi) @ r_bar)
        if np.linalg.norm(xi) < KARCHER_TOL:
            break
    return r_bar


def fit_gaussian(p: ParticleSet) -> PoseBelief:
    """Weighted intrinsic mean and perturbation covariance of pose particles."""
    if len(p) < 2:
        raise BeliefError("fitting a Gaussian needs at least two particles")
    total = p.weights.sum()
    if not total > 0:
        raise BeliefError("particle weights sum to zero")
    w = p.weights / total
    rs, ts = p.rotations(), p.translations()
    r_bar = karcher_mean_rotation(rs, w)
    t_bar = w @ ts
    xi = np.concatenate([se3.log_so3_batch(rs @ r_bar.T), ts - t_bar], axis=1)
    cov = (xi * w[:, None]).T @ xi
    return PoseBelief(Pose(r_bar, t_bar), cov)


def monte_carlo_covariance(sampler, n: int) -> PoseBelief:
    """Fit a belief to ``n`` poses produced by calling ``sampler()``."""
    if n < 2:
        raise BeliefError("Monte Carlo estimation needs at least two samples")
    return fit_gaussian(ParticleSet.from_poses(sampler() for _ in range(n)))


def project_to_plane(b: PoseBelief, table: Pose) -> PlanarBelief:
    """(x, y, yaw) marginal of ``b`` expressed in the table frame."""
    local = compose_beliefs(PoseBelief.exact(se3.invert(table)), b)
    r = local.mean.r
    yaw = np.arctan2(r[1, 0], r[0, 0])
    idx = [3, 4, 2]
    cov = local.cov[np.ix_(idx, idx)]
    return PlanarBelief(np.array([local.mean.t[0], local.mean.t[1], yaw]), cov)


def relative_frobenius(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))
