"""Weighted particle sets: Bayes update, ESS and systematic resampling."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .se3 import Pose

POSE_DIM = 12
PLANAR_DIM = 3


class FilterDivergence(RuntimeError):
    """Every particle received zero posterior weight."""


class ParticleError(ValueError):
    pass


def poses_to_states(rs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Pack rotations (n,3,3) and translations (n,3) into (n,12) rows."""
    rs = np.asarray(rs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    return np.concatenate([rs.reshape(len(rs), 9), ts.reshape(len(ts), 3)], axis=1)


def states_to_poses(states: np.ndarray):
    states = np.asarray(states, dtype=float)
    return states[:, :9].reshape(-1, 3, 3), states[:, 9:12]


def planar_to_pose_states(planar: np.ndarray, z: float = 0.0) -> np.ndarray:
    """Lift (x, y, theta) rows to pose rows rotating about z."""
    planar = np.asarray(planar, dtype=float)
    c, s = np.cos(planar[:, 2]), np.sin(planar[:, 2])
    n = len(planar)
    rs = np.zeros((n, 3, 3))
    rs[:, 0, 0] = c
    rs[:, 0, 1] = -s
    rs[:, 1, 0] = s
    rs[:, 1, 1] = c
    rs[:, 2, 2] = 1.0
    ts = np.column_stack([planar[:, 0], planar[:, 1], np.full(n, z)])
    return poses_to_states(rs, ts)


@dataclass(frozen=True, eq=False)
class ParticleSet:
    """Particles as rows of ``states`` with matching nonnegative ``weights``.

    Pose particles use 12 columns (row-major rotation, then translation);
    planar particles use 3 columns (x, y, theta).
    """
    states: np.ndarray
    weights: np.ndarray
    generation: int = 0
    kind: str = field(default="")

    def __post_init__(self):
        s = np.array(self.states, dtype=float)
        if s.ndim != 2 or len(s) == 0:
            raise ParticleError("particle set must be a nonempty 2-D array")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if len(w) != len(s):
            raise ParticleError("one weight per particle is required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ParticleError("weights must be finite and nonnegative")
        kind = self.kind or ("pose" if s.shape[1] == POSE_DIM else
                             "planar" if s.shape[1] == PLANAR_DIM else "generic")
        s.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "kind", kind)

    def __len__(self):
        return len(self.states)

    @classmethod
    def uniform(cls, states, generation: int = 0, kind: str = "") -> "ParticleSet":
        n = len(states)
        return cls(states, np.full(n, 1.0 / n), generation, kind)

    @classmethod
    def from_poses(cls, poses, weights=None) -> "ParticleSet":
        poses = list(poses)
        states = poses_to_states(np.array([p.r for p in poses]),
                                 np.array([p.t for p in poses]))
        if weights is None:
            weights = np.full(len(poses), 1.0 / len(poses))
        return cls(states, weights, 0, "pose")

    def rotations(self) -> np.ndarray:
        self._need_pose()
        return self.states[:, :9].reshape(-1, 3, 3)

    def translations(self) -> np.ndarray:
        self._need_pose()
        return self.states[:, 9:12]

    def pose(self, i: int) -> Pose:
        self._need_pose()
        return Pose(self.states[i, :9].reshape(3, 3), self.states[i, 9:12])

    def _need_pose(self):
        if self.kind != "pose":
            raise ParticleError("operation needs pose particles")

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.weights.sum() - 1.0) <= tol

    def normalized(self) -> "ParticleSet":
        total = self.weights.sum()
        if total <= 0:
            raise FilterDivergence("total particle weight is zero")
        return ParticleSet(self.states, self.weights / total, self.generation, self.kind)

    def mean_state(self) -> np.ndarray:
        w = self.weights / self.weights.sum()
        return w @ self.states

    def to_csv(self, path) -> None:
        """One row per particle: state columns then the weight."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            if self.kind == "pose":
                header = [f"r{i}{j}" for i in range(3) for j in range(3)] + ["tx", "ty", "tz"]
            elif self.kind == "planar":
                header = ["x", "y", "theta"]
            else:
                header = [f"s{i}" for i in range(self.states.shape[1])]
            wr.writerow(header + ["weight"])
            for row, w in zip(self.states, self.weights):
                wr.writerow([repr(float(v)) for v in row] + [repr(float(w))])

    @classmethod
    def from_csv(cls, path) -> "ParticleSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(data[:, :-1], data[:, -1])


def bayes_update(p: ParticleSet, likelihood) -> ParticleSet:
    """Multiply weights by ``likelihood(states)`` and renormalize.

    ``likelihood`` receives the full (n, d) state array and returns n
    nonnegative values.
    """
    lik = np.asarray(likelihood(p.states), dtype=float).reshape(-1)
    if lik.shape != p.weights.shape:
        raise ParticleError("likelihood must return one value per particle")
    if np.any(lik < 0) or not np.all(np.isfinite(lik)):
        raise ParticleError("likelihood values must be finite and nonnegative")
    w = p.weights * lik
    total = w.sum()
    if not total > 0:
        raise FilterDivergence("measurement is inconsistent with every particle")
    return ParticleSet(p.states, w / total, p.generation + 1, p.kind)


def effective_sample_size(p: ParticleSet) -> float:
    if not p.is_normalized(1e-9):
        raise ParticleError("effective sample size needs normalized weights")
    return float(1.0 / np.sum(p.weights ** 2))


def systematic_indices(weights: np.ndarray, n: int, offset: float) -> np.ndarray:
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    pos = (offset + np.arange(n)) / n
    return np.searchsorted(cdf, pos, side="right")


def systematic_resample(p: ParticleSet, rng: np.random.Generator, n: int | None = None) -> ParticleSet:
    """Systematic resampling with a single uniform offset."""
    total = p.weights.sum()
    if not total > 0:
        raise FilterDivergence("cannot resample a set with zero total weight")
    if not p.is_normalized(1e-9):
        raise ParticleError("systematic resampling needs normalized weights")
    n = len(p) if n is None else n
    idx = systematic_indices(p.weights, n, rng.random())
    return ParticleSet(p.states[idx], np.full(n, 1.0 / n), p.generation, p.kind)


def resample_if_degenerate(p: ParticleSet, rng: np.random.Generator, threshold: float = 0.5) -> ParticleSet:
    if effective_sample_size(p) < threshold * len(p):
        return systematic_resample(p, rng)
    return p
