"""Simulated scene, noisy sensors and the end-to-end insertion scenarios."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import se3
from .belief import (BeliefError, PoseBelief, compose_beliefs, draw_perturbations, fit_gaussian,
                     invert_belief, project_to_plane, wrap_angle)
from .grasp import ConvexPolygon, GraspError, GraspParams, grasp_update, simulate_grasp
from .particles import FilterDivergence, ParticleSet, planar_to_pose_states
from .search import (PlanError, SpiralPlan, circular_spiral, elliptical_spiral, first_hits, pitch_for_tolerance,
                     principal_axes, rotation_sweep, sample_offsets)
from .se3 import Pose
from .touch import ScalingSeriesParams, ShapeModel, TouchError, TouchMeasurement, ray_intersect, scaling_series

STREAMS = {"perception": 1, "grasp": 2, "touch": 3, "search": 4}
SCENARIOS = ("single-pin", "double-pin", "grasp-only", "touch-only", "spiral-bench")


class SceneError(KeyError):
    pass


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named stage of one trial."""
    return np.random.default_rng([int(seed), STREAMS[name]])


@dataclass(frozen=True, eq=False)
class Scene:
    true_poses: dict
    table: Pose
    shapes: dict
    polygons: dict
    camera_truth: Pose
    sizes: dict
    features: dict
    features_double: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class NoiseConfig:
    cam_cov: np.ndarray
    meas_cov: np.ndarray
    encoder_sigma: float = 3e-4
    touch_pos_sigma: float = 5e-4
    touch_nor_sigma: float = math.radians(5.0)
    robot_positioning: float = 0.0  # declared negligible

    def cam_belief(self, scene: Scene) -> PoseBelief:
        return PoseBelief(scene.camera_truth, self.cam_cov)


def look_at(position, target) -> Pose:
    """Camera pose with its z axis pointing from ``position`` to ``target``."""
    p = np.asarray(position, dtype=float)
    z = np.asarray(target, dtype=float) - p
    z /= np.linalg.norm(z)
    ref = np.array([0.0, 0.0, 1.0]) if abs(z[2]) < 0.99 else np.array([1.0, 0.0, 0.0])
    x = np.cross(z, ref)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return Pose(np.column_stack([x, y, z]), p)


def build_scene(cfg: dict) -> Scene:
    sc = cfg["scene"]
    table = Pose.from_dict(sc["table"])
    cam = look_at(sc["camera"]["position"], sc["camera"]["target"])
    poses, shapes, polys, sizes, feats, feats2 = {}, {}, {}, {}, {}, {}
    for oid, o in sc["objects"].items():
        size = np.asarray(o["size"], dtype=float)
        local = Pose(se3.rot_z(o["yaw"]), [o["xy"][0], o["xy"][1], size[2] / 2])
        poses[oid] = se3.compose(table, local)
        shapes[oid] = ShapeModel.from_box(size)
        polys[oid] = ConvexPolygon(o["footprint"]) if "footprint" in o else ConvexPolygon.rectangle(size[0], size[1])
        sizes[oid] = size
        key = "pins" if "pins" in o else "holes"
        feats[oid] = np.asarray(o[key], dtype=float)
        if f"{key}_double" in o:
            feats2[oid] = np.asarray(o[f"{key}_double"], dtype=float)
    return Scene(poses, table, shapes, polys, cam, sizes, feats, feats2)


def _pose_cov(rot_sigma, trans_sigma):
    return np.diag([rot_sigma**2] * 3 + [trans_sigma**2] * 3)


def noise_from_config(cfg: dict) -> NoiseConfig:
    nz = cfg["noise"]
    cam = (np.asarray(nz["cam_cov"], dtype=float).reshape(6, 6) if "cam_cov" in nz
           else _pose_cov(nz["cam_rot_sigma"], nz["cam_trans_sigma"]))
    meas = (np.asarray(nz["meas_cov"], dtype=float).reshape(6, 6) if "meas_cov" in nz
            else _pose_cov(nz["meas_rot_sigma"], nz["meas_trans_sigma"]))
    return NoiseConfig(cam, meas, nz["encoder_sigma"], nz["touch_pos_sigma"], nz["touch_nor_sigma"])


def grasp_params(cfg: dict) -> GraspParams:
    g = cfg["grasp"]
    return GraspParams(tuple(g["closing_axis"]), g["max_opening"], g["closing_step"], g["sigma_d"],
                       g["force_limit_proxy"])


def touch_params(cfg: dict) -> ScalingSeriesParams:
    t = cfg["touch"]
    return ScalingSeriesParams(t["m_per_round"], t["zoom"], tuple(t["delta_init"]), tuple(t["delta_final"]),
                               t["sigma_pos"], t["sigma_nor"], t["prune_ratio"], t["max_centers"], t["planar"])


def _draw_pose(mean: Pose, cov, rng) -> Pose:
    xi = draw_perturbations(np.asarray(cov), 1, rng)[0]
    return se3.perturb(mean, xi)


def observe_object(scene: Scene, nc: NoiseConfig, oid: str, rng: np.random.Generator) -> PoseBelief:
    """Noisy camera-based estimate of object ``oid`` in the base frame.

    One camera pose and one object-in-camera pose are drawn around the truth;
    the result composes the two beliefs centered on those draws.
    """
    if oid not in scene.true_poses:
        raise SceneError(f"unknown object id: {oid}")
    cam = _draw_pose(scene.camera_truth, nc.cam_cov, rng)
    c_t_o = se3.compose(se3.invert(scene.camera_truth), scene.true_poses[oid])
    meas = _draw_pose(c_t_o, nc.meas_cov, rng)
    return compose_beliefs(PoseBelief(cam, nc.cam_cov), PoseBelief(meas, nc.meas_cov))


def simulate_encoder(true_in_gripper, poly: ConvexPolygon, g: GraspParams, encoder_sigma: float,
                     rng: np.random.Generator) -> float:
    """Finger distance after grasping the true pose, with Gaussian encoder noise."""
    out = simulate_grasp(true_in_gripper, poly, g)
    noise = rng.normal(0.0, encoder_sigma) if encoder_sigma > 0 else 0.0
    return float(np.clip(out.width + noise, 0.0, g.max_opening))


def _random_perpendicular(n, rng):
    a = rng.standard_normal(3)
    a -= (a @ n) * n
    return a / np.linalg.norm(a)


def simulate_touch(scene: Scene, nc: NoiseConfig, oid: str, probe_ray, rng: np.random.Generator) -> TouchMeasurement:
    """First contact of ``probe_ray = (origin, direction)`` with the true object, with sensor noise."""
    if oid not in scene.true_poses:
        raise SceneError(f"unknown object id: {oid}")
    origin, direction = probe_ray
    hit = ray_intersect(scene.shapes[oid], scene.true_poses[oid], origin, direction)
    if hit is None:
        raise TouchError("probe ray misses the object")
    p, n = hit
    if nc.touch_pos_sigma > 0:
        p = p + rng.normal(0.0, nc.touch_pos_sigma, 3)
    if nc.touch_nor_sigma > 0:
        axis = _random_perpendicular(n, rng)
        n = se3.exp_so3(axis * rng.normal(0.0, nc.touch_nor_sigma)) @ n
    return TouchMeasurement(p, n / np.linalg.norm(n))


def run_insertion_trial(plan: SpiralPlan, belief_cov, truth_offset, tol: float, dwell: float) -> dict:
    """Walk the plan from the believed hole position until a probe lands within ``tol``."""
    truth_offset = np.asarray(truth_offset, dtype=float)
    hit = int(first_hits(plan.waypoints, truth_offset[None], tol)[0])
    steps = hit if hit else len(plan)
    last = plan.waypoints[steps - 1]
    return {"steps": steps, "seconds": steps * dwell, "success": bool(hit), "plan_size": len(plan),
            "final_error": float(np.linalg.norm(last - truth_offset)),
            "mahalanobis2": _mahalanobis2(truth_offset, belief_cov)}


def _mahalanobis2(x, cov) -> float:
    x = np.asarray(x, dtype=float)
    cov = np.asarray(cov, dtype=float)
    inv = np.linalg.pinv(cov, rcond=1e-12, hermitian=True)
    resid = x - cov @ (inv @ x)
    if np.linalg.norm(resid) > 1e-12:
        return math.inf
    return float(x @ inv @ x)


def point_covariance(b: PoseBelief, p_local) -> np.ndarray:
    """Covariance of ``b.mean * p_local`` to first order (3x3)."""
    j = np.zeros((3, 6))
    j[:, :3] = -se3.hat(b.mean.r @ np.asarray(p_local, dtype=float))
    j[:, 3:] = np.eye(3)
    return j @ b.cov @ j.T


@dataclass
class TrialReport:
    scenario: str
    seed: int
    stages: dict = field(default_factory=dict)
    steps: int = 0
    seconds: float = 0.0
    success: bool = False
    error: str | None = None
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "stages": self.stages, "steps": self.steps,
                "seconds": self.seconds, "success": self.success, "error": self.error,
                "metrics": self.metrics}

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), sort_keys=True, separators=(",", ":"), allow_nan=True)


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class _StageFailure(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (GraspError, FilterDivergence, TouchError, BeliefError, PlanError, se3.SE3Error, ValueError) as exc:
        raise _StageFailure(name, exc) from exc


def _gripper_pose(scene: Scene, planar_mean, oid: str) -> Pose:
    local = Pose(se3.rot_z(planar_mean[2]), [planar_mean[0], planar_mean[1], scene.sizes[oid][2] / 2])
    return se3.compose(scene.table, local)


def _planar_of(pose: Pose):
    return np.array([pose.t[0], pose.t[1], math.atan2(pose.r[1, 0], pose.r[0, 0])])


def _lift(planar) -> Pose:
    return Pose(se3.rot_z(planar[2]), [planar[0], planar[1], 0.0])


def grasp_stage(scene: Scene, cfg: dict, b2: PoseBelief, rng: np.random.Generator, oid: str = "obj2"):
    """Grasp the object at its estimated planar pose and fit the in-gripper belief.

    Returns (in-gripper belief, true in-gripper pose, gripper pose, metrics).
    """
    nc = noise_from_config(cfg)
    g = grasp_params(cfg)
    poly = scene.polygons[oid]
    planar = project_to_plane(b2, scene.table)
    gripper = _gripper_pose(scene, planar.mean, oid)
    true_rel = _planar_of(se3.compose(se3.invert(gripper), scene.true_poses[oid]))

    n = cfg["grasp"]["particles"]
    draws = draw_perturbations(planar.cov, n, rng) + planar.mean
    c, s = math.cos(planar.mean[2]), math.sin(planar.mean[2])
    d = draws[:, :2] - planar.mean[:2]
    prior_states = np.column_stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1],
                                    wrap_angle(draws[:, 2] - planar.mean[2])])
    y = simulate_encoder(true_rel, poly, g, nc.encoder_sigma, rng)
    post = grasp_update(ParticleSet.uniform(prior_states, kind="planar"), poly, g, y, rng,
                        cfg["grasp"]["resample_threshold"])
    belief = fit_gaussian(ParticleSet(planar_to_pose_states(post.states), post.weights, post.generation, "pose"))
    true_final = simulate_grasp(true_rel, poly, g).final_pose
    t_ax, n_ax = g.axes
    err = np.asarray(true_final[:2]) - belief.mean.t[:2]
    metrics = {"encoder_reading": y,
               "closing_axis_std": float(math.sqrt(max(n_ax @ belief.cov[3:5, 3:5] @ n_ax, 0.0))),
               "tangential_std": float(math.sqrt(max(t_ax @ belief.cov[3:5, 3:5] @ t_ax, 0.0))),
               "orientation_std": float(math.sqrt(belief.cov[2, 2])),
               "closing_axis_error": float(abs(err @ n_ax)),
               "tangential_error": float(abs(err @ t_ax))}
    return belief, _lift(true_final), gripper, metrics


def _insertion_geometry(scene: Scene, pins, holes):
    return Pose(np.eye(3), pins[0] - holes[0])


def _spiral_for(cov_xy, cfg):
    se = cfg["search"]
    return elliptical_spiral(cov_xy, se["tol"], se["n_sigma"])


def _circular_for(cov_xy, cfg):
    se = cfg["search"]
    s_major, _, _ = principal_axes(cov_xy)
    pitch = pitch_for_tolerance(se["tol"])
    if s_major == 0.0:
        return SpiralPlan(np.zeros((1, 2)), pitch, 0.0, "point")
    return circular_spiral(pitch, max(se["n_sigma"] * s_major, pitch))


def _relative_chain(b1: PoseBelief, b_e_o2: PoseBelief, target: Pose):
    """Commanded end-effector pose and the resulting relative belief obj1 -> obj2."""
    cmd = se3.compose(b1.mean, se3.compose(target, se3.invert(b_e_o2.mean)))
    rel = compose_beliefs(compose_beliefs(invert_belief(b1), PoseBelief.exact(cmd)), b_e_o2)
    return cmd, rel


def run_single_pin_scenario(cfg: dict, seed: int) -> TrialReport:
    rep = TrialReport("single-pin", int(seed))
    try:
        scene = build_scene(cfg)
        nc = noise_from_config(cfg)
        rng_p = substream(seed, "perception")
        b1 = _stage("perception", observe_object, scene, nc, "obj1", rng_p)
        b2 = _stage("perception", observe_object, scene, nc, "obj2", rng_p)
        rep.stages["perception"] = {"obj1": b1.to_dict(), "obj2": b2.to_dict()}
        b_eo2, true_eo2, _, gm = _stage("grasp", grasp_stage, scene, cfg, b2, substream(seed, "grasp"))
        rep.stages["grasp"] = b_eo2.to_dict()
        rep.metrics.update(gm)
        pin = scene.features["obj1"][0]
        hole = scene.features["obj2"][0]
        target = _insertion_geometry(scene, scene.features["obj1"], scene.features["obj2"])
        cmd, rel = _stage("propagation", _relative_chain, b1, b_eo2, target)
        rep.stages["relative"] = rel.to_dict()
        true_rel = se3.compose(se3.compose(se3.invert(scene.true_poses["obj1"]), cmd), true_eo2)
        cov_xy = point_covariance(rel, hole)[:2, :2]
        offset = pin[:2] - se3.transform_point(true_rel, hole)[:2]
        plan = _stage("search", _spiral_for, cov_xy, cfg)
        se = cfg["search"]
        res = run_insertion_trial(plan, cov_xy, offset, se["tol"], se["dwell"])
        base = run_insertion_trial(_stage("search", _circular_for, cov_xy, cfg), cov_xy, offset,
                                   se["tol"], se["dwell"])
        rep.steps, rep.seconds, rep.success = res["steps"], res["seconds"], res["success"]
        rep.metrics.update({"plan_size": res["plan_size"], "final_error": res["final_error"],
                            "mahalanobis2": res["mahalanobis2"],
                            "circular_steps": base["steps"], "circular_seconds": base["seconds"],
                            "circular_success": base["success"], "cov_xy": cov_xy, "truth_offset": offset,
                            "pose_mahalanobis2": _mahalanobis2(se3.pose_error(true_rel, rel.mean), rel.cov)})
    except _StageFailure as exc:
        rep.error = str(exc)
        rep.success = False
    return rep


def fixture_belief(cfg: dict) -> PoseBelief:
    """In-gripper belief once the grasped object has been squared against a known surface."""
    se = cfg["search"]
    st, sp = se["fixture_sigma_theta"], se["fixture_sigma_pos"]
    return PoseBelief(Pose.identity(), np.diag([0.0, 0.0, st**2, sp**2, sp**2, 0.0]))


def run_double_pin_scenario(cfg: dict, seed: int) -> TrialReport:
    rep = TrialReport("double-pin", int(seed))
    try:
        scene = build_scene(cfg)
        nc = noise_from_config(cfg)
        if "obj1" not in scene.features_double or "obj2" not in scene.features_double:
            raise _StageFailure("config", ValueError("double-pin needs pins_double and holes_double"))
        pins, holes = scene.features_double["obj1"], scene.features_double["obj2"]
        rng_p = substream(seed, "perception")
        b1 = _stage("perception", observe_object, scene, nc, "obj1", rng_p)
        rep.stages["perception"] = {"obj1": b1.to_dict()}
        b_eo2 = fixture_belief(cfg)
        true_eo2 = _stage("grasp", _draw_pose, b_eo2.mean, b_eo2.cov, substream(seed, "grasp"))
        rep.stages["grasp"] = b_eo2.to_dict()
        target = Pose(np.eye(3), pins[0] - holes[0])
        cmd, rel = _stage("propagation", _relative_chain, b1, b_eo2, target)
        rep.stages["relative"] = rel.to_dict()
        true_rel = se3.compose(se3.compose(se3.invert(scene.true_poses["obj1"]), cmd), true_eo2)
        se = cfg["search"]
        tol, dwell = se["tol"], se["dwell"]

        cov_xy = point_covariance(rel, holes[0])[:2, :2]
        offset = pins[0][:2] - se3.transform_point(true_rel, holes[0])[:2]
        plan = _stage("search", _spiral_for, cov_xy, cfg)
        s1 = run_insertion_trial(plan, cov_xy, offset, tol, dwell)

        # seat pin 1: slide by the true offset, then sweep about the pin axis
        seated = Pose(true_rel.r, true_rel.t + np.array([offset[0], offset[1], 0.0]))
        h2 = se3.transform_point(seated, holes[1])[:2] - pins[0][:2]
        p2 = pins[1][:2] - pins[0][:2]
        radius = float(np.linalg.norm(p2))
        need = math.atan2(h2[0] * p2[1] - h2[1] * p2[0], h2 @ p2)
        sigma_theta = math.sqrt(max(rel.cov[2, 2], 0.0))
        ang_tol = 2.0 * math.asin(min(1.0, tol / (2.0 * radius)))
        step = 0.98 * 2.0 * ang_tol
        if sigma_theta > 0:
            sweep = rotation_sweep(sigma_theta, se["sweep_k"], step)
            angles = sweep.angles
        else:
            angles = np.zeros(1)
        chord = 2.0 * radius * np.abs(np.sin((angles - need) / 2.0))
        ok = np.flatnonzero(chord <= tol)
        s2_steps = int(ok[0]) + 1 if len(ok) else len(angles)
        s2_success = bool(len(ok)) and s1["success"]
        rep.steps = s1["steps"] + s2_steps
        rep.seconds = rep.steps * dwell
        rep.success = bool(s1["success"] and s2_success)
        rep.metrics.update({"stage1_steps": s1["steps"], "stage1_success": s1["success"],
                            "stage2_steps": s2_steps, "stage2_success": s2_success,
                            "sigma_theta": sigma_theta, "true_angle": need, "sweep_size": len(angles),
                            "mahalanobis2": s1["mahalanobis2"], "cov_xy": cov_xy})
    except _StageFailure as exc:
        rep.error = str(exc)
        rep.success = False
    return rep


def run_grasp_only_scenario(cfg: dict, seed: int) -> TrialReport:
    rep = TrialReport("grasp-only", int(seed))
    try:
        scene = build_scene(cfg)
        nc = noise_from_config(cfg)
        b2 = _stage("perception", observe_object, scene, nc, "obj2", substream(seed, "perception"))
        rep.stages["perception"] = {"obj2": b2.to_dict()}
        b_eo2, _, _, gm = _stage("grasp", grasp_stage, scene, cfg, b2, substream(seed, "grasp"))
        rep.stages["grasp"] = b_eo2.to_dict()
        rep.metrics.update(gm)
        rep.success = gm["closing_axis_error"] <= cfg["search"]["tol"]
    except _StageFailure as exc:
        rep.error = str(exc)
    return rep


def touch_rays(scene: Scene, estimate: Pose, oid: str, n: int, rng: np.random.Generator, standoff: float = 0.05):
    """Probe rays aimed at the +x, -x and +y side faces of the estimated box."""
    h = scene.sizes[oid] / 2
    faces = [np.array([1.0, 0, 0]), np.array([-1.0, 0, 0]), np.array([0, 1.0, 0])]
    rays = []
    for i in range(n):
        nrm = faces[i % len(faces)]
        ax = int(np.argmax(np.abs(nrm)))
        p = rng.uniform(-0.8, 0.8, 3) * h
        p[ax] = h[ax] * nrm[ax]
        origin = se3.transform_point(estimate, p + standoff * nrm)
        rays.append((origin, -(estimate.r @ nrm)))
    return rays


def run_touch_only_scenario(cfg: dict, seed: int) -> TrialReport:
    rep = TrialReport("touch-only", int(seed))
    try:
        scene = build_scene(cfg)
        nc = noise_from_config(cfg)
        b1 = _stage("perception", observe_object, scene, nc, "obj1", substream(seed, "perception"))
        rep.stages["perception"] = {"obj1": b1.to_dict()}
        rng_t = substream(seed, "touch")
        meas = []
        for ray in touch_rays(scene, b1.mean, "obj1", 3 * cfg["touch"]["n_touches"], rng_t):
            try:
                meas.append(simulate_touch(scene, nc, "obj1", ray, rng_t))
            except TouchError:
                continue
            if len(meas) == cfg["touch"]["n_touches"]:
                break
        if not meas:
            raise _StageFailure("touch", TouchError("no probe hit the object"))
        prior = b1
        if cfg["touch"]["planar"]:
            # the box rests upright on the table: height, roll and pitch are known
            planar = project_to_plane(b1, scene.table)
            prior = PoseBelief(_gripper_pose(scene, planar.mean, "obj1"), b1.cov)
        ps = _stage("touch", scaling_series, prior, meas, scene.shapes["obj1"], touch_params(cfg), rng_t)
        post = _stage("touch", fit_gaussian, ps) if len(ps) > 1 else PoseBelief.exact(ps.pose(0))
        rep.stages["touch"] = post.to_dict()
        err = se3.pose_error(post.mean, scene.true_poses["obj1"])
        pos_err = float(np.linalg.norm(err[3:]))
        rep.metrics.update({"touches": len(meas), "particles": len(ps), "position_error": pos_err,
                            "rotation_error": float(np.linalg.norm(err[:3]))})
        rep.success = pos_err <= cfg["search"]["tol"]
    except _StageFailure as exc:
        rep.error = str(exc)
    return rep


def run_spiral_bench(cfg: dict, seed: int) -> TrialReport:
    rep = TrialReport("spiral-bench", int(seed))
    try:
        se = cfg["search"]
        cov = np.asarray(se.get("bench_cov", [[9e-6, 0.0], [0.0, 1e-6]]), dtype=float)
        plan = _stage("search", _spiral_for, cov, cfg)
        circ = _stage("search", _circular_for, cov, cfg)
        offset = sample_offsets(cov, 1, substream(seed, "search"))[0]
        res = run_insertion_trial(plan, cov, offset, se["tol"], se["dwell"])
        base = run_insertion_trial(circ, cov, offset, se["tol"], se["dwell"])
        rep.steps, rep.seconds, rep.success = res["steps"], res["seconds"], res["success"]
        rep.metrics.update({"circular_steps": base["steps"], "circular_seconds": base["seconds"],
                            "circular_success": base["success"], "truth_offset": offset,
                            "plan_size": res["plan_size"], "circular_plan_size": base["plan_size"],
                            "final_error": res["final_error"], "cov_xy": cov})
    except _StageFailure as exc:
        rep.error = str(exc)
    return rep


RUNNERS = {
    "single-pin": run_single_pin_scenario,
    "double-pin": run_double_pin_scenario,
    "grasp-only": run_grasp_only_scenario,
    "touch-only": run_touch_only_scenario,
    "spiral-bench": run_spiral_bench,
}


def run_scenario(name: str, cfg: dict, seed: int) -> TrialReport:
    if name not in RUNNERS:
        raise ValueError(f"unknown scenario: {name}")
    return RUNNERS[name](cfg, seed)
