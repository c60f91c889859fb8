"""Scenario configuration: loading, defaults and validation."""
from __future__ import annotations

import copy
import json
import math
from importlib import resources
from numbers import Integral, Real

import numpy as np

SECTIONS = ("scene", "noise", "grasp", "touch", "search", "trials")


class ConfigError(Exception):
    """Raised for unreadable or schema-invalid configs.

    ``missing`` distinguishes a missing file from a bad one.
    """

    def __init__(self, message, diagnostics=None, missing=False):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
        self.missing = missing


def default_config() -> dict:
    text = resources.files("uncertrack").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def zero_noise(cfg: dict) -> dict:
    """Copy of ``cfg`` with every noise source switched off."""
    out = copy.deepcopy(cfg)
    for k in list(out["noise"]):
        if k.endswith("_sigma"):
            out["noise"][k] = 0.0
    for k in ("cam_cov", "meas_cov"):
        out["noise"].pop(k, None)
    out["search"]["fixture_sigma_theta"] = 0.0
    out["search"]["fixture_sigma_pos"] = 0.0
    return out


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", missing=True) from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", missing=True) from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON", [f"json: {exc}"]) from exc
    diags = validate_config(cfg)
    if diags:
        raise ConfigError("config failed validation", diags)
    return cfg


def validate(path) -> list[str]:
    """Diagnostics for the config file at ``path``; empty means valid."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", missing=True) from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        return [f"json: {exc}"]
    return validate_config(cfg)


class _Checker:
    def __init__(self):
        self.diags: list[str] = []

    def bad(self, path, msg):
        self.diags.append(f"{path}: {msg}")

    def get(self, d, key, path):
        if not isinstance(d, dict) or key not in d:
            self.bad(f"{path}.{key}" if path else key, "missing")
            return None
        return d[key]

    def real(self, d, key, path, lo=None, hi=None, lo_open=False, hi_open=False):
        v = self.get(d, key, path)
        name = f"{path}.{key}"
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, Real) or not math.isfinite(v):
            self.bad(name, "must be a finite number")
            return None
        if lo is not None and (v < lo or (lo_open and v == lo)):
            self.bad(name, f"must be {'>' if lo_open else '>='} {lo} (got {v})")
        if hi is not None and (v > hi or (hi_open and v == hi)):
            self.bad(name, f"must be {'<' if hi_open else '<='} {hi} (got {v})")
        return v

    def integer(self, d, key, path, lo=None, hi=None):
        v = self.get(d, key, path)
        name = f"{path}.{key}"
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, Integral):
            self.bad(name, "must be an integer")
            return None
        if lo is not None and v < lo:
            self.bad(name, f"must be >= {lo} (got {v})")
        if hi is not None and v > hi:
            self.bad(name, f"must be <= {hi} (got {v})")
        return v

    def vector(self, v, n, name):
        if not isinstance(v, list) or len(v) != n or not all(
                isinstance(x, Real) and not isinstance(x, bool) and math.isfinite(x) for x in v):
            self.bad(name, f"must be a list of {n} finite numbers")
            return None
        return np.array(v, dtype=float)

    def psd(self, m, name):
        m = np.asarray(m, dtype=float)
        if np.abs(m - m.T).max() > 1e-12 * max(1.0, np.abs(m).max()):
            self.bad(name, "must be symmetric")
            return
        lam = np.linalg.eigvalsh(m)
        if lam[0] < -1e-12:
            self.bad(name, f"not positive semidefinite (eigenvalue {lam[0]:.6g})")


def _convex_ccw(pts) -> bool:
    pts = np.asarray(pts, dtype=float)
    e = np.roll(pts, -1, axis=0) - pts
    en = np.roll(e, -1, axis=0)
    return len(pts) >= 3 and bool(np.all(e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0] > 0))


def validate_config(cfg) -> list[str]:
    c = _Checker()
    if not isinstance(cfg, dict):
        return ["config: top level must be an object"]
    for s in SECTIONS:
        if not isinstance(cfg.get(s), dict):
            c.bad(s, "missing section" if s not in cfg else "must be an object")
    if c.diags:
        return c.diags

    sc = cfg["scene"]
    table = c.get(sc, "table", "scene")
    if table is not None:
        r = c.vector(table.get("r"), 9, "scene.table.r") if isinstance(table, dict) else None
        c.vector(table.get("t"), 3, "scene.table.t") if isinstance(table, dict) else c.bad("scene.table", "must be a pose")
        if r is not None:
            m = r.reshape(3, 3)
            if np.linalg.norm(m.T @ m - np.eye(3)) > 1e-9 or abs(np.linalg.det(m) - 1) > 1e-9:
                c.bad("scene.table.r", "not a rotation matrix")
    cam = c.get(sc, "camera", "scene")
    if isinstance(cam, dict):
        p = c.vector(cam.get("position"), 3, "scene.camera.position")
        q = c.vector(cam.get("target"), 3, "scene.camera.target")
        if p is not None and q is not None and np.linalg.norm(p - q) < 1e-6:
            c.bad("scene.camera", "position and target coincide")
    elif cam is not None:
        c.bad("scene.camera", "must be an object")
    objs = c.get(sc, "objects", "scene")
    if isinstance(objs, dict):
        for oid, feat in (("obj1", "pins"), ("obj2", "holes")):
            o = objs.get(oid)
            base = f"scene.objects.{oid}"
            if not isinstance(o, dict):
                c.bad(base, "missing")
                continue
            size = c.vector(o.get("size"), 3, f"{base}.size")
            if size is not None and np.any(size <= 0):
                c.bad(f"{base}.size", "dimensions must be positive")
            c.vector(o.get("xy"), 2, f"{base}.xy")
            c.real(o, "yaw", base)
            for key, need in ((feat, None), (f"{feat}_double", 2)):
                pts = o.get(key)
                if pts is None and need:
                    continue
                if not isinstance(pts, list) or not pts or (need and len(pts) != need):
                    c.bad(f"{base}.{key}", f"must be a list of {need or 'one or more'} 3-vectors")
                    continue
                for i, pt in enumerate(pts):
                    c.vector(pt, 3, f"{base}.{key}[{i}]")
            if "footprint" in o:
                fp = o["footprint"]
                ok = isinstance(fp, list) and all(c.vector(v, 2, f"{base}.footprint[{i}]") is not None
                                                  for i, v in enumerate(fp))
                if ok and not _convex_ccw(fp):
                    c.bad(f"{base}.footprint", "polygon must be strictly convex and counter-clockwise")
    elif objs is not None:
        c.bad("scene.objects", "must be an object")

    nz = cfg["noise"]
    for key in ("cam_rot_sigma", "cam_trans_sigma", "meas_rot_sigma", "meas_trans_sigma",
                "encoder_sigma", "touch_pos_sigma", "touch_nor_sigma"):
        c.real(nz, key, "noise", lo=0.0)
    for key in ("cam_cov", "meas_cov"):
        if key in nz:
            v = c.vector(nz[key], 36, f"noise.{key}")
            if v is not None:
                c.psd(v.reshape(6, 6), f"noise.{key}")
    if nz.get("robot_positioning", "negligible") != "negligible":
        c.bad("noise.robot_positioning", "only 'negligible' is supported")

    gr = cfg["grasp"]
    ax = c.vector(gr.get("closing_axis"), 2, "grasp.closing_axis")
    if ax is not None and abs(np.linalg.norm(ax) - 1) > 1e-9:
        c.bad("grasp.closing_axis", "must be a unit vector")
    c.real(gr, "max_opening", "grasp", lo=0.0, lo_open=True)
    c.real(gr, "closing_step", "grasp", lo=0.0, hi=1e-3, lo_open=True)
    c.real(gr, "sigma_d", "grasp", lo=0.0, lo_open=True)
    c.real(gr, "force_limit_proxy", "grasp", lo=0.0, lo_open=True)
    c.integer(gr, "particles", "grasp", lo=2)
    c.real(gr, "resample_threshold", "grasp", lo=0.0, hi=1.0, lo_open=True)

    tc = cfg["touch"]
    c.integer(tc, "m_per_round", "touch", lo=1)
    c.integer(tc, "max_centers", "touch", lo=1)
    c.integer(tc, "n_touches", "touch", lo=1)
    c.real(tc, "zoom", "touch", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
    c.real(tc, "sigma_pos", "touch", lo=0.0, lo_open=True)
    c.real(tc, "sigma_nor", "touch", lo=0.0, lo_open=True)
    c.real(tc, "prune_ratio", "touch", lo=0.0, hi=1.0, lo_open=True)
    di = c.vector(tc.get("delta_init"), 2, "touch.delta_init")
    df = c.vector(tc.get("delta_final"), 2, "touch.delta_final")
    if df is not None and np.any(df <= 0):
        c.bad("touch.delta_final", "must be positive")
    if di is not None and df is not None and np.any(df >= di):
        c.bad("touch.delta_final", "must be smaller than delta_init componentwise")
    if not isinstance(tc.get("planar"), bool):
        c.bad("touch.planar", "must be true or false")

    se = cfg["search"]
    c.real(se, "tol", "search", lo=0.0, lo_open=True)
    c.real(se, "n_sigma", "search", lo=0.0, lo_open=True)
    c.real(se, "dwell", "search", lo=0.0)
    c.real(se, "sweep_k", "search", lo=0.0, lo_open=True)
    c.real(se, "fixture_sigma_theta", "search", lo=0.0)
    c.real(se, "fixture_sigma_pos", "search", lo=0.0)
    bc = se.get("bench_cov")
    if bc is not None:
        if (isinstance(bc, list) and len(bc) == 2
                and all(c.vector(row, 2, f"search.bench_cov[{i}]") is not None for i, row in enumerate(bc))):
            c.psd(np.array(bc, dtype=float), "search.bench_cov")
        elif not (isinstance(bc, list) and len(bc) == 2):
            c.bad("search.bench_cov", "must be a 2x2 matrix")

    tr = cfg["trials"]
    c.integer(tr, "count", "trials", lo=1)
    c.integer(tr, "seed", "trials", lo=0, hi=2**64 - 1)
    return c.diags
