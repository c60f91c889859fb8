"""Pose uncertainty tracking for robotic assembly: SE(3) beliefs, grasp and
touch filters, covariance-shaped hole search and a seeded simulator."""

from .belief import PlanarBelief, PoseBelief, compose_beliefs, fit_gaussian, invert_belief, project_to_plane
from .grasp import ConvexPolygon, GraspParams, grasp_update, simulate_grasp
from .particles import ParticleSet
from .search import circular_spiral, elliptical_spiral, rotation_sweep
from .se3 import Pose, compose, exp_so3, invert, log_so3
from .touch import ScalingSeriesParams, ShapeModel, TouchMeasurement, scaling_series

__version__ = "0.1.0"

__all__ = [
    "ConvexPolygon", "GraspParams", "ParticleSet", "PlanarBelief", "Pose", "PoseBelief",
    "ScalingSeriesParams", "ShapeModel", "TouchMeasurement", "circular_spiral", "compose",
    "compose_beliefs", "elliptical_spiral", "exp_so3", "fit_gaussian", "grasp_update", "invert",
    "invert_belief", "log_so3", "project_to_plane", "rotation_sweep", "scaling_series",
    "simulate_grasp",
]
