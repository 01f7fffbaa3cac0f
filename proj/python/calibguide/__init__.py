"""Stereo calibration next-optimal-pose toolkit."""

import json

from ._calibguide import (
    BoardSpec,
    CalibError,
    CameraModel,
    Pose,
    StereoRig,
    board_corners,
    compose,
    is_visible,
    next_optimal_pose,
    project,
    relative_covariance,
    rotation_error,
    solve_pnp,
    synthesize_view,
    translation_error,
    triangulate,
)
from . import _calibguide

__all__ = [
    "BoardSpec",
    "CalibError",
    "CameraModel",
    "Pose",
    "StereoRig",
    "board_corners",
    "calibrate",
    "compare_strategies",
    "compose",
    "is_visible",
    "next_optimal_pose",
    "next_pose",
    "project",
    "reference_experiment",
    "relative_covariance",
    "rotation_error",
    "run_convergence",
    "solve_pnp",
    "synthesize_view",
    "translation_error",
    "triangulate",
]


def calibrate(dataset, kernel="huber:1.0"):
    """Calibrates a dataset dict ({left, right, board, views}); returns the result dict."""
    return json.loads(_calibguide._calibrate_json(json.dumps(dataset), kernel))


def next_pose(session, seed=None):
    """Next optimal pose for a session dict, as written by the service or the CLI."""
    return json.loads(_calibguide._next_pose_json(json.dumps(session), seed))


def run_convergence(config):
    """Convergence CSV text for an experiment config dict."""
    return _calibguide._simulate_csv(json.dumps(config))


def compare_strategies(config):
    """Scheme-table CSV text for an experiment config dict."""
    return _calibguide._compare_csv(json.dumps(config))


def reference_experiment():
    """Default experiment config as a dict."""
    return json.loads(_calibguide._reference_experiment_json())
