"""Tracking loop: estimate z then x at every snapshot and reconstruct each step."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DegenerateStepError, NVOrientError
from ..geometry import NVOrientation, RotationStep, misorientation, reconstruct_rotation
from ..spin_model import SpinParams
from .estimation import OrientationEstimate, estimate_x, estimate_z
from .noise import NoiseModel

STATUSES = ("ok", "degenerate", "gap")


@dataclass(frozen=True)
class TrackRecord:
    """One snapshot of a tracking run.

    ``step`` is the rotation reconstructed from the previous good estimate
    (None for the first snapshot, for gaps, and for zero rotations).
    Errors are in rad; ``step_error`` is the angle of R_est R_true^-1.
    """

    index: int
    timestamp: float
    estimate: OrientationEstimate | None
    step: RotationStep | None
    orientation_error: float
    step_error: float
    status: str = "ok"
    message: str = ""

    def as_pair(self) -> tuple[OrientationEstimate | None, RotationStep | None]:
        return self.estimate, self.step


def _step_between(a: NVOrientation, b: NVOrientation) -> tuple[RotationStep | None, str, str]:
    try:
        return reconstruct_rotation(a, b), "ok", ""
    except DegenerateStepError as exc:
        return exc.fallback, "degenerate", str(exc)


def _step_matrix(step: RotationStep | None) -> np.ndarray:
    return np.eye(3) if step is None else step.matrix


def _matrix_angle(m) -> float:
    c = 0.5 * (float(m.trace()) - 1)
    return math.acos(min(1.0, max(-1.0, c)))


def track_sequence(params: SpinParams, true_trajectory: Sequence[NVOrientation], budget_per_step: float,
                   noise: NoiseModel | None, *, B: float = 100.0, E_perp: float = 1.0, mode: str = "dq",
                   initial: NVOrientation | None = None, z_time: float | None = None,
                   max_step: float = math.radians(20)) -> list[TrackRecord]:
    """Simulate the two-point tracking loop over ``true_trajectory``.

    ``budget_per_step`` (s) is the x-estimate averaging time; the z estimate
    uses ``z_time`` (default: the same) and is not counted in the
    timestamps.  The prior for the first snapshot is ``initial`` (default:
    the first true orientation).  Failed estimates become gap records and
    the loop continues from the last good estimate.
    """
    if budget_per_step <= 0:
        raise ValueError("budget_per_step must be positive")
    if not true_trajectory:
        return []
    for i in range(1, len(true_trajectory)):
        if misorientation(true_trajectory[i - 1], true_trajectory[i]) > max_step + 1e-12:
            raise ValueError(f"trajectory step {i} exceeds {math.degrees(max_step):g} deg")
    z_time = budget_per_step if z_time is None else z_time
    prior = OrientationEstimate(initial or true_trajectory[0], 0.0, 0.0, 0.0, 0)
    last_good: OrientationEstimate | None = None
    last_truth: NVOrientation | None = None
    records = []
    for i, truth in enumerate(true_trajectory):
        t = i * budget_per_step
        try:
            z_est = estimate_z(params, prior, B, noise, truth=truth, time=z_time, mode=mode, timestamp=t,
                               rng=None if noise is None else noise.rng(i, 0))
            est = estimate_x(params, z_est.orientation.z_axis, z_est.orientation.x_axis, B, E_perp, noise,
                             truth=truth, time=budget_per_step, mode=mode, timestamp=t,
                             sigma_theta=z_est.sigma_theta, rng=None if noise is None else noise.rng(i, 1))
        except NVOrientError as exc:
            records.append(TrackRecord(i, t, None, None, math.nan, math.nan, "gap", str(exc)))
            continue
        err = misorientation(est.orientation, truth)
        if last_good is None:
            records.append(TrackRecord(i, t, est, None, err, math.nan))
        else:
            step, status, msg = _step_between(last_good.orientation, est.orientation)
            true_m = truth.matrix @ last_truth.matrix.T
            step_err = _matrix_angle(_step_matrix(step) @ true_m.T)
            records.append(TrackRecord(i, t, est, step, err, step_err, status, msg))
        prior, last_good, last_truth = est, est, truth
    return records
