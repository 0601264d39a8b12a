"""Angle sensitivities obtained by dividing the frequency sensitivity by a slope."""

from __future__ import annotations

import math
import warnings

from ..analytic_spectra import d_delta_f
from ..errors import UselessWorkingPointError, WorkingPointWarning
from ..spin_model import FieldConfig, SpinParams
from .noise import NoiseModel, freq_sensitivity


def working_point_fields(which: str, working_point: float, B: float, E_perp: float) -> FieldConfig:
    """Defect-frame fields at the working point of a theta or gamma measurement."""
    if which == "theta":
        return FieldConfig([B * math.sin(working_point), 0.0, B * math.cos(working_point)], [0, 0, 0], "nv")
    if which == "gamma":
        # parallel transverse fields (delta = 0) at azimuth gamma
        d = [math.cos(working_point), math.sin(working_point), 0.0]
        return FieldConfig([B * v for v in d], [E_perp * v for v in d], "nv")
    raise ValueError(f"which must be 'theta' or 'gamma', got {which!r}")


def angle_slope(params: SpinParams, mode: str, which: str, working_point: float, B: float, E_perp: float) -> float:
    """|d observable / d angle| in Hz/rad."""
    fields = working_point_fields(which, working_point, B, E_perp)
    angle = "theta_B" if which == "theta" else "gamma_comb"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WorkingPointWarning)
        slope = d_delta_f(params, fields, angle, mode)
    return abs(slope) * 1e9


def angle_sensitivity(params: SpinParams, noise: NoiseModel, mode: str, which: str,
                      working_point: float, B: float, E_perp: float) -> float:
    """Angle sensitivity in deg/sqrt(Hz); ``working_point`` in rad."""
    slope = angle_slope(params, mode, which, working_point, B, E_perp)
    if slope < 1e-6:
        raise UselessWorkingPointError(
            f"{which} slope vanishes at working point {math.degrees(working_point):.3f} deg")
    return math.degrees(freq_sensitivity(noise) / slope)


def sensitivity_table(params: SpinParams, noise: NoiseModel, *, B: float = 100.0, E_perp: float = 1.0,
                      theta_working_point: float = math.radians(60),
                      gamma_working_point: float = math.radians(30)) -> dict[str, float]:
    """Frequency sensitivity and the four sq/dq angle sensitivities."""
    return {
        "delta_nu": freq_sensitivity(noise),
        "delta_theta_sq": angle_sensitivity(params, noise, "sq", "theta", theta_working_point, B, E_perp),
        "delta_gamma_sq": angle_sensitivity(params, noise, "sq", "gamma", gamma_working_point, B, E_perp),
        "delta_theta_dq": angle_sensitivity(params, noise, "dq", "theta", theta_working_point, B, E_perp),
        "delta_gamma_dq": angle_sensitivity(params, noise, "dq", "gamma", gamma_working_point, B, E_perp),
    }
