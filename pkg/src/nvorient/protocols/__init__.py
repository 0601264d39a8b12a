"""Measurement protocol simulations: echo, scans, estimation and tracking."""

from .echo import EchoConfig, echo_phase, shift_from_phase
from .estimation import OrientationEstimate, estimate_x, estimate_z, intersect_cones
from .noise import NoiseModel, echo_signal, freq_sensitivity, frequency_sigma, measure_frequency
from .scans import (ScanPoint, TrigonalFit, axial_direction, axial_scan, electric_sign_probe, find_maxima,
                    fit_trigonal, transverse_scan)
from .sensitivity import angle_sensitivity, angle_slope, sensitivity_table
from .tracking import TrackRecord, track_sequence

__all__ = [
    "EchoConfig", "echo_phase", "shift_from_phase",
    "OrientationEstimate", "estimate_x", "estimate_z", "intersect_cones",
    "NoiseModel", "echo_signal", "freq_sensitivity", "frequency_sigma", "measure_frequency",
    "ScanPoint", "TrigonalFit", "axial_direction", "axial_scan", "electric_sign_probe", "find_maxima",
    "fit_trigonal", "transverse_scan",
    "angle_sensitivity", "angle_slope", "sensitivity_table",
    "TrackRecord", "track_sequence",
]
