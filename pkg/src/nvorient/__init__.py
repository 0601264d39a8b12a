"""Spin-1 ground-state model of the NV centre and orientation-measurement protocols."""

from .errors import NVOrientError
from .geometry import CrystalAlignment, NVOrientation, RotationStep, reconstruct_rotation
from .spin_model import FieldConfig, SpinParams, SpinSpectrum, exact_spectrum

__version__ = "0.1.0"

__all__ = [
    "NVOrientError", "CrystalAlignment", "NVOrientation", "RotationStep", "reconstruct_rotation",
    "FieldConfig", "SpinParams", "SpinSpectrum", "exact_spectrum", "__version__",
]
