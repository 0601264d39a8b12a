"""Photon shot-noise model and frequency sensitivity.

A single ODMR sequence of length T_c ends with an optical readout that
collects on average ``photons_per_shot`` photons from the bright |0> state
and ``(1 - contrast)`` times that from the dark state.  The population
difference s = P0 - P1 estimated from N shots therefore has standard
deviation

    sigma_s = 2 sqrt(mu) / (N n contrast),   mu = N n (1 - contrast (1 - s)/2)

For a phase accumulated over T_c with an exp(-1) coherence envelope the
frequency sensitivity is C / sqrt(T_c) with C = sigma_1 e / (2 pi), sigma_1
being the single-shot noise at s = 0.  ``photons_per_shot`` is chosen so
this relation reproduces ``C_factor`` exactly; with 200 kcounts/s and 30 %
contrast it corresponds to a readout window of about 0.25 us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import FieldInputError


@dataclass(frozen=True)
class NoiseModel:
    count_rate: float = 200.0  # kcounts/s
    contrast: float = 0.30
    C_factor: float = 12.0
    T_c: float = 1.0  # ms
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.count_rate > 0 and math.isfinite(self.count_rate)):
            raise FieldInputError("count_rate must be positive")
        if not 0 < self.contrast <= 1:
            raise FieldInputError("contrast must be in (0, 1]")
        if not (self.C_factor > 0 and math.isfinite(self.C_factor)):
            raise FieldInputError("C_factor must be positive")
        if not (self.T_c > 0 and math.isfinite(self.T_c)):
            raise FieldInputError("T_c must be positive")

    @property
    def T_c_seconds(self) -> float:
        return self.T_c * 1e-3

    @property
    def photons_per_shot(self) -> float:
        c = self.contrast
        return (math.e / (math.pi * c * self.C_factor)) ** 2 * (1 - c / 2)

    @property
    def readout_window(self) -> float:
        """Readout duration (s) implied by count_rate and photons_per_shot."""
        return self.photons_per_shot / (self.count_rate * 1e3)

    def rng(self, *index: int) -> np.random.Generator:
        """Independent stream for task ``index`` derived from the seed."""
        return np.random.default_rng([self.rng_seed, *index])


def freq_sensitivity(noise: NoiseModel) -> float:
    """Frequency sensitivity in Hz/sqrt(Hz)."""
    return noise.C_factor / math.sqrt(noise.T_c_seconds)


def frequency_sigma(noise: NoiseModel, duration: float) -> float:
    """Standard deviation (GHz) of a frequency estimate averaged for ``duration`` s."""
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration!r}")
    return freq_sensitivity(noise) / math.sqrt(duration) * 1e-9


def measure_frequency(value: float, duration: float, noise: NoiseModel | None,
                      rng: np.random.Generator | None = None) -> float:
    """Shot-noise-limited readout (Gaussian limit) of a frequency in GHz."""
    if noise is None:
        return value
    rng = rng if rng is not None else noise.rng()
    return value + rng.normal(0.0, frequency_sigma(noise, duration))


def sequences_in(noise: NoiseModel, duration: float) -> int:
    return max(1, int(round(duration / noise.T_c_seconds)))


class EchoSample(NamedTuple):
    signal: float
    sigma: float
    ideal: float


def echo_signal(phase: float, noise: NoiseModel | None, n_shots: int, *, tau: float = 0.0,
                rng: np.random.Generator | None = None) -> EchoSample:
    """Population difference read out after a sign-sensitive echo.

    The ideal value is exp(-2 tau / T_c) sin(phase); ``tau`` is the echo
    half-time in us.  Shot noise follows the photon model of this module.
    ``noise=None`` returns the noiseless value.
    """
    if n_shots < 1:
        raise ValueError(f"n_shots must be >= 1, got {n_shots!r}")
    if noise is None:
        ideal = math.sin(phase)
        return EchoSample(ideal, 0.0, ideal)
    envelope = math.exp(-2 * tau * 1e-3 / noise.T_c)
    ideal = envelope * math.sin(phase)
    c = noise.contrast
    total = n_shots * noise.photons_per_shot
    mean = total * (1 - c * (1 - ideal) / 2)
    rng = rng if rng is not None else noise.rng()
    counts = rng.normal(mean, math.sqrt(mean))
    signal = (2 * counts / total - 2 + c) / c
    sigma = 2 * math.sqrt(mean) / (total * c)
    return EchoSample(float(signal), sigma, ideal)
