"""Spin-echo ac-electrometry phase.

The transverse electric field follows E(t) = E0 sin(pi t / tau) over both
free-evolution intervals [0, 2 tau].  The field changes sign in the second
interval exactly when the pi pulse inverts the phase accumulation, so the
two lobes add:

    Phi = 2 pi k_perp E0 cos(3 gamma + delta) * 2 * (2 tau / pi)
        = 8 tau k_perp E0 cos(3 gamma + delta)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import FieldInputError
from ..spin_model import SpinParams


@dataclass(frozen=True)
class EchoConfig:
    tau: float  # us
    E0: float  # V/um
    gamma_comb: float = 0.0
    delta_comb: float = 0.0

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise FieldInputError(f"tau must be positive, got {self.tau!r}")
        if not (self.E0 >= 0 and math.isfinite(self.E0)):
            raise FieldInputError(f"E0 must be >= 0, got {self.E0!r}")


def echo_phase(params: SpinParams, cfg: EchoConfig) -> float:
    """Net phase (rad) between |0> and |-> at the end of the echo."""
    tau_s = cfg.tau * 1e-6
    ke_hz = params.k_perp * 1e3 * cfg.E0
    return 8 * tau_s * ke_hz * math.cos(3 * cfg.gamma_comb + cfg.delta_comb)


def shift_from_phase(phase: float, tau: float) -> float:
    """Peak Delta f_- (GHz) that produces ``phase`` for half-time ``tau`` (us)."""
    return phase / (8 * tau * 1e-6) * 1e-9
