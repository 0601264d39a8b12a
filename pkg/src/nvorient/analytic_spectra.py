"""Closed-form transition frequencies and their angular dependence.

All formulas are second order in the fields and are validated against
``spin_model.exact_spectrum`` in the test-suite.  Frequencies are in GHz,
angles in radians; shift pairs are always ordered (minus, plus).

Cross-term coefficient
----------------------
Second-order elimination of |0> couples |+1> and |-1> through
``Lambda exp(-2i phi_B)`` while the transverse Stark term couples them
through ``-k_perp E_perp exp(i phi_E)``.  The modulus of their sum gives

    f_pm = D + k_z E_z + 3 Lambda +- sqrt(R^2 - 2 Lambda R sin(alpha) cos(beta) + Lambda^2)

i.e. the cross term carries a factor 2.  The single-coefficient variant is
available through ``cross_coefficient=1`` for comparison; it disagrees with
exact diagonalization at second order (see docs/derivations.md).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import FrameError, RegimeWarning, WorkingPointWarning
from .spin_model import FieldConfig, SpinParams, SpinSpectrum

_ZERO_SLOPE = 1e-15  # GHz/rad


def wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.remainder(angle, 2 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


@dataclass(frozen=True)
class ReducedFieldParams:
    Lambda: float
    R_mix: float
    alpha: float
    beta: float
    phi_B: float
    phi_E: float
    theta_B: float
    theta_E: float
    gamma_comb: float
    delta_comb: float
    phi_B_defined: bool = True
    phi_E_defined: bool = True


def reduce_fields(params: SpinParams, fields: FieldConfig) -> ReducedFieldParams:
    if fields.frame != "nv":
        raise FrameError("reduce_fields needs nv-frame fields")
    g, kp = params.gamma_ghz, params.k_perp_ghz
    b_perp, e_perp = fields.B_perp, fields.E_perp
    bz = fields.B[2]
    lam = g**2 * b_perp**2 / (2 * params.D)
    mix = math.hypot(g * bz, kp * e_perp)
    # arctan2(0, 0) == 0 covers the degenerate B_z = E_perp = 0 case
    alpha = math.atan2(kp * e_perp, g * bz)
    phi_b = fields.phi_B if b_perp > 0 else 0.0
    phi_e = fields.phi_E if e_perp > 0 else 0.0
    return ReducedFieldParams(
        Lambda=lam,
        R_mix=mix,
        alpha=wrap_angle(alpha),
        beta=wrap_angle(2 * phi_b + phi_e),
        phi_B=phi_b,
        phi_E=phi_e,
        theta_B=fields.theta_B,
        theta_E=fields.theta_E,
        gamma_comb=wrap_angle((phi_b + phi_e) / 2),
        delta_comb=wrap_angle((phi_b - phi_e) / 2),
        phi_B_defined=b_perp > 0,
        phi_E_defined=e_perp > 0,
    )


def _regime_notes(params, lam, mix, limit=0.1, soft=0.05):
    notes = []
    worst = max(lam, mix)
    if worst >= limit * params.D:
        notes.append(f"max(Lambda, R) = {worst:.4g} GHz >= D/10: second-order formula invalid")
    elif worst > soft * params.D:
        notes.append(f"max(Lambda, R) = {worst:.4g} GHz > D/20: second-order accuracy degraded")
    return tuple(notes)


def f_pm_general(params: SpinParams, fields: FieldConfig, *, cross_coefficient: float = 2.0) -> SpinSpectrum:
    """Second-order f_pm for arbitrary combined fields."""
    red = reduce_fields(params, fields)
    lam, mix = red.Lambda, red.R_mix
    radicand = (mix**2 - cross_coefficient * lam * mix * math.sin(red.alpha) * math.cos(red.beta)
                + lam**2)
    root = math.sqrt(max(radicand, 0.0))
    centre = params.D + params.k_z_ghz * fields.E[2] + 3 * lam
    return SpinSpectrum(centre - root, centre + root, _regime_notes(params, lam, mix))


def _magnetic_root(params, B, theta):
    # gamma B cos(theta) sqrt(1 + (gamma B / 2D)^2 tan^2 sin^2), rewritten without tan
    gb = params.gamma_ghz * B
    s2 = math.sin(theta) ** 2
    c = math.cos(theta)
    root = gb * math.sqrt(c * c + (gb / (2 * params.D)) ** 2 * s2 * s2)
    return math.copysign(root, c) if c != 0 else root


def magnetic_shift_pair(params: SpinParams, B: float, theta_B: float) -> tuple[float, float]:
    """(delta f_-, delta f_+) of the magnetic-only formula with its native labels.

    The labels swap when theta_B passes pi/2, so delta_minus can exceed
    delta_plus; ``f_pm_magnetic`` returns the sorted spectrum instead.
    """
    common = 3 * params.gamma_ghz**2 * B**2 / (2 * params.D) * math.sin(theta_B) ** 2
    root = _magnetic_root(params, B, theta_B)
    return common - root, common + root


def f_pm_magnetic(params: SpinParams, B: float, theta_B: float) -> SpinSpectrum:
    if params.gamma_ghz * B >= params.D / 5:
        warnings.warn("gamma_e B >= D/5: magnetic formula outside its regime", RegimeWarning, stacklevel=2)
    lo, hi = sorted(magnetic_shift_pair(params, B, theta_B))
    return SpinSpectrum(params.D + lo, params.D + hi)


def f_pm_electric(params: SpinParams, E: float, theta_E: float) -> SpinSpectrum:
    if not math.isfinite(E) or E < 0:
        raise ValueError(f"E magnitude must be finite and >= 0, got {E!r}")
    if params.k_perp_ghz * E >= params.D / 10:
        warnings.warn("k_perp E >= D/10: electric formula outside its regime", RegimeWarning, stacklevel=2)
    common = params.D + params.k_z_ghz * E * math.cos(theta_E)
    split = params.k_perp_ghz * E * abs(math.sin(theta_E))
    return SpinSpectrum(common - split, common + split)


def delta_f_near_axis(params: SpinParams, magnitude: float, theta: float, which: str) -> tuple[float, float]:
    """Leading shifts for a field close to the symmetry axis.

    Magnetic: (-gamma B cos, +gamma B cos), electric: common k_z E cos.
    """
    if which == "magnetic":
        s = params.gamma_ghz * magnitude * math.cos(theta)
        return -s, s
    if which == "electric":
        s = params.k_z_ghz * magnitude * math.cos(theta)
        return s, s
    raise ValueError(f"which must be 'magnetic' or 'electric', got {which!r}")


class TransverseSpectra(NamedTuple):
    exact: SpinSpectrum
    approximate: SpinSpectrum


def f_pm_transverse(params: SpinParams, E_perp: float, B_perp: float, phi_B: float, phi_E: float,
                    *, cross_coefficient: float = 2.0) -> TransverseSpectra:
    """Both forms of f_pm for fields perpendicular to the symmetry axis.

    ``exact`` keeps the square root; ``approximate`` expands it for
    Lambda >> k_perp E_perp.
    """
    lam = params.gamma_ghz**2 * B_perp**2 / (2 * params.D)
    ke = params.k_perp_ghz * E_perp
    cos_b = math.cos(2 * phi_B + phi_E)
    notes = ()
    if lam < 5 * ke:
        notes = (f"Lambda = {lam:.4g} GHz < 5 k_perp E_perp: linearised form inaccurate",)
    root = math.sqrt(max(ke**2 - cross_coefficient * ke * lam * cos_b + lam**2, 0.0))
    exact = SpinSpectrum(params.D + 3 * lam - root, params.D + 3 * lam + root)
    approx = SpinSpectrum(params.D + 2 * lam + ke * cos_b, params.D + 4 * lam - ke * cos_b, notes)
    return TransverseSpectra(exact, approx)


def delta_f_pattern(params: SpinParams, E_perp: float, phi_B: float, phi_E: float) -> tuple[float, float]:
    s = params.k_perp_ghz * E_perp * math.cos(2 * phi_B + phi_E)
    return s, -s


def delta_f_combined(params: SpinParams, E_perp: float, gamma_comb: float, delta_comb: float) -> tuple[float, float]:
    s = params.k_perp_ghz * E_perp * math.cos(3 * gamma_comb + delta_comb)
    return s, -s


def d_delta_f(params: SpinParams, fields: FieldConfig, angle: str, mode: str = "sq") -> float:
    """Signed slope (GHz/rad) of the measured frequency at a working point.

    ``mode='sq'`` differentiates f_-; ``mode='dq'`` differentiates f_+ - f_-.

    For ``angle='theta_B'`` the derivative is taken on the full magnetic-only
    expression (B magnitude and theta_B from ``fields``), including the
    3 Lambda sin^2 term.  For ``angle='gamma_comb'`` it is taken on the
    k_perp E_perp cos(3 gamma + delta) pattern.
    """
    if mode not in ("sq", "dq"):
        raise ValueError(f"mode must be 'sq' or 'dq', got {mode!r}")
    if angle == "theta_B":
        slope = _d_magnetic(params, float(np.linalg.norm(fields.B)), fields.theta_B, mode)
    elif angle == "gamma_comb":
        red = reduce_fields(params, fields)
        ke = params.k_perp_ghz * fields.E_perp
        s = math.sin(3 * red.gamma_comb + red.delta_comb)
        slope = -3 * ke * s if mode == "sq" else 6 * ke * s
    else:
        raise ValueError(f"angle must be 'theta_B' or 'gamma_comb', got {angle!r}")
    if abs(slope) < _ZERO_SLOPE:
        warnings.warn(f"zero slope for {angle} at this working point", WorkingPointWarning, stacklevel=2)
    return slope


def _d_magnetic(params, B, theta, mode):
    gb = params.gamma_ghz * B
    eps = (gb / (2 * params.D)) ** 2
    s, c = math.sin(theta), math.cos(theta)
    q = c * c + eps * s**4
    # d/dtheta of sign(c) * gb * sqrt(q)
    d_root = gb * (-2 * c * s + 4 * eps * s**3 * c) / (2 * math.sqrt(q)) if q > 0 else 0.0
    if c < 0:
        d_root = -d_root
    d_common = 3 * gb**2 / (2 * params.D) * 2 * s * c
    if mode == "sq":
        return d_common - d_root
    return 2 * d_root
