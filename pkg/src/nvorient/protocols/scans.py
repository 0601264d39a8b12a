"""Axial and transverse orientation scans and the trigonal fit."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..analytic_spectra import delta_f_pattern, reduce_fields
from ..errors import FieldInputError, IndeterminateSignError, NoSignalError, RegimeWarning
from ..geometry import NVOrientation, field_to_nv
from ..spin_model import FieldConfig, SpinParams, SpinSpectrum, exact_spectrum
from ._parallel import ordered_map
from .echo import EchoConfig, echo_phase, shift_from_phase
from .noise import NoiseModel, echo_signal, frequency_sigma, measure_frequency

SCAN_MODES = ("phiB", "phiE", "gamma", "delta")


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if v.shape != (3,) or not np.isfinite(n) or n == 0:
        raise FieldInputError("direction must be a non-zero 3-vector")
    return v / n


def axial_scan(params: SpinParams, orient_true: NVOrientation, B_magnitude: float,
               scan_directions: Sequence, noise: NoiseModel | None, *,
               time_per_point: float = 1.0) -> list[SpinSpectrum]:
    """Measured (f_-, f_+) for a magnetic field stepped through lab directions.

    Each line is read out for half of ``time_per_point``.
    """
    dirs = [_unit(d) for d in scan_directions]

    def sample(item):
        i, d = item
        spec = exact_spectrum(params, field_to_nv(FieldConfig(B_magnitude * d, np.zeros(3), "lab"), orient_true))
        if noise is None:
            return spec
        rng = noise.rng(i)
        lo = measure_frequency(spec.f_minus, time_per_point / 2, noise, rng)
        hi = measure_frequency(spec.f_plus, time_per_point / 2, noise, rng)
        return SpinSpectrum(lo, hi, spec.warnings)

    return ordered_map(sample, enumerate(dirs))


def axial_direction(samples: Sequence[SpinSpectrum], scan_directions: Sequence) -> np.ndarray:
    """Scan direction with the largest splitting (the major axis, up to sign)."""
    idx = int(np.argmax([s.splitting for s in samples]))
    return _unit(scan_directions[idx])


def electric_sign_probe(params: SpinParams, orient_true: NVOrientation, E_magnitude: float,
                        probe_direction, noise: NoiseModel | None, *, averaging_time: float = 1.0,
                        rng: np.random.Generator | None = None, min_snr: float = 3.0) -> int:
    """+1 if ``probe_direction`` points along +z (nitrogen to vacancy), else -1.

    Reads the common-mode shift (f_+ + f_-)/2 - D of an electric field along
    the probe direction.  Both lines share ``averaging_time``.
    """
    d = _unit(probe_direction)
    cos_t = float(d @ orient_true.z_axis)
    if abs(cos_t) < math.cos(math.radians(30)) - 1e-12:
        raise ValueError("probe direction must lie within 30 deg of the major axis")
    spec = exact_spectrum(params, field_to_nv(FieldConfig(np.zeros(3), E_magnitude * d, "lab"), orient_true))
    expected = params.k_z_ghz * E_magnitude * abs(cos_t)
    if noise is None:
        common = spec.center - params.D
        if expected == 0:
            raise IndeterminateSignError("no axial Stark shift without an electric field")
    else:
        sigma = frequency_sigma(noise, averaging_time)
        if expected < min_snr * sigma * (1 - 1e-9):
            needed = (min_snr * sigma * math.sqrt(averaging_time) / expected) ** 2 if expected else math.inf
            raise IndeterminateSignError(
                f"expected shift {expected * 1e9:.4g} Hz is below {min_snr:g} sigma "
                f"({sigma * 1e9:.4g} Hz); average for at least {needed:.4g} s")
        rng = rng if rng is not None else noise.rng()
        lo = measure_frequency(spec.f_minus, averaging_time / 2, noise, rng)
        hi = measure_frequency(spec.f_plus, averaging_time / 2, noise, rng)
        common = 0.5 * (lo + hi) - params.D
    return 1 if common > 0 else -1


@dataclass(frozen=True)
class ScanPoint:
    angle: float  # rad, swept lab angle
    delta_f_minus: float  # GHz, from the (noisy) echo signal
    signal: float
    sigma: float
    model: float  # GHz, noiseless Delta f_-


def transverse_basis(z_axis, reference=None) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal (e1, e2) spanning the plane normal to ``z_axis``.

    e1 is ``reference`` projected into the plane (default: the lab axis least
    aligned with z); e2 = z x e1.
    """
    z = _unit(z_axis)
    ref = np.eye(3)[int(np.argmin(np.abs(z)))] if reference is None else np.asarray(reference, dtype=float)
    e1 = ref - (ref @ z) * z
    e1 = _unit(e1)
    return e1, np.cross(z, e1)


def _lab_angles(mode, angle, fixed):
    # returns (psi_B, psi_E) lab azimuths
    if mode == "phiB":
        return angle, fixed
    if mode == "phiE":
        return fixed, angle
    if mode == "gamma":
        return angle + fixed, angle - fixed
    if mode == "delta":
        return fixed + angle, fixed - angle
    raise ValueError(f"mode must be one of {SCAN_MODES}, got {mode!r}")


def default_tau(params: SpinParams, E_perp: float) -> float:
    """Echo half-time (us) keeping |Phi| <= 1 rad, inside the arcsin range."""
    ke_hz = params.k_perp * 1e3 * E_perp
    return 70.0 if ke_hz == 0 else 1e6 / (8 * ke_hz)


def transverse_scan(params: SpinParams, orient_true: NVOrientation, B_perp: float, E_perp: float,
                    mode: str, fixed_angle: float, n_points: int, noise: NoiseModel | None, *,
                    tau: float | None = None, shots_per_point: int = 100_000,
                    z_axis=None, reference=None) -> list[ScanPoint]:
    """Sweep one transverse field angle over [0, 2 pi) and sample Delta f_-.

    Fields lie in the plane normal to ``z_axis`` (default: the true axis);
    angles are measured from ``reference`` projected into that plane.  Each
    point is an echo measurement; Delta f_- is recovered from the signal by
    inverting sin(Phi).
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if mode not in SCAN_MODES:
        raise ValueError(f"mode must be one of {SCAN_MODES}, got {mode!r}")
    tau = default_tau(params, E_perp) if tau is None else tau
    if 8 * tau * 1e-6 * params.k_perp * 1e3 * E_perp > math.pi / 2:
        warnings.warn("echo phase can exceed pi/2; the arcsin inversion will alias", RegimeWarning, stacklevel=2)
    e1, e2 = transverse_basis(orient_true.z_axis if z_axis is None else z_axis, reference)
    angles = 2 * math.pi * np.arange(n_points) / n_points

    def point(item):
        i, angle = item
        psi_b, psi_e = _lab_angles(mode, angle, fixed_angle)
        b_lab = B_perp * (math.cos(psi_b) * e1 + math.sin(psi_b) * e2)
        e_lab = E_perp * (math.cos(psi_e) * e1 + math.sin(psi_e) * e2)
        nv = field_to_nv(FieldConfig(b_lab, e_lab, "lab"), orient_true)
        red = reduce_fields(params, nv)
        model = delta_f_pattern(params, nv.E_perp, red.phi_B, red.phi_E)[0]
        phase = echo_phase(params, EchoConfig(tau, nv.E_perp, red.gamma_comb, red.delta_comb))
        rng = noise.rng(i) if noise is not None else None
        sample = echo_signal(phase, noise, shots_per_point, tau=tau, rng=rng)
        envelope = 1.0 if noise is None else math.exp(-2 * tau * 1e-3 / noise.T_c)
        ratio = min(1.0, max(-1.0, sample.signal / envelope))
        return ScanPoint(float(angle), shift_from_phase(math.asin(ratio), tau), sample.signal,
                         sample.sigma, model)

    return ordered_map(point, enumerate(angles))


@dataclass(frozen=True)
class TrigonalFit:
    gamma0: float  # rad, in [0, 2 pi / 3)
    amplitude: float
    residual: float
    offset: float


def _as_table(scan):
    if len(scan) and isinstance(scan[0], ScanPoint):
        return np.array([p.angle for p in scan]), np.array([p.delta_f_minus for p in scan])
    arr = np.asarray(scan, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("scan must be a sequence of (gamma, signal) pairs")
    return arr[:, 0], arr[:, 1]


def fit_trigonal(scan) -> TrigonalFit:
    """Least-squares fit of c + A cos(3 gamma - 3 gamma0) with A > 0."""
    gamma, y = _as_table(scan)
    if gamma.size < 9:
        raise ValueError("trigonal fit needs at least 9 points")
    if np.ptp(gamma) < math.radians(240) - 1e-9:
        raise ValueError("scan must span at least 240 deg")
    design = np.column_stack([np.cos(3 * gamma), np.sin(3 * gamma), np.ones_like(gamma)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    a, b, c = coef
    resid = float(np.sqrt(np.mean((y - design @ coef) ** 2)))
    amp = float(math.hypot(a, b))
    if amp <= 3 * resid:
        raise NoSignalError(f"amplitude {amp:.3g} is not above 3x residual {resid:.3g}")
    period = 2 * math.pi / 3
    gamma0 = (math.atan2(b, a) / 3) % period
    if period - gamma0 < 1e-12:  # -0 rounding just below a maximum
        gamma0 = 0.0
    return TrigonalFit(gamma0, amp, resid, float(c))


def find_maxima(angles, values) -> list[float]:
    """Circular local maxima, refined by parabolic interpolation (uniform grid)."""
    angles = np.asarray(angles, dtype=float)
    values = np.asarray(values, dtype=float)
    n = values.size
    step = 2 * math.pi / n
    peaks = []
    for i in range(n):
        left, mid, right = values[i - 1], values[i], values[(i + 1) % n]
        if mid > left and mid >= right:
            denom = left - 2 * mid + right
            shift = 0.5 * (left - right) / denom if denom != 0 else 0.0
            peaks.append((angles[i] + shift * step) % (2 * math.pi))
    return peaks
