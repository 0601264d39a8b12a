"""Two-point estimates of the defect z and x axes.

z: two magnetic fields about 60 deg from the expected z, 90 deg apart in
azimuth.  Each measured frequency is inverted for the field-to-axis angle,
and z is the intersection of the two cones nearest the expected axis.

x: parallel transverse E and B at +-30 deg from the expected x (delta = 0).
The observable depends on the fields only through cos(beta) with
beta = 3 (psi - g0), g0 being the azimuth of the true x from the expected
one; the two readings give u(+30) = sin 3 g0 and u(-30) = -sin 3 g0.

Both inversions use the exact spin Hamiltonian as the forward model, so
noiseless estimates are exact up to root-finding tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import EstimationError, FieldInputError
from ..geometry import NVOrientation, field_to_nv, rotation_matrix
from ..spin_model import FieldConfig, SpinParams, SpinSpectrum, exact_spectrum
from .noise import NoiseModel, measure_frequency, sequences_in
from .sensitivity import angle_sensitivity

CONE_TOL = 1e-6
_XTOL = 1e-15


@dataclass(frozen=True)
class OrientationEstimate:
    orientation: NVOrientation
    sigma_theta: float  # rad, per transverse axis of z
    sigma_gamma: float  # rad
    timestamp: float  # s
    n_sequences: int
    method: str = "two_point"


def observable(spec: SpinSpectrum, mode: str) -> float:
    """f_- for single-quantum readout, f_+ - f_- for double-quantum."""
    if mode == "sq":
        return spec.f_minus
    if mode == "dq":
        return spec.f_plus - spec.f_minus
    raise ValueError(f"mode must be 'sq' or 'dq', got {mode!r}")


def _measure(params, lab_fields, truth, mode, duration, noise, rng):
    if truth is None:
        raise ValueError("either truth or readings must be given")
    spec = exact_spectrum(params, field_to_nv(lab_fields, truth))
    return measure_frequency(observable(spec, mode), duration, noise, rng)


def _invert(model, target, lo, hi):
    f_lo, f_hi = model(lo), model(hi)
    if (f_lo - target) * (f_hi - target) > 0:
        # noise pushed the reading outside the model range: take the nearer end
        return lo if abs(f_lo - target) < abs(f_hi - target) else hi
    return brentq(lambda v: model(v) - target, lo, hi, xtol=_XTOL, rtol=4 * np.finfo(float).eps)


def invert_theta(params: SpinParams, B: float, measured: float, mode: str) -> float:
    """Field-to-axis angle in [0, pi/2] reproducing ``measured``."""
    def model(theta):
        f = FieldConfig([B * math.sin(theta), 0.0, B * math.cos(theta)], [0, 0, 0], "nv")
        return observable(exact_spectrum(params, f), mode)

    return _invert(model, measured, 0.0, math.pi / 2)


def invert_cos_beta(params: SpinParams, B_perp: float, E_perp: float, measured: float, mode: str) -> float:
    """cos(2 phi_B + phi_E) in [-1, 1] reproducing ``measured`` for transverse fields."""
    def model(u):
        phi = math.acos(min(1.0, max(-1.0, u))) / 3
        d = [math.cos(phi), math.sin(phi), 0.0]
        f = FieldConfig([B_perp * v for v in d], [E_perp * v for v in d], "nv")
        return observable(exact_spectrum(params, f), mode)

    return _invert(model, measured, -1.0, 1.0)


def intersect_cones(b1, c1: float, b2, c2: float, prefer) -> np.ndarray:
    """Unit vector z with z.b1 = c1 and z.b2 = c2, the solution closer to ``prefer``."""
    b1, b2 = np.asarray(b1, float), np.asarray(b2, float)
    m = float(b1 @ b2)
    det = 1 - m * m
    if det < 1e-12:
        raise EstimationError("cone axes are parallel")
    a1 = (c1 - m * c2) / det
    a2 = (c2 - m * c1) / det
    normal = np.cross(b1, b2)
    t2 = (1 - (a1 * c1 + a2 * c2)) / det
    if t2 < -CONE_TOL:
        raise EstimationError(f"cones do not intersect (t^2 = {t2:.3g})")
    t = math.sqrt(max(t2, 0.0))
    base = a1 * b1 + a2 * b2
    sols = [base + t * normal, base - t * normal]
    best = max(sols, key=lambda s: s @ np.asarray(prefer, float))
    return best / np.linalg.norm(best)


def estimate_z(params: SpinParams, prev: OrientationEstimate | NVOrientation, B_magnitude: float,
               noise: NoiseModel | None, *, truth: NVOrientation | None = None, readings=None,
               time: float = 1.0, mode: str = "dq", tilt: float = math.radians(60), timestamp: float = 0.0,
               rng: np.random.Generator | None = None) -> OrientationEstimate:
    """Update the z axis from two magnetic-field angle measurements.

    ``time`` (s) is split equally between the two fields.  The readings are
    simulated from ``truth`` unless ``readings`` (two observables in GHz,
    one per field) are supplied.  The returned x axis is the previous x
    projected onto the plane normal to the new z.
    """
    prior = prev.orientation if isinstance(prev, OrientationEstimate) else prev
    x0, y0, z0 = prior.x_axis, prior.y_axis, prior.z_axis
    dirs = [math.cos(tilt) * z0 + math.sin(tilt) * x0, math.cos(tilt) * z0 + math.sin(tilt) * y0]
    if noise is not None and rng is None:
        rng = noise.rng()
    if readings is None:
        readings = [_measure(params, FieldConfig(B_magnitude * d, np.zeros(3), "lab"), truth, mode,
                             time / 2, noise, rng) for d in dirs]
    elif len(readings) != 2:
        raise ValueError("estimate_z needs exactly two readings")
    cosines = []
    for reading in readings:
        cosines.append(math.cos(invert_theta(params, B_magnitude, reading, mode)))
    z = intersect_cones(dirs[0], cosines[0], dirs[1], cosines[1], z0)
    orient = NVOrientation.from_vectors(z, x0)
    if noise is None:
        sigma, n_seq = 0.0, 0
    else:
        sens = math.radians(angle_sensitivity(params, noise, mode, "theta", tilt, B_magnitude, 0.0))
        sigma, n_seq = sens * math.sqrt(2 / time), sequences_in(noise, time)
    return OrientationEstimate(orient, sigma, 0.0, timestamp, n_seq)


def _transverse_fields(e1, e2, psi, B_perp, E_perp):
    d = math.cos(psi) * e1 + math.sin(psi) * e2
    return FieldConfig(B_perp * d, E_perp * d, "lab")


def estimate_x(params: SpinParams, z_est, prev_x, B_perp: float, E_perp: float, noise: NoiseModel | None, *,
               truth: NVOrientation | None = None, readings=None, time: float = 1.0, mode: str = "dq",
               offset: float = math.radians(30),
               timestamp: float = 0.0, sigma_theta: float = 0.0, degenerate_level: float = 0.99,
               rng: np.random.Generator | None = None) -> OrientationEstimate:
    """Update the x axis in the plane normal to ``z_est`` from two echo readings.

    ``readings`` optionally supplies the two observables (GHz) at +offset
    and -offset.  If the expected x is close to 30 deg off (both slopes
    nearly zero) a five-point mini-scan over 96 deg is fitted instead,
    which needs ``truth`` to simulate the extra points.
    """
    z = np.asarray(z_est, float)
    z = z / np.linalg.norm(z)
    px = np.asarray(prev_x, float)
    px = px / np.linalg.norm(px)
    if abs(px @ z) > math.sin(math.radians(5)):
        raise FieldInputError("prev_x must be orthogonal to z_est within 5 deg")
    e1 = px - (px @ z) * z
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(z, e1)
    if noise is not None and rng is None:
        rng = noise.rng()

    def reading(psi, duration):
        value = _measure(params, _transverse_fields(e1, e2, psi, B_perp, E_perp), truth, mode, duration, noise, rng)
        return invert_cos_beta(params, B_perp, E_perp, value, mode)

    if readings is None:
        u_plus = reading(offset, time / 2)
        u_minus = reading(-offset, time / 2)
    elif len(readings) != 2:
        raise ValueError("estimate_x needs exactly two readings")
    else:
        u_plus, u_minus = (invert_cos_beta(params, B_perp, E_perp, r, mode) for r in readings)
    s3 = 0.5 * (u_plus - u_minus)
    method = "two_point"
    if abs(s3) <= degenerate_level:
        g0 = math.asin(s3) / 3
    else:
        if truth is None:
            raise EstimationError("working point is degenerate and no truth is available for a mini-scan")
        method = "mini_scan"
        psis = np.radians([-48.0, -24.0, 0.0, 24.0, 48.0])
        us = np.array([reading(p, time / len(psis)) for p in psis])
        design = np.column_stack([np.cos(3 * psis), np.sin(3 * psis)])
        (a, b), *_ = np.linalg.lstsq(design, us, rcond=None)
        g0 = math.remainder(math.atan2(b, a), 2 * math.pi) / 3
    x = rotation_matrix(z, g0) @ e1
    orient = NVOrientation.from_vectors(z, x)
    if noise is None:
        sigma, n_seq = 0.0, 0
    else:
        sens = math.radians(angle_sensitivity(params, noise, mode, "gamma", offset, B_perp, E_perp))
        sigma, n_seq = sens / math.sqrt(time), sequences_in(noise, time)
    return OrientationEstimate(orient, sigma_theta, sigma, timestamp, n_seq, method)
