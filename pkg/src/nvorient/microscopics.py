"""Molecular-orbital estimate of the signs of the electric susceptibilities.

The defect orbitals are built from the dangling sp3 orbitals of the three
carbon neighbours (c1, c2, c3) and the nitrogen (n) of the vacancy:

    e_x ~ 2 c1 - c2 - c3,   e_y ~ c2 - c3,   a1 ~ c1 + c2 + c3 + lambda n

Each atomic orbital is replaced by the expected position of its electron,
displaced from the atom toward the vacancy by the lobe offset.  The
normalisation constants of the molecular orbitals are positive and drop out
of every sign conclusion, so they are not represented.

Coordinates (angstrom): vacancy at the origin, nitrogen on -z so that z runs
from the nitrogen to the vacancy, and x pointing from the axis toward the
chosen carbon.  ``convention='inverted'`` applies a C2 rotation about y
(z from vacancy to nitrogen, x away from the carbon).

Charges are in units of e; D_E is reported in GHz.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import constants

from .errors import FieldInputError

CONVENTIONS = ("standard", "inverted")

# mu0 mu_B^2 / (4 pi h) in GHz * angstrom^3 (g_e supplied separately)
_DIPOLAR_GHZ_A3 = (constants.mu_0 / (4 * math.pi) * constants.physical_constants["Bohr magneton"][0] ** 2
                   / constants.h / 1e-30 * 1e-9)


@dataclass(frozen=True)
class DefectGeometry:
    l_C: float = 0.31
    l_N: float = 0.27
    L_C: float = 1.65
    L_N: float = 1.68
    lambda_mix: float = 1.0
    E_o: float = 1.945
    g_e: float = 2.003

    def __post_init__(self):
        for name in ("l_C", "l_N", "L_C", "L_N", "E_o", "g_e"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise FieldInputError(f"{name} must be positive, got {value!r}")
        if not math.isfinite(self.lambda_mix):
            raise FieldInputError("lambda_mix must be finite")
        if self.l_C >= self.L_C or self.l_N >= self.L_N:
            raise FieldInputError("lobe offsets must be smaller than the vacancy distances")


@dataclass(frozen=True)
class SusceptibilityReport:
    d_perp: float
    d_z: float
    D_E: float
    k_perp_sign: int
    k_z_sign: int
    k_perp_proxy: float
    convention: str
    z_direction: str
    x_direction: str

    def to_dict(self) -> dict:
        return asdict(self)


def _frame(convention):
    if convention not in CONVENTIONS:
        raise FieldInputError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    return np.diag([1.0, 1.0, 1.0]) if convention == "standard" else np.diag([-1.0, 1.0, -1.0])


def expected_positions(geom: DefectGeometry, convention: str = "standard", x_carbon: int = 0):
    """Expected electron positions of the c1, c2, c3 and n orbitals.

    ``x_carbon`` selects which carbon the x axis points toward; the carbon
    labels stay attached to the atoms.
    """
    if x_carbon not in (0, 1, 2):
        raise FieldInputError(f"x_carbon must be 0, 1 or 2, got {x_carbon!r}")
    frame = _frame(convention)
    sin_t = math.sqrt(8) / 3  # tetrahedral: carbon bonds make cos = 1/3 with +z
    r_c = geom.L_C - geom.l_C
    lobes = []
    for i in range(3):
        phi = 2 * math.pi * (i - x_carbon) / 3
        lobes.append(frame @ (r_c * np.array([sin_t * math.cos(phi), sin_t * math.sin(phi), 1 / 3])))
    lobes.append(frame @ np.array([0.0, 0.0, -(geom.L_N - geom.l_N)]))
    return tuple(lobes)


def dipole_signs(geom: DefectGeometry, convention: str = "standard", x_carbon: int = 0) -> tuple[float, float]:
    """(d_perp, d_z) in e*angstrom from the lobe positions."""
    pos = expected_positions(geom, convention, x_carbon)
    c = pos[x_carbon]
    n = pos[3]
    lam2 = geom.lambda_mix**2
    d_perp = c[0] / (3 * math.sqrt(2))
    d_z = lam2 / (3 + lam2) * (c[2] - n[2])
    return d_perp, d_z


def _direct(r1, r2):
    d = r2 - r1
    return (d[0] ** 2 - d[1] ** 2) / np.linalg.norm(d) ** 5


def _prefactor(geom):
    return _DIPOLAR_GHZ_A3 * geom.g_e**2


def spin_spin_semiclassical(geom: DefectGeometry, convention: str = "standard", x_carbon: int = 0) -> float:
    """D_E (GHz) from the two semi-classical lobe-pair direct integrals."""
    pos = expected_positions(geom, convention, x_carbon)
    a, b, c = pos[x_carbon], pos[(x_carbon + 1) % 3], pos[(x_carbon + 2) % 3]
    pref = 3 * _prefactor(geom) / 8  # 3 mu0 mu_B^2 g^2 / (32 pi h)
    return pref * 16 * math.sqrt(2) / 3 * (_direct(a, b) - _direct(b, c))


def spin_spin_closed_form(geom: DefectGeometry, convention: str = "standard", x_carbon: int = 0) -> float:
    """D_E (GHz) = mu0 mu_B^2 g^2/(4 pi h) sqrt(2/3) |<x>_1|^-3."""
    pos = expected_positions(geom, convention, x_carbon)
    return _prefactor(geom) * math.sqrt(2 / 3) / abs(pos[x_carbon][0]) ** 3


def assemble_susceptibility(geom: DefectGeometry, d_perp: float, d_z: float, D_E: float,
                            convention: str = "standard") -> SusceptibilityReport:
    """Signs of k_perp ~ d_perp D_E / E_o and k_z ~ (s25^2 + s26^2) d_z.

    The spin-coupling prefactor of k_z is only known to be positive, so k_z
    is reported by sign alone.  ``k_perp_proxy`` is the magnitude implied by
    the lobe model, in kHz um/V.
    """
    _frame(convention)
    k_perp_ghz_a_per_v = 8 * math.sqrt(2) * d_perp * D_E / geom.E_o  # GHz * angstrom / V
    standard = convention == "standard"
    return SusceptibilityReport(
        d_perp=d_perp,
        d_z=d_z,
        D_E=D_E,
        k_perp_sign=int(np.sign(d_perp * D_E)),
        k_z_sign=int(np.sign(d_z)),
        k_perp_proxy=k_perp_ghz_a_per_v * 1e6 * 1e-4,
        convention=convention,
        z_direction="nitrogen->vacancy" if standard else "vacancy->nitrogen",
        x_direction="axis->carbon" if standard else "carbon->axis",
    )


def susceptibility_report(geom: DefectGeometry | None = None, convention: str = "standard",
                          x_carbon: int = 0) -> SusceptibilityReport:
    geom = geom or DefectGeometry()
    d_perp, d_z = dipole_signs(geom, convention, x_carbon)
    d_e = spin_spin_semiclassical(geom, convention, x_carbon)
    return assemble_susceptibility(geom, d_perp, d_z, d_e, convention)
