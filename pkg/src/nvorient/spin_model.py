"""Ground-state spin Hamiltonian of the NV centre and its exact spectrum.

Units used throughout the package:

* frequencies in GHz
* magnetic fields in gauss
* electric fields in V/um
* gyromagnetic ratio in MHz/G, electric susceptibilities in kHz um/V

The spin-1 basis is ordered (m_s = +1, 0, -1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .errors import DegeneracyError, FieldInputError, FrameError

# mu_B / h expressed in MHz/G (CODATA via scipy).
BOHR_MHZ_PER_GAUSS = constants.physical_constants["Bohr magneton in Hz/T"][0] * 1e-4 * 1e-6

_MHZ_TO_GHZ = 1e-3
_KHZ_TO_GHZ = 1e-6

DEGENERACY_TOL = 1e-9  # GHz
REGIME_FRACTION = 1 / 20

FRAMES = ("lab", "nv")


@dataclass(frozen=True)
class SpinParams:
    """Physical constants of the ground-state spin.

    ``gamma_e`` is derived from ``g_e`` when not given explicitly.
    """

    D: float = 2.87
    g_e: float = 2.003
    k_z: float = 3.5
    k_perp: float = 170.0
    gamma_e: float | None = None

    def __post_init__(self):
        for name in ("D", "g_e", "k_z", "k_perp"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise FieldInputError(f"{name} must be positive and finite, got {value!r}")
        if self.gamma_e is None:
            object.__setattr__(self, "gamma_e", self.g_e * BOHR_MHZ_PER_GAUSS)
        elif not np.isfinite(self.gamma_e) or self.gamma_e <= 0:
            raise FieldInputError(f"gamma_e must be positive and finite, got {self.gamma_e!r}")

    @property
    def gamma_ghz(self) -> float:
        """Gyromagnetic ratio in GHz/G."""
        return self.gamma_e * _MHZ_TO_GHZ

    @property
    def k_z_ghz(self) -> float:
        return self.k_z * _KHZ_TO_GHZ

    @property
    def k_perp_ghz(self) -> float:
        return self.k_perp * _KHZ_TO_GHZ


def _as_vector(value, name):
    vec = np.array(value, dtype=float).reshape(-1)
    if vec.shape != (3,):
        raise FieldInputError(f"{name} must have exactly 3 components, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise FieldInputError(f"{name} has non-finite components: {vec}")
    vec.flags.writeable = False
    return vec


@dataclass(frozen=True, eq=False)
class FieldConfig:
    """Static magnetic (G) and electric (V/um) fields tagged with their frame."""

    B: np.ndarray = field(default_factory=lambda: np.zeros(3))
    E: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frame: str = "nv"

    def __post_init__(self):
        object.__setattr__(self, "B", _as_vector(self.B, "B"))
        object.__setattr__(self, "E", _as_vector(self.E, "E"))
        if self.frame not in FRAMES:
            raise FrameError(f"frame must be one of {FRAMES}, got {self.frame!r}")

    @property
    def B_perp(self) -> float:
        return float(np.hypot(self.B[0], self.B[1]))

    @property
    def E_perp(self) -> float:
        return float(np.hypot(self.E[0], self.E[1]))

    @property
    def phi_B(self) -> float:
        return float(np.arctan2(self.B[1], self.B[0]))

    @property
    def phi_E(self) -> float:
        return float(np.arctan2(self.E[1], self.E[0]))

    @property
    def theta_B(self) -> float:
        return float(np.arctan2(self.B_perp, self.B[2]))

    @property
    def theta_E(self) -> float:
        return float(np.arctan2(self.E_perp, self.E[2]))

    def scaled(self, factor: float) -> "FieldConfig":
        return FieldConfig(self.B * factor, self.E * factor, self.frame)

    def __repr__(self):
        return f"FieldConfig(B={self.B.tolist()}, E={self.E.tolist()}, frame={self.frame!r})"


@dataclass(frozen=True)
class SpinSpectrum:
    """Transition frequencies |0> <-> |-> and |0> <-> |+> in GHz."""

    f_minus: float
    f_plus: float
    warnings: tuple[str, ...] = ()

    @property
    def splitting(self) -> float:
        return self.f_plus - self.f_minus

    @property
    def center(self) -> float:
        return 0.5 * (self.f_plus + self.f_minus)

    def shifts(self, D: float) -> tuple[float, float]:
        """(delta f_minus, delta f_plus) relative to the zero-field splitting."""
        return self.f_minus - D, self.f_plus - D


def spin_operators():
    """Return (S_x, S_y, S_z) for S = 1 in the (+1, 0, -1) basis."""
    r = 1 / np.sqrt(2)
    sx = r * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    sy = r * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return sx, sy, sz


_SX, _SY, _SZ = spin_operators()
_IDENT = np.eye(3, dtype=complex)
_AXIAL = _SZ @ _SZ - (2 / 3) * _IDENT
_XX_YY = _SX @ _SX - _SY @ _SY
_XY_YX = _SX @ _SY + _SY @ _SX


def build_hamiltonian(params: SpinParams, fields: FieldConfig) -> np.ndarray:
    """Spin Hamiltonian (GHz) in the defect frame.

    H = (D + k_z E_z)(S_z^2 - 2/3) + gamma_e S.B - k_perp E_x (S_x^2 - S_y^2)
        + k_perp E_y (S_x S_y + S_y S_x)

    Flipping the sign of the E_y term is the same as using a mirror-image y axis.
    """
    if fields.frame != "nv":
        raise FrameError("Hamiltonian needs fields in the defect (nv) frame; "
                         "transform with geometry.field_to_nv first")
    bx, by, bz = fields.B
    ex, ey, ez = fields.E
    g = params.gamma_ghz
    kp = params.k_perp_ghz
    h = (params.D + params.k_z_ghz * ez) * _AXIAL
    h = h + g * (bx * _SX + by * _SY + bz * _SZ)
    h = h - kp * ex * _XX_YY + kp * ey * _XY_YX
    return h


def eigen_frequencies(H: np.ndarray) -> SpinSpectrum:
    """Exact transition frequencies of a 3x3 spin Hamiltonian.

    The |0> state is the eigenvector (or degenerate cluster) with the largest
    weight on the bare m_s = 0 basis vector.
    """
    H = np.asarray(H)
    if H.shape != (3, 3):
        raise FieldInputError(f"expected a 3x3 matrix, got {H.shape}")
    if not np.allclose(H, H.conj().T, rtol=0, atol=1e-12):
        raise FieldInputError("Hamiltonian is not Hermitian")
    energies, vectors = np.linalg.eigh(H)
    weights = np.abs(vectors[1, :]) ** 2

    # group numerically degenerate eigenvalues; eigh is free to mix them
    clusters = [[0]]
    for i in range(1, 3):
        if energies[i] - energies[clusters[-1][-1]] <= DEGENERACY_TOL:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    cluster_weight = [weights[c].sum() for c in clusters]
    order = np.argsort(cluster_weight)[::-1]
    if len(clusters) > 1 and abs(cluster_weight[order[0]] - cluster_weight[order[1]]) <= DEGENERACY_TOL:
        raise DegeneracyError("two eigenstates overlap equally with m_s = 0; |0> is ambiguous")
    zero = clusters[order[0]][0]
    others = [i for i in range(3) if i != zero]
    f = np.sort(energies[others] - energies[zero])
    return SpinSpectrum(float(f[0]), float(f[1]))


def exact_spectrum(params: SpinParams, fields: FieldConfig) -> SpinSpectrum:
    """Build the Hamiltonian and diagonalize it, flagging strong-field inputs."""
    spec = eigen_frequencies(build_hamiltonian(params, fields))
    lam = params.gamma_ghz**2 * fields.B_perp**2 / (2 * params.D)
    mix = np.hypot(params.gamma_ghz * fields.B[2], params.k_perp_ghz * fields.E_perp)
    if max(lam, mix) > REGIME_FRACTION * params.D:
        msg = (f"max(Lambda, R) = {max(lam, mix):.4g} GHz exceeds D/20; "
               "|0> labelling by overlap may be unreliable")
        return SpinSpectrum(spec.f_minus, spec.f_plus, (msg,))
    return spec
