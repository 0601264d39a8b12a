"""Defect frames, field transformations and rotation reconstruction.

An :class:`NVOrientation` stores the defect x (minor) and z (major) axes as
lab-frame unit vectors; y = z cross x completes a right-handed triad.

Rotations between two orientation snapshots are reconstructed with the
closed-form pair

    n ~ (z' - z) x (x' - x)
    cos(beta) = [x'.x + z'.z + (x'.x)(z'.z) - (x.z')(z.x') - 1] / 2

The difference-vector cross product equals 4 sin^2(beta/2) (n.y) n, so its
direction must be fixed by the sign of n.y and it vanishes for rotation
axes in the defect xz-plane.  Every closed-form result is checked by
applying it; on failure the triad solver R = [x' y' z'][x y z]^T is used
and the step records ``method='triad'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateStepError, FieldInputError, OrientationError
from .spin_model import FieldConfig

ORTHO_TOL = 1e-9
AXIS_DEGENERACY = 1e-8
RESIDUAL_TOL = 1e-9
C3_TOL = 1e-9


def _unit(v, name="vector"):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise FieldInputError(f"{name} must be a finite 3-vector")
    n = np.linalg.norm(v)
    if n == 0:
        raise FieldInputError(f"{name} must be non-zero")
    return v / n


def _frozen(v):
    v = np.array(v, dtype=float)
    v.flags.writeable = False
    return v


@dataclass(frozen=True, eq=False)
class NVOrientation:
    x_axis: np.ndarray
    z_axis: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x_axis, dtype=float).reshape(-1)
        z = np.asarray(self.z_axis, dtype=float).reshape(-1)
        if x.shape != (3,) or z.shape != (3,):
            raise OrientationError("axes must be 3-vectors")
        if (abs(np.linalg.norm(x) - 1) > ORTHO_TOL or abs(np.linalg.norm(z) - 1) > ORTHO_TOL
                or abs(x @ z) > ORTHO_TOL):
            raise OrientationError(
                f"axes are not orthonormal: |x|={np.linalg.norm(x):.3g}, "
                f"|z|={np.linalg.norm(z):.3g}, x.z={x @ z:.3g}")
        object.__setattr__(self, "x_axis", _frozen(x))
        object.__setattr__(self, "z_axis", _frozen(z))

    @classmethod
    def from_vectors(cls, z_axis, x_hint) -> "NVOrientation":
        """Orthonormalise: z is kept, x_hint is projected onto the plane normal to z."""
        z = _unit(z_axis, "z_axis")
        x = np.asarray(x_hint, dtype=float) - (np.asarray(x_hint, dtype=float) @ z) * z
        return cls(_unit(x, "x_hint (after projection)"), z)

    @classmethod
    def from_matrix(cls, m) -> "NVOrientation":
        """From a rotation matrix whose columns are (x, y, z)."""
        m = np.asarray(m, dtype=float)
        return cls.from_vectors(m[:, 2], m[:, 0])

    @classmethod
    def identity(cls) -> "NVOrientation":
        return cls(np.array([1.0, 0, 0]), np.array([0, 0, 1.0]))

    @property
    def y_axis(self) -> np.ndarray:
        return np.cross(self.z_axis, self.x_axis)

    @property
    def matrix(self) -> np.ndarray:
        """Columns are the defect axes in lab coordinates."""
        return np.column_stack([self.x_axis, self.y_axis, self.z_axis])

    def __repr__(self):
        return f"NVOrientation(x_axis={self.x_axis.tolist()}, z_axis={self.z_axis.tolist()})"


@dataclass(frozen=True, eq=False)
class RotationStep:
    """Axis-angle rotation, angle in [0, pi], right-hand rule."""

    axis: np.ndarray
    angle: float
    method: str = "closed_form"

    def __post_init__(self):
        object.__setattr__(self, "axis", _frozen(_unit(self.axis, "axis")))

    @property
    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.axis, self.angle)

    def __repr__(self):
        return f"RotationStep(axis={self.axis.tolist()}, angle={self.angle!r}, method={self.method!r})"


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues formula."""
    n = _unit(axis, "axis")
    k = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def axis_angle_from_matrix(m) -> tuple[np.ndarray, float]:
    """Axis and angle in [0, pi] of a proper rotation matrix."""
    m = np.asarray(m, dtype=float)
    skew = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    sin_b = 0.5 * np.linalg.norm(skew)
    cos_b = 0.5 * (np.trace(m) - 1)
    angle = math.atan2(sin_b, cos_b)
    if angle < 1e-12:
        raise DegenerateStepError("identity rotation has no axis")
    if sin_b > 1e-6:
        return skew / (2 * sin_b), angle
    # near pi: axis from the symmetric part, sign from the (small) skew part
    sym = 0.5 * (m + m.T) - cos_b * np.eye(3)
    col = sym[:, int(np.argmax(np.diag(sym)))]
    axis = col / np.linalg.norm(col)
    if skew @ axis < 0:
        axis = -axis
    return axis, angle


def field_to_nv(fields: FieldConfig, orient: NVOrientation) -> FieldConfig:
    """Project lab-frame fields onto the defect axes."""
    if fields.frame != "lab":
        raise FieldInputError(f"expected lab-frame fields, got frame={fields.frame!r}")
    m = orient.matrix
    return FieldConfig(m.T @ fields.B, m.T @ fields.E, "nv")


def field_to_lab(fields: FieldConfig, orient: NVOrientation) -> FieldConfig:
    if fields.frame != "nv":
        raise FieldInputError(f"expected nv-frame fields, got frame={fields.frame!r}")
    m = orient.matrix
    return FieldConfig(m @ fields.B, m @ fields.E, "lab")


def c3_equivalent(a: NVOrientation, b: NVOrientation, tol: float = C3_TOL) -> bool:
    if np.linalg.norm(a.z_axis - b.z_axis) > tol:
        return False
    for k in range(3):
        rotated = rotation_matrix(a.z_axis, 2 * math.pi * k / 3) @ a.x_axis
        if np.linalg.norm(rotated - b.x_axis) <= tol:
            return True
    return False


def rotate_orientation(orient: NVOrientation, step: RotationStep) -> NVOrientation:
    m = rotation_matrix(step.axis, step.angle)
    return NVOrientation.from_vectors(m @ orient.z_axis, m @ orient.x_axis)


def misorientation(a: NVOrientation, b: NVOrientation) -> float:
    """Angle (rad) of the rotation taking frame a onto frame b."""
    m = b.matrix @ a.matrix.T
    skew = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    return math.atan2(0.5 * np.linalg.norm(skew), 0.5 * (np.trace(m) - 1))


def printed_axis_angle(prior: NVOrientation, posterior: NVOrientation) -> tuple[np.ndarray, float]:
    """Difference-vector cross product and the raw cos expression, uncorrected.

    Returns the unnormalised axis vector and the raw value of
    x'.x + z'.z + (x'.x)(z'.z) - (x.z')(z.x'), which equals 1 + 2 cos(beta)
    (the trace of the rotation matrix), not cos(beta).
    """
    x, z = prior.x_axis, prior.z_axis
    x2, z2 = posterior.x_axis, posterior.z_axis
    n = np.cross(z2 - z, x2 - x)
    raw = x2 @ x + z2 @ z + (x2 @ x) * (z2 @ z) - (x @ z2) * (z @ x2)
    return n, float(raw)


def _triad_step(prior, posterior):
    m = posterior.matrix @ prior.matrix.T
    axis, angle = axis_angle_from_matrix(m)
    return RotationStep(axis, angle, method="triad")


def _reproduces(step, prior, posterior):
    m = rotation_matrix(step.axis, step.angle)
    return (np.max(np.abs(m @ prior.x_axis - posterior.x_axis)) <= RESIDUAL_TOL
            and np.max(np.abs(m @ prior.z_axis - posterior.z_axis)) <= RESIDUAL_TOL)


def reconstruct_rotation(prior: NVOrientation, posterior: NVOrientation) -> RotationStep:
    """Rotation (axis, angle) carrying ``prior`` onto ``posterior``."""
    n, raw = printed_axis_angle(prior, posterior)
    norm = np.linalg.norm(n)
    if norm < AXIS_DEGENERACY:
        try:
            fallback = _triad_step(prior, posterior)
        except DegenerateStepError:
            fallback = None
        raise DegenerateStepError(
            f"difference vectors are (anti)parallel, |n| = {norm:.3g}", fallback=fallback)
    axis = n / norm
    x, z = prior.x_axis, prior.z_axis
    x2, z2 = posterior.x_axis, posterior.z_axis
    # n.(v x v') = sin(beta) |v_perp|^2 >= 0 for the true axis
    if axis @ (np.cross(x, x2) + np.cross(z, z2)) < 0:
        axis = -axis
    cos_b = min(1.0, max(-1.0, 0.5 * (raw - 1)))
    step = RotationStep(axis, math.acos(cos_b), method="closed_form")
    if _reproduces(step, prior, posterior):
        return step
    return _triad_step(prior, posterior)


# Tetrahedral bond directions of the diamond lattice (crystal coordinates).
TETRAHEDRAL = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3)


@dataclass(frozen=True)
class CrystalAlignment:
    """One of the four <111> major-axis families and one of three minor axes."""

    family: int
    minor_index: int = 0

    def __post_init__(self):
        if self.family not in range(4):
            raise FieldInputError(f"family must be 0..3, got {self.family!r}")
        if self.minor_index not in range(3):
            raise FieldInputError(f"minor_index must be 0..2, got {self.minor_index!r}")

    @property
    def z_crystal(self) -> np.ndarray:
        """Nitrogen-to-vacancy direction in crystal coordinates."""
        return TETRAHEDRAL[self.family].copy()

    def minor_axes_crystal(self) -> list[np.ndarray]:
        """The three C3-equivalent x axes, each pointing toward a carbon neighbour."""
        z = TETRAHEDRAL[self.family]
        out = []
        for j in range(4):
            if j == self.family:
                continue
            # carbon neighbour of the vacancy along -t_j; project out z
            v = -TETRAHEDRAL[j] - (-TETRAHEDRAL[j] @ z) * z
            out.append(v / np.linalg.norm(v))
        return out

    def orientation(self, lab_basis: np.ndarray | None = None) -> NVOrientation:
        """Orientation in a lab frame whose rows are lab axes in crystal coordinates."""
        basis = np.eye(3) if lab_basis is None else np.asarray(lab_basis, dtype=float)
        x = self.minor_axes_crystal()[self.minor_index]
        return NVOrientation.from_vectors(basis @ self.z_crystal, basis @ x)


def surface_lab_basis(surface_normal: Sequence[float]) -> np.ndarray:
    """Rows (x, y, z) of a lab frame, in crystal coordinates, with z along the normal."""
    n = _unit(surface_normal, "surface_normal")
    ref = np.eye(3)[int(np.argmin(np.abs(n)))]
    x = ref - (ref @ n) * n
    x /= np.linalg.norm(x)
    return np.vstack([x, np.cross(n, x), n])


def crystallographic_orientations(surface_normal: Sequence[float]) -> list[NVOrientation]:
    """All 12 defect orientations (4 families x 3 minor axes) in the surface lab frame."""
    basis = surface_lab_basis(surface_normal)
    return [CrystalAlignment(f, m).orientation(basis) for f in range(4) for m in range(3)]
