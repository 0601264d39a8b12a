import math

import numpy as np
import pytest
from hypothesis import strategies as st

from nvorient.geometry import NVOrientation
from nvorient.spin_model import SpinParams


@pytest.fixture
def params():
    return SpinParams()


def oracle_hamiltonian(p, B, E):
    """Hand-written spin-1 matrix, independent of spin_model."""
    g = p.gamma_e * 1e-3
    kp, kz = p.k_perp * 1e-6, p.k_z * 1e-6
    a = (p.D + kz * E[2]) / 3
    bp = g * (B[0] - 1j * B[1]) / math.sqrt(2)
    q = -kp * (E[0] + 1j * E[1])  # <+1| ... |-1>
    return np.array([
        [a + g * B[2], bp, q],
        [np.conj(bp), -2 * a, bp],
        [np.conj(q), np.conj(bp), a - g * B[2]],
    ])


def oracle_frequencies(p, B, E):
    w, v = np.linalg.eigh(oracle_hamiltonian(p, B, E))
    i = int(np.argmax(np.abs(v[1]) ** 2))
    f = np.sort(np.delete(w, i) - w[i])
    return float(f[0]), float(f[1])


def random_orientation(rng):
    m, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(m) < 0:
        m[:, 0] = -m[:, 0]
    return NVOrientation(m[:, 0], m[:, 2])


unit_vectors = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: 0.1 < math.hypot(*v))
