"""
Fixed-size 2-vector / 2x2 complex matrix algebra for the ring cavity scattering model.

Vectors are numpy arrays of shape (2,) and matrices numpy arrays of shape (2, 2),
both complex128.

Author:
Nikki Hess (nkhess@umich.edu)
"""

# built-in
from typing import TYPE_CHECKING

# pypi
import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

# my modules
from .errors import NonPhysicalMirrorError, SingularMatrixError, ValidationError

if TYPE_CHECKING:
    from .cavity import CavityConfig

MIRROR_TOLERANCE = 1e-12
DET_EPSILON = 1e-14

IDENTITY = np.eye(2, dtype=complex)
_PAULI = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}

def vector(c0: complex, c1: complex) -> np.ndarray:
    """
    Builds a complex 2-vector.

    :return: array of shape (2,)
    :rtype: np.ndarray
    """
    return np.array([c0, c1], dtype=complex)

def identity() -> np.ndarray:
    return IDENTITY.copy()

def pauli(index: int) -> np.ndarray:
    """
    Returns one of the Pauli matrices.

    :param index: 1, 2 or 3
    :type index: int

    :return: sigma_index
    :rtype: np.ndarray
    """
    if index not in _PAULI:
        raise ValidationError(f"pauli index must be 1, 2 or 3, got {index!r}")

    return _PAULI[index].copy()

def propagation_matrix(cfg: "CavityConfig", k: float, omega: float = 0.0) -> np.ndarray:
    """
    Free propagation along the two arms of the ring, diag(e^{i(k+Ω/c)L1}, e^{i(k+Ω/c)L2}).

    :param cfg: cavity configuration (only L1 and L2 are used)
    :type cfg: CavityConfig

    :param k: carrier wavenumber, rad/m
    :type k: float

    :param omega: sideband angular frequency, rad/s. default = 0
    :type omega: float

    :return: the diagonal propagation matrix
    :rtype: np.ndarray
    """
    if cfg.L1 <= 0 or cfg.L2 <= 0:
        raise ValidationError("arm lengths must be positive", "cavity.length")

    wavenumber = k + omega / SPEED_OF_LIGHT
    return np.diag([np.exp(1j * wavenumber * cfg.L1), np.exp(1j * wavenumber * cfg.L2)])

def _check_mirror(reflect: float, transmit: float, name: str):
    if reflect**2 + transmit**2 > 1 + MIRROR_TOLERANCE:
        raise NonPhysicalMirrorError(
            f"r^2 + t^2 = {reflect**2 + transmit**2:.15g} exceeds 1", name
        )

def mirror_matrix(r: float, t: float) -> np.ndarray:
    """
    Scattering matrix of the semi-transparent test mass, [[r, it], [it, r]].

    :param r: amplitude reflectivity
    :type r: float

    :param t: amplitude transmissivity
    :type t: float

    :return: the mirror matrix
    :rtype: np.ndarray
    """
    _check_mirror(r, t, "mirror")
    return np.array([[r, 1j * t], [1j * t, r]], dtype=complex)

def front_mirror_matrices(R: float, T: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Reflection and transmission matrices of the input coupler, (R*I, T*I).
    """
    _check_mirror(R, T, "front_mirror")
    return R * identity(), T * identity()

def det_threshold(m: np.ndarray) -> float:
    """Relative singularity threshold for cofactor inversion."""
    norm = np.linalg.norm(m, np.inf)
    return DET_EPSILON * max(1.0, norm**2)

def invert2(m: np.ndarray) -> np.ndarray:
    """
    Exact cofactor inverse of a 2x2 complex matrix.

    :param m: matrix to invert
    :type m: np.ndarray

    :raises SingularMatrixError: if |det m| is below the relative threshold

    :return: the inverse
    :rtype: np.ndarray
    """
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if not np.abs(det) > det_threshold(m):
        raise SingularMatrixError(float(np.abs(det)))

    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex) / det

def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    """Checks M M^dagger = I entrywise to tol."""
    return bool(np.all(np.abs(m @ m.conj().T - IDENTITY) < tol))
