"""
Sideband input-output relations of the ring cavity: exact transfer coefficients,
their single-mode reduction, and the two-photon quadrature transfer matrices.

Port 1 is the bright (position) port, port 2 the dark (speed) port. The carrier is
injected from port 1 only.

Author:
Nikki Hess (nkhess@umich.edu)
"""

# built-in
from dataclasses import dataclass

# pypi
import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

# my modules
from . import matrix
from .cavity import CavityConfig, LaserConfig, cavity_kernel, resonance_factor, resonant_wavenumber
from .errors import SingularMatrixError, ValidationError

@dataclass(frozen=True)
class TransferSet:
    """
    Transfer coefficients at one sideband frequency (or a grid, entries broadcast).

    b11..b22 carry input field noise to the outputs, b13 and b23 carry test mass
    displacement to the outputs and include the 2i k_p A1 prefactor.
    """
    omega: float | np.ndarray
    b11: complex | np.ndarray
    b12: complex | np.ndarray
    b21: complex | np.ndarray
    b22: complex | np.ndarray
    b13: complex | np.ndarray
    b23: complex | np.ndarray

    def field_block(self) -> np.ndarray:
        return np.array([[self.b11, self.b12], [self.b21, self.b22]], dtype=complex)

    def as_dict(self) -> dict:
        return {
            "b11": self.b11, "b12": self.b12, "b13": self.b13,
            "b21": self.b21, "b22": self.b22, "b23": self.b23,
        }

@dataclass(frozen=True)
class TwoPhotonTransfer:
    R1: np.ndarray
    R2: np.ndarray
    M1x: np.ndarray
    M1v: np.ndarray
    M2v: np.ndarray

@dataclass(frozen=True)
class QuadratureState:
    c: complex
    s: complex

    def as_vector(self) -> np.ndarray:
        return matrix.vector(self.c, self.s)

    @classmethod
    def from_vector(cls, values: np.ndarray) -> "QuadratureState":
        return cls(c=complex(values[0]), s=complex(values[1]))

def _check_singular(factor, cfg: CavityConfig):
    threshold = matrix.DET_EPSILON * max(1.0, (1 + cfg.R)**2)
    smallest = np.min(np.abs(factor))
    if not smallest > threshold:
        raise SingularMatrixError(float(smallest))

def transfer_full(cfg: CavityConfig, laser: LaserConfig, omega) -> TransferSet:
    """
    Exact transfer coefficients with the carrier on the selected split resonance,
    for symmetric arms and injection from port 1 only. No frequency expansion.

    :param cfg: cavity configuration
    :type cfg: CavityConfig

    :param laser: laser configuration, including the resonance branch
    :type laser: LaserConfig

    :param omega: sideband angular frequency (scalar or array), rad/s
    :type omega: float | np.ndarray

    :raises SingularMatrixError: if the resonance factor vanishes

    :return: the six coefficients
    :rtype: TransferSet
    """
    omega = np.asarray(omega, dtype=float)
    k = resonant_wavenumber(cfg, laser.branch)
    L, R, T, r, t = cfg.L, cfg.R, cfg.T, cfg.r, cfg.t

    factor_0 = resonance_factor(cfg, k)
    factor_w = resonance_factor(cfg, k, omega)
    _check_singular(factor_0, cfg)
    _check_singular(factor_w, cfg)

    carrier = np.exp(1j * k * L)
    shifted = np.exp(1j * (k + omega / SPEED_OF_LIGHT) * L)
    delay = np.exp(1j * omega * L / SPEED_OF_LIGHT)
    signal = 2j * laser.k_p * laser.amplitude

    b11 = -r * T**2 * shifted / factor_w
    b12 = -(-R + 1j * t * (1 + R**2) * shifted + R * shifted**2) / factor_w

    half_shift = np.exp(1j * (k + omega / (2 * SPEED_OF_LIGHT)) * L)
    b13 = (signal * r * T**2 * half_shift / (factor_0 * factor_w)
           * (1 - R * carrier * (1j * t + 1j * t * delay + R * shifted)))

    double_shift = np.exp(1j * (2 * k + omega / (2 * SPEED_OF_LIGHT)) * L)
    b23 = signal * r**2 * T**2 * R * double_shift * (delay - 1) / (factor_0 * factor_w)

    return TransferSet(omega=omega, b11=b11, b12=b12, b21=b12, b22=b11, b13=b13, b23=b23)

def transfer_matrix_chain(cfg: CavityConfig, laser: LaserConfig, omega: float) -> TransferSet:
    """
    Transfer coefficients from a direct solve of the propagation equations,
    b = [-R s1 + T K(W) P(W) M P(W) T] a + 2i k_p x r T K(W) P(W) s3 E.

    Works for unequal arm lengths. Scalar omega only.
    """
    k = resonant_wavenumber(cfg, laser.branch)
    mirror = matrix.mirror_matrix(cfg.r, cfg.t)
    front_reflect, front_transmit = matrix.front_mirror_matrices(cfg.R, cfg.T)
    swap = matrix.pauli(1)

    prop_0 = matrix.propagation_matrix(cfg, k)
    prop_w = matrix.propagation_matrix(cfg, k, omega)
    kernel_0 = cavity_kernel(cfg, k)
    kernel_w = cavity_kernel(cfg, k, omega)

    scattering = -front_reflect @ swap + front_transmit @ kernel_w @ prop_w @ mirror @ prop_w @ front_transmit

    carrier_in = matrix.vector(laser.amplitude, 0)
    at_mass = prop_0 @ (front_reflect @ swap @ kernel_0 @ prop_0 @ mirror @ prop_0 + matrix.identity()) @ front_transmit @ carrier_in
    signal = 2j * laser.k_p * cfg.r * (front_transmit @ kernel_w @ prop_w @ matrix.pauli(3) @ at_mass)

    return TransferSet(
        omega=omega,
        b11=complex(scattering[0, 0]), b12=complex(scattering[0, 1]),
        b21=complex(scattering[1, 0]), b22=complex(scattering[1, 1]),
        b13=complex(signal[0]), b23=complex(signal[1]),
    )

def transfer_single_mode(gamma: float, k_p: float, A1: float, omega) -> TransferSet:
    """
    One-pole approximation of the transfer coefficients (W << FSR, T << 1).

    :param gamma: optical half-linewidth, rad/s
    :type gamma: float

    :param k_p: carrier wavenumber, rad/m
    :type k_p: float

    :param A1: input amplitude on port 1
    :type A1: float

    :param omega: sideband angular frequency (scalar or array), rad/s
    :type omega: float | np.ndarray

    :return: the six coefficients
    :rtype: TransferSet
    """
    if not gamma > 0:
        raise ValidationError("linewidth must be positive", "gamma")

    omega = np.asarray(omega, dtype=float)
    pole = gamma - 1j * omega
    signal = 2j * k_p * A1

    b11 = gamma / pole
    b12 = -1j * omega / pole
    b13 = signal * (1 + 1j * omega / (2 * pole))
    b23 = 1j * omega * signal / (2 * pole)

    return TransferSet(omega=omega, b11=b11, b12=b12, b21=b12, b22=b11, b13=b13, b23=b23)

def two_photon_transfer(gamma: float, k_p: float, omega: float) -> TwoPhotonTransfer:
    """
    Quadrature transfer matrices of the single-mode model.

    The speed part of the position-port signal, M1v, is -k_p/(2(gamma - iW)) sigma_2,
    which keeps the position-port signal proportional to (gamma - iW/2)/(gamma - iW).
    """
    if not gamma > 0:
        raise ValidationError("linewidth must be positive", "gamma")

    pole = gamma - 1j * omega
    sigma_2 = matrix.pauli(2)

    return TwoPhotonTransfer(
        R1=gamma / pole * matrix.identity(),
        R2=-1j * omega / pole * matrix.identity(),
        M1x=-1j * k_p * gamma / pole * sigma_2,
        M1v=-k_p / (2 * pole) * sigma_2,
        M2v=k_p / pole * sigma_2,
    )

def carrier_quadratures(laser: LaserConfig) -> np.ndarray:
    """Carrier in the cosine quadrature, sqrt(2 I_in / hbar w_p) (1, 0)."""
    return matrix.vector(laser.amplitude, 0)

def output_quadratures(tpt: TwoPhotonTransfer, a1: QuadratureState, a2: QuadratureState,
                       x: float, omega: float, A1_quad: np.ndarray) -> tuple[QuadratureState, QuadratureState]:
    """
    Output quadratures of both ports for given input quadratures and displacement.

    :return: (b1, b2)
    :rtype: tuple[QuadratureState, QuadratureState]
    """
    a1_vec = a1.as_vector()
    a2_vec = a2.as_vector()

    b1 = tpt.R1 @ a1_vec + tpt.R2 @ a2_vec + x * tpt.M1x @ A1_quad + omega * x * tpt.M1v @ A1_quad
    b2 = tpt.R2 @ a1_vec + tpt.R1 @ a2_vec + omega * x * tpt.M2v @ A1_quad

    return QuadratureState.from_vector(b1), QuadratureState.from_vector(b2)

def signal_coefficient(tpt: TwoPhotonTransfer, port: int, omega: float) -> complex:
    """
    Scalar sigma_2 coefficient of the displacement signal matrix on a port.
    """
    if port == 1:
        combined = tpt.M1x + omega * tpt.M1v
    elif port == 2:
        combined = omega * tpt.M2v
    else:
        raise ValidationError("port must be 1 or 2", "port")

    # sigma_2[0, 1] = -i
    return complex(combined[0, 1] / -1j)

def amplitude_ratio_db(ratio) -> float | np.ndarray:
    """Signal amplitude ratio in dB, 10 log10 |ratio|, as the ringdown traces are."""
    return 10 * np.log10(np.abs(ratio))

def port_ratio_db(gamma: float, omega) -> float | np.ndarray:
    """
    Position-port over speed-port signal ratio 10 log10 |b13 / b23|, single-mode model.
    """
    transfer = transfer_single_mode(gamma, 1.0, 1.0, omega)
    return amplitude_ratio_db(transfer.b13 / transfer.b23)
