"""
Displacement-referred quantum noise of the ring cavity speedmeter.

Conventions: one-sided spectra, vacuum input quadratures with unit spectral density
and no cross-correlation. Noise is carried as coefficient vectors over the input
quadratures (a1c, a1s, a2c, a2s), so any linear readout maps to a spectral density
as the squared norm of its vector.

Author:
Nikki Hess (nkhess@umich.edu)
"""

# built-in
from dataclasses import dataclass
import math

# pypi
import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT, hbar as HBAR

# my modules
from .cavity import CavityConfig, LaserConfig
from .errors import ValidationError

INF = math.inf
SIN_EPSILON = 1e-12

@dataclass(frozen=True)
class MechanicalMode:
    """
    Test mass dynamics. A free mass has omega_m = gamma_m = 0.

    gamma_m is the mechanical half-linewidth (Q = omega_m / (2 gamma_m)).
    """
    M: float
    omega_m: float = 0.0
    gamma_m: float = 0.0

    def __post_init__(self):
        if not self.M > 0:
            raise ValidationError("mass must be positive", "mechanics.mass_kg")
        if self.omega_m < 0:
            raise ValidationError("mechanical frequency must be non-negative", "mechanics.omega_m_hz")
        if self.gamma_m < 0:
            raise ValidationError("mechanical linewidth must be non-negative", "mechanics.quality_factor")

    @classmethod
    def free(cls, M: float) -> "MechanicalMode":
        return cls(M=M)

    @classmethod
    def from_quality(cls, M: float, omega_m: float, quality_factor: float) -> "MechanicalMode":
        if not quality_factor > 0:
            raise ValidationError("quality factor must be positive", "mechanics.quality_factor")
        return cls(M=M, omega_m=omega_m, gamma_m=omega_m / (2 * quality_factor))

    @property
    def is_free(self) -> bool:
        return self.omega_m == 0 and self.gamma_m == 0

@dataclass(frozen=True)
class NoiseBudget:
    omega: float
    S_shot_1: float
    S_shot_2: float
    S_rp_x: float
    S_rp_v: float
    S_total_1: float
    S_total_2: float
    S_SQL: float
    K_os: float

    def as_row(self) -> dict:
        return {
            "s_shot_1": self.S_shot_1, "s_shot_2": self.S_shot_2,
            "s_rp_x": self.S_rp_x, "s_rp_v": self.S_rp_v,
            "s_total_1": self.S_total_1, "s_total_2": self.S_total_2,
            "s_sql": self.S_SQL,
        }

@dataclass(frozen=True)
class ReadoutCombination:
    g: complex
    K: complex
    combined: np.ndarray | complex | None = None

def shot_prefactor(I_in: float, omega_p: float) -> float:
    """hbar c^2 / (4 I_in w_p), the free-space position meter shot noise."""
    return HBAR * SPEED_OF_LIGHT**2 / (4 * I_in * omega_p)

def backaction_prefactor(I_in: float, omega_p: float) -> float:
    """hbar w_p I_in / c^2"""
    return HBAR * omega_p * I_in / SPEED_OF_LIGHT**2

def shot_noise_displacement(gamma: float, I_in: float, omega_p: float, omega: float) -> tuple[float, float]:
    """
    Shot noise of both ports normalized to displacement.

    :param gamma: optical half-linewidth, rad/s
    :type gamma: float

    :param I_in: input power, W
    :type I_in: float

    :param omega_p: carrier angular frequency, rad/s
    :type omega_p: float

    :param omega: sideband angular frequency, rad/s
    :type omega: float

    :return: (S_x1, S_x2) in m^2/Hz; S_x2 is inf at omega = 0
    :rtype: tuple[float, float]
    """
    if not (gamma > 0 and I_in > 0 and omega_p > 0):
        raise ValidationError("linewidth, power and carrier frequency must be positive")
    if omega < 0:
        raise ValidationError("sideband frequency must be non-negative", "omega")

    prefactor = shot_prefactor(I_in, omega_p)
    s_x1 = prefactor * (gamma**2 + omega**2) / (gamma**2 + omega**2 / 4)
    s_x2 = INF if omega == 0 else prefactor * (gamma**2 + omega**2) / omega**2
    return s_x1, s_x2

def qrpn_force_vectors(gamma: float, k_p: float, A: float, omega: float, r: float, t: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Radiation pressure force coefficients over (a1c, a1s, a2c, a2s), split into the
    position part (proportional to gamma) and the speed part (proportional to omega).

    :return: (position_vector, speed_vector), N per unit quadrature
    :rtype: tuple[np.ndarray, np.ndarray]
    """
    scale = HBAR * k_p * A / (math.sqrt(2) * (gamma - 1j * omega))
    contrast = r**2 - t**2

    position = scale * np.array([contrast * 2 * gamma, 0, 0, 1j * r * t * 2 * gamma], dtype=complex)
    speed = scale * np.array([
        contrast * -1j * omega,
        1j * r * t * omega,
        -1j * contrast * omega,
        1j * r * t * -1j * omega,
    ], dtype=complex)
    return position, speed

def qrpn_force_quadratures(cfg: CavityConfig, laser: LaserConfig, omega: float, a1, a2) -> complex:
    """
    Radiation pressure force for given input quadratures in the single-mode model.

    :param a1: port 1 input quadratures
    :type a1: QuadratureState

    :param a2: port 2 input quadratures
    :type a2: QuadratureState

    :return: force amplitude, N/sqrt(Hz)
    :rtype: complex
    """
    position, speed = qrpn_force_vectors(cfg.gamma, laser.k_p, laser.amplitude, omega, cfg.r, cfg.t)
    inputs = np.array([a1.c, a1.s, a2.c, a2.s], dtype=complex)
    return complex((position + speed) @ inputs)

def qrpn_spectral_density(gamma: float, I_in: float, omega_p: float, omega: float,
                          r: float = 1.0, t: float = 0.0) -> tuple[float, float]:
    """
    Position and speed parts of the radiation pressure force spectral density for
    vacuum inputs. The two parts are uncorrelated.

    :return: (S_rp_x, S_rp_v), N^2/Hz
    :rtype: tuple[float, float]
    """
    kappa = backaction_prefactor(I_in, omega_p)
    mixing = (r**2 - t**2)**2 + r**2 * t**2
    denominator = gamma**2 + omega**2

    s_x = 4 * gamma**2 * kappa * mixing / denominator
    s_v = 2 * omega**2 * kappa * mixing / denominator
    return s_x, s_v

def qrpn_fabry_perot(I_in: float, omega_p: float, L: float, gamma: float, omega: float) -> float:
    """Radiation pressure noise of a conventional Fabry-Perot cavity, N^2/Hz."""
    return 4 * HBAR * I_in * omega_p / (L**2 * (gamma**2 + omega**2))

def cancellation_residual(r: float, t: float, a2s: complex) -> complex:
    """
    Zeroth-order force coefficient left over when the port 1 amplitude quadrature is
    correlated with the port 2 phase quadrature, (r^2 - t^2) a1c = -i r t a2s.
    """
    contrast = r**2 - t**2
    if contrast == 0:
        return 1j * r * t * a2s

    a1c = -1j * r * t * a2s / contrast
    return contrast * a1c + 1j * r * t * a2s

def optical_spring(omega_p: float, I_in: float, t: float, L: float, gamma: float) -> float:
    """
    Optical spring constant 4 w_p I_in t / (c L gamma), N/m. Positive values soften
    the mechanical spring.
    """
    if not (omega_p > 0 and I_in > 0 and L > 0 and gamma > 0):
        raise ValidationError("optical spring parameters must be positive")
    return 4 * omega_p * I_in * t / (SPEED_OF_LIGHT * L * gamma)

def shifted_frequency(mode: MechanicalMode, K_os: float) -> float:
    """Mechanical resonance with the optical spring, sqrt(w_m^2 - K_os/M)."""
    squared = mode.omega_m**2 - K_os / mode.M
    if squared < 0:
        raise ValidationError("optical spring exceeds the mechanical stiffness", "mechanics")
    return math.sqrt(squared)

def mechanical_susceptibility(mode: MechanicalMode, omega, K_os: float = 0.0):
    """
    Displacement response to force, 1 / [M (w_m'^2 - W^2) - 2i gamma_m M W].

    :param mode: the mechanical mode
    :type mode: MechanicalMode

    :param omega: sideband angular frequency (scalar or array), rad/s
    :type omega: float | np.ndarray

    :param K_os: optical spring constant, N/m
    :type K_os: float

    :return: susceptibility in m/N; complex inf on an undamped resonance
    :rtype: complex | np.ndarray
    """
    omega = np.asarray(omega, dtype=float)
    stiffness = mode.omega_m**2 - K_os / mode.M
    denominator = mode.M * (stiffness - omega**2) - 2j * mode.gamma_m * mode.M * omega

    with np.errstate(divide="ignore", invalid="ignore"):
        response = np.where(denominator == 0, complex(INF, 0), 1 / np.where(denominator == 0, 1, denominator))

    if response.ndim == 0:
        return complex(response)
    return response

def sql(M: float, omega):
    """Standard quantum limit 2 hbar / (M W^2), m^2/Hz."""
    omega = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore"):
        value = 2 * HBAR / (M * omega**2)
    return float(value) if value.ndim == 0 else value

def readout_noise_vector(gamma: float, omega: float, port: int, zeta: float) -> np.ndarray:
    """Homodyne readout cos(z) b^c + sin(z) b^s of a port, over (a1c, a1s, a2c, a2s)."""
    pole = gamma - 1j * omega
    direct = gamma / pole
    crossed = -1j * omega / pole

    same, other = (direct, crossed) if port == 1 else (crossed, direct)
    cos_z, sin_z = math.cos(zeta), math.sin(zeta)
    return np.array([same * cos_z, same * sin_z, other * cos_z, other * sin_z], dtype=complex)

def signal_vector_scale(gamma: float, I_in: float, omega_p: float, omega: float, port: int) -> complex:
    """
    Phase-quadrature output per metre of displacement for a port. The magnitude is the
    inverse square root of the port's shot noise.
    """
    pole = gamma - 1j * omega
    amplitude = 1 / math.sqrt(shot_prefactor(I_in, omega_p))

    if port == 1:
        return amplitude * (gamma - 0.5j * omega) / pole
    return amplitude * 1j * omega / pole

def displacement_noise_vector(cfg: CavityConfig, laser: LaserConfig, mode: MechanicalMode,
                              omega: float, port: int, zeta: float, K_os: float = 0.0) -> np.ndarray:
    """
    Readout noise of a port normalized to displacement plus the radiation pressure
    displacement, as a coefficient vector over the input quadratures.
    """
    if port not in (1, 2):
        raise ValidationError("port must be 1 or 2", "readout.port")

    sin_z = math.sin(zeta)
    signal = signal_vector_scale(cfg.gamma, laser.input_power, laser.omega_p, omega, port)
    chi = mechanical_susceptibility(mode, omega, K_os)
    position, speed = qrpn_force_vectors(cfg.gamma, laser.k_p, laser.amplitude, omega, cfg.r, cfg.t)

    if abs(sin_z) < SIN_EPSILON or signal == 0:
        return np.full(4, complex(INF, 0))

    readout = readout_noise_vector(cfg.gamma, omega, port, zeta) / (sin_z * signal)
    return readout + chi * (position + speed)

def _power(vector: np.ndarray) -> float:
    if not np.all(np.isfinite(vector)):
        return INF
    return float(np.sum(np.abs(vector)**2))

def postprocessed_vector(cfg: CavityConfig, laser: LaserConfig, mode: MechanicalMode,
                         omega: float, K_os: float = 0.0, filter_ratio: float = -2.0) -> np.ndarray:
    """
    Speed-port phase quadrature (normalized to displacement) combined with the filtered
    position-port amplitude quadrature. filter_ratio = -2 removes the gamma-proportional
    back-action from port 1's amplitude quadrature; for r < 1 the a2s term is left.
    """
    gamma = cfg.gamma
    pole = gamma - 1j * omega
    chi = mechanical_susceptibility(mode, omega, K_os)
    speed_port = displacement_noise_vector(cfg, laser, mode, omega, 2, math.pi / 2, K_os)

    back_action = chi * HBAR * laser.k_p * laser.amplitude / math.sqrt(2) * (cfg.r**2 - cfg.t**2)
    amplitude_quadrature = np.array([gamma, 0, -1j * omega, 0], dtype=complex) / pole
    return speed_port + filter_ratio * back_action * amplitude_quadrature

def total_budget(cfg: CavityConfig, laser: LaserConfig, mode: MechanicalMode, port: int,
                 zeta: float, omega_grid, include_spring: bool = False) -> list[NoiseBudget]:
    """
    Full noise budget on a frequency grid. The selected port is read at homodyne angle
    zeta, the other port in the phase quadrature.

    :param cfg: cavity configuration
    :type cfg: CavityConfig

    :param laser: laser configuration
    :type laser: LaserConfig

    :param mode: test mass dynamics
    :type mode: MechanicalMode

    :param port: 1 (position) or 2 (speed)
    :type port: int

    :param zeta: homodyne angle, rad
    :type zeta: float

    :param omega_grid: sideband angular frequencies, rad/s (all > 0)
    :type omega_grid: list[float] | np.ndarray

    :param include_spring: whether the optical spring modifies the dynamics. default = False
    :type include_spring: bool

    :return: one NoiseBudget per frequency
    :rtype: list[NoiseBudget]
    """
    if port not in (1, 2):
        raise ValidationError("port must be 1 or 2", "readout.port")

    omegas = np.asarray(omega_grid, dtype=float)
    if omegas.size == 0 or np.any(omegas <= 0):
        raise ValidationError("frequency grid must be non-empty and positive", "grid")

    K_os = optical_spring(laser.omega_p, laser.input_power, cfg.t, cfg.L, cfg.gamma)
    applied_spring = K_os if include_spring else 0.0
    angles = {1: math.pi / 2, 2: math.pi / 2}
    angles[port] = zeta

    budgets = []
    for omega in omegas:
        omega = float(omega)
        s_x1, s_x2 = shot_noise_displacement(cfg.gamma, laser.input_power, laser.omega_p, omega)
        s_rp_x, s_rp_v = qrpn_spectral_density(cfg.gamma, laser.input_power, laser.omega_p, omega, cfg.r, cfg.t)

        sin_1 = math.sin(angles[1])**2
        sin_2 = math.sin(angles[2])**2
        sin_floor = SIN_EPSILON**2
        budgets.append(NoiseBudget(
            omega=omega,
            S_shot_1=s_x1 / sin_1 if sin_1 > sin_floor else INF,
            S_shot_2=s_x2 / sin_2 if sin_2 > sin_floor else INF,
            S_rp_x=s_rp_x,
            S_rp_v=s_rp_v,
            S_total_1=_power(displacement_noise_vector(cfg, laser, mode, omega, 1, angles[1], applied_spring)),
            S_total_2=_power(displacement_noise_vector(cfg, laser, mode, omega, 2, angles[2], applied_spring)),
            S_SQL=sql(mode.M, omega),
            K_os=K_os,
        ))

    return budgets

def postprocessed_budget(cfg: CavityConfig, laser: LaserConfig, mode: MechanicalMode, omega_grid,
                         filter_ratio: float = -2.0) -> np.ndarray:
    """Displacement-referred noise of the optimally combined readout on a grid, m^2/Hz."""
    omegas = np.asarray(omega_grid, dtype=float)
    if omegas.size == 0 or np.any(omegas <= 0):
        raise ValidationError("frequency grid must be non-empty and positive", "grid")

    return np.array([
        _power(postprocessed_vector(cfg, laser, mode, float(omega), filter_ratio=filter_ratio))
        for omega in omegas
    ])

def readout_coefficient(gamma: float, k_p: float, A1: float, M: float, omega: float) -> complex:
    """K(W) = iW hbar k_p^2 A1^2 / (sqrt(2) M W^2 (gamma - iW))"""
    if not M > 0:
        raise ValidationError("mass must be positive", "mechanics.mass_kg")
    return 1j * omega * HBAR * k_p**2 * A1**2 / (math.sqrt(2) * M * omega**2 * (gamma - 1j * omega))

def port_records(gamma: float, k_p: float, A1: float, M: float, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Raw records for a fully reflective free test mass over (a1c, a1s, a2c, a2s):
    the position-port amplitude quadrature b1c and the speed-port phase quadrature b2s
    with its radiation-pressure displacement.
    """
    pole = gamma - 1j * omega
    K = readout_coefficient(gamma, k_p, A1, M, omega)

    b1c = np.array([gamma, 0, -1j * omega, 0], dtype=complex) / pole
    b2s = np.array([K * (2 * gamma - 1j * omega), -1j * omega, -1j * omega * K, gamma], dtype=complex) / pole
    return b1c, b2s

def optimal_readout(gamma: float, k_p: float, A1: float, M: float, omega: float,
                    b1c, b2s, g: complex | None = None) -> ReadoutCombination:
    """
    Combines the speed-port phase quadrature with the filtered position-port amplitude
    quadrature, b2s + g(W) b1c. The default filter g = -2K removes the position
    back-action.

    :param b1c: position-port amplitude quadrature record (scalar or coefficient vector)
    :param b2s: speed-port phase quadrature record at the same frequency

    :return: the filter, K and the combined record
    :rtype: ReadoutCombination
    """
    K = readout_coefficient(gamma, k_p, A1, M, omega)
    if g is None:
        g = -2 * K

    combined = np.asarray(b2s) + g * np.asarray(b1c)
    return ReadoutCombination(g=g, K=K, combined=combined)

def back_action_residual(gamma: float, k_p: float, A1: float, M: float, omega: float,
                         filter_ratio: float = -2.0) -> complex:
    """
    a1c coefficient of the combined record in units of K / (gamma - iW), with g = filter_ratio * K.
    Read from the record optimal_readout builds out of port_records.
    """
    b1c, b2s = port_records(gamma, k_p, A1, M, omega)
    K = readout_coefficient(gamma, k_p, A1, M, omega)
    readout = optimal_readout(gamma, k_p, A1, M, omega, b1c, b2s, g=filter_ratio * K)
    return complex(readout.combined[0] * (gamma - 1j * omega) / K)

def table1_comparison(I_in: float, omega_p: float, T: float, tau: float, omega: float) -> dict:
    """
    Shot-noise-limited sensitivities of the free-space meters, the ring cavity ports,
    and a cavity-enhanced standard detector.

    :return: mapping of "<topology>_<kind>" to m^2/Hz
    :rtype: dict
    """
    if not (I_in > 0 and omega_p > 0 and T > 0 and tau > 0 and omega > 0):
        raise ValidationError("all parameters must be positive")

    prefactor = shot_prefactor(I_in, omega_p)
    delay = (omega * tau)**2

    return {
        "free_speed": prefactor / delay,
        "free_position": prefactor,
        "hrc_speed": prefactor * T**4 / delay,
        "hrc_position": prefactor,
        "standard_speed": prefactor * T**4 / 4 * T**4 / (16 * delay),
        "standard_position": prefactor * T**4 / 4,
    }
