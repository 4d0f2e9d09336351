"""
Classical (carrier) solution of the hybrid readout ring cavity: resonance factor,
intra-cavity fields, split resonances and the dark port.

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
from . import matrix
from .errors import NoSplitResonanceError, ValidationError

BRANCHES = ("plus", "minus")

@dataclass(frozen=True)
class CavityConfig:
    """
    Geometry and mirror parameters of the ring cavity.

    L1 and L2 are the two arm lengths from the front mirror to the test mass.
    R, T belong to the front mirror and r, t to the test mass (all amplitudes).
    gamma_override, if set, replaces the derived linewidth (rad/s).
    """
    L1: float
    L2: float
    R: float
    T: float
    r: float
    t: float
    gamma_override: float | None = None

    def __post_init__(self):
        if not (self.L1 > 0 and self.L2 > 0):
            raise ValidationError("arm lengths must be positive", "cavity.length")
        if not self.T > 0:
            raise ValidationError("front mirror transmissivity must be positive", "cavity.T")
        if self.gamma_override is not None and not self.gamma_override > 0:
            raise ValidationError("linewidth override must be positive", "cavity.linewidth_override_hz")

        # raises NonPhysicalMirrorError
        matrix.front_mirror_matrices(self.R, self.T)
        matrix.mirror_matrix(self.r, self.t)

    @classmethod
    def from_powers(cls, length_1: float, length_2: float, front_power_transmission: float,
                    membrane_power_reflectivity: float, gamma_override: float | None = None) -> "CavityConfig":
        """
        Builds a lossless configuration from power coefficients.

        :param length_1: first arm length, m
        :type length_1: float

        :param length_2: second arm length, m
        :type length_2: float

        :param front_power_transmission: T^2 of the input coupler
        :type front_power_transmission: float

        :param membrane_power_reflectivity: r^2 of the test mass
        :type membrane_power_reflectivity: float

        :param gamma_override: optional linewidth, rad/s
        :type gamma_override: float | None

        :return: the cavity config
        :rtype: CavityConfig
        """
        if not 0 < front_power_transmission <= 1:
            raise ValidationError("must be in (0, 1]", "cavity.front_power_transmission")
        if not 0 <= membrane_power_reflectivity <= 1:
            raise ValidationError("must be in [0, 1]", "cavity.membrane_power_reflectivity")

        return cls(
            L1=length_1,
            L2=length_2,
            R=math.sqrt(1 - front_power_transmission),
            T=math.sqrt(front_power_transmission),
            r=math.sqrt(membrane_power_reflectivity),
            t=math.sqrt(1 - membrane_power_reflectivity),
            gamma_override=gamma_override,
        )

    @property
    def L(self) -> float:
        return self.L1 + self.L2

    @property
    def tau(self) -> float:
        """Round-trip time, s."""
        return self.L / SPEED_OF_LIGHT

    @property
    def fsr(self) -> float:
        """Free spectral range c/L, Hz."""
        return SPEED_OF_LIGHT / self.L

    @property
    def theta(self) -> float:
        """Mixing angle with r = cos(theta), t = sin(theta)."""
        return math.atan2(self.t, self.r)

    @property
    def gamma(self) -> float:
        """Optical half-linewidth, rad/s. cT^2/(2L) unless overridden."""
        if self.gamma_override is not None:
            return self.gamma_override
        return SPEED_OF_LIGHT * self.T**2 / (2 * self.L)

@dataclass(frozen=True)
class LaserConfig:
    """
    Carrier laser. The input amplitude is derived from I_in = hbar*k_p*c*A^2/2.
    """
    wavelength: float
    input_power: float
    branch: str = "plus"

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValidationError("wavelength must be positive", "laser.wavelength_m")
        if not self.input_power > 0:
            raise ValidationError("input power must be positive", "laser.input_power_w")
        if self.branch not in BRANCHES:
            raise ValidationError(f"branch must be one of {BRANCHES}", "laser.branch")

    @property
    def k_p(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def omega_p(self) -> float:
        return self.k_p * SPEED_OF_LIGHT

    @property
    def amplitude(self) -> float:
        """Input field amplitude A (sqrt of photons per second)."""
        return math.sqrt(2 * self.input_power / (HBAR * self.omega_p))

@dataclass(frozen=True)
class ClassicalSolution:
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    resonance_factor: complex

def resonance_factor(cfg: CavityConfig, k: float, omega: float | np.ndarray = 0.0) -> complex | np.ndarray:
    """
    The cavity resonance factor R^2 e^{2i(k+W/c)L} + 2iRt e^{i(k+W/c)L} - 1.

    :param cfg: cavity configuration
    :type cfg: CavityConfig

    :param k: carrier wavenumber, rad/m
    :type k: float

    :param omega: sideband angular frequency (scalar or array), rad/s
    :type omega: float | np.ndarray

    :return: the resonance factor
    :rtype: complex | np.ndarray
    """
    u = np.exp(1j * (k + np.asarray(omega) / SPEED_OF_LIGHT) * cfg.L)
    return cfg.R**2 * u**2 + 2j * cfg.R * cfg.t * u - 1

def resonant_phase(cfg: CavityConfig, branch: str = "plus") -> float:
    """
    Round-trip phase kL of the carrier sitting on a split resonance, in [0, 2pi).

    The "plus" branch satisfies e^{ikL} = r - it, the "minus" branch e^{ikL} = -r - it.
    """
    if branch not in BRANCHES:
        raise ValidationError(f"branch must be one of {BRANCHES}", "laser.branch")

    real = cfg.r if branch == "plus" else -cfg.r
    return math.atan2(-cfg.t, real) % (2 * math.pi)

def resonant_wavenumber(cfg: CavityConfig, branch: str = "plus") -> float:
    """
    Reduced carrier wavenumber phase/L. Only e^{ikL1}, e^{ikL2} enter the model,
    so the reference planes are chosen such that k lies in [0, 2pi/L).
    """
    return resonant_phase(cfg, branch) / cfg.L

def cavity_kernel(cfg: CavityConfig, k: float, omega: float = 0.0) -> np.ndarray:
    """
    K(W) = [I - P(W) M P(W) R sigma_1]^-1

    :raises SingularMatrixError: if the cavity has no finite response
    """
    propagation = matrix.propagation_matrix(cfg, k, omega)
    mirror = matrix.mirror_matrix(cfg.r, cfg.t)
    front_reflect, _ = matrix.front_mirror_matrices(cfg.R, cfg.T)

    round_trip = propagation @ mirror @ propagation @ front_reflect @ matrix.pauli(1)
    return matrix.invert2(matrix.identity() - round_trip)

def classical_fields(cfg: CavityConfig, laser: LaserConfig, k: float, A_in: np.ndarray) -> ClassicalSolution:
    """
    Solves for the steady-state carrier amplitudes everywhere in the ring.

    :param cfg: cavity configuration
    :type cfg: CavityConfig

    :param laser: laser configuration (kept for interface symmetry with the quantum solver)
    :type laser: LaserConfig

    :param k: carrier wavenumber, rad/m
    :type k: float

    :param A_in: incoming amplitudes (A1, A2)
    :type A_in: np.ndarray

    :raises SingularMatrixError: near an anti-resonant degenerate configuration

    :return: the output and intra-cavity fields
    :rtype: ClassicalSolution
    """
    A_in = np.asarray(A_in, dtype=complex)
    propagation = matrix.propagation_matrix(cfg, k)
    mirror = matrix.mirror_matrix(cfg.r, cfg.t)
    front_reflect, front_transmit = matrix.front_mirror_matrices(cfg.R, cfg.T)
    swap = matrix.pauli(1)

    kernel = cavity_kernel(cfg, k)
    pmp = propagation @ mirror @ propagation

    C = kernel @ pmp @ front_transmit @ A_in
    B = (-front_reflect @ swap + front_transmit @ kernel @ pmp @ front_transmit) @ A_in
    D = front_reflect @ swap @ C + front_transmit @ A_in
    E = propagation @ D
    F = mirror @ E

    return ClassicalSolution(B=B, C=C, D=D, E=E, F=F, resonance_factor=complex(resonance_factor(cfg, k)))

def dark_port_ratio(cfg: CavityConfig, branch: str = "plus") -> float:
    """
    |B2/A1|^2 with light injected only from port 1 and the carrier on resonance.
    """
    k = resonant_wavenumber(cfg, branch)
    u = np.exp(1j * k * cfg.L)
    numerator = cfg.R * (1 - u**2) - 1j * cfg.t * (cfg.R**2 + 1) * u
    return float(np.abs(numerator / resonance_factor(cfg, k))**2)

def resonance_frequencies(cfg: CavityConfig) -> tuple[float, float]:
    """
    The two split resonances omega_c = k c, reported in [0, 2pi c/L).

    :param cfg: cavity configuration
    :type cfg: CavityConfig

    :raises NoSplitResonanceError: if the resonance condition has no real solution

    :return: (omega_plus, omega_minus), rad/s
    :rtype: tuple[float, float]
    """
    scale = SPEED_OF_LIGHT / cfg.L
    argument = -cfg.t * (1 + cfg.R**2) / (2 * cfg.R)

    if abs(argument) > 1:
        if cfg.r == 0:
            # empty ring: clockwise and counter-clockwise modes coincide
            degenerate = scale * 1.5 * math.pi
            return degenerate, degenerate
        raise NoSplitResonanceError(
            f"resonance condition argument {argument:.6f} is outside [-1, 1]"
        )

    phase = math.asin(argument)
    plus = (phase % (2 * math.pi)) * scale
    minus = ((math.pi - phase) % (2 * math.pi)) * scale
    return plus, minus

def resonance_splitting(cfg: CavityConfig) -> float:
    """Splitting between the two exact resonance branches, rad/s."""
    plus, minus = resonance_frequencies(cfg)
    return abs(plus - minus)

def mode_splitting(cfg: CavityConfig) -> float:
    """
    High-finesse normal-mode splitting 2(c/L) arcsin r, rad/s.
    """
    if not 0 <= cfg.r <= 1:
        raise ValidationError("test mass reflectivity must be in [0, 1]", "cavity.r")
    return 2 * SPEED_OF_LIGHT / cfg.L * math.asin(cfg.r)

def reflectivity_from_splitting(splitting: float, length: float) -> float:
    """
    Inverts mode_splitting for the amplitude reflectivity.

    :param splitting: mode splitting, rad/s
    :type splitting: float

    :param length: round-trip length, m
    :type length: float

    :return: amplitude reflectivity r
    :rtype: float
    """
    argument = splitting * length / (2 * SPEED_OF_LIGHT)
    if not 0 <= argument <= math.pi / 2:
        raise ValidationError("splitting is outside the range the ring can produce", "splitting")
    return math.sin(argument)

def intracavity_intensity_sweep(cfg: CavityConfig, phase_grid) -> list[tuple[float, float]]:
    """
    Intra-cavity intensity |C1|^2 + |C2|^2 versus round-trip phase kL, normalized to its peak.

    :param cfg: cavity configuration
    :type cfg: CavityConfig

    :param phase_grid: round-trip phases, rad
    :type phase_grid: list[float] | np.ndarray

    :return: (phase, normalized intensity) pairs
    :rtype: list[tuple[float, float]]
    """
    phases = np.asarray(phase_grid, dtype=float)
    if phases.size == 0:
        raise ValidationError("phase grid is empty", "phase_grid")

    q = np.exp(1j * phases)
    denominator = np.abs(cfg.R**2 * q**2 + 2j * cfg.R * cfg.t * q - 1)**2
    reflected = 1j * cfg.t + q * cfg.R * (cfg.r**2 + cfg.t**2)
    intensity = cfg.T**2 * (cfg.r**2 + np.abs(reflected)**2) / denominator

    intensity = intensity / intensity.max()
    return list(zip(phases.tolist(), intensity.tolist()))
