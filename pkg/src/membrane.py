"""
Multi-mode model of the SiN membrane test mass: drum mode ladder, summed mechanical
response seen through the cavity ports, and Q from ringdown traces.

Author:
Nikki Hess (nkhess@umich.edu)
"""

# built-in
from dataclasses import dataclass, replace
import math

# pypi
import numpy as np

# my modules
from nikki_utils import tsprint
from .errors import FitError, ValidationError
from .noise import MechanicalMode, mechanical_susceptibility
from .quantum import transfer_single_mode

DEFAULT_MASS_FRACTION = 0.25

@dataclass(frozen=True)
class MembraneGeometry:
    X: float
    Y: float
    stress: float
    density: float
    thickness: float

    def __post_init__(self):
        for name in ("X", "Y", "stress", "density", "thickness"):
            if not getattr(self, name) > 0:
                raise ValidationError("must be positive", f"membrane.{name}")

    @property
    def sound_speed(self) -> float:
        """sqrt(stress / (4 density)), m/s"""
        return math.sqrt(self.stress / (4 * self.density))

@dataclass(frozen=True)
class Mode:
    m: int
    n: int
    frequency: float
    M_eff: float
    Q: float

    def mechanical(self) -> MechanicalMode:
        return MechanicalMode.from_quality(self.M_eff, 2 * math.pi * self.frequency, self.Q)

def physical_mass(geom: MembraneGeometry) -> float:
    return geom.density * geom.X * geom.Y * geom.thickness

def mode_frequencies(geom: MembraneGeometry, max_m: int, max_n: int, quality_factor: float = 4.6e5,
                     mass_fraction: float = DEFAULT_MASS_FRACTION, effective_mass: float | None = None) -> list[Mode]:
    """
    Drum mode frequencies f_mn = sqrt(stress/4rho) sqrt(m^2/X^2 + n^2/Y^2).

    :param geom: membrane geometry
    :type geom: MembraneGeometry

    :param max_m: highest index along X
    :type max_m: int

    :param max_n: highest index along Y
    :type max_n: int

    :param quality_factor: Q assigned to every mode. default = 4.6e5
    :type quality_factor: float

    :param mass_fraction: modal mass over physical mass. default = 0.25
    :type mass_fraction: float

    :param effective_mass: explicit modal mass, overrides mass_fraction
    :type effective_mass: float | None

    :return: modes sorted by frequency, then (m, n)
    :rtype: list[Mode]
    """
    if max_m < 1 or max_n < 1:
        raise ValidationError("mode indices must be at least 1", "membrane.max_m")
    if not quality_factor > 0:
        raise ValidationError("quality factor must be positive", "membrane.quality_factor")

    M_eff = effective_mass if effective_mass is not None else mass_fraction * physical_mass(geom)
    if not M_eff > 0:
        raise ValidationError("effective mass must be positive", "membrane.effective_mass_kg")

    modes = [
        Mode(m, n, geom.sound_speed * math.sqrt((m / geom.X)**2 + (n / geom.Y)**2), M_eff, quality_factor)
        for m in range(1, max_m + 1)
        for n in range(1, max_n + 1)
    ]
    return sorted(modes, key=lambda mode: (mode.frequency, mode.m, mode.n))

def rescale_sound_speed(modes: list[Mode], f11_measured: float) -> list[Mode]:
    """Scales the whole ladder so that the fundamental lands on the measured frequency."""
    fundamental = next((mode for mode in modes if (mode.m, mode.n) == (1, 1)), None)
    if fundamental is None:
        raise ValidationError("mode set has no (1, 1) mode", "membrane")
    if not f11_measured > 0:
        raise ValidationError("measured frequency must be positive", "membrane.f11_hz")

    ratio = f11_measured / fundamental.frequency
    return [replace(mode, frequency=mode.frequency * ratio) for mode in modes]

def summed_susceptibility(modes: list[Mode], omega_grid) -> np.ndarray:
    """Sum of the mode susceptibilities, m/N."""
    omegas = np.asarray(omega_grid, dtype=float)
    total = np.zeros(omegas.shape, dtype=complex)
    for mode in modes:
        total = total + mechanical_susceptibility(mode.mechanical(), omegas)
    return total

def multimode_force_transfer(modes: list[Mode], port: int, gamma: float, omega_grid) -> np.ndarray:
    """
    Force to homodyne output transfer of a port, single-mode optical response times
    the summed mechanical response. Optical prefactor 2 k_p A1 set to 1.

    :param modes: mechanical modes, all driven with equal overlap
    :type modes: list[Mode]

    :param port: 1 (position) or 2 (speed)
    :type port: int

    :param gamma: optical half-linewidth, rad/s
    :type gamma: float

    :param omega_grid: sideband angular frequencies, rad/s
    :type omega_grid: list[float] | np.ndarray

    :return: complex transfer per frequency
    :rtype: np.ndarray
    """
    if not modes:
        raise ValidationError("mode set is empty", "membrane")
    if port not in (1, 2):
        raise ValidationError("port must be 1 or 2", "port")

    omegas = np.asarray(omega_grid, dtype=float)
    optical = transfer_single_mode(gamma, 0.5, 1.0, omegas)
    signal = optical.b13 if port == 1 else optical.b23
    # strip the 2i k_p A1 prefactor
    signal = signal / 1j

    return signal * summed_susceptibility(modes, omegas)

def ringdown_q(times, amplitude_db, omega_m: float) -> float:
    """
    Quality factor from a decaying trace, Q = 10 w_m (t - t0) / ((X_dB(t0) - X_dB(t)) ln 10),
    with the dB slope taken from a least-squares line.

    :param times: sample times, s
    :type times: list[float] | np.ndarray

    :param amplitude_db: 10 log10 of the amplitude
    :type amplitude_db: list[float] | np.ndarray

    :param omega_m: mechanical angular frequency, rad/s
    :type omega_m: float

    :raises FitError: if the trace does not decay

    :return: the quality factor
    :rtype: float
    """
    times = np.asarray(times, dtype=float)
    amplitude_db = np.asarray(amplitude_db, dtype=float)
    if times.size < 2 or times.size != amplitude_db.size:
        raise ValidationError("need at least two (time, dB) samples", "ringdown")

    slope, _ = np.polyfit(times, amplitude_db, 1)
    if not slope < 0:
        tsprint(f"ERROR: Ringdown trace does not decay (slope {slope:.3g} dB/s).")
        raise FitError("ringdown trace is not decaying")

    quality = 10 * omega_m / (-slope * math.log(10))
    tsprint(f"Ringdown slope {slope:.4g} dB/s, Q = {quality:.4g}")
    return quality

def synthetic_ringdown(quality: float, omega_m: float, duration: float = 0.5, points: int = 1000,
                       noise: float = 0.01, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Exponential ringdown X(t) = exp(-w_m t / Q) with relative Gaussian amplitude noise,
    returned in dB (10 log10 X).
    """
    rng = np.random.default_rng(seed)
    times = np.linspace(0, duration, points)
    amplitude = np.exp(-omega_m * times / quality) * (1 + noise * rng.standard_normal(points))
    return times, 10 * np.log10(np.abs(amplitude))
