"""
Free-space speed meter and position meter (no cavity), the analytic reference for
the ring cavity budgets.

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
from .errors import ValidationError

KINDS = ("speed", "position")

# below this |sin(zeta)| the homodyne angle reads no signal
SIN_EPSILON = 1e-12

@dataclass(frozen=True)
class MeterParams:
    """
    Optical power P = hbar k_p c A^2. tau is the delay between the two bounces and is
    only needed for the speed meter.
    """
    k_p: float
    P: float
    M: float
    zeta: float = math.pi / 2
    tau: float | None = None

    def __post_init__(self):
        if not (self.k_p > 0 and self.P > 0 and self.M > 0):
            raise ValidationError("k_p, P and M must be positive", "meter")
        if not 0 < self.zeta <= math.pi:
            raise ValidationError("homodyne angle must be in (0, pi]", "meter.zeta")
        if self.tau is not None and not self.tau > 0:
            raise ValidationError("delay must be positive", "meter.tau")

    @property
    def A(self) -> float:
        return math.sqrt(self.P / (HBAR * self.k_p * SPEED_OF_LIGHT))

    def with_zeta(self, zeta: float) -> "MeterParams":
        return MeterParams(k_p=self.k_p, P=self.P, M=self.M, zeta=zeta, tau=self.tau)

def _check_kind(params: MeterParams, kind: str):
    if kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}", "kind")
    if kind == "speed" and params.tau is None:
        raise ValidationError("speed meter needs a delay", "meter.tau")

def exact_phase_signal_factor(omega, tau: float):
    """|1 - e^{i W tau}|, the exact counterpart of W tau."""
    return np.abs(1 - np.exp(1j * np.asarray(omega) * tau))

def _signal_factor(params: MeterParams, kind: str, omega, exact_phase: bool):
    if kind == "position":
        return np.ones_like(np.asarray(omega, dtype=float))
    if exact_phase:
        return exact_phase_signal_factor(omega, params.tau)
    return np.asarray(omega, dtype=float) * params.tau

def meter_spectra(params: MeterParams, kind: str, omega, exact_phase: bool = False):
    """
    Shot noise, back-action force and their cross spectral density.

    :param params: meter parameters
    :type params: MeterParams

    :param kind: "speed" or "position"
    :type kind: str

    :param omega: sideband angular frequency (scalar or array), rad/s
    :type omega: float | np.ndarray

    :param exact_phase: use |1 - e^{iW tau}| instead of W tau. default = False
    :type exact_phase: bool

    :return: (S_xx, S_FF, S_xF); S_xx is inf at sin(zeta) = 0
    :rtype: tuple
    """
    _check_kind(params, kind)
    factor = _signal_factor(params, kind, omega, exact_phase)
    gain = 4 * params.k_p**2 * params.A**2

    sin_z = math.sin(params.zeta)
    if abs(sin_z) < SIN_EPSILON:
        s_xx = np.full_like(factor, math.inf)
        s_xf = np.full_like(factor, math.copysign(math.inf, -math.cos(params.zeta)))
    else:
        with np.errstate(divide="ignore"):
            s_xx = 1 / (gain * factor**2 * sin_z**2)
        s_xf = np.full_like(factor, -HBAR * math.cos(params.zeta) / sin_z)

    s_ff = HBAR**2 * gain * factor**2

    if np.ndim(omega) == 0:
        return float(s_xx), float(s_ff), float(s_xf)
    return s_xx, s_ff, s_xf

def meter_sensitivity(params: MeterParams, kind: str, omega, exact_phase: bool = False):
    """
    Total displacement noise S_xx - 2 Re S_xF / (M W^2) + S_FF / (M^2 W^4), m^2/Hz.
    """
    s_xx, s_ff, s_xf = meter_spectra(params, kind, omega, exact_phase)
    omega = np.asarray(omega, dtype=float)
    mass_response = params.M * omega**2

    with np.errstate(invalid="ignore"):
        total = s_xx - 2 * s_xf / mass_response + s_ff / mass_response**2
    # no signal at sin(zeta) = 0, the infinite terms must not cancel to nan
    total = np.where(np.isinf(s_xx), math.inf, total)
    return float(total) if total.ndim == 0 else total

def optimal_homodyne_angle(params: MeterParams, kind: str, omega: float | None = None) -> float:
    """
    Homodyne angle that cancels the back-action through shot noise correlation.
    Frequency independent for the speed meter; the position meter needs omega.
    """
    _check_kind(params, kind)
    scale = 4 * params.k_p * params.P / (params.M * SPEED_OF_LIGHT)

    if kind == "speed":
        cotangent = -scale * params.tau**2
    else:
        if omega is None or not omega > 0:
            raise ValidationError("position meter optimum needs a positive frequency", "omega")
        cotangent = -scale / omega**2

    return math.atan2(1.0, cotangent)

def optimal_sensitivity(params: MeterParams, kind: str, omega):
    """Sub-SQL sensitivity at the optimal homodyne angle, m^2/Hz."""
    _check_kind(params, kind)
    omega = np.asarray(omega, dtype=float)
    base = HBAR * SPEED_OF_LIGHT / (4 * params.k_p * params.P)
    value = base / (params.tau**2 * omega**2) if kind == "speed" else base * np.ones_like(omega)
    return float(value) if value.ndim == 0 else value

def coupling_factor(params: MeterParams, kind: str, omega, exact_phase: bool = False):
    """
    Dimensionless optomechanical coupling K with S = (S_SQL / 2)(1/K + K) at zeta = pi/2.
    """
    _check_kind(params, kind)
    omega = np.asarray(omega, dtype=float)
    factor = _signal_factor(params, kind, omega, exact_phase)

    value = 4 * params.k_p * params.P * factor**2 / (params.M * omega**2 * SPEED_OF_LIGHT)
    return float(value) if value.ndim == 0 else value
