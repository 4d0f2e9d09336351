"""
Least-squares extraction of cavity and membrane parameters from sweep data.

Every fit goes through minimize(): a bounded Nelder-Mead simplex to get into the
basin, then a trust-region Gauss-Newton polish whose Jacobian gives the
linearized covariance.

Author:
Nikki Hess (nkhess@umich.edu)
"""

# built-in
from dataclasses import dataclass, field
from pathlib import Path
import json
import math

# pypi
import numpy as np
from scipy import optimize, signal

# my modules
from nikki_utils import tsprint
from . import cavity
from .errors import DegenerateFitError, FitError, ValidationError

MAX_EVALUATIONS = 10_000
STEP_TOLERANCE = 1e-10
COST_TOLERANCE = 1e-12
BOUND_TOLERANCE = 1e-6
MIN_POINTS = 8
MHZ = 1e6

KINDS = ("transmission", "tf_position", "tf_speed", "ringdown")
CSV_HEADERS = {
    "transmission": "frequency_hz,transmission",
    "tf_position": "frequency_hz,abs_tf_position",
    "tf_speed": "frequency_hz,abs_tf_speed",
    "ringdown": "time_s,amplitude_db",
}

# plain sweep header, read for any frequency-domain kind
GENERIC_SWEEP_HEADER = "frequency_hz,value"

@dataclass(frozen=True)
class SweepData:
    """x is frequency in Hz (time in s for ringdown), y the measured value."""
    x: np.ndarray
    y: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}", "kind")

        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

        if x.shape != y.shape or x.ndim != 1:
            raise ValidationError("x and y must be 1-D and the same length", self.kind)
        if x.size < MIN_POINTS:
            raise ValidationError(f"need at least {MIN_POINTS} points, got {x.size}", self.kind)
        if np.any(np.diff(x) <= 0):
            raise ValidationError("abscissa must be strictly increasing", self.kind)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("data contains non-finite values", self.kind)

@dataclass(frozen=True)
class ParamEstimate:
    value: float
    sigma: float

@dataclass
class FitResult:
    params: dict[str, ParamEstimate]
    residual_norm: float
    iterations: int
    converged: bool
    at_bound: list[str] = field(default_factory=list)
    message: str = ""
    covariance: np.ndarray | None = None

    def value(self, name: str) -> float:
        return self.params[name].value

    def sigma(self, name: str) -> float:
        return self.params[name].sigma

    def to_json_dict(self) -> dict:
        return {
            "params": {name: {"value": est.value, "sigma": est.sigma} for name, est in self.params.items()},
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
        }

class _NonFinite(Exception):
    pass

def _bounds_arrays(bounds, size: int) -> tuple[np.ndarray, np.ndarray]:
    if bounds is None:
        return np.full(size, -np.inf), np.full(size, np.inf)

    lower = np.array([-np.inf if low is None else low for low, _ in bounds], dtype=float)
    upper = np.array([np.inf if high is None else high for _, high in bounds], dtype=float)
    if lower.size != size:
        raise ValidationError("bounds must match the parameter count", "bounds")
    return lower, upper

def minimize(residual_fn, x0, bounds=None, names: list[str] | None = None,
             max_evaluations: int = MAX_EVALUATIONS) -> FitResult:
    """
    Minimizes the sum of squared residuals.

    :param residual_fn: maps a parameter vector to a residual vector
    :type residual_fn: Callable[[np.ndarray], np.ndarray]

    :param x0: starting point
    :type x0: list[float] | np.ndarray

    :param bounds: optional (low, high) pairs, None for unbounded sides
    :type bounds: list[tuple[float | None, float | None]] | None

    :param names: parameter names used in the result. default = p0, p1, ...
    :type names: list[str] | None

    :param max_evaluations: cap on residual evaluations. default = 10000
    :type max_evaluations: int

    :raises FitError: if the residual is not finite at x0

    :return: the estimate, non-converged if the cap was hit or the residual turned NaN
    :rtype: FitResult
    """
    x0 = np.asarray(x0, dtype=float)
    names = names or [f"p{i}" for i in range(x0.size)]
    lower, upper = _bounds_arrays(bounds, x0.size)

    start = np.asarray(residual_fn(x0), dtype=float)
    if not np.all(np.isfinite(start)):
        raise FitError("residual is not finite at the starting point")

    state = {"evaluations": 1, "x": x0.copy(), "cost": 0.5 * float(start @ start)}

    def residuals(x):
        state["evaluations"] += 1
        values = np.asarray(residual_fn(x), dtype=float)
        if not np.all(np.isfinite(values)):
            raise _NonFinite()

        cost = 0.5 * float(values @ values)
        if cost <= state["cost"]:
            state["x"], state["cost"] = np.array(x, dtype=float), cost
        return values

    def objective(x):
        values = residuals(x)
        return 0.5 * float(values @ values)

    def aborted(message: str) -> FitResult:
        tsprint(f"WARNING: {message}. Returning the last valid iterate.")
        return _result(residual_fn, state["x"], names, lower, upper, state["evaluations"], False, message)

    simplex_bounds = None if bounds is None else list(zip(lower, upper))
    try:
        simplex = optimize.minimize(
            objective, x0, method="Nelder-Mead", bounds=simplex_bounds,
            options={"maxfev": max_evaluations // 2, "xatol": STEP_TOLERANCE, "fatol": COST_TOLERANCE},
        )
    except _NonFinite:
        return aborted("Objective became non-finite during simplex descent")

    remaining = max_evaluations - state["evaluations"]
    if remaining <= 0:
        return aborted("Evaluation cap reached during simplex descent")

    polish_start = np.clip(simplex.x, lower, upper)
    try:
        polish = optimize.least_squares(
            residuals, polish_start, bounds=(lower, upper), method="trf", x_scale="jac",
            xtol=STEP_TOLERANCE, ftol=COST_TOLERANCE, gtol=COST_TOLERANCE, max_nfev=remaining,
        )
    except _NonFinite:
        return aborted("Residual became non-finite during Gauss-Newton polish")

    converged = bool(polish.status > 0)
    return _result(residual_fn, polish.x, names, lower, upper, state["evaluations"], converged,
                   polish.message, jacobian=polish.jac)

def _result(residual_fn, x, names, lower, upper, evaluations, converged, message, jacobian=None) -> FitResult:
    values = np.asarray(residual_fn(x), dtype=float)
    dof = max(values.size - x.size, 1)
    variance = float(values @ values) / dof

    covariance = None
    sigmas = np.zeros(x.size)
    if jacobian is not None:
        covariance = np.linalg.pinv(jacobian.T @ jacobian) * variance
        sigmas = np.sqrt(np.clip(np.diag(covariance), 0, None))

    span = BOUND_TOLERANCE * np.maximum(1.0, np.abs(x))
    at_bound = [name for name, value, low, high, width in zip(names, x, lower, upper, span)
                if value - low <= width or high - value <= width]

    return FitResult(
        params={name: ParamEstimate(float(value), float(sigma)) for name, value, sigma in zip(names, x, sigmas)},
        residual_norm=float(np.sqrt(values @ values)),
        iterations=evaluations,
        converged=converged,
        at_bound=at_bound,
        message=str(message),
        covariance=covariance,
    )

def input_coupler_share(front_power_transmission: float, back_mirror_power_transmission: float) -> float:
    """
    Share of the round-trip power loss that leaves through the input coupler,
    T^2 / (T^2 + T_back^2). Scales a measured linewidth to the input-coupler linewidth.
    """
    if not front_power_transmission > 0:
        raise ValidationError("must be positive", "cavity.front_power_transmission")
    if not 0 <= back_mirror_power_transmission < 1:
        raise ValidationError("must be in [0, 1)", "cavity.back_mirror_power_transmission")
    return front_power_transmission / (front_power_transmission + back_mirror_power_transmission)

def _add_coupler_linewidths(params: dict, names: tuple[str, ...], share: float | None):
    if share is None:
        return
    if not 0 < share <= 1:
        raise ValidationError("coupler share must be in (0, 1]", "coupler_share")
    for name in names:
        estimate = params[name]
        params[f"{name}_coupler"] = ParamEstimate(estimate.value * share, estimate.sigma * share)

def _relative_norm(result: FitResult, data_norm: float) -> FitResult:
    result.residual_norm = result.residual_norm / data_norm if data_norm > 0 else result.residual_norm
    return result

def double_lorentzian(f, f1, f2, gamma1, gamma2, a1, a2, offset):
    """a1 g1^2/((f-f1)^2+g1^2) + a2 g2^2/((f-f2)^2+g2^2) + offset, gamma = half width"""
    return (a1 * gamma1**2 / ((f - f1)**2 + gamma1**2)
            + a2 * gamma2**2 / ((f - f2)**2 + gamma2**2)
            + offset)

def lorentzian_initial_guess(frequency: np.ndarray, values: np.ndarray) -> list[float]:
    """
    Peak-picks the two most prominent maxima and reads their half widths at half maximum.

    :raises DegenerateFitError: if fewer than two peaks stand out
    """
    offset = float(np.median(values))
    span = float(values.max() - values.min())
    peaks, properties = signal.find_peaks(values, height=3 * abs(offset), prominence=0.1 * span)

    if peaks.size < 2:
        tsprint(f"ERROR: Found {peaks.size} peak(s) in transmission data, two are needed.")
        raise DegenerateFitError(
            f"found {peaks.size} peak(s); use a single-Lorentzian model for this data"
        )

    strongest = np.sort(peaks[np.argsort(properties["prominences"])[-2:]])
    widths = signal.peak_widths(values, strongest, rel_height=0.5)[0]
    step = float(np.mean(np.diff(frequency)))
    half_widths = np.maximum(widths * step / 2, step)

    return [
        float(frequency[strongest[0]]), float(frequency[strongest[1]]),
        float(half_widths[0]), float(half_widths[1]),
        float(values[strongest[0]] - offset), float(values[strongest[1]] - offset),
        offset,
    ]

def fit_double_lorentzian(data: SweepData, cavity_length: float | None = None,
                          coupler_share: float | None = None) -> FitResult:
    """
    Fits two Lorentzians plus an offset to a transmission sweep of the split resonance.

    Reports both centers, both half widths, the splitting, the amplitude ratio and,
    if the cavity length is given, the test mass reflectivity implied by the splitting
    as amplitude and as power.

    :param data: transmission sweep, frequency in Hz
    :type data: SweepData

    :param cavity_length: round-trip length, m
    :type cavity_length: float | None

    :param coupler_share: if given, the linewidths are also reported scaled to the
        input coupler as gamma1_coupler and gamma2_coupler
    :type coupler_share: float | None

    :raises DegenerateFitError: if the data shows a single peak
    :raises FitError: if the fit does not converge

    :return: the fit
    :rtype: FitResult
    """
    if data.kind != "transmission":
        raise ValidationError("expected transmission data", "kind")

    tsprint(f"Fitting double Lorentzian to {data.x.size} points.")
    frequency = data.x / MHZ
    guess = lorentzian_initial_guess(frequency, data.y)
    tsprint(f"Initial peaks at {guess[0]:.3f} and {guess[1]:.3f} MHz.")

    def residuals(p):
        return double_lorentzian(frequency, *p) - data.y

    names = ["f1", "f2", "gamma1", "gamma2", "a1", "a2", "offset"]
    bounds = [(None, None), (None, None), (0, None), (0, None), (None, None), (None, None), (None, None)]
    result = minimize(residuals, guess, bounds, names)
    if not result.converged:
        tsprint(f"ERROR: Double Lorentzian fit did not converge: {result.message}")
        raise FitError("double Lorentzian fit did not converge", result)

    covariance = result.covariance
    scaled = {}
    for index, name in enumerate(names):
        estimate = result.params[name]
        unit = MHZ if name in ("f1", "f2", "gamma1", "gamma2") else 1.0
        scaled[name] = ParamEstimate(estimate.value * unit, estimate.sigma * unit)

    delta = scaled["f2"].value - scaled["f1"].value
    delta_var = covariance[0, 0] + covariance[1, 1] - 2 * covariance[0, 1]
    scaled["delta"] = ParamEstimate(delta, math.sqrt(max(delta_var, 0)) * MHZ)

    a1, a2 = result.value("a1"), result.value("a2")
    gradient = np.array([-a2 / a1**2, 1 / a1])
    ratio_var = gradient @ covariance[4:6, 4:6] @ gradient
    scaled["amplitude_ratio"] = ParamEstimate(a2 / a1, math.sqrt(max(ratio_var, 0)))

    if cavity_length is not None:
        r = cavity.reflectivity_from_splitting(2 * math.pi * delta, cavity_length)
        scale = math.pi * cavity_length / cavity.SPEED_OF_LIGHT
        r_sigma = math.cos(math.pi * delta * cavity_length / cavity.SPEED_OF_LIGHT) * scale * scaled["delta"].sigma
        scaled["reflectivity_amplitude"] = ParamEstimate(r, r_sigma)
        scaled["reflectivity_power"] = ParamEstimate(r**2, 2 * r * r_sigma)

    _add_coupler_linewidths(scaled, ("gamma1", "gamma2"), coupler_share)

    result.params = scaled
    tsprint(f"Fitted linewidths {scaled['gamma1'].value / MHZ:.4f} and {scaled['gamma2'].value / MHZ:.4f} MHz, "
            f"splitting {delta / MHZ:.3f} MHz.")
    return _relative_norm(result, float(np.linalg.norm(data.y)))

def tf_position_model(f, gamma, gain):
    """|b13| / (2 k_p A1) with a free gain."""
    return gain * np.sqrt(gamma**2 + f**2 / 4) / np.sqrt(gamma**2 + f**2)

def tf_speed_model(f, gamma, gain):
    """|b23| / (2 k_p A1) with a free gain."""
    return gain * (f / 2) / np.sqrt(gamma**2 + f**2)

def _gain_guess(values: np.ndarray, model_shape: np.ndarray) -> float:
    return float(np.dot(values, model_shape) / np.dot(model_shape, model_shape))

def fit_optical_tf(data_pos: SweepData | None, data_speed: SweepData,
                   coupler_share: float | None = None) -> FitResult:
    """
    Joint fit of the position- and speed-port transfer function magnitudes with a
    shared optical linewidth and one gain per channel. Pass data_pos=None for a
    speed-only fit. With coupler_share the linewidth is also reported as gamma_coupler.

    :raises ValidationError: if the frequency ranges do not overlap

    :return: gamma (Hz) and the gains
    :rtype: FitResult
    """
    if data_speed.kind != "tf_speed":
        raise ValidationError("expected tf_speed data", "kind")
    if data_pos is not None:
        if data_pos.kind != "tf_position":
            raise ValidationError("expected tf_position data", "kind")
        if data_pos.x[-1] < data_speed.x[0] or data_speed.x[-1] < data_pos.x[0]:
            tsprint("ERROR: Position and speed transfer functions do not overlap in frequency.")
            raise ValidationError("position and speed frequency ranges do not overlap", "tf")

    speed_f = data_speed.x / MHZ
    # the speed response reaches half its high-frequency value at f = gamma / sqrt(3)
    plateau = float(np.max(data_speed.y))
    crossing = speed_f[np.argmin(np.abs(data_speed.y - plateau / 2))]
    gamma_guess = max(float(crossing) * math.sqrt(3), float(speed_f[0]))

    speed_gain = _gain_guess(data_speed.y, tf_speed_model(speed_f, gamma_guess, 1.0))
    guess = [gamma_guess, speed_gain]
    names = ["gamma", "gain_speed"]

    if data_pos is not None:
        pos_f = data_pos.x / MHZ
        guess.append(_gain_guess(data_pos.y, tf_position_model(pos_f, gamma_guess, 1.0)))
        names.append("gain_position")

    def residuals(p):
        parts = [tf_speed_model(speed_f, p[0], p[1]) - data_speed.y]
        if data_pos is not None:
            parts.append(tf_position_model(pos_f, p[0], p[2]) - data_pos.y)
        return np.concatenate(parts)

    tsprint(f"Fitting optical transfer function ({'joint' if data_pos is not None else 'speed only'}), "
            f"initial linewidth {gamma_guess:.3f} MHz.")
    bounds = [(0, None)] + [(None, None)] * (len(guess) - 1)
    result = minimize(residuals, guess, bounds, names)
    if not result.converged:
        tsprint(f"ERROR: Transfer function fit did not converge: {result.message}")
        raise FitError("transfer function fit did not converge", result)

    gamma = result.params["gamma"]
    result.params["gamma"] = ParamEstimate(gamma.value * MHZ, gamma.sigma * MHZ)
    _add_coupler_linewidths(result.params, ("gamma",), coupler_share)
    tsprint(f"Fitted optical linewidth {gamma.value:.4f} +/- {gamma.sigma:.4f} MHz.")

    data_norm = np.linalg.norm(data_speed.y)
    if data_pos is not None:
        data_norm = math.hypot(data_norm, np.linalg.norm(data_pos.y))
    return _relative_norm(result, float(data_norm))

def fit_ringdown(data: SweepData, omega_m: float) -> FitResult:
    """
    Straight-line fit of a dB ringdown trace, reported as Q.

    :param data: ringdown trace, time in s and 10 log10 amplitude
    :type data: SweepData

    :param omega_m: mechanical angular frequency, rad/s
    :type omega_m: float

    :raises FitError: if the trace does not decay
    """
    if data.kind != "ringdown":
        raise ValidationError("expected ringdown data", "kind")

    slope, intercept = np.polyfit(data.x, data.y, 1)
    if not slope < 0:
        tsprint(f"ERROR: Ringdown trace does not decay (slope {slope:.3g} dB/s).")
        raise FitError("ringdown trace is not decaying")

    def residuals(p):
        return p[0] + p[1] * data.x - data.y

    result = minimize(residuals, [intercept, slope], names=["intercept_db", "slope_db_per_s"])
    fitted_slope = result.params["slope_db_per_s"]
    if not fitted_slope.value < 0:
        raise FitError("ringdown trace is not decaying", result)

    quality = 10 * omega_m / (-fitted_slope.value * math.log(10))
    result.params["Q"] = ParamEstimate(quality, quality * fitted_slope.sigma / abs(fitted_slope.value))
    tsprint(f"Fitted ringdown Q = {quality:.4g}")
    return _relative_norm(result, float(np.linalg.norm(data.y)))

def synthetic_transmission(gamma1: float = 0.84e6, gamma2: float = 0.95e6, delta: float = 49.28e6,
                           f1: float = 10e6, amplitude_ratio: float = 0.7, noise: float = 0.01,
                           seed: int = 0, points: int = 4001, f_max: float = 70e6) -> SweepData:
    """Double-Lorentzian transmission sweep with Gaussian noise relative to the first peak."""
    rng = np.random.default_rng(seed)
    frequency = np.linspace(0, f_max, points)
    clean = double_lorentzian(frequency, f1, f1 + delta, gamma1, gamma2, 1.0, amplitude_ratio, 0.0)
    return SweepData(frequency, clean + noise * rng.standard_normal(points), "transmission")

def synthetic_tf(gamma: float = 0.84e6, gain_position: float = 1.0, gain_speed: float = 2.0,
                 noise: float = 0.03, seed: int = 0, points: int = 200,
                 f_min: float = 5e4, f_max: float = 5e6) -> tuple[SweepData, SweepData]:
    """Position and speed transfer function magnitudes on a log grid with absolute noise."""
    rng = np.random.default_rng(seed)
    frequency = np.geomspace(f_min, f_max, points)
    position = tf_position_model(frequency, gamma, gain_position) + noise * rng.standard_normal(points)
    speed = tf_speed_model(frequency, gamma, gain_speed) + noise * rng.standard_normal(points)
    return SweepData(frequency, position, "tf_position"), SweepData(frequency, speed, "tf_speed")

def read_sweep_csv(path: str, kind: str) -> SweepData:
    """
    Reads a two-column CSV, skipping leading '#' comment lines. The first non-comment
    line must be the header for the kind, or "frequency_hz,value" for the
    frequency-domain kinds.
    """
    csv_file = Path(path)
    if kind not in CSV_HEADERS:
        raise ValidationError(f"kind must be one of {KINDS}", "kind")
    if not csv_file.exists():
        raise ValidationError(f'"{csv_file}" does not exist', "in")

    lines = [line for line in csv_file.read_text().splitlines() if line.strip() and not line.startswith("#")]
    accepted = {CSV_HEADERS[kind]} if kind == "ringdown" else {CSV_HEADERS[kind], GENERIC_SWEEP_HEADER}
    if not lines or lines[0].strip() not in accepted:
        raise ValidationError(f'expected header "{CSV_HEADERS[kind]}"', csv_file.name)

    try:
        table = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    except ValueError as e:
        raise ValidationError(f"could not parse rows: {e}", csv_file.name)
    if table.shape[1] != 2:
        raise ValidationError("expected two columns", csv_file.name)

    tsprint(f'Read {table.shape[0]} rows from "{csv_file.name}".')
    return SweepData(table[:, 0], table[:, 1], kind)

def result_json(result: FitResult) -> str:
    return json.dumps(result.to_json_dict(), indent=2, sort_keys=True)
