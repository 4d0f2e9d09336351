# built-in
import json
import math

# pypi
import numpy as np
import pytest
from pytest_mock import MockerFixture
from scipy.constants import c

# my modules
from src import fit, membrane
from src.errors import DegenerateFitError, FitError, ValidationError
from src.fit import SweepData

def test_minimize_linear():
	# setup
	target = np.array([1.0, -2.0, 3.5])

	result = fit.minimize(lambda p: p - target, [0.0, 0.0, 0.0], names=["a", "b", "c"])

	assert result.converged
	for name, value in zip("abc", target):
		assert result.value(name) == pytest.approx(value, abs=1e-8)
	assert result.residual_norm == pytest.approx(0, abs=1e-8)

def test_minimize_curve_with_sigmas():
	# setup
	rng = np.random.default_rng(3)
	x = np.linspace(0, 1, 200)
	y = 2.0 * np.exp(-3.0 * x) + 0.01 * rng.standard_normal(x.size)

	result = fit.minimize(lambda p: p[0] * np.exp(-p[1] * x) - y, [1.0, 1.0], names=["amplitude", "rate"])

	assert result.converged
	assert result.value("amplitude") == pytest.approx(2.0, rel=0.02)
	assert result.value("rate") == pytest.approx(3.0, rel=0.02)
	assert 0 < result.sigma("rate") < 0.1
	assert result.covariance.shape == (2, 2)

def test_minimize_bounds():
	result = fit.minimize(lambda p: p - 10.0, [1.0], bounds=[(0.0, 3.0)])

	assert result.value("p0") == pytest.approx(3.0, abs=1e-6)
	assert result.at_bound == ["p0"]

def test_minimize_nan_at_start():
	with pytest.raises(FitError):
		fit.minimize(lambda p: np.array([math.nan]), [0.0])

def test_minimize_nan_during_descent(capsys):
	# setup
	def residuals(p):
		if p[0] > 5:
			return np.array([math.nan])
		return np.array([p[0] - 10.0])

	result = fit.minimize(residuals, [0.0])

	assert not result.converged
	assert result.value("p0") <= 5
	assert math.isfinite(result.residual_norm)
	assert "WARNING" in capsys.readouterr().out

def test_minimize_rosenbrock():
	# setup
	def rosenbrock(p):
		return np.array([10 * (p[1] - p[0]**2), 1 - p[0]])

	result = fit.minimize(rosenbrock, [-1.2, 1.0], names=["x", "y"], max_evaluations=5000)

	assert result.converged
	assert result.iterations <= 5000
	assert result.value("x") == pytest.approx(1, abs=1e-6)
	assert result.value("y") == pytest.approx(1, abs=1e-6)

def test_minimize_evaluation_cap():
	# setup
	def rosenbrock(p):
		return np.array([10 * (p[1] - p[0]**2), 1 - p[0]])

	result = fit.minimize(rosenbrock, [-1.2, 1.0], max_evaluations=5)

	assert not result.converged
	assert result.iterations >= 5

def test_sweep_data_validation():
	with pytest.raises(ValidationError):
		SweepData(np.arange(5.0), np.zeros(5), "transmission")

	with pytest.raises(ValidationError):
		SweepData(np.array([0, 1, 2, 2, 3, 4, 5, 6.0]), np.zeros(8), "transmission")

	with pytest.raises(ValidationError):
		SweepData(np.arange(10.0), np.zeros(10), "absorption")

def test_double_lorentzian_recovery():
	# setup
	truth = {"gamma1": 0.84e6, "gamma2": 0.95e6, "delta": 49.28e6, "f1": 10e6, "amplitude_ratio": 0.7}
	passed = 0

	for seed in range(20):
		data = fit.synthetic_transmission(seed=seed)
		result = fit.fit_double_lorentzian(data)
		passed += all(abs(result.value(name) - value) / value < 0.02 for name, value in truth.items())

	assert passed >= 19

def test_double_lorentzian_noiseless():
	# setup
	data = fit.synthetic_transmission(noise=0.0)

	result = fit.fit_double_lorentzian(data)

	assert result.residual_norm < 1e-8
	assert result.value("gamma1") == pytest.approx(0.84e6, rel=1e-6)
	assert result.value("delta") == pytest.approx(49.28e6, rel=1e-6)

def test_double_lorentzian_reflectivity():
	# setup
	length = 0.391
	data = fit.synthetic_transmission(seed=1)

	result = fit.fit_double_lorentzian(data, cavity_length=length)
	expected = math.sin(math.pi * 49.28e6 * length / c)

	assert result.value("reflectivity_amplitude") == pytest.approx(expected, rel=0.01)
	assert result.value("reflectivity_power") == pytest.approx(expected**2, rel=0.02)
	assert result.converged

def test_double_lorentzian_single_peak(capsys):
	# setup
	data = fit.synthetic_transmission(amplitude_ratio=0.0, seed=2)

	with pytest.raises(DegenerateFitError):
		fit.fit_double_lorentzian(data)

	assert "ERROR" in capsys.readouterr().out

def test_double_lorentzian_wrong_kind():
	# setup
	position, _ = fit.synthetic_tf()

	with pytest.raises(ValidationError):
		fit.fit_double_lorentzian(position)

def test_optical_tf_joint_recovery():
	passed = 0
	for seed in range(20):
		position, speed = fit.synthetic_tf(seed=seed)
		result = fit.fit_optical_tf(position, speed)
		passed += abs(result.value("gamma") - 0.84e6) / 0.84e6 < 0.05

	assert passed >= 19

def test_optical_tf_noiseless():
	# setup
	position, speed = fit.synthetic_tf(noise=0.0)

	result = fit.fit_optical_tf(position, speed)

	assert result.residual_norm < 1e-8
	assert result.value("gamma") == pytest.approx(0.84e6, rel=1e-6)
	assert result.value("gain_position") == pytest.approx(1.0, rel=1e-6)
	assert result.value("gain_speed") == pytest.approx(2.0, rel=1e-6)

def test_fits_are_deterministic():
	# setup
	transmission = fit.synthetic_transmission(seed=1)
	position, speed = fit.synthetic_tf(seed=5)

	first = [fit.fit_double_lorentzian(transmission), fit.fit_optical_tf(position, speed)]
	second = [fit.fit_double_lorentzian(transmission), fit.fit_optical_tf(position, speed)]

	for a, b in zip(first, second):
		assert fit.result_json(a) == fit.result_json(b)
		assert np.array_equal(a.covariance, b.covariance)

def test_input_coupler_share():
	assert fit.input_coupler_share(0.01, 0.0007) == pytest.approx(0.01 / 0.0107)
	assert fit.input_coupler_share(0.01, 0.0) == 1

	with pytest.raises(ValidationError):
		fit.input_coupler_share(0.0, 0.0007)
	with pytest.raises(ValidationError):
		fit.input_coupler_share(0.01, -0.1)

def test_coupler_linewidths_scaled():
	# setup
	share = fit.input_coupler_share(0.01, 0.0007)
	position, speed = fit.synthetic_tf(seed=4)
	transmission = fit.synthetic_transmission(seed=1)

	tf_result = fit.fit_optical_tf(position, speed, coupler_share=share)
	lorentzian = fit.fit_double_lorentzian(transmission, coupler_share=share)

	assert tf_result.value("gamma_coupler") == pytest.approx(share * tf_result.value("gamma"), rel=1e-12)
	assert tf_result.sigma("gamma_coupler") == pytest.approx(share * tf_result.sigma("gamma"), rel=1e-12)
	for name in ("gamma1", "gamma2"):
		assert lorentzian.value(f"{name}_coupler") == pytest.approx(share * lorentzian.value(name), rel=1e-12)
	assert "gamma_coupler" not in fit.fit_optical_tf(position, speed).params

def test_optical_tf_joint_tightens_linewidth():
	# setup
	position, speed = fit.synthetic_tf(seed=4)

	joint = fit.fit_optical_tf(position, speed)
	speed_only = fit.fit_optical_tf(None, speed)

	assert "gain_position" not in speed_only.params
	assert joint.sigma("gamma") < speed_only.sigma("gamma")

def test_optical_tf_scale_invariant():
	# setup
	position, speed = fit.synthetic_tf(seed=5)
	scaled_position = SweepData(position.x, 4.0 * position.y, "tf_position")
	scaled_speed = SweepData(speed.x, 4.0 * speed.y, "tf_speed")

	base = fit.fit_optical_tf(position, speed)
	scaled = fit.fit_optical_tf(scaled_position, scaled_speed)

	assert scaled.value("gamma") == pytest.approx(base.value("gamma"), rel=1e-5)
	assert scaled.value("gain_speed") == pytest.approx(4.0 * base.value("gain_speed"), rel=1e-5)

def test_optical_tf_non_overlapping():
	# setup
	position, _ = fit.synthetic_tf(f_min=5e4, f_max=1e5)
	_, speed = fit.synthetic_tf(f_min=1e6, f_max=5e6)

	with pytest.raises(ValidationError):
		fit.fit_optical_tf(position, speed)

def test_fit_ringdown():
	# setup
	omega_m = 2 * math.pi * 395.2e3
	times, amplitude_db = membrane.synthetic_ringdown(4.6e5, omega_m, seed=8)

	result = fit.fit_ringdown(SweepData(times, amplitude_db, "ringdown"), omega_m)

	assert result.value("Q") == pytest.approx(4.6e5, rel=0.02)
	assert result.value("Q") == pytest.approx(membrane.ringdown_q(times, amplitude_db, omega_m), rel=1e-6)
	assert result.sigma("Q") > 0

def test_fit_ringdown_rising():
	# setup
	times = np.linspace(0, 1, 20)

	with pytest.raises(FitError):
		fit.fit_ringdown(SweepData(times, times, "ringdown"), 1.0)

def test_read_sweep_csv(tmp_path):
	# setup
	data = fit.synthetic_transmission(points=101, seed=0)
	lines = ["# hrc-speedmeter test", "frequency_hz,transmission"]
	lines += [f"{float(x)!r},{float(y)!r}" for x, y in zip(data.x, data.y)]
	path = tmp_path / "sweep.csv"
	path.write_text("\n".join(lines) + "\n")

	loaded = fit.read_sweep_csv(str(path), "transmission")

	assert np.array_equal(loaded.x, data.x)
	assert np.array_equal(loaded.y, data.y)

def test_read_sweep_csv_generic_header(tmp_path):
	# setup
	position, speed = fit.synthetic_tf(seed=6)
	for name, data in (("position.csv", position), ("speed.csv", speed)):
		lines = ["frequency_hz,value"] + [f"{float(x)!r},{float(y)!r}" for x, y in zip(data.x, data.y)]
		(tmp_path / name).write_text("\n".join(lines) + "\n")

	loaded_position = fit.read_sweep_csv(str(tmp_path / "position.csv"), "tf_position")
	loaded_speed = fit.read_sweep_csv(str(tmp_path / "speed.csv"), "tf_speed")

	assert loaded_position.kind == "tf_position"
	assert np.array_equal(loaded_speed.y, speed.y)
	with pytest.raises(ValidationError):
		fit.read_sweep_csv(str(tmp_path / "speed.csv"), "ringdown")

def test_read_sweep_csv_bad_header(tmp_path):
	# setup
	path = tmp_path / "sweep.csv"
	path.write_text("time_s,amplitude_db\n" + "\n".join(f"{i},{i}" for i in range(10)) + "\n")

	with pytest.raises(ValidationError):
		fit.read_sweep_csv(str(path), "transmission")

def test_read_sweep_csv_missing(tmp_path):
	with pytest.raises(ValidationError):
		fit.read_sweep_csv(str(tmp_path / "nothing.csv"), "ringdown")

def test_result_json(mocker: MockerFixture):
	# setup
	mocker.patch("src.fit.tsprint")
	result = fit.minimize(lambda p: p - np.array([1.0, 2.0]), [0.0, 0.0], names=["a", "b"])

	payload = json.loads(fit.result_json(result))

	assert set(payload) == {"params", "residual_norm", "iterations", "converged"}
	assert payload["params"]["a"]["value"] == pytest.approx(1.0)
	assert set(payload["params"]["b"]) == {"value", "sigma"}
	assert payload["converged"] is True
