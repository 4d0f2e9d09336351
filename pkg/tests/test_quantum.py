# built-in
import math

# pypi
import numpy as np
import pytest

# my modules
from src import matrix, quantum
from src.cavity import CavityConfig, LaserConfig
from src.quantum import QuadratureState

LASER = LaserConfig(1.55e-6, 1e-5)
TABLETOP = CavityConfig.from_powers(0.1955, 0.1955, 0.01, 0.046)

def test_closed_form_matches_matrix_chain():
	# setup
	omegas = 2 * math.pi * np.array([1e4, 1e5, 1e6, 1e7, 1e8])

	full = quantum.transfer_full(TABLETOP, LASER, omegas)
	for index, omega in enumerate(omegas):
		chain = quantum.transfer_matrix_chain(TABLETOP, LASER, float(omega))
		for name in ("b11", "b12", "b21", "b22"):
			assert getattr(full, name)[index] == pytest.approx(getattr(chain, name), rel=1e-9, abs=1e-12)

		for name in ("b13", "b23"):
			scale = abs(full.b13[index])
			assert abs(getattr(full, name)[index] - getattr(chain, name)) < 1e-6 * scale

def test_field_block_unitary():
	# setup
	rng = np.random.default_rng(2024)

	for _ in range(1000):
		arm = rng.uniform(0.05, 1.0)
		cfg = CavityConfig.from_powers(arm, arm, rng.uniform(0.001, 0.5), rng.uniform(0.01, 0.99))

		omega = rng.uniform(0, 2 * math.pi * cfg.fsr)
		block = quantum.transfer_full(cfg, LASER, omega).field_block()
		assert matrix.is_unitary(block)

def test_chain_field_block_unitary_asymmetric():
	# setup
	cfg = CavityConfig.from_powers(0.11, 0.29, 0.02, 0.3)

	for omega in 2 * math.pi * np.array([1e3, 5e5, 2e7]):
		chain = quantum.transfer_matrix_chain(cfg, LASER, omega)
		block = np.array([[chain.b11, chain.b12], [chain.b21, chain.b22]])
		assert matrix.is_unitary(block)

def test_single_mode_matches_full():
	# setup
	cfg = CavityConfig.from_powers(0.1955, 0.1955, 0.01, 0.95**2)
	tau = cfg.tau
	omegas = np.linspace(0.01 / tau / 1000, 0.01 / tau, 1000)
	prefactor = 2j * LASER.k_p * LASER.amplitude

	full = quantum.transfer_full(cfg, LASER, omegas)
	single = quantum.transfer_single_mode(cfg.gamma, LASER.k_p, LASER.amplitude, omegas)

	# the b12 convention differs by a sign between the two models
	assert np.max(np.abs(full.b11 - single.b11)) < 0.01
	assert np.max(np.abs(full.b22 - single.b22)) < 0.01
	assert np.max(np.abs(full.b12 + single.b12)) < 0.01
	assert np.max(np.abs(full.b21 + single.b21)) < 0.01

	for name in ("b13", "b23"):
		full_signal = getattr(full, name) / prefactor
		single_signal = getattr(single, name) / prefactor
		assert np.max(np.abs(full_signal - single_signal) / np.abs(single_signal)) < 0.01

def test_single_mode_tabletop_loose():
	# setup
	omegas = np.linspace(2 * math.pi * 1e4, 0.01 / TABLETOP.tau, 200)
	prefactor = 2j * LASER.k_p * LASER.amplitude

	full = quantum.transfer_full(TABLETOP, LASER, omegas)
	single = quantum.transfer_single_mode(TABLETOP.gamma, LASER.k_p, LASER.amplitude, omegas)

	assert np.max(np.abs(np.abs(full.b13) - np.abs(single.b13)) / np.abs(prefactor)) < 0.1

def test_single_mode_limits():
	# setup
	gamma = 2 * math.pi * 0.84e6

	transfer = quantum.transfer_single_mode(gamma, 1.0, 1.0, np.array([0.0, 1e3 * gamma]))

	# static: all signal in the position port
	assert transfer.b11[0] == pytest.approx(1)
	assert transfer.b23[0] == 0
	assert transfer.b13[0] == pytest.approx(2j)

	# far above the linewidth both ports carry half
	assert abs(transfer.b13[1]) == pytest.approx(1, rel=1e-3)
	assert abs(transfer.b23[1]) == pytest.approx(1, rel=1e-3)

def test_speed_port_low_frequency_slope():
	# setup
	gamma = TABLETOP.gamma
	omegas = np.geomspace(gamma / 1e4, gamma / 100, 50)

	transfer = quantum.transfer_full(TABLETOP, LASER, omegas)
	slopes = np.diff(np.log(np.abs(transfer.b23))) / np.diff(np.log(omegas))

	assert np.all(np.abs(slopes - 1) < 1e-3)

def test_two_photon_power_conservation():
	# setup
	gamma = 2 * math.pi * 0.84e6

	for omega in (0.0, gamma / 10, gamma, 10 * gamma):
		tpt = quantum.two_photon_transfer(gamma, LASER.k_p, omega)
		total = tpt.R1 @ tpt.R1.conj().T + tpt.R2 @ tpt.R2.conj().T
		assert np.allclose(total, np.eye(2))

def test_two_photon_port_ratio_matches_transfer():
	# setup
	gamma = 2 * math.pi * 0.84e6

	for omega in 2 * math.pi * np.array([1e5, 4e5, 2e6]):
		tpt = quantum.two_photon_transfer(gamma, LASER.k_p, omega)
		transfer = quantum.transfer_single_mode(gamma, LASER.k_p, 1.0, omega)

		c1 = quantum.signal_coefficient(tpt, 1, omega)
		c2 = quantum.signal_coefficient(tpt, 2, omega)

		# the speed-port matrix carries half the weight of b23
		assert 2 * abs(c1 / c2) == pytest.approx(abs(transfer.b13 / transfer.b23), rel=1e-12)

def test_output_quadratures_signal_in_phase_quadrature():
	# setup
	gamma = 2 * math.pi * 0.84e6
	omega = 2 * math.pi * 4e5
	x = 1e-15
	tpt = quantum.two_photon_transfer(gamma, LASER.k_p, omega)
	carrier = quantum.carrier_quadratures(LASER)
	vacuum = QuadratureState(0, 0)

	b1, b2 = quantum.output_quadratures(tpt, vacuum, vacuum, x, omega, carrier)

	assert b1.c == 0
	assert b2.c == 0
	assert b2.s == pytest.approx(1j * omega * x * LASER.k_p * LASER.amplitude / (gamma - 1j * omega))

def test_output_quadratures_noise_only():
	# setup
	gamma = 2 * math.pi * 0.84e6
	omega = gamma
	tpt = quantum.two_photon_transfer(gamma, LASER.k_p, omega)
	carrier = quantum.carrier_quadratures(LASER)

	b1, b2 = quantum.output_quadratures(tpt, QuadratureState(1, 0), QuadratureState(0, 0), 0.0, omega, carrier)

	assert b1.c == pytest.approx(gamma / (gamma - 1j * omega))
	assert b2.c == pytest.approx(-1j * omega / (gamma - 1j * omega))

def test_port_ratio_band():
	# setup
	gamma = 2 * math.pi * 0.84e6
	omegas = 2 * math.pi * np.linspace(0.3e6, 0.5e6, 50)

	ratio = quantum.port_ratio_db(gamma, omegas)

	assert np.all(ratio >= 5)
	assert np.all(ratio <= 13)
	assert ratio[0] == pytest.approx(10 * math.log10(abs(2 * gamma - 1j * omegas[0]) / omegas[0]), rel=1e-12)
	# falls with frequency
	assert np.all(np.diff(ratio) < 0)

def test_quadrature_state_round_trip():
	state = QuadratureState(1 + 2j, -3j)
	assert QuadratureState.from_vector(state.as_vector()) == state
