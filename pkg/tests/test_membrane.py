# built-in
import math

# pypi
import numpy as np
import pytest

# my modules
from src import membrane, quantum
from src.errors import FitError, ValidationError
from src.membrane import MembraneGeometry

GEOMETRY = MembraneGeometry(X=1e-3, Y=1e-3, stress=8e8, density=2700, thickness=5e-8)
OBSERVED_KHZ = [622, 625, 789, 879, 886]
GAMMA = 2 * math.pi * 0.84e6

def test_fundamental_from_geometry():
	# setup
	modes = membrane.mode_frequencies(GEOMETRY, 3, 3)

	assert (modes[0].m, modes[0].n) == (1, 1)
	assert modes[0].frequency == pytest.approx(384.9e3, rel=1e-3)
	assert abs(modes[0].frequency - 395.2e3) / 395.2e3 < 0.03

def test_mass_defaults():
	# setup
	modes = membrane.mode_frequencies(GEOMETRY, 2, 2)

	assert membrane.physical_mass(GEOMETRY) == pytest.approx(1.35e-10)
	assert all(mode.M_eff == pytest.approx(1.35e-10 / 4) for mode in modes)

	explicit = membrane.mode_frequencies(GEOMETRY, 2, 2, effective_mass=1e-10)
	assert explicit[0].M_eff == 1e-10

def test_mode_ladder_sorted():
	# setup
	modes = membrane.mode_frequencies(GEOMETRY, 3, 3)
	frequencies = [mode.frequency for mode in modes]

	assert len(modes) == 9
	assert frequencies == sorted(frequencies)
	# square membrane: (1, 2) and (2, 1) are degenerate
	assert modes[1].frequency == pytest.approx(modes[2].frequency)

def test_rescaled_ladder_matches_observed():
	# setup
	modes = membrane.rescale_sound_speed(membrane.mode_frequencies(GEOMETRY, 3, 3), 395.2e3)

	assert modes[0].frequency == pytest.approx(395.2e3)
	for mode, observed in zip(modes[1:6], OBSERVED_KHZ):
		assert abs(mode.frequency - observed * 1e3) / (observed * 1e3) < 0.04

def test_rescale_needs_fundamental():
	# setup
	modes = membrane.mode_frequencies(GEOMETRY, 2, 2)[1:]

	with pytest.raises(ValidationError):
		membrane.rescale_sound_speed(modes, 395.2e3)

def test_invalid_geometry():
	with pytest.raises(ValidationError):
		MembraneGeometry(X=1e-3, Y=1e-3, stress=-1.0, density=2700, thickness=5e-8)

	with pytest.raises(ValidationError):
		membrane.mode_frequencies(GEOMETRY, 0, 3)

def test_multimode_anti_resonance():
	# setup
	modes = membrane.rescale_sound_speed(membrane.mode_frequencies(GEOMETRY, 2, 2), 395.2e3)
	low, high = modes[0].frequency, modes[1].frequency
	frequencies = np.linspace(low * 1.001, high * 0.999, 20001)

	response = np.abs(membrane.multimode_force_transfer(modes, 1, GAMMA, 2 * math.pi * frequencies))
	dip = np.argmin(response)

	assert 0 < dip < frequencies.size - 1
	assert response[dip] < 1e-3 * response.max()

	# a single mode has no dip there
	single = np.abs(membrane.multimode_force_transfer(modes[:1], 1, GAMMA, 2 * math.pi * frequencies))
	assert np.argmin(single) == frequencies.size - 1

def test_multimode_port_ratio_is_optical():
	# setup
	modes = membrane.mode_frequencies(GEOMETRY, 3, 3)
	omegas = 2 * math.pi * np.array([1e5, 3e5, 5e5])

	position = membrane.multimode_force_transfer(modes, 1, GAMMA, omegas)
	speed = membrane.multimode_force_transfer(modes, 2, GAMMA, omegas)

	assert np.allclose(10 * np.log10(np.abs(position / speed)), quantum.port_ratio_db(GAMMA, omegas), rtol=1e-9)

def test_multimode_static_limit():
	# setup
	modes = membrane.mode_frequencies(GEOMETRY, 2, 2)
	static = sum(1 / (mode.M_eff * (2 * math.pi * mode.frequency)**2) for mode in modes)

	response = membrane.multimode_force_transfer(modes, 1, GAMMA, np.array([1e-3]))

	assert abs(response[0]) == pytest.approx(static, rel=1e-6)
	assert abs(membrane.multimode_force_transfer(modes, 2, GAMMA, np.array([1e-3]))[0]) < 1e-6 * static

def test_multimode_validation():
	with pytest.raises(ValidationError):
		membrane.multimode_force_transfer([], 1, GAMMA, [1.0])

	with pytest.raises(ValidationError):
		membrane.multimode_force_transfer(membrane.mode_frequencies(GEOMETRY, 1, 1), 3, GAMMA, [1.0])

def test_ringdown_recovers_quality():
	# setup
	omega_m = 2 * math.pi * 395.2e3

	for seed in range(20):
		times, amplitude_db = membrane.synthetic_ringdown(4.6e5, omega_m, seed=seed)
		assert membrane.ringdown_q(times, amplitude_db, omega_m) == pytest.approx(4.6e5, rel=0.02)

def test_ringdown_two_points_exact():
	# setup
	omega_m = 2 * math.pi * 1e3

	quality = membrane.ringdown_q([0.0, 1.0], [0.0, -10.0], omega_m)

	assert quality == pytest.approx(omega_m / math.log(10))

	# halving the decay time halves Q
	assert membrane.ringdown_q([0.0, 0.5], [0.0, -10.0], omega_m) == pytest.approx(quality / 2)

def test_ringdown_not_decaying(capsys):
	with pytest.raises(FitError):
		membrane.ringdown_q([0.0, 1.0, 2.0], [0.0, 0.5, 1.0], 1.0)

	assert "ERROR" in capsys.readouterr().out
