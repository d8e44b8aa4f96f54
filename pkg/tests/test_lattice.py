import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import linalg

from dynloc.core import DriveSpec, HoppingLaw, LatticeSpec, Trajectory, Waveform, hopping_rates
from dynloc.errors import AccuracyError, ConfigError, TruncationError
from dynloc.lattice import (
    IntegratorSettings,
    dl_integral_condition,
    evolve,
    fidelity_series,
    occupation_spectrum,
    revival_check,
    revival_deltas,
    revival_fidelity,
    snapshot_times,
    spectrum_deviation,
)
from dynloc.oracles import j0_roots

COLLAPSE_DRIVE = DriveSpec.from_gamma(Waveform.SINUSOIDAL, 3.353, 1.0)


def _site(n, k):
    psi = np.zeros(n, dtype=complex)
    psi[k] = 1
    return psi


def _static_propagator(lattice, f0, t):
    k = hopping_rates(lattice)
    h = np.diag(f0 * np.arange(lattice.truncation)) - np.diag(k[1:], 1) - np.diag(k[1:], -1)
    w, v = linalg.eigh(h)
    return v @ np.diag(np.exp(-1j * w * t)) @ v.conj().T


@pytest.mark.parametrize("validation", [
    dict(rel_tol=0.0), dict(rel_tol=1e-2), dict(abs_tol=-1.0), dict(max_step=0.05), dict(snapshot_stride=0),
])
def test_settings_validation(validation):
    with pytest.raises(ConfigError):
        IntegratorSettings(**validation)


def test_free_homogeneous_spreading_matches_eigendecomposition(backend):
    lattice = LatticeSpec(HoppingLaw.HOMOGENEOUS, 1.0, 21)
    traj = evolve(lattice, DriveSpec(Waveform.DC, 0.0), 3.0, _site(21, 10), edge_limit=math.inf,
                  auto_truncate=False, backend=backend)
    for t, state in zip(traj.times[::7], traj.states[::7]):
        assert np.max(np.abs(state - _static_propagator(lattice, 0.0, t) @ _site(21, 10))) <= 1e-8


def test_zero_duration_returns_initial_state():
    rng = np.random.default_rng(0)
    psi = np.zeros(16, dtype=complex)
    psi[:8] = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    traj = evolve(LatticeSpec(HoppingLaw.GLAUBER_FOCK, 2.0, 16), COLLAPSE_DRIVE, 0.0, psi)
    assert traj.times.tolist() == [0.0]
    assert np.array_equal(traj.states[0], psi)


def test_trajectory_invariants():
    traj = evolve(LatticeSpec(HoppingLaw.PSEUDO_GLAUBER_FOCK, 1.0, 128), COLLAPSE_DRIVE, 2 * COLLAPSE_DRIVE.period)
    assert traj.times[0] == 0 and np.all(np.diff(traj.times) > 0)
    assert np.max(np.abs(traj.norms - 1)) <= 1e-8
    assert traj.states.shape == (traj.times.size, traj.lattice.truncation)
    assert np.allclose(traj.edge_occupation, np.abs(traj.states[:, -1]) ** 2)
    # exact period multiples are snapshot times
    assert COLLAPSE_DRIVE.period in traj.times and 2 * COLLAPSE_DRIVE.period in traj.times


def test_initial_state_validation():
    lattice = LatticeSpec(HoppingLaw.HOMOGENEOUS, 1.0, 8)
    with pytest.raises(ConfigError):
        evolve(lattice, COLLAPSE_DRIVE, 1.0, np.ones(8))
    with pytest.raises(ConfigError):
        evolve(lattice, COLLAPSE_DRIVE, 1.0, _site(9, 0))
    with pytest.raises(ConfigError):
        evolve(lattice, COLLAPSE_DRIVE, -1.0)
    # short vectors are padded
    traj = evolve(lattice, DriveSpec(Waveform.DC, 0.0), 0.0, _site(3, 1))
    assert traj.states.shape == (1, 8) and traj.states[0, 1] == 1


def test_truncation_error_carries_time():
    lattice = LatticeSpec(HoppingLaw.HOMOGENEOUS, 1.0, 8)
    with pytest.raises(TruncationError) as info:
        evolve(lattice, DriveSpec(Waveform.DC, 0.0), 10.0, auto_truncate=False)
    assert 0 < info.value.time < 10 and info.value.size == 8
    assert info.value.exit_code == 3


def test_auto_truncation_doubles_the_lattice():
    lattice = LatticeSpec(HoppingLaw.PSEUDO_GLAUBER_FOCK, 1.0, 32)
    traj = evolve(lattice, COLLAPSE_DRIVE, COLLAPSE_DRIVE.period)
    assert traj.lattice.truncation in (64, 128, 256)
    assert traj.max_edge_occupation <= 1e-6
    with pytest.raises(TruncationError):
        evolve(lattice, COLLAPSE_DRIVE, COLLAPSE_DRIVE.period, max_retries=0)


def test_accuracy_error_on_norm_drift():
    lattice = LatticeSpec(HoppingLaw.HOMOGENEOUS, 1.0, 64)
    drive = DriveSpec.from_gamma(Waveform.SINUSOIDAL, 2.404826, 1.0)
    loose = IntegratorSettings(rel_tol=1e-3, abs_tol=1e-3)
    with pytest.raises(AccuracyError) as info:
        evolve(lattice, drive, 20 * drive.period, _site(64, 32), settings=loose)
    assert info.value.exit_code == 4


def test_fig2_edge_revivals():
    traj = evolve(LatticeSpec(HoppingLaw.PSEUDO_GLAUBER_FOCK, 1.0, 128), COLLAPSE_DRIVE, 3 * COLLAPSE_DRIVE.period)
    for l in (1, 2, 3):
        assert abs(traj.at(l * COLLAPSE_DRIVE.period)[0]) ** 2 >= 0.98
    assert revival_fidelity(traj, COLLAPSE_DRIVE.period, 1)[0] >= 0.99
    # 3.353 sits 9e-4 above the crossing, so S(q, lT) drifts away slowly with l
    assert max(spectrum_deviation(traj, COLLAPSE_DRIVE.period, 2)) <= 1e-2


def test_occupation_spectrum_returns_at_the_crossing():
    from dynloc.floquet import find_dl_points

    gamma0 = find_dl_points(1.0, 1.0, 4.0)[0].gamma0
    drive = DriveSpec.from_gamma(Waveform.SINUSOIDAL, gamma0, 1.0)
    traj = evolve(LatticeSpec(HoppingLaw.PSEUDO_GLAUBER_FOCK, 1.0, 256), drive, 3 * drive.period)
    assert max(spectrum_deviation(traj, drive.period, 3)) <= 1e-3


def test_revival_fidelity_extremes():
    lattice = LatticeSpec(HoppingLaw.HOMOGENEOUS, 1.0, 4)
    drive = DriveSpec(Waveform.SINUSOIDAL, 0.0, 1.0)
    base = _site(4, 0)
    times = np.array([0.0, drive.period, 2 * drive.period])
    states = np.array([base, base * np.exp(0.7j), _site(4, 3)])
    traj = Trajectory(times, states, np.ones(3), np.zeros(3), lattice, drive)
    assert revival_fidelity(traj, drive.period, 2) == pytest.approx([1.0, 0.0], abs=1e-15)
    assert revival_deltas(traj, drive.period, 2).shape == (2, 4)
    assert np.allclose(fidelity_series(traj), [1, 1, 0])
    with pytest.raises(ConfigError):
        revival_fidelity(traj, drive.period, 3)
    with pytest.raises(ConfigError):
        revival_fidelity(traj, drive.period, 0)


def test_revival_fidelity_interpolates():
    lattice = LatticeSpec(HoppingLaw.HOMOGENEOUS, 1.0, 2)
    drive = DriveSpec(Waveform.SINUSOIDAL, 0.0, 1.0)
    half = np.array([1, 1j]) / math.sqrt(2)
    states = np.array([_site(2, 0), half, _site(2, 1)])
    traj = Trajectory(np.array([0.0, 0.5 * drive.period, 1.5 * drive.period]), states, np.ones(3),
                      np.zeros(3), lattice, drive)
    # halfway between P = (1/2, 1/2) and (0, 1)
    assert revival_fidelity(traj, drive.period, 1)[0] == pytest.approx(0.25)


def test_occupation_spectrum_examples():
    assert occupation_spectrum(_site(5, 0), 1.234) == 1.0
    split = np.array([1, 1]) / math.sqrt(2)
    assert abs(occupation_spectrum(split, math.pi)) < 1e-15
    q = np.linspace(-math.pi, math.pi, 9)
    assert occupation_spectrum(split, q).shape == (9,)


@given(st.integers(2, 40), st.integers(0, 2**31))
def test_occupation_spectrum_at_zero_is_the_norm(n, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    psi /= np.linalg.norm(psi)
    assert abs(occupation_spectrum(psi, 0.0) - 1) < 1e-12


def test_dl_integral_condition_examples():
    d = DriveSpec.from_gamma(Waveform.SINUSOIDAL, 2.404826, 1.0)
    assert abs(dl_integral_condition(d)) <= 1e-6 * d.period
    d0 = DriveSpec.from_gamma(Waveform.SINUSOIDAL, 0.0, 2.0)
    assert abs(dl_integral_condition(d0) - d0.period) < 1e-12
    with pytest.raises(ConfigError):
        dl_integral_condition(DriveSpec(Waveform.DC, 1.0))


def test_dl_integral_condition_square_wave_zeros():
    # the square-wave integral is 2 (exp(i pi gamma) - 1) / (i f0): zeros at gamma = 2, 4, ...
    for gamma in (2.0, 4.0):
        d = DriveSpec.from_gamma(Waveform.SQUARE, gamma, 1.0)
        assert abs(dl_integral_condition(d)) <= 1e-8 * d.period
    d = DriveSpec.from_gamma(Waveform.SQUARE, 2 * math.pi, 1.0)
    expected = 2 * (np.exp(1j * math.pi * d.gamma) - 1) / (1j * d.f0)
    assert abs(dl_integral_condition(d) - expected) < 1e-10
    assert abs(expected) > 1e-2 * d.period


def test_homogeneous_dl_and_translation_invariance(backend):
    drive = DriveSpec.from_gamma(Waveform.SINUSOIDAL, j0_roots(1)[0], 1.0)
    lattice = LatticeSpec(HoppingLaw.HOMOGENEOUS, 1.0, 96)
    fids = []
    for site in (40, 48, 55):
        traj = evolve(lattice, drive, drive.period, _site(96, site), backend=backend)
        assert traj.max_edge_occupation < 1e-8
        fids.append(revival_fidelity(traj, drive.period, 1)[0])
    assert min(fids) >= 0.999
    assert max(fids) - min(fids) < 1e-10


def test_glauber_fock_dl():
    drive = DriveSpec.from_gamma(Waveform.SINUSOIDAL, 2.404826, 1.0)
    assert revival_check(LatticeSpec(HoppingLaw.GLAUBER_FOCK, 1.0, 128), drive)[0] >= 0.99


def test_snapshot_times_hit_period_multiples():
    d = DriveSpec.from_gamma(Waveform.SINUSOIDAL, 1.0, 0.37)
    times = snapshot_times(d, 1.0, 5 * d.period + 0.1, 50)
    for l in range(1, 6):
        assert l * d.period in times
    assert times[-1] == 5 * d.period + 0.1


@given(st.floats(0.0, 4.0), st.floats(0.3, 3.0), st.sampled_from(["sinusoidal", "square"]))
def test_norm_conservation(gamma, omega, kind):
    drive = DriveSpec.from_gamma(kind, gamma, omega)
    traj = evolve(LatticeSpec(HoppingLaw.GLAUBER_FOCK, 1.0, 24), drive, 1.5, edge_limit=math.inf,
                  auto_truncate=False)
    assert np.max(np.abs(traj.norms - 1)) <= 1e-8
