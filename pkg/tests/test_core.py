import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from dynloc.core import (
    DLPoint,
    DriveSpec,
    HoppingLaw,
    LatticeSpec,
    Waveform,
    drive_phase,
    drive_value,
    hopping_rate,
    hopping_rates,
)
from dynloc.errors import ConfigError


def test_hopping_rate_examples():
    assert hopping_rate(LatticeSpec(HoppingLaw.PSEUDO_GLAUBER_FOCK, 1.0, 8), 3) == 3.0
    assert hopping_rate(LatticeSpec(HoppingLaw.GLAUBER_FOCK, 2.0, 8), 0) == 0.0
    assert hopping_rate(LatticeSpec(HoppingLaw.GLAUBER_FOCK, 1.0, 8), 4) == 2.0
    assert hopping_rate(LatticeSpec(HoppingLaw.HOMOGENEOUS, 0.7, 8), 5) == 0.7
    assert hopping_rate(LatticeSpec(HoppingLaw.PSEUDO_GLAUBER_FOCK, 1.0, 8), 0) == 0.0


def test_hopping_rate_out_of_range():
    lat = LatticeSpec(HoppingLaw.HOMOGENEOUS, 1.0, 4)
    for n in (-1, 4):
        with pytest.raises(ConfigError):
            hopping_rate(lat, n)


def test_custom_hopping_table():
    lat = LatticeSpec(HoppingLaw.CUSTOM, 1.0, 3, (0.0, 0.5, 2.0))
    assert hopping_rate(lat, 2) == 2.0
    assert np.array_equal(hopping_rates(lat), [0.0, 0.5, 2.0])
    with pytest.raises(ConfigError):
        LatticeSpec(HoppingLaw.CUSTOM, 1.0, 3, (0.0, 0.5))
    with pytest.raises(ConfigError):
        LatticeSpec(HoppingLaw.CUSTOM, 1.0, 2, (0.0, -1.0))
    with pytest.raises(ConfigError):
        LatticeSpec(HoppingLaw.CUSTOM, 1.0, 2)


@pytest.mark.parametrize("kwargs", [dict(sigma=0.0), dict(sigma=-1.0), dict(truncation=1)])
def test_lattice_validation(kwargs):
    base = dict(law=HoppingLaw.HOMOGENEOUS, sigma=1.0, truncation=8)
    base.update(kwargs)
    with pytest.raises(ConfigError):
        LatticeSpec(**base)


@given(st.sampled_from([HoppingLaw.GLAUBER_FOCK, HoppingLaw.PSEUDO_GLAUBER_FOCK, HoppingLaw.HOMOGENEOUS]),
       st.floats(0.01, 10.0), st.integers(2, 300))
def test_hopping_rates_vector_matches_scalar_and_is_monotone(law, sigma, n):
    lat = LatticeSpec(law, sigma, n)
    rates = hopping_rates(lat)
    assert rates.shape == (n,)
    assert all(rates[k] == pytest.approx(hopping_rate(lat, k), rel=1e-15) for k in range(0, n, max(1, n // 7)))
    if law is not HoppingLaw.HOMOGENEOUS:
        assert np.all(np.diff(rates) >= 0)


def test_drive_value_examples():
    assert drive_value(DriveSpec(Waveform.SINUSOIDAL, 2.0, 1.0), 0.0) == 2.0
    assert abs(drive_value(DriveSpec(Waveform.SINUSOIDAL, 2.0, 1.0), math.pi / 2)) < 1e-15
    assert drive_value(DriveSpec(Waveform.DC, 1.5), 7.3) == 1.5


def test_square_wave_convention():
    d = DriveSpec(Waveform.SQUARE, 1.2, 2.0)
    assert drive_value(d, 0.0) == 1.2
    assert drive_value(d, 0.49 * d.period) == 1.2
    assert drive_value(d, 0.51 * d.period) == -1.2
    assert drive_value(d, 1.01 * d.period) == 1.2


def test_drive_phase_examples():
    d = DriveSpec(Waveform.SINUSOIDAL, 2.405, 1.0)
    assert abs(drive_phase(d, math.pi / 2) - 2.405) < 1e-15
    assert abs(drive_phase(d, d.period)) < 1e-14
    assert drive_phase(DriveSpec(Waveform.DC, 2.0), 3.0) == 6.0


def _profile(seed, k):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=k)
    return tuple(s - s.mean())


def test_custom_profile_is_scaled_by_f0():
    prof = _profile(1, 16)
    d = DriveSpec(Waveform.CUSTOM, 3.0, 2.0, prof)
    assert drive_value(d, 0.0) == pytest.approx(3.0 * prof[0], rel=1e-15)
    assert drive_value(d, d.period * 2.5 / 16) == pytest.approx(1.5 * (prof[2] + prof[3]), rel=1e-14)


def test_custom_profile_must_have_zero_mean():
    with pytest.raises(ConfigError):
        DriveSpec(Waveform.CUSTOM, 1.0, 1.0, (1.0, 0.0, 0.0))
    with pytest.raises(ConfigError):
        DriveSpec(Waveform.CUSTOM, 1.0, 1.0, (1.0,))
    with pytest.raises(ConfigError):
        DriveSpec(Waveform.CUSTOM, 1.0, 1.0, (1.0, math.nan))
    with pytest.raises(ConfigError):
        DriveSpec(Waveform.SINUSOIDAL, 1.0, 1.0, (1.0, -1.0))


@pytest.mark.parametrize("kwargs", [dict(f0=-1.0), dict(f0=math.inf), dict(omega=0.0), dict(omega=-2.0)])
def test_drive_validation(kwargs):
    base = dict(waveform=Waveform.SINUSOIDAL, f0=1.0, omega=1.0)
    base.update(kwargs)
    with pytest.raises(ConfigError):
        DriveSpec(**base)


def test_dc_drive_ignores_omega_and_has_no_period():
    d = DriveSpec(Waveform.DC, 1.0, omega=0.0)
    assert not d.periodic
    with pytest.raises(ConfigError):
        d.period
    with pytest.raises(ConfigError):
        d.gamma


def test_from_gamma_round_trip():
    d = DriveSpec.from_gamma("square", 3.353, 0.4)
    assert d.f0 == pytest.approx(3.353 * 0.4)
    assert d.gamma == pytest.approx(3.353)
    assert d.with_gamma(1.0).f0 == pytest.approx(0.4)


waveforms = st.sampled_from(["sinusoidal", "square", "custom"])


def _drive(kind, f0, omega):
    if kind == "custom":
        return DriveSpec(Waveform.CUSTOM, f0, omega, _profile(7, 12))
    return DriveSpec(Waveform(kind), f0, omega)


@given(waveforms, st.floats(0.0, 20.0), st.floats(0.1, 10.0))
def test_drive_phase_vanishes_after_a_period(kind, f0, omega):
    d = _drive(kind, f0, omega)
    for cycles in (1, 3):
        assert abs(drive_phase(d, cycles * d.period)) <= 1e-10 * max(1.0, f0 / omega)


@given(waveforms, st.floats(0.0, 5.0), st.floats(0.2, 5.0), st.floats(0.0, 3.0))
def test_drive_phase_matches_quadrature(kind, f0, omega, cycles):
    d = _drive(kind, f0, omega)
    t = cycles * d.period
    points = None
    if kind != "sinusoidal":
        marks = 12 if kind == "custom" else 2
        points = [d.period * j / marks for j in range(1, int(cycles * marks) + 1) if d.period * j / marks < t]
    val, _ = integrate.quad(lambda s: drive_value(d, s), 0.0, t, points=points or None,
                            epsabs=1e-12, epsrel=1e-12, limit=500)
    assert abs(drive_phase(d, t) - val) <= 1e-10


def test_dl_point_serialization():
    p = DLPoint(3.352, 1e-12, 1.0, "touch")
    d = p.to_dict()
    assert d["f0_over_sigma"] == pytest.approx(3.352)
    assert d["fidelity"] is None and d["kind"] == "touch"
