import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynloc.core import DriveSpec, Waveform
from dynloc.errors import ConfigError
from dynloc.floquet import propagate
from dynloc.lattice import dl_integral_condition
from dynloc.oracles import (
    PtLabel,
    TurningPointError,
    bessel_j0,
    bloch_period,
    dc_edge_return_probability,
    dc_evolution_coefficients,
    gf_heisenberg_coefficient,
    j0_roots,
    pt_lambda,
    pt_phase,
    wkb_quasi_energy,
)

# 40-digit reference values, frozen
J0_TABLE = [
    (0.0, 1.0),
    (0.5, 0.93846980724081290423),
    (1.0, 0.76519768655796655145),
    (3.0, -0.26005195490193343762),
    (5.0, -0.17759677131433830435),
    (8.0, 0.17165080713755390609),
    (10.0, -0.2459357644513483352),
    (12.0, 0.047689310796833536624),
    (20.0, 0.16702466434058315473),
    (25.0, 0.096266783275958116174),
    (30.0, -0.086367983581040211336),
    (50.0, 0.055812327669251815005),
    (100.0, 0.019985850304223122424),
]
J0_ZEROS = [2.4048255576957727686, 5.5200781102863106496, 8.653727912911012217,
            11.791534439014281614, 14.930917708487785948]


@pytest.mark.parametrize("x, expected", J0_TABLE)
def test_bessel_j0_reference_values(x, expected):
    assert abs(bessel_j0(x) - expected) <= 1e-12
    assert bessel_j0(-x) == bessel_j0(x)


def test_bessel_j0_near_first_root():
    assert abs(bessel_j0(2.404826)) <= 1e-6


def test_bessel_j0_rejects_non_finite():
    with pytest.raises(ConfigError):
        bessel_j0(math.inf)


def test_bessel_j0_matches_scipy_densely():
    from scipy.special import j0

    xs = np.linspace(0.0, 60.0, 2401)
    assert max(abs(bessel_j0(x) - j0(x)) for x in xs) <= 1e-12


@given(st.floats(0.0, 12.0))
def test_bessel_j0_quadrature_identity(gamma):
    drive = DriveSpec.from_gamma(Waveform.SINUSOIDAL, gamma, 1.0)
    val = dl_integral_condition(drive) / drive.period
    assert abs(val - bessel_j0(gamma)) <= 1e-9


def test_j0_roots():
    roots = j0_roots(5)
    assert np.allclose(roots, J0_ZEROS, atol=1e-13, rtol=0)
    assert abs(roots[0] - 2.404826) < 5e-7
    assert abs(roots[1] - 5.5201) < 1e-4
    assert all(abs(bessel_j0(r)) <= 1e-10 for r in roots)


def test_j0_roots_spacing_tends_to_pi():
    roots = j0_roots(30)
    gaps = np.diff(roots)
    assert np.all(gaps > 0)
    assert abs(gaps[-1] - math.pi) < 1e-3
    with pytest.raises(ConfigError):
        j0_roots(0)


# --------------------------------------------------------------- WKB


def test_wkb_zero_force():
    mu1, mu2 = wkb_quasi_energy(DriveSpec(Waveform.SINUSOIDAL, 0.0, 0.7), 1.3)
    assert abs(mu1 - 1.3j) < 1e-12
    assert mu2 == -mu1


def test_wkb_just_below_threshold():
    mu1, _ = wkb_quasi_energy(DriveSpec(Waveform.SINUSOIDAL, 2.0 - 1e-6, 0.2), 1.0)
    assert mu1.real == 0
    assert 0 < mu1.imag < 1.0


def test_wkb_rejects_turning_point():
    with pytest.raises(TurningPointError) as info:
        wkb_quasi_energy(DriveSpec(Waveform.SINUSOIDAL, 2.5, 0.2), 1.0)
    assert info.value.time == 0.0
    with pytest.raises(TurningPointError):
        wkb_quasi_energy(DriveSpec(Waveform.SQUARE, 2.0, 1.0), 1.0)


def test_wkb_square_wave_closed_form():
    mu1, _ = wkb_quasi_energy(DriveSpec(Waveform.SQUARE, 1.2, 0.3), 1.0)
    assert abs(mu1 - 1j * math.sqrt(1 - 0.36)) < 1e-12


@given(st.floats(0.0, 1.999), st.floats(0.05, 5.0))
def test_wkb_purely_imaginary(f0, omega):
    mu1, mu2 = wkb_quasi_energy(DriveSpec(Waveform.SINUSOIDAL, f0, omega), 1.0)
    assert mu1.real == 0 and 0 < mu1.imag <= 1.0
    assert mu1 + mu2 == 0


# ------------------------------------------------------ PT classifier


def test_pt_phase_examples():
    p = pt_phase(1.0, 1.0)
    assert p.phase is PtLabel.BROKEN and abs(p.lam - 0.8660254037844386j) < 1e-15
    p = pt_phase(2.0, 1.0)
    assert p.phase is PtLabel.EXCEPTIONAL and p.lam == 0
    p = pt_phase(3.0, 1.0)
    assert p.phase is PtLabel.UNBROKEN and abs(p.lam - 1.118033988749895) < 1e-15
    with pytest.raises(ConfigError):
        pt_phase(1.0, 0.0)


@given(st.floats(0.0, 10.0), st.floats(0.1, 5.0), st.floats(0.01, 100.0))
def test_pt_phase_scale_invariant(f0, sigma, c):
    assert pt_phase(f0, sigma).phase is pt_phase(c * f0, c * sigma).phase


@given(st.floats(0.0, 10.0), st.floats(0.1, 5.0))
def test_pt_lambda_convention(f0, sigma):
    lam = pt_lambda(f0, sigma)
    assert lam.real == 0 or lam.imag == 0
    assert abs(lam * lam - (0.25 * f0 * f0 - sigma * sigma)) <= 1e-12 * max(1.0, f0 * f0)
    if f0 < 2 * sigma:
        assert lam.imag > 0


# ----------------------------------------------------------- dc solution


def test_dc_coefficients_at_zero():
    assert dc_evolution_coefficients(3.0, 1.0, 0.0) == (1 + 0j, 0j)


def test_dc_coefficients_self_imaging():
    for f0 in (3.0, 4.0, 6.0):
        tb = bloch_period(f0, 1.0)
        alpha, beta = dc_evolution_coefficients(f0, 1.0, tb)
        assert abs(alpha + 1) < 1e-12 and abs(beta) < 1e-12


def test_dc_coefficients_exceptional_point_series():
    alpha, beta = dc_evolution_coefficients(2.0, 1.0, 1.0)
    assert abs(alpha - (1 - 1j)) < 1e-15 and abs(beta - 1j) < 1e-15
    # continuity across the exceptional point
    a1, b1 = dc_evolution_coefficients(2.0 + 1e-7, 1.0, 1.0)
    assert abs(a1 - alpha) < 1e-6 and abs(b1 - beta) < 1e-6


@pytest.mark.parametrize("f0", [0.5, 2.0, 3.0])
def test_dc_coefficients_match_integrator(f0, backend):
    t = 1.0
    u, _, _ = propagate(DriveSpec(Waveform.DC, f0), 1.0, 0.0, t, backend=backend)
    alpha, beta = dc_evolution_coefficients(f0, 1.0, t)
    assert abs(u[0, 0] - alpha) < 1e-10 and abs(u[0, 1] - beta) < 1e-10


def _u(f0, sigma, t):
    # (alpha, beta) is the first row of exp(-i M t); a real M fixes the second row
    a, b = dc_evolution_coefficients(f0, sigma, t)
    return np.array([[a, b], [np.conj(b), np.conj(a)]])


@given(st.floats(0.0, 6.0), st.floats(0.2, 2.0), st.floats(1e-3, 3.0))
def test_dc_coefficients_solve_the_equation(f0, sigma, t):
    h = 1e-5
    m = np.array([[0.5 * f0, -sigma], [sigma, -0.5 * f0]])
    u = _u(f0, sigma, t)
    deriv = 1j * (_u(f0, sigma, t + h) - _u(f0, sigma, t - h)) / (2 * h)
    scale = max(1.0, float(np.max(np.abs(u))))
    assert np.max(np.abs(deriv - m @ u)) <= 1e-6 * scale


@given(st.floats(2.01, 10.0), st.floats(0.0, 20.0))
def test_dc_unbroken_unimodular(f0, t):
    alpha, beta = dc_evolution_coefficients(f0, 1.0, t)
    assert abs(abs(alpha) ** 2 - abs(beta) ** 2 - 1) <= 1e-10 * max(1.0, abs(alpha) ** 2)


def test_dc_edge_return_probability_bounds():
    assert dc_edge_return_probability(1.5, 1.0, 0.0) == 1.0
    assert dc_edge_return_probability(1.5, 1.0, 20.0) < 1e-10
    assert abs(dc_edge_return_probability(4.0, 1.0, bloch_period(4.0, 1.0)) - 1) < 1e-12


def test_bloch_period():
    assert abs(bloch_period(4.0, 1.0) - math.pi / math.sqrt(3)) < 1e-15
    assert abs(bloch_period(3.0, 0.0) - 2 * math.pi / 3.0) < 1e-15
    for f0 in (1.0, 2.0):
        with pytest.raises(ConfigError):
            bloch_period(f0, 1.0)
    # divergence as eps^(-1/2) at the exceptional point
    r = bloch_period(2 * (1 + 1e-6), 1.0) / bloch_period(2 * (1 + 4e-6), 1.0)
    assert abs(r - 2.0) < 1e-5


# ----------------------------------------------------------- Glauber-Fock


def test_gf_coefficient_at_zero():
    drive = DriveSpec.from_gamma(Waveform.SINUSOIDAL, 1.0, 1.0)
    assert gf_heisenberg_coefficient(drive, 1.0, 0.0) == (1 + 0j, 0j)


def test_gf_coefficient_vanishes_at_first_root():
    root = j0_roots(1)[0]
    drive = DriveSpec.from_gamma(Waveform.SINUSOIDAL, root, 1.0)
    phase, d = gf_heisenberg_coefficient(drive, 1.0, drive.period)
    assert abs(phase - 1) < 1e-12
    assert abs(d) <= 1e-8 * drive.period


def test_gf_coefficient_equals_bessel_integral():
    drive = DriveSpec.from_gamma(Waveform.SINUSOIDAL, 1.7, 2.0)
    _, d = gf_heisenberg_coefficient(drive, 0.8, 3 * drive.period)
    assert abs(d - 1j * 0.8 * 3 * drive.period * bessel_j0(1.7)) < 1e-10


@given(st.floats(0.0, 20.0))
def test_gf_coefficient_no_coupling(t):
    drive = DriveSpec.from_gamma(Waveform.SQUARE, 1.3, 1.0)
    phase, d = gf_heisenberg_coefficient(drive, 0.0, t)
    assert d == 0
    assert abs(phase - cmath.exp(-1j * drive.f0 * min(t % drive.period, drive.period - t % drive.period))) < 1e-12
