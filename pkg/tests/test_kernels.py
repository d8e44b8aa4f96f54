"""Both kernel backends against each other and against matrix exponentials."""
import numpy as np
import pytest
from scipy import linalg

from dynloc import _backend, _pykernels
from dynloc.core import DriveSpec, HoppingLaw, LatticeSpec, Waveform, hopping_rates

needs_compiled = pytest.mark.skipif("cython" not in _backend.available(), reason="extension not built")


def _dc_hamiltonian(lattice, f0):
    k = hopping_rates(lattice)
    n = lattice.truncation
    return np.diag(f0 * np.arange(n)) - np.diag(k[1:], 1) - np.diag(k[1:], -1)


def test_backend_selection():
    assert _backend.get("python") is _pykernels
    assert _backend.resolve("python") == "python"
    with pytest.raises(ValueError):
        _backend.get("fortran")
    assert _backend.NAME in _backend.available()


@pytest.mark.parametrize("f0", [0.0, 0.7, 2.0, 3.5])
def test_propagate_2x2_constant_matrix(backend, f0):
    kern = _backend.get(backend)
    code, a, w, samples, cum = DriveSpec(Waveform.DC, f0).kernel_args()
    u, n_acc, _, growth = kern.propagate_2x2(code, a, w, samples, cum, 1.0, 0.0, 2.0, 1e-12, 1e-14, 0.01)
    m = np.array([[f0 / 2, -1.0], [1.0, -f0 / 2]])
    assert np.allclose(u, linalg.expm(-2j * m), atol=1e-10 * max(1, growth), rtol=0)
    assert n_acc >= 200


def test_evolve_lattice_dc_against_expm(backend):
    kern = _backend.get(backend)
    lattice = LatticeSpec(HoppingLaw.GLAUBER_FOCK, 0.9, 20)
    drive = DriveSpec(Waveform.DC, 1.3)
    code, a, w, samples, cum = drive.kernel_args()
    rng = np.random.default_rng(3)
    psi = rng.normal(size=20) + 1j * rng.normal(size=20)
    psi /= np.linalg.norm(psi)
    stops = np.array([0.0, 0.5, 2.0])
    states, *_rest, fail, _ = kern.evolve_lattice(hopping_rates(lattice), code, a, w, samples, cum, psi,
                                                  stops, 1e-12, 1e-14, 0.05, np.inf)
    assert np.isnan(fail)
    h = _dc_hamiltonian(lattice, 1.3)
    for row, t in zip(states, stops):
        assert np.max(np.abs(row - linalg.expm(-1j * h * t) @ psi)) < 1e-9


@needs_compiled
@pytest.mark.parametrize("kind", ["sinusoidal", "square", "custom"])
def test_backends_agree_on_the_lattice(kind):
    samples = None
    if kind == "custom":
        s = np.sin(np.linspace(0, 2 * np.pi, 24, endpoint=False)) ** 3 + 0.2
        samples = tuple(s - s.mean())
    drive = DriveSpec.from_gamma(kind, 2.1, 1.3, samples)
    lattice = LatticeSpec(HoppingLaw.PSEUDO_GLAUBER_FOCK, 1.0, 48)
    args = drive.kernel_args()
    psi = np.zeros(48, dtype=complex)
    psi[0] = 1
    stops = np.linspace(0.0, 2 * drive.period, 9)
    out = {}
    for name in ("cython", "python"):
        kern = _backend.get(name)
        out[name] = kern.evolve_lattice(hopping_rates(lattice), *args, psi, stops, 1e-11, 1e-13,
                                        drive.period / 50, np.inf)
    # same algorithm and step sequence; only the rounding of complex products differs
    assert out["cython"][1] == out["python"][1]
    assert np.max(np.abs(out["cython"][0] - out["python"][0])) < 1e-10


@needs_compiled
@pytest.mark.parametrize("kind", ["sinusoidal", "square"])
def test_backends_agree_on_the_monodromy(kind):
    drive = DriveSpec.from_gamma(kind, 3.0, 0.8)
    res = [
        _backend.get(name).propagate_2x2(*drive.kernel_args(), 1.0, 0.0, drive.period / 2, 1e-12, 1e-14,
                                         drive.period / 200)
        for name in ("cython", "python")
    ]
    assert np.max(np.abs(res[0][0] - res[1][0])) < 1e-12
    assert res[0][1] == res[1][1]


def test_edge_guard_reports_failure(backend):
    kern = _backend.get(backend)
    lattice = LatticeSpec(HoppingLaw.HOMOGENEOUS, 1.0, 6)
    code, a, w, samples, cum = DriveSpec(Waveform.DC, 0.0).kernel_args()
    psi = np.zeros(6, dtype=complex)
    psi[0] = 1
    states, _, _, max_edge, fail_time, fail_occ = kern.evolve_lattice(
        hopping_rates(lattice), code, a, w, samples, cum, psi, np.array([0.0, 5.0]), 1e-10, 1e-12, 0.1, 1e-6
    )
    assert 0 < fail_time < 5 and fail_occ > 1e-6
    assert np.all(np.isnan(states[1]))
