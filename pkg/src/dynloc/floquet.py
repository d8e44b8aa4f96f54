"""Two-level non-Hermitian Floquet engine for the pseudo Glauber-Fock lattice.

The operator pair ``(a_h, b_h^dagger)`` evolves under

    i d/dt (a_h, b_h^dagger) = M(t) (a_h, b_h^dagger),
    M(t) = [[F(t)/2, -sigma], [sigma, -F(t)/2]],

a real traceless (hence ``det U = 1``) but non-Hermitian matrix.  DL points
are the quasi-energy degeneracies ``mu1 = mu2`` of the one-period
monodromy ``U``; with ``det U = 1`` these are exactly ``tr U = +-2``.
"""
from __future__ import annotations

import cmath
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from dynloc import _backend
from dynloc.core import (
    DLPoint,
    DriveSpec,
    KERNEL_CODES,
    HoppingLaw,
    LatticeSpec,
    QuasiEnergyPair,
    Waveform,
    drive_value,
)
from dynloc.errors import AccuracyError, ConfigError, DynlocError
from dynloc.lattice import IntegratorSettings, revival_check

log = logging.getLogger(__name__)

DET_LIMIT = 1e-8
PAIRING_LIMIT = 1e-8
# acceptance threshold on |tr U| - 2 at a refined DL point, per unit growth^2
RESIDUAL_TOL = 1e-9
# half-width of the central difference used to locate tangential touches
TOUCH_STEP = 1e-6
FIDELITY_FLOOR = 0.98


# a decade tighter than the lattice defaults keeps |det U - 1| well below 1e-10
MONODROMY_SETTINGS = IntegratorSettings(rel_tol=1e-12, abs_tol=1e-14, max_step=1.0 / 200)


@dataclass(frozen=True)
class Monodromy:
    """One-period propagator ``U`` of the 2x2 system.

    ``growth`` is the largest entry of ``V(t)`` met during the period; the
    determinant can only be certified to roughly ``eps * growth^2``.
    """

    u: np.ndarray
    det_residual: float
    growth: float = 1.0
    period: float = float("nan")
    steps: int = 0

    @property
    def trace(self) -> complex:
        return complex(self.u[0, 0] + self.u[1, 1])

    @property
    def structure_residual(self) -> float:
        """Distance from the form ``[[a, b], [conj b, conj a]]`` that a real ``M(t)`` imposes."""
        u = self.u
        return float(max(abs(u[1, 1] - np.conj(u[0, 0])), abs(u[1, 0] - np.conj(u[0, 1]))))

    @property
    def det_scale(self) -> float:
        return max(1.0, self.growth) ** 2

    @property
    def relative_det_residual(self) -> float:
        return self.det_residual / self.det_scale


def coefficient_matrix(drive: DriveSpec, sigma: float, t: float) -> np.ndarray:
    """``M(t) = [[F/2, -sigma], [sigma, -F/2]]``."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    h = 0.5 * drive_value(drive, t)
    return np.array([[h, -sigma], [sigma, -h]], dtype=float)


def propagate(drive: DriveSpec, sigma: float, t0: float, t1: float,
              settings: IntegratorSettings = MONODROMY_SETTINGS, backend: str | None = None):
    """Propagator ``V(t1, t0)`` and the peak entry magnitude met on the way."""
    kern = _backend.get(backend)
    code, f0, omega, samples, cumulative = drive.kernel_args()
    ref = drive.period if drive.periodic else 2 * math.pi / max(drive.f0, sigma, 1e-300)
    max_step = min(settings.max_step, 1.0 / 200) * ref
    cuts = [t0, t1]
    if drive.waveform is Waveform.SQUARE:
        half = 0.5 * drive.period
        k0 = math.floor(t0 / half) + 1
        cuts = [t0] + [k * half for k in range(k0, int(t1 / half) + 1) if t0 < k * half < t1] + [t1]
    v = np.eye(2, dtype=complex)
    growth = 1.0
    steps = 0
    for a, b in zip(cuts[:-1], cuts[1:]):
        c, f = code, f0
        if drive.waveform is Waveform.SQUARE:
            # constant within a half period; avoids sampling the jump at the segment end
            c, f = KERNEL_CODES[Waveform.DC], float(drive_value(drive, 0.5 * (a + b)))
        u, n_acc, _n_rej, g = kern.propagate_2x2(
            c, f, omega, samples, cumulative, float(sigma), a, b,
            settings.rel_tol, settings.abs_tol, max_step,
        )
        growth = max(growth, g * float(np.max(np.abs(v))))
        v = u @ v
        steps += n_acc
    return v, growth, steps


def monodromy(drive: DriveSpec, sigma: float, settings: IntegratorSettings = MONODROMY_SETTINGS,
              backend: str | None = None) -> Monodromy:
    """Integrate ``i dV/dt = M(t) V`` over one period from ``V(0) = 1``.

    Raises
    ------
    AccuracyError
        If ``|det U - 1|`` exceeds ``1e-8`` relative to ``growth^2``.
    """
    if not drive.periodic:
        raise ConfigError("the monodromy needs a periodic drive")
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    u, growth, steps = propagate(drive, sigma, 0.0, drive.period, settings, backend)
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    m = Monodromy(u, float(abs(det - 1.0)), float(growth), drive.period, steps)
    if m.relative_det_residual > DET_LIMIT:
        raise AccuracyError(
            f"monodromy determinant off by {m.det_residual:.3e} (growth {growth:.3e})"
        )
    return m


def _branch(mu: complex, omega: float) -> complex:
    """Shift ``Re mu`` into ``(-omega/2, omega/2]``."""
    re = mu.real
    half = 0.5 * omega
    re = re - omega * math.floor((re + half) / omega)
    if re <= -half:
        re += omega
    if re > half:
        re -= omega
    return complex(re, mu.imag)


def quasi_energies(m: Monodromy, omega: float) -> QuasiEnergyPair:
    """Floquet exponents ``mu = (i/T) Log rho`` of the monodromy eigenvalues ``rho``."""
    period = 2 * math.pi / omega
    u = m.u
    tr = complex(u[0, 0] + u[1, 1])
    # the determinant is 1 by Liouville; only use the computed one while it is representable
    det = complex(u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0])
    if m.det_residual > 1e-10:
        det = 1.0 + 0j
    disc = cmath.sqrt(0.25 * tr * tr - det)
    r_plus = 0.5 * tr + disc
    r_minus = 0.5 * tr - disc
    big = r_plus if abs(r_plus) >= abs(r_minus) else r_minus
    small = det / big
    mu_a = _branch(1j * cmath.log(big) / period, omega)
    mu_b = _branch(1j * cmath.log(small) / period, omega)
    mu1, mu2 = (mu_a, mu_b) if mu_a.imag >= mu_b.imag else (mu_b, mu_a)
    total = mu1 + mu2
    # distance of mu1 + mu2 from the lattice omega*Z
    pairing = abs(complex(total.real - omega * round(total.real / omega), total.imag))
    scale = max(1.0, abs(tr))
    degenerate = abs(disc) <= 1e-6 * scale
    defective = degenerate and float(np.max(np.abs(u - 0.5 * tr * np.eye(2)))) > 1e-6 * scale
    return QuasiEnergyPair(
        mu1=mu1,
        mu2=mu2,
        omega=omega,
        branch_certified=(-0.5 * omega < mu1.real <= 0.5 * omega) and pairing <= PAIRING_LIMIT,
        pairing_residual=pairing,
        degenerate=degenerate,
        defective=defective,
    )


# ------------------------------------------------------------ DL search


@dataclass(frozen=True)
class DriveFamily:
    """Drives ``F = gamma * omega * shape(t)`` at a fixed ``omega/sigma``."""

    omega_over_sigma: float
    sigma: float = 1.0
    waveform: Waveform = Waveform.SINUSOIDAL
    samples: tuple | None = None

    def __post_init__(self):
        if not self.omega_over_sigma > 0:
            raise ConfigError("omega/sigma must be positive")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if Waveform(self.waveform) is Waveform.DC:
            raise ConfigError("a DL search needs a periodic waveform")

    @property
    def omega(self) -> float:
        return self.omega_over_sigma * self.sigma

    def drive(self, gamma: float) -> DriveSpec:
        return DriveSpec.from_gamma(self.waveform, gamma, self.omega, self.samples)


def crossing_functional(family: DriveFamily, gamma: float,
                        settings: IntegratorSettings = MONODROMY_SETTINGS,
                        backend: str | None = None) -> float:
    """``|tr U(gamma)| - 2``: zero at a quasi-energy degeneracy, positive where PT is broken."""
    if gamma < 0:
        raise ConfigError("gamma must be >= 0")
    m = monodromy(family.drive(gamma), family.sigma, settings, backend)
    return abs(m.trace) - 2.0


def _sample(args):
    family, gamma, settings, backend = args
    m = monodromy(family.drive(gamma), family.sigma, settings, backend)
    qe = quasi_energies(m, family.omega)
    return m.trace, m.growth, qe.mu1, qe.mu2


@dataclass(frozen=True)
class GammaScan:
    """Monodromy data sampled on a gamma grid."""

    gammas: np.ndarray
    trace: np.ndarray
    growth: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray

    @property
    def functional(self) -> np.ndarray:
        return np.abs(self.trace) - 2.0


def gamma_grid(gamma_min: float, gamma_max: float, step: float) -> np.ndarray:
    if step <= 0:
        raise ConfigError("gamma step must be positive")
    if gamma_max < gamma_min or gamma_min < 0:
        raise ConfigError("need 0 <= gamma_min <= gamma_max")
    count = int(math.floor((gamma_max - gamma_min) / step + 1e-9))
    grid = gamma_min + step * np.arange(count + 1)
    if gamma_max - grid[-1] > 1e-9 * step:
        grid = np.append(grid, gamma_max)
    return grid


def scan_gamma(family: DriveFamily, gammas, settings: IntegratorSettings = MONODROMY_SETTINGS,
               backend: str | None = None, workers: int = 1) -> GammaScan:
    """Sample trace, growth and quasi-energies over ``gammas`` (order preserved)."""
    gammas = np.asarray(gammas, dtype=float)
    jobs = [(family, float(g), settings, backend) for g in gammas]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sample, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_sample(j) for j in jobs]
    if not rows:
        empty = np.empty(0)
        return GammaScan(gammas, empty.astype(complex), empty, empty.astype(complex), empty.astype(complex))
    tr, growth, mu1, mu2 = (np.array(col) for col in zip(*rows))
    return GammaScan(gammas, tr.astype(complex), growth.astype(float), mu1.astype(complex), mu2.astype(complex))


def _noise(growth: float) -> float:
    return RESIDUAL_TOL * max(1.0, growth) ** 2


def find_dl_points(
    sigma: float,
    omega: float,
    gamma_max: float,
    grid: float = 0.01,
    *,
    waveform: Waveform = Waveform.SINUSOIDAL,
    samples=None,
    gamma_min: float = 0.0,
    settings: IntegratorSettings = MONODROMY_SETTINGS,
    verify: bool = False,
    verify_truncation: int = 128,
    backend: str | None = None,
    workers: int = 1,
    scan: GammaScan | None = None,
) -> list:
    """Locate quasi-energy degeneracies on ``[gamma_min, gamma_max]``.

    Sign changes of ``|tr U| - 2`` are refined with Brent's method; grid
    minima (tangential touches, the generic case for symmetric drives) are
    refined by bisecting the sign of a central-difference derivative and
    accepted when the functional there vanishes to within the tolerance.
    """
    if gamma_max <= 0:
        raise ConfigError("gamma_max must be positive")
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    family = DriveFamily(omega / sigma, sigma, Waveform(waveform), None if samples is None else tuple(samples))
    if scan is None:
        scan = scan_gamma(family, gamma_grid(gamma_min, gamma_max, grid), settings, backend, workers)
    g = scan.gammas
    f = scan.functional
    noise = np.array([_noise(x) for x in scan.growth])

    def fun(x):
        return crossing_functional(family, x, settings, backend)

    points = []
    for k in range(g.size - 1):
        if (f[k] > noise[k] and f[k + 1] < -noise[k + 1]) or (f[k] < -noise[k] and f[k + 1] > noise[k + 1]):
            root = optimize.brentq(fun, g[k], g[k + 1], xtol=1e-10, rtol=1e-14)
            points.append(DLPoint(float(root), float(fun(root)), family.omega_over_sigma, "crossing"))
    for k in range(1, g.size - 1):
        if not (f[k] <= f[k - 1] and f[k] <= f[k + 1]):
            continue
        if f[k] < -noise[k]:
            continue  # inside an unbroken window; its edges are sign changes
        touch = _refine_touch(fun, g[k - 1], g[k + 1])
        if touch is None:
            continue
        x, val = touch
        growth = max(scan.growth[k - 1: k + 2])
        if abs(val) <= _noise(growth):
            points.append(DLPoint(float(x), float(val), family.omega_over_sigma, "touch"))
    points.sort(key=lambda p: p.gamma0)
    merged = []
    for p in points:
        if merged and abs(p.gamma0 - merged[-1].gamma0) < 0.5 * grid:
            continue
        merged.append(p)
    if verify:
        merged = [verify_dl_point(p, family, verify_truncation, backend=backend) for p in merged]
    return merged


def _refine_touch(fun, lo: float, hi: float):
    """Minimum of ``fun`` in ``[lo, hi]`` via the sign of its central difference."""
    h = TOUCH_STEP

    def slope(x):
        return (fun(x + h) - fun(x - h)) / (2 * h)

    s_lo = slope(lo + h)
    s_hi = slope(hi - h)
    if not (s_lo < 0 < s_hi):
        return None
    x = optimize.brentq(slope, lo + h, hi - h, xtol=1e-10, rtol=1e-14)
    return x, fun(x)


def verify_dl_point(point: DLPoint, family: DriveFamily, truncation: int = 128,
                    cycles: int = 1, backend: str | None = None) -> DLPoint:
    """Re-check a DL point on the pseudo Glauber-Fock lattice (edge excitation)."""
    lattice = LatticeSpec(HoppingLaw.PSEUDO_GLAUBER_FOCK, family.sigma, truncation)
    drive = family.drive(point.gamma0)
    try:
        fid = revival_check(lattice, drive, cycles, backend=backend)[0]
    except DynlocError as exc:
        return replace(point, fidelity=None, flagged=True, note=f"lattice verification failed: {exc}")
    flagged = fid < FIDELITY_FLOOR
    note = f"fidelity below {FIDELITY_FLOOR}" if flagged else ""
    return replace(point, fidelity=float(fid), flagged=flagged, note=note)
