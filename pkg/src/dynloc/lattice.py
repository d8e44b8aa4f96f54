"""Driven tight-binding lattice: integration, revival fidelity, occupation spectrum.

The amplitudes obey

    i dc_n/dt = -kappa_n c_{n-1} - kappa_{n+1} c_{n+1} + n F(t) c_n

with ``c_{-1} = c_N = 0``.  Integration is done in the interaction picture
``c_n = exp(-i n phi(t)) d_n`` (``phi`` the accumulated drive phase), which
removes the stiff on-site term; snapshots are converted back.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from dynloc import _backend
from dynloc.core import (
    DriveSpec,
    HoppingLaw,
    LatticeSpec,
    Trajectory,
    Waveform,
    drive_phase,
    hopping_rates,
)
from dynloc.errors import AccuracyError, ConfigError, TruncationError

log = logging.getLogger(__name__)

EDGE_LIMIT = 1e-6
NORM_DRIFT_LIMIT = 1e-8


@dataclass(frozen=True)
class IntegratorSettings:
    """Tolerances and output density of the adaptive integrator.

    ``max_step`` is a fraction of the drive period (for a dc drive, of the
    reference time ``2 pi / max(f0, sigma)``); ``snapshot_stride`` is the
    number of snapshots per period.
    """

    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_step: float = 1.0 / 50
    snapshot_stride: int = 50

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0 < v <= 1e-3:
                raise ConfigError(f"{name} must lie in (0, 1e-3], got {v!r}")
        if not 0 < self.max_step <= 1.0 / 50:
            raise ConfigError(f"max_step must lie in (0, 1/50] of a period, got {self.max_step!r}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be a positive integer")


DEFAULT_SETTINGS = IntegratorSettings()


def reference_time(drive: DriveSpec, sigma: float) -> float:
    """Drive period, or a Bloch-like time scale for a dc force."""
    if drive.periodic:
        return drive.period
    return 2.0 * math.pi / max(drive.f0, sigma)


def snapshot_times(drive: DriveSpec, sigma: float, t_end: float, stride: int) -> np.ndarray:
    """Uniform snapshot grid that contains every multiple of the period exactly."""
    ref = reference_time(drive, sigma)
    dt = ref / stride
    count = int(math.floor(t_end / dt * (1 + 1e-14)))
    k = np.arange(count + 1)
    times = (k // stride) * ref + (k % stride) * dt
    times = times[times <= t_end]
    if t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times = np.append(times, t_end)
    return times


def _breakpoints(drive: DriveSpec, t_end: float) -> np.ndarray:
    """Times where the force jumps (square wave half periods)."""
    if drive.waveform is not Waveform.SQUARE:
        return np.empty(0)
    half = 0.5 * drive.period
    k = np.arange(1, int(t_end / half) + 1)
    return k * half


def _default_initial(size: int) -> np.ndarray:
    psi = np.zeros(size, dtype=complex)
    psi[0] = 1.0
    return psi


def _padded(initial, size: int) -> np.ndarray:
    psi = np.asarray(initial, dtype=complex).ravel()
    if psi.size > size:
        raise ConfigError(f"initial state has {psi.size} sites, lattice has {size}")
    out = np.zeros(size, dtype=complex)
    out[: psi.size] = psi
    return out


def evolve(
    lattice: LatticeSpec,
    drive: DriveSpec,
    t_end: float,
    initial=None,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    *,
    extra_times=(),
    auto_truncate: bool = True,
    max_retries: int = 3,
    edge_limit: float = EDGE_LIMIT,
    backend: str | None = None,
) -> Trajectory:
    """Integrate the lattice equations from ``t = 0`` to ``t_end``.

    Parameters
    ----------
    lattice, drive
        Hopping law and force.
    t_end : float
        Final time (``0`` returns the initial state).
    initial : array_like, optional
        Normalized amplitudes ``c_n(0)``; shorter vectors are zero padded.
        Defaults to the edge excitation ``delta_{n,0}``.
    settings : IntegratorSettings
    extra_times : iterable of float
        Additional snapshot times.
    auto_truncate : bool
        On edge leakage double ``N`` (up to ``max_retries`` times) and rerun.

    Raises
    ------
    TruncationError
        The edge occupation exceeded ``edge_limit`` and no retry was left.
    AccuracyError
        The norm drifted by more than ``1e-8``.
    """
    if not (t_end >= 0 and math.isfinite(t_end)):
        raise ConfigError(f"t_end must be finite and >= 0, got {t_end!r}")
    psi = _default_initial(lattice.truncation) if initial is None else _padded(initial, lattice.truncation)
    norm0 = float(np.vdot(psi, psi).real)
    if abs(norm0 - 1.0) > 1e-10:
        raise ConfigError(f"initial state must be normalized (norm^2 = {norm0!r})")

    attempt = 0
    while True:
        try:
            return _evolve_once(lattice, drive, t_end, psi, settings, extra_times, edge_limit, backend)
        except TruncationError as exc:
            if not auto_truncate or attempt >= max_retries or lattice.law is HoppingLaw.CUSTOM:
                raise
            attempt += 1
            lattice = lattice.resized(2 * lattice.truncation)
            psi = _padded(psi, lattice.truncation)
            log.info("edge leakage at t=%.4g, retrying with N=%d", exc.time, lattice.truncation)


def _evolve_once(lattice, drive, t_end, psi, settings, extra_times, edge_limit, backend):
    kern = _backend.get(backend)
    times = snapshot_times(drive, lattice.sigma, t_end, settings.snapshot_stride) if t_end > 0 else np.zeros(1)
    extra = np.asarray([t for t in extra_times if 0 <= t <= t_end], dtype=float)
    if extra.size:
        times = np.unique(np.concatenate([times, extra]))
    stops = times
    breaks = _breakpoints(drive, t_end)
    if breaks.size:
        stops = np.unique(np.concatenate([times, breaks]))
    keep = np.isin(stops, times)
    max_step = settings.max_step * reference_time(drive, lattice.sigma)
    code, f0, omega, samples, cumulative = drive.kernel_args()
    kappa = hopping_rates(lattice)
    states, n_acc, _n_rej, max_edge, fail_time, fail_occ = kern.evolve_lattice(
        kappa, code, f0, omega, samples, cumulative, psi, stops,
        settings.rel_tol, settings.abs_tol, max_step, edge_limit,
    )
    if not math.isnan(fail_time):
        raise TruncationError(fail_time, fail_occ, lattice.truncation)
    states = states[keep]
    norms = np.sum(np.abs(states) ** 2, axis=1)
    drift = float(np.max(np.abs(norms - norms[0])))
    if drift > NORM_DRIFT_LIMIT:
        raise AccuracyError(f"norm drift {drift:.3e} exceeds {NORM_DRIFT_LIMIT:g}")
    edge = np.abs(states[:, -1]) ** 2
    return Trajectory(
        times=times,
        states=states,
        norms=norms,
        edge_occupation=edge,
        lattice=lattice,
        drive=drive,
        max_edge_occupation=float(max_edge),
        steps=int(n_acc),
    )


def _probabilities_at(traj: Trajectory, t: float) -> np.ndarray:
    times = traj.times
    if t > times[-1] * (1 + 1e-12) + 1e-12:
        raise ConfigError(f"t={t:.6g} is beyond the trajectory end {times[-1]:.6g}")
    j = int(np.searchsorted(times, t))
    if j < times.size and abs(times[j] - t) <= 1e-12 * max(1.0, t):
        return np.abs(traj.states[j]) ** 2
    if j > 0 and abs(times[j - 1] - t) <= 1e-12 * max(1.0, t):
        return np.abs(traj.states[j - 1]) ** 2
    j = min(max(j, 1), times.size - 1)
    w = (t - times[j - 1]) / (times[j] - times[j - 1])
    p0 = np.abs(traj.states[j - 1]) ** 2
    p1 = np.abs(traj.states[j]) ** 2
    return (1 - w) * p0 + w * p1


def revival_deltas(traj: Trajectory, period: float, cycles: int) -> np.ndarray:
    """Per-site ``|c_n(lT)|^2 - |c_n(0)|^2`` for ``l = 1..cycles``."""
    p0 = np.abs(traj.states[0]) ** 2
    return np.array([_probabilities_at(traj, l * period) - p0 for l in range(1, cycles + 1)])


def revival_fidelity(traj: Trajectory, period: float, cycles: int) -> list:
    """One minus the total-variation distance between ``|c(lT)|^2`` and ``|c(0)|^2``."""
    if cycles < 1:
        raise ConfigError("cycles must be >= 1")
    deltas = revival_deltas(traj, period, cycles)
    return [float(min(1.0, max(0.0, 1.0 - 0.5 * np.sum(np.abs(d))))) for d in deltas]


def fidelity_series(traj: Trajectory) -> np.ndarray:
    """Fidelity of every snapshot against the initial occupation."""
    p = np.abs(traj.states) ** 2
    return np.clip(1.0 - 0.5 * np.sum(np.abs(p - p[0]), axis=1), 0.0, 1.0)


def occupation_spectrum(state, q):
    """``S(q) = sum_n |c_n|^2 exp(i q n)``; ``q`` may be an array."""
    p = np.abs(np.asarray(state)) ** 2
    n = np.arange(p.size)
    q_arr = np.asarray(q, dtype=float)
    out = np.exp(1j * np.multiply.outer(q_arr, n)) @ p
    return complex(out) if q_arr.ndim == 0 else out


def spectrum_deviation(traj: Trajectory, period: float, cycles: int, n_q: int = 64) -> list:
    """Max over a ``q`` grid on ``[-pi, pi)`` of ``|S(q, lT) - S(q, 0)|`` per cycle."""
    q = -math.pi + 2 * math.pi * np.arange(n_q) / n_q
    s0 = occupation_spectrum(traj.states[0], q)
    out = []
    for l in range(1, cycles + 1):
        p = _probabilities_at(traj, l * period)
        s = np.exp(1j * np.multiply.outer(q, np.arange(p.size))) @ p
        out.append(float(np.max(np.abs(s - s0))))
    return out


def dl_integral_condition(drive: DriveSpec) -> complex:
    """``int_0^T exp(i phi(t)) dt`` by adaptive quadrature; zero marks DL."""
    if not drive.periodic:
        raise ConfigError("the integral condition needs a periodic drive (dc given)")
    period = drive.period
    points = None
    if drive.waveform is Waveform.SQUARE:
        points = [0.5 * period]
    elif drive.waveform is Waveform.CUSTOM and len(drive.samples) <= 200:
        points = [period * j / len(drive.samples) for j in range(1, len(drive.samples))]
    opts = dict(epsabs=1e-13, epsrel=1e-13, limit=1000, points=points)
    re, _ = integrate.quad(lambda t: math.cos(drive_phase(drive, t)), 0.0, period, **opts)
    im, _ = integrate.quad(lambda t: math.sin(drive_phase(drive, t)), 0.0, period, **opts)
    return complex(re, im)


def revival_check(lattice: LatticeSpec, drive: DriveSpec, cycles: int = 1, initial=None,
                  settings: IntegratorSettings = DEFAULT_SETTINGS, **kwargs) -> list:
    """Evolve ``cycles`` periods and return the revival fidelities."""
    traj = evolve(lattice, drive, cycles * drive.period, initial, settings, **kwargs)
    return revival_fidelity(traj, drive.period, cycles)
