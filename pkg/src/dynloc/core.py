"""Domain types and the drive waveform contract.

Units are fixed throughout: hbar = 1 and lattice constant a = 1, so the
force amplitude ``f0`` is an energy per site and ``sigma``/``omega`` are
rates.  All types are immutable; every function here is pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from dynloc.errors import ConfigError

TWO_PI = 2.0 * math.pi

# relative tolerance of the zero-mean check on sampled waveforms
_ZERO_MEAN_RTOL = 1e-12


class HoppingLaw(str, Enum):
    HOMOGENEOUS = "homogeneous"
    GLAUBER_FOCK = "glauber-fock"
    PSEUDO_GLAUBER_FOCK = "pseudo-glauber-fock"
    CUSTOM = "custom"


class Waveform(str, Enum):
    SINUSOIDAL = "sinusoidal"
    SQUARE = "square"
    DC = "dc"
    CUSTOM = "custom"


# integer codes understood by the compiled/fallback kernels
KERNEL_CODES = {
    Waveform.SINUSOIDAL: 0,
    Waveform.SQUARE: 1,
    Waveform.DC: 2,
    Waveform.CUSTOM: 3,
}


@dataclass(frozen=True)
class LatticeSpec:
    """A truncated semi-infinite (or finite) nearest-neighbour lattice.

    ``kappa_n`` couples site ``n`` to ``n - 1``; sites are ``0 .. N-1``.
    """

    law: HoppingLaw
    sigma: float = 1.0
    truncation: int = 128
    custom_hops: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "law", HoppingLaw(self.law))
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigError(f"sigma must be a positive finite rate, got {self.sigma!r}")
        if int(self.truncation) != self.truncation or self.truncation < 2:
            raise ConfigError(f"truncation must be an integer >= 2, got {self.truncation!r}")
        object.__setattr__(self, "truncation", int(self.truncation))
        if self.law is HoppingLaw.CUSTOM:
            if self.custom_hops is None:
                raise ConfigError("custom hopping law requires a custom_hops table")
            hops = tuple(float(k) for k in self.custom_hops)
            if len(hops) != self.truncation:
                raise ConfigError(
                    f"custom_hops has {len(hops)} entries, truncation is {self.truncation}"
                )
            if any(not math.isfinite(k) or k < 0 for k in hops):
                raise ConfigError("custom_hops entries must be finite and >= 0")
            object.__setattr__(self, "custom_hops", hops)
        elif self.custom_hops is not None:
            raise ConfigError("custom_hops is only allowed with the custom hopping law")

    def resized(self, truncation: int) -> "LatticeSpec":
        """Same lattice with a different number of sites (not for custom tables)."""
        if self.law is HoppingLaw.CUSTOM:
            raise ConfigError("a custom hopping table cannot be resized")
        return LatticeSpec(self.law, self.sigma, truncation)


@dataclass(frozen=True)
class DriveSpec:
    """Periodic (or dc) force ``F(t)`` acting on the particle.

    For ``Waveform.CUSTOM`` the ``samples`` are a dimensionless one-period
    profile on a uniform grid ``t_k = k T / K``; the force is
    ``f0 * s(t)`` with periodic piecewise-linear interpolation of ``s``.
    """

    waveform: Waveform
    f0: float
    omega: float = 1.0
    samples: Optional[tuple] = None
    _cumulative: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "waveform", Waveform(self.waveform))
        if not (math.isfinite(self.f0) and self.f0 >= 0):
            raise ConfigError(f"f0 must be finite and >= 0, got {self.f0!r}")
        if self.waveform is not Waveform.DC:
            if not (math.isfinite(self.omega) and self.omega > 0):
                raise ConfigError(f"omega must be positive for a periodic drive, got {self.omega!r}")
        if self.waveform is Waveform.CUSTOM:
            if self.samples is None or len(self.samples) < 2:
                raise ConfigError("custom waveform needs at least two samples")
            s = tuple(float(x) for x in self.samples)
            if not all(math.isfinite(x) for x in s):
                raise ConfigError("custom waveform samples must be finite")
            scale = max(1.0, max(abs(x) for x in s))
            # trapezoid over the periodic table is exact for the linear interpolant
            mean = math.fsum(s) / len(s)
            if abs(mean) > _ZERO_MEAN_RTOL * scale:
                raise ConfigError(
                    f"custom waveform must have zero mean over a period (mean={mean:.3e})"
                )
            object.__setattr__(self, "samples", s)
            object.__setattr__(self, "_cumulative", _cumulative_profile(s))
        elif self.samples is not None:
            raise ConfigError("samples are only allowed with the custom waveform")

    @classmethod
    def from_gamma(cls, waveform, gamma: float, omega: float, samples=None) -> "DriveSpec":
        """Build a periodic drive from the normalized amplitude ``gamma = f0/omega``."""
        return cls(Waveform(waveform), float(gamma) * float(omega), float(omega), samples)

    @property
    def periodic(self) -> bool:
        return self.waveform is not Waveform.DC

    @property
    def period(self) -> float:
        if not self.periodic:
            raise ConfigError("a dc drive has no period")
        return TWO_PI / self.omega

    @property
    def gamma(self) -> float:
        if not self.periodic:
            raise ConfigError("gamma = f0/omega is undefined for a dc drive")
        return self.f0 / self.omega

    def with_gamma(self, gamma: float) -> "DriveSpec":
        return DriveSpec.from_gamma(self.waveform, gamma, self.omega, self.samples)

    def kernel_args(self):
        """Flat representation consumed by the integration kernels."""
        if self.waveform is Waveform.CUSTOM:
            samples = np.asarray(self.samples, dtype=np.float64)
            cumulative = np.asarray(self._cumulative, dtype=np.float64)
        else:
            samples = np.zeros(1)
            cumulative = np.zeros(2)
        omega = self.omega if self.periodic else 0.0
        return KERNEL_CODES[self.waveform], float(self.f0), float(omega), samples, cumulative


def _cumulative_profile(samples: Sequence[float]) -> tuple:
    """Integral of the unit-period linear interpolant up to each node, in units of the node spacing."""
    k = len(samples)
    out = [0.0] * (k + 1)
    acc = 0.0
    for j in range(k):
        acc += 0.5 * (samples[j] + samples[(j + 1) % k])
        out[j + 1] = acc
    return tuple(out)


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of the lattice amplitudes ``c_n(t)``."""

    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    edge_occupation: np.ndarray
    lattice: Optional[LatticeSpec] = None
    drive: Optional[DriveSpec] = None
    max_edge_occupation: float = 0.0
    steps: int = 0

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    def at(self, t: float, atol: float = 1e-12) -> np.ndarray:
        """State stored at time ``t`` (exact snapshot match)."""
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > atol * max(1.0, abs(t)):
            raise ConfigError(f"no snapshot at t={t}")
        return self.states[idx]


@dataclass(frozen=True)
class QuasiEnergyPair:
    """Floquet exponents of the 2x2 system, ``Im mu1 >= Im mu2``."""

    mu1: complex
    mu2: complex
    omega: float
    branch_certified: bool = True
    pairing_residual: float = 0.0
    degenerate: bool = False
    defective: bool = False


@dataclass(frozen=True)
class DLPoint:
    """A dynamic-localization point located on the gamma axis."""

    gamma0: float
    residual: float
    omega_over_sigma: float
    kind: str = "touch"
    fidelity: Optional[float] = None
    flagged: bool = False
    note: str = ""

    @property
    def f0_over_sigma(self) -> float:
        return self.gamma0 * self.omega_over_sigma

    def to_dict(self) -> dict:
        return {
            "gamma0": self.gamma0,
            "f0_over_sigma": self.f0_over_sigma,
            "residual": self.residual,
            "omega_over_sigma": self.omega_over_sigma,
            "kind": self.kind,
            "fidelity": self.fidelity,
            "flagged": self.flagged,
            "note": self.note,
        }


def hopping_rate(lattice: LatticeSpec, n: int) -> float:
    """Hopping rate ``kappa_n`` between sites ``n`` and ``n - 1``."""
    if not 0 <= n < lattice.truncation:
        raise ConfigError(f"site index {n} outside 0..{lattice.truncation - 1}")
    law = lattice.law
    if law is HoppingLaw.HOMOGENEOUS:
        return lattice.sigma
    if law is HoppingLaw.GLAUBER_FOCK:
        return lattice.sigma * math.sqrt(n)
    if law is HoppingLaw.PSEUDO_GLAUBER_FOCK:
        return lattice.sigma * n
    return lattice.custom_hops[n]


def hopping_rates(lattice: LatticeSpec) -> np.ndarray:
    """All ``kappa_n`` for ``n = 0 .. N-1`` as an array."""
    n = np.arange(lattice.truncation, dtype=np.float64)
    law = lattice.law
    if law is HoppingLaw.HOMOGENEOUS:
        return np.full(lattice.truncation, lattice.sigma)
    if law is HoppingLaw.GLAUBER_FOCK:
        return lattice.sigma * np.sqrt(n)
    if law is HoppingLaw.PSEUDO_GLAUBER_FOCK:
        return lattice.sigma * n
    return np.asarray(lattice.custom_hops, dtype=np.float64)


def _profile_value(drive: DriveSpec, tau: float) -> float:
    s = drive.samples
    k = len(s)
    x = tau / drive.period * k
    j = min(int(x), k - 1)
    frac = x - j
    return s[j] + (s[(j + 1) % k] - s[j]) * frac


def drive_value(drive: DriveSpec, t: float) -> float:
    """Instantaneous force ``F(t)``."""
    w = drive.waveform
    if w is Waveform.DC:
        return drive.f0
    if w is Waveform.SINUSOIDAL:
        return drive.f0 * math.cos(drive.omega * t)
    tau = math.fmod(t, drive.period)
    if tau < 0:
        tau += drive.period
    if w is Waveform.SQUARE:
        return drive.f0 if tau < 0.5 * drive.period else -drive.f0
    return drive.f0 * _profile_value(drive, tau)


def drive_phase(drive: DriveSpec, t: float) -> float:
    """Accumulated phase ``int_0^t F(t') dt'``, exact for every waveform."""
    w = drive.waveform
    if w is Waveform.DC:
        return drive.f0 * t
    if w is Waveform.SINUSOIDAL:
        return drive.gamma * math.sin(drive.omega * t)
    period = drive.period
    tau = math.fmod(t, period)
    if tau < 0:
        tau += period
    if w is Waveform.SQUARE:
        half = 0.5 * period
        return drive.f0 * (tau if tau < half else period - tau)
    s = drive.samples
    k = len(s)
    dt = period / k
    x = tau / dt
    j = min(int(x), k - 1)
    u = x - j
    s0 = s[j]
    s1 = s[(j + 1) % k]
    partial = s0 * u + 0.5 * (s1 - s0) * u * u
    return drive.f0 * dt * (drive._cumulative[j] + partial)
