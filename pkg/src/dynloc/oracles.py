"""Closed-form references that do not touch the integrators.

Bessel ``J0`` and its roots, the low-frequency (WKB) quasi-energy, the
dc-force solution of the 2x2 operator system with its Bloch period, the
PT-phase classifier and the Glauber-Fock displacement coefficient.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize

from dynloc.core import DriveSpec, Waveform, drive_phase, drive_value
from dynloc.errors import ConfigError

# below this |x| the power series is summed exactly; above, Hankel's expansion
# truncated at its smallest term is accurate to ~exp(-2|x|)
_SERIES_LIMIT = 25.0
_SERIES_CUTOFF = Fraction(1, 10**22)


class TurningPointError(ConfigError):
    """The WKB formula was asked for a drive with ``|F(t)| >= 2 sigma``."""

    def __init__(self, time: float, force: float, sigma: float):
        self.time = float(time)
        super().__init__(
            f"turning point: |F(t)| = {abs(force):.6g} >= 2 sigma = {2 * sigma:.6g} at t = {time:.6g}"
        )


def _j0_series(x: float) -> float:
    # exact rational summation avoids the cancellation of the alternating series
    z = Fraction(x) ** 2 / 4
    term = Fraction(1)
    total = Fraction(1)
    k = 0
    while True:
        k += 1
        term = -term * z / (k * k)
        total += term
        if k > z and abs(term) < _SERIES_CUTOFF:
            return float(total)


def _j0_asymptotic(x: float) -> float:
    # Hankel: J0 = sqrt(2/(pi x)) (P cos chi - Q sin chi), chi = x - pi/4; q holds -Q
    p = 0.0
    q = 0.0
    term = 1.0
    k = 0
    prev = math.inf
    while True:
        # term_k = a_k / x^k with a_k = prod_{j=1..k} (-(2j-1)^2) / (k! 8^k)
        mag = abs(term)
        if mag > prev or mag < 1e-18:
            break
        prev = mag
        if k % 2 == 0:
            p += term if (k // 2) % 2 == 0 else -term
        else:
            q += term if (k // 2) % 2 == 0 else -term
        k += 1
        term *= (2 * k - 1) ** 2 / (k * 8.0 * x)
    chi = x - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) + q * math.sin(chi))


def bessel_j0(x: float) -> float:
    """Bessel function of the first kind, order zero (absolute error <= 1e-12)."""
    x = abs(float(x))
    if not math.isfinite(x):
        raise ConfigError("bessel_j0 needs a finite argument")
    if x <= _SERIES_LIMIT:
        return _j0_series(x)
    return _j0_asymptotic(x)


def j0_roots(k: int) -> list:
    """First ``k`` positive zeros of ``J0``, bracketed around McMahon's estimate."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    roots = []
    for m in range(1, k + 1):
        beta = (m - 0.25) * math.pi
        guess = beta + 1.0 / (8 * beta)
        lo, hi = guess - 0.4, guess + 0.4
        roots.append(optimize.brentq(bessel_j0, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


# --------------------------------------------------------------------- WKB


def wkb_quasi_energy(drive: DriveSpec, sigma: float) -> tuple:
    """Low-frequency quasi-energies ``(mu1, -mu1)`` with ``Im mu1 >= 0``.

    Valid only without turning points, i.e. ``|F(t)| < 2 sigma`` over the cycle.

    Raises
    ------
    TurningPointError
        If the drive reaches ``2 sigma`` somewhere in the period.
    """
    if not drive.periodic:
        raise ConfigError("WKB quasi-energies need a periodic drive")
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    period = drive.period
    peak, t_peak = _peak_force(drive)
    if peak >= 2 * sigma:
        raise TurningPointError(t_peak, peak, sigma)
    points = [0.5 * period] if drive.waveform is Waveform.SQUARE else None
    val, _ = integrate.quad(
        lambda t: math.sqrt(sigma**2 - 0.25 * drive_value(drive, t) ** 2),
        0.0, period, epsabs=1e-13, epsrel=1e-13, limit=1000, points=points,
    )
    mu1 = 1j * val / period
    return mu1, -mu1


def _peak_force(drive: DriveSpec) -> tuple:
    """Largest ``|F(t)|`` over a period and the first time it is attained."""
    if drive.waveform in (Waveform.SINUSOIDAL, Waveform.SQUARE):
        return drive.f0, 0.0
    s = np.abs(np.asarray(drive.samples))
    j = int(np.argmax(s))
    return drive.f0 * float(s[j]), drive.period * j / s.size


# ------------------------------------------------------------ dc solution


class PtLabel(str, Enum):
    BROKEN = "broken"
    UNBROKEN = "unbroken"
    EXCEPTIONAL = "exceptional"


@dataclass(frozen=True)
class PtPhase:
    phase: PtLabel
    lam: complex


def pt_lambda(f0: float, sigma: float) -> complex:
    """``sqrt((f0/2)^2 - sigma^2)``, taken as ``i|.|`` below threshold."""
    q = 0.25 * f0 * f0 - sigma * sigma
    return complex(math.sqrt(q), 0.0) if q >= 0 else complex(0.0, math.sqrt(-q))


def pt_phase(f0: float, sigma: float, rtol: float = 1e-12) -> PtPhase:
    """Classify the constant-force 2x2 matrix: PT broken below ``f0 = 2 sigma``."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    if abs(f0 - 2 * sigma) <= rtol * 2 * sigma:
        return PtPhase(PtLabel.EXCEPTIONAL, 0j)
    lam = pt_lambda(f0, sigma)
    return PtPhase(PtLabel.UNBROKEN if f0 > 2 * sigma else PtLabel.BROKEN, lam)


def _cos_and_sinc(q: float, t: float) -> tuple:
    """``cos(lam t)`` and ``sin(lam t)/lam`` for ``lam^2 = q`` of either sign."""
    x = q * t * t
    if abs(x) < 1e-3:
        # removable singularity at the exceptional point
        c = 1 - x / 2 + x * x / 24 - x**3 / 720 + x**4 / 40320
        s = t * (1 - x / 6 + x * x / 120 - x**3 / 5040 + x**4 / 362880)
        return c, s
    if q > 0:
        lam = math.sqrt(q)
        return math.cos(lam * t), math.sin(lam * t) / lam
    kap = math.sqrt(-q)
    return math.cosh(kap * t), math.sinh(kap * t) / kap


def dc_evolution_coefficients(f0: float, sigma: float, t: float) -> tuple:
    """Coefficients ``(alpha, beta)`` of ``a_h(t) = alpha a + beta b^dagger`` for a dc force."""
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    q = 0.25 * f0 * f0 - sigma * sigma
    c, s = _cos_and_sinc(q, t)
    alpha = complex(c, -0.5 * f0 * s)
    beta = complex(0.0, sigma * s)
    return alpha, beta


def dc_edge_return_probability(f0: float, sigma: float, t: float) -> float:
    """``|c_0(t)|^2`` of the pseudo Glauber-Fock lattice started at the edge, dc force.

    The edge state is the two-mode vacuum, so the return probability is
    ``1/|alpha(t)|^2``.
    """
    alpha, _ = dc_evolution_coefficients(f0, sigma, t)
    return 1.0 / abs(alpha) ** 2


def bloch_period(f0: float, sigma: float) -> float:
    """Self-imaging period ``pi / sqrt((f0/2)^2 - sigma^2)`` of the unbroken phase."""
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    q = 0.25 * f0 * f0 - sigma * sigma
    if f0 <= 2 * sigma or q <= 0:
        raise ConfigError(
            f"no Bloch period for f0={f0:g} <= 2 sigma={2 * sigma:g} (PT-broken or exceptional)"
        )
    return math.pi / math.sqrt(q)


# ---------------------------------------------------------- Glauber-Fock


def gf_heisenberg_coefficient(drive: DriveSpec, sigma: float, t: float) -> tuple:
    """``(exp(-i phi(t)), i sigma int_0^t exp(i phi) dt')`` for the Glauber-Fock lattice."""
    if t < 0:
        raise ConfigError("t must be >= 0")
    factor = cmath.exp(-1j * drive_phase(drive, t))
    if t == 0 or sigma == 0:
        return factor, 0j
    points = None
    if drive.periodic:
        period = drive.period
        marks = [period * k for k in range(1, int(t / period) + 1) if period * k < t]
        if drive.waveform is Waveform.SQUARE:
            marks += [period * (k + 0.5) for k in range(int(t / period) + 1) if period * (k + 0.5) < t]
        points = sorted(marks) or None
    opts = dict(epsabs=1e-12, epsrel=1e-12, limit=2000, points=points)
    re, _ = integrate.quad(lambda s: math.cos(drive_phase(drive, s)), 0.0, t, **opts)
    im, _ = integrate.quad(lambda s: math.sin(drive_phase(drive, s)), 0.0, t, **opts)
    return factor, 1j * sigma * complex(re, im)
