"""Parameter studies: quasi-energy curves over gamma and the first-DL anomaly curve."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from dynloc.core import DLPoint, Waveform
from dynloc.errors import ConfigError, DynlocError
from dynloc.floquet import (
    MONODROMY_SETTINGS,
    DriveFamily,
    GammaScan,
    find_dl_points,
    gamma_grid,
    scan_gamma,
    verify_dl_point,
)
from dynloc.lattice import IntegratorSettings
from dynloc.oracles import TurningPointError, wkb_quasi_energy

log = logging.getLogger(__name__)

DEFAULT_OPERATING_POINTS = (5.0, 1.0, 0.4, 0.2)
DEFAULT_GAMMA_RANGE = (0.0, 8.0, 0.01)


@dataclass(frozen=True)
class SweepPlan:
    """Operating points ``omega/sigma`` and the gamma grid ``(min, max, step)``."""

    omega_over_sigma: tuple = DEFAULT_OPERATING_POINTS
    gamma_range: tuple = DEFAULT_GAMMA_RANGE
    verify_fidelity: bool = False
    wkb_overlay: bool = True
    waveform: Waveform = Waveform.SINUSOIDAL
    samples: tuple | None = None

    def __post_init__(self):
        points = tuple(float(x) for x in self.omega_over_sigma)
        if not points:
            raise ConfigError("sweep needs at least one omega/sigma operating point")
        if any(not (x > 0 and math.isfinite(x)) for x in points):
            raise ConfigError("omega/sigma operating points must be positive")
        object.__setattr__(self, "omega_over_sigma", points)
        if len(self.gamma_range) != 3:
            raise ConfigError("gamma_range must be (min, max, step)")
        lo, hi, step = (float(x) for x in self.gamma_range)
        if not step > 0:
            raise ConfigError("gamma step must be > 0")
        if lo < 0 or hi < lo:
            raise ConfigError("gamma_range needs 0 <= min <= max")
        object.__setattr__(self, "gamma_range", (lo, hi, step))
        object.__setattr__(self, "waveform", Waveform(self.waveform))
        if self.waveform is Waveform.DC:
            raise ConfigError("a quasi-energy sweep needs a periodic waveform")
        if self.samples is not None:
            object.__setattr__(self, "samples", tuple(float(x) for x in self.samples))

    @property
    def gammas(self) -> np.ndarray:
        return gamma_grid(*self.gamma_range)


@dataclass(frozen=True)
class CurveResult:
    """Samples of one operating point.

    ``wkb`` holds ``Im mu1`` of the WKB estimate and is NaN where the drive
    has turning points (or when no overlay was requested).
    """

    omega_over_sigma: float
    gammas: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    trace_abs: np.ndarray
    dl_points: tuple = ()
    wkb: np.ndarray | None = None
    error: str | None = None

    @property
    def fidelities(self) -> list:
        return [p.fidelity for p in self.dl_points]

    def rows(self):
        """``(gamma, Re mu1, Im mu1, Re mu2, Im mu2, |tr U|)`` per grid point."""
        for k, g in enumerate(self.gammas):
            yield (float(g), self.mu1[k].real, self.mu1[k].imag, self.mu2[k].real, self.mu2[k].imag,
                   float(self.trace_abs[k]))

    def to_dict(self) -> dict:
        return {
            "omega_over_sigma": self.omega_over_sigma,
            "gamma": self.gammas.tolist(),
            "re_mu1": self.mu1.real.tolist(),
            "im_mu1": self.mu1.imag.tolist(),
            "re_mu2": self.mu2.real.tolist(),
            "im_mu2": self.mu2.imag.tolist(),
            "trace_abs": self.trace_abs.tolist(),
            "wkb_im_mu1": None if self.wkb is None else [None if math.isnan(x) else x for x in self.wkb],
            "dl_points": [p.to_dict() for p in self.dl_points],
            "error": self.error,
        }


@dataclass(frozen=True)
class SweepResult:
    plan: SweepPlan
    sigma: float
    curves: tuple = field(default_factory=tuple)

    def curve(self, omega_over_sigma: float) -> CurveResult:
        for c in self.curves:
            if c.omega_over_sigma == omega_over_sigma:
                return c
        raise KeyError(omega_over_sigma)

    @property
    def failures(self) -> dict:
        return {c.omega_over_sigma: c.error for c in self.curves if c.error}

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "gamma_range": list(self.plan.gamma_range),
            "waveform": self.plan.waveform.value,
            "curves": [c.to_dict() for c in self.curves],
        }


def wkb_overlay(family: DriveFamily, gammas) -> np.ndarray:
    """``Im mu1`` from the WKB formula, NaN where turning points occur."""
    out = np.full(len(gammas), np.nan)
    for k, g in enumerate(gammas):
        try:
            out[k] = wkb_quasi_energy(family.drive(float(g)), family.sigma)[0].imag
        except TurningPointError:
            pass
    return out


def _empty_curve(point, gammas, error):
    nan = np.full(len(gammas), complex(np.nan, np.nan))
    return CurveResult(point, gammas, nan, nan.copy(), np.full(len(gammas), np.nan), error=error)


def _curve(plan: SweepPlan, point: float, sigma: float, settings, backend, workers) -> CurveResult:
    family = DriveFamily(point, sigma, plan.waveform, plan.samples)
    gammas = plan.gammas
    scan: GammaScan = scan_gamma(family, gammas, settings, backend, workers)
    points: list = []
    if gammas.size > 1:
        points = find_dl_points(
            sigma, family.omega, float(gammas[-1]), plan.gamma_range[2],
            waveform=plan.waveform, samples=plan.samples, gamma_min=float(gammas[0]),
            settings=settings, backend=backend, scan=scan,
        )
    if plan.verify_fidelity:
        points = [verify_dl_point(p, family, backend=backend) for p in points]
    wkb = wkb_overlay(family, gammas) if plan.wkb_overlay else None
    return CurveResult(point, gammas, scan.mu1, scan.mu2, np.abs(scan.trace), tuple(points), wkb)


def run_quasi_energy_sweep(plan: SweepPlan, sigma: float = 1.0,
                           settings: IntegratorSettings = MONODROMY_SETTINGS,
                           backend: str | None = None, workers: int = 1) -> SweepResult:
    """Quasi-energy curves, DL points and WKB overlay for every operating point.

    A failure at one operating point is recorded on its curve and does not
    stop the others.
    """
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    curves = []
    for point in plan.omega_over_sigma:
        try:
            curves.append(_curve(plan, point, sigma, settings, backend, workers))
        except DynlocError as exc:
            log.warning("operating point omega/sigma=%g failed: %s", point, exc)
            curves.append(_empty_curve(point, plan.gammas, f"{type(exc).__name__}: {exc}"))
    return SweepResult(plan, float(sigma), tuple(curves))


@dataclass(frozen=True)
class AnomalyEntry:
    """First DL point at one ``omega/sigma``; ``gamma0`` is None when none lies below the bound."""

    omega_over_sigma: float
    gamma0: float | None
    gamma_max: float
    point: DLPoint | None = None

    @property
    def found(self) -> bool:
        return self.gamma0 is not None

    @property
    def f0_over_sigma(self) -> float | None:
        return None if self.gamma0 is None else self.gamma0 * self.omega_over_sigma

    def to_dict(self) -> dict:
        return {
            "omega_over_sigma": self.omega_over_sigma,
            "gamma0": self.gamma0,
            "f0_over_sigma": self.f0_over_sigma,
            "found": self.found,
            "gamma_max": self.gamma_max,
        }


def anomaly_curve(omega_over_sigma_list, gamma_max: float, grid: float = 0.01, sigma: float = 1.0,
                  settings: IntegratorSettings = MONODROMY_SETTINGS, backend: str | None = None,
                  workers: int = 1) -> list:
    """First DL point ``Gamma0`` and the force ``F0/sigma = Gamma0 omega/sigma`` per operating point."""
    points = [float(x) for x in omega_over_sigma_list]
    if not points:
        raise ConfigError("anomaly_curve needs at least one operating point")
    if any(not x > 0 for x in points):
        raise ConfigError("omega/sigma operating points must be positive")
    out = []
    for point in points:
        found = find_dl_points(sigma, point * sigma, gamma_max, grid, settings=settings,
                               backend=backend, workers=workers)
        first = found[0] if found else None
        out.append(AnomalyEntry(point, None if first is None else first.gamma0, float(gamma_max), first))
    return out
