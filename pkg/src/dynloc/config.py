"""Run configuration: YAML files plus command-line overrides.

Every physical quantity is expressed in units of the coupling ``sigma``
(rates and forces in ``sigma``, times in ``1/sigma``); ``SCHEMA`` records the
unit of each key.  Diagnostics name the key path and, for file input, the
line it came from.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from dynloc.core import DriveSpec, HoppingLaw, LatticeSpec, Waveform
from dynloc.errors import ConfigError
from dynloc.lattice import DEFAULT_SETTINGS, IntegratorSettings
from dynloc.sweeps import DEFAULT_GAMMA_RANGE, SweepPlan

COMMANDS = ("simulate", "quasienergy", "find-dl", "anomaly", "wkb-compare", "bloch", "verify-suite")
FORMATS = ("csv", "json", "plot-data")
GAMMA_F0_RTOL = 1e-9

# key path -> (type, unit, description)
SCHEMA = {
    "command": ("str", None, "one of " + ", ".join(COMMANDS)),
    "lattice.law": ("str", None, "homogeneous | glauber-fock | pseudo-glauber-fock | custom"),
    "lattice.sigma": ("float", "rate", "coupling scale; sets the unit of every other quantity"),
    "lattice.truncation": ("int", None, "number of sites N"),
    "lattice.hops": ("list[float]", "sigma", "custom hopping table kappa_0..kappa_{N-1}"),
    "drive.waveform": ("str", None, "sinusoidal | square | dc | custom"),
    "drive.omega": ("float", "sigma", "angular frequency"),
    "drive.gamma": ("float", "dimensionless", "normalized amplitude F0/omega"),
    "drive.f0": ("float", "sigma", "force amplitude (alternative to gamma)"),
    "drive.samples": ("list[float]", "dimensionless", "one-period zero-mean profile for custom waveforms"),
    "run.cycles": ("int", "periods", "simulated drive periods"),
    "run.t_end": ("float", "1/sigma", "simulated time (overrides cycles)"),
    "run.initial_site": ("int", None, "site of the single-site initial excitation"),
    "run.workers": ("int", None, "processes used for gamma scans"),
    "run.backend": ("str", None, "cython | python"),
    "sweep.omega_over_sigma": ("list[float]", "dimensionless", "operating points omega/sigma"),
    "sweep.gamma_range": ("list[float]", "dimensionless", "[min, max, step] of gamma"),
    "sweep.verify": ("bool", None, "verify DL points on the lattice"),
    "sweep.wkb": ("bool", None, "attach the WKB overlay"),
    "integrator.rel_tol": ("float", None, "relative tolerance"),
    "integrator.abs_tol": ("float", None, "absolute tolerance"),
    "integrator.max_step": ("float", "periods", "largest step as a fraction of the period"),
    "integrator.snapshot_stride": ("int", None, "snapshots per period"),
    "output.dir": ("path", None, "output directory"),
    "output.formats": ("list[str]", None, "subset of csv, json, plot-data"),
}

SECTIONS = ("lattice", "drive", "run", "sweep", "integrator", "output")

REQUIRED = {
    "simulate": ("lattice.law", "lattice.sigma", "drive.omega", "drive.gamma|drive.f0"),
    "quasienergy": ("sweep.omega_over_sigma",),
    "find-dl": ("sweep.omega_over_sigma",),
    "anomaly": ("sweep.omega_over_sigma",),
    "wkb-compare": ("sweep.omega_over_sigma",),
    "bloch": ("drive.f0",),
    "verify-suite": (),
}


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run."""

    command: str
    lattice: LatticeSpec | None = None
    drive: DriveSpec | None = None
    sweep: SweepPlan | None = None
    output_dir: Path = Path("out")
    formats: tuple = ("csv", "json", "plot-data")
    cycles: int = 3
    t_end: float | None = None
    initial_site: int = 0
    workers: int = 1
    backend: str | None = None
    settings: IntegratorSettings = DEFAULT_SETTINGS
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def sigma(self) -> float:
        return self.lattice.sigma if self.lattice is not None else 1.0

    @property
    def duration(self) -> float:
        if self.t_end is not None:
            return self.t_end
        if self.drive is None or not self.drive.periodic:
            raise ConfigError("run.t_end is required for a dc drive")
        return self.cycles * self.drive.period

    def to_dict(self) -> dict:
        """Normalized nested mapping; ``parse_config`` of it rebuilds this config."""
        out: dict = {"command": self.command}
        if self.lattice is not None:
            lat = {"law": self.lattice.law.value, "sigma": self.lattice.sigma,
                   "truncation": self.lattice.truncation}
            if self.lattice.custom_hops is not None:
                lat["hops"] = list(self.lattice.custom_hops)
            out["lattice"] = lat
        if self.drive is not None:
            drv = {"waveform": self.drive.waveform.value, "f0": self.drive.f0}
            if self.drive.periodic:
                drv["omega"] = self.drive.omega
            if self.drive.samples is not None:
                drv["samples"] = list(self.drive.samples)
            out["drive"] = drv
        if self.sweep is not None:
            out["sweep"] = {
                "omega_over_sigma": list(self.sweep.omega_over_sigma),
                "gamma_range": list(self.sweep.gamma_range),
                "verify": self.sweep.verify_fidelity,
                "wkb": self.sweep.wkb_overlay,
            }
        run = {"cycles": self.cycles, "initial_site": self.initial_site, "workers": self.workers}
        if self.t_end is not None:
            run["t_end"] = self.t_end
        if self.backend is not None:
            run["backend"] = self.backend
        out["run"] = run
        s = self.settings
        out["integrator"] = {"rel_tol": s.rel_tol, "abs_tol": s.abs_tol, "max_step": s.max_step,
                             "snapshot_stride": s.snapshot_stride}
        out["output"] = {"dir": str(self.output_dir), "formats": list(self.formats)}
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the normalized config."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


# ------------------------------------------------------------------ loading


def _line_map(node, prefix="", out=None) -> dict:
    """Key path -> 1-based line number, from a composed YAML node tree."""
    if out is None:
        out = {}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            out[path] = key.start_mark.line + 1
            _line_map(value, path, out)
    return out


def load_yaml(text: str, origin: str = "<config>") -> tuple:
    """Parse YAML text into ``(mapping, line_map)``."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{origin}:{where} invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ConfigError(f"{origin}: top level must be a mapping")
    return data, _line_map(node)


class _Diagnostics:
    def __init__(self, origin: str, lines: dict, sources: dict):
        self.origin = origin
        self.lines = lines
        self.sources = sources
        self.problems: list = []

    def where(self, path: str) -> str:
        if path in self.sources:
            return f"{path} (from {self.sources[path]})"
        line = self.lines.get(path)
        if line is None:
            return path
        return f"{path} ({self.origin}:{line})"

    def add(self, path: str, message: str):
        self.problems.append(f"{self.where(path)}: {message}")

    def raise_if_any(self):
        if self.problems:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(self.problems))


def _flatten(data: dict, diag: _Diagnostics) -> dict:
    flat = {}
    for key, value in data.items():
        key = str(key)
        if key == "command":
            flat[key] = value
            continue
        if key not in SECTIONS:
            diag.add(key, f"unknown key (expected one of command, {', '.join(SECTIONS)})")
            continue
        if value is None:
            continue
        if not isinstance(value, dict):
            diag.add(key, "must be a mapping")
            continue
        for sub, v in value.items():
            path = f"{key}.{sub}"
            if path not in SCHEMA:
                known = sorted(p.split(".", 1)[1] for p in SCHEMA if p.startswith(key + "."))
                diag.add(path, f"unknown key (known: {', '.join(known)})")
                continue
            flat[path] = v
    return flat


def _coerce(flat: dict, diag: _Diagnostics) -> dict:
    out = {}
    for path, value in flat.items():
        kind = SCHEMA[path][0]
        try:
            out[path] = _convert(kind, value)
        except (TypeError, ValueError):
            diag.add(path, f"expected {kind}, got {value!r}")
    return out


def _convert(kind: str, value):
    if kind == "str":
        if not isinstance(value, str):
            raise TypeError
        return value
    if kind == "float":
        if isinstance(value, bool):
            raise TypeError
        x = float(value)
        if not math.isfinite(x):
            raise ValueError
        return x
    if kind == "int":
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise TypeError
        return int(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise TypeError
        return value
    if kind == "path":
        return Path(str(value))
    if kind == "list[float]":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        return tuple(_convert("float", v) for v in value)
    if kind == "list[str]":
        if isinstance(value, str):
            value = [value]
        return tuple(_convert("str", v) for v in value)
    raise TypeError(kind)


def required_keys(command: str) -> tuple:
    return ("command",) + REQUIRED.get(command, ())


def parse_config(source=None, overrides: dict | None = None, command: str | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig`.

    Parameters
    ----------
    source : str, Path, dict or None
        A YAML file path, an already-parsed mapping, or nothing.
    overrides : dict, optional
        Flat ``{"section.key": value}`` entries (from command-line flags);
        they take precedence over the file.
    command : str, optional
        Subcommand, overriding ``command`` in the file.

    Raises
    ------
    ConfigError
        Listing every problem with its key path (and line, for files).
    """
    origin = "<config>"
    lines: dict = {}
    if source is None:
        data = {}
    elif isinstance(source, dict):
        data = source
    else:
        origin = str(source)
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {origin}: {exc.strerror}") from None
        data, lines = load_yaml(text, origin)
    sources = {}
    diag = _Diagnostics(origin, lines, sources)
    flat = _flatten(data, diag)
    for path, (value, flag) in (overrides or {}).items():
        if path not in SCHEMA:
            raise ConfigError(f"unknown override {path}")
        flat[path] = value
        sources[path] = flag
    if command is not None:
        flat["command"] = command
        sources["command"] = "the command line"
    values = _coerce(flat, diag)
    diag.raise_if_any()
    return _build(values, diag)


def _missing(values: dict, command: str) -> list:
    out = []
    for key in REQUIRED[command]:
        options = key.split("|")
        if not any(k in values for k in options):
            out.append(" or ".join(options))
    return out


def _build(values: dict, diag: _Diagnostics) -> RunConfig:
    command = values.get("command")
    if command is None:
        lines = [f"{c}: {', '.join(k.replace('|', ' or ') for k in REQUIRED[c]) or '-'}" for c in COMMANDS]
        raise ConfigError(
            "missing required key: command\n  required keys per command:\n    " + "\n    ".join(lines)
        )
    if command not in COMMANDS:
        diag.add("command", f"unknown command {command!r} (expected one of {', '.join(COMMANDS)})")
        diag.raise_if_any()
    missing = _missing(values, command)
    if command == "simulate" and values.get("drive.waveform") == "dc":
        # dc drives have no frequency
        missing = [m for m in missing if m != "drive.omega"]
    if missing:
        raise ConfigError(f"missing required keys for {command}: {', '.join(missing)}")

    lattice = _lattice(values, diag, command)
    drive = _drive(values, diag, command, lattice)
    sweep = _sweep(values, diag, command)
    settings = _settings(values, diag)
    formats = values.get("output.formats", FORMATS)
    if formats == ("none",):
        formats = ()
    for f in formats:
        if f not in FORMATS:
            diag.add("output.formats", f"unknown format {f!r} (expected {', '.join(FORMATS)} or none)")
    cycles = values.get("run.cycles", 3)
    if cycles < 1:
        diag.add("run.cycles", "must be >= 1")
    t_end = values.get("run.t_end")
    if t_end is not None and t_end < 0:
        diag.add("run.t_end", "must be >= 0")
    site = values.get("run.initial_site", 0)
    if lattice is not None and not 0 <= site < lattice.truncation:
        diag.add("run.initial_site", f"must lie in 0..{lattice.truncation - 1}")
    workers = values.get("run.workers", 1)
    if workers < 1:
        diag.add("run.workers", "must be >= 1")
    backend = values.get("run.backend")
    if backend is not None and backend not in ("cython", "python"):
        diag.add("run.backend", "must be cython or python")
    if command == "simulate" and drive is not None and not drive.periodic and t_end is None:
        diag.add("run.t_end", "required for a dc drive")
    diag.raise_if_any()
    return RunConfig(
        command=command,
        lattice=lattice,
        drive=drive,
        sweep=sweep,
        output_dir=values.get("output.dir", Path("out")),
        formats=tuple(dict.fromkeys(formats)),
        cycles=cycles,
        t_end=t_end,
        initial_site=site,
        workers=workers,
        backend=backend,
        settings=settings,
        raw=values,
    )


def _lattice(values, diag, command):
    if command in ("verify-suite",) and not any(k.startswith("lattice.") for k in values):
        return None
    law = values.get("lattice.law", "pseudo-glauber-fock")
    try:
        law = HoppingLaw(law)
    except ValueError:
        diag.add("lattice.law", f"unknown hopping law {law!r}")
        return None
    try:
        return LatticeSpec(law, values.get("lattice.sigma", 1.0), values.get("lattice.truncation", 128),
                           values.get("lattice.hops"))
    except ConfigError as exc:
        diag.add("lattice", str(exc))
        return None


def _drive(values, diag, command, lattice):
    keys = [k for k in values if k.startswith("drive.")]
    if command in ("quasienergy", "find-dl", "anomaly", "wkb-compare", "verify-suite") and not keys:
        return None
    waveform = values.get("drive.waveform", "dc" if command == "bloch" else "sinusoidal")
    try:
        waveform = Waveform(waveform)
    except ValueError:
        diag.add("drive.waveform", f"unknown waveform {waveform!r}")
        return None
    if command == "bloch" and waveform is not Waveform.DC:
        diag.add("drive.waveform", "the bloch command needs a dc drive")
        return None
    gamma = values.get("drive.gamma")
    f0 = values.get("drive.f0")
    omega = values.get("drive.omega", 1.0)
    if waveform is Waveform.DC:
        if gamma is not None:
            diag.add("drive.gamma", "gamma = F0/omega is undefined for a dc drive; give drive.f0")
            return None
        if "drive.omega" in values:
            diag.add("drive.omega", "a dc drive has no frequency")
            return None
    elif gamma is not None and f0 is not None:
        if abs(gamma * omega - f0) > GAMMA_F0_RTOL * max(abs(f0), 1e-300):
            diag.add("drive.f0", f"inconsistent with drive.gamma * drive.omega = {gamma * omega:.12g}")
            return None
    elif gamma is not None:
        f0 = gamma * omega
    if f0 is None:
        f0 = 0.0
    try:
        return DriveSpec(waveform, f0, omega, values.get("drive.samples"))
    except ConfigError as exc:
        diag.add("drive", str(exc))
        return None


def _sweep(values, diag, command):
    if command not in ("quasienergy", "find-dl", "anomaly", "wkb-compare"):
        return None
    default_range = DEFAULT_GAMMA_RANGE if command != "anomaly" else (0.0, 20.0, 0.01)
    try:
        return SweepPlan(
            omega_over_sigma=values["sweep.omega_over_sigma"],
            gamma_range=values.get("sweep.gamma_range", default_range),
            verify_fidelity=values.get("sweep.verify", False),
            wkb_overlay=values.get("sweep.wkb", True),
            waveform=values.get("drive.waveform", "sinusoidal"),
            samples=values.get("drive.samples"),
        )
    except (ConfigError, ValueError) as exc:
        diag.add("sweep", str(exc))
        return None


def _settings(values, diag):
    kwargs = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("integrator.")}
    try:
        return IntegratorSettings(**kwargs)
    except ConfigError as exc:
        diag.add("integrator", str(exc))
        return DEFAULT_SETTINGS
