"""Command-line entry point ``dynloc``.

Subcommands: simulate, quasienergy, find-dl, anomaly, wkb-compare, bloch,
verify-suite.  Settings come from ``--config FILE`` (YAML) and are
overridden by flags.

Exit codes
----------
0  success
1  verification failure (verify-suite) or other library error
2  configuration error (bad flags, unknown keys, inconsistent values)
3  truncation failure (probability reached the lattice edge)
4  accuracy failure (norm drift or monodromy determinant certificate)
5  output could not be written
"""
from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from dynloc import __version__
from dynloc.config import COMMANDS, RunConfig, parse_config
from dynloc.core import DriveSpec, LatticeSpec, Waveform
from dynloc.errors import ConfigError, DynlocError
from dynloc.floquet import MONODROMY_SETTINGS, DriveFamily, find_dl_points, scan_gamma
from dynloc.lattice import evolve, fidelity_series, revival_fidelity, spectrum_deviation
from dynloc.oracles import (
    PtLabel,
    TurningPointError,
    bloch_period,
    dc_edge_return_probability,
    pt_phase,
    wkb_quasi_energy,
)
from dynloc.output import Report, Table, emit_outputs
from dynloc.sweeps import anomaly_curve, run_quasi_energy_sweep

log = logging.getLogger("dynloc")

EXIT_OK = 0
EXIT_FAILED = 1


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _formats(text: str) -> tuple:
    return tuple(x for x in text.replace(" ", "").split(",") if x)


# flag dest -> config key path
FLAG_KEYS = {
    "lattice": ("lattice.law", "--lattice"),
    "sigma": ("lattice.sigma", "--sigma"),
    "truncation": ("lattice.truncation", "--truncation"),
    "waveform": ("drive.waveform", "--waveform"),
    "omega": ("drive.omega", "--omega"),
    "gamma": ("drive.gamma", "--gamma"),
    "f0": ("drive.f0", "--f0"),
    "cycles": ("run.cycles", "--cycles"),
    "t_end": ("run.t_end", "--t-end"),
    "site": ("run.initial_site", "--site"),
    "workers": ("run.workers", "--workers"),
    "backend": ("run.backend", "--backend"),
    "gamma_range": ("sweep.gamma_range", "--gamma-range"),
    "omega_over_sigma": ("sweep.omega_over_sigma", "--omega-over-sigma"),
    "verify": ("sweep.verify", "--verify"),
    "out": ("output.dir", "--out"),
    "format": ("output.formats", "--format"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="YAML run configuration")
    g = common.add_argument_group("lattice")
    g.add_argument("--lattice", metavar="LAW",
                   help="homogeneous | glauber-fock | pseudo-glauber-fock")
    g.add_argument("--sigma", type=float, help="coupling scale sigma")
    g.add_argument("--truncation", type=int, metavar="N", help="number of sites")
    g = common.add_argument_group("drive (units of sigma)")
    g.add_argument("--waveform", help="sinusoidal | square | dc")
    g.add_argument("--omega", type=float, help="angular frequency")
    g.add_argument("--gamma", type=float, help="normalized amplitude F0/omega")
    g.add_argument("--f0", type=float, help="force amplitude (alternative to --gamma)")
    g = common.add_argument_group("run")
    g.add_argument("--cycles", type=int, help="drive periods to simulate")
    g.add_argument("--t-end", type=float, dest="t_end", help="simulated time in 1/sigma")
    g.add_argument("--site", type=int, help="initially excited site")
    g.add_argument("--workers", type=int, help="processes for gamma scans")
    g.add_argument("--backend", choices=("cython", "python"), help="integration kernels")
    g = common.add_argument_group("sweeps")
    g.add_argument("--gamma-range", type=_floats, dest="gamma_range", metavar="MIN,MAX,STEP")
    g.add_argument("--omega-over-sigma", type=_floats, dest="omega_over_sigma", metavar="W1,W2,...")
    g.add_argument("--verify", action="store_const", const=True, default=None,
                   help="verify DL points on the lattice")
    g = common.add_argument_group("output")
    g.add_argument("--out", metavar="DIR", help="output directory")
    g.add_argument("--format", type=_formats, metavar="LIST",
                   help="comma list of csv, json, plot-data, or 'none'")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="dynloc", description="Dynamic localization toolkit.")
    parser.add_argument("--version", action="version", version=f"dynloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "simulate": "integrate the lattice and report revivals",
        "quasienergy": "quasi-energy curves over gamma",
        "find-dl": "locate DL points",
        "anomaly": "first DL point versus omega/sigma",
        "wkb-compare": "WKB versus exact quasi-energies below the turning-point threshold",
        "bloch": "dc force: PT phase, Bloch period and lattice revival",
        "verify-suite": "run the acceptance battery",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "verify-suite":
            p.add_argument("--criteria", type=_floats, metavar="K1,K2,...",
                           help="run only these criteria")
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {}
    for dest, (path, flag) in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[path] = (value, flag)
    return parse_config(args.config, overrides, command=args.command)


# ----------------------------------------------------------------- commands


def _floquet_settings(config: RunConfig):
    if any(k.startswith("integrator.") for k in config.raw):
        return config.settings
    return MONODROMY_SETTINGS


def _tag(x: float) -> str:
    return f"w{x:g}"


def cmd_simulate(config: RunConfig) -> Report:
    lattice, drive = config.lattice, config.drive
    psi = np.zeros(lattice.truncation, dtype=complex)
    psi[config.initial_site] = 1.0
    traj = evolve(lattice, drive, config.duration, psi, config.settings, backend=config.backend)
    amp = np.abs(traj.states)
    site = config.initial_site
    rep = Report("simulate")
    rep.tables["trajectory"] = Table(
        ("t", "n", "re_c", "im_c", "prob"),
        [(t, n, traj.states[k, n].real, traj.states[k, n].imag, amp[k, n] ** 2)
         for k, t in enumerate(traj.times) for n in range(amp.shape[1])],
    )
    rep.plots["intensity"] = Table(
        ("t", "n", "abs_c"), [(t, n, amp[k, n]) for k, t in enumerate(traj.times) for n in range(amp.shape[1])]
    )
    rep.plots["return"] = Table(("t", f"prob_{site}"), list(zip(traj.times, amp[:, site] ** 2)))
    fid = fidelity_series(traj)
    doc = {
        "lattice": {"law": traj.lattice.law.value, "sigma": traj.lattice.sigma,
                    "truncation": traj.lattice.truncation},
        "drive": {"waveform": drive.waveform.value, "f0": drive.f0,
                  "omega": drive.omega if drive.periodic else None},
        "t_end": float(traj.times[-1]),
        "steps": traj.steps,
        "max_edge_occupation": traj.max_edge_occupation,
        "norm_drift": float(np.max(np.abs(traj.norms - traj.norms[0]))),
    }
    rep.summary.append(
        f"{traj.lattice.law.value} lattice, N={traj.lattice.truncation}, t_end={traj.times[-1]:.6g}, "
        f"{traj.steps} steps, max edge occupation {traj.max_edge_occupation:.2e}"
    )
    if drive.periodic:
        cycles = int(math.floor(traj.times[-1] / drive.period * (1 + 1e-12)))
        if cycles >= 1:
            fids = revival_fidelity(traj, drive.period, cycles)
            spec = spectrum_deviation(traj, drive.period, cycles)
            rets = [float(np.abs(traj.at(l * drive.period)[site]) ** 2) for l in range(1, cycles + 1)]
            rep.tables["revival"] = Table(
                ("cycle", "t", "fidelity", "return_prob", "spectrum_deviation"),
                [(l, l * drive.period, fids[l - 1], rets[l - 1], spec[l - 1]) for l in range(1, cycles + 1)],
            )
            doc["revivals"] = [
                {"cycle": l, "fidelity": fids[l - 1], "return_prob": rets[l - 1],
                 "spectrum_deviation": spec[l - 1]} for l in range(1, cycles + 1)
            ]
            rep.summary += [f"cycle {l}: fidelity {fids[l - 1]:.6f}, |c_{site}|^2 {rets[l - 1]:.6f}"
                            for l in range(1, cycles + 1)]
    doc["final_fidelity"] = float(fid[-1])
    rep.document = doc
    return rep


def cmd_quasienergy(config: RunConfig) -> Report:
    result = run_quasi_energy_sweep(config.sweep, config.sigma, _floquet_settings(config),
                                    backend=config.backend, workers=config.workers)
    rep = Report("quasienergy", document=result.to_dict())
    for curve in result.curves:
        tag = _tag(curve.omega_over_sigma)
        rep.tables[f"quasienergy_{tag}"] = Table(
            ("gamma", "re_mu1", "im_mu1", "re_mu2", "im_mu2", "trace_abs"), list(curve.rows())
        )
        rep.plots[f"quasienergy_{tag}"] = Table(("gamma", "im_mu1"), list(zip(curve.gammas, curve.mu1.imag)))
        if curve.wkb is not None and np.any(np.isfinite(curve.wkb)):
            ok = np.isfinite(curve.wkb)
            rep.plots[f"wkb_{tag}"] = Table(("gamma", "im_mu1_wkb"), list(zip(curve.gammas[ok], curve.wkb[ok])))
        if curve.error:
            rep.summary.append(f"omega/sigma={curve.omega_over_sigma:g}: FAILED {curve.error}")
            continue
        first = f"{curve.dl_points[0].gamma0:.6f}" if curve.dl_points else "none in range"
        rep.summary.append(f"omega/sigma={curve.omega_over_sigma:g}: {curve.gammas.size} samples, "
                           f"first DL point {first}")
    if result.failures:
        rep.document["failures"] = {str(k): v for k, v in result.failures.items()}
    return rep


def _dl_rows(points):
    return [(p.omega_over_sigma, p.gamma0, p.f0_over_sigma, p.residual, p.kind,
             "" if p.fidelity is None else p.fidelity, p.flagged, p.note) for p in points]


def cmd_find_dl(config: RunConfig) -> Report:
    plan = config.sweep
    lo, hi, step = plan.gamma_range
    if hi <= 0:
        raise ConfigError("sweep.gamma_range: max must be > 0 for find-dl")
    found = []
    for x in plan.omega_over_sigma:
        pts = find_dl_points(config.sigma, x * config.sigma, hi, step, waveform=plan.waveform,
                             samples=plan.samples, gamma_min=lo, settings=_floquet_settings(config),
                             verify=plan.verify_fidelity, backend=config.backend, workers=config.workers)
        found += pts
    rep = Report("dl_points", document={"dl_points": [p.to_dict() for p in found]})
    rep.tables["dl_points"] = Table(
        ("omega_over_sigma", "gamma0", "f0_over_sigma", "residual", "kind", "fidelity", "flagged", "note"),
        _dl_rows(found),
    )
    rep.plots["dl_points"] = Table(("omega_over_sigma", "gamma0"), [(p.omega_over_sigma, p.gamma0) for p in found])
    for x in plan.omega_over_sigma:
        pts = [p for p in found if p.omega_over_sigma == x]
        listed = ", ".join(f"{p.gamma0:.6f}{' (flagged)' if p.flagged else ''}" for p in pts) or "none"
        rep.summary.append(f"omega/sigma={x:g}: {listed}")
    return rep


def cmd_anomaly(config: RunConfig) -> Report:
    plan = config.sweep
    _, hi, step = plan.gamma_range
    entries = anomaly_curve(plan.omega_over_sigma, hi, step, config.sigma, _floquet_settings(config),
                            backend=config.backend, workers=config.workers)
    rep = Report("anomaly", document={"entries": [e.to_dict() for e in entries]})
    rep.tables["anomaly"] = Table(
        ("omega_over_sigma", "gamma0", "f0_over_sigma", "found", "gamma_max"),
        [(e.omega_over_sigma, "" if e.gamma0 is None else e.gamma0,
          "" if e.gamma0 is None else e.f0_over_sigma, e.found, e.gamma_max) for e in entries],
    )
    rep.plots["anomaly"] = Table(("omega_over_sigma", "gamma0"),
                                 [(e.omega_over_sigma, e.gamma0) for e in entries if e.found])
    for e in entries:
        if e.found:
            rep.summary.append(f"omega/sigma={e.omega_over_sigma:g}: gamma0={e.gamma0:.6f}, "
                               f"F0/sigma={e.f0_over_sigma:.6f}")
        else:
            rep.summary.append(f"omega/sigma={e.omega_over_sigma:g}: not found below gamma={e.gamma_max:g}")
    return rep


def cmd_wkb_compare(config: RunConfig) -> Report:
    plan = config.sweep
    lo, hi, step = plan.gamma_range
    rep = Report("wkb_compare")
    doc = {"curves": []}
    for x in plan.omega_over_sigma:
        family = DriveFamily(x, config.sigma, plan.waveform, plan.samples)
        gammas = plan.gammas
        rows = []
        for g in gammas:
            try:
                w = wkb_quasi_energy(family.drive(float(g)), config.sigma)[0]
            except TurningPointError:
                continue
            rows.append((float(g), w.imag))
        if not rows:
            rep.summary.append(f"omega/sigma={x:g}: every grid point has turning points")
            continue
        scan = scan_gamma(family, [r[0] for r in rows], _floquet_settings(config), config.backend,
                          config.workers)
        table = []
        for (g, w), mu in zip(rows, scan.mu1):
            dev = abs(w - mu.imag) / abs(mu.imag) if mu.imag != 0 else math.inf
            table.append((g, mu.imag, w, dev))
        worst = max(table, key=lambda r: r[3])
        tag = _tag(x)
        rep.tables[f"wkb_{tag}"] = Table(("gamma", "im_mu1_exact", "im_mu1_wkb", "rel_dev"), table)
        rep.plots[f"wkb_{tag}"] = Table(("gamma", "im_mu1_exact", "im_mu1_wkb"), [r[:3] for r in table])
        doc["curves"].append({"omega_over_sigma": x, "points": len(table), "max_rel_dev": worst[3],
                              "at_gamma": worst[0]})
        rep.summary.append(f"omega/sigma={x:g}: {len(table)} points with F0 < 2 sigma, "
                           f"max relative deviation {worst[3]:.4f} at gamma={worst[0]:g}")
    rep.document = doc
    return rep


def cmd_bloch(config: RunConfig) -> Report:
    drive, sigma = config.drive, config.sigma
    phase = pt_phase(drive.f0, sigma)
    doc = {"f0": drive.f0, "sigma": sigma, "phase": phase.phase.value,
           "lambda": {"re": phase.lam.real, "im": phase.lam.imag}}
    rep = Report("bloch")
    rep.summary.append(f"F0={drive.f0:g}, sigma={sigma:g}: PT {phase.phase.value}, lambda={phase.lam:.6g}")
    tb = None
    if phase.phase is PtLabel.UNBROKEN:
        tb = bloch_period(drive.f0, sigma)
        doc["bloch_period"] = tb
        rep.summary.append(f"Bloch period pi/lambda = {tb:.8g}")
    t_end = config.t_end if config.t_end is not None else (2 * tb if tb else 3.0 / sigma)
    lattice = config.lattice or LatticeSpec("pseudo-glauber-fock", sigma)
    if lattice.law.value != "pseudo-glauber-fock":
        raise ConfigError("lattice.law: the bloch command uses the pseudo-glauber-fock lattice")
    psi = np.zeros(lattice.truncation, dtype=complex)
    psi[0] = 1.0
    dense = np.linspace(0.0, t_end, 2001)
    traj = evolve(lattice, DriveSpec(Waveform.DC, drive.f0), t_end, psi, config.settings,
                  extra_times=dense, backend=config.backend)
    ret = np.abs(traj.states[:, 0]) ** 2
    exact = np.array([dc_edge_return_probability(drive.f0, sigma, t) for t in traj.times])
    rep.tables["bloch"] = Table(("t", "return_prob", "return_prob_exact"), list(zip(traj.times, ret, exact)))
    rep.plots["bloch"] = Table(("t", "return_prob"), list(zip(traj.times, ret)))
    doc["max_deviation_from_closed_form"] = float(np.max(np.abs(ret - exact)))
    doc["t_end"] = t_end
    if tb is not None and t_end >= tb:
        j = int(np.argmin(np.abs(traj.times - tb)))
        doc["return_prob_at_bloch_period"] = float(ret[j])
        rep.summary.append(f"lattice |c_0(T_B)|^2 = {ret[j]:.8f}")
    rep.summary.append(f"lattice vs closed form: max deviation {doc['max_deviation_from_closed_form']:.2e}")
    rep.document = doc
    return rep


HANDLERS = {
    "simulate": cmd_simulate,
    "quasienergy": cmd_quasienergy,
    "find-dl": cmd_find_dl,
    "anomaly": cmd_anomaly,
    "wkb-compare": cmd_wkb_compare,
    "bloch": cmd_bloch,
}


def run_verify_suite(config: RunConfig, only=None) -> tuple:
    from dynloc.acceptance import run_all

    results = run_all(backend=config.backend, only=only, report=lambda r: print(r.line, flush=True))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    rep = Report("verify_suite", document={"criteria": [
        {"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail,
         "seconds": r.seconds, "budget": r.budget} for r in results]})
    rep.tables["verify_suite"] = Table(
        ("criterion", "title", "passed", "seconds", "budget", "detail"),
        [(r.number, r.title, r.passed, r.seconds, r.budget, r.detail) for r in results],
    )
    return rep, all(r.passed for r in results)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        config = config_from_args(args)
        ok = True
        if config.command == "verify-suite":
            only = {int(k) for k in args.criteria} if args.criteria else None
            report, ok = run_verify_suite(config, only)
        else:
            report = HANDLERS[config.command](config)
            for line in report.summary:
                print(line)
        for path in emit_outputs(report, config):
            print(f"wrote {path}")
        return EXIT_OK if ok else EXIT_FAILED
    except DynlocError as exc:
        print(f"dynloc: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
