"""Compare the compiled and pure-Python integration kernels.

Times a lattice evolution and a monodromy computation on each available
backend and reports the speed-up and the largest result difference.

Usage: ``python benchmarks/bench_kernels.py [--repeat 3] [--sites 128]``
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from dynloc import _backend
from dynloc.core import DriveSpec, HoppingLaw, LatticeSpec, Waveform
from dynloc.floquet import monodromy
from dynloc.lattice import evolve


def best_of(repeat: int, fn):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--sites", type=int, default=128)
    parser.add_argument("--cycles", type=int, default=1)
    args = parser.parse_args(argv)

    lattice = LatticeSpec(HoppingLaw.PSEUDO_GLAUBER_FOCK, 1.0, args.sites)
    drive = DriveSpec.from_gamma(Waveform.SINUSOIDAL, 3.353, 1.0)
    cases = {
        f"lattice N={args.sites}, {args.cycles} period(s)":
            lambda b: evolve(lattice, drive, args.cycles * drive.period, backend=b).states[-1],
        "monodromy 2x2, one period":
            lambda b: monodromy(drive, 1.0, backend=b).u,
    }
    backends = _backend.available()
    print(f"backends: {', '.join(backends)}")
    for name, case in cases.items():
        timings, results = {}, {}
        for b in backends:
            timings[b], results[b] = best_of(args.repeat, lambda: case(b))
        line = ", ".join(f"{b} {timings[b] * 1e3:.2f} ms" for b in backends)
        if len(backends) > 1:
            ref, other = results[backends[0]], results[backends[1]]
            diff = float(np.max(np.abs(ref - other)))
            line += f"; speed-up {timings['python'] / timings['cython']:.1f}x, max diff {diff:.1e}"
        print(f"{name}: {line}")


if __name__ == "__main__":
    main()
