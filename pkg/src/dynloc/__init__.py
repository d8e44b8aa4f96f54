"""Dynamic localization on ac-driven tight-binding lattices.

Lattice integration for homogeneous, Glauber-Fock and pseudo Glauber-Fock
hopping, a 2x2 non-Hermitian Floquet engine that locates DL points as
quasi-energy degeneracies, and closed-form oracles (Bessel ``J0``, WKB,
dc-force solution).
"""
__version__ = "0.1.0"

from dynloc.core import (  # noqa: E402
    DLPoint,
    DriveSpec,
    HoppingLaw,
    LatticeSpec,
    QuasiEnergyPair,
    Trajectory,
    Waveform,
    drive_phase,
    drive_value,
    hopping_rate,
    hopping_rates,
)
from dynloc.errors import (  # noqa: E402
    AccuracyError,
    ConfigError,
    DynlocError,
    OutputError,
    TruncationError,
)
from dynloc.floquet import (  # noqa: E402
    Monodromy,
    coefficient_matrix,
    crossing_functional,
    find_dl_points,
    monodromy,
    quasi_energies,
)
from dynloc.lattice import (  # noqa: E402
    IntegratorSettings,
    dl_integral_condition,
    evolve,
    occupation_spectrum,
    revival_check,
    revival_fidelity,
)
from dynloc.oracles import (  # noqa: E402
    PtPhase,
    bessel_j0,
    bloch_period,
    dc_evolution_coefficients,
    gf_heisenberg_coefficient,
    j0_roots,
    pt_phase,
    wkb_quasi_energy,
)
from dynloc.sweeps import SweepPlan, SweepResult, anomaly_curve, run_quasi_energy_sweep  # noqa: E402

__all__ = [
    "AccuracyError", "ConfigError", "DLPoint", "DriveSpec", "DynlocError", "HoppingLaw",
    "IntegratorSettings", "LatticeSpec", "Monodromy", "OutputError", "PtPhase", "QuasiEnergyPair",
    "SweepPlan", "SweepResult", "Trajectory", "TruncationError", "Waveform", "anomaly_curve",
    "bessel_j0", "bloch_period", "coefficient_matrix", "crossing_functional",
    "dc_evolution_coefficients", "dl_integral_condition", "drive_phase", "drive_value", "evolve",
    "find_dl_points", "gf_heisenberg_coefficient", "hopping_rate", "hopping_rates", "j0_roots",
    "monodromy", "occupation_spectrum", "pt_phase", "quasi_energies", "revival_check",
    "revival_fidelity", "run_quasi_energy_sweep", "wkb_quasi_energy",
]
