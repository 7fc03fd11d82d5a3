"""Topological magnon simulator for dimerized superconducting-qubit chains.

Couplings and energies are linear frequencies in MHz, times in microseconds,
qubit operating frequencies in GHz.  Sites are numbered from 1 in chain order
a1, b1, a2, b2, ...
"""

__version__ = "0.1.0"

from .errors import (CalibrationError, ConfigurationError, DetunedDriveError,  # noqa: E402
                     DomainError, GapClosureError, InconclusiveWindowError, InputError,
                     NoiseModelError, OutputError, RegimeError, TopoMagnonError,
                     UnreachableCouplingError)
from .lattice import (BondPattern, ChainSpec, Spectrum, StateProfile,  # noqa: E402
                      analytic_defect_state, analytic_edge_state, build_hamiltonian,
                      critical_chain_length, dimerized_gap, hamiltonian_from_bonds,
                      hybridization, in_gap_window, mid_gap, spectrum, zero_mode)
from .topology import (analytic_cd, bloch_vector, winding_from_cd_average,  # noqa: E402
                       winding_number)
from .dynamics import (NoiseModel, Trajectory, chiral_displacement, evolve_lindblad,  # noqa: E402
                       evolve_unitary, site_density, site_state, time_averaged_cd,
                       time_grid, winding_estimate)
from .drive import (DriveSpec, EffectiveCoupling, Tone, bessel_j, bonds_from_drives,  # noqa: E402
                    effective_coupling, load_hardware_preset, solve_amplitude_for_coupling,
                    validate_rwa)
from .readout import (ReadoutCalibration, ShotRecord, bayes_correct, load_calibration,  # noqa: E402
                      sample_shots)
from .experiment import ScenarioConfig, run_scenario, run_sweep  # noqa: E402
