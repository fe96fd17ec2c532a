"""Transport simulator for a driven quantum dot coupled to superconducting leads.

The dot is a four-level system driven by Cooper-pair tunnelling from large-gap
superconductors and damped by quasiparticle exchange with moderate-gap leads.
The package builds the Floquet basis of the driven dot, evaluates the lead
rates and level shifts, assembles the periodic Lindblad-type generator, drives
it to its periodic steady state, and reports period-averaged particle currents
and populations over bias/parameter sweeps.
"""

from .model import JunctionParams, build_dot_operators, hamiltonian_at, load_config
from .floquet import FloquetBasis, build_floquet_basis, propagator_over_period
from .leads import RateTable, dos, fermi, coherence_product
from .generator import PeriodicGenerator, build_generator, build_static_reference
from .solver import Trajectory, PeriodicState, evolve, period_average, periodic_steady_state_fourier
from .observables import CurrentRecord, solve_point
from .sweep import SweepSpec, run_sweep, conductance_map

__all__ = [
    "JunctionParams",
    "build_dot_operators",
    "hamiltonian_at",
    "load_config",
    "FloquetBasis",
    "build_floquet_basis",
    "propagator_over_period",
    "RateTable",
    "dos",
    "fermi",
    "coherence_product",
    "PeriodicGenerator",
    "build_generator",
    "build_static_reference",
    "Trajectory",
    "PeriodicState",
    "evolve",
    "period_average",
    "periodic_steady_state_fourier",
    "CurrentRecord",
    "solve_point",
    "SweepSpec",
    "run_sweep",
    "conductance_map",
]
