"""
数值与运行服务模块
"""

from .materials import ViscosityLaw, psi, psi_prime, psi_double_prime, viscosity
from .elliptic import LinearOperator, SolveReport, make_variable_poisson, solve_cg
from .transport import density_step
from .cahn_hilliard import ChParams, chemical_potential, ch_step
from .momentum import korteweg_force, predictor_step, project
from .diagnostics import (
    a0_coefficient,
    decay_envelope,
    dissipation,
    lr_norm,
    serrin_accumulate,
    serrin_exponent,
    smallness_quantity,
    total_energy,
)
from .initial_data import InitialData, build_initial
from .simulation_runner import SimulationRunner, RunnerStatus, run, step
from .simulation_manager import SimulationManager

__all__ = [
    'ViscosityLaw',
    'psi',
    'psi_prime',
    'psi_double_prime',
    'viscosity',
    'LinearOperator',
    'SolveReport',
    'make_variable_poisson',
    'solve_cg',
    'density_step',
    'ChParams',
    'chemical_potential',
    'ch_step',
    'korteweg_force',
    'predictor_step',
    'project',
    'a0_coefficient',
    'decay_envelope',
    'dissipation',
    'lr_norm',
    'serrin_accumulate',
    'serrin_exponent',
    'smallness_quantity',
    'total_energy',
    'InitialData',
    'build_initial',
    'SimulationRunner',
    'RunnerStatus',
    'run',
    'step',
    'SimulationManager',
]
