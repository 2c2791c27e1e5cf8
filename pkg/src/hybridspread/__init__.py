"""Spreading speeds, principal eigenvalues and fronts for spatially periodic
cooperative reaction-diffusion systems."""

from .coeffs import (Competition, Linear, LowerBarrier, MatrixField, MutationCompetition,
                     PeriodicField, SystemSpec, check_structure, is_isotropic, mean_arithmetic,
                     mean_harmonic, mutation_spec, scalar_spec)
from .config import SpecError, load_corpus, parse_spec, parse_spec_text
from .operators import assemble_L, assemble_L_lambda
from .spectral import (EigenError, k_curve, k_of_lambda, lambda1_dirichlet, lambda1_infinity,
                       principal_eigen)
from .speed import (SpeedError, crossing_structure, homogenized_speed, min_speed_left,
                    min_speed_right, pf_constant, speed_report, strong_coupling_reduce)
from .ode import OdeParams, equilibrium, integrate
from .pde import SimConfig, WaveError, construct_wave, front_runs, simulate

__version__ = "0.1.0"
