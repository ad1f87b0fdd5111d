"""Schrödinger equations on weighted graphs: sections, intrinsic metrics, discrete
calculus, weighted l^p spaces, Dirichlet solves and numerical certificates for the
estimates behind l^p uniqueness."""
from .calculus import (ConvexFunction, QUARTIC, SQUARE, VertexFunction, check_calculus_identities,
                       difference, laplacian, laplacian_values, smooth_abs_power)
from .errors import (DomainError, HypothesisError, OutOfSectionError, ParameterError,
                     SchrographError, SolverError)
from .graph import GraphFamily, WeightedGraph, ball_measure, build_section, weighted_degree
from .metric import PseudoMetric, intrinsic_scaling, q_intrinsic_bound, scaled_hop_metric
from .report import CheckReport, Tolerance
from .solver import (DirichletProblem, Solution, SweepResult, exhaustion_sweep, solve_dirichlet,
                     solve_dirichlet_dense)
from .spaces import Potential, PowerWeight, membership_sufficient, weighted_lp_norm
from .verifier import (Cutoff, Thresholds, build_cutoff, c1_constant, c2_constant, c3_constant,
                       check_a_priori_estimate, check_adjoint_inequality, check_boundary_terms,
                       check_cutoff_gradient, check_supersolution_bound, check_weight_increment,
                       check_weight_laplacian_bound, p_threshold_duality, p_threshold_energy,
                       thresholds)

__version__ = "0.1.0"
