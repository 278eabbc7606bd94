"""Expectations of PDMP functionals by quantization of the embedded chain."""
from .bounds import BoundInputs, epsilon_N, propagate_v_constants
from .functional import CostFunctional, CostMeta, ValueTable, backward_evaluate, delta_A, pathwise_F
from .gridio import load_tree, save_tree
from .horizon import augment, estimate_N, horizon_bounds, horizon_functional
from .montecarlo import McEstimate, mc_functional, mc_horizon_functional
from .pdmp import State, simulate_chain, simulate_paths
from .quantizer import ClvqConfig, QuantizationTree, train

__version__ = "0.1.0"
