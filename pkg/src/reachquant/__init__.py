"""Reachability-based dynamic quantization for remote state estimation."""
from .numerics import (
    induced_inf_norm,
    inf_norm_vec,
    mat_exp,
    max_eig_symmetric,
    min_eig_symmetric,
    column_sum_norm,
    rk4_step,
    spectral_radius_nonneg,
)
from .observer import (
    BoundFunctions,
    ObserverCertificate,
    ObserverGains,
    derive_gains,
    make_bound_functions,
    verify_certificate,
)
from .plant import BoundsConfig, PlantModel
from .quantizer import QuantizerConfig, QuantizerOverflow, QuantizerState, decode, encode
from .reachability import ReachParams, beta_inflation, terminal_reach_overapprox
from .schemes import SchemeKind, compare_schemes, feasibility_norm, feasibility_set
from .sets import Hyperrectangle, Zonotope, hypercube, interval_hull
from .sim import SignalSpec, SimTrace, run_closed_loop, steady_state_metrics

__version__ = "0.1.0"
