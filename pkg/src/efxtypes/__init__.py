"""Exact approximate-EFX allocation for instances whose agents come in a few types."""
from .core import (ONE_HALF, THREE_HALVES, TWO_THIRDS, Allocation, Certificate, ContractError,
                   DiagnosticError, InputError, Instance, Params, Value, check_alpha_efx,
                   check_charity, critical_goods, enforce_ordering_invariant, explicit_perturbation,
                   is_alpha_efx_toward, is_critical, leading_agents, pareto_dominates, value_of)
from .graphs import ENHANCED, PLAIN, REDUCED, EnvyGraph, build_envy_graph, find_cycle, sources
from .resolution import all_cycles_resolution, cycle_resolution, ece_completion, potential_phi
from .ppa import StepId, ppa_step, pseudo_cycle_resolution, run_ppa_types, seed_allocation
from .fewtypes import CriticalCase, allocate_criticals, few_types_allocate
from .charity import charity_allocate, choose_d
from .oracle import brute_force_check_efx, brute_force_exists_alpha_efx, verify_trace
from .trace import Trace

__version__ = "0.1.0"
