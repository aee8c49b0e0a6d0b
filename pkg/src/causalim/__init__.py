"""Causal-effect-weighted influence maximization on hypergraphs."""

from .bounds import (BoundReport, RobustnessReport, check_claims,
                     gamma_condition_boundary, verify_corollary1,
                     verify_theorem1, verify_theorem2)
from .causal import (DegenerateArmError, DegenerateArmWarning, NodeCausalTable,
                     ObservedData, SimulationParams, environment_summary,
                     estimate_ite, inject_noise, simulate_outcomes)
from .diffusion import (DiffusionConfig, DiffusionModel, SimulationTrace,
                        run, run_gic, run_sicp)
from .hypergraph import (EmptyGraphError, Hypergraph, HypergraphError,
                         StarExpansion, load_hypergraph, neighbors,
                         save_hypergraph, star_expansion)
from .selection import (Objective, SelectionTrace, brute_force_optimal,
                        celf_select, greedy_select, random_select)
from .spread import (BudgetExceeded, ExactModel, ReachabilityTable,
                     SpreadEstimate, closed_form_spread, compute_epsilons,
                     exact_spread, mc_estimate, reachability_table)

__version__ = "0.1.0"
