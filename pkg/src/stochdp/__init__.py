"""Exact dynamic programming for convex multistage problems on finite scenario trees."""
from .dp import (NodeFunctionTable, Solution, backward_pass, bellman_pass, check_linearity_L,
                 forward_policy, recession_commutation_check, solve, verify_optimality)
from .errors import (Infeasible, LinearityViolated, SchemaError, StochDPError, TreeError,
                     UnboundedBelow)
from .finance import (ConeMarket, LiquidMarket, UtilitySpec, build_consumption,
                      build_consumption_dual, build_superhedge, check_thm_ocp_conditions,
                      duality_gap, no_arbitrage_check)
from .integrand import BellmanSpec, IntegrandSpec, bellman_to_integrand
from .oracle import flatten_solve, least_squares_oracle, phi_probe
from .polyfunc import INF, PolyFunc, polyfunc_conjugate, polyfunc_partial_min, polyfunc_recession, polyfunc_sum
from .polyhedron import Polyhedron, fm_eliminate
from .quad import HedgeProblem, QuadFunc, variance_hedge_solve
from .tree import Policy, ScenarioTree, validate_tree
