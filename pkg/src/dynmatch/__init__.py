"""Dynamic two-sided matching markets under commitment.

Markets and stability live in :mod:`dynmatch.market`, stable-set computation
in :mod:`dynmatch.algorithms`, period-by-period play in :mod:`dynmatch.engine`,
the canonical strategy profiles in :mod:`dynmatch.strategies`, resignation
chains and patience thresholds in :mod:`dynmatch.restabilization`, and
equilibrium checks in :mod:`dynmatch.verifier`.
"""
from .algorithms import (
    StableSetReport,
    check_single_agent_property,
    deferred_acceptance,
    enumerate_all_matchings,
    enumerate_stable_set,
)
from .engine import DiscountedPayoff, Trace, discounted_payoff, play_period, simulate
from .instances import generate_market, parse_instance, parse_matching, serialize_instance
from .market import (
    Matching,
    MarketInstance,
    Regime,
    active_sets,
    blocking_pairs,
    is_individually_rational,
    is_stable,
    validate_market,
)
from .restabilization import RestabilizationOutcome, firm_threshold, restabilize, worker_threshold
from .strategies import (
    build_profile,
    profile_firm_commit_flexible,
    profile_firm_commit_restrictive,
    profile_no_commitment,
    profile_worker_commit_flexible,
    profile_worker_commit_restrictive,
)
from .verifier import (
    DeviationWitness,
    EquilibriumReport,
    firm_wait_comparison,
    one_shot_deviations,
    resign_and_wait_comparison,
    threshold_boundary_test,
    verify_equilibrium,
)

__version__ = "0.1.0"

__all__ = [
    "DeviationWitness",
    "DiscountedPayoff",
    "EquilibriumReport",
    "Matching",
    "MarketInstance",
    "Regime",
    "RestabilizationOutcome",
    "StableSetReport",
    "Trace",
    "active_sets",
    "blocking_pairs",
    "build_profile",
    "check_single_agent_property",
    "deferred_acceptance",
    "discounted_payoff",
    "enumerate_all_matchings",
    "enumerate_stable_set",
    "firm_threshold",
    "firm_wait_comparison",
    "generate_market",
    "is_individually_rational",
    "is_stable",
    "one_shot_deviations",
    "parse_instance",
    "parse_matching",
    "play_period",
    "profile_firm_commit_flexible",
    "profile_firm_commit_restrictive",
    "profile_no_commitment",
    "profile_worker_commit_flexible",
    "profile_worker_commit_restrictive",
    "resign_and_wait_comparison",
    "restabilize",
    "serialize_instance",
    "simulate",
    "threshold_boundary_test",
    "validate_market",
    "worker_threshold",
]
