"""Random dynamical systems with place-dependent probabilities."""

from ._core import (
    FmsError,
    FundamentalPartition,
    System,
    Trace,
    certificates,
    contraction_estimate,
    convergence_rate,
    cylinder_measure,
    enumerate_cylinders,
    fms_markov_operator,
    fundamental_partition,
    graph_flags,
    lift_check,
    likelihood_ratio,
    martingale_discrepancy,
    partition_report,
    run,
    simulate,
    stationary,
    tail_mass,
    validate,
    w1_distance,
    xi_estimate,
)

__all__ = [
    "FmsError",
    "FundamentalPartition",
    "System",
    "Trace",
    "certificates",
    "contraction_estimate",
    "convergence_rate",
    "cylinder_measure",
    "enumerate_cylinders",
    "fms_markov_operator",
    "fundamental_partition",
    "graph_flags",
    "lift_check",
    "likelihood_ratio",
    "martingale_discrepancy",
    "partition_report",
    "run",
    "simulate",
    "stationary",
    "tail_mass",
    "validate",
    "w1_distance",
    "xi_estimate",
]
