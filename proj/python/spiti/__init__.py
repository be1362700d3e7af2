"""Factored-MDP structure learning, tree-based planning and benchmarks."""

from spiti._core import (  # noqa: F401
    ConvergenceError,
    EnumerationError,
    ParseError,
    PolicyTree,
    Problem,
    SpitiError,
    ValidationError,
    ValueTree,
    __version__,
    chi2_statistic,
    chi2_tail_q,
    coffee_robot,
    evaluate_policy,
    expon,
    learn_model,
    linear,
    load_problem,
    model_accuracy,
    noisy,
    process_planning,
    relative_error,
    resolve_problem,
    run_experiment,
    solve,
    sweep_tau,
    two_distribution_chi2,
)
