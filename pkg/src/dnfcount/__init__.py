"""Approximate weighted model counting for DNF formulas.

An (epsilon, delta) Monte Carlo counter built around an adaptive stopping
rule with short-circuit clause evaluation, plus lazy and eager
self-adjusting baselines, an exact enumeration oracle, a stem-style
benchmark generator, and full instrumentation of work and randomness.
"""

from .formula import (
    Clause,
    DnfParseError,
    Formula,
    Literal,
    WeightFn,
    clause_weight,
    count_true_clauses,
    formula_weight,
    generate_benchmark,
    parse_dnf,
    serialize_dnf,
)
from .sampling import AliasTable, InstrumentedRng, build_alias, mix_seed, sample_clause
from .engine import (
    BlendedPermutation,
    ClauseStore,
    Estimate,
    LazyAssignment,
    TrialStats,
    blend_permutation,
    build_store,
    chernoff_lower,
    compute_T_main,
    estimate_main,
    run_trial,
)
from .baselines import (
    ExactResult,
    compute_T_lklm,
    estimate_klm,
    estimate_lklm,
    exact_count,
    exact_coverage_p,
)

__version__ = "0.1.0"

__all__ = [
    "Clause",
    "DnfParseError",
    "Formula",
    "Literal",
    "WeightFn",
    "clause_weight",
    "count_true_clauses",
    "formula_weight",
    "generate_benchmark",
    "parse_dnf",
    "serialize_dnf",
    "AliasTable",
    "InstrumentedRng",
    "build_alias",
    "mix_seed",
    "sample_clause",
    "BlendedPermutation",
    "ClauseStore",
    "Estimate",
    "LazyAssignment",
    "TrialStats",
    "blend_permutation",
    "build_store",
    "chernoff_lower",
    "compute_T_main",
    "estimate_main",
    "run_trial",
    "ExactResult",
    "compute_T_lklm",
    "estimate_klm",
    "estimate_lklm",
    "exact_count",
    "exact_coverage_p",
    "__version__",
]
