"""Comparison estimators and the exact enumeration oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels
from .engine import Estimate, _validate_estimator_inputs
from .formula import Formula, clause_weight, formula_weight
from .sampling import InstrumentedRng, build_alias

__all__ = [
    "ExactResult",
    "OracleCapError",
    "exact_count",
    "exact_coverage_p",
    "compute_T_lklm",
    "estimate_lklm",
    "estimate_klm",
]

EXACT_DEFAULT_CAP = 26


class OracleCapError(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class ExactResult:
    """Exact weighted model ratio, raw satisfying-assignment count, and the
    coverage-trial success probability p = mu / rho(Phi)."""

    mu: float
    model_count: int
    p: float


def exact_count(f: Formula, max_n: int = EXACT_DEFAULT_CAP) -> ExactResult:
    """Enumerate all 2^n assignments; n is capped to keep this a desk-scale oracle."""
    if f.n > max_n:
        raise OracleCapError(f"n={f.n} exceeds the exact-enumeration cap {max_n}")
    var_mask, val_mask = f.clause_masks()
    rho_phi = formula_weight(f)
    if f.weights.is_uniform:
        count = int(_kernels.count_models(var_mask, val_mask, f.n))
        mu = count * 2.0 ** -f.n
    else:
        count, mu = _kernels.weighted_model_mass(var_mask, val_mask, f.weights.rho, f.n)
        count = int(count)
        mu = float(mu)
    return ExactResult(mu=mu, model_count=count, p=mu / rho_phi)


def exact_coverage_p(f: Formula, max_n: int = EXACT_DEFAULT_CAP) -> float:
    """Trial success probability computed the long way, by enumerating every
    (sampled clause, extension) pair of the coverage process and averaging 1/L.

    Independent of exact_count's route; unweighted formulas only.
    """
    if f.n > max_n:
        raise OracleCapError(f"n={f.n} exceeds the exact-enumeration cap {max_n}")
    if not f.weights.is_uniform:
        raise ValueError("coverage enumeration oracle supports unweighted formulas only")
    var_mask, val_mask = f.clause_masks()
    total = float(_kernels.coverage_success_sum(var_mask, val_mask, f.n))
    return total * 2.0 ** -f.n / formula_weight(f)


def compute_T_lklm(epsilon: float, delta: float, m: int) -> int:
    """Self-adjusting step budget: ceil(8(1+eps) m log(3/delta) / ((1 - eps^2/8) eps^2))."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon={epsilon} outside (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta={delta} outside (0, 1)")
    if m < 1:
        raise ValueError("m must be positive")
    return math.ceil(
        8.0 * (1.0 + epsilon) * m * math.log(3.0 / delta)
        / ((1.0 - epsilon * epsilon / 8.0) * epsilon * epsilon)
    )


def _baseline_estimate(f: Formula, epsilon: float, delta: float, seed: int,
                       eager: bool, debug: bool) -> Estimate:
    _validate_estimator_inputs(f, epsilon, delta)
    t_target = compute_T_lklm(epsilon, delta, f.m)
    rng = InstrumentedRng(seed)
    lit_var, lit_pol, off = f.literal_arrays()
    alias = build_alias([clause_weight(f, i) for i in range(f.m)])
    if eager:
        n_trials, y, steps, lits = _kernels.klm_loop(
            rng.state, lit_var, lit_pol, off, f.weights.rho,
            alias.thresh, alias.alias, f.n, t_target,
        )
    else:
        n_trials, y, steps, lits, clean = _kernels.lklm_loop(
            rng.state, lit_var, lit_pol, off, f.weights.rho,
            alias.thresh, alias.alias, f.n, t_target, debug,
        )
        if debug and not clean:
            raise AssertionError("assignment arrays not restored to zero after a trial")
    p_hat = y / (n_trials * f.m)
    rho_phi = alias.total_weight
    return Estimate(
        p_hat=p_hat,
        mu_hat=rho_phi * p_hat,
        rho_phi=rho_phi,
        T=t_target,
        N=int(n_trials),
        Y=int(y),
        steps=int(steps),
        literal_samples=int(lits),
        bits=rng.bits_consumed,
        seed=rng.seed,
        epsilon=epsilon,
        delta=delta,
        beta=0.0,
        weight_margin=f.weights.margin,
    )


def estimate_lklm(f: Formula, epsilon: float, delta: float, seed: int = 0,
                  *, debug: bool = False) -> Estimate:
    """Lazy KLM: redraw uniform clauses until one is satisfied, sampling
    variables only when a clause inspection reaches them; p_hat = Y/(N m)."""
    return _baseline_estimate(f, epsilon, delta, seed, eager=False, debug=debug)


def estimate_klm(f: Formula, epsilon: float, delta: float, seed: int = 0) -> Estimate:
    """Eager KLM: identical statistical process, but every trial draws all n
    variables up front; the work/randomness baseline."""
    return _baseline_estimate(f, epsilon, delta, seed, eager=True, debug=False)
