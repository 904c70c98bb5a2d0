"""Adaptive-stopping coverage estimator: permutation blending, hot clause
store, short-circuit trials, and the negative-binomial stopping rule."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .formula import Formula, clause_weight
from .sampling import AliasTable, InstrumentedRng, _splitmix64_py, build_alias

__all__ = [
    "compute_T_main",
    "chernoff_lower",
    "random_branch_probability",
    "BlendedPermutation",
    "blend_permutation",
    "ClauseStore",
    "build_store",
    "LazyAssignment",
    "TrialStats",
    "run_trial",
    "Estimate",
    "estimate_main",
]

log = logging.getLogger("dnfcount")


def _tail_bound(t: int, eps: float) -> float:
    """Two-sided stopping bound A^t + B^t, each term evaluated in log-space."""
    la = eps / (1.0 + eps) - math.log1p(eps)
    lb = -eps / (1.0 - eps) - math.log1p(-eps)
    return math.exp(t * la) + math.exp(t * lb)


def compute_T_main(epsilon: float, delta: float) -> int:
    """Smallest T with (e^(eps/(1+eps))/(1+eps))^T + (e^(-eps/(1-eps))/(1-eps))^T <= delta."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon={epsilon} outside (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta={delta} outside (0, 1)")
    if not (epsilon < 0.75 and delta < 0.75):
        log.warning(
            "epsilon=%s delta=%s outside (0, 3/4): stopping-rule guarantee not claimed",
            epsilon, delta,
        )
    # Provable bracket for the minimal integer: ceil of log(2/delta) over the
    # per-trial decay rates of the slower / faster tail.
    hi_rate = math.log1p(epsilon) - epsilon / (1.0 + epsilon)
    hi = max(1, math.ceil(math.log(2.0 / delta) / hi_rate) + 2)
    lo = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _tail_bound(mid, epsilon) <= delta:
            hi = mid
        else:
            lo = mid + 1
    return lo


def chernoff_lower(x: float, y: float) -> float:
    """Lower-tail bound e^(y-x) * (x/y)^y: probability that a sum of
    independent [0,1] variables with mean x is at most y."""
    if y <= 0.0:
        raise ValueError("y must be positive")
    if y > x:
        raise ValueError(f"need y <= x, got x={x}, y={y}")
    return math.exp((y - x) + y * (math.log(x) - math.log(y)))


def random_branch_probability(next_width: float, mean_width: float, beta: float) -> float:
    """Probability that one blending step picks uniformly instead of the heuristic."""
    return beta * min(1.0, next_width / mean_width)


@dataclass(frozen=True)
class BlendedPermutation:
    """Clause visit order: heuristic order with random picks injected at rate beta."""

    pi: np.ndarray  # pi[j] = original clause index visited j-th
    beta: float
    seed: int

    def __post_init__(self):
        arr = np.asarray(self.pi, dtype=np.int64)
        m = arr.shape[0]
        if not np.array_equal(np.sort(arr), np.arange(m)):
            raise ValueError("pi must be a permutation of 0..m-1")
        object.__setattr__(self, "pi", arr)


def width_heuristic(f: Formula) -> list[int]:
    """Ascending clause width; ties broken by a fixed index hash.

    The hash keeps the order deterministic while scattering equal-width
    clauses: generators that emit correlated clauses in batches would
    otherwise leave contiguous all-false bands at the front of the order,
    and scanning those bands destroys the near-linear step scaling.
    """
    return sorted(range(f.m), key=lambda i: (f.width(i), _splitmix64_py(i)))


def blend_permutation(
    f: Formula,
    beta: float,
    seed: int = 0,
    heuristic: Optional[Sequence[int]] = None,
    *,
    rng: Optional[InstrumentedRng] = None,
) -> BlendedPermutation:
    """Blend a heuristic clause order with uniform picks at rate beta * min(1, v'/w').

    ``rng`` overrides ``seed`` when the caller owns the randomness stream.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta={beta} outside [0, 1]")
    if heuristic is None:
        heur = width_heuristic(f)
    else:
        heur = [int(i) for i in heuristic]
        if sorted(heur) != list(range(f.m)):
            raise ValueError("heuristic must be a permutation of clause indices")
    if rng is None:
        rng = InstrumentedRng(seed)
    m = f.m
    widths = [f.width(i) for i in range(m)]
    remaining = list(range(m))
    pos = list(range(m))
    width_left = sum(widths)
    count = m
    cursor = 0
    pi = np.empty(m, dtype=np.int64)
    for j in range(m):
        while pos[heur[cursor]] < 0:
            cursor += 1
        cand = heur[cursor]
        q = random_branch_probability(widths[cand], width_left / count, beta)
        if q > 0.0 and rng.bernoulli(q):
            chosen = remaining[rng.randbelow(count)]
        else:
            chosen = cand
        pi[j] = chosen
        # swap-remove
        i = pos[chosen]
        count -= 1
        last = remaining[count]
        remaining[i] = last
        pos[last] = i
        pos[chosen] = -1
        width_left -= widths[chosen]
    return BlendedPermutation(pi=pi, beta=beta, seed=rng.seed)


@dataclass(frozen=True)
class ClauseStore:
    """Read-only hot data: permutation-ordered contiguous literals over
    relabeled variables, prefix maxima for contiguous clearing, clause
    weights and their alias sampler."""

    n: int
    m: int
    pi: np.ndarray          # store position -> original clause index
    lit_var: np.ndarray     # relabeled variable per literal, sorted within clause
    lit_pol: np.ndarray
    clause_off: np.ndarray
    prefix_max: np.ndarray  # max relabeled index over store clauses 0..j
    relabel: np.ndarray     # original variable -> relabeled index
    inverse: np.ndarray     # relabeled index -> original variable
    rho: np.ndarray         # per relabeled variable
    weights: np.ndarray     # rho(C) per store position
    alias: AliasTable

    def clause_at(self, pos: int) -> list[tuple[int, bool]]:
        lo, hi = int(self.clause_off[pos]), int(self.clause_off[pos + 1])
        return [(int(self.lit_var[i]), bool(self.lit_pol[i])) for i in range(lo, hi)]


def build_store(f: Formula, perm: BlendedPermutation) -> ClauseStore:
    """Reorder clauses by the permutation, relabel variables to first-occurrence
    order, and build the weighted sampler over the reordered clauses."""
    pi = perm.pi
    if pi.shape[0] != f.m:
        raise ValueError("permutation size does not match clause count")
    lit_var, lit_pol, off = f.literal_arrays()
    new_var, new_pol, new_off, relabel, inverse, prefix_max = _kernels.build_store_arrays(
        lit_var, lit_pol, off, pi, f.n
    )
    weights = np.array([clause_weight(f, int(c)) for c in pi])
    rho_new = np.empty(f.n)
    rho_new[relabel] = f.weights.rho
    return ClauseStore(
        n=f.n,
        m=f.m,
        pi=pi,
        lit_var=new_var,
        lit_pol=new_pol,
        clause_off=new_off,
        prefix_max=prefix_max,
        relabel=relabel,
        inverse=inverse,
        rho=rho_new,
        weights=weights,
        alias=build_alias(weights),
    )


class LazyAssignment:
    """Two bit-arrays over relabeled variables; all-zero between trials."""

    def __init__(self, n: int):
        self.n = n
        self.value = np.zeros(n, dtype=np.uint8)
        self.assigned = np.zeros(n, dtype=np.uint8)
        self.sparse_touched: tuple[int, ...] = ()

    def is_clear(self) -> bool:
        """Full scan: True iff both arrays are identically zero."""
        return not (self.value.any() or self.assigned.any())

    def clear(self) -> None:
        self.value[:] = 0
        self.assigned[:] = 0


@dataclass(frozen=True)
class TrialStats:
    steps: int
    literals_sampled: int
    bits: int


def run_trial(
    store: ClauseStore,
    asg: LazyAssignment,
    rng: InstrumentedRng,
    *,
    short_circuit: bool = True,
) -> tuple[bool, TrialStats]:
    """One coverage trial: sample a clause, extend lazily literal-by-literal,
    count satisfied clauses in store order, abort once the count exceeds
    floor(1/Q). Clears the assignment by contiguous-prefix zero-fill plus
    sparse clears of the sampled clause's variables."""
    if asg.n != store.n:
        raise ValueError("assignment size does not match store")
    before = rng.bits_consumed
    ok, steps, lits, s = _kernels.trial(
        rng.state, store.lit_var, store.lit_pol, store.clause_off,
        store.prefix_max, store.rho, store.alias.thresh, store.alias.alias,
        asg.value, asg.assigned, short_circuit,
    )
    lo, hi = int(store.clause_off[s]), int(store.clause_off[s + 1])
    asg.sparse_touched = tuple(int(v) for v in store.lit_var[lo:hi])
    return bool(ok), TrialStats(steps=int(steps), literals_sampled=int(lits),
                                bits=rng.bits_consumed - before)


@dataclass(frozen=True)
class Estimate:
    """Fully audited result of one estimator run."""

    p_hat: float
    mu_hat: float
    rho_phi: float
    T: int
    N: int
    Y: int
    steps: int
    literal_samples: int
    bits: int
    seed: int
    epsilon: float
    delta: float
    beta: float
    weight_margin: float
    successes: Optional[bytes] = field(default=None, repr=False)


def _validate_estimator_inputs(f: Formula, epsilon: float, delta: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon={epsilon} outside (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta={delta} outside (0, 1)")
    margin = f.weights.margin
    if margin <= 0.0:
        raise ValueError("all variable weights must lie strictly inside (0, 1)")


def estimate_main(
    f: Formula,
    epsilon: float,
    delta: float,
    beta: float = 0.01,
    seed: int = 0,
    heuristic: Optional[Sequence[int]] = None,
    *,
    debug: bool = False,
) -> Estimate:
    """Adaptive-stopping estimate: trials run until T successes; then
    p_hat = T/N and mu_hat = rho(Phi) * p_hat."""
    _validate_estimator_inputs(f, epsilon, delta)
    t_target = compute_T_main(epsilon, delta)
    rng = InstrumentedRng(seed)
    perm = blend_permutation(f, beta, heuristic=heuristic, rng=rng)
    store = build_store(f, perm)
    hist, n_trials, wins, steps, lits, clean = _kernels.main_loop(
        rng.state, store.lit_var, store.lit_pol, store.clause_off,
        store.prefix_max, store.rho, store.alias.thresh, store.alias.alias,
        store.n, t_target, debug,
    )
    if debug and not clean:
        raise AssertionError("assignment arrays not restored to zero after a trial")
    p_hat = t_target / n_trials
    rho_phi = store.alias.total_weight
    return Estimate(
        p_hat=p_hat,
        mu_hat=rho_phi * p_hat,
        rho_phi=rho_phi,
        T=t_target,
        N=int(n_trials),
        Y=int(wins),
        steps=int(steps),
        literal_samples=int(lits),
        bits=rng.bits_consumed,
        seed=rng.seed,
        epsilon=epsilon,
        delta=delta,
        beta=beta,
        weight_margin=f.weights.margin,
        successes=hist.tobytes(),
    )
