"""PAC-validation harness and scaling sweeps at desk scale."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .baselines import estimate_klm, estimate_lklm, exact_count
from .engine import BlendedPermutation, Estimate, build_store, estimate_main
from .formula import Formula, generate_benchmark
from .sampling import InstrumentedRng, mix_seed

__all__ = [
    "ESTIMATORS",
    "PacRow",
    "PacReport",
    "pac_validate",
    "SweepRow",
    "scaling_sweep",
    "accuracy_suite",
    "work_scaling_params",
    "randomness_scaling_params",
    "empirical_success_rate",
    "binomial_slack",
]

ESTIMATORS: dict[str, Callable[..., Estimate]] = {
    "main": estimate_main,
    "lklm": estimate_lklm,
    "klm": estimate_klm,
}


def run_estimator(algo: str, f: Formula, epsilon: float, delta: float,
                  beta: float, seed: int) -> Estimate:
    if algo == "main":
        return estimate_main(f, epsilon, delta, beta=beta, seed=seed)
    if algo == "lklm":
        return estimate_lklm(f, epsilon, delta, seed=seed)
    if algo == "klm":
        return estimate_klm(f, epsilon, delta, seed=seed)
    raise ValueError(f"unknown estimator {algo!r}")


def binomial_slack(delta: float, runs: int, z: float = 3.0) -> float:
    """z standard deviations of a Binomial(runs, delta) failure fraction."""
    return z * math.sqrt(delta * (1.0 - delta) / runs)


@dataclass(frozen=True)
class PacRow:
    formula: str
    algo: str
    n: int
    m: int
    epsilon: float
    delta: float
    runs: int
    failures: int
    exact_mu: float
    mean_rel_err: float
    mean_N: float
    mean_bits: float
    mean_steps: float


@dataclass(frozen=True)
class PacReport:
    epsilon: float
    delta: float
    runs_per_formula: int
    seed: int
    rows: tuple

    @property
    def total_runs(self) -> int:
        return sum(r.runs for r in self.rows)

    @property
    def total_failures(self) -> int:
        return sum(r.failures for r in self.rows)

    @property
    def pooled_failure_rate(self) -> float:
        return self.total_failures / self.total_runs

    def to_json(self) -> str:
        return json.dumps(
            {
                "epsilon": self.epsilon,
                "delta": self.delta,
                "runs_per_formula": self.runs_per_formula,
                "seed": self.seed,
                "pooled_failure_rate": self.pooled_failure_rate,
                "rows": [asdict(r) for r in self.rows],
            },
            indent=2,
            sort_keys=True,
        )


def pac_validate(
    suite: Sequence[tuple[str, Formula, float]],
    algo: str,
    epsilon: float,
    delta: float,
    runs: int,
    seed: int,
    beta: float = 0.01,
    workers: int = 1,
) -> PacReport:
    """Run ``runs`` independent estimates per formula; a failure is
    |mu_hat - mu| > epsilon * mu. Run i uses seed XOR i, so the report is a
    pure function of (suite, algo, parameters, seed) at any worker count.

    ``suite`` entries are (name, formula, exact_mu).
    """

    def one_formula(entry):
        name, f, mu = entry
        failures = 0
        rel_errs = []
        ns = []
        bits = []
        steps = []
        for i in range(runs):
            est = run_estimator(algo, f, epsilon, delta, beta, seed ^ i)
            rel = abs(est.mu_hat - mu) / mu
            rel_errs.append(rel)
            ns.append(est.N)
            bits.append(est.bits)
            steps.append(est.steps)
            if abs(est.mu_hat - mu) > epsilon * mu:
                failures += 1
        return PacRow(
            formula=name,
            algo=algo,
            n=f.n,
            m=f.m,
            epsilon=epsilon,
            delta=delta,
            runs=runs,
            failures=failures,
            exact_mu=mu,
            mean_rel_err=float(np.mean(rel_errs)),
            mean_N=float(np.mean(ns)),
            mean_bits=float(np.mean(bits)),
            mean_steps=float(np.mean(steps)),
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one_formula, suite))
    else:
        rows = [one_formula(e) for e in suite]
    return PacReport(epsilon=epsilon, delta=delta, runs_per_formula=runs,
                     seed=seed, rows=tuple(rows))


def accuracy_suite(seed: int = 2024, sizes: Sequence[int] = (4, 8, 12, 16, 20, 24)):
    """Stem-benchmark accuracy suite: for each n, m ranges over {3,4,5,6}*n/4.

    Returns (name, formula, exact_mu) triples; every formula admits exact
    enumeration.
    """
    suite = []
    for n in sizes:
        for k in (3, 4, 5, 6):
            m = max(1, (k * n) // 4)
            lam = max(1, min(int(2 * math.log2(m)) if m > 1 else 1, n - 1))
            f = generate_benchmark(n, m, alpha=2, gamma=1, lam=lam,
                                   seed=mix_seed(seed, n, k))
            mu = exact_count(f).mu
            suite.append((f"stem-n{n}-m{m}", f, mu))
    return suite


def work_scaling_params(n: int) -> dict:
    """Size-sweep generator parameters: m=n, 2 stems, shallow stems, wide tails."""
    lg = math.log2(n)
    return {"n": n, "m": n, "alpha": 2, "gamma": max(1, int(lg / 10)), "lam": int(2 * lg)}


def randomness_scaling_params(n: int) -> dict:
    """Randomness-comparison parameters: 8 stems, deeper stems so p stays moderate."""
    lg = math.log2(n)
    return {"n": n, "m": n, "alpha": 8, "gamma": max(1, int(lg / 4)), "lam": int(2 * lg)}


@dataclass(frozen=True)
class SweepRow:
    algo: str
    n: int
    m: int
    runs: int
    mean_steps: float
    mean_literals: float
    mean_bits: float
    mean_N: float
    mean_mu_hat: float
    wall_ms: float


def scaling_sweep(
    sizes: Sequence[int],
    algo: str,
    epsilon: float,
    delta: float,
    seed: int = 0,
    runs: int = 3,
    beta: float = 0.01,
    params: Callable[[int], dict] = work_scaling_params,
    workers: int = 1,
) -> list[SweepRow]:
    """One row per size: hardware-independent work counters plus wall time
    (recorded, never asserted)."""

    def one_size(n):
        cfg = params(n)
        f = generate_benchmark(cfg["n"], cfg["m"], cfg["alpha"], cfg["gamma"],
                               cfg["lam"], seed=mix_seed(seed, n))
        t0 = time.perf_counter()
        ests = [run_estimator(algo, f, epsilon, delta, beta, mix_seed(seed, n, r))
                for r in range(runs)]
        wall = (time.perf_counter() - t0) * 1000.0
        return SweepRow(
            algo=algo,
            n=cfg["n"],
            m=cfg["m"],
            runs=runs,
            mean_steps=float(np.mean([e.steps for e in ests])),
            mean_literals=float(np.mean([e.literal_samples for e in ests])),
            mean_bits=float(np.mean([e.bits for e in ests])),
            mean_N=float(np.mean([e.N for e in ests])),
            mean_mu_hat=float(np.mean([e.mu_hat for e in ests])),
            wall_ms=wall,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one_size, sizes))
    return [one_size(n) for n in sizes]


def empirical_success_rate(
    f: Formula,
    perm: BlendedPermutation,
    trials: int,
    seed: int,
    short_circuit: bool = True,
) -> float:
    """Fraction of successful trials for a fixed clause order."""
    store = build_store(f, perm)
    rng = InstrumentedRng(seed)
    wins, _, _ = _kernels.trial_batch(
        rng.state, store.lit_var, store.lit_pol, store.clause_off,
        store.prefix_max, store.rho, store.alias.thresh, store.alias.alias,
        store.n, trials, short_circuit,
    )
    return int(wins) / trials
