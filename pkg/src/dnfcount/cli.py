"""Command-line entry point: count, gen, bench, verify.

Exit codes: 0 success, 2 DNF parse error, 3 parameter domain error,
4 exact-oracle cap exceeded, 5 verification assertion failure.
Set DNFCOUNT_LOG_LEVEL to adjust logging.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .baselines import OracleCapError, exact_count
from .engine import BlendedPermutation, Estimate
from .formula import DnfParseError, formula_weight, generate_benchmark, parse_dnf, serialize_dnf
from .sampling import mix_seed
from .stats import (
    accuracy_suite,
    binomial_slack,
    empirical_success_rate,
    pac_validate,
    run_estimator,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_CAP = 4
EXIT_VERIFY = 5

BENCH_CSV_HEADER = "algo,n,m,eps,delta,seed,run,mu_hat,p_hat,N,Y,steps,bits,wall_ms"
PAC_CSV_HEADER = ("suite,formula,algo,n,m,eps,delta,runs,failures,failure_rate,"
                  "threshold,exact_mu,mean_rel_err,mean_N,mean_bits,mean_steps,status")
LEMMA2_CSV_HEADER = "suite,formula,perm,trials,successes,rate,exact_p,zscore,status"


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)


@dataclass(frozen=True)
class RunRecord:
    """One estimator invocation: everything needed to audit or replay it.

    All fields except ``timestamp`` are reproduced by re-running with the
    same input bytes and seed.
    """

    estimate: Estimate
    algo: str
    input_digest: str
    version: str
    timestamp: float
    wall_ms: float

    @classmethod
    def create(cls, estimate: Estimate, algo: str, input_bytes: bytes,
               wall_ms: float) -> "RunRecord":
        return cls(
            estimate=estimate,
            algo=algo,
            input_digest=hashlib.sha256(input_bytes).hexdigest(),
            version=__version__,
            timestamp=time.time(),
            wall_ms=wall_ms,
        )

    def to_json_obj(self) -> dict:
        est = self.estimate
        return {
            "mu_hat": est.mu_hat,
            "p_hat": est.p_hat,
            "rho_phi": est.rho_phi,
            "T": est.T,
            "N": est.N,
            "Y": est.Y,
            "steps": est.steps,
            "bits": est.bits,
            "seed": est.seed,
            "algo": self.algo,
            "eps": est.epsilon,
            "delta": est.delta,
            "beta": est.beta,
            "wall_ms": self.wall_ms,
        }


def _default_gen_params(n: int, m, alpha, gamma, lam):
    """Fill unset generator flags with the size-sweep recipe."""
    if m is None:
        m = n
    lg = math.log2(m) if m > 1 else 1.0
    if gamma is None:
        gamma = max(1, int(lg / 10))
    if lam is None:
        lam = max(1, int(2 * lg))
    if alpha is None:
        alpha = 2
    return m, alpha, gamma, lam


def cmd_count(args) -> int:
    try:
        with open(args.file, "rb") as fh:
            raw = fh.read()
        f = parse_dnf(raw)
    except OSError as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DnfParseError as exc:
        print(f"error: {args.file}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    t0 = time.perf_counter()
    if args.algo == "exact":
        try:
            res = exact_count(f, max_n=args.max_n)
        except OracleCapError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CAP
        wall_ms = (time.perf_counter() - t0) * 1000.0
        record = {
            "algo": "exact",
            "mu": res.mu,
            "p": res.p,
            "model_count": res.model_count,
            "rho_phi": formula_weight(f),
            "wall_ms": wall_ms,
        }
        if args.json:
            print(json.dumps(record))
        else:
            print(f"mu={res.mu!r} p={res.p!r} model_count={res.model_count} wall_ms={wall_ms:.3f}")
        return EXIT_OK
    try:
        est = run_estimator(args.algo, f, args.eps, args.delta, args.beta, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    wall_ms = (time.perf_counter() - t0) * 1000.0
    record = RunRecord.create(est, args.algo, raw, wall_ms)
    if args.json:
        print(json.dumps(record.to_json_obj()))
    else:
        print(
            f"mu_hat={est.mu_hat!r} p_hat={est.p_hat!r} T={est.T} N={est.N} Y={est.Y} "
            f"steps={est.steps} bits={est.bits} wall_ms={wall_ms:.3f}"
        )
    return EXIT_OK


def cmd_gen(args) -> int:
    m, alpha, gamma, lam = _default_gen_params(args.n, args.m, args.alpha, args.gamma, args.lam)
    try:
        f = generate_benchmark(args.n, m, alpha, gamma, lam, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    data = serialize_dnf(f)
    if args.out is None or args.out == "-":
        sys.stdout.write(data.decode("ascii"))
    else:
        with open(args.out, "wb") as fh:
            fh.write(data)
    return EXIT_OK


def _parse_sizes(text: str) -> list[int]:
    """Accept '2^10..2^14' (doubling range) or comma-separated ints."""

    def one(tok: str) -> int:
        tok = tok.strip()
        if "^" in tok:
            base, exp = tok.split("^")
            return int(base) ** int(exp)
        return int(tok)

    if ".." in text:
        lo_s, hi_s = text.split("..")
        lo, hi = one(lo_s), one(hi_s)
        if lo < 1 or hi < lo:
            raise ValueError(f"bad size range {text!r}")
        sizes = []
        n = lo
        while n <= hi:
            sizes.append(n)
            n *= 2
        return sizes
    return [one(t) for t in text.split(",") if t.strip()]


def cmd_bench(args) -> int:
    try:
        sizes = _parse_sizes(args.sizes)
        algos = [a.strip() for a in args.algo.split(",") if a.strip()]
        for a in algos:
            if a not in ("main", "lklm", "klm"):
                raise ValueError(f"unknown estimator {a!r}")
        if args.eps <= 0 or args.eps >= 1 or args.delta <= 0 or args.delta >= 1:
            raise ValueError("eps and delta must lie in (0, 1)")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    formulas = {}
    for n in sizes:
        m, alpha, gamma, lam = _default_gen_params(n, args.m, args.alpha, args.gamma, args.lam)
        formulas[n] = generate_benchmark(n, m, alpha, gamma, lam, seed=mix_seed(args.seed, n))

    def one(task):
        n, algo, run = task
        f = formulas[n]
        t0 = time.perf_counter()
        est = run_estimator(algo, f, args.eps, args.delta, args.beta,
                            mix_seed(args.seed, n, algos.index(algo), run))
        wall_ms = (time.perf_counter() - t0) * 1000.0
        return (algo, n, f.m, args.eps, args.delta, est.seed, run, est.mu_hat,
                est.p_hat, est.N, est.Y, est.steps, est.bits, wall_ms)

    tasks = [(n, algo, run) for n in sizes for algo in algos for run in range(args.runs)]
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]
    results.sort(key=lambda r: (r[0], r[1], r[6]))
    lines = [BENCH_CSV_HEADER]
    for row in results:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
    _write_text(args.csv, "\n".join(lines) + "\n")
    return EXIT_OK


def _verify_pac(args) -> tuple[bool, list[str]]:
    suite = accuracy_suite(seed=mix_seed(args.seed, 1))
    algos = [a.strip() for a in args.algo.split(",") if a.strip()]
    lines = []
    ok = True
    for algo in algos:
        report = pac_validate(suite, algo, args.eps, args.delta, args.runs,
                              seed=mix_seed(args.seed, 2), workers=args.workers)
        threshold = args.delta + binomial_slack(args.delta, report.total_runs)
        passed = report.pooled_failure_rate <= threshold
        ok = ok and passed
        for r in report.rows:
            lines.append(
                f"pac,{r.formula},{r.algo},{r.n},{r.m},{r.epsilon!r},{r.delta!r},{r.runs},"
                f"{r.failures},{r.failures / r.runs!r},{threshold!r},{r.exact_mu!r},"
                f"{r.mean_rel_err!r},{r.mean_N!r},{r.mean_bits!r},{r.mean_steps!r},"
                f"{'pass' if passed else 'FAIL'}"
            )
        print(
            f"pac[{algo}]: pooled failure rate {report.pooled_failure_rate:.5f} "
            f"(threshold {threshold:.5f}) -> {'pass' if passed else 'FAIL'}"
        )
    return ok, [PAC_CSV_HEADER] + lines


def _verify_lemma2(args) -> tuple[bool, list[str]]:
    from .formula import Formula, Literal

    cases = [
        ("two-unit", parse_dnf(b"p dnf 2 2\n1 0\n2 0\n")),
        ("chain", parse_dnf(b"p dnf 4 3\n1 2 0\n2 3 0\n3 4 0\n")),
        ("mixed", parse_dnf(b"p dnf 5 4\n1 -2 0\n2 3 0\n-4 0\n4 5 0\n")),
        ("copies", Formula(n=2, clauses=tuple(((Literal(0, True), Literal(1, True)),) * 4))),
        ("stem", generate_benchmark(8, 6, alpha=2, gamma=2, lam=3, seed=5)),
    ]
    lines = []
    ok = True
    for case_idx, (name, f) in enumerate(cases):
        p = exact_count(f).p
        sigma = math.sqrt(p * (1.0 - p) / args.trials)
        for k in range(5):
            if k == 0:
                pi = np.arange(f.m)
            elif k == 1:
                pi = np.arange(f.m)[::-1].copy()
            else:
                pi = np.argsort(
                    np.array([mix_seed(args.seed, case_idx, k, i) for i in range(f.m)])
                ).astype(np.int64)
            perm = BlendedPermutation(pi=pi, beta=0.0, seed=args.seed)
            rate = empirical_success_rate(f, perm, args.trials, seed=mix_seed(args.seed, 3, k))
            z = (rate - p) / sigma if sigma > 0 else 0.0
            passed = abs(z) <= 5.0
            ok = ok and passed
            lines.append(
                f"lemma2,{name},{k},{args.trials},{round(rate * args.trials)},{rate!r},{p!r},"
                f"{z!r},{'pass' if passed else 'FAIL'}"
            )
            print(f"lemma2[{name} perm{k}]: rate {rate:.5f} exact {p:.5f} z {z:+.2f} "
                  f"-> {'pass' if passed else 'FAIL'}")
    return ok, [LEMMA2_CSV_HEADER] + lines


def cmd_verify(args) -> int:
    try:
        if args.eps <= 0 or args.eps >= 1 or args.delta <= 0 or args.delta >= 1:
            raise ValueError("eps and delta must lie in (0, 1)")
        if args.suite == "pac":
            ok, lines = _verify_pac(args)
        elif args.suite == "lemma2":
            ok, lines = _verify_lemma2(args)
        else:
            raise ValueError(f"unknown suite {args.suite!r}")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.csv:
        _write_text(args.csv, "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnfcount",
        description="Approximate weighted model counting for DNF formulas.",
    )
    parser.add_argument("--version", action="version", version=f"dnfcount {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_count = sub.add_parser("count", help="estimate or exactly compute the model ratio of a DNF file")
    p_count.add_argument("file")
    p_count.add_argument("--algo", choices=["main", "lklm", "klm", "exact"], default="main")
    p_count.add_argument("--eps", type=float, default=0.05)
    p_count.add_argument("--delta", type=float, default=0.05)
    p_count.add_argument("--beta", type=float, default=0.01)
    p_count.add_argument("--seed", type=int, default=0)
    p_count.add_argument("--max-n", type=int, default=26, help="exact-oracle enumeration cap")
    p_count.add_argument("--json", action="store_true")
    p_count.set_defaults(func=cmd_count)

    p_gen = sub.add_parser("gen", help="generate a stem-style benchmark DNF")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--m", type=int, default=None, help="defaults to n")
    p_gen.add_argument("--alpha", type=int, default=None, help="stem count (default 2)")
    p_gen.add_argument("--gamma", type=int, default=None, help="stem width (default max(1, log2(m)/10))")
    p_gen.add_argument("--lam", type=int, default=None, help="max extra width (default 2*log2(m))")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", default=None, help="output path; stdout when omitted")
    p_gen.set_defaults(func=cmd_gen)

    p_bench = sub.add_parser("bench", help="per-run work/randomness counters over a size sweep")
    p_bench.add_argument("--sizes", required=True, help="e.g. 2^10..2^14 or 1024,4096")
    p_bench.add_argument("--algo", default="main,lklm,klm")
    p_bench.add_argument("--runs", type=int, default=1)
    p_bench.add_argument("--eps", type=float, default=0.05)
    p_bench.add_argument("--delta", type=float, default=0.05)
    p_bench.add_argument("--beta", type=float, default=0.01)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--m", type=int, default=None)
    p_bench.add_argument("--alpha", type=int, default=None)
    p_bench.add_argument("--gamma", type=int, default=None)
    p_bench.add_argument("--lam", type=int, default=None)
    p_bench.add_argument("--csv", default=None, help="output path; stdout when omitted")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.set_defaults(func=cmd_bench)

    p_verify = sub.add_parser("verify", help="statistical acceptance suites")
    p_verify.add_argument("--suite", choices=["pac", "lemma2"], required=True)
    p_verify.add_argument("--runs", type=int, default=400)
    p_verify.add_argument("--trials", type=int, default=100000)
    p_verify.add_argument("--eps", type=float, default=0.1)
    p_verify.add_argument("--delta", type=float, default=0.05)
    p_verify.add_argument("--algo", default="main,lklm,klm")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--csv", default=None)
    p_verify.add_argument("--workers", type=int, default=1)
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("DNFCOUNT_LOG_LEVEL", "WARNING"))
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
