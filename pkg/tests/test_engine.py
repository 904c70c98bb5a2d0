import math
from decimal import Decimal, getcontext
from itertools import permutations

import numpy as np
import pytest
import scipy.stats

import dnfcount as dc
from dnfcount import _kernels
from dnfcount.engine import _tail_bound, width_heuristic
from dnfcount.stats import empirical_success_rate

getcontext().prec = 60


def decimal_tail(t, eps):
    e = Decimal(eps)
    one = Decimal(1)
    la = e / (one + e) - (one + e).ln()
    lb = -e / (one - e) - (one - e).ln()
    return (t * la).exp() + (t * lb).exp()


def decimal_minimal_T(eps, delta):
    d = Decimal(delta)
    hi = 1
    while decimal_tail(hi, eps) > d:
        hi *= 2
    lo = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if decimal_tail(mid, eps) <= d:
            hi = mid
        else:
            lo = mid + 1
    return lo


def decimal_bracket(eps, delta):
    e, d = Decimal(eps), Decimal(delta)
    one = Decimal(1)
    lo = (Decimal(2) / d).ln() / ((one - e).ln() + e / (one - e))
    hi = (Decimal(2) / d).ln() / ((one + e).ln() - e / (one + e))
    return lo, hi


def lits(*pairs):
    return tuple(dc.Literal(v, p) for v, p in pairs)


def exact_coverage_p_tiny(f):
    """Brute-force E[1/L] of the coverage process over (clause, extension) pairs."""
    rho_phi = dc.formula_weight(f)
    total = 0.0
    for s, clause in enumerate(f.clauses):
        fixed = {l.variable: l.polarity for l in clause}
        free = [v for v in range(f.n) if v not in fixed]
        for pat in range(1 << len(free)):
            nu = dict(fixed)
            w = dc.clause_weight(f, s)
            for j, v in enumerate(free):
                bit = bool((pat >> j) & 1)
                nu[v] = bit
                w *= f.weights.of_variable(v) if bit else 1 - f.weights.of_variable(v)
            ell = dc.count_true_clauses(f, [nu[v] for v in range(f.n)])
            total += w / ell
    return total / rho_phi


class TestComputeT:
    def test_frozen_value_and_decimal_oracle(self):
        assert dc.compute_T_main(0.05, 0.05) == 2965 == decimal_minimal_T(0.05, 0.05)

    def test_bracket_eps_delta_005(self):
        lo, hi = decimal_bracket(0.05, 0.05)
        t = dc.compute_T_main(0.05, 0.05)
        assert math.ceil(lo) <= t <= math.ceil(hi)

    def test_minimality(self):
        for eps, delta in [(0.05, 0.05), (0.1, 0.05), (0.3, 0.2), (0.7, 0.7)]:
            t = dc.compute_T_main(eps, delta)
            assert _tail_bound(t, eps) <= delta
            assert t == 1 or _tail_bound(t - 1, eps) > delta

    def test_bracket_large_params(self):
        lo, hi = decimal_bracket(0.5, 0.25)
        t = dc.compute_T_main(0.5, 0.25)
        assert math.ceil(lo) <= t <= math.ceil(hi)
        assert t == decimal_minimal_T(0.5, 0.25)

    def test_domain_errors(self):
        for eps, delta in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0), (-0.1, 0.5)]:
            with pytest.raises(ValueError):
                dc.compute_T_main(eps, delta)

    def test_warns_outside_theory_range(self, caplog):
        with caplog.at_level("WARNING", logger="dnfcount"):
            dc.compute_T_main(0.8, 0.1)
        assert any("outside (0, 3/4)" in r.message for r in caplog.records)


class TestChernoffLower:
    def test_plugin_identity_at_equal_args(self):
        for x in (0.5, 1.0, 7.0, 1e6):
            assert dc.chernoff_lower(x, x) == pytest.approx(1.0, rel=1e-15)

    def test_matches_lower_stopping_tail_term(self):
        # F(T/(1-eps), T) must equal the lower tail term of the stopping bound
        t, eps = 100, 0.1
        lhs = dc.chernoff_lower(t / (1 - eps), t)
        rhs = math.exp(t * (-eps / (1 - eps) - math.log(1 - eps)))
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_monotone_nonincreasing_in_x(self):
        y = 10.0
        vals = [dc.chernoff_lower(x, y) for x in np.linspace(10.0, 50.0, 100)]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            dc.chernoff_lower(1.0, 2.0)
        with pytest.raises(ValueError):
            dc.chernoff_lower(1.0, 0.0)


class TestBlendPermutation:
    def test_beta_zero_is_heuristic_order(self):
        f = dc.generate_benchmark(16, 10, alpha=2, gamma=1, lam=4, seed=2)
        perm = dc.blend_permutation(f, beta=0.0, seed=99)
        assert perm.pi.tolist() == width_heuristic(f)

    def test_width_heuristic_sorted_and_deterministic(self):
        f = dc.Formula(
            n=4,
            clauses=(lits((0, True), (1, True)), lits((2, True)), lits((3, True))),
        )
        order = width_heuristic(f)
        assert sorted(order) == [0, 1, 2]
        assert order[-1] == 0  # widest clause last
        assert order == width_heuristic(f)

    def test_width_heuristic_scatters_equal_width_runs(self):
        # clauses arrive in two correlated batches; equal-width ties must not
        # preserve the batch blocks
        f = dc.generate_benchmark(2**10, 2**10, alpha=2, gamma=1, lam=20, seed=3)
        order = width_heuristic(f)
        half = f.m // 2
        first_band = [i for i in order[:40]]
        from_first_batch = sum(1 for i in first_band if i < half)
        assert 5 <= from_first_batch <= 35

    def test_first_step_probability_formula(self):
        # widths [1,2,3]: v'=1, mean width 2 -> beta * min(1, 1/2)
        assert dc.engine.random_branch_probability(1, 2.0, 0.01) == pytest.approx(0.005)
        assert dc.engine.random_branch_probability(5, 2.0, 0.01) == pytest.approx(0.01)

    def test_beta_one_uniform_widths_is_uniform_permutation(self):
        f = dc.Formula(n=4, clauses=tuple(lits((v, True)) for v in range(4)))
        counts = {p: 0 for p in permutations(range(4))}
        runs = 10_000
        for seed in range(runs):
            perm = dc.blend_permutation(f, beta=1.0, seed=seed)
            counts[tuple(perm.pi.tolist())] += 1
        expect = runs / 24
        chi2 = sum((c - expect) ** 2 / expect for c in counts.values())
        assert chi2 < scipy.stats.chi2.ppf(0.999, df=23)

    def test_is_permutation_and_deterministic(self):
        f = dc.generate_benchmark(32, 24, alpha=2, gamma=1, lam=5, seed=4)
        a = dc.blend_permutation(f, beta=0.3, seed=5)
        b = dc.blend_permutation(f, beta=0.3, seed=5)
        assert a.pi.tolist() == b.pi.tolist()
        assert sorted(a.pi.tolist()) == list(range(f.m))

    def test_beta_domain(self):
        f = dc.parse_dnf(b"p dnf 1 1\n1 0\n")
        with pytest.raises(ValueError):
            dc.blend_permutation(f, beta=1.5, seed=0)

    def test_heuristic_validated(self):
        f = dc.parse_dnf(b"p dnf 2 2\n1 0\n2 0\n")
        with pytest.raises(ValueError):
            dc.blend_permutation(f, beta=0.0, seed=0, heuristic=[0, 0])


class TestClauseStore:
    def test_relabeling_first_occurrence_order(self):
        # clauses {x5&x2},{x9},{x5} stored with literals sorted by variable,
        # so x2 is relabeled first
        f = dc.Formula(
            n=10,
            clauses=(lits((4, True), (1, True)), lits((8, True)), lits((4, True))),
        )
        store = dc.build_store(f, dc.BlendedPermutation(pi=np.arange(3), beta=0.0, seed=0))
        assert store.clause_at(0) == [(0, True), (1, True)]
        assert store.clause_at(1) == [(2, True)]
        assert store.clause_at(2) == [(1, True)]
        assert store.prefix_max.tolist() == [1, 2, 2]

    def test_relabel_bijection_round_trip(self):
        f = dc.generate_benchmark(24, 16, alpha=2, gamma=2, lam=4, seed=6)
        perm = dc.blend_permutation(f, beta=0.5, seed=1)
        store = dc.build_store(f, perm)
        for v in range(f.n):
            assert store.inverse[store.relabel[v]] == v

    def test_first_occurrences_consecutive_and_sorted_within_clause(self):
        f = dc.generate_benchmark(30, 20, alpha=3, gamma=2, lam=5, seed=8)
        store = dc.build_store(f, dc.blend_permutation(f, beta=1.0, seed=3))
        seen = set()
        next_new = 0
        for idx in range(store.lit_var.shape[0]):
            v = int(store.lit_var[idx])
            if v not in seen:
                assert v == next_new
                seen.add(v)
                next_new += 1
        for j in range(store.m):
            cl = [v for v, _ in store.clause_at(j)]
            assert cl == sorted(cl)

    def test_prefix_max_nondecreasing_and_bounded(self):
        f = dc.generate_benchmark(30, 20, alpha=3, gamma=2, lam=5, seed=8)
        store = dc.build_store(f, dc.blend_permutation(f, beta=0.2, seed=3))
        widths = np.diff(store.clause_off)
        cum = np.cumsum(widths)
        for j in range(store.m):
            assert store.prefix_max[j] <= cum[j] - 1
            if j:
                assert store.prefix_max[j] >= store.prefix_max[j - 1]

    def test_weights_follow_source_clauses(self):
        f = dc.parse_dnf(b"p dnf 4 3\n1 0\n1 2 0\n1 2 3 -4 0\n")
        perm = dc.blend_permutation(f, beta=1.0, seed=11)
        store = dc.build_store(f, perm)
        for pos in range(store.m):
            assert store.weights[pos] == dc.clause_weight(f, int(perm.pi[pos]))
        assert store.alias.total_weight == pytest.approx(dc.formula_weight(f), rel=1e-15)

    def test_rho_moves_with_relabeling(self):
        f = dc.parse_dnf(b"p dnf 3 2\nw 1 0.25\nw 3 0.125\n3 0\n1 2 0\n")
        store = dc.build_store(f, dc.BlendedPermutation(pi=np.arange(2), beta=0.0, seed=0))
        for v in range(f.n):
            assert store.rho[store.relabel[v]] == f.weights.of_variable(v)


class TestRunTrial:
    def test_single_clause_always_succeeds(self):
        f = dc.parse_dnf(b"p dnf 2 1\n1 2 0\n")
        store = dc.build_store(f, dc.BlendedPermutation(pi=np.arange(1), beta=0.0, seed=0))
        asg = dc.LazyAssignment(f.n)
        rng = dc.InstrumentedRng(44)
        for _ in range(200):
            ok, stats = dc.run_trial(store, asg, rng)
            assert ok
            assert stats.steps == 0 and stats.literals_sampled == 0
            assert stats.bits == 128  # clause sample + uniform variate
            assert asg.is_clear()

    def test_identical_copies_rate_one_over_m(self):
        m = 8
        f = dc.Formula(n=1, clauses=(lits((0, True)),) * m)
        perm = dc.BlendedPermutation(pi=np.arange(m), beta=0.0, seed=0)
        trials = 100_000
        rate = empirical_success_rate(f, perm, trials, seed=99)
        sigma = math.sqrt((1 / m) * (1 - 1 / m) / trials)
        assert abs(rate - 1 / m) <= 5 * sigma

    def test_two_clause_rate_both_permutations(self):
        f = dc.parse_dnf(b"p dnf 2 2\n1 0\n2 0\n")
        assert exact_coverage_p_tiny(f) == pytest.approx(0.75, abs=1e-15)
        trials = 100_000
        sigma = math.sqrt(0.75 * 0.25 / trials)
        for pi in ([0, 1], [1, 0]):
            perm = dc.BlendedPermutation(pi=np.array(pi, dtype=np.int64), beta=0.0, seed=0)
            rate = empirical_success_rate(f, perm, trials, seed=5)
            assert abs(rate - 0.75) <= 5 * sigma

    def test_short_circuit_matches_full_evaluation(self):
        f = dc.generate_benchmark(10, 8, alpha=2, gamma=1, lam=3, seed=13)
        p = dc.exact_count(f).p
        perm = dc.blend_permutation(f, beta=0.01, seed=7)
        trials = 100_000
        sigma = math.sqrt(p * (1 - p) / trials)
        fast = empirical_success_rate(f, perm, trials, seed=21, short_circuit=True)
        slow = empirical_success_rate(f, perm, trials, seed=22, short_circuit=False)
        assert abs(fast - p) <= 5 * sigma
        assert abs(slow - p) <= 5 * sigma

    def test_assignment_clear_after_random_trials(self):
        f = dc.generate_benchmark(20, 15, alpha=2, gamma=2, lam=4, seed=17)
        store = dc.build_store(f, dc.blend_permutation(f, beta=0.1, seed=2))
        asg = dc.LazyAssignment(f.n)
        rng = dc.InstrumentedRng(3)
        for _ in range(500):
            dc.run_trial(store, asg, rng)
            assert asg.is_clear()

    def test_requires_matching_sizes(self):
        f = dc.parse_dnf(b"p dnf 2 1\n1 0\n")
        store = dc.build_store(f, dc.BlendedPermutation(pi=np.arange(1), beta=0.0, seed=0))
        with pytest.raises(ValueError):
            dc.run_trial(store, dc.LazyAssignment(5), dc.InstrumentedRng(0))


class TestEstimateMain:
    def test_single_clause_deterministic_path(self):
        f = dc.parse_dnf(b"p dnf 2 1\n1 2 0\n")
        est = dc.estimate_main(f, 0.1, 0.05, seed=0)
        assert est.N == est.T == est.Y
        assert est.p_hat == 1.0
        assert est.mu_hat == 0.25
        assert len(est.successes) == est.N
        assert all(b == 1 for b in est.successes)

    def test_estimate_invariants(self):
        f = dc.generate_benchmark(12, 9, alpha=2, gamma=1, lam=3, seed=19)
        est = dc.estimate_main(f, 0.2, 0.1, seed=5)
        assert est.p_hat == est.T / est.N
        assert est.mu_hat == est.rho_phi * est.p_hat
        assert est.Y == est.T <= est.N
        assert 1 / est.N <= est.p_hat <= 1.0
        assert est.steps <= est.N * (f.m - 1)  # a trial never inspects more than m-1 clauses
        assert len(est.successes) == est.N
        assert est.successes[-1] == 1
        assert sum(est.successes) == est.T

    def test_deterministic_estimates(self):
        f = dc.generate_benchmark(12, 9, alpha=2, gamma=1, lam=3, seed=19)
        a = dc.estimate_main(f, 0.2, 0.1, seed=77)
        b = dc.estimate_main(f, 0.2, 0.1, seed=77)
        assert a == b

    def test_bits_identity_unweighted(self):
        f = dc.generate_benchmark(12, 9, alpha=2, gamma=1, lam=3, seed=19)
        beta, seed = 0.01, 31
        rng = dc.InstrumentedRng(seed)
        dc.blend_permutation(f, beta, rng=rng)
        p1_bits = rng.bits_consumed
        est = dc.estimate_main(f, 0.2, 0.1, beta=beta, seed=seed)
        assert est.bits == p1_bits + 128 * est.N + est.literal_samples

    def test_pac_bound_two_clause(self):
        f = dc.parse_dnf(b"p dnf 2 2\n1 0\n2 0\n")
        eps, delta, runs = 0.1, 0.05, 400
        failures = sum(
            1
            for s in range(runs)
            if abs(dc.estimate_main(f, eps, delta, seed=s).mu_hat - 0.75) > eps * 0.75
        )
        slack = 3 * math.sqrt(delta * (1 - delta) / runs)
        assert failures / runs <= delta + slack

    def test_mean_trials_negative_binomial(self):
        f = dc.parse_dnf(b"p dnf 2 2\n1 0\n2 0\n")
        p = dc.exact_count(f).p
        t = dc.compute_T_main(0.1, 0.05)
        runs = 300
        mean_n = np.mean([dc.estimate_main(f, 0.1, 0.05, seed=s).N for s in range(runs)])
        sd_mean = math.sqrt(t * (1 - p)) / p / math.sqrt(runs)
        assert abs(mean_n - t / p) <= 5 * sd_mean

    def test_trial_count_distribution_is_negative_binomial(self):
        # stronger than the mean check: N - T must follow the exact law of
        # failures before the T-th success at rate p
        f = dc.parse_dnf(b"p dnf 2 2\n1 0\n2 0\n")
        p = dc.exact_count(f).p
        eps, delta = 0.3, 0.3
        t = dc.compute_T_main(eps, delta)
        runs = 2000
        failures = np.array(
            [dc.estimate_main(f, eps, delta, seed=s).N - t for s in range(runs)]
        )
        ref = scipy.stats.nbinom(t, p).rvs(size=runs, random_state=7)
        _, pvalue = scipy.stats.ks_2samp(failures, ref)
        assert pvalue > 0.01

    def test_permutation_invariance_of_estimates(self):
        f = dc.parse_dnf(b"p dnf 3 3\n1 0\n2 0\n3 0\n")
        p = dc.exact_count(f).p
        trials = 100_000
        sigma = math.sqrt(p * (1 - p) / trials)
        rates = []
        for k, pi in enumerate(permutations(range(3))):
            if k >= 5:
                break
            perm = dc.BlendedPermutation(pi=np.array(pi, dtype=np.int64), beta=0.0, seed=0)
            rate = empirical_success_rate(f, perm, trials, seed=100 + k)
            assert abs(rate - p) <= 5 * sigma
            rates.append(rate)
        assert max(rates) - min(rates) <= 10 * sigma

    def test_debug_hygiene_mode(self):
        f = dc.generate_benchmark(14, 10, alpha=2, gamma=1, lam=4, seed=23)
        est = dc.estimate_main(f, 0.3, 0.3, seed=1, debug=True)
        assert est.N >= est.T

    def test_domain_errors(self):
        f = dc.parse_dnf(b"p dnf 2 1\n1 2 0\n")
        with pytest.raises(ValueError):
            dc.estimate_main(f, 0.0, 0.05)
        with pytest.raises(ValueError):
            dc.estimate_main(f, 0.1, 1.0)

    def test_degenerate_weights_rejected(self):
        f = dc.Formula(
            n=2,
            clauses=(lits((0, True)), lits((1, True))),
            weights=dc.WeightFn([1.0, 0.5]),
        )
        with pytest.raises(ValueError, match="strictly inside"):
            dc.estimate_main(f, 0.1, 0.05)
