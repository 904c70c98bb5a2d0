import numpy as np
import pytest
from hypothesis import settings

import dnfcount as dc
from dnfcount import _kernels

settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so individual tests keep honest timings."""
    f = dc.parse_dnf(b"p dnf 2 2\n1 0\n2 0\n")
    dc.estimate_main(f, 0.5, 0.5, seed=0)
    dc.estimate_lklm(f, 0.5, 0.5, seed=0)
    dc.estimate_klm(f, 0.5, 0.5, seed=0)
    dc.exact_count(f)
    dc.exact_coverage_p(f)
    rng = dc.InstrumentedRng(0)
    _kernels.bit_batch(rng.state, 1)
    _kernels.bernoulli_batch(rng.state, 0.25, 1)
    _kernels.uniform_batch(rng.state, 1)
    table = dc.build_alias([1.0, 2.0])
    _kernels.sample_counts(rng.state, table.thresh, table.alias, 1)
    store = dc.build_store(f, dc.BlendedPermutation(pi=np.arange(2), beta=0.0, seed=0))
    asg = dc.LazyAssignment(f.n)
    dc.run_trial(store, asg, rng)
    _kernels.trial_batch(rng.state, store.lit_var, store.lit_pol, store.clause_off,
                         store.prefix_max, store.rho, store.alias.thresh,
                         store.alias.alias, store.n, 1, True)
