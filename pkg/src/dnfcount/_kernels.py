"""Compiled hot loops: RNG primitives, trial execution, estimator drivers, exact enumeration.

Everything here operates on plain numpy arrays so the public modules stay
thin wrappers. The RNG is xoshiro256** seeded via splitmix64; its state
lives in a 7-slot uint64 array:

    [0:4]  generator state
    [4]    pending fair-bit buffer word (consumed most-significant first)
    [5]    number of buffered bits remaining
    [6]    bits consumed so far under the accounting cost model

Cost model (charged to slot 6): 1 bit per fair coin, 64 bits per
Bernoulli(q != 1/2), per uniform variate, per weighted clause sample and
per bounded-integer draw.
"""

import numpy as np
from numba import njit

U0 = np.uint64(0)
U1 = np.uint64(1)
U64 = np.uint64(64)
MASK53 = np.uint64((1 << 53) - 1)
TWO64_F = 18446744073709551616.0  # 2.0**64
INV_TWO64 = 2.0 ** -64
INV_TWO53 = 2.0 ** -53

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def seed_state(state, seed):
    z = np.uint64(seed)
    for i in range(4):
        z = z + _SM_GAMMA
        w = z
        w = (w ^ (w >> np.uint64(30))) * _SM_M1
        w = (w ^ (w >> np.uint64(27))) * _SM_M2
        state[i] = w ^ (w >> np.uint64(31))
    state[4] = U0
    state[5] = U0
    state[6] = U0


@njit(cache=True, nogil=True)
def raw_word(state):
    # xoshiro256**; does not charge the bit counter.
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    x = s1 * np.uint64(5)
    result = ((x << np.uint64(7)) | (x >> np.uint64(57))) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return result


@njit(cache=True, nogil=True)
def next_bit(state):
    if state[5] == U0:
        state[4] = raw_word(state)
        state[5] = U64
    state[5] -= U1
    state[6] += U1
    return np.int64((state[4] >> state[5]) & U1)


@njit(cache=True, nogil=True)
def bernoulli(state, q):
    # Fair coins come from the bit buffer at 1-bit cost; anything else
    # burns a whole word. The comparison w < q*2^64 is exact in reals.
    if q == 0.5:
        return next_bit(state)
    state[6] += U64
    w = raw_word(state)
    t = q * TWO64_F
    if t >= TWO64_F:
        return np.int64(1)
    tf = np.floor(t)
    tu = np.uint64(tf)
    if w < tu:
        return np.int64(1)
    if w > tu:
        return np.int64(0)
    return np.int64(1) if t > tf else np.int64(0)


@njit(cache=True, nogil=True)
def uniform_q(state):
    # (w+1)/2^64: strictly positive, reaches 1.0 at w = 2^64-1.
    state[6] += U64
    w = raw_word(state)
    return (np.float64(w) + 1.0) * INV_TWO64


@njit(cache=True, nogil=True)
def _mulhi_index(w, n):
    # floor(w * n / 2^64) for n < 2^32: unbiased-to-2^-64 index in [0, n).
    lo = w & np.uint64(0xFFFFFFFF)
    hi = w >> np.uint64(32)
    return np.int64((hi * n + ((lo * n) >> np.uint64(32))) >> np.uint64(32))


@njit(cache=True, nogil=True)
def randbelow(state, n):
    state[6] += U64
    w = raw_word(state)
    return _mulhi_index(w, np.uint64(n))


@njit(cache=True, nogil=True)
def sample_slot(state, thresh, alias):
    # One word per draw: high bits pick the slot, low 53 bits the coin.
    state[6] += U64
    w = raw_word(state)
    m = thresh.shape[0]
    slot = _mulhi_index(w, np.uint64(m))
    coin = np.float64(w & MASK53) * INV_TWO53
    if coin < thresh[slot]:
        return slot
    return alias[slot]


@njit(cache=True, nogil=True)
def bit_batch(state, k):
    out = np.int64(0)
    for _ in range(k):
        out += next_bit(state)
    return out


@njit(cache=True, nogil=True)
def bernoulli_batch(state, q, k):
    out = np.int64(0)
    for _ in range(k):
        out += bernoulli(state, q)
    return out


@njit(cache=True, nogil=True)
def uniform_batch(state, k):
    out = np.empty(k, dtype=np.float64)
    for i in range(k):
        out[i] = uniform_q(state)
    return out


@njit(cache=True, nogil=True)
def sample_counts(state, thresh, alias, k):
    counts = np.zeros(thresh.shape[0], dtype=np.int64)
    for _ in range(k):
        counts[sample_slot(state, thresh, alias)] += 1
    return counts


@njit(cache=True, nogil=True)
def trial(state, lit_var, lit_pol, off, pmax, rho, thresh, alias,
          value, assigned, short_circuit):
    """One coverage trial; assumes value/assigned all-zero, restores that.

    Returns (success, steps, literal_samples, sampled_position).
    """
    m = off.shape[0] - 1
    s = sample_slot(state, thresh, alias)
    for idx in range(off[s], off[s + 1]):
        v = lit_var[idx]
        assigned[v] = 1
        value[v] = lit_pol[idx]
    q = uniform_q(state)
    invq = 1.0 / q
    if invq >= np.float64(m + 1):
        cap = np.int64(m + 1)
    else:
        cap = np.int64(invq)
    ell = np.int64(1)
    steps = np.int64(0)
    lits = np.int64(0)
    last = np.int64(-1)
    success = True
    for pos in range(m):
        if pos == s:
            continue
        steps += 1
        last = pos
        sat = True
        for idx in range(off[pos], off[pos + 1]):
            v = lit_var[idx]
            if assigned[v] == 1:
                if value[v] != lit_pol[idx]:
                    sat = False
                    break
            else:
                x = bernoulli(state, rho[v])
                assigned[v] = 1
                value[v] = np.uint8(x)
                lits += 1
                if value[v] != lit_pol[idx]:
                    sat = False
                    break
        if sat:
            ell += 1
            if short_circuit and ell > cap:
                success = False
                break
    if not short_circuit:
        success = ell <= cap
    # Contiguous prefix clear up to the largest relabeled index any inspected
    # clause can own, then sparse-clear the sampled clause.
    if last >= 0:
        t = pmax[last]
        value[:t + 1] = 0
        assigned[:t + 1] = 0
    for idx in range(off[s], off[s + 1]):
        v = lit_var[idx]
        assigned[v] = 0
        value[v] = 0
    return success, steps, lits, s


@njit(cache=True, nogil=True)
def trial_batch(state, lit_var, lit_pol, off, pmax, rho, thresh, alias,
                n, trials, short_circuit):
    """Run a fixed number of trials; returns (successes, steps, literal_samples)."""
    value = np.zeros(n, dtype=np.uint8)
    assigned = np.zeros(n, dtype=np.uint8)
    wins = np.int64(0)
    steps = np.int64(0)
    lits = np.int64(0)
    for _ in range(trials):
        ok, st, li, _ = trial(state, lit_var, lit_pol, off, pmax, rho,
                              thresh, alias, value, assigned, short_circuit)
        if ok:
            wins += 1
        steps += st
        lits += li
    return wins, steps, lits


@njit(cache=True, nogil=True)
def main_loop(state, lit_var, lit_pol, off, pmax, rho, thresh, alias,
              n, t_target, debug):
    """Adaptive run: trials until t_target successes.

    Returns (successes[:N], N, Y, steps, literal_samples, hygiene_ok).
    """
    value = np.zeros(n, dtype=np.uint8)
    assigned = np.zeros(n, dtype=np.uint8)
    cap = 4 * t_target + 64
    hist = np.empty(cap, dtype=np.uint8)
    num = np.int64(0)
    wins = np.int64(0)
    steps = np.int64(0)
    lits = np.int64(0)
    clean = True
    while wins < t_target:
        ok, st, li, _ = trial(state, lit_var, lit_pol, off, pmax, rho,
                              thresh, alias, value, assigned, True)
        if num == cap:
            cap *= 2
            bigger = np.empty(cap, dtype=np.uint8)
            bigger[:num] = hist[:num]
            hist = bigger
        hist[num] = 1 if ok else 0
        num += 1
        steps += st
        lits += li
        if ok:
            wins += 1
        if debug:
            for i in range(n):
                if value[i] != 0 or assigned[i] != 0:
                    clean = False
    return hist[:num].copy(), num, wins, steps, lits, clean


@njit(cache=True, nogil=True)
def lklm_loop(state, lit_var, lit_pol, off, rho, thresh, alias,
              n, t_target, debug):
    """Lazy KLM: geometric clause re-draws, sparse clearing between trials.

    Returns (N, Y, steps, literal_samples, hygiene_ok).
    """
    m = off.shape[0] - 1
    value = np.zeros(n, dtype=np.uint8)
    assigned = np.zeros(n, dtype=np.uint8)
    touched = np.empty(n, dtype=np.int64)
    big_n = np.int64(0)
    y = np.int64(0)
    steps = np.int64(0)
    lits = np.int64(0)
    clean = True
    while y < t_target:
        s = sample_slot(state, thresh, alias)
        ntouched = np.int64(0)
        for idx in range(off[s], off[s + 1]):
            v = lit_var[idx]
            assigned[v] = 1
            value[v] = lit_pol[idx]
            touched[ntouched] = v
            ntouched += 1
        while True:
            k = randbelow(state, m)
            y += 1
            steps += 1
            sat = True
            for idx in range(off[k], off[k + 1]):
                v = lit_var[idx]
                if assigned[v] == 1:
                    if value[v] != lit_pol[idx]:
                        sat = False
                        break
                else:
                    x = bernoulli(state, rho[v])
                    assigned[v] = 1
                    value[v] = np.uint8(x)
                    touched[ntouched] = v
                    ntouched += 1
                    lits += 1
                    if value[v] != lit_pol[idx]:
                        sat = False
                        break
            if sat:
                break
        big_n += 1
        for i in range(ntouched):
            v = touched[i]
            assigned[v] = 0
            value[v] = 0
        if debug:
            for i in range(n):
                if value[i] != 0 or assigned[i] != 0:
                    clean = False
    return big_n, y, steps, lits, clean


@njit(cache=True, nogil=True)
def klm_loop(state, lit_var, lit_pol, off, rho, thresh, alias,
             n, t_target):
    """Eager KLM: full assignment drawn up front each trial.

    Returns (N, Y, steps, literal_samples).
    """
    m = off.shape[0] - 1
    value = np.zeros(n, dtype=np.uint8)
    big_n = np.int64(0)
    y = np.int64(0)
    steps = np.int64(0)
    lits = np.int64(0)
    while y < t_target:
        s = sample_slot(state, thresh, alias)
        for v in range(n):
            value[v] = np.uint8(bernoulli(state, rho[v]))
        lits += n
        for idx in range(off[s], off[s + 1]):
            value[lit_var[idx]] = lit_pol[idx]
        while True:
            k = randbelow(state, m)
            y += 1
            steps += 1
            sat = True
            for idx in range(off[k], off[k + 1]):
                if value[lit_var[idx]] != lit_pol[idx]:
                    sat = False
                    break
            if sat:
                break
        big_n += 1
    return big_n, y, steps, lits


@njit(cache=True, nogil=True)
def build_store_arrays(lit_var, lit_pol, off, pi, n):
    """Gather literals in permutation order, relabel variables to
    first-occurrence order, and sort each clause by relabeled index.

    Returns (new_var, new_pol, new_off, relabel, inverse, prefix_max).
    """
    m = off.shape[0] - 1
    total = lit_var.shape[0]
    new_var = np.empty(total, dtype=np.int64)
    new_pol = np.empty(total, dtype=np.uint8)
    new_off = np.empty(m + 1, dtype=np.int64)
    relabel = np.full(n, -1, dtype=np.int64)
    inverse = np.empty(n, dtype=np.int64)
    pmax = np.empty(m, dtype=np.int64)
    nxt = np.int64(0)
    pos = np.int64(0)
    running = np.int64(-1)
    for j in range(m):
        new_off[j] = pos
        c = pi[j]
        for idx in range(off[c], off[c + 1]):
            v = lit_var[idx]
            if relabel[v] < 0:
                relabel[v] = nxt
                inverse[nxt] = v
                nxt += 1
            new_var[pos] = relabel[v]
            new_pol[pos] = lit_pol[idx]
            pos += 1
        # insertion sort of (var, pol) pairs; clause widths are small
        lo = new_off[j]
        for i in range(lo + 1, pos):
            kv = new_var[i]
            kp = new_pol[i]
            k = i - 1
            while k >= lo and new_var[k] > kv:
                new_var[k + 1] = new_var[k]
                new_pol[k + 1] = new_pol[k]
                k -= 1
            new_var[k + 1] = kv
            new_pol[k + 1] = kp
        if pos > lo and new_var[pos - 1] > running:
            running = new_var[pos - 1]
        pmax[j] = running
    new_off[m] = pos
    for v in range(n):
        if relabel[v] < 0:
            relabel[v] = nxt
            inverse[nxt] = v
            nxt += 1
    return new_var, new_pol, new_off, relabel, inverse, pmax


@njit(cache=True, nogil=True)
def count_models(var_mask, val_mask, n):
    """Number of assignments satisfying any clause (bitmask DNF, n <= ~26)."""
    m = var_mask.shape[0]
    count = np.int64(0)
    for a in range(np.int64(1) << np.int64(n)):
        au = np.uint64(a)
        for i in range(m):
            if (au & var_mask[i]) == val_mask[i]:
                count += 1
                break
    return count


@njit(cache=True, nogil=True)
def weighted_model_mass(var_mask, val_mask, rho, n):
    """(satisfying count, weighted mass) by full enumeration, Kahan-compensated."""
    m = var_mask.shape[0]
    count = np.int64(0)
    total = 0.0
    comp = 0.0
    for a in range(np.int64(1) << np.int64(n)):
        au = np.uint64(a)
        sat = False
        for i in range(m):
            if (au & var_mask[i]) == val_mask[i]:
                sat = True
                break
        if not sat:
            continue
        count += 1
        w = 1.0
        for v in range(n):
            if ((au >> np.uint64(v)) & U1) != U0:
                w *= rho[v]
            else:
                w *= 1.0 - rho[v]
        t = total + w
        if abs(total) >= abs(w):
            comp += (total - t) + w
        else:
            comp += (w - t) + total
        total = t
    return count, total + comp


@njit(cache=True, nogil=True)
def coverage_success_sum(var_mask, val_mask, n):
    """Sum over (clause s, extension of its free variables) of 1/L.

    Each term carries implicit weight 2^-n in the unweighted coverage
    process, so the caller computes p = 2^-n * sum / rho_phi.
    """
    m = var_mask.shape[0]
    total = 0.0
    comp = 0.0
    free = np.empty(n, dtype=np.int64)
    for s in range(m):
        nfree = np.int64(0)
        for v in range(n):
            if ((var_mask[s] >> np.uint64(v)) & U1) == U0:
                free[nfree] = v
                nfree += 1
        base = val_mask[s]
        for pat in range(np.int64(1) << nfree):
            a = base
            pu = np.uint64(pat)
            for j in range(nfree):
                if ((pu >> np.uint64(j)) & U1) != U0:
                    a |= U1 << np.uint64(free[j])
            ell = np.int64(0)
            for i in range(m):
                if (a & var_mask[i]) == val_mask[i]:
                    ell += 1
            w = 1.0 / np.float64(ell)
            t = total + w
            if abs(total) >= abs(w):
                comp += (total - t) + w
            else:
                comp += (w - t) + total
            total = t
    return total + comp
