"""DNF formulas: representation, text format, weights, evaluation, synthetic generation.

Text format (ASCII):
    c <comment>
    p dnf <n> <m>
    w <var> <prob>          optional, 1-based var, prob in [0,1]
    <lit> <lit> ... 0       one clause per line, signed 1-based literals

Variables are 0-based in the API, 1-based in the text format. Clause
literals are kept sorted by variable index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .sampling import InstrumentedRng

__all__ = [
    "Literal",
    "Clause",
    "WeightFn",
    "Formula",
    "DnfParseError",
    "parse_dnf",
    "serialize_dnf",
    "clause_weight",
    "formula_weight",
    "count_true_clauses",
    "generate_benchmark",
]


class Literal(NamedTuple):
    """A variable occurrence: ``polarity=True`` means the positive literal."""

    variable: int
    polarity: bool


Clause = tuple  # tuple[Literal, ...]; non-empty, distinct variables, sorted


class DnfParseError(ValueError):
    """Raised for malformed DNF text; carries the 1-based offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class WeightFn:
    """Per-variable probability that the positive literal is drawn."""

    def __init__(self, rho: Sequence[float] | np.ndarray):
        arr = np.array(rho, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("weight function must be one-dimensional")
        if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        self._rho = arr
        self._rho.flags.writeable = False

    @classmethod
    def uniform(cls, n: int) -> "WeightFn":
        return cls(np.full(n, 0.5))

    @property
    def rho(self) -> np.ndarray:
        return self._rho

    def __len__(self) -> int:
        return self._rho.shape[0]

    def of_variable(self, v: int) -> float:
        return float(self._rho[v])

    def of_literal(self, lit: Literal) -> float:
        r = float(self._rho[lit.variable])
        return r if lit.polarity else 1.0 - r

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self._rho == 0.5))

    @property
    def margin(self) -> float:
        """min over variables of min(rho, 1-rho); zero if any weight is 0 or 1."""
        if len(self) == 0:
            return 0.5
        return float(np.minimum(self._rho, 1.0 - self._rho).min())

    def __eq__(self, other) -> bool:
        return isinstance(other, WeightFn) and np.array_equal(self._rho, other._rho)

    def __repr__(self) -> str:
        return f"WeightFn({self._rho.tolist()!r})"


def _normalize_clause(literals: Iterable[Literal], n: int, where: str = "clause") -> Clause:
    lits = [Literal(int(v), bool(p)) for v, p in literals]
    if not lits:
        raise ValueError(f"{where}: empty clause")
    seen: dict[int, bool] = {}
    for lit in lits:
        if not 0 <= lit.variable < n:
            raise ValueError(f"{where}: variable {lit.variable} out of range [0, {n})")
        if lit.variable in seen:
            if seen[lit.variable] != lit.polarity:
                raise ValueError(f"{where}: contradictory clause on variable {lit.variable}")
            raise ValueError(f"{where}: repeated variable {lit.variable}")
        seen[lit.variable] = lit.polarity
    lits.sort(key=lambda l: l.variable)
    return tuple(lits)


@dataclass(frozen=True)
class Formula:
    """An m-clause DNF over n variables with a per-variable weight function."""

    n: int
    clauses: tuple
    weights: WeightFn = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one variable")
        if not self.clauses:
            raise ValueError("need at least one clause")
        normalized = tuple(
            _normalize_clause(c, self.n, where=f"clause {i}") for i, c in enumerate(self.clauses)
        )
        object.__setattr__(self, "clauses", normalized)
        weights = self.weights if self.weights is not None else WeightFn.uniform(self.n)
        if len(weights) != self.n:
            raise ValueError("weight function length must equal variable count")
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        return len(self.clauses)

    def width(self, i: int) -> int:
        return len(self.clauses[i])

    @property
    def total_width(self) -> int:
        return sum(len(c) for c in self.clauses)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Formula)
            and self.n == other.n
            and self.clauses == other.clauses
            and self.weights == other.weights
        )

    def literal_arrays(self):
        """Flattened (lit_var, lit_pol, offsets) int64/uint8/int64 arrays; cached."""
        cached = getattr(self, "_arrays", None)
        if cached is not None:
            return cached
        total = self.total_width
        lit_var = np.empty(total, dtype=np.int64)
        lit_pol = np.empty(total, dtype=np.uint8)
        off = np.empty(self.m + 1, dtype=np.int64)
        pos = 0
        for i, clause in enumerate(self.clauses):
            off[i] = pos
            for lit in clause:
                lit_var[pos] = lit.variable
                lit_pol[pos] = 1 if lit.polarity else 0
                pos += 1
        off[self.m] = pos
        for arr in (lit_var, lit_pol, off):
            arr.flags.writeable = False
        object.__setattr__(self, "_arrays", (lit_var, lit_pol, off))
        return lit_var, lit_pol, off

    def clause_masks(self):
        """Per-clause (variable bitmask, value bitmask); requires n <= 63."""
        if self.n > 63:
            raise ValueError("bitmasks require n <= 63")
        var_mask = np.zeros(self.m, dtype=np.uint64)
        val_mask = np.zeros(self.m, dtype=np.uint64)
        for i, clause in enumerate(self.clauses):
            vm = 0
            sm = 0
            for lit in clause:
                vm |= 1 << lit.variable
                if lit.polarity:
                    sm |= 1 << lit.variable
            var_mask[i] = vm
            val_mask[i] = sm
        return var_mask, val_mask


def clause_weight(f: Formula, i: int) -> float:
    """rho(C_i) = product of literal probabilities; log-space above width 64."""
    clause = f.clauses[i]
    if len(clause) <= 64:
        w = 1.0
        for lit in clause:
            w *= f.weights.of_literal(lit)
        return w
    acc = 0.0
    for lit in clause:
        q = f.weights.of_literal(lit)
        if q == 0.0:
            return 0.0
        acc += math.log(q)
    return math.exp(acc)


def formula_weight(f: Formula) -> float:
    """rho(Phi): compensated sum of clause weights (may exceed 1)."""
    return math.fsum(clause_weight(f, i) for i in range(f.m))


def count_true_clauses(f: Formula, nu: Sequence[bool]) -> int:
    """Number of clauses satisfied by the full assignment nu."""
    if len(nu) != f.n:
        raise ValueError("assignment must cover all variables")
    count = 0
    for clause in f.clauses:
        for lit in clause:
            if bool(nu[lit.variable]) != lit.polarity:
                break
        else:
            count += 1
    return count


# --- text format ------------------------------------------------------------

def parse_dnf(data: bytes | str) -> Formula:
    """Parse the DNF text format; raises DnfParseError with a line number."""
    if isinstance(data, bytes):
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise DnfParseError(0, f"input is not ASCII: {exc}") from None
    else:
        text = data
    n = None
    m_declared = None
    weights: list[tuple[int, float, int]] = []
    clauses: list[list[Literal]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "dnf":
                raise DnfParseError(lineno, f"malformed header {line!r}; expected 'p dnf <n> <m>'")
            try:
                n = int(parts[2])
                m_declared = int(parts[3])
            except ValueError:
                raise DnfParseError(lineno, f"malformed header {line!r}: counts must be integers") from None
            if n < 1 or m_declared < 1:
                raise DnfParseError(lineno, "header counts must be positive")
            continue
        if line.startswith("w"):
            if n is None:
                raise DnfParseError(lineno, "weight line before header")
            parts = line.split()
            if len(parts) != 3:
                raise DnfParseError(lineno, f"malformed weight line {line!r}")
            try:
                var = int(parts[1])
                prob = float(parts[2])
            except ValueError:
                raise DnfParseError(lineno, f"malformed weight line {line!r}") from None
            if not 1 <= var <= n:
                raise DnfParseError(lineno, f"weight variable {var} out of range [1, {n}]")
            if not 0.0 <= prob <= 1.0 or math.isnan(prob):
                raise DnfParseError(lineno, f"weight {prob} outside [0, 1]")
            weights.append((var, prob, lineno))
            continue
        if n is None:
            raise DnfParseError(lineno, "clause before header")
        try:
            tokens = [int(t) for t in line.split()]
        except ValueError:
            raise DnfParseError(lineno, f"malformed clause line {line!r}") from None
        if tokens[-1] != 0:
            raise DnfParseError(lineno, "clause line must end with 0")
        if 0 in tokens[:-1]:
            raise DnfParseError(lineno, "literal 0 inside clause")
        lits = []
        seen: dict[int, bool] = {}
        for tok in tokens[:-1]:
            var = abs(tok) - 1
            pol = tok > 0
            if not 0 <= var < n:
                raise DnfParseError(lineno, f"literal index {tok} out of range for n={n}")
            if var in seen:
                if seen[var] != pol:
                    raise DnfParseError(lineno, f"contradictory clause: variable {abs(tok)} appears with both signs")
                raise DnfParseError(lineno, f"repeated variable {abs(tok)} in clause")
            seen[var] = pol
            lits.append(Literal(var, pol))
        if not lits:
            raise DnfParseError(lineno, "empty clause")
        if len(clauses) == m_declared:
            raise DnfParseError(lineno, f"more clauses than the declared {m_declared}")
        clauses.append(lits)
    if n is None:
        raise DnfParseError(0, "missing 'p dnf' header")
    if len(clauses) != m_declared:
        raise DnfParseError(0, f"clause count mismatch: header declares {m_declared}, found {len(clauses)}")
    rho = np.full(n, 0.5)
    for var, prob, _ in weights:
        rho[var - 1] = prob
    return Formula(n=n, clauses=tuple(tuple(c) for c in clauses), weights=WeightFn(rho))


def serialize_dnf(f: Formula) -> bytes:
    """Emit the text format; weight lines only where rho differs from 1/2."""
    lines = [f"p dnf {f.n} {f.m}"]
    for v in range(f.n):
        r = f.weights.of_variable(v)
        if r != 0.5:
            lines.append(f"w {v + 1} {r!r}")
    for clause in f.clauses:
        toks = [(lit.variable + 1) if lit.polarity else -(lit.variable + 1) for lit in clause]
        lines.append(" ".join(str(t) for t in toks) + " 0")
    return ("\n".join(lines) + "\n").encode("ascii")


# --- synthetic benchmarks ---------------------------------------------------

def _generate_with_stems(n: int, m: int, alpha: int, gamma: int, lam: int, seed: int):
    """Stem-sharing clause generator; returns (Formula, list of stems).

    Each stem is gamma random literals; each clause extends a stem with
    w' in {1..lam} fresh variables. Duplicate variable picks and duplicate
    clauses are redrawn, within a budget of 100*m total clause draws.
    """
    if alpha < 1 or gamma < 1 or lam < 1:
        raise ValueError("alpha, gamma and lambda must be positive")
    if gamma + lam > n:
        raise ValueError(f"gamma + lambda = {gamma + lam} exceeds n = {n}")
    if m < 1:
        raise ValueError("m must be positive")
    rng = InstrumentedRng(seed)
    per_stem = -(-m // alpha)  # ceil
    budget = 100 * m
    draws = 0
    by_key: dict[tuple, list[Literal]] = {}
    stems: list[tuple] = []
    while len(by_key) < m:
        stem: dict[int, bool] = {}
        while len(stem) < gamma:
            v = rng.randbelow(n)
            if v not in stem:
                stem[v] = bool(rng.next_bit())
        stems.append(tuple(sorted(stem.items())))
        for _ in range(per_stem):
            if len(by_key) == m:
                break
            while True:
                draws += 1
                if draws > budget:
                    raise ValueError(
                        f"cannot realize {m} distinct clauses within {budget} draws; "
                        "parameters look infeasible"
                    )
                width_extra = 1 + rng.randbelow(lam)
                clause = dict(stem)
                for _ in range(width_extra):
                    while True:
                        v = rng.randbelow(n)
                        if v not in clause:
                            break
                    clause[v] = bool(rng.next_bit())
                key = tuple(sorted(clause.items()))
                if key not in by_key:
                    by_key[key] = [Literal(v, p) for v, p in key]
                    break
    formula = Formula(n=n, clauses=tuple(tuple(c) for c in by_key.values()))
    return formula, stems


def generate_benchmark(n: int, m: int, alpha: int, gamma: int, lam: int, seed: int) -> Formula:
    """Deterministic stem-style benchmark: exactly m distinct clauses with widths in [gamma+1, gamma+lam]."""
    formula, _ = _generate_with_stems(n, m, alpha, gamma, lam, seed)
    return formula
