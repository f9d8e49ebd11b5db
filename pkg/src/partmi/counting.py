"""Combinatorial kernels: log-factorials, log-binomials and table counts.

``log_omega_*`` return the log of the number of non-negative integer matrices
with prescribed row and column sums. Row sums are the candidate's group sizes
and column sums the ground truth's; the effective-columns estimate is not
symmetric, so callers must keep that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln

from .core import InputError

DEFAULT_BUDGET = 10_000_000
EXACT = "exact"
EFFECTIVE_COLUMNS = "effective_columns"
OMEGA_MODES = (EXACT, EFFECTIVE_COLUMNS)

_MODE_ALIASES = {"exact": EXACT, "ec": EFFECTIVE_COLUMNS, "effective_columns": EFFECTIVE_COLUMNS,
                 "effective-columns": EFFECTIVE_COLUMNS}

# ln k! is evaluated from the exact integer factorial below this size.
_EXACT_FACTORIAL_LIMIT = 1024


class BudgetExceeded(RuntimeError):
    """The exact enumeration ran past its node budget."""


class DegenerateMargins(ValueError):
    """Margins for which the effective-columns exponent is undefined."""


def omega_mode(name: str) -> str:
    """Normalise an Omega-mode name (``exact``, ``ec``, ``effective_columns``)."""
    try:
        return _MODE_ALIASES[name]
    except KeyError:
        raise InputError(f"unknown omega mode {name!r}; use 'exact' or 'ec'") from None


@dataclass(frozen=True)
class OmegaEstimate:
    log_omega: float
    mode: str
    alpha: float | None = None

    def as_dict(self) -> dict:
        out = {"log_omega": self.log_omega, "mode": self.mode}
        if self.alpha is not None:
            out["alpha"] = self.alpha if math.isfinite(self.alpha) else "inf"
        return out


# --------------------------------------------------------------------------
# factorials and binomials


def log_factorial(k: int) -> float:
    """Natural log of ``k!``."""
    k = int(k)
    if k < 0:
        raise InputError(f"log_factorial needs k >= 0, got {k}")
    if k < 2:
        return 0.0
    if k < _EXACT_FACTORIAL_LIMIT:
        return math.log(math.factorial(k))
    return math.lgamma(k + 1)


class _LogFactorialTable:
    """Growable lookup table of ln k! for vectorised work."""

    def __init__(self):
        self._table = np.zeros(2)

    def upto(self, kmax: int) -> np.ndarray:
        if kmax >= self._table.size:
            size = max(int(kmax) + 1, 2 * self._table.size)
            table = gammaln(np.arange(size, dtype=np.float64) + 1.0)
            table[:2] = 0.0
            self._table = table
        return self._table

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        if k.size == 0:
            return np.zeros(k.shape)
        return self.upto(int(k.max()))[k]


log_factorials = _LogFactorialTable()


def log_binomial(a: int, b: int) -> float:
    """ln C(a, b) for integers ``0 <= b <= a``."""
    a, b = int(a), int(b)
    if a < 0 or b < 0 or b > a:
        raise InputError(f"log_binomial needs 0 <= b <= a, got a={a}, b={b}")
    if b == 0 or b == a:
        return 0.0
    return log_factorial(a) - log_factorial(b) - log_factorial(a - b)


def log_multichoose(x: float, m) -> np.ndarray | float:
    """ln C(m + x - 1, x - 1) for real ``x >= 1`` and integer ``m >= 0``.

    This is the generalised binomial with a real upper index, evaluated
    through log-Gamma. For integer ``x`` it counts multisets of size ``m``
    drawn from ``x`` kinds.
    """
    m = np.asarray(m, dtype=np.float64)
    out = gammaln(m + x) - gammaln(x) - gammaln(m + 1.0)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# margins


def _margins(row_sums: Sequence[int], col_sums: Sequence[int]) -> tuple[list[int], list[int]]:
    rows = [int(x) for x in np.asarray(row_sums).ravel()]
    cols = [int(x) for x in np.asarray(col_sums).ravel()]
    if not rows or not cols:
        raise InputError("margins must be non-empty")
    if min(rows) <= 0 or min(cols) <= 0:
        raise InputError("margins must be positive")
    if sum(rows) != sum(cols):
        raise InputError(f"margin totals differ: rows {sum(rows)}, cols {sum(cols)}")
    return rows, cols


# --------------------------------------------------------------------------
# exact counting


def _bounded_partitions(t: int, m: int, v: int) -> Iterator[list[int]]:
    """Non-increasing lists of ``m`` integers in ``[0, v]`` summing to ``t``."""
    if m == 0:
        if t == 0:
            yield []
        return
    if t > m * v:
        return
    lo = -(-t // m)  # the largest part is at least the mean
    for first in range(min(v, t), lo - 1, -1):
        for rest in _bounded_partitions(t - first, m - 1, first):
            yield [first] + rest


def _arrangements(parts: list[int]) -> int:
    """Distinct orderings of a multiset."""
    out = math.factorial(len(parts))
    run = 1
    for i in range(1, len(parts) + 1):
        if i < len(parts) and parts[i] == parts[i - 1]:
            run += 1
        else:
            out //= math.factorial(run)
            run = 1
    return out


class _TableCounter:
    """Depth-first count over rows, memoised on the sorted residual columns.

    Columns with equal residual capacity are handled as one group: a row puts
    ``t`` units into a group of ``m`` columns as a bounded partition, weighted
    by its number of distinct arrangements. Counts are exact integers.
    """

    def __init__(self, rows: list[int], budget: int):
        self.rows = rows
        self.budget = budget
        self.nodes = 0
        self.memo: dict[tuple[int, tuple[int, ...]], int] = {}

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded(
                f"exact table count exceeded {self.budget} nodes; "
                "use the effective-columns mode for margins this large"
            )

    def _fills(self, groups, i, r, tail_cap):
        # yields (weight, residual values) for distributing r over groups[i:]
        if i == len(groups):
            if r == 0:
                yield 1, []
            return
        v, m = groups[i]
        rest_cap = tail_cap - v * m
        for t in range(max(0, r - rest_cap), min(r, v * m) + 1):
            for parts in _bounded_partitions(t, m, v):
                self._tick()
                w = _arrangements(parts)
                left = [v - x for x in parts if x < v]
                for w2, tail in self._fills(groups, i + 1, r - t, rest_cap):
                    yield w * w2, left + tail

    def count(self, i: int, cols: tuple[int, ...]) -> int:
        if i == len(self.rows) - 1:
            return 1
        key = (i, cols)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self._tick()
        groups = []
        for v in cols:
            if groups and groups[-1][0] == v:
                groups[-1][1] += 1
            else:
                groups.append([v, 1])
        total = 0
        for w, residual in self._fills(groups, 0, self.rows[i], sum(cols)):
            total += w * self.count(i + 1, tuple(sorted(residual, reverse=True)))
        self.memo[key] = total
        return total


def count_tables(row_sums, col_sums, budget: int = DEFAULT_BUDGET, orient: bool = True) -> int:
    """Exact number of non-negative integer matrices with the given margins.

    Parameters
    ----------
    row_sums, col_sums : sequence of positive int
        Margins with equal totals.
    budget : int
        Maximum number of search nodes before :class:`BudgetExceeded`.
    orient : bool
        Let the counter transpose the problem (the count is transpose
        invariant) so that the side with fewer distinct values plays the
        columns. ``False`` enumerates exactly as given.
    """
    rows, cols = _margins(row_sums, col_sums)
    if orient:
        key_r = (len(set(rows)), len(rows))
        key_c = (len(set(cols)), len(cols))
        if key_r < key_c:
            rows, cols = cols, rows
    rows.sort(reverse=True)
    counter = _TableCounter(rows, budget)
    old = None
    if len(rows) + 100 > 1000:
        import sys
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 4 * len(rows) + 1000))
    try:
        return counter.count(0, tuple(sorted(cols, reverse=True)))
    finally:
        if old is not None:
            import sys
            sys.setrecursionlimit(old)


def _log_int(x: int) -> float:
    return math.log(x) if x > 1 else 0.0


def log_omega_exact(row_sums, col_sums, budget: int = DEFAULT_BUDGET) -> OmegaEstimate:
    """Log of the exact number of tables with the given margins."""
    return OmegaEstimate(_log_int(count_tables(row_sums, col_sums, budget)), EXACT)


# --------------------------------------------------------------------------
# effective columns


def effective_alpha(col_sums, q_c: int) -> float:
    """Effective number of columns per row for the closed-form estimate.

    Raises :class:`DegenerateMargins` when every column sum is one (the
    denominator vanishes).
    """
    cols = [int(x) for x in np.asarray(col_sums).ravel()]
    n = sum(cols)
    sq = sum(x * x for x in cols)
    if q_c < 1:
        raise InputError("q_c must be positive")
    denom = sq - n
    if denom <= 0:
        raise DegenerateMargins("all column sums are 1; effective alpha is undefined")
    return (n * n - n + (n * n - sq) / q_c) / denom


def log_omega_ec(row_sums, col_sums) -> OmegaEstimate:
    """Effective-columns estimate of the log table count.

    Rows are the candidate sizes, columns the ground-truth sizes. When all
    column sums are one the estimate is undefined; the count is then exactly
    ``n! / prod(row_sums!)`` (transpose of the singleton-row case), which is
    also the large-alpha limit of the formula, and that value is returned with
    ``alpha = inf``.
    """
    rows, cols = _margins(row_sums, col_sums)
    n = sum(rows)
    q_c = len(rows)
    try:
        alpha = effective_alpha(cols, q_c)
    except DegenerateMargins:
        value = log_factorial(n) - float(np.sum(log_factorials(rows)))
        return OmegaEstimate(value, EFFECTIVE_COLUMNS, math.inf)
    value = (
        -log_multichoose(q_c * alpha, n)
        + float(np.sum(log_multichoose(alpha, rows)))
        + float(np.sum(log_multichoose(float(q_c), cols)))
    )
    return OmegaEstimate(float(value), EFFECTIVE_COLUMNS, alpha)


def log_omega(row_sums, col_sums, mode: str = EFFECTIVE_COLUMNS,
              budget: int = DEFAULT_BUDGET) -> OmegaEstimate:
    mode = omega_mode(mode)
    if mode == EXACT:
        return log_omega_exact(row_sums, col_sums, budget)
    return log_omega_ec(row_sums, col_sums)
