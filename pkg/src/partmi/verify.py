"""Numerical checks of the reduced-MI upper bound I(c;g) <= I(g;g).

Every measure depends on the labelings only through their contingency table,
so the bound is checked by enumerating tables rather than labelings. Tables
are generated in numpy blocks (one block per first-row composition) and
scored in bulk; Omega is computed once per distinct pair of sorted margins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .core import ContingencyTable, InputError
from .counting import (
    DEFAULT_BUDGET,
    EXACT,
    BudgetExceeded,
    effective_alpha,
    log_factorials,
    log_omega_ec,
    omega_mode,
)
from .measures import _log_omega_cached, h0_from_sizes

DESK_CASES = ((2, 2, 60), (3, 2, 30), (4, 2, 20), (3, 3, 20), (4, 3, 14))
FULL_CASES = ((2, 2, 200), (3, 2, 50), (4, 2, 30), (3, 3, 30), (4, 3, 20))
DEFAULT_TABLE_BUDGET = 10**8
FULL_TABLE_BUDGET = 10**10


@dataclass(frozen=True)
class BoundCheckConfig:
    q_c: int
    q_g: int
    n_max: int
    omega_mode: str = EXACT
    budget: int = DEFAULT_TABLE_BUDGET
    omega_budget: int = DEFAULT_BUDGET
    n_min: int | None = None
    tol: float = 1e-9

    def __post_init__(self):
        if self.q_c < 1 or self.q_g < 1:
            raise InputError("q_c and q_g must be at least 1")
        if self.n_max < max(self.q_c, self.q_g):
            raise InputError("n_max must be at least max(q_c, q_g)")
        object.__setattr__(self, "omega_mode", omega_mode(self.omega_mode))

    @property
    def n_values(self) -> range:
        lo = max(self.q_c, self.q_g, self.n_min or 0)
        return range(lo, self.n_max + 1)


@dataclass(frozen=True)
class BoundViolation:
    table: ContingencyTable
    i_cg: float
    i_gg: float
    gap: float

    def as_dict(self) -> dict:
        return {"table": self.table.counts.tolist(), "i_cg": self.i_cg,
                "i_gg": self.i_gg, "gap": self.gap}


@dataclass
class BoundCheckResult:
    config: BoundCheckConfig
    cases_checked: int = 0
    violations: list[BoundViolation] = field(default_factory=list)
    # tables whose equality status disagrees with being a permuted diagonal
    equality_mismatches: list[BoundViolation] = field(default_factory=list)
    equality_cases: int = 0
    max_gap: float = -math.inf  # over tables that are not permuted diagonals

    @property
    def ok(self) -> bool:
        return not self.violations and not self.equality_mismatches

    def as_dict(self) -> dict:
        cfg = self.config
        return {
            "q_c": cfg.q_c, "q_g": cfg.q_g, "n_max": cfg.n_max,
            "omega_mode": cfg.omega_mode,
            "cases_checked": self.cases_checked,
            "equality_cases": self.equality_cases,
            "max_gap": self.max_gap if math.isfinite(self.max_gap) else None,
            "violations": [v.as_dict() for v in self.violations],
            "equality_mismatches": [v.as_dict() for v in self.equality_mismatches],
        }


# --------------------------------------------------------------------------
# enumeration


def compositions(total: int, k: int) -> np.ndarray:
    """All ways to write ``total`` as an ordered sum of ``k`` non-negative ints.

    Returns an array of shape ``(C(total + k - 1, k - 1), k)``.
    """
    if k == 1:
        return np.array([[total]], dtype=np.int64)
    slots = total + k - 1
    count = math.comb(slots, k - 1)
    bars = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(slots), k - 1)),
        dtype=np.int64, count=count * (k - 1),
    ).reshape(count, k - 1)
    edges = np.empty((count, k + 1), dtype=np.int64)
    edges[:, 0] = -1
    edges[:, 1:-1] = bars
    edges[:, -1] = slots
    return np.diff(edges, axis=1) - 1


def _table_blocks(q_c: int, q_g: int, n: int) -> Iterator[np.ndarray]:
    """Blocks of shape (m, q_c, q_g) covering every table with no empty row or column."""
    if q_c == 1:
        block = compositions(n, q_g).reshape(-1, 1, q_g)
        keep = (block > 0).all(axis=(1, 2))
        if keep.any():
            yield block[keep]
        return
    for first_total in range(1, n - (q_c - 1) + 1):
        firsts = compositions(first_total, q_g)
        rest = compositions(n - first_total, (q_c - 1) * q_g).reshape(-1, q_c - 1, q_g)
        rest = rest[(rest.sum(axis=2) > 0).all(axis=1)]
        if rest.shape[0] == 0:
            continue
        for first in firsts:
            block = np.empty((rest.shape[0], q_c, q_g), dtype=np.int64)
            block[:, 0, :] = first
            block[:, 1:, :] = rest
            keep = (block.sum(axis=1) > 0).all(axis=1)
            if keep.any():
                yield block[keep]


def enumerate_tables(q_c: int, q_g: int, n: int,
                     budget: int = DEFAULT_TABLE_BUDGET) -> Iterator[ContingencyTable]:
    """Yield every q_c x q_g table with total ``n`` and no all-zero row or column."""
    if q_c < 1 or q_g < 1 or n < max(q_c, q_g):
        raise InputError(f"no {q_c}x{q_g} table with total {n} has non-empty margins")
    seen = 0
    for block in _table_blocks(q_c, q_g, n):
        for t in block:
            seen += 1
            if seen > budget:
                raise BudgetExceeded(f"table budget {budget} exhausted after {seen - 1} tables")
            yield ContingencyTable(t)


def count_full_tables(q_c: int, q_g: int, n: int) -> int:
    """Number of q_c x q_g tables with total ``n`` and no empty row or column.

    Inclusion-exclusion over the sets of rows and columns forced to zero.
    """
    total = 0
    for i in range(q_c + 1):
        for j in range(q_g + 1):
            cells = (q_c - i) * (q_g - j)
            ways = (1 if n == 0 else 0) if cells == 0 else math.comb(n + cells - 1, cells - 1)
            total += (-1) ** (i + j) * math.comb(q_c, i) * math.comb(q_g, j) * ways
    return total


# --------------------------------------------------------------------------
# bound check


def _score_block(block: np.ndarray, n: int, mode: str, omega_budget: int):
    lf = log_factorials.upto(n)
    rows = block.sum(axis=2)
    cols = block.sum(axis=1)
    i0 = lf[n] + lf[block].sum(axis=(1, 2)) - lf[rows].sum(axis=1) - lf[cols].sum(axis=1)
    keys = np.hstack([-np.sort(-rows, axis=1), -np.sort(-cols, axis=1)])
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    q_c = rows.shape[1]
    lo = np.empty(len(uniq))
    self_g = np.empty(len(uniq))
    for k, u in enumerate(uniq):
        r, c = tuple(u[:q_c].tolist()), tuple(u[q_c:].tolist())
        lo[k] = _log_omega_cached(r, c, mode, omega_budget)[0]
        self_g[k] = h0_from_sizes(c) - _log_omega_cached(c, c, mode, omega_budget)[0]
    inv = inv.ravel()
    i_cg = i0 - lo[inv]
    i_gg = self_g[inv]
    nz = block > 0
    if block.shape[1] == block.shape[2]:
        diag = (nz.sum(axis=1) == 1).all(axis=1) & (nz.sum(axis=2) == 1).all(axis=1)
    else:
        diag = np.zeros(len(block), dtype=bool)
    return i_cg, i_gg, diag


def check_bound(cfg: BoundCheckConfig) -> BoundCheckResult:
    """Check I(c;g) <= I(g;g) on every table allowed by ``cfg``.

    Equality is expected exactly on permuted-diagonal tables (c and g equal up
    to renaming); any table that breaks either the bound or that equality
    pattern is recorded.
    """
    res = BoundCheckResult(cfg)
    for n in cfg.n_values:
        for block in _table_blocks(cfg.q_c, cfg.q_g, n):
            if res.cases_checked + len(block) > cfg.budget:
                raise BudgetExceeded(
                    f"table budget {cfg.budget} exhausted at n={n} after "
                    f"{res.cases_checked} tables with {len(res.violations)} violations"
                )
            i_cg, i_gg, diag = _score_block(block, n, cfg.omega_mode, cfg.omega_budget)
            gap = i_cg - i_gg
            res.cases_checked += len(block)
            res.equality_cases += int(diag.sum())
            if (~diag).any():
                res.max_gap = max(res.max_gap, float(gap[~diag].max()))
            bad = gap > cfg.tol
            mismatch = (diag & (np.abs(gap) > cfg.tol)) | (~diag & (np.abs(gap) <= cfg.tol))
            for idx in np.flatnonzero(bad):
                res.violations.append(
                    BoundViolation(ContingencyTable(block[idx]), float(i_cg[idx]),
                                   float(i_gg[idx]), float(gap[idx])))
            for idx in np.flatnonzero(mismatch & ~bad):
                res.equality_mismatches.append(
                    BoundViolation(ContingencyTable(block[idx]), float(i_cg[idx]),
                                   float(i_gg[idx]), float(gap[idx])))

    def order(v: BoundViolation):
        return (v.table.n, v.table.counts.ravel().tolist())

    res.violations.sort(key=order)
    res.equality_mismatches.sort(key=order)
    return res


def check_cases(cases: Sequence[tuple[int, int, int]], mode: str = EXACT,
                budget: int = DEFAULT_TABLE_BUDGET) -> list[BoundCheckResult]:
    return [check_bound(BoundCheckConfig(qc, qg, nmax, mode, budget)) for qc, qg, nmax in cases]


# --------------------------------------------------------------------------
# single mislabeled object


class FlipDelta(NamedTuple):
    delta_i0: float
    delta_log_omega: float
    delta_rmi: float
    alpha: float


def single_flip_delta(g_sizes, from_group: int, to_group: int) -> FlipDelta:
    """Change in I0, log Omega and reduced MI when one object is mislabeled.

    Starting from ``c = g``, one object of group ``from_group`` is moved to
    ``to_group`` (0-based). Each delta is the value at ``c = g`` minus the
    value after the move. The I0 change is the closed form ln(n_to + 1); the
    Omega change is evaluated directly from the effective-columns estimate at
    the two candidate margins with the truth margins (and so alpha) fixed.
    """
    sizes = [int(x) for x in g_sizes]
    q = len(sizes)
    if not (0 <= from_group < q and 0 <= to_group < q) or from_group == to_group:
        raise InputError("from_group and to_group must be distinct valid group indices")
    if min(sizes) < 1:
        raise InputError("group sizes must be positive")
    if sizes[from_group] < 2:
        raise InputError("the source group must keep at least one object")
    alpha = effective_alpha(sizes, q)
    if alpha < 1:
        raise InputError(f"alpha = {alpha} < 1")
    flipped = list(sizes)
    flipped[from_group] -= 1
    flipped[to_group] += 1
    delta_i0 = math.log(sizes[to_group] + 1)
    delta_lo = log_omega_ec(sizes, sizes).log_omega - log_omega_ec(flipped, sizes).log_omega
    return FlipDelta(delta_i0, delta_lo, delta_i0 - delta_lo, alpha)


def flip_table(g_sizes, from_group: int, to_group: int) -> ContingencyTable:
    """Table of the single-flip candidate (rows) against the truth (columns)."""
    t = np.diag(np.asarray(g_sizes, dtype=np.int64))
    t[from_group, from_group] -= 1
    t[to_group, from_group] += 1
    return ContingencyTable(t)
