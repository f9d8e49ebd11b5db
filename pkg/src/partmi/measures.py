"""Mutual-information measures between a candidate and a ground-truth labeling.

All information quantities are totals in nats unless ``units="bits"`` is
requested. Three base measures are available:

========  =====================================================
plain     I0, the factorial (microcanonical) mutual information
adjusted  I0 minus its mean over labelings with the same sizes
reduced   I0 minus the log number of tables with the same margins
========  =====================================================

each optionally normalised symmetrically (arithmetic, geometric, min or max
mean of the two self-informations) or asymmetrically (by the ground truth's
self-information alone). The asymmetric normalisation never changes which
candidate a base measure prefers.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .core import ContingencyTable, InputError, Labeling, contingency_from_labelings
from .counting import (
    DEFAULT_BUDGET,
    EFFECTIVE_COLUMNS,
    _margins,
    log_binomial,
    log_factorials,
    log_omega,
    omega_mode,
)

PLAIN, ADJUSTED, REDUCED = "plain", "adjusted", "reduced"
BASES = (PLAIN, ADJUSTED, REDUCED)
NORMALIZATIONS = ("none", "sym_arith", "sym_geo", "sym_min", "sym_max", "asym")
FACTORIAL, STIRLING = "factorial", "stirling"
LN2 = math.log(2.0)

# denominators at or below this are treated as zero
_DENOM_EPS = 1e-12


def _table(ct) -> ContingencyTable:
    return ct if isinstance(ct, ContingencyTable) else ContingencyTable(ct)


# --------------------------------------------------------------------------
# entropies and the plain measure


def h0(labels) -> float:
    """ln(n! / prod(sizes!)): the information to pick one labeling of given sizes."""
    sizes = Labeling(labels).sizes
    n = int(sizes.sum())
    return float(log_factorials(n) - log_factorials(sizes).sum())


def h0_from_sizes(sizes) -> float:
    sizes = np.asarray(sizes, dtype=np.int64)
    return float(log_factorials(int(sizes.sum())) - log_factorials(sizes).sum())


def h_full(labels) -> float:
    """Total description length of a labeling: number of groups, sizes, then the labeling."""
    lab = Labeling(labels)
    n, q = lab.n, lab.q
    return math.log(n) + log_binomial(n - 1, q - 1) + h0_from_sizes(lab.sizes)


def i0_factorial(ct) -> float:
    """ln[n! prod(n_rs!) / (prod(n_r!) prod(n_s!))]."""
    ct = _table(ct)
    lf = log_factorials
    return float(
        lf(ct.n) + lf(ct.counts).sum() - lf(ct.row_sums).sum() - lf(ct.col_sums).sum()
    )


def i0_stirling(ct) -> float:
    """Plug-in estimate n * sum p_rs ln(p_rs / (p_r p_s)), with 0 ln 0 = 0."""
    ct = _table(ct)
    n = ct.n
    p = ct.counts / n
    pr = ct.row_sums / n
    ps = ct.col_sums / n
    nz = p > 0
    outer = np.outer(pr, ps)
    return float(n * np.sum(p[nz] * np.log(p[nz] / outer[nz])))


def h_conditional(ct, mode: str = EFFECTIVE_COLUMNS, budget: int = DEFAULT_BUDGET) -> float:
    """Description length of the truth (columns) given the candidate (rows)."""
    ct = _table(ct)
    n = ct.n
    q_g = ct.shape[1]
    lf = log_factorials
    return (
        math.log(n)
        + log_binomial(n - 1, q_g - 1)
        + _log_omega_cached(_key(ct.row_sums), _key(ct.col_sums), omega_mode(mode), budget)[0]
        + float(lf(ct.row_sums).sum() - lf(ct.counts).sum())
    )


# --------------------------------------------------------------------------
# corrections


def _key(sizes) -> tuple[int, ...]:
    return tuple(sorted((int(x) for x in sizes), reverse=True))


@lru_cache(maxsize=1 << 16)
def _log_omega_cached(rows: tuple, cols: tuple, mode: str, budget: int):
    est = log_omega(rows, cols, mode, budget)
    return est.log_omega, est.alpha


def expected_i0_fixed_margins(row_sums, col_sums) -> float:
    """Mean of I0 over all candidates with the given group sizes.

    Each cell n_rs is hypergeometric with parameters (n, n_r, n_s), so the
    mean needs only E[ln n_rs!], summed exactly over the support.
    """
    rows, cols = _margins(row_sums, col_sums)
    return _expected_i0(_key(rows), _key(cols))


@lru_cache(maxsize=1 << 14)
def _expected_i0(rows: tuple, cols: tuple) -> float:
    n = sum(rows)
    lf = log_factorials.upto(n)
    terms = [lf[n], -math.fsum(lf[list(rows)]), -math.fsum(lf[list(cols)])]
    row_counts = Counter(rows)
    col_counts = Counter(cols)
    for a in sorted(row_counts):
        for b in sorted(col_counts):
            k = np.arange(max(0, a + b - n), min(a, b) + 1)
            log_p = (
                lf[a] + lf[n - a] + lf[b] + lf[n - b] - lf[n]
                - lf[k] - lf[a - k] - lf[b - k] - lf[n - a - b + k]
            )
            cell = math.fsum(np.exp(log_p) * lf[k])
            terms.append(row_counts[a] * col_counts[b] * cell)
    return math.fsum(terms)


# --------------------------------------------------------------------------
# measure specification and report


@dataclass(frozen=True)
class MeasureSpec:
    """Which base measure, normalisation and Omega estimate to use.

    ``omega_mode`` applies to the reduced base only; it defaults to the
    effective-columns estimate there and must be left unset otherwise.
    """

    base: str = REDUCED
    normalization: str = "asym"
    omega_mode: str | None = None
    mi_form: str = FACTORIAL
    units: str = "nats"

    def __post_init__(self):
        if self.base not in BASES:
            raise InputError(f"unknown base measure {self.base!r}; choose from {BASES}")
        if self.normalization not in NORMALIZATIONS:
            raise InputError(
                f"unknown normalization {self.normalization!r}; choose from {NORMALIZATIONS}"
            )
        if self.mi_form not in (FACTORIAL, STIRLING):
            raise InputError(f"unknown mi form {self.mi_form!r}")
        if self.units not in ("nats", "bits"):
            raise InputError(f"unknown units {self.units!r}")
        if self.base == REDUCED:
            mode = EFFECTIVE_COLUMNS if self.omega_mode is None else omega_mode(self.omega_mode)
            object.__setattr__(self, "omega_mode", mode)
        elif self.omega_mode is not None:
            raise InputError(f"the {self.base} base has no Omega term; drop the omega mode")
        if self.mi_form == STIRLING and self.base != PLAIN:
            raise InputError("the stirling form is only defined for the plain base")

    @property
    def name(self) -> str:
        parts = [self.base]
        if self.normalization != "none":
            parts.append(self.normalization)
        if self.mi_form == STIRLING:
            parts.append(STIRLING)
        return "_".join(parts)

    @classmethod
    def from_name(cls, name: str, **kw) -> "MeasureSpec":
        """Parse names such as ``reduced_asym``, ``plain_sym_arith`` or ``adjusted``."""
        base, _, rest = name.partition("_")
        form = FACTORIAL
        if rest.endswith(STIRLING):
            form = STIRLING
            rest = rest[: -len(STIRLING)].rstrip("_")
        if base == REDUCED:
            kw.setdefault("omega_mode", EFFECTIVE_COLUMNS)
        else:
            kw.pop("omega_mode", None)
        return cls(base=base, normalization=rest or "none", mi_form=form, **kw)


def six_measures(omega: str = EFFECTIVE_COLUMNS, units: str = "nats") -> list[MeasureSpec]:
    """{plain, adjusted, reduced} x {sym_arith, asym}."""
    out = []
    for base in BASES:
        for norm in ("sym_arith", "asym"):
            mode = omega if base == REDUCED else None
            out.append(MeasureSpec(base, norm, mode, units=units))
    return out


@dataclass
class MeasureReport:
    measure: str
    score: float | None
    raw_score: float
    i0: float
    h0_c: float
    h0_g: float
    self_c: float | None
    self_g: float | None
    denominator: float | None
    log_omega: float | None
    alpha: float | None
    expected_i0: float | None
    q_c: int
    q_g: int
    n: int
    units: str = "nats"
    undefined: bool = False
    spec: MeasureSpec | None = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("spec")
        if self.spec is not None:
            out["base"] = self.spec.base
            out["normalization"] = self.spec.normalization
            out["omega_mode"] = self.spec.omega_mode
            out["mi_form"] = self.spec.mi_form
        if out["alpha"] is not None and not math.isfinite(out["alpha"]):
            out["alpha"] = "inf"
        return out


def _base_parts(ct: ContingencyTable, spec: MeasureSpec, budget: int):
    """Return (base value, i0, log_omega, alpha, expected_i0) in nats."""
    if spec.mi_form == STIRLING:
        i0 = i0_stirling(ct)
        return i0, i0, None, None, None
    i0 = i0_factorial(ct)
    if spec.base == PLAIN:
        return i0, i0, None, None, None
    rows, cols = _key(ct.row_sums), _key(ct.col_sums)
    if spec.base == ADJUSTED:
        e = _expected_i0(rows, cols)
        return i0 - e, i0, None, None, e
    lo, alpha = _log_omega_cached(rows, cols, spec.omega_mode, budget)
    return i0 - lo, i0, lo, alpha, None


def self_information(sizes, spec: MeasureSpec, budget: int = DEFAULT_BUDGET) -> float:
    """Base measure of a labeling with the given sizes against itself, in nats."""
    sizes = np.asarray(sizes, dtype=np.int64)
    if spec.mi_form == STIRLING:
        p = sizes / sizes.sum()
        return float(-sizes.sum() * np.sum(p * np.log(p)))
    h = h0_from_sizes(sizes)
    if spec.base == PLAIN:
        return h
    key = _key(sizes)
    if spec.base == ADJUSTED:
        return h - _expected_i0(key, key)
    return h - _log_omega_cached(key, key, spec.omega_mode, budget)[0]


def _denominator(norm: str, a: float, b: float) -> float | None:
    if norm == "sym_arith":
        return 0.5 * (a + b)
    if norm == "sym_geo":
        return math.sqrt(a * b) if a >= 0 and b >= 0 else None
    if norm == "sym_min":
        return min(a, b)
    if norm == "sym_max":
        return max(a, b)
    return b


def score_table(ct, spec: MeasureSpec | None = None, budget: int = DEFAULT_BUDGET) -> MeasureReport:
    """Score a contingency table (rows = candidate, columns = truth)."""
    ct = _table(ct)
    spec = spec or MeasureSpec()
    raw, i0, lo, alpha, expected = _base_parts(ct, spec, budget)
    h0_c = h0_from_sizes(ct.row_sums)
    h0_g = h0_from_sizes(ct.col_sums)
    self_c = self_g = den = None
    value: float | None = raw
    undefined = False
    if spec.normalization != "none":
        self_g = self_information(ct.col_sums, spec, budget)
        if spec.normalization != "asym":
            self_c = self_information(ct.row_sums, spec, budget)
        den = _denominator(spec.normalization, self_c if self_c is not None else 0.0, self_g)
        if den is None or not den > _DENOM_EPS:
            value = None
            undefined = True
        else:
            value = raw / den

    scale = LN2 if spec.units == "bits" else 1.0

    def conv(x):
        return None if x is None else x / scale

    if value is not None and spec.normalization == "none":
        value = value / scale
    return MeasureReport(
        measure=spec.name,
        score=value,
        raw_score=raw / scale,
        i0=i0 / scale,
        h0_c=h0_c / scale,
        h0_g=h0_g / scale,
        self_c=conv(self_c),
        self_g=conv(self_g),
        denominator=conv(den),
        log_omega=conv(lo),
        alpha=alpha,
        expected_i0=conv(expected),
        q_c=ct.shape[0],
        q_g=ct.shape[1],
        n=ct.n,
        units=spec.units,
        undefined=undefined,
        spec=spec,
    )


def score(c, g, spec: MeasureSpec | None = None, budget: int = DEFAULT_BUDGET) -> MeasureReport:
    """Score candidate ``c`` against ground truth ``g``.

    >>> r = score([1, 1, 2, 2], [1, 1, 2, 2], MeasureSpec("plain", "sym_arith"))
    >>> r.score
    1.0
    """
    return score_table(contingency_from_labelings(c, g), spec, budget)


def score_many(c, g, specs, budget: int = DEFAULT_BUDGET) -> dict[str, MeasureReport]:
    ct = contingency_from_labelings(c, g)
    return {s.name: score_table(ct, s, budget) for s in specs}
