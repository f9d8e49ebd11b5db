"""Partition similarity with reduced, adjusted and plain mutual information."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ContingencyTable,
    InputError,
    Labeling,
    canonicalize,
    contingency_from_labelings,
)
from .counting import (  # noqa: E402
    BudgetExceeded,
    OmegaEstimate,
    effective_alpha,
    log_binomial,
    log_factorial,
    log_omega_ec,
    log_omega_exact,
)
from .measures import (  # noqa: E402
    MeasureReport,
    MeasureSpec,
    expected_i0_fixed_margins,
    h0,
    h_conditional,
    h_full,
    i0_factorial,
    i0_stirling,
    score,
    six_measures,
)

__all__ = [
    "ContingencyTable", "InputError", "Labeling", "canonicalize",
    "contingency_from_labelings", "BudgetExceeded", "OmegaEstimate",
    "effective_alpha", "log_binomial", "log_factorial", "log_omega_ec",
    "log_omega_exact", "MeasureReport", "MeasureSpec",
    "expected_i0_fixed_margins", "h0", "h_conditional", "h_full",
    "i0_factorial", "i0_stirling", "score", "six_measures",
]
