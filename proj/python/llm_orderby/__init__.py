"""Access paths for an LLM-backed ORDER BY operator.

The heavy lifting lives in the C++ extension; this package re-exports it.
"""

from ._core import (
    CachingOracle,
    Key,
    NoiseModel,
    Oracle,
    RankTask,
    ResponseCache,
    SimulatedOracle,
    TokenCostModel,
    UsageMeter,
    UsageTotals,
    __version__,
    agreement_fraction,
    algorithm_names,
    determine_batch_size,
    fit_log_linear,
    generate_synthetic,
    kendall_tau_b,
    ndcg_at_k,
    repair_permutation,
    sort,
)

__all__ = [
    "CachingOracle",
    "Key",
    "NoiseModel",
    "Oracle",
    "RankTask",
    "ResponseCache",
    "SimulatedOracle",
    "TokenCostModel",
    "UsageMeter",
    "UsageTotals",
    "__version__",
    "agreement_fraction",
    "algorithm_names",
    "determine_batch_size",
    "fit_log_linear",
    "generate_synthetic",
    "kendall_tau_b",
    "ndcg_at_k",
    "repair_permutation",
    "sort",
]
