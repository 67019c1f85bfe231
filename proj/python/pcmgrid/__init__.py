"""Battery-storage sizing and balancing dispatch rules for a planned-community
microgrid: scenario inspection, learning-set math, and the two planners."""

from ._core import (
    chi2_critical,
    cost_threshold,
    entropy,
    info_gain,
    plan_islanding,
    plan_storage,
    scenario_digest,
    scenario_summary,
)

__version__ = "0.1.0"

__all__ = [
    "chi2_critical",
    "cost_threshold",
    "entropy",
    "info_gain",
    "plan_islanding",
    "plan_storage",
    "scenario_digest",
    "scenario_summary",
]
