"""Contractual cash-flow waterfalls over deterministic and simulated inflows."""

from ._core import (
    CascadeError,
    __version__,
    allocate_pro_rata,
    allocate_sequential,
    cli,
    enumerate_scenarios,
    example_structure,
    metrics,
    run_waterfall,
    sample_scenario,
    validate_structure,
)

__all__ = [
    "CascadeError",
    "__version__",
    "allocate_pro_rata",
    "allocate_sequential",
    "cli",
    "enumerate_scenarios",
    "example_structure",
    "metrics",
    "run_waterfall",
    "sample_scenario",
    "validate_structure",
]
