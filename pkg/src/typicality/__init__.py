"""Typical locations, mass-stationarity and point shifts on finite groups and tori.

The package simulates random measures with marks on finite groups and flat
tori, builds Palm versions, point shifts, allocations and transport kernels,
and checks distributional identities exactly (finite groups) or by Monte
Carlo two-sample tests (tori).
"""

from .groups import BoxSet, FiniteGroup, FiniteSet, Torus, group_from_descriptor
from .measures import (
    Configuration,
    DensityMeasure,
    FiniteLaw,
    GridField,
    MeasureMark,
    PointBatch,
    PointMeasure,
    conditional_sample,
    measures_equal,
)
from .scenarios import load_config, run_scenario
from .shifts import Censored, ShiftRule, build_allocation, check_preserving, check_reverse_pair
from .stats import tv_distance_exact, two_sample_test
from .verify import TestReport

__all__ = [
    "BoxSet",
    "Censored",
    "Configuration",
    "DensityMeasure",
    "FiniteGroup",
    "FiniteLaw",
    "FiniteSet",
    "GridField",
    "MeasureMark",
    "PointBatch",
    "PointMeasure",
    "ShiftRule",
    "TestReport",
    "Torus",
    "build_allocation",
    "check_preserving",
    "check_reverse_pair",
    "conditional_sample",
    "group_from_descriptor",
    "load_config",
    "measures_equal",
    "run_scenario",
    "tv_distance_exact",
    "two_sample_test",
]
__version__ = "0.1.0"
