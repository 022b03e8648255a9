"""Minimum-regret robust Steiner tree and TSP under interval edge lengths."""
from .core import (EdgeMultiset, Kind, RobustInstance, adversarial_realization, derived_weights,
                   parse_instance, serialize_instance, solution_cost)

__version__ = "0.1.0"

__all__ = [
    "EdgeMultiset", "Kind", "RobustInstance", "adversarial_realization", "derived_weights", "parse_instance",
    "serialize_instance", "solution_cost",
]
