"""Exact-rational polyhedral toolkit for single-generator unit-commitment polytopes."""

from .model import (InstanceError, LinearInequality, Point, Regime, UCInstance,
                    derive_constants, eval_inequality, load_instance)
from .formulation import InequalitySystem, Variant, build_base, build_mud_hull_base, relax_integrality

__all__ = [
    "InstanceError", "LinearInequality", "Point", "Regime", "UCInstance", "derive_constants",
    "eval_inequality", "load_instance", "InequalitySystem", "Variant", "build_base",
    "build_mud_hull_base", "relax_integrality",
]

__version__ = "0.1.0"
