"""Two-sided limit shadowing experiments for homeomorphisms and their suspension flows."""

__version__ = "0.1.0"

from .base_space import (
    FinitePointSpace,
    MetricSystem,
    SubshiftSpace,
    Word,
    full_shift_system,
    preset_system,
    swap_system,
    two_swaps_system,
)
from .reparam import Reparam, remove_gap
from .suspension import SuspensionFlow, SuspensionPoint

__all__ = [
    "FinitePointSpace",
    "MetricSystem",
    "Reparam",
    "SubshiftSpace",
    "SuspensionFlow",
    "SuspensionPoint",
    "Word",
    "full_shift_system",
    "preset_system",
    "remove_gap",
    "swap_system",
    "two_swaps_system",
]
