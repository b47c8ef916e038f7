"""Wideband ESPRIT direction-of-arrival estimation via signal-subspace rotation."""

from ._core import (
    ArrayGeometry,
    DomainError,
    IoError,
    NumericalError,
    ValidationError,
    algorithm_names,
    css_localize,
    effective_config,
    evaluate,
    hist_esprit,
    localize,
    lowest_aliasing_frequency,
    narrowband_esprit,
    preset_names,
    score_block,
    simulate,
    steering_matrix,
    wideband_esprit_multi,
    wideband_esprit_single,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "DomainError",
    "IoError",
    "NumericalError",
    "ValidationError",
    "algorithm_names",
    "css_localize",
    "effective_config",
    "evaluate",
    "hist_esprit",
    "localize",
    "lowest_aliasing_frequency",
    "narrowband_esprit",
    "preset_names",
    "score_block",
    "simulate",
    "steering_matrix",
    "wideband_esprit_multi",
    "wideband_esprit_single",
]
