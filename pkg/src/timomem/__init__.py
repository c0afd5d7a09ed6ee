"""Numerical laboratory for Timoshenko beams damped by fading memory.

Simulates the coupled beam-history system, measures weighted-norm resolvent
margins and spectral abscissae under refinement, and classifies uniform
(exponential) stability against the kernel's mass-ratio decay condition.
"""

from .analysis import (DecayReport, RefinementLevel, StabilityVerdict,
                       classify_stability, default_refinement_levels,
                       fit_decay)
from .beam import (BeamParams, Generator, SpatialGrid, State,
                   assemble_generator, dissipation_form, energy, energy_split)
from .dynamics import (CrankNicolson, EnergyTrace, NumericalError,
                       check_representation, simulate)
from .history import (HistoryGrid, apply_translation, convolution_bound_check,
                      m_inner, m_norm, min_translation_margin,
                      translation_margin)
from .kernels import (ClassicalVerdict, ConstructionError, Kernel, NecVerdict,
                      check_classical_conditions, check_nec,
                      compact_flat_kernel, compact_inflection_kernel,
                      exponential_kernel, moments, polynomial_kernel,
                      strict_decay_measure, tabulated_kernel)
from .spectral import (AbscissaResult, MarginScan, resolvent_margin,
                       scan_margin, spectral_abscissa)
from .zoo import ZooEntry, kernel_zoo, zoo_kernel

__version__ = "0.1.0"

__all__ = [
    "BeamParams", "SpatialGrid", "State", "Generator", "Kernel",
    "NecVerdict", "ClassicalVerdict", "ConstructionError", "NumericalError",
    "HistoryGrid", "EnergyTrace", "DecayReport", "StabilityVerdict",
    "MarginScan", "AbscissaResult", "RefinementLevel", "ZooEntry",
    "CrankNicolson",
    "exponential_kernel", "polynomial_kernel", "compact_flat_kernel",
    "compact_inflection_kernel", "tabulated_kernel", "moments",
    "check_nec", "check_classical_conditions", "strict_decay_measure",
    "m_inner", "m_norm", "apply_translation", "convolution_bound_check",
    "translation_margin", "min_translation_margin",
    "assemble_generator", "energy", "energy_split", "dissipation_form",
    "simulate", "check_representation",
    "resolvent_margin", "scan_margin", "spectral_abscissa",
    "fit_decay", "classify_stability", "default_refinement_levels",
    "kernel_zoo", "zoo_kernel",
]
