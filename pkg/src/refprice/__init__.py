"""Latent-class reference-price choice models with jointly estimated carry-over weights."""

from .choicemodel import MixtureParameters, SegmentParameters
from .datagen import PriceProcessConfig, SimulationSpec, simulate_panel
from .errors import (ConfigError, EstimationError, InvalidInputError, PanelFormatError,
                     RefPriceError)
from .estimator import FitOptions, FitResult, fit
from .likelihood import PanelLikelihood, mixture_loglik
from .panel import ChoicePanel
from .reference import reference_closed_form, reference_iterative
from .twostep import TwoStepConfig, grid_search

__all__ = [
    "ChoicePanel",
    "ConfigError",
    "EstimationError",
    "FitOptions",
    "FitResult",
    "InvalidInputError",
    "MixtureParameters",
    "PanelFormatError",
    "PanelLikelihood",
    "PriceProcessConfig",
    "RefPriceError",
    "SegmentParameters",
    "SimulationSpec",
    "TwoStepConfig",
    "fit",
    "grid_search",
    "mixture_loglik",
    "reference_closed_form",
    "reference_iterative",
    "simulate_panel",
]
