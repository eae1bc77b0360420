"""Bundled parameter sets and default simulation setups.

``reformulation_3seg`` and ``twostep_3seg`` carry three-segment cola-category
estimates (350 households, 104 periods, 4 brands).  The one-
and two-segment truths are synthetic designs with clearly separated carry-over
weights and losses weighing more than gains.
"""

from .choicemodel import MixtureParameters, SegmentParameters
from .datagen import PriceProcessConfig, SimulationSpec

# The bundled three-segment coefficients imply utilities on a price scale of roughly a quarter
# currency unit; at unit prices segment 3 would almost never buy.
PRESET_PRICES = PriceProcessConfig(base_prices=(0.25, 0.26, 0.24, 0.23), promo_probability=0.3,
                                   promo_depth=0.25, noise_sd=0.08)

DEMO_PRICES = PriceProcessConfig(base_prices=(1.0, 1.1, 1.05, 0.95), promo_probability=0.3,
                                 promo_depth=0.25, noise_sd=0.08)

TWO_SEGMENT_TRUTH = MixtureParameters(
    (SegmentParameters(0.10, 0.8, 0.8, (0.8, 0.4, 0.6), 2.0, 6.0, -3.0),
     SegmentParameters(0.65, 1.0, 0.5, (0.3, 1.0, 0.2), 1.5, 5.0, -2.0)),
    (0.4, 0.6))

ONE_SEGMENT_TRUTH = MixtureParameters(
    (SegmentParameters(0.40, 1.0, 0.6, (0.5, 0.8, 0.3), 1.5, 5.0, -2.5),))


def reformulation_preset():
    from .panelio import load_preset
    return load_preset("reformulation_3seg")


def twostep_preset():
    from .panelio import load_preset
    return load_preset("twostep_3seg")


def default_truth(n_segments):
    """Built-in generating parameters for S = 1, 2 or 3."""
    if n_segments == 1:
        return ONE_SEGMENT_TRUTH
    if n_segments == 2:
        return TWO_SEGMENT_TRUTH
    if n_segments == 3:
        return reformulation_preset()
    raise ValueError(f"no built-in truth for {n_segments} segments; supply a config")


def default_simulation(n_segments=3, seed=0, n_households=350, n_periods=104):
    """SimulationSpec at the published panel size with a built-in truth."""
    prices = PRESET_PRICES if n_segments == 3 else DEMO_PRICES
    return SimulationSpec(default_truth(n_segments), n_households=n_households,
                          n_periods=n_periods, prices=prices, seed=seed)
