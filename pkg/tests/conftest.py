import numpy as np
import pytest

from refprice.choicemodel import MixtureParameters, SegmentParameters
from refprice.datagen import SimulationSpec, simulate_panel
from refprice.estimator import FitOptions, fit
from refprice.panel import ChoicePanel
from refprice.presets import DEMO_PRICES, ONE_SEGMENT_TRUTH, TWO_SEGMENT_TRUTH


@pytest.fixture(scope="session")
def small_mixture():
    """S=2, K=3 parameters for the 5-household fixture."""
    return MixtureParameters(
        (SegmentParameters(0.3, 0.2, 0.7, (0.5, -0.4), 1.2, 2.5, -1.5),
         SegmentParameters(0.75, -0.3, 1.1, (-0.2, 0.6), 0.6, 1.8, -0.8)),
        (0.35, 0.65))


@pytest.fixture(scope="session")
def small_panel():
    """5 households, 8 periods, 3 brands, per-household prices."""
    rng = np.random.default_rng(20240607)
    prices = rng.uniform(0.6, 1.6, size=(5, 8, 3))
    choices = rng.integers(0, 4, size=(5, 8))
    return ChoicePanel.from_arrays(prices, choices)


@pytest.fixture(scope="session")
def hetero_panel():
    """The S=2 recovery panel: N=350, T=104, K=4, seed 0."""
    spec = SimulationSpec(TWO_SEGMENT_TRUTH, n_households=350, n_periods=104,
                          prices=DEMO_PRICES, seed=0)
    return simulate_panel(spec)


@pytest.fixture(scope="session")
def hetero_fit(hetero_panel):
    return fit(hetero_panel, 2, FitOptions())


@pytest.fixture(scope="session")
def homogeneous_panel():
    """S=1 panel with pi = 0.40, N=300, T=100."""
    spec = SimulationSpec(ONE_SEGMENT_TRUTH, n_households=300, n_periods=100,
                          prices=DEMO_PRICES, seed=11)
    return simulate_panel(spec)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance_log.RESULTS):
        terminalreporter.write_line(acceptance_log.RESULTS[number])
