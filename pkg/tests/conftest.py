import numpy as np
import pytest

from hcvdelay import (
    ModelParams,
    SystemState,
    TherapyEfficacies,
    TABLE1,
    TABLE2,
    basic_r0,
)


@pytest.fixture
def table1() -> ModelParams:
    return TABLE1


@pytest.fixture
def table2() -> ModelParams:
    return TABLE2


@pytest.fixture
def eff_crit() -> TherapyEfficacies:
    """The efficacy triple used throughout the bifurcation experiments."""
    return TherapyEfficacies(eta1=0.5, eta_r=0.7, c=0.81)


@pytest.fixture
def standard_start() -> SystemState:
    return SystemState(1e7, 1e7, 1e7, 1e7)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260825)


def random_valid_setup(rng, require_endemic=True, max_tries=500):
    """One random (params, efficacies) pair, optionally with R0 > 1.

    Draws log-uniform over plausible magnitude ranges; parameters satisfy
    all construction constraints (including s <= d1*t_max, so no warnings).
    """
    for _ in range(max_tries):
        d1 = 10 ** rng.uniform(-2.7, -1.3)
        r = 10 ** rng.uniform(-0.3, 0.5)
        t_max = 10 ** rng.uniform(6.0, 8.0)
        s = 10 ** rng.uniform(0.0, np.log10(d1 * t_max))
        alpha = 10 ** rng.uniform(-8.0, -6.0)
        beta = 10 ** rng.uniform(0.0, 1.2)
        d2 = 10 ** rng.uniform(-1.3, 0.2)
        d3 = 10 ** rng.uniform(0.3, 1.2)
        if r <= d1:
            continue
        p = ModelParams(s=s, r=r, t_max=t_max, alpha=alpha, beta=beta,
                        d1=d1, d2=d2, d3=d3)
        eff = TherapyEfficacies(
            eta1=rng.uniform(0.0, 0.6),
            eta_r=rng.uniform(0.0, 0.6),
            c=rng.uniform(0.3, 0.9),
        )
        if not require_endemic or basic_r0(p, eff) > 1.05:
            return p, eff
    raise RuntimeError("failed to draw a valid random setup")
