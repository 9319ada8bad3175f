import functools

import pytest

from priceimpact import calibrated_params, nash, solve


@functools.lru_cache(maxsize=None)
def solved(sd=5.0, alpha=0.002, steps_per_year=10_000, backend=None, **overrides):
    p = calibrated_params(sd, alpha, **overrides)
    return nash(solve(p, steps_per_year=steps_per_year, backend=backend))


@pytest.fixture(scope="session")
def base():
    return solved(5.0, 0.002)


@pytest.fixture(scope="session")
def sd10():
    return solved(10.0, 0.002)


@pytest.fixture(scope="session")
def alpha01():
    return solved(5.0, 0.01)


@pytest.fixture(scope="session")
def flat():
    return solved(0.0, 0.002)


CALIBRATED = dict(a=2.0, delta=0.02, mu_D=0.0201672, sigma_D=0.0226743, mu_Y=-0.0709146,
                  sigma_Y=0.1, alpha=0.002)


def random_params(rng, sd_range=(0.0, 15.0)):
    """Admissible draw within +-50% of the calibrated values."""
    kw = {k: v * rng.uniform(0.5, 1.5) for k, v in CALIBRATED.items()}
    alpha = kw.pop("alpha")
    kw["rho"] = rng.uniform(-0.9, 0.9)
    sd = rng.uniform(*sd_range)
    return calibrated_params(sd, alpha, **kw), sd


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
