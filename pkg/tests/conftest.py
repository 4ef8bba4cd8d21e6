import pytest

import cogcap as cc


@pytest.fixture(scope="session")
def table1():
    """The published parameter set shipped as the package default."""
    return cc.default_params()


@pytest.fixture(scope="session")
def table1_sensing(table1):
    return cc.sensing_probs(table1)


@pytest.fixture(scope="session")
def figure_params(table1):
    """Figure-preset parameterization: NACK-slot rate pinned to r1."""
    r = table1.su_rates_bps
    return table1.replace(su_rates_bps=(r[1], r[1], r[2]))
