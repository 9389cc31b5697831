import pytest

from heins_lab import construction as con
from heins_lab.rotation import power


@pytest.fixture(scope="session")
def quarter_power():
    return power(1.0, 0.25)


@pytest.fixture(scope="session")
def constructed(quarter_power):
    return con.build(quarter_power)
