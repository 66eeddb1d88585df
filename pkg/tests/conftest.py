import pytest

from glwb.contract import ContractParams, PayoutSchedule
from glwb.pde_engine import Grid


@pytest.fixture
def base():
    """Moderate-volatility base case: r=3%, beta=4%, sigma=20%, alpha=1.5%, g=5%."""
    return ContractParams()


@pytest.fixture
def null_contract():
    """No fee, no bonus, no payout: the hedge value per unit of guarantee is y."""
    return ContractParams(alpha=0.0, beta=0.0, schedule=PayoutSchedule.constant(0.0))


@pytest.fixture
def coarse_grid(base):
    return Grid.for_params(base, steps_per_year=24, ny=100)
