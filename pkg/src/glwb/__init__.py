"""Risk-neutral optimal initiation of a GLWB rider on a variable annuity."""

from .contract import ContractParams, PayoutSchedule, band_index, payout_rate, validate
from .errors import GlwbError, InvalidInputError, NumericalFailureError
from .mortality import GompertzModel, annuity_price, hazard, survival

__all__ = [
    "ContractParams",
    "GlwbError",
    "GompertzModel",
    "InvalidInputError",
    "NumericalFailureError",
    "PayoutSchedule",
    "annuity_price",
    "band_index",
    "hazard",
    "payout_rate",
    "survival",
    "validate",
]
