import pytest
from hypothesis import given, strategies as st

from glwb.contract import ContractParams, PayoutSchedule, band_index, payout_rate, validate
from glwb.errors import InvalidInputError

TWO_BANDS = PayoutSchedule(((0, 0.04), (65, 0.05)))


@pytest.mark.parametrize("age", [0.0, 50.0, 87.25, 119.9])
def test_constant_schedule(age):
    assert payout_rate(PayoutSchedule.constant(0.05), age) == 0.05


def test_band_start_is_left_closed():
    assert payout_rate(TWO_BANDS, 65.0) == 0.05
    assert payout_rate(TWO_BANDS, 64.999) == 0.04


@pytest.mark.parametrize(
    "schedule, age, expected",
    [(PayoutSchedule.constant(0.05), 70, 0), (TWO_BANDS, 65, 1), (TWO_BANDS, 50, 0)],
)
def test_band_index(schedule, age, expected):
    assert band_index(schedule, age) == expected


def test_empty_schedule_is_an_error():
    with pytest.raises(InvalidInputError):
        payout_rate(PayoutSchedule(()), 60.0)
    with pytest.raises(InvalidInputError):
        band_index(PayoutSchedule(()), 60.0)


def test_ages_below_first_band_use_first_rate():
    sched = PayoutSchedule(((55, 0.04), (65, 0.05)))
    assert band_index(sched, 50.0) == 0


def test_base_case_is_valid():
    params = ContractParams(r=0.03, beta=0.04, sigma=0.20, alpha=0.015,
                            schedule=PayoutSchedule.constant(0.05))
    assert validate(params) == []


def test_zero_volatility_reported():
    problems = validate(ContractParams(sigma=0.0))
    assert any("sigma" in p for p in problems)


def test_decreasing_rates_reported():
    problems = validate(ContractParams(schedule=PayoutSchedule(((0, 0.05), (65, 0.04)))))
    assert any("step down" in p for p in problems)


def test_other_violations_reported():
    assert validate(ContractParams(r=-0.01))
    assert validate(ContractParams(alpha=float("nan")))
    assert validate(ContractParams(schedule=PayoutSchedule(((0, 0.04), (0, 0.05)))))
    assert validate(ContractParams(schedule=PayoutSchedule.constant(0.0)))
    assert validate(ContractParams(schedule=PayoutSchedule.constant(0.0)), allow_zero_rate=True) == []


schedules = st.lists(
    st.tuples(st.floats(0, 110), st.floats(0.01, 0.2)), min_size=1, max_size=5
).map(lambda bands: PayoutSchedule(tuple(zip(sorted({a for a, _ in bands}),
                                                  sorted(g for _, g in bands)))))


@given(schedules, st.floats(0, 120), st.floats(0, 120))
def test_payout_rate_is_non_decreasing_step_function(schedule, a1, a2):
    lo, hi = min(a1, a2), max(a1, a2)
    assert payout_rate(schedule, lo) <= payout_rate(schedule, hi)
    assert payout_rate(schedule, lo) == schedule.bands[band_index(schedule, lo)][1]
