import csv

import pytest

from glwb.analysis import (
    BreakevenQuery,
    BreakevenResult,
    Table1Row,
    bisect_increasing,
    breakeven,
    breakeven_bonus_mc,
    breakeven_bonus_pde,
    run_table1,
    table2_moves,
    write_table1_csv,
)
from glwb.errors import InvalidInputError
from glwb.montecarlo import McConfig


def test_bisect_linear_root():
    x, status = bisect_increasing(lambda b: b - 0.0372, 0.0, 0.2, 1e-6)
    assert status == "root" and abs(x - 0.0372) <= 1e-6


def test_bisect_endpoints_reported():
    assert bisect_increasing(lambda b: b + 1.0, 0.0, 0.2, 1e-4) == (0.0, "always-wait")
    assert bisect_increasing(lambda b: b - 1.0, 0.0, 0.2, 1e-4) == (0.2, "always-initiate")


def test_bisect_step_function_is_deterministic():
    f = lambda b: -1.0 if b < 0.05 else 1.0  # noqa: E731
    first = bisect_increasing(f, 0.0, 0.2, 1e-4)
    assert first == bisect_increasing(f, 0.0, 0.2, 1e-4)
    assert abs(first[0] - 0.05) <= 1e-4


@pytest.mark.parametrize("kwargs", [
    dict(bracket=(0.2, 0.0)), dict(tol=0.0), dict(y=0.0), dict(y=1.2), dict(delay=-1), dict(method="grid"),
])
def test_query_validation(kwargs):
    with pytest.raises(InvalidInputError):
        BreakevenQuery(**{"age": 55, "y": 1.0, **kwargs})


def test_pde_breakeven_coarse(base):
    res = breakeven_bonus_pde(BreakevenQuery(age=55, y=1.0), base, steps_per_year=48, ny=200)
    assert res.status == "root"
    assert 0.03 < res.beta < 0.045
    assert res.wait_value == pytest.approx(res.initiate_value, abs=2e-3)
    again = breakeven(BreakevenQuery(age=55, y=1.0), base, steps_per_year=48, ny=200)
    assert again == res


def test_pde_breakeven_rises_with_age(base):
    betas = [breakeven_bonus_pde(BreakevenQuery(age=a, y=1.0), base, 24, 100).beta for a in (55, 65, 75)]
    assert betas[0] < betas[1] < betas[2]


def test_pde_breakeven_narrow_bracket_reports_endpoint(base):
    res = breakeven_bonus_pde(BreakevenQuery(age=75, y=1.0, bracket=(0.0, 0.02)), base, 24, 100)
    assert res == BreakevenResult(0.02, "always-initiate", res.initiate_value, res.wait_value)
    assert res.wait_value < res.initiate_value


def test_mc_breakeven_small(base):
    cfg = McConfig(n_paths=4000)
    res = breakeven_bonus_mc(BreakevenQuery(age=65, y=0.8, method="mc"), base, cfg)
    assert res.status == "root" and 0.04 < res.beta < 0.08
    assert res.stderr > 0
    assert res == breakeven_bonus_mc(BreakevenQuery(age=65, y=0.8, method="mc"), base, cfg)


def test_table2_moves(base):
    moves = table2_moves(base)
    assert len(moves) == 7
    labels = [m[0] for m in moves]
    assert any("sigma 10%" in lab for lab in labels)
    for _, a, b in moves:
        assert a != b


def test_table1_csv(base, tmp_path):
    rows = run_table1(base, None, ages=(75,), moneyness=(1.0,), steps_per_year=24, ny=100)
    assert len(rows) == 1 and rows[0].mc is None
    extra = Table1Row(55, 0.5, rows[0].pde, BreakevenResult(0.05, "root", 1.0, 1.0, 0.001))
    write_table1_csv(rows + [extra], tmp_path / "t.csv")
    with open(tmp_path / "t.csv", newline="") as fh:
        data = list(csv.reader(fh))
    assert data[0] == ["age", "y", "pde_beta", "pde_status", "mc_beta", "mc_status", "mc_stderr"]
    assert data[1][:2] == ["75.0", "1.0"] and data[1][4:] == ["", "", ""]
    assert float(data[1][2]) == rows[0].pde.beta
    assert data[2][4:] == ["0.05", "root", "0.001"]
