import json
import math

import pytest

from coordcert.errors import OutOfRegionError
from coordcert.noise import (
    curve_intercept,
    is_monotone,
    raw_violation,
    region_bound,
    simulated_slack,
    simulated_threshold,
    solve_threshold,
    threshold_table,
    threshold_table_json,
    violation_curve,
    violation_value,
)
from coordcert.witness import Variant

TRIG_TABLE = {
    4: (0.9439, 0.9474),
    5: (0.9612, 0.9624),
    6: (0.9717, 0.9721),
    7: (0.9785, 0.9787),
    8: (0.9831, 0.9832),
    9: (0.9864, 0.9865),
    10: (0.9889, 0.9889),
}


@pytest.mark.parametrize("n", sorted(TRIG_TABLE))
def test_trig_table(n):
    r = solve_threshold(n)
    assert abs(r.v_min - TRIG_TABLE[n][0]) <= 5e-5
    assert abs(r.f_min - TRIG_TABLE[n][1]) <= 5e-5
    assert abs(raw_violation(n, r.v_min)) <= 1e-12


def test_alt_n4():
    r = solve_threshold(4, Variant.ALT)
    assert abs(r.v_min - 0.9417) <= 5e-5
    assert abs(r.f_min - 0.9454) <= 5e-5


def test_alt_only_better_at_four():
    trig = threshold_table(range(4, 11))
    alt = threshold_table(range(4, 11), Variant.ALT)
    assert alt[0].v_min < trig[0].v_min
    assert all(a.v_min >= t.v_min for a, t in zip(alt[1:], trig[1:]))


@pytest.mark.parametrize("variant", list(Variant))
def test_thresholds_increase_with_n(variant):
    assert is_monotone([r.v_min for r in threshold_table(range(4, 11), variant)])


@pytest.mark.parametrize("variant", list(Variant))
@pytest.mark.parametrize("n", range(4, 11))
def test_threshold_inside_region(n, variant):
    r = solve_threshold(n, variant)
    assert r.restriction_bound <= r.v_min <= 1
    assert r.restriction_bound == pytest.approx(region_bound(n, variant))


def test_region_guard():
    with pytest.raises(OutOfRegionError):
        violation_value(4, 0.5)
    assert violation_value(4, 1.0) > 0


@pytest.mark.parametrize("n", [4, 7, 10])
def test_simulated_matches_closed_form(n):
    assert abs(simulated_threshold(n) - solve_threshold(n).v_min) <= 1e-6


@pytest.mark.parametrize("v", [0.9, 0.95, 1.0])
def test_simulated_slack_is_scaled_polynomial(v):
    n = 4
    assert simulated_slack(n, v) == pytest.approx(-4 * raw_violation(n, v), abs=1e-10)


def test_curve_rows_and_intercept():
    grid = [0.9 + 0.001 * k for k in range(101)]
    rows = violation_curve([4, 5], grid)
    assert len(rows) == 2 * len(grid)
    assert any(not ok for _, _, _, ok in rows)
    for n in (4, 5):
        assert abs(curve_intercept(rows, n) - solve_threshold(n).v_min) <= 1e-4


def test_table_json():
    data = json.loads(threshold_table_json(threshold_table([4, 5]), digits=6))
    assert data[0] == {"n": 4, "variant": "trig", "v_min": 0.943877, "f_min": 0.947385,
                       "restriction_bound": round(math.cos(math.pi / 6), 6)}
