from __future__ import annotations

import numpy as np
import pytest

from hjj import (
    ControlEdge,
    ControlForm,
    ControlSystem,
    DppConfig,
    constant,
    dpp_consistency_check,
    enumerate_trajectories,
    make_grid,
    value_function,
)
from hjj.errors import BudgetExceeded, CflViolation

from conftest import build_model_system, check_value_function_bounds, zero_datum


def _abs_datum(x: float) -> float:
    return abs(x)


def test_enumerate_zero_duration_returns_the_datum():
    cs = build_model_system(0.0)
    cost, sample = enumerate_trajectories(cs, (0.7, 0.3), (0.7, 0.3), pieces=1,
                                          u0=_abs_datum)
    assert cost == pytest.approx(0.7, abs=1e-15)
    assert sample.labels == []
    assert sample.positions == [0.7]


def test_enumerate_isolates_the_stationary_control():
    # from x=1.3 only a=0 arrives back at x=1.3, so cost = u0 + l * T
    cs = build_model_system(0.0)
    cost, sample = enumerate_trajectories(cs, (1.3, 0.0), (1.3, 1.0), pieces=1,
                                          u0=_abs_datum, controls_per_piece=3)
    assert cost == pytest.approx(2.3, abs=1e-12)
    assert sample.labels == ["drive(edge1,a=0)"]


def test_enumerate_park_then_wait_example():
    """Driving to the junction and parking under A=0 costs only the driving time."""
    cs = build_model_system(0.0)
    cost, sample = enumerate_trajectories(cs, (0.5, 0.0), (0.0, 1.0), pieces=3,
                                          u0=zero_datum, controls_per_piece=3)
    assert cost == pytest.approx(0.5, abs=1e-12)
    assert sample.positions[0] == 0.5 and sample.positions[-1] == 0.0
    assert "park" in sample.labels


def test_enumerate_parking_is_billed_at_minus_a():
    # A = -1 makes parking cost 1 per unit time, the same as driving
    cs = build_model_system(1.0)
    cost, _ = enumerate_trajectories(cs, (0.5, 0.0), (0.0, 1.0), pieces=3,
                                     u0=zero_datum, controls_per_piece=3)
    assert cost == pytest.approx(1.0, abs=1e-12)


def test_enumerate_crossing_the_junction():
    cs = build_model_system(0.0)
    cost, sample = enumerate_trajectories(cs, (-0.5, 0.0), (0.5, 1.0), pieces=2,
                                          u0=zero_datum, controls_per_piece=3)
    assert cost == pytest.approx(1.0, abs=1e-12)
    assert sample.positions[0] == -0.5 and sample.positions[-1] == 0.5
    assert any(lbl.startswith("drive(edge2") for lbl in sample.labels)
    assert any(lbl.startswith("drive(edge1") for lbl in sample.labels)


def test_enumerate_unreachable_target_returns_infinity():
    cs = build_model_system(0.0)
    cost, sample = enumerate_trajectories(cs, (0.0, 0.0), (5.0, 0.5), pieces=2,
                                          u0=zero_datum)
    assert cost == np.inf
    assert sample is None


def test_enumerate_rejects_oversized_search_trees():
    cs = build_model_system(0.0)
    with pytest.raises(BudgetExceeded):
        enumerate_trajectories(cs, (0.0, 0.0), (0.0, 1.0), pieces=6,
                               u0=zero_datum, controls_per_piece=7)


def test_enumerate_is_deterministic():
    cs = build_model_system(0.0)
    runs = [enumerate_trajectories(cs, (0.5, 0.0), (0.0, 1.0), pieces=3,
                                   u0=zero_datum, controls_per_piece=3)
            for _ in range(2)]
    assert runs[0][0] == runs[1][0]
    assert runs[0][1].encoding == runs[1][1].encoding
    assert runs[0][1].labels == runs[1][1].labels


def test_trajectory_sample_is_a_consistent_path():
    cs = build_model_system(0.0)
    _, sample = enumerate_trajectories(cs, (0.5, 0.0), (0.0, 1.0), pieces=3,
                                       u0=zero_datum, controls_per_piece=3)
    times = np.array(sample.times)
    pos = np.array(sample.positions)
    assert times[0] == 0.0 and times[-1] == 1.0
    assert np.all(np.diff(times) >= -1e-15)
    speeds = np.abs(np.diff(pos)) / np.maximum(np.diff(times), 1e-15)
    assert np.max(speeds) <= cs.max_speed() + 1e-9


def test_value_function_on_the_model_problem():
    cs = build_model_system(0.0)
    cfg = DppConfig(dx=0.02, horizon=1.0, r_domain=2.0)
    field = value_function(cs, zero_datum, cfg)
    xs = field.grid.line_x()
    final = field.line_profile(field.grid.steps)
    want = np.minimum(1.0, np.abs(xs))
    assert np.max(np.abs(final - want)) <= 0.05
    check_value_function_bounds(cs, field)


def test_value_function_with_floor_limiter_is_exactly_linear_in_time():
    # A = -1: every trajectory costs 1 per unit time, so u(x, t) = t on the grid
    cs = build_model_system(1.0)
    cfg = DppConfig(dx=0.05, horizon=1.0, r_domain=2.0)
    field = value_function(cs, zero_datum, cfg)
    for n, t in enumerate(field.grid.times):
        assert np.max(np.abs(field.level(n) - t)) <= 1e-12


def test_value_function_matches_enumeration_at_aligned_points():
    cs = build_model_system(0.0)
    cfg = DppConfig(dx=0.05, horizon=1.0, r_domain=2.0)
    field = value_function(cs, zero_datum, cfg)
    grid = field.grid
    xs = grid.line_x()
    final = field.line_profile(grid.steps)
    for x_target in (0.0, 0.25, -0.5, 1.5):
        best = np.inf
        for y0 in np.arange(x_target - 1.0, x_target + 1.0 + 1e-9, 0.25):
            cost, _ = enumerate_trajectories(cs, (float(y0), 0.0), (x_target, 1.0),
                                             pieces=4, u0=zero_datum,
                                             controls_per_piece=2)
            best = min(best, cost)
        j = int(np.argmin(np.abs(xs - x_target)))
        assert abs(final[j] - best) <= 2.0 * grid.dx


def test_value_function_monotone_in_the_flux_limiter():
    # larger A makes parking dearer, so values can only drop ... the junction
    # operator max(A, .) grows, the running payoff -A shrinks
    cfg = DppConfig(dx=0.1, horizon=1.0, r_domain=2.0)
    hi_a = value_function(build_model_system(0.0), zero_datum, cfg)   # A = 0
    lo_a = value_function(build_model_system(1.0), zero_datum, cfg)   # A = -1
    assert float(np.max(hi_a.values - lo_a.values)) <= 1e-12


def test_value_function_monotone_in_the_datum():
    cs = build_model_system(0.0)
    cfg = DppConfig(dx=0.1, horizon=0.5, r_domain=1.5)
    rng = np.random.default_rng(59)
    for _ in range(10):
        s = rng.uniform(0.2, 0.9)
        x0 = rng.uniform(-0.5, 0.5)
        lo = lambda x, s=s, x0=x0: s * abs(x - x0)
        hi = lambda x, lo=lo: lo(x) + 0.25
        f_lo = value_function(cs, lo, cfg)
        f_hi = value_function(cs, hi, cfg)
        assert float(np.max(f_lo.values - f_hi.values)) <= 1e-12
        check_value_function_bounds(cs, f_lo)


def test_dpp_restart_reproduces_the_run():
    cs = build_model_system(0.0)
    cfg = DppConfig(dx=0.05, horizon=1.0, r_domain=2.0)
    field = value_function(cs, zero_datum, cfg)
    assert dpp_consistency_check(cs, zero_datum, cfg, 0.0, field) == 0.0
    assert dpp_consistency_check(cs, zero_datum, cfg, 0.5, field) <= 1e-13


def test_dpp_restart_rejects_off_grid_times():
    cs = build_model_system(0.0)
    cfg = DppConfig(dx=0.05, horizon=1.0, r_domain=2.0)
    with pytest.raises(ValueError):
        dpp_consistency_check(cs, zero_datum, cfg, 0.33)


def test_value_function_on_an_external_grid():
    cs = build_model_system(0.0)
    cfg = DppConfig(dx=0.1, horizon=1.0, r_domain=2.0)
    grid = make_grid(dx=0.1, horizon=1.0, radii=(2.0, 2.0), c2=1.0)
    field = value_function(cs, zero_datum, cfg, grid=grid)
    internal = value_function(cs, zero_datum, cfg)
    assert np.array_equal(field.values, internal.values)


def test_value_function_rejects_grids_that_break_the_cfl_condition():
    cs = build_model_system(0.0)
    cfg = DppConfig(dx=0.1, horizon=1.0, r_domain=2.0)
    slow = make_grid(dx=0.1, horizon=1.0, radii=(2.0, 2.0), c2=0.25)
    with pytest.raises(CflViolation):
        value_function(cs, zero_datum, cfg, grid=slow)


def test_value_function_with_position_dependent_speeds():
    drift = lambda t, y, a: a * (1.0 + 0.25 * min(y, 1.0))
    edges = [ControlEdge(drift, ControlForm(c0=1.0), np.linspace(-1.0, 1.0, 21)),
             ControlEdge(drift, ControlForm(c0=1.0), np.linspace(-1.0, 1.0, 21))]
    cs = ControlSystem(edges, l0=constant(0.0, 0.5), A0=-1.0, delta=1.0)
    cfg = DppConfig(dx=0.1, horizon=0.5, r_domain=1.5)
    field = value_function(cs, _abs_datum, cfg)
    field.check_finite()
    assert field.sup_norm() <= abs(_abs_datum(-1.5)) + 0.5 * cs.cost_bound() + 1e-9
    assert field.final()[0] <= 0.5 + 1e-12


def test_dpp_config_rejects_too_few_controls():
    with pytest.raises(ValueError):
        DppConfig(dx=0.1, horizon=1.0, r_domain=2.0, controls=2)
