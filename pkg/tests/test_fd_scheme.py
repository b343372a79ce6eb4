from __future__ import annotations

import numpy as np
import pytest

from hjj import (
    Edge,
    JunctionProblem,
    TimeSignal,
    constant,
    eikonal,
    envelopes,
    from_line,
    godunov_flux,
    grid_for,
    make_grid,
    quadratic,
    solve,
    step,
)
from hjj.errors import CflViolation

from conftest import zero_datum


def _line_problem(a_value: float, u0=zero_datum, lip: float = 0.0,
                  horizon: float = 1.0) -> JunctionProblem:
    return from_line(eikonal(), eikonal(), constant(a_value, horizon), u0, lip, horizon)


def _hopf_lax(u0, x: float, t: float, n: int = 4001) -> float:
    """Reference value for u_t + |u_x| - 1 = 0 on the whole line."""
    ys = np.linspace(x - t, x + t, n)
    return float(np.min([u0(y) for y in ys])) + t


def test_godunov_flux_examples():
    env = envelopes(eikonal())
    assert godunov_flux(env, 0.0, 0.0, 0.0, 0.0) == pytest.approx(-1.0, abs=1e-12)
    assert godunov_flux(env, 0.0, 0.0, 2.0, -2.0) == pytest.approx(1.0, abs=1e-12)
    envq = envelopes(quadratic(1.0, 0.0, 0.0))
    assert godunov_flux(envq, 0.0, 0.0, -1.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_godunov_flux_is_consistent_with_the_hamiltonian():
    rng = np.random.default_rng(37)
    for h in (eikonal(), quadratic(1.5, -0.5, 2.0)):
        env = envelopes(h)
        for p in rng.uniform(-4.0, 4.0, size=60):
            want = float(h.eval_p(0.0, 0.0, np.array([p]))[0])
            assert godunov_flux(env, 0.0, 0.0, p, p) == pytest.approx(want, abs=1e-12)


def test_godunov_flux_is_monotone():
    env = envelopes(quadratic(1.0, 0.3, 0.0))
    rng = np.random.default_rng(39)
    for _ in range(200):
        pm, pp = rng.uniform(-3.0, 3.0, size=2)
        d = rng.uniform(0.0, 1.0)
        base = godunov_flux(env, 0.0, 0.0, pm, pp)
        assert godunov_flux(env, 0.0, 0.0, pm + d, pp) >= base - 1e-10
        assert godunov_flux(env, 0.0, 0.0, pm, pp + d) <= base + 1e-10


def test_step_hand_evaluated_on_flat_data():
    """dx=1, dt=0.5, u=0: interior nodes gain dt, the junction follows max(A, -1)."""
    grid = make_grid(dx=1.0, horizon=0.5, radii=(3.0, 3.0), c2=1.0, dt=0.5)
    flat = np.zeros(grid.n_nodes)
    for a_value, junction_want in ((0.0, 0.0), (-1.0, 0.5)):
        prob = _line_problem(a_value, horizon=0.5)
        new = step(prob, grid, flat, 0.0, 0.5)
        assert new[0] == pytest.approx(junction_want, abs=1e-14)
        interiors = np.concatenate([new[grid.edge_full_indices(i)][1:] for i in range(2)])
        assert np.max(np.abs(interiors - 0.5)) <= 1e-14


def test_step_averages_the_flux_limiter_over_the_window():
    # A jumps from 0 to -1 at t=0.3, inside the window [0, 0.5]
    limiter = TimeSignal(np.array([0.0, 0.3, 0.5]), np.array([0.0, -1.0]))
    prob = from_line(eikonal(), eikonal(), limiter, zero_datum, 0.0, 0.5)
    grid = make_grid(dx=1.0, horizon=0.5, radii=(3.0, 3.0), c2=1.0, dt=0.5)
    new = step(prob, grid, np.zeros(grid.n_nodes), 0.0, 0.5)
    # junction update is -dt * max(avg A, -1) with avg A = -0.4
    assert new[0] == pytest.approx(0.2, abs=1e-14)


def test_solve_is_independent_of_the_signal_representative():
    bp = np.array([0.0, 0.3, 0.5])
    vals = np.array([0.0, -1.0])
    redundant = TimeSignal(np.array([0.0, 0.15, 0.3, 0.41, 0.5]),
                           np.array([0.0, 0.0, -1.0, -1.0]))
    p1 = from_line(eikonal(), eikonal(), TimeSignal(bp, vals), zero_datum, 0.0, 0.5)
    p2 = from_line(eikonal(), eikonal(), redundant, zero_datum, 0.0, 0.5)
    grid = grid_for(p1, 0.1, 2.0)
    assert np.array_equal(solve(p1, grid).values, solve(p2, grid).values)


def test_solve_level_zero_is_the_sampled_datum():
    u0 = lambda x: min(1.0, abs(x))
    prob = _line_problem(-1.0, u0=u0, lip=1.0)
    grid = grid_for(prob, 0.25, 2.0)
    field = solve(prob, grid)
    want = np.array([u0(x) for x in grid.line_x()])
    assert np.array_equal(field.line_profile(0), want)


def test_solve_matches_hopf_lax_reference():
    """With A at the floor the junction is inactive and the line formula applies."""
    u0 = lambda x: min(1.0, abs(x))
    prob = _line_problem(-1.0, u0=u0, lip=1.0)
    grid = grid_for(prob, 0.01, 2.0)
    field = solve(prob, grid)
    n = grid.steps
    t = grid.times[n]
    xs = grid.line_x()
    keep = np.abs(xs) <= 1.5  # keep clear of the truncation boundary
    got = field.line_profile(n)[keep]
    want = np.array([_hopf_lax(u0, x, t) for x in xs[keep]])
    assert np.max(np.abs(got - want)) <= 0.05


def test_solve_commutes_with_adding_constants():
    u0 = lambda x: min(1.0, abs(x))
    prob = _line_problem(0.0, u0=u0, lip=1.0)
    shifted = _line_problem(0.0, u0=lambda x: u0(x) + 2.5, lip=1.0)
    grid = grid_for(prob, 0.1, 2.0)
    base = solve(prob, grid)
    moved = solve(shifted, grid)
    assert np.max(np.abs(moved.values - base.values - 2.5)) <= 1e-12


def test_solve_respects_the_sup_norm_stability_bound():
    rng = np.random.default_rng(47)
    for _ in range(15):
        a = rng.uniform(0.5, 2.0)
        b = rng.uniform(-1.0, 1.0)
        c = rng.uniform(-1.0, 1.0)
        h = quadratic(a, b, c)
        a_value = c + rng.uniform(0.0, 1.0)
        s = rng.uniform(0.2, 1.0)
        u0 = lambda x, s=s: s * min(1.0, abs(x))
        prob = from_line(h, h, constant(a_value, 0.5), u0, s, 0.5)
        grid = grid_for(prob, 0.1, 1.0)
        field = solve(prob, grid)
        h0 = abs(float(h.eval_p(0.0, 0.0, np.array([0.0]))[0]))
        # zero-slope fluxes: H(0) inside, max(A, H(0)) at the junction and
        # the parabola minimum c at the outflow closure
        bound = max(abs(a_value), h0, abs(c))
        for nlev, t in enumerate(grid.times):
            assert float(np.max(np.abs(field.level(nlev)))) \
                <= float(np.max(np.abs(field.level(0)))) + t * bound + 1e-12


def test_discrete_comparison_on_ordered_data():
    rng = np.random.default_rng(53)
    for _ in range(10):
        a_value = rng.uniform(-1.0, 0.0)
        s = rng.uniform(0.2, 0.8)
        x0 = rng.uniform(-1.0, 1.0)
        lo = lambda x, s=s, x0=x0: s * abs(x - x0)
        bump = lambda x, x0=x0: 0.4 * max(0.0, 1.0 - abs(x + x0))
        hi = lambda x: lo(x) + 0.1 + bump(x)
        prob_lo = _line_problem(a_value, u0=lo, lip=1.0, horizon=0.5)
        prob_hi = _line_problem(a_value, u0=hi, lip=1.5, horizon=0.5)
        grid = grid_for(prob_lo, 0.1, 1.5)
        f_lo = solve(prob_lo, grid)
        f_hi = solve(prob_hi, grid)
        assert float(np.max(f_lo.values - f_hi.values)) <= 1e-12


def test_cfl_violation_raises():
    prob = _line_problem(-1.0)
    with pytest.raises(CflViolation):
        grid_for(prob, 0.05, 2.0, dt=0.2)
    with pytest.raises(CflViolation):
        make_grid(dx=0.1, horizon=1.0, radii=(1.0, 1.0), c2=2.0, dt=0.1)


def test_three_edge_star_solve_is_stable():
    prob = JunctionProblem(
        edges=[Edge(eikonal()) for _ in range(3)],
        flux_limiter=constant(-0.5, 0.5),
        initial_data=[zero_datum] * 3,
        lipschitz_u0=0.0,
        horizon=0.5,
    )
    grid = grid_for(prob, 0.1, 1.0)
    field = solve(prob, grid)
    field.check_finite()
    assert field.values.shape[1] == 1 + 3 * (len(grid.edge_y(0)) - 1)
    # junction cost rate is max(A, -1) = -0.5
    assert field.final()[0] == pytest.approx(0.25, abs=1e-12)


def test_csv_round_trips_17_digit_floats():
    prob = _line_problem(0.0, u0=lambda x: abs(x) / 3.0, lip=1.0 / 3.0, horizon=0.5)
    grid = grid_for(prob, 0.25, 1.0)
    field = solve(prob, grid)
    text = field.to_csv()
    lines = text.split("\n")
    assert lines[0] == "t,x,u"
    assert "\r" not in text
    t_str, x_str, u_str = lines[1].split(",")
    assert float(t_str) == grid.times[0]
    rebuilt = {}
    for row in lines[1:]:
        if not row:
            continue
        t_s, x_s, u_s = row.split(",")
        rebuilt[(float(t_s), float(x_s))] = float(u_s)
    xs = grid.line_x()
    for n, t in enumerate(grid.times):
        prof = field.line_profile(n)
        for x, u in zip(xs, prof):
            assert rebuilt[(float(t), float(x))] == u


def test_snapshot_records_requested_and_grid_times():
    prob = _line_problem(0.0, horizon=0.5)
    grid = grid_for(prob, 0.25, 1.0)
    field = solve(prob, grid)
    text = field.to_snapshot_tsv(0.28125)
    header, columns = text.split("\n")[:2]
    assert header.startswith("# t_requested=0.28125")
    assert "t_grid=0.25" in header  # nearest level wins
    assert columns == "x\tu"


def test_linf_gap_against_self_is_zero():
    prob = _line_problem(0.0, horizon=0.5)
    grid = grid_for(prob, 0.25, 1.0)
    field = solve(prob, grid)
    assert field.linf_gap(field) == 0.0
