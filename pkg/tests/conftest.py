from __future__ import annotations

import numpy as np

from hjj import ControlForm, ControlSystem, SolutionField, constant, control_edge


def build_model_system(l0_value: float = 0.0, horizon: float = 1.0,
                       n_controls: int = 21) -> ControlSystem:
    """Line system with velocity f = a and running cost l = 1 for a in [-1, 1].

    The junction floor is A0 = -1, so the flux limiter is max(-l0_value, -1):
    l0_value = 0 gives A = 0, l0_value = 1 gives A = -1.
    """
    edges = [
        control_edge(ControlForm(c1=1.0), ControlForm(c0=1.0), -1.0, 1.0, n=n_controls)
        for _ in range(2)
    ]
    return ControlSystem(edges, l0=constant(l0_value, horizon), A0=-1.0, delta=1.0)


def zero_datum(x: float) -> float:
    return 0.0


def check_value_function_bounds(cs: ControlSystem, field: SolutionField,
                                slack_space: float = 0.1) -> float:
    """Assert the a priori regularity of a dynamic-programming output.

    With C = 2 * (max_i sup|l_i|) + (|A0| + sup|l0|) the checks are:
    sup|u| <= C*T + sup|u0|, |u(., t) - u(., s)| <= C|t - s| + 2*dx, and
    per-edge slopes <= 2*C/delta + slack_space.  Returns C for callers that
    want to report the constant.
    """
    big_c = 2.0 * cs.cost_bound() + cs.abar_bound()
    grid = field.grid
    vals = field.values
    tol = 1e-9

    sup_u0 = float(np.max(np.abs(vals[0])))
    assert float(np.max(np.abs(vals))) <= big_c * grid.horizon + sup_u0 + tol

    times = grid.times
    for n in range(len(times)):
        gap = np.max(np.abs(vals - vals[n]), axis=1)
        bound = big_c * np.abs(times - times[n]) + 2.0 * grid.dx + tol
        assert np.all(gap <= bound), f"time regularity broken against level {n}"

    slope_bound = 2.0 * big_c / cs.delta + slack_space
    for i in range(grid.n_edges):
        profiles = vals[:, grid.edge_full_indices(i)]
        slopes = np.abs(np.diff(profiles, axis=1)) / grid.dx
        assert float(np.max(slopes)) <= slope_bound + tol, f"edge {i} slope too steep"
    return big_c
