"""Optimal-control value function on the junction, independent of the scheme.

The value function is computed by forward dynamic programming on the same
kind of grid the difference scheme uses: one semi-Lagrangian Bellman update
per time window, with window-averaged speeds and running costs and linear
interpolation in space. Transitions never jump across the junction inside a
window (the step restriction dt * max|f| <= dx keeps departure points inside
one cell), so a crossing trajectory passes through the junction node and the
running cost switches regime exactly there. Parking at the junction costs
-A(t) per unit time, A = max(-l0, A0).

A tiny exhaustive enumerator over piecewise-constant controls doubles as an
oracle for the oracle on desk-scale instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .control_system import ControlForm, ControlSystem, flux_limiter
from .errors import BudgetExceeded, CflViolation, NoAdmissibleControl
from .grid import Grid, SolutionField, make_grid
from .time_signal import TimeSignal

__all__ = [
    "DppConfig",
    "TrajectorySample",
    "value_function",
    "enumerate_trajectories",
    "dpp_consistency_check",
]


@dataclass(frozen=True)
class DppConfig:
    """Grid and control-sampling knobs for the dynamic-programming solver."""

    dx: float
    horizon: float
    r_domain: float
    dt: float | None = None
    cfl_safety: float = 0.5
    controls: int | None = None  # resample each edge's control set
    park: bool = True

    def __post_init__(self):
        if self.controls is not None and self.controls < 3:
            raise ValueError("need at least 3 control samples per edge")


def _resolved(cs: ControlSystem, cfg: DppConfig) -> ControlSystem:
    if cfg.controls is None:
        return cs
    edges = [e.resampled(cfg.controls) for e in cs.edges]
    return ControlSystem(edges, cs.l0, cs.A0, cs.delta,
                         cs.orientation, cs.junction_controls)


def _initial_list(cs: ControlSystem, u0) -> list:
    if isinstance(u0, (list, tuple)):
        if len(u0) != len(cs.edges):
            raise ValueError("one initial datum per edge required")
        return list(u0)
    if cs.orientation == "line":
        return [lambda y: float(u0(y)), lambda y: float(u0(-y))]
    return [u0] * len(cs.edges)


def oracle_grid(cs: ControlSystem, cfg: DppConfig) -> Grid:
    radii = [cfg.r_domain] * len(cs.edges)
    return make_grid(cfg.dx, cfg.horizon, radii, c2=cs.max_speed(),
                     dt=cfg.dt, cfl_safety=cfg.cfl_safety)


def _sample_datum(grid: Grid, data: Sequence[Callable[[float], float]]) -> np.ndarray:
    u = np.empty(grid.n_nodes)
    u[0] = float(data[0](0.0))
    for i in range(grid.n_edges):
        idx = grid.edge_full_indices(i)
        ys = grid.edge_y(i)
        u[idx[1:]] = [data[i](float(y)) for y in ys[1:]]
    return u


def _bellman(cs: ControlSystem, grid: Grid, A: TimeSignal, level: np.ndarray,
             a: float, b: float, park: bool) -> np.ndarray:
    dtn = b - a
    new = np.full(grid.n_nodes, np.inf)
    junction_best = level[0] - A.integrate(a, b) if park else np.inf
    for i, edge in enumerate(cs.edges):
        idx = grid.edge_full_indices(i)
        y = grid.edge_y(i)
        uu = level[idx]
        ztol = 1e-10 * max(1.0, float(y[-1]))
        if edge.x_independent:
            fbar = cs.local_f_avg(i, a, b)
            lbar = cs.local_l_avg(i, a, b)
            fmat = fbar[:, None]
            lmat = lbar[:, None]
        else:
            fmat = np.stack([cs.local_f_avg(i, a, b, float(yj)) for yj in y], axis=1)
            lmat = np.stack([cs.local_l_avg(i, a, b, float(yj)) for yj in y], axis=1)
        best = np.full(len(y), np.inf)
        for k in range(fmat.shape[0]):
            z = y - fmat[k] * dtn
            ok = (z >= -ztol) & (z <= y[-1] + ztol)
            if not ok.any():
                continue
            vals = np.interp(np.clip(z, 0.0, y[-1]), y, uu)
            vals = vals + (lmat[k] if lmat.shape[-1] > 1 else lmat[k, 0]) * dtn
            best = np.minimum(best, np.where(ok, vals, np.inf))
        new[idx[1:]] = np.minimum(new[idx[1:]], best[1:])
        junction_best = min(junction_best, float(best[0]))
    new[0] = junction_best
    if not np.all(np.isfinite(new)):
        node = int(np.argwhere(~np.isfinite(new))[0])
        raise NoAdmissibleControl(
            f"no admissible transition reaches node {node} on [{a}, {b}]")
    return new


def _forward(cs: ControlSystem, grid: Grid, A: TimeSignal, v0: np.ndarray,
             n_start: int, park: bool) -> np.ndarray:
    n_levels = grid.steps - n_start
    out = np.empty((n_levels + 1, grid.n_nodes))
    out[0] = v0
    for k in range(n_levels):
        a = float(grid.times[n_start + k])
        b = float(grid.times[n_start + k + 1])
        out[k + 1] = _bellman(cs, grid, A, out[k], a, b, park)
    return out


def value_function(cs: ControlSystem, u0, cfg: DppConfig,
                   grid: Grid | None = None) -> SolutionField:
    """Forward dynamic-programming value function on the junction grid.

    u0 is a whole-line function for the line convention, or one function of
    the local coordinate (or a per-edge list) for stars. Passing a grid puts
    the run on someone else's mesh (it must satisfy dt max|f| <= dx). The
    a-priori sup bound (2L + Abar) T + sup|u0| is asserted on the result.
    """
    cs = _resolved(cs, cfg)
    if grid is None:
        grid = oracle_grid(cs, cfg)
    else:
        dt_max = float(np.max(np.diff(grid.times)))
        if dt_max * cs.max_speed() > grid.dx * (1.0 + 1e-9):
            raise CflViolation(
                f"dt={dt_max:.6g} exceeds dx/max|f|="
                f"{grid.dx / cs.max_speed():.6g} on the supplied grid")
    A = flux_limiter(cs)
    data = _initial_list(cs, u0)
    v0 = _sample_datum(grid, data)
    values = _forward(cs, grid, A, v0, 0, cfg.park)
    field = SolutionField(grid, values, line=(cs.orientation == "line"))
    field.check_finite()

    big_l = cs.cost_bound()
    abar = cs.abar_bound()
    bound = (2.0 * big_l + abar) * cfg.horizon + float(np.max(np.abs(v0)))
    if field.sup_norm() > bound + 1e-7 * (1.0 + bound):
        raise RuntimeError(
            f"value function breaks its a priori bound: {field.sup_norm():.6g} "
            f"> {bound:.6g}; the Bellman recursion is inconsistent")
    return field


def dpp_consistency_check(cs: ControlSystem, u0, cfg: DppConfig, s: float,
                          field: SolutionField | None = None) -> float:
    """Max deviation between a run and its restart from the level at time s.

    The restart takes the piecewise-linear profile at s as a fresh datum on
    the same grid, so by the programming principle the deviation should be
    at the interpolation-composition scale (and zero when nothing is lost).
    """
    if field is None:
        field = value_function(cs, u0, cfg)
    grid = field.grid
    ns = grid.level_index(s)
    if abs(float(grid.times[ns]) - s) > 1e-9 * max(1.0, grid.horizon):
        raise ValueError(f"restart time {s} is not a grid time")
    cs = _resolved(cs, cfg)

    data = []
    for i in range(grid.n_edges):
        ys = grid.edge_y(i)
        vals = field.edge_profile(ns, i).copy()
        data.append(lambda y, _ys=ys, _v=vals: float(np.interp(y, _ys, _v)))
    v0 = _sample_datum(grid, data)
    restarted = _forward(cs, grid, flux_limiter(cs), v0, ns, cfg.park)
    return float(np.max(np.abs(restarted - field.values[ns:])))


# ---------------------------------------------------------------------------
# exhaustive enumeration over piecewise-constant controls (desk scale)

@dataclass
class TrajectorySample:
    """Inspectable optimal path: segment times, positions and labels."""

    times: list
    positions: list
    labels: list
    cost: float
    encoding: tuple


def _form_only(edge) -> tuple[ControlForm, ControlForm]:
    if not (isinstance(edge.f, ControlForm) and isinstance(edge.l, ControlForm)):
        raise ValueError(
            "trajectory enumeration needs coefficient-form dynamics and costs")
    return edge.f, edge.l


def _signal_knots(form: ControlForm, a: float, b: float) -> np.ndarray:
    knots = {a, b}
    for sig in form.signals().values():
        for t in sig.breakpoints:
            if a < t < b:
                knots.add(float(t))
    return np.array(sorted(knots))


def _form_integral(form: ControlForm, alpha: float, a: float, b: float) -> float:
    def ival(c):
        return c.integrate(a, b) if isinstance(c, TimeSignal) else float(c) * (b - a)

    return ival(form.c0) + ival(form.c1) * alpha + ival(form.c2) * alpha * alpha


class _Enumerator:
    def __init__(self, edges, A: TimeSignal, budget: int, arrival_tol: float):
        self.edges = edges
        self.A = A
        self.forms = [_form_only(e) for e in edges]
        self.budget = budget
        self.nodes = 0
        self.arrival_tol = arrival_tol
        self.best_cost = math.inf
        self.best_enc: tuple | None = None
        self.best_segs: tuple | None = None

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded(f"enumeration exceeded {self.budget} nodes")

    def _advance(self, side: int, alpha: float, x: float, a: float, b: float):
        """Drive one control on one side until the piece ends or 0 is hit.

        Returns (hit_time_or_None, x_final, cost, segments). side is +1 for
        the right half-line, -1 for the left; x stays on that side.
        """
        f_form, l_form = self.forms[0 if side > 0 else 1]
        knots = _signal_knots(f_form, a, b)
        cost = 0.0
        segs = []
        for j in range(len(knots) - 1):
            s0, s1 = float(knots[j]), float(knots[j + 1])
            v = float(f_form.eval(0.5 * (s0 + s1), np.array([alpha]))[0])
            x_next = x + v * (s1 - s0)
            hit = None
            if side > 0 and x > 0 and x_next <= 0 and v < 0:
                hit = s0 + x / (-v)
            elif side < 0 and x < 0 and x_next >= 0 and v > 0:
                hit = s0 + (-x) / v
            stop = s1 if hit is None else hit
            cost += _form_integral(l_form, alpha, s0, stop)
            segs.append((s0, stop, x, 0.0 if hit is not None else x_next,
                         f"drive(edge{1 if side > 0 else 2},a={alpha:g})"))
            if hit is not None:
                return hit, 0.0, cost, segs
            x = x_next
        return None, x, cost, segs

    def _leave_options(self, t: float):
        """(side, alpha) choices that strictly leave the junction at time t."""
        out = []
        for side, edge in ((+1, self.edges[0]), (-1, self.edges[1])):
            f_form, _ = self.forms[0 if side > 0 else 1]
            for alpha in edge.controls:
                v = float(f_form.eval(t, np.array([alpha]))[0])
                if (side > 0 and v > 0) or (side < 0 and v < 0):
                    out.append((side, float(alpha)))
        return out

    def _park_cost(self, a: float, b: float) -> float:
        return -self.A.integrate(a, b) if b > a else 0.0

    def explore_piece(self, tau: np.ndarray, j: int, x: float,
                      acc: float, enc: tuple, segs: tuple, target: float):
        self._tick()
        if j == len(tau) - 1:
            if abs(x - target) <= self.arrival_tol:
                if (acc < self.best_cost
                        or (acc == self.best_cost
                            and (self.best_enc is None or enc < self.best_enc))):
                    self.best_cost = acc
                    self.best_enc = enc
                    self.best_segs = segs
            return
        a, b = float(tau[j]), float(tau[j + 1])
        at_junction = abs(x) <= 1e-12
        if at_junction:
            seg = (a, b, 0.0, 0.0, "park")
            self.explore_piece(tau, j + 1, 0.0, acc + self._park_cost(a, b),
                               enc + ((0,),), segs + (seg,), target)
            for side, alpha in self._leave_options(a):
                self._drive_from(tau, j, side, alpha, 0.0, a, acc,
                                 enc + ((1, side, alpha),), segs, target)
        else:
            side = 1 if x > 0 else -1
            edge = self.edges[0 if side > 0 else 1]
            for alpha in edge.controls:
                self._drive_from(tau, j, side, float(alpha), x, a, acc,
                                 enc + ((1, side, float(alpha)),), segs, target)

    def _drive_from(self, tau, j, side, alpha, x, s_from, acc, enc, segs, target):
        self._tick()
        b = float(tau[j + 1])
        hit, x_end, cost, new_segs = self._advance(side, alpha, x, s_from, b)
        if hit is None:
            self.explore_piece(tau, j + 1, x_end, acc + cost,
                               enc, segs + tuple(new_segs), target)
            return
        # junction reached inside the piece: stick, or cross immediately
        park_seg = (hit, b, 0.0, 0.0, "park")
        self.explore_piece(tau, j + 1, 0.0,
                           acc + cost + self._park_cost(hit, b),
                           enc + ((2,),), segs + tuple(new_segs) + (park_seg,),
                           target)
        if b - hit > 1e-13:
            for side2, alpha2 in self._leave_options(hit):
                self._drive_from(tau, j, side2, alpha2, 0.0, hit,
                                 acc + cost, enc + ((3, side2, alpha2),),
                                 segs + tuple(new_segs), target)


def _subsample(controls: np.ndarray, m: int) -> np.ndarray:
    if len(controls) <= m:
        return controls
    idx = np.unique(np.round(np.linspace(0, len(controls) - 1, m)).astype(int))
    return controls[idx]


def enumerate_trajectories(
    cs: ControlSystem,
    start: tuple,
    end: tuple,
    pieces: int,
    u0=None,
    controls_per_piece: int = 5,
    budget: int = 10_000_000,
    arrival_tol: float = 1e-9,
) -> tuple[float, TrajectorySample | None]:
    """Exact minimum over piecewise-constant controls between two events.

    start and end are (position, time) pairs in whole-line coordinates. The
    per-piece choices are: park at the junction, or drive one control of the
    current side; a trajectory hitting the junction mid-piece either sticks
    there (accruing the junction cost -A) or crosses with any control that
    strictly enters the opposite side, with the running-cost integral split
    exactly at the crossing. Costs include u0 at the start point when u0 is
    given. Returns (inf, None) when no combination reaches the end point.
    """
    x0, t0 = float(start[0]), float(start[1])
    x1, t1 = float(end[0]), float(end[1])
    if t1 < t0:
        raise ValueError("end time precedes start time")
    base = float(u0(x0)) if u0 is not None else 0.0
    if t1 == t0:
        if abs(x1 - x0) <= arrival_tol:
            return base, TrajectorySample([t0], [x0], [], base, ())
        return math.inf, None
    if pieces < 1:
        raise ValueError("need at least one piece")

    if cs.orientation != "line":
        raise ValueError("enumeration is implemented for the line convention")
    sub_edges = []
    for e in cs.edges:
        sub = _subsample(e.controls, controls_per_piece)
        sub_edges.append(type(e)(e.f, e.l, sub, e.interval))

    n1, n2 = len(sub_edges[0].controls), len(sub_edges[1].controls)
    branch = 1 + n1 + n2 + 2 * n1 * n2
    if branch ** pieces > budget:
        raise BudgetExceeded(
            f"worst-case branching {branch}^{pieces} exceeds {budget}")

    enum = _Enumerator(sub_edges, flux_limiter(cs), budget,
                       arrival_tol * max(1.0, abs(x1)))
    tau = np.linspace(t0, t1, pieces + 1)
    enum.explore_piece(tau, 0, x0, 0.0, (), (), x1)
    if enum.best_enc is None:
        return math.inf, None

    segs = enum.best_segs or ()
    times = [t0] + [s[1] for s in segs]
    positions = [x0] + [s[3] for s in segs]
    labels = [s[4] for s in segs]
    total = enum.best_cost + base
    return total, TrajectorySample(times, positions, labels, total, enum.best_enc)
