"""Space-time grids on a star junction and solver output fields.

The junction node is shared by all edges and stored once: flat node index 0
is the junction, followed by each edge's interior nodes in order. Two-edge
line problems are presented to the outside in whole-line coordinates
(x < 0 is edge 1 mirrored); stars use "edge:distance" node labels.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CflViolation, ConfigError

__all__ = ["Grid", "SolutionField", "make_grid", "fmt", "atomic_write_text"]


def fmt(v: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return f"{float(v):.17g}"


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file + rename so readers never see partial output."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class Grid:
    """Uniform spatial mesh per edge plus the time levels.

    The last time increment may be shorter than dt so the final level lands
    exactly on the horizon. CFL admissibility (dt <= dx / C2) is enforced at
    construction.
    """

    dx: float
    dt: float
    horizon: float
    edge_radii: tuple
    times: np.ndarray
    _offsets: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sizes = self.edge_sizes()
        offsets = []
        off = 1
        for m in sizes:
            offsets.append(off)
            off += m
        object.__setattr__(self, "_offsets", tuple(offsets))

    @property
    def n_edges(self) -> int:
        return len(self.edge_radii)

    def edge_sizes(self) -> tuple:
        return tuple(int(round(r / self.dx)) for r in self.edge_radii)

    @property
    def n_nodes(self) -> int:
        return 1 + sum(self.edge_sizes())

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def edge_y(self, i: int) -> np.ndarray:
        m = self.edge_sizes()[i]
        return np.arange(m + 1) * self.dx

    def edge_full_indices(self, i: int) -> np.ndarray:
        m = self.edge_sizes()[i]
        return np.concatenate(([0], np.arange(self._offsets[i], self._offsets[i] + m)))

    def line_flat_indices(self) -> np.ndarray:
        if self.n_edges != 2:
            raise ValueError("whole-line layout needs exactly two edges")
        left = self.edge_full_indices(1)[::-1]
        right = self.edge_full_indices(0)[1:]
        return np.concatenate((left, right))

    def line_x(self) -> np.ndarray:
        if self.n_edges != 2:
            raise ValueError("whole-line layout needs exactly two edges")
        return np.concatenate((-self.edge_y(1)[::-1], self.edge_y(0)[1:]))

    def level_index(self, t: float) -> int:
        """Nearest grid level to a requested report time."""
        return int(np.argmin(np.abs(self.times - t)))

    def compatible(self, other: "Grid") -> bool:
        return (self.edge_sizes() == other.edge_sizes()
                and abs(self.dx - other.dx) < 1e-12
                and len(self.times) == len(other.times)
                and bool(np.all(np.abs(self.times - other.times) < 1e-12)))


def make_grid(
    dx: float,
    horizon: float,
    radii: Sequence[float],
    c2: float,
    dt: float | None = None,
    cfl_safety: float = 0.5,
) -> Grid:
    """Build a grid; dt defaults to cfl_safety * dx / C2 rounded to fit T.

    An explicitly requested dt that violates dt <= dx / C2 raises
    CflViolation (numerical-failure class, not a config error).
    """
    if dx <= 0 or horizon <= 0:
        raise ConfigError("dx and T must be positive")
    if not radii:
        raise ConfigError("need at least one edge radius")
    if not (0 < cfl_safety <= 1.0):
        raise ConfigError("cfl safety factor must lie in (0, 1]")
    c2 = max(float(c2), 1e-12)
    radii_eff = []
    for r in radii:
        m = max(1, int(round(r / dx)))
        radii_eff.append(m * dx)
    cfl_limit = dx / c2
    if dt is None:
        target = cfl_safety * cfl_limit
        n = max(1, int(math.ceil(horizon / target - 1e-12)))
        dt = horizon / n
        times = np.linspace(0.0, horizon, n + 1)
    else:
        dt = float(dt)
        if dt <= 0:
            raise ConfigError("dt must be positive")
        if dt > cfl_limit * (1.0 + 1e-9):
            raise CflViolation(
                f"dt={dt:.6g} exceeds the CFL limit dx/C2={cfl_limit:.6g}")
        n = max(1, int(math.ceil(horizon / dt - 1e-9)))
        times = np.minimum(np.arange(n + 1) * dt, horizon)
        times[-1] = horizon
    return Grid(dx=float(dx), dt=float(dt), horizon=float(horizon),
                edge_radii=tuple(radii_eff), times=np.asarray(times))


class SolutionField:
    """Node values at every time level on a Grid."""

    def __init__(self, grid: Grid, values: np.ndarray, line: bool):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.steps + 1, grid.n_nodes):
            raise ValueError("values shape does not match the grid")
        self.grid = grid
        self.values = values
        self.line = bool(line)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def level(self, n: int) -> np.ndarray:
        return self.values[n]

    def edge_profile(self, n: int, i: int) -> np.ndarray:
        return self.values[n][self.grid.edge_full_indices(i)]

    def line_profile(self, n: int) -> np.ndarray:
        return self.values[n][self.grid.line_flat_indices()]

    def final(self) -> np.ndarray:
        return self.values[-1]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def check_finite(self) -> None:
        if not np.all(np.isfinite(self.values)):
            from .errors import NumericalFailure
            bad = np.argwhere(~np.isfinite(self.values))[0]
            raise NumericalFailure(
                f"non-finite value at level {bad[0]}, node {bad[1]}")

    def linf_gap(self, other: "SolutionField") -> float:
        if not self.grid.compatible(other.grid):
            raise ConfigError("mismatched grids")
        return float(np.max(np.abs(self.values - other.values)))

    def node_labels(self) -> list:
        """Whole-line x floats, or 'edge:distance' strings for stars."""
        if self.line:
            return [fmt(x) for x in self.grid.line_x()]
        labels = ["0:0"]
        for i in range(self.grid.n_edges):
            for y in self.grid.edge_y(i)[1:]:
                labels.append(f"{i + 1}:{fmt(y)}")
        return labels

    def _node_order(self) -> np.ndarray:
        if self.line:
            return self.grid.line_flat_indices()
        return np.arange(self.grid.n_nodes)

    def to_csv(self) -> str:
        order = self._node_order()
        labels = self.node_labels()
        rows = ["t,x,u"]
        for n, t in enumerate(self.times):
            level = self.values[n]
            ts = fmt(t)
            for lab, k in zip(labels, order):
                rows.append(f"{ts},{lab},{fmt(level[k])}")
        return "\n".join(rows) + "\n"

    def write_csv(self, path: str) -> None:
        atomic_write_text(path, self.to_csv())

    def to_snapshot_tsv(self, t_requested: float) -> str:
        n = self.grid.level_index(t_requested)
        order = self._node_order()
        labels = self.node_labels()
        level = self.values[n]
        rows = [
            f"# t_requested={fmt(t_requested)}\tt_grid={fmt(self.times[n])}",
            "x\tu",
        ]
        for lab, k in zip(labels, order):
            rows.append(f"{lab}\t{fmt(level[k])}")
        return "\n".join(rows) + "\n"

    def write_snapshot_tsv(self, path: str, t_requested: float) -> None:
        atomic_write_text(path, self.to_snapshot_tsv(t_requested))
