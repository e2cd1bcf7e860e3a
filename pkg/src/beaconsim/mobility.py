"""Node mobility: synthetic placements/trajectories and CSV trace ingestion.

A mobility source yields one position function per node: ``f(t_ms) ->
(x_m, y_m)``.  Traces use the schema ``node_id,t_ms,x_m,y_m`` with rows
time-monotone per node; positions interpolate piecewise-linearly and clamp
at the trace edges.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from typing import Callable

PositionFn = Callable[[float], tuple[float, float]]


class MobilityError(ValueError):
    pass


def static_position(x: float, y: float) -> PositionFn:
    def fn(_t: float) -> tuple[float, float]:
        return (x, y)
    return fn


def grid_positions(n: int, spacing_m: float, origin: tuple[float, float] = (0.0, 0.0),
                   cols: int | None = None) -> list[PositionFn]:
    """Static grid, row-major, roughly square unless ``cols`` is given."""
    if n <= 0:
        return []
    if cols is None:
        cols = max(1, math.ceil(math.sqrt(n)))
    fns = []
    for i in range(n):
        r, c = divmod(i, cols)
        fns.append(static_position(origin[0] + c * spacing_m,
                                   origin[1] + r * spacing_m))
    return fns


def random_waypoint(rng, duration_ms: float, region: tuple[float, float],
                    speed_min: float, speed_max: float,
                    start: tuple[float, float] | None = None) -> PositionFn:
    """Pre-sampled random-waypoint trajectory, piecewise linear."""
    w, h = region
    t = 0.0
    pos = start if start is not None else (rng.uniform(0, w), rng.uniform(0, h))
    knots_t = [0.0]
    knots_xy = [pos]
    while t < duration_ms:
        target = (rng.uniform(0, w), rng.uniform(0, h))
        speed = rng.uniform(speed_min, speed_max)  # m/s
        dist = math.dist(pos, target)
        leg_ms = dist / speed * 1000.0 if speed > 0 else duration_ms
        t += max(leg_ms, 1.0)
        pos = target
        knots_t.append(t)
        knots_xy.append(pos)
    return _piecewise(knots_t, knots_xy)


def _piecewise(ts: list[float], xys: list[tuple[float, float]]) -> PositionFn:
    def fn(t: float) -> tuple[float, float]:
        if t <= ts[0]:
            return xys[0]
        if t >= ts[-1]:
            return xys[-1]
        i = bisect_right(ts, t) - 1
        t0, t1 = ts[i], ts[i + 1]
        x0, y0 = xys[i]
        x1, y1 = xys[i + 1]
        frac = (t - t0) / (t1 - t0) if t1 > t0 else 0.0
        return (x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac)
    return fn


def load_trace(path: str) -> dict[str, PositionFn]:
    """Read a ``node_id,t_ms,x_m,y_m`` CSV into per-node position functions."""
    rows: dict[str, tuple[list[float], list[tuple[float, float]]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, 1):
            if not row or row[0] == "node_id":
                continue
            if len(row) != 4:
                raise MobilityError(f"line {lineno}: expected 4 columns")
            node, t, x, y = row[0], float(row[1]), float(row[2]), float(row[3])
            ts, xys = rows.setdefault(node, ([], []))
            if ts and t <= ts[-1]:
                raise MobilityError(
                    f"line {lineno}: non-monotone timestamps for node {node}")
            ts.append(t)
            xys.append((x, y))
    return {node: _piecewise(ts, xys) for node, (ts, xys) in rows.items()}
