"""Stable ranks as step functions and the interleaving distance between them.

The stable rank of ``X`` at ``t`` is the smallest rank reachable within
distance ``t``. It drops by one at each ``t_j = kappa(q) * ||(l_1..l_j)||_p``,
where the ``l_i`` are the finite lifetimes in increasing order. Infinite
bars never drop and set the limit value.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .barcode import INF, Barcode, prefix_p_norms
from .contours import bar_lifetimes
from .distances import MetricChoice


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous non-increasing step function on ``[0, inf)``.

    Takes ``values[j]`` on ``[breakpoints[j], breakpoints[j+1])``. The first
    breakpoint is 0, breakpoints increase strictly and values decrease
    strictly, so the last value is the limit at infinity.
    """

    breakpoints: tuple[float, ...]
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        bps = tuple(float(t) for t in self.breakpoints)
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)
        if not bps or len(bps) != len(vals):
            raise ValueError("step function needs matching, nonempty breakpoints and values")
        if bps[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if any(not math.isfinite(t) for t in bps):
            raise ValueError("breakpoints must be finite")
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must increase strictly")
        if any(b >= a for a, b in zip(vals, vals[1:])) or vals[-1] < 0:
            raise ValueError("values must be strictly decreasing naturals")

    @classmethod
    def from_drops(cls, drops: Sequence[float], start: int) -> "StepFunction":
        """Start at ``start`` and drop by one at each of ``drops`` (sorted, >= 0).

        Coinciding drops merge into one larger drop, and drops at 0 lower the
        initial value.
        """
        bps: list[float] = [0.0]
        vals: list[int] = [start]
        for t in drops:
            if t < 0 or not math.isfinite(t):
                raise ValueError(f"drop location must be finite and >= 0, got {t}")
            if t == bps[-1]:
                vals[-1] -= 1
            elif t > bps[-1]:
                bps.append(float(t))
                vals.append(vals[-1] - 1)
            else:
                raise ValueError("drop locations must be sorted")
        return cls(tuple(bps), tuple(vals))

    @property
    def limit(self) -> int:
        return self.values[-1]

    def __call__(self, t: float) -> int:
        if t < 0:
            raise ValueError("step functions live on [0, inf)")
        return self.values[bisect.bisect_right(self.breakpoints, t) - 1]

    def inverse(self, y: float) -> float:
        """``min{t : f(t) <= y}``, infinite below the limit."""
        for t, v in zip(self.breakpoints, self.values):
            if v <= y:
                return t
        return INF

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values), "limit": self.limit}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "StepFunction":
        f = cls(tuple(d["breakpoints"]), tuple(d["values"]))
        if "limit" in d and int(d["limit"]) != f.limit:
            raise ValueError("limit does not match the last value")
        return f

    def inverse_pairs(self) -> list[tuple[int, float]]:
        """``(y, f^{-1}(y))`` for every attained value, for plotting inverse stable ranks."""
        return [(v, t) for t, v in zip(self.breakpoints, self.values)]


def finite_lifetimes_sorted(X: Barcode, m: MetricChoice) -> tuple[np.ndarray, int]:
    """Increasing finite lifetimes under ``m.contour`` and the infinite-bar count.

    Sorting by lifetime alone yields the same vector as the
    ``(lifetime, birth, death)`` tie-break, since equal keys carry equal values.
    """
    life = bar_lifetimes(m.contour, X)
    fin = np.isfinite(life)
    return np.sort(life[fin]), int(np.count_nonzero(~fin))


def drop_points(X: Barcode, m: MetricChoice) -> tuple[np.ndarray, int]:
    """``t_1 <= ... <= t_n`` for the finite bars, and the infinite-bar count."""
    life, n_inf = finite_lifetimes_sorted(X, m)
    return m.kappa * prefix_p_norms(life, m.p)[1:], n_inf


def stable_rank(X: Barcode, m: MetricChoice) -> StepFunction:
    drops, n_inf = drop_points(X, m)
    return StepFunction.from_drops(drops.tolist(), len(drops) + n_inf)


def interleaving_step(f: StepFunction, g: StepFunction) -> float:
    """Interleaving distance ``sup_y |f^{-1}(y) - g^{-1}(y)|`` of two step functions."""
    if f.limit != g.limit:
        return INF
    ys = sorted(set(f.values) | set(g.values))
    return max(abs(f.inverse(y) - g.inverse(y)) for y in ys)


def interleaving_fast(X: Barcode, Y: Barcode, m: MetricChoice) -> float:
    """Interleaving distance of the stable ranks from prefix norms.

    With ``P_X(k)`` the p-norm of the ``k`` shortest lifetimes of ``X`` (n
    finite bars) and likewise for ``Y`` (n' finite bars), the distance is
    ``kappa(q) * max_i |P_X(n - i) - P_Y(n' - i)|`` over ``i <= min(n, n')``.
    Unequal infinite-bar counts give ``inf``.
    """
    lx, ix = finite_lifetimes_sorted(X, m)
    ly, iy = finite_lifetimes_sorted(Y, m)
    if ix != iy:
        return INF
    px = prefix_p_norms(lx, m.p)[::-1]
    py = prefix_p_norms(ly, m.p)[::-1]
    k = min(len(px), len(py))
    return m.kappa * float(np.max(np.abs(px[:k] - py[:k])))
