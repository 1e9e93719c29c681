"""Contours: reparametrizations of the filtration axis.

The standard contour measures a bar by its length. A distance-type contour
is induced by a positive density ``f`` on ``[0, inf)``: the lifetime of
``[a, b)`` is ``F(b) - F(a)`` with ``F(t) = int_0^t f``, and
``shift(a, eps)`` is the point reached from ``a`` after spending ``eps``
units of mass. Densities here are Gaussian mixtures plus a constant floor,
which gives a closed form for ``F`` through the normal CDF.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.special import ndtr

from .barcode import INF, Bar, Barcode, p_norm

DEFAULT_FLOOR = 1e-4
SHIFT_RESIDUAL = 1e-10
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianComponent:
    mu: float
    sigma: float
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"component sigma must be > 0, got {self.sigma}")
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise ValueError(f"component weight must be > 0, got {self.weight}")
        if not math.isfinite(self.mu):
            raise ValueError(f"component mean must be finite, got {self.mu}")


class StandardContour:
    """The contour ``C(a, eps) = a + eps``; lifetimes are plain lengths."""

    def lifetime(self, a: float, b: float) -> float:
        if b < a:
            raise ValueError(f"lifetime needs a <= b, got ({a}, {b})")
        return b - a

    def lifetimes(self, births: np.ndarray, deaths: np.ndarray) -> np.ndarray:
        return np.asarray(deaths, dtype=float) - np.asarray(births, dtype=float)

    def cumulative(self, t):
        return np.asarray(t, dtype=float) if np.ndim(t) else float(t)

    def shift(self, a: float, eps: float) -> float:
        if eps < 0:
            raise ValueError("shift needs eps >= 0")
        return a + eps

    def to_dict(self) -> dict:
        return {"type": "standard"}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StandardContour)

    def __hash__(self) -> int:
        return hash("standard")

    def __repr__(self) -> str:
        return "StandardContour()"


@dataclass(frozen=True)
class GaussianMixtureContour:
    """Distance-type contour of ``f(x) = floor + sum_i w_i N(x | mu_i, sigma_i)``.

    A zero floor is accepted for evaluation of lifetimes. ``shift`` then
    fails when the requested mass exceeds what the mixture has left.
    """

    components: tuple[GaussianComponent, ...] = ()
    floor: float = DEFAULT_FLOOR
    _arrays: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not (self.floor >= 0 and math.isfinite(self.floor)):
            raise ValueError(f"floor must be finite and >= 0, got {self.floor}")
        if self.floor == 0 and not comps:
            raise ValueError("density is identically zero")
        mu = np.array([c.mu for c in comps], dtype=float)
        sigma = np.array([c.sigma for c in comps], dtype=float)
        w = np.array([c.weight for c in comps], dtype=float)
        object.__setattr__(self, "_arrays", (mu, sigma, w, ndtr(-mu / sigma)))

    @classmethod
    def from_params(cls, mu, sigma, weights, floor: float = DEFAULT_FLOOR) -> "GaussianMixtureContour":
        return cls(tuple(GaussianComponent(float(m), float(s), float(w))
                         for m, s, w in zip(mu, sigma, weights)), float(floor))

    def density(self, t):
        mu, sigma, w, _ = self._arrays
        x = np.asarray(t, dtype=float)[..., None]
        z = (x - mu) / sigma
        val = self.floor + np.sum(w * np.exp(-0.5 * z * z) / (sigma * _SQRT_2PI), axis=-1)
        return val if np.ndim(t) else float(val)

    def cumulative(self, t):
        """``F(t) = int_0^t f``; infinite at infinity."""
        mu, sigma, w, phi0 = self._arrays
        x = np.asarray(t, dtype=float)
        fin = np.where(np.isinf(x), 0.0, x)
        val = self.floor * fin + np.sum(w * (ndtr((fin[..., None] - mu) / sigma) - phi0), axis=-1)
        val = np.where(np.isinf(x), INF, val)
        return val if np.ndim(t) else float(val)

    def lifetimes(self, births: np.ndarray, deaths: np.ndarray) -> np.ndarray:
        """Vectorized ``F(b) - F(a)``, written as one difference per component."""
        mu, sigma, w, _ = self._arrays
        a = np.asarray(births, dtype=float)
        b = np.asarray(deaths, dtype=float)
        inf = np.isinf(b)
        bf = np.where(inf, a, b)
        val = self.floor * (bf - a) + np.sum(
            w * (ndtr((bf[..., None] - mu) / sigma) - ndtr((a[..., None] - mu) / sigma)), axis=-1)
        return np.where(inf, INF, val)

    def lifetime(self, a: float, b: float) -> float:
        if b < a:
            raise ValueError(f"lifetime needs a <= b, got ({a}, {b})")
        if math.isinf(b):
            return INF
        return float(self.lifetimes(np.array([a]), np.array([b]))[0])

    def shift(self, a: float, eps: float) -> float:
        """Solve ``F(t) = F(a) + eps`` for ``t``.

        The root is bracketed in ``[a, a + eps/floor]``, or by doubling when
        the floor is zero, then refined by Newton steps that fall back to
        bisection whenever they leave the bracket.
        """
        if eps < 0:
            raise ValueError("shift needs eps >= 0")
        if eps == 0:
            return float(a)
        if math.isinf(eps):
            return INF
        lo = float(a)
        if self.floor > 0:
            hi = lo + eps / self.floor
        else:
            width = max(1.0, abs(lo))
            hi = lo + width
            while self.lifetime(lo, hi) < eps:
                width *= 2.0
                hi = lo + width
                if width > 1e300:
                    raise ValueError("shift: requested mass exceeds the density's total mass")

        def g(t: float) -> float:
            return self.lifetime(a, t) - eps

        t = 0.5 * (lo + hi)
        for _ in range(200):
            r = g(t)
            if r == 0:
                return t
            if r > 0:
                hi = t
            else:
                lo = t
            d = self.density(t)
            nxt = t - r / d if d > 0 else 0.5 * (lo + hi)
            if not (lo < nxt < hi):
                nxt = 0.5 * (lo + hi)
            # converged to working precision
            if abs(nxt - t) <= 4e-16 * max(1.0, abs(t)):
                break
            t = nxt
        if abs(g(t)) > SHIFT_RESIDUAL:
            raise ArithmeticError(f"shift did not converge: residual {g(t):.3g}")
        return t

    def to_dict(self) -> dict:
        return {
            "type": "gmm",
            "floor": self.floor,
            "components": [{"mu": c.mu, "sigma": c.sigma, "lambda": c.weight} for c in self.components],
        }


Contour = Union[StandardContour, GaussianMixtureContour]

STANDARD = StandardContour()


def constant_density(value: float) -> GaussianMixtureContour:
    """Contour of a constant density, i.e. a uniform rescaling of the axis."""
    return GaussianMixtureContour((), floor=float(value))


def lifetime(C: Contour, a: float, b: float) -> float:
    return C.lifetime(a, b)


def shift(C: Contour, a: float, eps: float) -> float:
    return C.shift(a, eps)


def bar_lifetimes(C: Contour, X: Barcode) -> np.ndarray:
    if len(X) == 0:
        return np.zeros(0)
    arr = np.array(X.pairs(), dtype=float)
    return C.lifetimes(arr[:, 0], arr[:, 1])


def transform_barcode(C: Contour, X: Barcode) -> Barcode:
    """Map each ``K(a, b)`` to ``K(l(0, a), l(0, b))``."""
    if isinstance(C, StandardContour) or len(X) == 0:
        return X
    arr = np.array(X.pairs(), dtype=float)
    births = C.cumulative(arr[:, 0])
    deaths = C.cumulative(arr[:, 1])
    return Barcode(Bar(float(a), float(b)) for a, b in zip(births, deaths))


def pC_norm(X: Barcode, p: float, C: Contour) -> float:
    """p-norm of the lifetimes of the bars of ``X`` under ``C``."""
    return p_norm(bar_lifetimes(C, X).tolist(), p)


def contour_from_dict(d: dict) -> Contour:
    kind = d.get("type")
    if kind == "standard":
        return STANDARD
    if kind == "gmm":
        comps = d.get("components", [])
        parsed = []
        for i, c in enumerate(comps):
            weight = 1.0 if i == 0 else float(c.get("lambda", 1.0))
            parsed.append(GaussianComponent(float(c["mu"]), float(c["sigma"]), weight))
        return GaussianMixtureContour(tuple(parsed), float(d.get("floor", DEFAULT_FLOOR)))
    raise ValueError(f"unknown contour type {kind!r}")


def load_contour(source: str) -> Contour:
    """Resolve ``"standard"``, an inline JSON object, or a path to a JSON file."""
    s = source.strip()
    if s == "standard":
        return STANDARD
    if s.startswith("{"):
        return contour_from_dict(json.loads(s))
    return contour_from_dict(json.loads(Path(s).read_text(encoding="utf-8")))
