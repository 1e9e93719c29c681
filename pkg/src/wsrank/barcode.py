"""Bars, barcodes and p-norms on the extended non-negative reals.

Infinity is represented by ``math.inf`` for both bar deaths and the norm
exponent ``p``. It is a distinct IEEE value, so no large-float stand-in is
ever needed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

INF = math.inf

# absolute tolerance applied only when validating constructed bars
CONSTRUCTION_ATOL = 1e-12


def check_exponent(p: float) -> float:
    """Validate a norm exponent and return it as a float."""
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ValueError(f"norm exponent must satisfy p >= 1, got {p}")
    return p


def parse_exponent(text: str) -> float:
    """Parse ``"inf"``/``"infinity"`` or a real number >= 1."""
    s = str(text).strip().lower()
    if s in ("inf", "infinity", "+inf"):
        return INF
    return check_exponent(float(s))


def p_norm(values: Iterable[float], p: float) -> float:
    """p-norm of a vector of non-negative extended reals.

    Any infinite entry makes the result infinite, and the empty vector has
    norm 0. For ``p == 1`` the sum is compensated (``math.fsum``). For other
    finite ``p`` the entries are scaled by their maximum before
    exponentiation to avoid overflow.

    Raises:
        ValueError: if ``p < 1`` or an entry is negative.
    """
    p = check_exponent(p)
    v = [float(x) for x in values]
    if not v:
        return 0.0
    if any(x < 0 or math.isnan(x) for x in v):
        raise ValueError("p_norm entries must be non-negative")
    top = max(v)
    if math.isinf(top):
        return INF
    if p == INF:
        return top
    if p == 1.0:
        return math.fsum(v)
    if top == 0.0:
        return 0.0
    return top * math.fsum((x / top) ** p for x in v) ** (1.0 / p)


def prefix_p_norms(sorted_values: np.ndarray, p: float) -> np.ndarray:
    """Norms of all prefixes ``v[:0], v[:1], ..., v[:n]`` of a finite vector.

    Returns an array of length ``n + 1`` whose first entry is 0. Finite
    ``p > 1`` accumulates in log space so that large exponents neither
    overflow nor underflow.
    """
    v = np.asarray(sorted_values, dtype=float)
    out = np.zeros(v.size + 1)
    if v.size == 0:
        return out
    if p == INF:
        out[1:] = np.maximum.accumulate(v)
    elif p == 1.0:
        out[1:] = np.cumsum(v)
    else:
        with np.errstate(divide="ignore"):
            logs = p * np.log(v)
        out[1:] = np.exp(np.logaddexp.accumulate(logs) / p)
    return out


@dataclass(frozen=True, order=True)
class Bar:
    """Interval module supported on ``[birth, death)``."""

    birth: float
    death: float = INF

    def __post_init__(self) -> None:
        b, d = float(self.birth), float(self.death)
        if math.isnan(b) or math.isnan(d) or math.isinf(b):
            raise ValueError(f"invalid bar endpoints ({self.birth}, {self.death})")
        if b < -CONSTRUCTION_ATOL:
            raise ValueError(f"bar birth must be >= 0, got {b}")
        if not d > b + CONSTRUCTION_ATOL:
            raise ValueError(f"bar requires birth < death, got ({b}, {d})")
        object.__setattr__(self, "birth", max(b, 0.0))
        object.__setattr__(self, "death", d)

    @property
    def length(self) -> float:
        return self.death - self.birth

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.death)

    def alive(self, t: float) -> bool:
        return self.birth <= t < self.death


class Barcode(Sequence[Bar]):
    """Immutable multiset of bars.

    Bars are stored sorted by ``(birth, death)`` so equality and hashing do
    not depend on input order.
    """

    __slots__ = ("_bars",)

    def __init__(self, bars: Iterable[Bar | tuple[float, float]] = ()):
        items = [b if isinstance(b, Bar) else Bar(*b) for b in bars]
        self._bars: tuple[Bar, ...] = tuple(sorted(items))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]], drop_empty: bool = False) -> "Barcode":
        """Build from ``(birth, death)`` pairs, optionally dropping zero-length ones."""
        if drop_empty:
            pairs = [(a, b) for a, b in pairs if b > a + CONSTRUCTION_ATOL]
        return cls(Bar(a, b) for a, b in pairs)

    def __len__(self) -> int:
        return len(self._bars)

    def __getitem__(self, i):  # type: ignore[override]
        return self._bars[i]

    def __iter__(self) -> Iterator[Bar]:
        return iter(self._bars)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Barcode) and self._bars == other._bars

    def __hash__(self) -> int:
        return hash(self._bars)

    def __repr__(self) -> str:
        inner = ", ".join(f"K({b.birth:g},{b.death:g})" for b in self._bars)
        return f"Barcode([{inner}])"

    def __add__(self, other: "Barcode") -> "Barcode":
        return Barcode(self._bars + tuple(other))

    @property
    def rank(self) -> int:
        return len(self._bars)

    @property
    def finite(self) -> "Barcode":
        return Barcode(b for b in self._bars if not b.is_infinite)

    @property
    def n_infinite(self) -> int:
        return sum(1 for b in self._bars if b.is_infinite)

    def lengths(self) -> list[float]:
        return [b.length for b in self._bars]

    def pairs(self) -> list[tuple[float, float]]:
        return [(b.birth, b.death) for b in self._bars]


def rank(X: Barcode) -> int:
    return X.rank


def barcode_p_norm(X: Barcode, p: float) -> float:
    """p-norm of the bar lengths of ``X``."""
    return p_norm(X.lengths(), p)


def _format_value(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def barcode_to_csv(X: Barcode, header: bool = True) -> str:
    buf = io.StringIO()
    if header:
        buf.write("birth,death\n")
    for b in X:
        buf.write(f"{_format_value(b.birth)},{_format_value(b.death)}\n")
    return buf.getvalue()


def barcode_from_csv(text: str, source: str = "<string>") -> Barcode:
    """Parse a ``birth,death`` CSV. A header line is optional.

    Raises:
        ValueError: with ``source:line`` context on malformed rows.
    """
    bars = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and row[0].strip().lower() == "birth":
            continue
        if len(row) != 2:
            raise ValueError(f"{source}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            bars.append(Bar(float(row[0]), float(row[1])))
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from None
    return Barcode(bars)


def read_barcode(path: str | Path) -> Barcode:
    path = Path(path)
    return barcode_from_csv(path.read_text(encoding="utf-8"), source=str(path))


def write_barcode(X: Barcode, path: str | Path) -> None:
    Path(path).write_text(barcode_to_csv(X), encoding="utf-8")
