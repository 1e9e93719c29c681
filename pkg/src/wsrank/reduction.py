"""Presentation matrices of monomorphisms between barcodes over F2.

A monomorphism ``f: Z -> X`` of barcodes is presented by the map
``G_Z + R_X -> G_X``. Rows are the generators of ``X`` (degree = birth).
Columns are the generators of ``Z`` (tag ``Z``, degree = birth) together
with one relation per bar of ``X`` (tag ``R``, degree = death), whose only
nonzero entry sits on its own generator. Reducing the columns left to right
pairs every row with a column. The cokernel of ``f`` is the sum of bars
from the row degree to the paired column degree.

Columns are stored as Python ints used as bit sets over row positions.
Bit ``i`` is row ``i`` and the lowest entry of a column is its highest set
bit, so column additions are single XORs.

Epimorphisms are handled through the reflection ``t -> T - t``, which turns
an epimorphism ``Z ->> X`` into a monomorphism ``X* -> Z*`` whose cokernel
reflects back to the kernel of the original map.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .barcode import Bar, Barcode

Z_TAG = "Z"
R_TAG = "R"
# R sorts before Z at equal degree
_TAG_ORDER = {R_TAG: 0, Z_TAG: 1}


def low(col: int) -> int:
    """Row position of the lowest nonzero entry, or -1 for a zero column."""
    return col.bit_length() - 1


def f2_rank(vectors: Iterable[int]) -> int:
    """Rank over F2 of a family of bit-set vectors."""
    basis: dict[int, int] = {}
    r = 0
    for v in vectors:
        while v:
            h = v.bit_length() - 1
            if h in basis:
                v ^= basis[h]
            else:
                basis[h] = v
                r += 1
                break
    return r


@dataclass(frozen=True)
class PresentationMatrix:
    """Degree-labelled F2 matrix presenting the cokernel of a monomorphism.

    Attributes:
        row_degrees: birth of each row generator, non-decreasing.
        row_ids: original index of the ``X`` bar for each row.
        col_tags: ``"Z"`` or ``"R"`` per column.
        col_degrees: column degrees, non-decreasing.
        col_ids: original ``Z`` index for ``Z`` columns, original ``X``
            index for ``R`` columns.
        columns: bit sets over row positions.
    """

    row_degrees: tuple[float, ...]
    row_ids: tuple[int, ...]
    col_tags: tuple[str, ...]
    col_degrees: tuple[float, ...]
    col_ids: tuple[int, ...]
    columns: tuple[int, ...]

    @property
    def n_rows(self) -> int:
        return len(self.row_degrees)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def z_positions(self) -> list[int]:
        return [k for k, t in enumerate(self.col_tags) if t == Z_TAG]

    def r_positions(self) -> list[int]:
        return [k for k, t in enumerate(self.col_tags) if t == R_TAG]

    def paired_row(self, k: int) -> int:
        """Row position of the generator killed by the relation column ``k``."""
        if self.col_tags[k] != R_TAG:
            raise ValueError(f"column {k} is not a relation column")
        return self.row_ids.index(self.col_ids[k])

    def with_columns(self, columns: Sequence[int]) -> "PresentationMatrix":
        return replace(self, columns=tuple(columns))

    def entry(self, i: int, k: int) -> int:
        return (self.columns[k] >> i) & 1

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for k, col in enumerate(self.columns):
            for i in range(self.n_rows):
                out[i, k] = (col >> i) & 1
        return out

    def nonzero_columns(self) -> list[int]:
        return [k for k, c in enumerate(self.columns) if c]

    def row_labels(self) -> list[str]:
        return [f"x{j + 1}" for j in self.row_ids]

    def col_labels(self) -> list[str]:
        return [f"{'z' if t == Z_TAG else 'r'}{i + 1}" for t, i in zip(self.col_tags, self.col_ids)]

    def dump(self) -> str:
        """Plain-text grid with generator names and degrees on both axes."""
        heads = [f"{name}({_fmt(d)})" for name, d in zip(self.col_labels(), self.col_degrees)]
        rows = [f"{name}({_fmt(d)})" for name, d in zip(self.row_labels(), self.row_degrees)]
        w = max([len(h) for h in heads] + [1])
        rw = max([len(r) for r in rows] + [1])
        lines = [" " * rw + " " + " ".join(h.rjust(w) for h in heads)]
        for i, r in enumerate(rows):
            cells = [str(self.entry(i, k)).rjust(w) for k in range(self.n_cols)]
            lines.append(r.rjust(rw) + " " + " ".join(cells))
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:g}"


def _coeff_indices(coeff: Iterable[int], n_x: int) -> frozenset[int]:
    idx = frozenset(int(j) for j in coeff)
    if any(j < 0 or j >= n_x for j in idx):
        raise ValueError(f"coefficient index out of range in {sorted(idx)}")
    return idx


def build_presentation(z_bars: Sequence[Bar], x_bars: Sequence[Bar],
                       coefficients: Sequence[Iterable[int]]) -> PresentationMatrix:
    """Presentation matrix of ``f: Z -> X`` given ``f(z_i)`` over the X generators.

    ``coefficients[i]`` lists the indices of the X-generators appearing
    in ``f(z_i)``. Rows are sorted by ``(birth, index)``.
    Columns are sorted by ``(degree, R before Z, index)``.

    Raises:
        ValueError: for a zero image, an X-generator not alive at the birth
            of ``z_i``, or a ``z_i`` whose death is not the largest death in
            its image support.
    """
    z_bars = [b if isinstance(b, Bar) else Bar(*b) for b in z_bars]
    x_bars = [b if isinstance(b, Bar) else Bar(*b) for b in x_bars]
    if len(coefficients) != len(z_bars):
        raise ValueError("need one coefficient vector per Z bar")
    n = len(x_bars)
    supports = [_coeff_indices(c, n) for c in coefficients]
    for i, (z, sup) in enumerate(zip(z_bars, supports)):
        if not sup:
            raise ValueError(f"z{i + 1} maps to zero: not a monomorphism")
        for j in sup:
            if not x_bars[j].alive(z.birth):
                raise ValueError(f"z{i + 1} has a coefficient on x{j + 1}, which is not alive at {z.birth:g}")
        top = max(x_bars[j].death for j in sup)
        if top != z.death:
            raise ValueError(f"z{i + 1} dies at {z.death:g} but its image support dies at {top:g}")

    row_order = sorted(range(n), key=lambda j: (x_bars[j].birth, j))
    row_pos = {j: i for i, j in enumerate(row_order)}
    cols = [(z.birth, _TAG_ORDER[Z_TAG], i, Z_TAG) for i, z in enumerate(z_bars)]
    cols += [(x.death, _TAG_ORDER[R_TAG], j, R_TAG) for j, x in enumerate(x_bars)]
    cols.sort(key=lambda c: c[:3])
    bits = []
    for _, _, idx, tag in cols:
        if tag == Z_TAG:
            bits.append(sum(1 << row_pos[j] for j in supports[idx]))
        else:
            bits.append(1 << row_pos[idx])
    return PresentationMatrix(
        row_degrees=tuple(x_bars[j].birth for j in row_order),
        row_ids=tuple(row_order),
        col_tags=tuple(c[3] for c in cols),
        col_degrees=tuple(c[0] for c in cols),
        col_ids=tuple(c[2] for c in cols),
        columns=tuple(bits),
    )


def reduce_columns(M: PresentationMatrix, rng: np.random.Generator | None = None
                   ) -> tuple[PresentationMatrix, tuple[int, ...]]:
    """Left-to-right column reduction over F2.

    Returns the reduced matrix and the permutation sending the k-th nonzero
    column to the (1-based) row of its lowest entry. With ``rng`` given, the
    additions are instead performed in a random valid order: repeatedly pick
    any pair of columns ``j < k`` sharing a lowest row and add ``j`` to ``k``.
    """
    cols = list(M.columns)
    if rng is None:
        pivot: dict[int, int] = {}
        for k in range(len(cols)):
            c = cols[k]
            while c and low(c) in pivot:
                c ^= cols[pivot[low(c)]]
            cols[k] = c
            if c:
                pivot[low(c)] = k
    else:
        while True:
            by_low: dict[int, list[int]] = {}
            for k, c in enumerate(cols):
                if c:
                    by_low.setdefault(low(c), []).append(k)
            clashes = [ks for ks in by_low.values() if len(ks) > 1]
            if not clashes:
                break
            ks = clashes[rng.integers(len(clashes))]
            a, b = sorted(rng.choice(len(ks), size=2, replace=False))
            cols[ks[b]] ^= cols[ks[a]]
    sigma = tuple(low(c) + 1 for c in cols if c)
    return M.with_columns(cols), sigma


def bar_to_bar(M: PresentationMatrix) -> tuple[PresentationMatrix, PresentationMatrix, dict[int, int]]:
    """Run the bar-to-bar algorithm.

    Relation columns are visited right to left. For the relation ``r`` of
    row ``x``, the leftmost unassigned Z-column ``z`` with a one in row
    ``x`` is assigned ``r_max(z) = r`` and gets the single entry ``x`` in
    ``M_b``. Every Z-column to the right of ``z`` with a one in row ``x``
    then has ``z`` added to it. It is then cleared, via relation columns to
    its left, of rows whose relation precedes it.

    Returns:
        ``(M_star, M_b, r_max)`` where ``r_max`` maps Z-column positions to
        R-column positions.

    Raises:
        ValueError: if some Z-column is left without ``r_max``, which
            happens only when ``M`` does not present a monomorphism.
    """
    star = list(M.columns)
    zs = M.z_positions()
    rs = M.r_positions()
    b_cols = [0 if t == Z_TAG else c for t, c in zip(M.col_tags, M.columns)]
    row_of = {k: M.paired_row(k) for k in rs}
    r_max: dict[int, int] = {}
    for r in reversed(rs):
        x = row_of[r]
        cands = [z for z in zs if (star[z] >> x) & 1 and z not in r_max]
        if not cands:
            continue
        z = cands[0]
        b_cols[z] = 1 << x
        r_max[z] = r
        for z2 in zs:
            if z2 <= z or not (star[z2] >> x) & 1:
                continue
            star[z2] ^= star[z]
            for r2 in rs:
                if r2 < z2 and (star[z2] >> row_of[r2]) & 1:
                    star[z2] ^= star[r2]
    missing = [z for z in zs if z not in r_max]
    if missing:
        names = ", ".join(M.col_labels()[z] for z in missing)
        raise ValueError(f"r_max undefined for {names}: input does not present a monomorphism")
    return M.with_columns(star), M.with_columns(b_cols), r_max


def cokernel_barcode(sigma: Sequence[int], starts: Sequence[float], col_degrees: Sequence[float]) -> Barcode:
    """Barcode of the cokernel from a reduction permutation.

    ``sigma[k]`` is the 1-based row paired with the k-th nonzero column, so
    the bars are ``K(starts[sigma[k] - 1], col_degrees[k])``. Zero-length
    pairs are dropped.

    Raises:
        ValueError: on length mismatch, or when a paired start exceeds its
            column degree.
    """
    n = len(starts)
    if len(sigma) != n or len(col_degrees) != n or sorted(sigma) != list(range(1, n + 1)):
        raise ValueError("sigma must be a permutation of 1..n matching starts and degrees")
    pairs = []
    for k, s in enumerate(sigma):
        a, b = starts[s - 1], col_degrees[k]
        if a > b:
            raise ValueError(f"inconsistent pairing: start {a:g} after column degree {b:g}")
        if b > a:
            pairs.append((a, b))
    return Barcode.from_pairs(pairs)


def cokernel_of(M: PresentationMatrix) -> tuple[Barcode, tuple[int, ...]]:
    """Reduce ``M`` and read off the cokernel barcode and ``sigma``."""
    red, sigma = reduce_columns(M)
    degrees = [M.col_degrees[k] for k in red.nonzero_columns()]
    return cokernel_barcode(sigma, M.row_degrees, degrees), sigma


# --- monomorphism checks and sampling -------------------------------------


def _alive_mask(bars: Sequence[Bar], t: float) -> int:
    return sum(1 << j for j, b in enumerate(bars) if b.alive(t))


def is_pointwise_injective(z_bars: Sequence[Bar], x_bars: Sequence[Bar],
                           supports: Sequence[Iterable[int]]) -> bool:
    """Check injectivity of ``f_t`` at every critical degree ``t``."""
    vecs = [sum(1 << j for j in s) for s in supports]
    crit = sorted({b.birth for b in list(z_bars) + list(x_bars)}
                  | {b.death for b in list(z_bars) + list(x_bars) if math.isfinite(b.death)})
    for t in crit:
        xm = _alive_mask(x_bars, t)
        alive = [vecs[i] & xm for i, z in enumerate(z_bars) if z.alive(t)]
        if f2_rank(alive) != len(alive):
            return False
    return True


@dataclass(frozen=True)
class Monomorphism:
    """A morphism of barcodes ``Z -> X`` with ``supports[i]`` the X-indices of ``f(z_i)``."""

    z_bars: tuple[Bar, ...]
    x_bars: tuple[Bar, ...]
    supports: tuple[frozenset[int], ...]

    def presentation(self) -> PresentationMatrix:
        return build_presentation(self.z_bars, self.x_bars, self.supports)


def random_monomorphism(rng: np.random.Generator, n_x: int, max_z: int | None = None,
                        max_degree: int = 12, max_tries: int = 10_000) -> Monomorphism:
    """Sample a monomorphism with integer degrees (so ties are frequent).

    X bars get random integer births and lengths. Each Z bar picks a birth
    among the X births, a nonempty subset of the X generators alive there,
    and dies with the last of them. Samples failing pointwise injectivity
    are rejected.
    """
    max_z = n_x if max_z is None else max_z
    for _ in range(max_tries):
        births = rng.integers(0, max_degree, size=n_x)
        lengths = rng.integers(1, max_degree // 2 + 1, size=n_x)
        x_bars = tuple(Bar(float(a), float(a + l)) for a, l in zip(births, lengths))
        n_z = int(rng.integers(0, max_z + 1))
        z_bars, supports = [], []
        for _ in range(n_z):
            a = float(rng.choice(births)) + float(rng.integers(0, 2))
            alive = [j for j, x in enumerate(x_bars) if x.alive(a)]
            if not alive:
                continue
            size = int(rng.integers(1, len(alive) + 1))
            sup = frozenset(int(j) for j in rng.choice(alive, size=size, replace=False))
            z_bars.append(Bar(a, max(x_bars[j].death for j in sup)))
            supports.append(sup)
        if is_pointwise_injective(z_bars, x_bars, supports):
            return Monomorphism(tuple(z_bars), x_bars, tuple(supports))
    raise RuntimeError("could not sample an injective morphism")


# --- epimorphisms through reflection --------------------------------------


def reflect_barcode(bars: Iterable[Bar], T: float) -> tuple[Bar, ...]:
    """Apply ``t -> T - t`` to every bar: ``K(a, b) -> K(T - b, T - a)``."""
    out = []
    for b in bars:
        if math.isinf(b.death):
            raise ValueError("reflection needs finite bars")
        out.append(Bar(T - b.death, T - b.birth))
    return tuple(out)


@dataclass(frozen=True)
class Copresentation:
    """Copresentation of an epimorphism ``Z ->> X``.

    Stored as the presentation matrix of the reflected monomorphism
    ``X* -> Z*`` together with the reflection constant ``T``. Its rows are
    the generators of ``Z*`` and its columns are indexed by ``X`` and the
    relations of ``Z*``.
    """

    matrix: PresentationMatrix
    T: float


def build_copresentation(z_bars: Sequence[Bar], x_bars: Sequence[Bar],
                         coefficients: Sequence[Iterable[int]]) -> Copresentation:
    """Copresentation of an epimorphism ``f: Z ->> X``.

    ``coefficients[i]`` lists the X generators of ``f(z_i)``. After
    reflection each X-generator becomes a domain generator of the dual map
    and must satisfy the monomorphism checks of :func:`build_presentation`.
    """
    z_bars = [b if isinstance(b, Bar) else Bar(*b) for b in z_bars]
    x_bars = [b if isinstance(b, Bar) else Bar(*b) for b in x_bars]
    ends = [b.death for b in z_bars + x_bars]
    if any(math.isinf(e) for e in ends):
        raise ValueError("epimorphism path needs finite bars")
    T = max(ends, default=0.0)
    supports = [_coeff_indices(c, len(x_bars)) for c in coefficients]
    dual = [frozenset(i for i, s in enumerate(supports) if j in s) for j in range(len(x_bars))]
    try:
        M = build_presentation(reflect_barcode(x_bars, T), reflect_barcode(z_bars, T), dual)
    except ValueError as exc:
        raise ValueError(f"not an epimorphism copresentation: {exc}") from None
    return Copresentation(M, T)


def kernel_of(M: PresentationMatrix, T: float) -> Barcode:
    """Kernel barcode from a reflected presentation matrix."""
    coker, _ = cokernel_of(M)
    return Barcode(reflect_barcode(coker, T))


def epi_dual_reduce(cop: Copresentation) -> tuple[PresentationMatrix, tuple[int, ...], Barcode]:
    """Reduce a copresentation and return ``(reduced, sigma, kernel barcode)``."""
    red, sigma = reduce_columns(cop.matrix)
    degrees = [cop.matrix.col_degrees[k] for k in red.nonzero_columns()]
    coker = cokernel_barcode(sigma, cop.matrix.row_degrees, degrees)
    return red, sigma, Barcode(reflect_barcode(coker, cop.T))


def epi_bar_to_bar_kernel(cop: Copresentation) -> Barcode:
    """Kernel barcode of the bar-to-bar surrogate of an epimorphism."""
    _, Mb, _ = bar_to_bar(cop.matrix)
    return kernel_of(Mb, cop.T)


# --- permutation order -----------------------------------------------------


@lru_cache(maxsize=64)
def _upper_set(start: tuple[int, ...]) -> frozenset[tuple[int, ...]]:
    seen = {start}
    queue = deque([start])
    n = len(start)
    while queue:
        cur = queue.popleft()
        for i in range(n):
            for j in range(i + 1, n):
                if cur[i] < cur[j]:
                    nxt = list(cur)
                    nxt[i], nxt[j] = nxt[j], nxt[i]
                    t = tuple(nxt)
                    if t not in seen:
                        seen.add(t)
                        queue.append(t)
    return frozenset(seen)


def perm_leq_oracle(rho: Sequence[int], sigma: Sequence[int]) -> bool:
    """Whether ``sigma`` is reachable from ``rho`` by inversion-creating transpositions.

    Right composition with the transposition ``(i j)`` swaps the entries in
    positions ``i < j``. A step is allowed when it creates an inversion,
    i.e. when ``rho[i] < rho[j]`` before the swap. Brute force over ``S_n``.

    Raises:
        ValueError: for ``n > 7`` or arguments that are not permutations.
    """
    rho, sigma = tuple(int(v) for v in rho), tuple(int(v) for v in sigma)
    n = len(rho)
    if n > 7:
        raise ValueError("perm_leq_oracle is brute force and limited to n <= 7")
    if sorted(rho) != list(range(1, n + 1)) or sorted(sigma) != list(range(1, n + 1)):
        raise ValueError("arguments must be permutations of 1..n of equal length")
    return sigma in _upper_set(rho)


def parse_permutation(text: str) -> tuple[int, ...]:
    """Parse one-line notation such as ``"543621"`` or ``"5,4,3,6,2,1"``."""
    s = text.strip().strip("[]")
    parts = s.split(",") if "," in s else list(s)
    return tuple(int(p) for p in parts if p.strip())


# --- the worked example ----------------------------------------------------

EXAMPLE_X_BARS = tuple(Bar(a, b) for a, b in [(4, 6), (2, 9), (3, 10), (5, 11), (0, 12), (1, 13)])
EXAMPLE_Z_BARS = tuple(Bar(a, b) for a, b in [(5, 10), (7, 10), (8, 13)])
EXAMPLE_SUPPORTS = (frozenset({0, 2}), frozenset({1, 2}), frozenset({3, 4, 5}))


def example_presentation() -> PresentationMatrix:
    """Three Z bars into six X bars, the standard worked example for the algorithm."""
    return build_presentation(EXAMPLE_Z_BARS, EXAMPLE_X_BARS, EXAMPLE_SUPPORTS)
