"""Wasserstein distances between persistence diagrams and their closed forms.

The matching distance ``W^p_p`` is solved exactly as a linear assignment on
a diagonally augmented cost matrix. A brute-force enumerator over partial
matchings serves as an independent oracle on small inputs and also covers
the mixed exponent ``W^q_p``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TypeVar

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .barcode import INF, Bar, Barcode, check_exponent, p_norm
from .contours import STANDARD, Contour, bar_lifetimes

BRUTE_FORCE_LIMIT = 8


def kappa(q: float) -> float:
    """``2^((1-q)/q)``, with the value 1/2 at ``q = inf``."""
    q = check_exponent(q)
    if q == INF:
        return 0.5
    return 2.0 ** ((1.0 - q) / q)


@dataclass(frozen=True)
class MetricChoice:
    """Exponents ``p`` (bar aggregation), ``q`` (noise aggregation) and a contour."""

    p: float = 1.0
    q: float = 1.0
    contour: Contour = field(default=STANDARD)

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", check_exponent(self.p))
        object.__setattr__(self, "q", check_exponent(self.q))

    @property
    def kappa(self) -> float:
        return kappa(self.q)


def point_distance(x: Bar, y: Bar, p: float) -> float:
    """``d_p`` between two diagram points; infinite points only meet each other."""
    if x.is_infinite or y.is_infinite:
        if x.is_infinite and y.is_infinite:
            return abs(x.birth - y.birth)
        return INF
    return p_norm((abs(x.birth - y.birth), abs(x.death - y.death)), p)


def diagonal_distance(x: Bar, p: float) -> float:
    """``d_p`` from a point to the diagonal, ``kappa(p) * length``."""
    return kappa(p) * x.length


def _finite_cost_matrix(D: Sequence[Bar], E: Sequence[Bar], p: float) -> np.ndarray:
    """Augmented ``(m+n) x (m+n)`` matrix of ``d_p`` costs (not raised to ``p``)."""
    m, n = len(D), len(E)
    C = np.zeros((m + n, m + n))
    if m and n:
        a = np.array([(b.birth, b.death) for b in D])
        b = np.array([(b.birth, b.death) for b in E])
        db = np.abs(a[:, None, 0] - b[None, :, 0])
        dd = np.abs(a[:, None, 1] - b[None, :, 1])
        if p == INF:
            C[:m, :n] = np.maximum(db, dd)
        elif p == 1.0:
            C[:m, :n] = db + dd
        else:
            C[:m, :n] = (db ** p + dd ** p) ** (1.0 / p)
    k = kappa(p)
    for i, x in enumerate(D):
        C[i, n:] = k * x.length
    for j, y in enumerate(E):
        C[m:, j] = k * y.length
    return C


def _bottleneck_assignment(C: np.ndarray) -> float:
    """Smallest threshold admitting a perfect matching using entries ``<= threshold``."""
    size = C.shape[0]
    if size == 0:
        return 0.0
    values = np.unique(C)
    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        rows, cols = np.nonzero(C <= values[mid])
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=C.shape)
        match = maximum_bipartite_matching(graph, perm_type="column")
        if np.all(match >= 0):
            hi = mid
        else:
            lo = mid + 1
    return float(values[lo])


def wasserstein_pp(D: Barcode, E: Barcode, p: float) -> float:
    """Exact ``W^p_p`` between two diagrams.

    Finite points are matched to finite points or to the diagonal by an
    optimal assignment on costs raised to ``p``, or by a bottleneck
    assignment when ``p = inf``. Infinite points must match each other, so
    unequal infinite counts give ``inf``. Otherwise they are paired in
    birth order, which is optimal for any convex cost on the line.
    """
    p = check_exponent(p)
    inf_d = sorted(b.birth for b in D if b.is_infinite)
    inf_e = sorted(b.birth for b in E if b.is_infinite)
    if len(inf_d) != len(inf_e):
        return INF
    inf_costs = [abs(a - b) for a, b in zip(inf_d, inf_e)]
    C = _finite_cost_matrix(list(D.finite), list(E.finite), p)
    if p == INF:
        return max([_bottleneck_assignment(C)] + inf_costs)
    P = C ** p
    rows, cols = linear_sum_assignment(P)
    total = math.fsum(P[rows, cols].tolist() + [c ** p for c in inf_costs])
    return total ** (1.0 / p)


def wasserstein_qp_bruteforce(D: Barcode, E: Barcode, p: float, q: float) -> float:
    """``W^q_p`` by enumerating every partial matching.

    Each matched pair costs ``d_p(x, y)`` and each unmatched point costs its
    ``d_p`` distance to the diagonal; the total is the ``q``-norm of all
    these terms.

    Raises:
        ValueError: when ``|D| + |E|`` exceeds the brute-force limit.
    """
    p, q = check_exponent(p), check_exponent(q)
    if len(D) + len(E) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} points in total")
    A, B = list(D), list(E)
    diag_a = [diagonal_distance(x, p) if not x.is_infinite else INF for x in A]
    diag_b = [diagonal_distance(y, p) if not y.is_infinite else INF for y in B]
    best = INF

    def visit(i: int, used: int, terms: list[float]) -> None:
        nonlocal best
        if i == len(A):
            rest = [diag_b[j] for j in range(len(B)) if not (used >> j) & 1]
            best = min(best, p_norm(terms + rest, q))
            return
        visit(i + 1, used, terms + [diag_a[i]])
        for j in range(len(B)):
            if not (used >> j) & 1:
                visit(i + 1, used | (1 << j), terms + [point_distance(A[i], B[j], p)])

    visit(0, 0, [])
    return best


def dist_to_zero(X: Barcode, m: MetricChoice) -> float:
    """Distance from ``X`` to the zero module: ``kappa(q)`` times the (p, C)-norm."""
    return m.kappa * p_norm(bar_lifetimes(m.contour, X).tolist(), m.p)


def sort_by_lifetime(X: Barcode, C: Contour) -> tuple[list[Bar], np.ndarray]:
    """Bars ordered by ``(lifetime, birth, death)`` and their lifetimes."""
    life = bar_lifetimes(C, X)
    order = sorted(range(len(X)), key=lambda i: (life[i], X[i].birth, X[i].death))
    return [X[i] for i in order], life[order] if len(order) else life


def dist_delete_shortest(X: Barcode, j: int, m: MetricChoice) -> float:
    """Distance from ``X`` to ``X`` minus its ``j`` shortest bars under ``m.contour``.

    Raises:
        ValueError: if ``j`` is outside ``0..rank(X)``.
    """
    if not 0 <= j <= len(X):
        raise ValueError(f"j must lie in 0..{len(X)}, got {j}")
    _, life = sort_by_lifetime(X, m.contour)
    return m.kappa * p_norm(life[:j].tolist(), m.p)


def delete_shortest(X: Barcode, j: int, C: Contour = STANDARD) -> Barcode:
    """``X`` with its ``j`` shortest bars under ``C`` removed."""
    bars, _ = sort_by_lifetime(X, C)
    return Barcode(bars[j:])


T = TypeVar("T")


def pairwise_matrix(items: Sequence[T], fn: Callable[[T, T], float], jobs: int = 1) -> np.ndarray:
    """Symmetric matrix of ``fn`` over the upper triangle, zero diagonal.

    Entries are evaluated on a thread pool when ``jobs > 1``. Results are
    written by index, so the output does not depend on scheduling.
    """
    n = len(items)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    out = np.zeros((n, n))

    def task(ij: tuple[int, int]) -> float:
        return fn(items[ij[0]], items[ij[1]])

    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(task, pairs))
    else:
        values = [task(ij) for ij in pairs]
    for (i, j), v in zip(pairs, values):
        out[i, j] = out[j, i] = v
    return out
