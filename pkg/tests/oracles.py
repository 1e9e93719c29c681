"""Independent oracles for tests.

Barcodes here come from rank invariants computed by F2 linear algebra at
critical values, followed by inclusion-exclusion. No column reduction,
permutation or pairing convention is involved.
"""

from __future__ import annotations

import itertools
import math

from wsrank.barcode import INF, Bar, Barcode, p_norm
from wsrank.reduction import f2_rank


def barcode_from_rank(rank_fn, critical: list[float]) -> Barcode:
    """Recover bars ``[a, b)`` from ``r(s, t) = #{bars with a <= s and b > t}``.

    ``critical`` must contain every endpoint; ``inf`` deaths are detected
    with a probe beyond the largest finite value.
    """
    c = sorted(set(critical))
    big = (c[-1] + 1.0) if c else 1.0

    def r(i, t):
        return 0 if i < 0 else rank_fn(c[i], t)

    bars = []
    for i in range(len(c)):
        for j in range(i + 1, len(c)):
            m = r(i, c[j - 1]) - r(i - 1, c[j - 1]) - r(i, c[j]) + r(i - 1, c[j])
            assert m >= 0, "rank function is not a barcode"
            bars += [Bar(c[i], c[j])] * m
        m = r(i, big) - r(i - 1, big)
        assert m >= 0
        bars += [Bar(c[i], INF)] * m
    return Barcode(bars)


def coker_of_presentation(M) -> Barcode:
    """Cokernel of the free presentation encoded by a presentation matrix."""
    def rank_fn(s, t):
        gens = [1 << i for i, a in enumerate(M.row_degrees) if a <= s]
        rels = [col for col, d in zip(M.columns, M.col_degrees) if d <= t]
        return f2_rank(gens + rels) - f2_rank(rels)

    crit = [d for d in list(M.row_degrees) + list(M.col_degrees) if math.isfinite(d)]
    return barcode_from_rank(rank_fn, crit)


def _mask(bars, t):
    return sum(1 << j for j, b in enumerate(bars) if b.alive(t))


def coker_of_morphism(z_bars, x_bars, supports) -> Barcode:
    """Cokernel ``X_t / im f_t`` of a morphism of barcodes, degree by degree."""
    vecs = [sum(1 << j for j in s) for s in supports]

    def rank_fn(s, t):
        xt = _mask(x_bars, t)
        img = [v & xt for v, z in zip(vecs, z_bars) if z.alive(t)]
        carried = [1 << j for j, x in enumerate(x_bars) if x.birth <= s and x.death > t]
        return f2_rank(carried + img) - f2_rank(img)

    crit = [v for b in list(z_bars) + list(x_bars) for v in (b.birth, b.death) if math.isfinite(v)]
    return barcode_from_rank(rank_fn, crit)


def _kernel_basis(columns: list[int], n: int) -> list[int]:
    """Basis of ``{c : sum c_i columns[i] = 0}`` as bit sets over column indices."""
    pivots: dict[int, tuple[int, int]] = {}
    basis = []
    for i in range(n):
        v, combo = columns[i], 1 << i
        while v:
            h = v.bit_length() - 1
            if h not in pivots:
                pivots[h] = (v, combo)
                break
            pv, pc = pivots[h]
            v ^= pv
            combo ^= pc
        if not v:
            basis.append(combo)
    return basis


def kernel_of_morphism(z_bars, x_bars, supports) -> Barcode:
    """Kernel of a morphism of barcodes, pushing kernel elements forward in degree."""
    vecs = [sum(1 << j for j in s) for s in supports]

    def rank_fn(s, t):
        xs, zs, zt = _mask(x_bars, s), _mask(z_bars, s), _mask(z_bars, t)
        cols = [vecs[i] & xs if (zs >> i) & 1 else 0 for i in range(len(z_bars))]
        basis = [b for b in _kernel_basis(cols, len(z_bars)) if b & ~zs == 0]
        # drop the trivial kernel vectors of generators not alive at s
        return f2_rank([b & zt for b in basis])

    crit = [v for b in list(z_bars) + list(x_bars) for v in (b.birth, b.death) if math.isfinite(v)]
    return barcode_from_rank(rank_fn, crit)


def epi_from_mono(mono):
    """Reflect a monomorphism ``Z -> X`` into an epimorphism ``X* ->> Z*``."""
    T = max(b.death for b in mono.z_bars + mono.x_bars)
    z = [Bar(T - b.death, T - b.birth) for b in mono.x_bars]
    x = [Bar(T - b.death, T - b.birth) for b in mono.z_bars]
    coeffs = [frozenset(j for j, s in enumerate(mono.supports) if i in s) for i in range(len(mono.x_bars))]
    return z, x, coeffs


def matching_bruteforce_pp(D: Barcode, E: Barcode, p: float) -> float:
    """``W^p_p`` over every partial matching, written without shared helpers."""
    A, B = list(D), list(E)

    def pt(x, y):
        if x.is_infinite or y.is_infinite:
            return abs(x.birth - y.birth) if x.is_infinite and y.is_infinite else INF
        return p_norm([abs(x.birth - y.birth), abs(x.death - y.death)], p)

    def dg(x):
        return INF if x.is_infinite else p_norm([x.length / 2, x.length / 2], p)

    best = INF
    for k in range(min(len(A), len(B)) + 1):
        for ia in itertools.combinations(range(len(A)), k):
            for ib in itertools.permutations(range(len(B)), k):
                terms = [pt(A[i], B[j]) for i, j in zip(ia, ib)]
                terms += [dg(A[i]) for i in range(len(A)) if i not in ia]
                terms += [dg(B[j]) for j in range(len(B)) if j not in ib]
                best = min(best, p_norm(terms, p))
    return best
