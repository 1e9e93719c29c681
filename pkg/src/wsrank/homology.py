"""Zero-dimensional persistence of images and vertex-filtered graphs by union-find."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .barcode import INF, Bar, Barcode

INTENSITY_MAX = 255


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        parent = self.parent
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root


def h0_superlevel(image: np.ndarray, top: float = INTENSITY_MAX) -> Barcode:
    """Barcode of the super-level set filtration of a grayscale image.

    Pixels enter in decreasing intensity, equal intensities in row-major
    order, and connect to their 4-neighbours. When two components merge the
    younger one (later entry) dies. A component born at intensity ``v`` and
    killed at ``w`` gives the bar ``(top - v, top - w)``. The surviving
    components are capped at ``top - min(image)``. Zero-length bars are
    dropped.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be two-dimensional")
    h, w = img.shape
    flat = img.ravel()
    order = np.argsort(-flat, kind="stable")
    rank = np.empty(flat.size, dtype=np.int64)
    rank[order] = np.arange(flat.size)
    uf = _UnionFind(flat.size)
    parent = uf.parent
    active = bytearray(flat.size)
    # root -> entry rank of the component's oldest pixel
    oldest = rank.tolist()
    values = flat.tolist()
    pairs = []
    for idx in order.tolist():
        active[idx] = 1
        r, c = divmod(idx, w)
        v = values[idx]
        nbrs = []
        if r > 0:
            nbrs.append(idx - w)
        if r < h - 1:
            nbrs.append(idx + w)
        if c > 0:
            nbrs.append(idx - 1)
        if c < w - 1:
            nbrs.append(idx + 1)
        for nb in nbrs:
            if not active[nb]:
                continue
            ra, rb = uf.find(idx), uf.find(nb)
            if ra == rb:
                continue
            if oldest[ra] > oldest[rb]:
                ra, rb = rb, ra
            # ra is the elder; rb dies here
            birth = values[order[oldest[rb]]]
            if birth > v:
                pairs.append((top - birth, top - v))
            parent[rb] = ra
    cap = top - min(values) if values else top
    for root in {uf.find(i) for i in range(flat.size)}:
        birth = top - values[order[oldest[root]]]
        if cap > birth:
            pairs.append((birth, cap))
    return Barcode.from_pairs(pairs)


@dataclass(frozen=True)
class FilteredGraph:
    """Undirected graph with vertex heights; an edge enters at the larger endpoint height."""

    vertex_ids: tuple[str, ...]
    values: tuple[float, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if len(self.vertex_ids) != len(self.values):
            raise ValueError("one value per vertex required")
        if len(set(self.vertex_ids)) != len(self.vertex_ids):
            raise ValueError("duplicate vertex id")
        known = set(self.vertex_ids)
        for u, v in self.edges:
            if u not in known or v not in known:
                raise ValueError(f"edge ({u}, {v}) references an unknown vertex")
        if any(not math.isfinite(x) for x in self.values):
            raise ValueError("vertex values must be finite")

    def edge_values(self) -> list[float]:
        val = dict(zip(self.vertex_ids, self.values))
        return [max(val[u], val[v]) for u, v in self.edges]


def h0_sublevel_graph(g: FilteredGraph) -> Barcode:
    """Sublevel-set persistence of a vertex-filtered graph in degree 0.

    Edges are processed by increasing value (ties in input order). At a
    merge the component with the later birth dies, ties going to the later
    vertex in ``(value, input order)``. Every final component gives an
    infinite bar. Zero-length bars are dropped.
    """
    n = len(g.vertex_ids)
    index = {v: i for i, v in enumerate(g.vertex_ids)}
    age = sorted(range(n), key=lambda i: (g.values[i], i))
    seniority = {v: r for r, v in enumerate(age)}
    uf = _UnionFind(n)
    oldest = list(range(n))
    pairs = []
    evals = g.edge_values()
    for e in sorted(range(len(g.edges)), key=lambda e: (evals[e], e)):
        u, v = g.edges[e]
        ra, rb = uf.find(index[u]), uf.find(index[v])
        if ra == rb:
            continue
        if seniority[oldest[ra]] > seniority[oldest[rb]]:
            ra, rb = rb, ra
        birth = g.values[oldest[rb]]
        if evals[e] > birth:
            pairs.append((birth, evals[e]))
        uf.parent[rb] = ra
    for root in {uf.find(i) for i in range(n)}:
        pairs.append((g.values[oldest[root]], INF))
    return Barcode.from_pairs(pairs)


def read_graph(edges_path: str | Path, vertices_path: str | Path) -> FilteredGraph:
    """Read an edge list ``u,v`` and vertex heights ``id,value`` (headers optional)."""
    ids, values = [], []
    for lineno, row in _csv_rows(vertices_path):
        if lineno == 1 and row[0].strip().lower() == "id":
            continue
        if len(row) != 2:
            raise ValueError(f"{vertices_path}:{lineno}: expected id,value")
        try:
            values.append(float(row[1]))
        except ValueError:
            raise ValueError(f"{vertices_path}:{lineno}: bad value {row[1]!r}") from None
        ids.append(row[0].strip())
    edges = []
    for lineno, row in _csv_rows(edges_path):
        if lineno == 1 and row[0].strip().lower() == "u":
            continue
        if len(row) != 2:
            raise ValueError(f"{edges_path}:{lineno}: expected u,v")
        edges.append((row[0].strip(), row[1].strip()))
    return FilteredGraph(tuple(ids), tuple(values), tuple(edges))


def _csv_rows(path: str | Path):
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if row and any(c.strip() for c in row):
                yield lineno, row
