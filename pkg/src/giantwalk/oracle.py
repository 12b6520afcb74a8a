"""Ground truth for the largest-component law, independent of the walk.

``sample_graph`` draws every vertex pair of G(n, p) and merges components
with a union-find; ``enumerate_pmf`` sums over all labeled graphs on at most
eight vertices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numba
import numpy as np

from .errors import DomainError, SizeError
from .sampler import RngStream

MAX_GRAPH_N = 10_000
MAX_ENUM_N = 8

# above this many vertex pairs the edge coins are drawn one row at a time
_PAIRS_AT_ONCE = 1 << 22


class UnionFind:
    """Disjoint sets over 0..n-1 with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1
        return True

    def component_sizes(self) -> list[int]:
        return sorted((self.size[v] for v in range(len(self.parent)) if self.parent[v] == v),
                      reverse=True)


def _pair_index(n: int):
    return np.triu_indices(n, k=1)


def sample_graph(n: int, p: float, stream: RngStream, pairs=None) -> tuple[int, int, int]:
    """Sample G(n, p) edge by edge and return (L1, L2, component count).

    ``pairs`` may carry a cached ``np.triu_indices(n, 1)`` when many graphs of
    the same order are drawn.
    """
    if n > MAX_GRAPH_N:
        raise SizeError(f"sample_graph is limited to n <= {MAX_GRAPH_N}, got {n}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    uf = UnionFind(n)
    gen = stream.generator
    n_pairs = n * (n - 1) // 2
    if n_pairs <= _PAIRS_AT_ONCE:
        rows, cols = pairs if pairs is not None else _pair_index(n)
        hit = np.flatnonzero(gen.random(n_pairs) < p)
        for i, j in zip(rows[hit].tolist(), cols[hit].tolist()):
            uf.union(i, j)
    else:
        for i in range(n - 1):
            for j in (np.flatnonzero(gen.random(n - 1 - i) < p) + i + 1).tolist():
                uf.union(i, j)
    sizes = uf.component_sizes()
    return sizes[0], (sizes[1] if len(sizes) > 1 else 0), uf.count


@dataclass
class ExactPmf:
    n: int
    p: float
    mass: dict[int, float]

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "p": self.p, "pmf": {str(k): v for k, v in sorted(self.mass.items())}}
        )

    @classmethod
    def from_json(cls, text: str) -> "ExactPmf":
        raw = json.loads(text)
        return cls(n=int(raw["n"]), p=float(raw["p"]), mass={int(k): float(v) for k, v in raw["pmf"].items()})


@numba.njit(cache=True)
def _largest_component_counts(n, ends_a, ends_b):
    # counts[e, k] = number of graphs with e edges whose largest component has k vertices
    n_edges = ends_a.shape[0]
    counts = np.zeros((n_edges + 1, n + 1), dtype=np.int64)
    adj = np.zeros(n, dtype=np.int64)
    for mask in range(1 << n_edges):
        for v in range(n):
            adj[v] = 0
        n_set = 0
        for e in range(n_edges):
            if (mask >> e) & 1:
                adj[ends_a[e]] |= 1 << ends_b[e]
                adj[ends_b[e]] |= 1 << ends_a[e]
                n_set += 1
        unseen = (1 << n) - 1
        largest = 0
        while unseen:
            low = unseen & -unseen
            comp = low
            frontier = low
            while frontier:
                v_bit = frontier & -frontier
                frontier ^= v_bit
                v = 0
                while (v_bit >> v) != 1:
                    v += 1
                fresh = adj[v] & ~comp
                comp |= fresh
                frontier |= fresh
            unseen &= ~comp
            size = 0
            c = comp
            while c:
                c &= c - 1
                size += 1
            if size > largest:
                largest = size
        counts[n_set, largest] += 1
    return counts


def largest_component_counts(n: int) -> np.ndarray:
    """Integer table: graphs on n labeled vertices by (edge count, largest component)."""
    if n > MAX_ENUM_N:
        raise SizeError(f"enumeration is limited to n <= {MAX_ENUM_N}, got {n}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    pairs = list(combinations(range(n), 2))
    ends_a = np.array([a for a, _ in pairs], dtype=np.int64)
    ends_b = np.array([b for _, b in pairs], dtype=np.int64)
    return _largest_component_counts(n, ends_a, ends_b)


def enumerate_pmf(n: int, p: float) -> ExactPmf:
    """Exact law of the largest component size of G(n, p), n <= 8."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    counts = largest_component_counts(n)
    n_edges = counts.shape[0] - 1
    e = np.arange(n_edges + 1)
    weights = np.array([p**k * (1.0 - p) ** (n_edges - k) for k in e])
    mass = {}
    for k in range(1, n + 1):
        m = float(np.dot(counts[:, k], weights))
        if m > 0.0:
            mass[k] = m
    return ExactPmf(n=n, p=float(p), mass=mass)
