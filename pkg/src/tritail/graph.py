"""Graph storage, G(n,p) sampling and triangle counting primitives.

Adjacency rows are bit-packed into little-endian ``uint64`` words: vertex ``j``
lives in bit ``j % 64`` of word ``j // 64``. Triangle counts on the fast path
are row-AND + popcount over the upper triangle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from .rng import SeededRng

ENUMERATION_MAX_N = 7

Pair = tuple[int, int]


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def n_triples(n: int) -> int:
    return math.comb(n, 3)


def _words(n: int) -> int:
    return max(1, (n + 63) // 64)


def pack_rows(adj: np.ndarray) -> np.ndarray:
    """Pack boolean adjacency ``(..., n, n)`` into ``(..., n, W)`` uint64 rows."""
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[-1]
    w = _words(n)
    packed = np.packbits(adj, axis=-1, bitorder="little")
    pad = w * 8 - packed.shape[-1]
    if pad:
        widths = [(0, 0)] * (packed.ndim - 1) + [(0, pad)]
        packed = np.pad(packed, widths)
    return np.ascontiguousarray(packed).view("<u8")


def unpack_rows(rows: np.ndarray, n: int) -> np.ndarray:
    bytes_ = np.ascontiguousarray(rows).view(np.uint8)
    return np.unpackbits(bytes_, axis=-1, bitorder="little", count=n).astype(bool)


@lru_cache(maxsize=None)
def _upper_masks(n: int) -> np.ndarray:
    """Row ``v`` has the bits of all vertices strictly greater than ``v``."""
    return pack_rows(np.triu(np.ones((n, n), dtype=bool), k=1))


@lru_cache(maxsize=None)
def pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lexicographic ``(u, v)`` arrays, ``u < v``; position k is pair k."""
    u, v = np.triu_indices(n, k=1)
    return u.astype(np.intp), v.astype(np.intp)


@lru_cache(maxsize=None)
def pair_lookup(n: int) -> np.ndarray:
    """``(n, n)`` matrix mapping a pair to its lexicographic index (-1 on diagonal)."""
    idx = -np.ones((n, n), dtype=np.intp)
    u, v = pair_index(n)
    k = np.arange(len(u))
    idx[u, v] = k
    idx[v, u] = k
    return idx


@lru_cache(maxsize=None)
def triple_index(n: int) -> np.ndarray:
    """All triplets ``u < v < w`` as an ``(C(n,3), 3)`` array, lexicographic."""
    if n < 3:
        return np.zeros((0, 3), dtype=np.intp)
    return np.array(list(combinations(range(n), 3)), dtype=np.intp)


@lru_cache(maxsize=None)
def triple_pair_index(n: int) -> np.ndarray:
    """For each triplet, the pair indices of its three sides (uv, vw, uw)."""
    t = triple_index(n)
    look = pair_lookup(n)
    if len(t) == 0:
        return np.zeros((0, 3), dtype=np.intp)
    return np.stack([look[t[:, 0], t[:, 1]], look[t[:, 1], t[:, 2]], look[t[:, 0], t[:, 2]]], axis=1)


class Graph:
    """Immutable undirected simple graph on vertices ``0..n-1``."""

    def __init__(self, n: int, rows: np.ndarray):
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        rows = np.array(rows, dtype="<u8", copy=True).reshape(n, _words(n))
        dense = unpack_rows(rows, n)
        if dense.diagonal().any():
            raise ValueError("self-loops are not allowed")
        if not np.array_equal(dense, dense.T):
            raise ValueError("adjacency must be symmetric")
        rows.flags.writeable = False
        self.n = n
        self.rows = rows

    @classmethod
    def from_adjacency(cls, adj) -> Graph:
        adj = np.asarray(adj, dtype=bool)
        return cls(adj.shape[0], pack_rows(adj))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Pair]) -> Graph:
        adj = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            adj[u, v] = adj[v, u] = True
        return cls(n, pack_rows(adj))

    @classmethod
    def from_edge_bits(cls, n: int, bits) -> Graph:
        """Build from a length ``n(n-1)/2`` indicator vector in pair order."""
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (n_pairs(n),):
            raise ValueError(f"expected {n_pairs(n)} edge bits, got shape {bits.shape}")
        adj = np.zeros((n, n), dtype=bool)
        u, v = pair_index(n)
        adj[u, v] = bits
        adj[v, u] = bits
        return cls(n, pack_rows(adj))

    @classmethod
    def empty(cls, n: int) -> Graph:
        return cls(n, np.zeros((n, _words(n)), dtype="<u8"))

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls.from_adjacency(~np.eye(n, dtype=bool))

    @classmethod
    def cycle(cls, n: int) -> Graph:
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = unpack_rows(self.rows, self.n)
        a.flags.writeable = False
        return a

    @cached_property
    def edge_bits(self) -> np.ndarray:
        u, v = pair_index(self.n)
        return self.adjacency[u, v]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bitwise_count(self.rows).sum(axis=1).astype(np.int64)

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def edges(self) -> list[Pair]:
        u, v = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(a), int(b)) for a, b in zip(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.rows[u, v // 64] >> np.uint64(v % 64) & np.uint64(1))

    def neighbors(self, u: int) -> list[int]:
        return [int(x) for x in np.flatnonzero(self.adjacency[u])]

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and np.array_equal(self.rows, other.rows)

    def __hash__(self) -> int:
        return hash((self.n, self.rows.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"

    def to_edgelist(self) -> str:
        lines = [f"n={self.n}"] + [f"{u} {v}" for u, v in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> Graph:
        n = None
        edges = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if n is None:
                if not line.startswith("n="):
                    raise ValueError("edge list must start with a 'n=<int>' header")
                n = int(line[2:])
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"malformed edge line: {raw!r}")
            edges.append((int(parts[0]), int(parts[1])))
        if n is None:
            raise ValueError("empty edge list")
        return cls.from_edges(n, edges)


def read_edgelist(path: str | Path) -> Graph:
    return Graph.from_edgelist(Path(path).read_text())


def write_edgelist(g: Graph, path: str | Path) -> None:
    Path(path).write_text(g.to_edgelist())


@dataclass(frozen=True)
class GnpParams:
    """``(n, p, epsilon)`` with the derived quantities used by the bounds.

    All logarithms are natural: ``L = log(1/p)`` and ``ell = 1/L``.
    """

    n: int
    p: float
    epsilon: float
    vertex_factor: float = 7.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie strictly inside (0, 1), got {self.p}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.vertex_factor > 0:
            raise ValueError("vertex_factor must be positive")

    @property
    def L(self) -> float:
        return math.log(1.0 / self.p)

    @property
    def ell(self) -> float:
        return 1.0 / self.L

    @property
    def edge_threshold(self) -> float:
        return self.epsilon * self.ell * self.n * self.p

    @property
    def vertex_threshold(self) -> float:
        return self.vertex_factor * self.n * self.p

    @property
    def Lnp(self) -> float:
        return self.L * self.n * self.p

    @property
    def mean_triangles(self) -> float:
        return n_triples(self.n) * self.p**3


def _n_p(params) -> tuple[int, float]:
    if isinstance(params, GnpParams):
        return params.n, params.p
    n, p = params
    if n < 1 or not 0.0 <= p <= 1.0:
        raise ValueError(f"invalid sampler parameters n={n}, p={p}")
    return int(n), float(p)


def sample_gnp(params: GnpParams | tuple[int, float], rng: SeededRng) -> Graph:
    """Draw one G(n,p) graph; ``(n, p)`` tuples may use ``p`` in {0, 1}."""
    n, p = _n_p(params)
    bits = rng.generator().random(n_pairs(n)) < p
    return Graph.from_edge_bits(n, bits)


def sample_edge_bits(n: int, p: float, size: int, gen: np.random.Generator) -> np.ndarray:
    """``size`` independent G(n,p) draws as a ``(size, n(n-1)/2)`` bool array."""
    return gen.random((size, n_pairs(n))) < p


def edge_bits_to_adjacency(bits: np.ndarray, n: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=bool)
    adj = np.zeros(bits.shape[:-1] + (n, n), dtype=bool)
    u, v = pair_index(n)
    adj[..., u, v] = bits
    adj[..., v, u] = bits
    return adj


def count_triangles(g: Graph) -> int:
    """Triangle count via row-AND + popcount over upper-triangle edges."""
    if g.n < 3:
        return 0
    u, v = np.nonzero(np.triu(g.adjacency, k=1))
    if len(u) == 0:
        return 0
    common = g.rows[u] & g.rows[v] & _upper_masks(g.n)[v]
    return int(np.bitwise_count(common).sum())


def count_triangles_naive(g: Graph) -> int:
    """Reference count: test every triplet ``u < v < w`` explicitly."""
    t = triple_index(g.n)
    if len(t) == 0:
        return 0
    a = g.adjacency
    return int(np.count_nonzero(a[t[:, 0], t[:, 1]] & a[t[:, 1], t[:, 2]] & a[t[:, 0], t[:, 2]]))


SCAN_MAX_N = 8


def count_triangles_batch(bits: np.ndarray, n: int, method: str = "auto", max_elems: int = 1 << 22) -> np.ndarray:
    """Triangle counts for a ``(B, n(n-1)/2)`` batch of edge indicator rows.

    ``method="popcount"`` visits only present edges: each contributes the
    popcount of its two endpoint rows ANDed with the mask of vertices above the
    larger endpoint. ``"scan"`` tests every triplet, which is cheaper for tiny
    ``n``; ``"auto"`` picks scan for ``n <= SCAN_MAX_N``.
    """
    bits = np.asarray(bits, dtype=bool)
    if method == "auto":
        method = "scan" if n <= SCAN_MAX_N else "popcount"
    if method == "scan":
        return count_triangles_bits_naive(bits, n)
    if method != "popcount":
        raise ValueError(f"unknown counting method {method!r}")
    b = bits.shape[0]
    out = np.zeros(b, dtype=np.int64)
    if n < 3 or b == 0:
        return out
    u, v = pair_index(n)
    gt = _upper_masks(n)
    step = max(1, max_elems // (n * n))
    for lo in range(0, b, step):
        chunk = bits[lo : lo + step]
        rows = pack_rows(edge_bits_to_adjacency(chunk, n))
        g_idx, k = np.nonzero(chunk)
        common = rows[g_idx, u[k]] & rows[g_idx, v[k]] & gt[v[k]]
        per_edge = np.bitwise_count(common).sum(axis=1, dtype=np.int64)
        out[lo : lo + step] = np.bincount(g_idx, weights=per_edge, minlength=len(chunk)).astype(np.int64)
    return out


def count_triangles_bits_naive(bits: np.ndarray, n: int) -> np.ndarray:
    """Triplet-scan triangle counts for a batch of edge indicator rows."""
    bits = np.asarray(bits, dtype=bool)
    tp = triple_pair_index(n)
    if len(tp) == 0:
        return np.zeros(bits.shape[0], dtype=np.int64)
    return (bits[:, tp[:, 0]] & bits[:, tp[:, 1]] & bits[:, tp[:, 2]]).sum(axis=1, dtype=np.int64)


def common_neighbor_matrix(g: Graph) -> np.ndarray:
    """``(n, n)`` matrix of ``t_uv`` = number of common neighbours; zero diagonal."""
    c = np.bitwise_count(g.rows[:, None, :] & g.rows[None, :, :]).sum(axis=2, dtype=np.int64)
    np.fill_diagonal(c, 0)
    return c


def edge_triangle_counts(g: Graph, all_pairs: bool = False) -> dict[Pair, int]:
    """Map each edge ``(u, v)``, ``u < v``, to ``t_uv``; every pair if ``all_pairs``."""
    c = common_neighbor_matrix(g)
    u, v = pair_index(g.n)
    if not all_pairs:
        keep = g.adjacency[u, v]
        u, v = u[keep], v[keep]
    return {(int(a), int(b)): int(c[a, b]) for a, b in zip(u, v)}


def degree_sum(g: Graph, vertices: Iterable[int]) -> int:
    vs = list(vertices)
    if len(set(vs)) != len(vs):
        raise ValueError("vertex set contains duplicates")
    for x in vs:
        if not 0 <= x < g.n:
            raise ValueError(f"vertex {x} out of range")
    return int(g.degrees[vs].sum()) if vs else 0


def list_triangles(g: Graph) -> np.ndarray:
    """All triangles as rows ``(u, v, w)`` with ``u < v < w``."""
    a = g.adjacency
    u, v = np.nonzero(np.triu(a, k=1))
    if len(u) == 0:
        return np.zeros((0, 3), dtype=np.intp)
    above = np.triu(np.ones((g.n, g.n), dtype=bool), k=1)
    hit = a[u] & a[v] & above[v]
    e, w = np.nonzero(hit)
    return np.stack([u[e], v[e], w], axis=1).astype(np.intp)


def graph_weight(edge_count, n: int, p: float):
    """Probability of one labeled graph with ``edge_count`` edges under G(n,p)."""
    big_n = n_pairs(n)
    return p**edge_count * (1.0 - p) ** (big_n - edge_count)


def _check_enum(n: int) -> None:
    if n < 1:
        raise ValueError("n must be positive")
    if n > ENUMERATION_MAX_N:
        raise ValueError(f"exhaustive enumeration is capped at n <= {ENUMERATION_MAX_N}, got n={n}")


def enumerate_edge_bits(n: int) -> np.ndarray:
    """Every labeled graph on ``n`` vertices as rows of edge indicators.

    Row ``i`` is the binary expansion of ``i`` over pair order (pair k = bit k).
    """
    _check_enum(n)
    big_n = n_pairs(n)
    codes = np.arange(1 << big_n, dtype=np.uint32)
    return ((codes[:, None] >> np.arange(big_n, dtype=np.uint32)) & 1).astype(bool)


def enumerate_graphs(n: int) -> Iterator[tuple[Graph, Callable[[float], float]]]:
    """Yield every labeled graph on ``n`` vertices with its G(n,p) weight function."""
    _check_enum(n)
    big_n = n_pairs(n)
    for code in range(1 << big_n):
        bits = np.array([(code >> k) & 1 for k in range(big_n)], dtype=bool)
        e = int(bits.sum())
        yield Graph.from_edge_bits(n, bits), (lambda p, e=e: graph_weight(e, n, p))
