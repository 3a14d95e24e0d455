"""Good/bad classification of edges and vertices and the five-way triangle split.

An edge is good when fewer than ``epsilon * ell * n * p`` triangles contain it;
a vertex is good when its degree is below ``vertex_factor * n * p`` (7 by
default). Both comparisons are strict.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph, GnpParams, Pair, common_neighbor_matrix, list_triangles


@dataclass(frozen=True)
class Classification:
    good_edges: frozenset[Pair]
    bad_edges: frozenset[Pair]
    good_vertices: frozenset[int]
    bad_vertices: frozenset[int]


def edge_vertex_masks(g: Graph, params: GnpParams):
    if g.n != params.n:
        raise ValueError(f"graph has n={g.n} but params have n={params.n}")
    common = common_neighbor_matrix(g)
    good_edge = g.adjacency & (common < params.edge_threshold)
    bad_edge = g.adjacency & ~good_edge
    bad_vertex = g.degrees >= params.vertex_threshold
    return common, good_edge, bad_edge, bad_vertex


def _pairs(mask: np.ndarray) -> frozenset[Pair]:
    u, v = np.nonzero(np.triu(mask, k=1))
    return frozenset((int(a), int(b)) for a, b in zip(u, v))


def classify(g: Graph, params: GnpParams) -> Classification:
    _, good_edge, bad_edge, bad_vertex = edge_vertex_masks(g, params)
    return Classification(
        good_edges=_pairs(good_edge),
        bad_edges=_pairs(bad_edge),
        good_vertices=frozenset(int(x) for x in np.flatnonzero(~bad_vertex)),
        bad_vertices=frozenset(int(x) for x in np.flatnonzero(bad_vertex)),
    )


@dataclass(frozen=True)
class Decomposition:
    """Triangle counts of one realization, split by edge and vertex goodness.

    ``T_good_vertices`` counts triangles whose three vertices are all good, so
    ``T == T_good_vertices + T1 + T2 + T3`` exactly, while the covering bound
    ``T <= T_prime + T0 + T1 + T2 + T3`` may be strict.
    """

    T: int
    T_prime: int
    T0: int
    T1: int
    T2: int
    T3: int
    T_good_vertices: int
    n: int
    p: float
    epsilon: float
    edge_threshold: float
    vertex_threshold: float

    @property
    def covering_sum(self) -> int:
        return self.T_prime + self.T0 + self.T1 + self.T2 + self.T3

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def triangle_labels(g: Graph, params: GnpParams):
    """Per-triangle ``(triangles, n_bad_edges, n_bad_vertices)`` arrays."""
    _, _, bad_edge, bad_vertex = edge_vertex_masks(g, params)
    tri = list_triangles(g)
    u, v, w = tri[:, 0], tri[:, 1], tri[:, 2]
    n_bad_e = bad_edge[u, v].astype(int) + bad_edge[v, w] + bad_edge[u, w]
    n_bad_v = bad_vertex[u].astype(int) + bad_vertex[v] + bad_vertex[w]
    return tri, n_bad_e, n_bad_v


def decompose(g: Graph, params: GnpParams) -> Decomposition:
    tri, n_bad_e, n_bad_v = triangle_labels(g, params)
    all_good_v = n_bad_v == 0
    return Decomposition(
        T=len(tri),
        T_prime=int(np.count_nonzero(n_bad_e == 0)),
        T0=int(np.count_nonzero((n_bad_e > 0) & all_good_v)),
        T1=int(np.count_nonzero(n_bad_v == 1)),
        T2=int(np.count_nonzero(n_bad_v == 2)),
        T3=int(np.count_nonzero(n_bad_v == 3)),
        T_good_vertices=int(np.count_nonzero(all_good_v)),
        n=params.n,
        p=params.p,
        epsilon=params.epsilon,
        edge_threshold=params.edge_threshold,
        vertex_threshold=params.vertex_threshold,
    )
