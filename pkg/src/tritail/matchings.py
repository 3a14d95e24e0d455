"""Matchings, greedy matching colorings, and detectors for the events E1-E4.

E1: some matching of more than ``Lnp`` bad edges exists.
E2: some matching of at most ``Lnp`` pairs has ``t(F) > eps n^2 p^2``.
E3: more than ``Lnp`` bad vertices.
E4: some vertex set of size at most ``ceil(Lnp)`` has degree sum ``>= 7 L n^2 p^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np

from .classify import edge_vertex_masks
from .graph import Graph, GnpParams, Pair, common_neighbor_matrix, pair_index

EXACT = "exact"
HEURISTIC = "heuristic-lower-bound"
EXACT_MAX_N = 10


def _norm(pair) -> Pair:
    u, v = int(pair[0]), int(pair[1])
    if u == v:
        raise ValueError(f"({u}, {v}) is not a pair of distinct vertices")
    return (u, v) if u < v else (v, u)


def is_matching(pairs: Iterable[Pair]) -> bool:
    seen: set[int] = set()
    for u, v in pairs:
        if u in seen or v in seen:
            return False
        seen.update((u, v))
    return True


@dataclass(frozen=True)
class Matching:
    edges: frozenset[Pair]

    def __post_init__(self):
        edges = frozenset(_norm(e) for e in self.edges)
        if not is_matching(edges):
            raise ValueError("pairs share a vertex; not a matching")
        object.__setattr__(self, "edges", edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(sorted(self.edges))


@dataclass(frozen=True)
class MatchingColoring:
    classes: tuple[Matching, ...]
    source: frozenset[Pair]

    @property
    def num_classes(self) -> int:
        return len(self.classes)


def _check_pairs(n: int, pairs: Iterable[Pair]) -> list[Pair]:
    out = []
    for pr in pairs:
        u, v = _norm(pr)
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"pair ({u}, {v}) out of range for n={n}")
        out.append((u, v))
    return out


def t_sum(g: Graph, pairs: Iterable[Pair]) -> int:
    """``t(F)``: total number of common neighbours over the pairs of ``F``."""
    prs = _check_pairs(g.n, pairs)
    if not prs:
        return 0
    c = common_neighbor_matrix(g)
    return int(sum(c[u, v] for u, v in set(prs)))


def greedy_matching_coloring(source: Iterable[Pair], g: Graph | None = None) -> MatchingColoring:
    """Colour pairs so each colour class is a matching.

    Pairs are visited in lexicographic order and each takes the smallest colour
    not used by an earlier pair sharing a vertex with it.
    """
    pairs = sorted(set(_norm(e) for e in source))
    if g is not None:
        _check_pairs(g.n, pairs)
    colors_at: dict[int, set[int]] = {}
    classes: list[list[Pair]] = []
    for u, v in pairs:
        used = colors_at.get(u, set()) | colors_at.get(v, set())
        c = 0
        while c in used:
            c += 1
        if c == len(classes):
            classes.append([])
        classes[c].append((u, v))
        colors_at.setdefault(u, set()).add(c)
        colors_at.setdefault(v, set()).add(c)
    return MatchingColoring(tuple(Matching(frozenset(cl)) for cl in classes), frozenset(pairs))


def max_adjacency_degree(pairs: Iterable[Pair]) -> int:
    """Largest number of other pairs sharing a vertex with one pair."""
    pairs = set(_norm(e) for e in pairs)
    deg: dict[int, int] = {}
    for u, v in pairs:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    return max((deg[u] + deg[v] - 2 for u, v in pairs), default=0)


def b_prime(g: Graph, params: GnpParams) -> frozenset[Pair]:
    """Bad edges whose two endpoints are both good vertices."""
    _, _, bad_edge, bad_vertex = edge_vertex_masks(g, params)
    good = ~bad_vertex
    u, v = np.nonzero(np.triu(bad_edge & good[:, None] & good[None, :], k=1))
    return frozenset((int(a), int(b)) for a, b in zip(u, v))


def max_weight_matching_capped(weights: dict[Pair, float], cap: int) -> tuple[float, list[Pair]]:
    """Exact best total weight over matchings with at most ``cap`` pairs.

    Exhaustive recursion on the lowest free vertex, memoised on the free-vertex
    set; meant for small vertex counts only.
    """
    pos = {e: w for e, w in weights.items() if w > 0}
    if cap <= 0 or not pos:
        return 0.0, []
    verts = sorted({x for e in pos for x in e})
    index = {x: i for i, x in enumerate(verts)}
    adj: list[list[tuple[int, float, Pair]]] = [[] for _ in verts]
    for (u, v), w in pos.items():
        adj[index[u]].append((index[v], w, (u, v)))
        adj[index[v]].append((index[u], w, (u, v)))

    @lru_cache(maxsize=None)
    def best(free: int, k: int) -> tuple[float, tuple[Pair, ...]]:
        if free == 0 or k == 0:
            return 0.0, ()
        i = (free & -free).bit_length() - 1
        rest = free & ~(1 << i)
        top = best(rest, k)
        for j, w, e in adj[i]:
            if rest >> j & 1:
                val, chosen = best(rest & ~(1 << j), k - 1)
                if val + w > top[0]:
                    top = (val + w, chosen + (e,))
        return top

    val, chosen = best((1 << len(verts)) - 1, cap)
    return val, sorted(chosen)


def greedy_matching(pairs: Iterable[Pair], cap: int | None = None) -> list[Pair]:
    """Maximal matching built by scanning ``pairs`` in the given order."""
    out: list[Pair] = []
    used: set[int] = set()
    for u, v in pairs:
        if cap is not None and len(out) >= cap:
            break
        if u not in used and v not in used:
            out.append((u, v))
            used.update((u, v))
    return out


@dataclass(frozen=True)
class EventFlags:
    E1: bool
    E2: bool
    E3: bool
    E4: bool
    certificates: dict = field(default_factory=dict)
    exactness: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {k: getattr(self, k) for k in ("E1", "E2", "E3", "E4")}
        row.update({f"{k}_exactness": v for k, v in self.exactness.items()})
        return row


def e2_threshold(params: GnpParams) -> float:
    return params.epsilon * (params.n * params.p) ** 2


def e4_threshold(params: GnpParams) -> float:
    return params.vertex_factor * params.L * (params.n * params.p) ** 2


def detect_events(g: Graph, params: GnpParams, exact_max_n: int = EXACT_MAX_N) -> EventFlags:
    common, _, bad_edge, bad_vertex = edge_vertex_masks(g, params)
    n, lnp = g.n, params.Lnp
    certs: dict = {}
    exact: dict = {}
    values: dict = {}

    bad_pairs = [(int(a), int(b)) for a, b in zip(*np.nonzero(np.triu(bad_edge, k=1)))]
    if n <= exact_max_n:
        size, m1 = max_weight_matching_capped({e: 1.0 for e in bad_pairs}, n // 2)
        e1, exact["E1"] = size > lnp, EXACT
    else:
        m1 = greedy_matching(bad_pairs)
        size = len(m1)
        e1 = size > lnp
        exact["E1"] = EXACT if (e1 or 2 * size <= lnp) else HEURISTIC
    values["max_bad_matching"] = int(size)
    if e1:
        certs["E1"] = Matching(frozenset(m1))

    cap = math.floor(lnp)
    thr2 = e2_threshold(params)
    u, v = pair_index(n)
    tw = common[u, v]
    keep = tw > 0
    weights = {(int(a), int(b)): float(w) for a, b, w in zip(u[keep], v[keep], tw[keep])}
    if n <= exact_max_n:
        best, m2 = max_weight_matching_capped(weights, cap)
        exact["E2"] = EXACT
    else:
        order = sorted(weights, key=lambda e: (-weights[e], e))
        m2 = greedy_matching(order, cap)
        best = sum(weights[e] for e in m2)
        ceiling = sum(sorted(weights.values(), reverse=True)[: max(cap, 0)])
        exact["E2"] = EXACT if (best > thr2 or ceiling <= thr2) else HEURISTIC
    e2 = best > thr2
    values["max_capped_t"] = float(best)
    if e2:
        certs["E2"] = Matching(frozenset(m2))

    bad_v = np.flatnonzero(bad_vertex)
    e3 = len(bad_v) > lnp
    exact["E3"] = EXACT
    values["bad_vertices"] = int(len(bad_v))
    if e3:
        certs["E3"] = frozenset(int(x) for x in bad_v)

    k = min(math.ceil(lnp), n)
    top = np.argsort(-g.degrees, kind="stable")[:k]
    dsum = int(g.degrees[top].sum())
    e4 = dsum >= e4_threshold(params)
    exact["E4"] = EXACT
    values["top_degree_sum"] = dsum
    if e4:
        certs["E4"] = frozenset(int(x) for x in top)

    return EventFlags(e1, e2, e3, e4, certs, exact, values)


def verify_certificate(g: Graph, params: GnpParams, event: str, witness) -> bool:
    """Independently re-check that ``witness`` proves ``event`` on ``g``."""
    lnp = params.Lnp
    if event in ("E1", "E2"):
        pairs = list(witness)
        if not is_matching(pairs):
            return False
        if event == "E1":
            cls = edge_vertex_masks(g, params)[2]
            return len(pairs) > lnp and all(cls[u, v] for u, v in pairs)
        return len(pairs) <= lnp and t_sum(g, pairs) > e2_threshold(params)
    if event == "E3":
        vs = list(witness)
        return len(vs) > lnp and all(g.degrees[x] >= params.vertex_threshold for x in vs)
    if event == "E4":
        vs = list(witness)
        return len(vs) <= math.ceil(lnp) and sum(int(g.degrees[x]) for x in vs) >= e4_threshold(params)
    raise ValueError(f"unknown event {event!r}")
