"""Localized surrogate family for the good-edge triangle count, and its checks.

For a center triplet ``uvw`` every triplet ``xyz`` falls in one of three
groups: vertex-disjoint from the center (surrogate = ``X_xyz``), sharing exactly
one vertex (surrogate built from edges away from the center), or sharing two or
more vertices (surrogate = 0). None of the surrogates may read the three center
edges, which is what makes them independent of the center's triangle indicator.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .graph import (
    Graph,
    GnpParams,
    common_neighbor_matrix,
    edge_bits_to_adjacency,
    enumerate_edge_bits,
    graph_weight,
    pair_lookup,
    triple_index,
)

DISJOINT, ONE_SHARED, TWO_SHARED = 0, 1, 2
INDEPENDENCE_MAX_N = 5


@dataclass(frozen=True)
class LocalizedFamily:
    center: tuple[int, int, int]
    triplets: np.ndarray
    region: np.ndarray
    x_vals: np.ndarray
    x_prime_vals: np.ndarray
    x_loc_vals: np.ndarray
    a_const: float

    def value(self, triplet) -> int:
        idx = _triplet_position(len(self.x_vals), triplet, self.triplets)
        return int(self.x_loc_vals[idx])


def _triplet_position(_m, triplet, triplets) -> int:
    key = tuple(sorted(int(x) for x in triplet))
    hits = np.flatnonzero((triplets == np.array(key)).all(axis=1))
    if len(hits) != 1:
        raise KeyError(f"{triplet} is not a triplet of this graph")
    return int(hits[0])


def _center_index(n: int, center) -> int:
    c = tuple(sorted(int(x) for x in center))
    if len(set(c)) != 3 or not all(0 <= x < n for x in c):
        raise ValueError(f"center must be three distinct vertices in range(n), got {center}")
    return _triplet_position(None, c, triple_index(n))


@dataclass(frozen=True)
class _Plan:
    centers: np.ndarray
    region: np.ndarray
    kp_rows: np.ndarray
    kp_cols: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    v: np.ndarray
    w: np.ndarray


def _build_plan(n: int, centers: np.ndarray) -> _Plan:
    trip = triple_index(n)
    mem = np.zeros((len(trip), n), dtype=np.int64)
    mem[np.repeat(np.arange(len(trip)), 3), trip.ravel()] = 1
    overlap = mem[centers] @ mem.T
    region = np.minimum(overlap, 2).astype(np.int8)
    rows, cols = np.nonzero(overlap == 1)
    ctrip = trip[centers[rows]]
    jtrip = trip[cols]
    j_in_c = (jtrip[:, :, None] == ctrip[:, None, :]).any(axis=2)
    c_in_j = (ctrip[:, :, None] == jtrip[:, None, :]).any(axis=2)
    jo = np.argsort(~j_in_c, axis=1, kind="stable")
    co = np.argsort(~c_in_j, axis=1, kind="stable")
    jt = np.take_along_axis(jtrip, jo, axis=1)
    ct = np.take_along_axis(ctrip, co, axis=1)
    return _Plan(centers, region, rows, cols, jt[:, 0], jt[:, 1], jt[:, 2], ct[:, 1], ct[:, 2])


@lru_cache(maxsize=32)
def _full_plan(n: int) -> _Plan:
    return _build_plan(n, np.arange(len(triple_index(n))))


def _plan_for(n: int, centers: np.ndarray | None) -> _Plan:
    if centers is None:
        return _full_plan(n)
    return _build_plan(n, np.asarray(centers, dtype=np.intp))


def _family_arrays(adj: np.ndarray, common: np.ndarray, thr: float, plan: _Plan):
    """``(Y, X, X_loc)`` with ``X_loc`` of shape ``(len(centers), M)``."""
    n = adj.shape[0]
    trip = triple_index(n)
    a = adj.astype(bool)
    good = a & (common < thr)
    p0, p1, p2 = trip[:, 0], trip[:, 1], trip[:, 2]
    y = a[p0, p1] & a[p1, p2] & a[p0, p2]
    x = good[p0, p1] & good[p1, p2] & good[p0, p2]

    loc = np.where(plan.region == DISJOINT, x[None, :], False)
    X, Yv, Zv, V, W = plan.x, plan.y, plan.z, plan.v, plan.w
    ai = a.astype(np.int64)

    def e_flag(s):
        t_s = ai[X, s] * (common[X, s] - ai[X, V] * ai[s, V] - ai[X, W] * ai[s, W])
        n_s = ai[s, V] + ai[s, W]
        return (n_s + t_s) < thr

    val = y[plan.kp_cols] & good[Yv, Zv] & e_flag(Yv) & e_flag(Zv)
    loc[plan.kp_rows, plan.kp_cols] = val
    return y, x, loc


def build_localized(g: Graph, params: GnpParams, center) -> LocalizedFamily:
    if g.n != params.n:
        raise ValueError(f"graph has n={g.n} but params have n={params.n}")
    ci = _center_index(g.n, center)
    plan = _plan_for(g.n, np.array([ci]))
    y, x, loc = _family_arrays(g.adjacency, common_neighbor_matrix(g), params.edge_threshold, plan)
    return LocalizedFamily(
        center=tuple(int(v) for v in triple_index(g.n)[ci]),
        triplets=triple_index(g.n),
        region=plan.region[0].copy(),
        x_vals=x.astype(np.int8),
        x_prime_vals=y.astype(np.int8),
        x_loc_vals=loc[0].astype(np.int8),
        a_const=3.0 * params.edge_threshold,
    )


@dataclass
class ConditionReport:
    n: int
    p: float
    epsilon: float
    a_const: float
    centers_checked: int = 0
    active_centers: int = 0
    a_holds: bool = True
    c_holds: bool = True
    c_sum_holds: bool = True
    c_intermediate_holds: bool = True
    d_holds: bool = True
    two_shared_holds: bool = True
    max_two_shared: int = 0
    min_d_slack: float = math.inf
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.a_holds and self.c_holds and self.c_sum_holds and self.d_holds
                and self.two_shared_holds and self.c_intermediate_holds)

    def merge(self, other: ConditionReport) -> None:
        self.centers_checked += other.centers_checked
        self.active_centers += other.active_centers
        for name in ("a_holds", "c_holds", "c_sum_holds", "c_intermediate_holds", "d_holds", "two_shared_holds"):
            setattr(self, name, getattr(self, name) and getattr(other, name))
        self.max_two_shared = max(self.max_two_shared, other.max_two_shared)
        self.min_d_slack = min(self.min_d_slack, other.min_d_slack)
        self.violations.extend(other.violations)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        if math.isinf(d["min_d_slack"]):
            d["min_d_slack"] = None
        return d


def check_conditions(g: Graph, params: GnpParams, center=None) -> ConditionReport:
    """Check conditions (a), (c) and (d) on one realization.

    ``center=None`` checks every triplet as a center. Condition (b) is
    distributional; see :func:`check_independence`.
    """
    if g.n != params.n:
        raise ValueError(f"graph has n={g.n} but params have n={params.n}")
    a_const = 3.0 * params.edge_threshold
    rep = ConditionReport(g.n, params.p, params.epsilon, a_const)
    trip = triple_index(g.n)
    if len(trip) == 0:
        return rep
    centers = None if center is None else np.array([_center_index(g.n, center)])
    plan = _plan_for(g.n, centers)
    common = common_neighbor_matrix(g)
    adj = g.adjacency
    y, x, loc = _family_arrays(adj, common, params.edge_threshold, plan)
    cidx = plan.centers
    rep.centers_checked = len(cidx)

    rep.a_holds = bool(np.all(x <= y))
    if not rep.a_holds:
        rep.violations.append({"condition": "a"})

    pointwise = loc <= x[None, :]
    rep.c_holds = bool(pointwise.all())
    sums = loc.sum(axis=1)
    total = int(x.sum())
    rep.c_sum_holds = bool(np.all(sums <= total))
    # triangles through the edge xy never exceed T_y + N_y
    kx, ky = plan.x, plan.y
    ai = adj.astype(np.int64)
    t_y = ai[kx, ky] * (common[kx, ky] - ai[kx, plan.v] * ai[ky, plan.v] - ai[kx, plan.w] * ai[ky, plan.w])
    n_y = ai[ky, plan.v] + ai[ky, plan.w]
    through_xy = ai[kx, ky] * common[kx, ky]
    rep.c_intermediate_holds = bool(np.all(through_xy <= t_y + n_y))
    for c in np.flatnonzero(~pointwise.all(axis=1)):
        rep.violations.append({"condition": "c", "center": trip[cidx[c]].tolist()})

    active = np.flatnonzero(x[cidx])
    rep.active_centers = len(active)
    if len(active):
        slack = a_const + sums[active] - total
        rep.min_d_slack = float(slack.min())
        rep.d_holds = bool(np.all(slack >= 0))
        for c in active[slack < 0]:
            rep.violations.append({"condition": "d", "center": trip[cidx[c]].tolist()})
        two = ((plan.region[active] == TWO_SHARED) & y[None, :]).sum(axis=1)
        rep.max_two_shared = int(two.max())
        rep.two_shared_holds = bool(np.all(two <= a_const))
    return rep


@dataclass(frozen=True)
class IndependenceReport:
    n: int
    p: float
    epsilon: float
    center: tuple[int, int, int]
    gap: float
    flip_changes: int
    graphs: int
    joint: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["joint"] = {f"{b},{s}": v for (b, s), v in self.joint.items()}
        return d


def check_independence(n: int, p: float, epsilon: float, center=(0, 1, 2)) -> IndependenceReport:
    """Exact dependence gap between the center indicator and the surrogate sum.

    Enumerates every labeled graph on ``n <= 5`` vertices. Also toggles each
    center edge on every graph and counts surrogate values that change.
    """
    if n > INDEPENDENCE_MAX_N:
        raise ValueError(f"joint enumeration is capped at n <= {INDEPENDENCE_MAX_N}, got n={n}")
    params = GnpParams(n, p, epsilon)
    ci = _center_index(n, center)
    ctr = tuple(int(v) for v in triple_index(n)[ci])
    plan = _plan_for(n, np.array([ci]))
    bits = enumerate_edge_bits(n)
    adjs = edge_bits_to_adjacency(bits, n)
    m = len(triple_index(n))
    locs = np.zeros((len(bits), m), dtype=np.int8)
    yc = np.zeros(len(bits), dtype=np.int8)
    for i, a in enumerate(adjs):
        ai = a.astype(np.int64)
        common = ai @ ai
        np.fill_diagonal(common, 0)
        y, _, loc = _family_arrays(a, common, params.edge_threshold, plan)
        locs[i] = loc[0]
        yc[i] = y[ci]

    look = pair_lookup(n)
    codes = np.arange(len(bits))
    changes = 0
    for u, v in ((ctr[0], ctr[1]), (ctr[1], ctr[2]), (ctr[0], ctr[2])):
        flipped = codes ^ (1 << int(look[u, v]))
        changes += int(np.count_nonzero(locs != locs[flipped]))

    weights = graph_weight(bits.sum(axis=1), n, p)
    s = locs.sum(axis=1)
    joint: dict = {}
    for b in (0, 1):
        for sv in np.unique(s):
            joint[(b, int(sv))] = math.fsum(weights[(yc == b) & (s == sv)])
    pb = {b: math.fsum(v for (bb, _), v in joint.items() if bb == b) for b in (0, 1)}
    ps = {sv: math.fsum(v for (_, ss), v in joint.items() if ss == sv) for sv in {k[1] for k in joint}}
    gap = max(abs(joint[(b, sv)] - pb[b] * ps[sv]) for (b, sv) in joint)
    return IndependenceReport(n, p, epsilon, ctr, gap, changes, len(bits), joint)
