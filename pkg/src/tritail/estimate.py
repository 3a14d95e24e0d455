"""Estimators for the triangle upper tail ``P(T >= t)``.

Monte Carlo runs are cut into fixed-size chunks; chunk ``i`` draws from
substream ``i`` of the caller's :class:`SeededRng`. Chunk boundaries depend only
on ``n``, and partial sums are merged in chunk order, so the result is
bit-identical for any worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import stats

from .graph import (
    ENUMERATION_MAX_N,
    GnpParams,
    count_triangles_batch,
    count_triangles_bits_naive,
    enumerate_edge_bits,
    n_pairs,
    n_triples,
    sample_edge_bits,
)
from .rng import SeededRng

METHODS = ("exact", "plain", "tilted", "clique_lb")
LOW_ESS = 100.0


@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    method: str
    n: int
    p: float
    threshold: float
    samples: int = 0
    master_seed: int | None = None
    tilt_q: float | None = None
    ess: float | None = None
    confidence: float = 0.95
    low_ess: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def default_workers() -> int:
    env = os.environ.get("TRITAIL_THREADS")
    return max(1, int(env)) if env else 1


def chunk_size(n: int) -> int:
    return int(max(64, min(8192, (1 << 22) // max(1, n_pairs(n)))))


@lru_cache(maxsize=None)
def _edge_triangle_histogram(n: int) -> np.ndarray:
    """``H[e, T]`` = number of labeled graphs with ``e`` edges and ``T`` triangles."""
    bits = enumerate_edge_bits(n)
    e = bits.sum(axis=1)
    tri = count_triangles_bits_naive(bits, n)
    hist = np.zeros((n_pairs(n) + 1, n_triples(n) + 1), dtype=np.int64)
    np.add.at(hist, (e, tri), 1)
    return hist


def exact_tail(n: int, p: float, threshold: float) -> TailEstimate:
    """Sum ``p^e (1-p)^(N-e)`` over every labeled graph with ``T >= threshold``."""
    if n > ENUMERATION_MAX_N:
        raise ValueError(f"exact enumeration is capped at n <= {ENUMERATION_MAX_N}, got n={n}")
    if n < 1 or not 0 <= p <= 1:
        raise ValueError(f"invalid n={n} or p={p}")
    hist = _edge_triangle_histogram(n)
    big_n = n_pairs(n)
    tmin = max(0, math.ceil(threshold))
    counts = hist[:, tmin:].sum(axis=1) if tmin < hist.shape[1] else np.zeros(big_n + 1, dtype=np.int64)
    val = math.fsum(int(c) * p**e * (1 - p) ** (big_n - e) for e, c in enumerate(counts) if c)
    val = min(1.0, val)
    return TailEstimate(val, val, val, "exact", n, p, threshold)


def wilson_interval(hits: int, total: int, confidence: float = 0.95) -> tuple[float, float]:
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    phat = hits / total
    denom = 1 + z * z / total
    center = (phat + z * z / (2 * total)) / denom
    half = z * math.sqrt(phat * (1 - phat) / total + z * z / (4 * total * total)) / denom
    return float(max(0.0, center - half)), float(min(1.0, center + half))


def log_likelihood_ratio(edges, n: int, p: float, q: float):
    """``log`` of dP_p / dP_q for a graph with ``edges`` edges."""
    big_n = n_pairs(n)
    return edges * (math.log(p) - math.log(q)) + (big_n - edges) * (math.log1p(-p) - math.log1p(-q))


def default_tilt(p: float, epsilon: float) -> float:
    """``(1+eps)^(1/3) p``, clamped to ``(p, 0.99]``."""
    q = (1 + epsilon) ** (1 / 3) * p
    return min(max(q, math.nextafter(p, 1.0)), 0.99)


def _run_chunks(fn, total: int, n: int, workers: int | None):
    size = chunk_size(n)
    jobs = [(i, min(size, total - i * size)) for i in range((total + size - 1) // size)]
    workers = workers or default_workers()
    if workers <= 1 or len(jobs) <= 1:
        return [fn(i, m) for i, m in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _params(params) -> tuple[int, float]:
    if isinstance(params, GnpParams):
        return params.n, params.p
    n, p = params
    return int(n), float(p)


def plain_mc_tail(
    params: GnpParams | tuple[int, float],
    threshold: float,
    samples: int,
    rng: SeededRng,
    confidence: float = 0.95,
    workers: int | None = None,
) -> TailEstimate:
    """Fraction of G(n,p) draws with ``T >= threshold``, with a Wilson interval."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n, p = _params(params)

    def chunk(i: int, m: int) -> int:
        bits = sample_edge_bits(n, p, m, rng.generator(i))
        return int(np.count_nonzero(count_triangles_batch(bits, n) >= threshold))

    hits = sum(_run_chunks(chunk, samples, n, workers))
    lo, hi = wilson_interval(hits, samples, confidence)
    phat = hits / samples
    return TailEstimate(phat, min(lo, phat), max(hi, phat), "plain", n, p, threshold,
                        samples, rng.master_seed, confidence=confidence)


def tilted_mc_tail(
    params: GnpParams | tuple[int, float],
    threshold: float,
    samples: int,
    rng: SeededRng,
    q: float | None = None,
    confidence: float = 0.95,
    workers: int | None = None,
) -> TailEstimate:
    """Importance sampling under G(n,q), reweighted by the likelihood ratio.

    The interval is a normal approximation on the weighted mean; ``ess`` is
    the Kish effective sample size of the terms ``w * 1{T >= t}`` and
    ``low_ess`` flags it below 100.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n, p = _params(params)
    if q is None:
        if not isinstance(params, GnpParams):
            raise ValueError("q is required unless GnpParams supplies epsilon")
        q = default_tilt(p, params.epsilon)
    if not (0 < q < 1) or q < p:
        raise ValueError(f"tilt q must lie in (0, 1) with q >= p, got q={q}, p={p}")

    def chunk(i: int, m: int):
        bits = sample_edge_bits(n, q, m, rng.generator(i))
        hit = count_triangles_batch(bits, n) >= threshold
        if not hit.any():
            return 0.0, 0.0
        h = np.exp(log_likelihood_ratio(bits[hit].sum(axis=1), n, p, q))
        return math.fsum(h), math.fsum(h * h)

    parts = _run_chunks(chunk, samples, n, workers)
    s1 = math.fsum(a for a, _ in parts)
    s2 = math.fsum(b for _, b in parts)
    mean = s1 / samples
    var = max(0.0, (s2 - samples * mean * mean) / (samples - 1)) if samples > 1 else 0.0
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    half = z * math.sqrt(var / samples)
    ess = s1 * s1 / s2 if s2 > 0 else 0.0
    phat = min(1.0, mean)
    return TailEstimate(phat, min(phat, max(0.0, mean - half)), min(1.0, max(phat, mean + half)), "tilted", n, p,
                        threshold, samples, rng.master_seed, q, ess, confidence, ess < LOW_ESS)


def tilted_enumeration_identity(n: int, p: float, q: float, threshold: float) -> float:
    """``sum_G P_q(G) w(G) 1{T(G) >= t}`` over every labeled graph.

    Equal to the exact tail under ``p`` as an algebraic identity.
    """
    hist = _edge_triangle_histogram(n)
    big_n = n_pairs(n)
    tmin = max(0, math.ceil(threshold))
    counts = hist[:, tmin:].sum(axis=1) if tmin < hist.shape[1] else np.zeros(big_n + 1, dtype=np.int64)
    terms = []
    for e, c in enumerate(counts):
        if c:
            qweight = q**e * (1 - q) ** (big_n - e)
            terms.append(int(c) * qweight * math.exp(log_likelihood_ratio(e, n, p, q)))
    return math.fsum(terms)


def clique_planting_lower_bound(params: GnpParams | tuple[int, float], extra_triangles: float) -> tuple[int, float]:
    """Smallest clique size ``k >= 2`` with ``C(k,3) >= extra`` and ``log p^C(k,2)``.

    ``p^C(k,2)`` is the probability that a fixed ``k``-set is a clique, hence a
    lower bound on ``P(T >= extra_triangles)``. If ``k > n`` no clique fits and
    the log-probability is ``-inf``.
    """
    if extra_triangles < 0:
        raise ValueError("extra_triangles must be nonnegative")
    n, p = _params(params)
    k = 2
    while math.comb(k, 3) < extra_triangles:
        k += 1
    if k > n:
        return k, -math.inf
    return k, math.comb(k, 2) * math.log(p)


def clique_tail(params: GnpParams | tuple[int, float], threshold: float) -> TailEstimate:
    n, p = _params(params)
    _, logp = clique_planting_lower_bound((n, p), max(0.0, threshold))
    val = math.exp(logp) if threshold > 0 else 1.0
    return TailEstimate(val, val, 1.0, "clique_lb", n, p, threshold)


def tail(method: str, params: GnpParams | tuple[int, float], threshold: float, samples: int = 10_000,
         rng: SeededRng | None = None, q: float | None = None, **kw) -> TailEstimate:
    """Dispatch to one of the tail estimators by name."""
    method = method.replace("-", "_")
    n, p = _params(params)
    if method == "exact":
        return exact_tail(n, p, threshold)
    if method == "clique_lb":
        return clique_tail(params, threshold)
    rng = rng or SeededRng(0)
    if method == "plain":
        return plain_mc_tail(params, threshold, samples, rng, **kw)
    if method == "tilted":
        return tilted_mc_tail(params, threshold, samples, rng, q=q, **kw)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
