"""Closed-form tail bounds and the auxiliary inequalities behind them.

Every logarithm here is natural. Bound functions return a :class:`BoundResult`
holding the raw exponent (which may be positive when the bound is trivial) and
the probability bound ``min(1, exp(exponent))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import GnpParams, n_triples


@dataclass(frozen=True)
class BoundParams:
    t: float
    lam: float
    a: float

    def __post_init__(self):
        for name in ("t", "lam", "a"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be a positive finite number, got {val}")


@dataclass(frozen=True)
class BoundResult:
    log_bound: float
    form: str
    inputs: BoundParams
    name: str = ""
    trivial: bool = False

    @property
    def prob_bound(self) -> float:
        return 1.0 if self.log_bound >= 0 else math.exp(self.log_bound)

    @property
    def exponent(self) -> float:
        return self.log_bound


def _sharp_exponent(t: float, lam: float, a: float) -> float:
    x = t / lam
    return -(t / a) * (math.log(x) - 1.0 + 1.0 / x)


def _weak_exponent(t: float, lam: float, a: float) -> float:
    return -(t / a) * math.log(t / (3.0 * lam))


def _weak(bp: BoundParams, name: str) -> BoundResult:
    e = _weak_exponent(bp.t, bp.lam, bp.a)
    return BoundResult(e, "weak", bp, name, trivial=e >= 0)


def concentration_bound(bp: BoundParams) -> tuple[BoundResult, BoundResult]:
    """Sharp and weak tail bounds for a localizable sum with mean-sum ``lam``.

    The sharp form is only valid for ``t >= lam``; below that it is returned as
    the trivial bound 1 with ``trivial=True``. The weak form is valid for all
    ``t > 0``.
    """
    if bp.t >= bp.lam:
        sharp = BoundResult(_sharp_exponent(bp.t, bp.lam, bp.a), "sharp", bp, "concentration_sharp")
    else:
        sharp = BoundResult(0.0, "sharp", bp, "concentration_sharp", trivial=True)
    return sharp, _weak(bp, "concentration_weak")


def binomial_tail_bound(t: float, lam: float) -> BoundResult:
    """``P(X >= t) <= exp(-t log(t / 3 lam))`` for binomial ``X`` with mean ``lam``."""
    return _weak(BoundParams(t, lam, 1.0), "binomial_tail")


def _check_sizes(m: int, n: int, p: float) -> None:
    if int(m) != m or m < 1:
        raise ValueError(f"set size must be a positive integer, got {m}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")


def matching_tail_bound(t: float, m: int, n: int, p: float) -> BoundResult:
    """Tail of ``t(A)`` for a matching ``A`` of size ``m``: ``exp(-(t/3) log(t / 3 m n p^2))``."""
    _check_sizes(m, n, p)
    return _weak(BoundParams(t, m * n * p * p, 3.0), "matching_tail")


def degree_tail_bound(t: float, n: int, m: int, p: float) -> BoundResult:
    """Tail of ``d(A)`` for ``|A| = m``: ``exp(-(t/2) log(t / 6 n m p))``.

    Encoded as the weak form with ``a = 2`` and ``lam = 2 n m p``.
    """
    _check_sizes(m, n, p)
    return _weak(BoundParams(t, 2.0 * n * m * p, 2.0), "degree_tail")


def rate_function(x: float, p: float) -> float:
    if not (0 < x < 1 and 0 < p < 1):
        raise ValueError(f"x and p must lie in (0, 1), got x={x}, p={p}")
    return 0.5 * x * math.log(x / p) + 0.5 * (1 - x) * math.log((1 - x) / (1 - p))


def min_edges_for_triangles(r: float) -> float:
    """Fewest edges a graph with ``r`` triangles can have: ``(6r)^(2/3) / 2``."""
    if r < 0:
        raise ValueError("triangle count must be nonnegative")
    return 0.5 * (6.0 * r) ** (2.0 / 3.0)


class MatrixInequality(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def symmetric_matrix_inequality(m, rtol: float = 1e-9) -> MatrixInequality:
    """Compare ``sum a_ij^2`` with ``|sum a_ij a_jk a_ki|^(2/3)``."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    scale = float(np.abs(a).max()) if a.size else 0.0
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)):
        raise ValueError("matrix must be symmetric")
    lhs = float(np.sum(a * a))
    rhs = abs(float(np.einsum("ij,jk,ki->", a, a, a))) ** (2.0 / 3.0)
    return MatrixInequality(lhs, rhs, lhs >= rhs - rtol * max(rhs, 1e-300))


def binomial_coefficient_bound(a: int, b: int) -> float:
    """``e^(b + b log(a/b))``, an upper bound on ``C(a, b)`` for ``1 <= b < a``."""
    if not (1 <= b < a):
        raise ValueError(f"need 1 <= b < a, got a={a}, b={b}")
    return math.exp(b + b * math.log(a / b))


class Envelope(NamedTuple):
    lower: float
    upper_kimvu: float
    upper_main: float


def theorem_envelope(n, p, epsilon, C1, C2, C3) -> Envelope:
    """Exponential envelopes around ``P(T >= (1+eps) E T)`` for caller-chosen constants.

    The constants depend on ``epsilon`` in an unspecified way; nothing here
    estimates them.
    """
    for name, c in (("C1", C1), ("C2", C2), ("C3", C3), ("epsilon", epsilon)):
        if not c > 0:
            raise ValueError(f"{name} must be positive")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    s = n * n * p * p
    L = math.log(1.0 / p)
    return Envelope(math.exp(-C1 * s * L), math.exp(-C2 * s), math.exp(-C3 * s * L))


class ExcessRatio(NamedTuple):
    c: float
    factor: float


def excess_ratio_constant(n: int, p: float, epsilon: float) -> ExcessRatio:
    """``c = (E T + eps n^3 p^3) / E T`` and the factor ``log c - 1 + 1/c``."""
    if n < 3:
        raise ValueError("need n >= 3 for a nonzero triangle mean")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    lam = n_triples(n) * p**3
    c = (lam + epsilon * n**3 * p**3) / lam
    return ExcessRatio(c, math.log(c) - 1.0 + 1.0 / c)


def tprime_tail_bound(params: GnpParams) -> BoundResult:
    """Sharp bound on ``P(T' >= E T + eps n^3 p^3)`` with ``a = 3 eps ell n p``."""
    lam = params.mean_triangles
    t = lam + params.epsilon * (params.n * params.p) ** 3
    sharp, _ = concentration_bound(BoundParams(t, lam, 3.0 * params.edge_threshold))
    return BoundResult(sharp.log_bound, "sharp", sharp.inputs, "tprime", sharp.trivial)


def t1_localized_bound(params: GnpParams) -> BoundResult:
    """Weak bound on ``P(T1(A) >= eps n^3 p^3)``: ``a = 21np``, ``lam = n^2 (Lnp) p^3``."""
    n, p = params.n, params.p
    bp = BoundParams(params.epsilon * (n * p) ** 3, n * n * params.Lnp * p**3, 21.0 * n * p)
    return _weak(bp, "t1_localized")


def t2_localized_bound(params: GnpParams) -> BoundResult:
    """Weak bound on ``P(S(A) >= eps n^3 p^3)``: ``a = 14np``, ``lam = n (Lnp)^2 p^2``."""
    n, p = params.n, params.p
    bp = BoundParams(params.epsilon * (n * p) ** 3, n * params.Lnp**2 * p * p, 14.0 * n * p)
    return _weak(bp, "t2_localized")


def final_threshold(params: GnpParams) -> float:
    """Triangle count ``E T + 19 eps n^3 p^3`` above which the combined bound applies."""
    return params.mean_triangles + 19.0 * params.epsilon * (params.n * params.p) ** 3
