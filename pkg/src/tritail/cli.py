"""``tritail`` command line: bounds, tail estimates, events, decompositions,
condition checks and parameter sweeps.

Every artifact carries the full run configuration: JSON outputs under a
``config`` key, CSV outputs as a leading ``# config: {...}`` comment line.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import bounds as B
from .classify import decompose
from .estimate import METHODS, tail
from .graph import GnpParams, read_edgelist, sample_gnp
from .harness import check_conditions, check_independence
from .matchings import b_prime, detect_events, greedy_matching_coloring, t_sum
from .rng import SeededRng


@dataclass
class RunConfig:
    command: str = "sweep"
    n: list = field(default_factory=list)
    p: list = field(default_factory=list)
    epsilon: list = field(default_factory=lambda: [1.0])
    methods: list = field(default_factory=list)
    thresholds: list | None = None
    samples: int = 10_000
    master_seed: int = 0
    tilt_q: float | None = None
    confidence: float = 0.95
    timing: bool = False
    output: str | None = None
    format: str = "csv"

    def validate(self) -> None:
        if not self.n or not self.p or not self.epsilon:
            raise ValueError("parameter grids n, p and epsilon must be non-empty")
        if not self.methods:
            raise ValueError("at least one method is required")
        bad = [m for m in self.methods if m.replace("-", "_") not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {list(METHODS)}")
        if any(not 0 < p < 1 for p in self.p):
            raise ValueError("every p must lie in (0, 1)")
        if any(int(n) != n or n < 1 for n in self.n):
            raise ValueError("every n must be a positive integer")
        if any(e <= 0 for e in self.epsilon):
            raise ValueError("every epsilon must be positive")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


SWEEP_COLUMNS = ["index", "method", "n", "p", "epsilon", "threshold", "p_hat", "ci_low", "ci_high",
                 "samples", "seed", "stream", "tilt_q", "ess", "normalized_exponent", "error"]


def normalized_exponent(p_hat: float, n: int, p: float) -> float:
    """``-log(p_hat) / (n^2 p^2 log(1/p))``; ``inf`` when ``p_hat`` is 0."""
    if p_hat <= 0:
        return math.inf
    return -math.log(p_hat) / (n * n * p * p * math.log(1 / p))


def _grid(config: RunConfig):
    for n, p, eps in itertools.product(config.n, config.p, config.epsilon):
        mean = GnpParams(int(n), p, eps).mean_triangles
        ts = config.thresholds if config.thresholds else [(1 + eps) * mean]
        for t in ts:
            for m in config.methods:
                yield int(n), p, eps, t, m.replace("-", "_")


def _sweep_row(index: int, point, config: RunConfig) -> dict:
    n, p, eps, t, method = point
    row = {"index": index, "method": method, "n": n, "p": p, "epsilon": eps, "threshold": t,
           "seed": config.master_seed, "stream": index, "error": ""}
    start = time.perf_counter()
    try:
        est = tail(method, GnpParams(n, p, eps), t, config.samples, SeededRng(config.master_seed, index),
                   q=config.tilt_q, confidence=config.confidence) if method in ("plain", "tilted") else \
            tail(method, GnpParams(n, p, eps), t)
        row.update(p_hat=est.p_hat, ci_low=est.ci_low, ci_high=est.ci_high, samples=est.samples,
                   tilt_q=est.tilt_q, ess=est.ess, normalized_exponent=normalized_exponent(est.p_hat, n, p))
    except Exception as exc:  # row-level failure; the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    if config.timing:
        row["runtime_s"] = round(time.perf_counter() - start, 6)
    return row


def threads_from_env(flag: int | None = None) -> int:
    if flag:
        return max(1, flag)
    env = os.environ.get("TRITAIL_THREADS")
    return max(1, int(env)) if env else 1


def run_sweep(config: RunConfig, threads: int | None = None) -> tuple[list[dict], list[dict]]:
    """Evaluate every grid point and method; rows come back in grid order."""
    config.validate()
    points = list(_grid(config))
    workers = threads_from_env(threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda ip: _sweep_row(ip[0], ip[1], config), enumerate(points)))
    else:
        rows = [_sweep_row(i, pt, config) for i, pt in enumerate(points)]
    errors = [{"index": r["index"], "error": r["error"]} for r in rows if r["error"]]
    return rows, errors


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def to_csv(rows: list[dict], columns: list[str], config: dict | None = None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def to_json(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- bounds

BOUND_COLUMNS = ["bound_name", "t", "lambda", "a", "n", "p", "epsilon", "exponent", "prob_bound"]


def _bound_concentration(form):
    def f(t, lam, a, **_):
        sharp, weak = B.concentration_bound(B.BoundParams(t, lam, a))
        return sharp if form == "sharp" else weak
    return f


BOUNDS = {
    "concentration_sharp": (("t", "lam", "a"), _bound_concentration("sharp")),
    "concentration_weak": (("t", "lam", "a"), _bound_concentration("weak")),
    "binomial_tail": (("t", "lam"), lambda t, lam, **_: B.binomial_tail_bound(t, lam)),
    "matching_tail": (("t", "m", "n", "p"), lambda t, m, n, p, **_: B.matching_tail_bound(t, int(m), int(n), p)),
    "degree_tail": (("t", "m", "n", "p"), lambda t, m, n, p, **_: B.degree_tail_bound(t, int(n), int(m), p)),
    "tprime": (("n", "p", "epsilon"), lambda n, p, epsilon, **_: B.tprime_tail_bound(GnpParams(int(n), p, epsilon))),
    "t1_localized": (("n", "p", "epsilon"),
                     lambda n, p, epsilon, **_: B.t1_localized_bound(GnpParams(int(n), p, epsilon))),
    "t2_localized": (("n", "p", "epsilon"),
                     lambda n, p, epsilon, **_: B.t2_localized_bound(GnpParams(int(n), p, epsilon))),
    "envelope_main": (("n", "p", "epsilon", "C"), None),
    "envelope_lower": (("n", "p", "epsilon", "C"), None),
    "envelope_kimvu": (("n", "p", "epsilon", "C"), None),
}


def evaluate_bound(name: str, values: dict) -> dict:
    needed, fn = BOUNDS[name]
    missing = [k for k in needed if values.get(k) is None]
    if missing:
        raise ValueError(f"bound {name} needs --{', --'.join('lambda' if k == 'lam' else k for k in missing)}")
    row = {"bound_name": name, "n": values.get("n"), "p": values.get("p"), "epsilon": values.get("epsilon")}
    if fn is None:
        c = values["C"]
        env = B.theorem_envelope(values["n"], values["p"], values["epsilon"], c, c, c)
        val = {"envelope_main": env.upper_main, "envelope_lower": env.lower, "envelope_kimvu": env.upper_kimvu}[name]
        row.update(exponent=math.log(val) if val > 0 else -math.inf, prob_bound=val)
        return row
    res = fn(**values)
    row.update(t=res.inputs.t, **{"lambda": res.inputs.lam}, a=res.inputs.a,
               exponent=res.log_bound, prob_bound=res.prob_bound)
    return row


def cmd_bounds(args) -> int:
    grid_keys = ["t", "lam", "a", "n", "p", "epsilon", "m", "C"]
    rows, errors = [], []
    for name in args.name:
        needed = BOUNDS[name][0]
        lists = [getattr(args, k) or [None] for k in needed]
        for combo in itertools.product(*lists):
            values = dict(zip(needed, combo))
            try:
                rows.append(evaluate_bound(name, values))
            except (ValueError, ZeroDivisionError) as exc:
                errors.append({"bound_name": name, **values, "error": str(exc)})
    config = {"command": "bounds", "name": args.name, **{k: getattr(args, k) for k in grid_keys}}
    if args.json:
        _emit(to_json({"config": config, "rows": rows, "errors": errors}), args.output)
    else:
        _emit(to_csv(rows, BOUND_COLUMNS, config), args.output)
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    return 1 if errors else 0


# ---------------------------------------------------------------- tail

TAIL_COLUMNS = ["method", "n", "p", "threshold", "p_hat", "ci_low", "ci_high", "samples", "seed", "tilt_q", "ess"]


def cmd_tail(args) -> int:
    if args.threshold is None and args.epsilon is None:
        raise SystemExit("tail: one of --threshold or --epsilon is required")
    eps = args.epsilon if args.epsilon is not None else 1.0
    params = GnpParams(args.n, args.p, eps)
    threshold = args.threshold if args.threshold is not None else (1 + eps) * params.mean_triangles
    est = tail(args.method, params, threshold, args.samples, SeededRng(args.seed), q=args.tilt_q,
               **({"workers": threads_from_env(args.threads)} if args.method in ("plain", "tilted") else {}))
    config = {"command": "tail", "n": args.n, "p": args.p, "epsilon": args.epsilon, "threshold": threshold,
              "method": args.method, "samples": args.samples, "seed": args.seed, "tilt_q": args.tilt_q}
    row = est.to_dict()
    row["seed"] = args.seed
    if args.csv:
        _emit(to_csv([row], TAIL_COLUMNS, config), args.output)
    else:
        _emit(to_json({"config": config, "result": row}), args.output)
    return 0


# ---------------------------------------------------------------- events

EVENT_COLUMNS = ["seed", "sample", "n", "p", "epsilon", "E1", "E2", "E3", "E4", "E1_exactness", "E2_exactness",
                 "E3_exactness", "E4_exactness", "t_bprime", "class_count"]


def event_row(g, params: GnpParams, exact_max_n: int = 10) -> dict:
    flags = detect_events(g, params, exact_max_n)
    bp = b_prime(g, params)
    row = flags.as_row()
    row.update(t_bprime=t_sum(g, bp), class_count=greedy_matching_coloring(bp, g).num_classes)
    return row


def cmd_events(args) -> int:
    params = GnpParams(args.n, args.p, args.epsilon)
    rows = []
    for i in range(args.samples):
        g = sample_gnp(params, SeededRng(args.seed, i))
        row = {"seed": args.seed, "sample": i, "n": args.n, "p": args.p, "epsilon": args.epsilon}
        row.update(event_row(g, params, args.exact_max_n))
        rows.append(row)
    config = {"command": "events", "n": args.n, "p": args.p, "epsilon": args.epsilon, "samples": args.samples,
              "seed": args.seed, "exact_max_n": args.exact_max_n}
    _emit(to_csv(rows, EVENT_COLUMNS, config), args.output)
    return 0


# ---------------------------------------------------------------- decompose

def cmd_decompose(args) -> int:
    if args.graph:
        g = read_edgelist(args.graph)
        params = GnpParams(g.n, args.p, args.epsilon, args.vertex_factor)
    else:
        if args.n is None:
            raise SystemExit("decompose: --n is required unless --graph is given")
        params = GnpParams(args.n, args.p, args.epsilon, args.vertex_factor)
        g = sample_gnp(params, SeededRng(args.seed))
    d = decompose(g, params)
    config = {"command": "decompose", "n": params.n, "p": args.p, "epsilon": args.epsilon, "seed": args.seed,
              "graph": args.graph, "vertex_factor": args.vertex_factor}
    _emit(to_json({"config": config, "decomposition": d.to_dict()}), args.output)
    return 0


# ---------------------------------------------------------------- verify-conditions

def verify_conditions(n: int, p: float, epsilon: float, samples: int, seed: int,
                      independence_n: int | None = None) -> dict:
    params = GnpParams(n, p, epsilon)
    report = None
    for i in range(samples):
        r = check_conditions(sample_gnp(params, SeededRng(seed, i)), params)
        if report is None:
            report = r
        else:
            report.merge(r)
    ind_n = independence_n if independence_n is not None else min(n, 5)
    ind = check_independence(ind_n, p, epsilon) if ind_n >= 3 else None
    out = {"conditions": report.to_dict(), "samples": samples}
    if ind is not None:
        out["independence"] = {"n": ind.n, "gap": ind.gap, "flip_changes": ind.flip_changes, "graphs": ind.graphs}
    out["passed"] = bool(report.passed and (ind is None or (ind.gap <= 1e-12 and ind.flip_changes == 0)))
    return out


def cmd_verify(args) -> int:
    result = verify_conditions(args.n, args.p, args.epsilon, args.samples, args.seed, args.independence_n)
    config = {"command": "verify-conditions", "n": args.n, "p": args.p, "epsilon": args.epsilon,
              "samples": args.samples, "seed": args.seed, "independence_n": args.independence_n}
    _emit(to_json({"config": config, **result}), args.output)
    return 0 if result["passed"] else 1


# ---------------------------------------------------------------- sweep

def cmd_sweep(args) -> int:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    overrides = {"n": args.n, "p": args.p, "epsilon": args.epsilon, "methods": args.methods,
                 "thresholds": args.thresholds, "samples": args.samples, "master_seed": args.seed,
                 "tilt_q": args.tilt_q, "output": args.output, "format": args.format,
                 "timing": args.timing or None}
    base.update({k: v for k, v in overrides.items() if v is not None})
    base["command"] = "sweep"
    try:
        config = RunConfig.from_dict(base)
        config.validate()
    except (TypeError, ValueError) as exc:
        print(f"sweep: invalid config: {exc}", file=sys.stderr)
        return 2
    rows, errors = run_sweep(config, args.threads)
    cfg = asdict(config)
    if config.format == "json":
        _emit(to_json({"config": cfg, "rows": rows, "errors": errors}), config.output)
    else:
        cols = SWEEP_COLUMNS + (["runtime_s"] if config.timing else [])
        _emit(to_csv(rows, cols, cfg), config.output)
    for e in errors:
        print(f"row {e['index']}: {e['error']}", file=sys.stderr)
    return 1 if errors else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tritail", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="evaluate named closed-form bounds on a grid (CSV)")
    b.add_argument("--name", nargs="+", required=True, choices=sorted(BOUNDS))
    b.add_argument("--t", nargs="+", type=float)
    b.add_argument("--lambda", dest="lam", nargs="+", type=float)
    b.add_argument("--a", nargs="+", type=float)
    b.add_argument("--n", nargs="+", type=int)
    b.add_argument("--p", nargs="+", type=float)
    b.add_argument("--epsilon", nargs="+", type=float)
    b.add_argument("--m", nargs="+", type=int, help="matching size or vertex-set size")
    b.add_argument("--C", nargs="+", type=float, help="envelope constant (used for C1, C2 and C3)")
    b.add_argument("--json", action="store_true")
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bounds)

    t = sub.add_parser("tail", help="estimate P(T >= t)")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--p", type=float, required=True)
    g = t.add_mutually_exclusive_group()
    g.add_argument("--epsilon", type=float)
    g.add_argument("--threshold", type=float)
    t.add_argument("--method", choices=["exact", "plain", "tilted", "clique-lb"], default="exact")
    t.add_argument("--samples", type=int, default=10_000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--tilt-q", type=float)
    t.add_argument("--threads", type=int)
    fmt = t.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")
    t.add_argument("-o", "--output")
    t.set_defaults(func=cmd_tail)

    e = sub.add_parser("events", help="per-sample event flags (CSV)")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--p", type=float, required=True)
    e.add_argument("--epsilon", type=float, required=True)
    e.add_argument("--samples", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--exact-max-n", type=int, default=10)
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_events)

    d = sub.add_parser("decompose", help="triangle decomposition of one graph (JSON)")
    d.add_argument("--n", type=int)
    d.add_argument("--p", type=float, required=True)
    d.add_argument("--epsilon", type=float, required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--graph", help="edge-list file to decompose instead of sampling")
    d.add_argument("--vertex-factor", type=float, default=7.0)
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify-conditions", help="check the localization conditions (JSON)")
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--p", type=float, required=True)
    v.add_argument("--epsilon", type=float, required=True)
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--independence-n", type=int)
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="tail estimates over a parameter grid")
    s.add_argument("--config", help="JSON RunConfig; flags override its values")
    s.add_argument("--n", nargs="+", type=int)
    s.add_argument("--p", nargs="+", type=float)
    s.add_argument("--epsilon", nargs="+", type=float)
    s.add_argument("--methods", nargs="+")
    s.add_argument("--thresholds", nargs="+", type=float)
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--tilt-q", type=float)
    s.add_argument("--format", choices=["csv", "json"])
    s.add_argument("--timing", action="store_true", help="add a runtime_s column (breaks byte-determinism)")
    s.add_argument("--threads", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
