"""Command-line front end.

Settings resolve in the order: command-line flags, then ``QF_*`` environment
variables, then the JSON file given by ``--config``, then built-in defaults.
Exit codes: 0 when every hard check passes, 1 when one fails, 2 for usage
or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import brauer, budget, complexity2, harmonic, increment, inverse_lab, quadsets, suites
from .errors import IncrementNotFound, QuadFourierError
from .harmonic import DenseFunction
from .io import dumps, load, load_tuple, points_from_json

log = logging.getLogger("quadfourier")

ENV_PREFIX = "QF_"
DEFAULTS = {
    "p": 3,
    "n": 3,
    "d": 1,
    "rank": 4,
    "seed": 0,
    "threads": 1,
    "deterministic": False,
    "out": None,
}
INT_KEYS = ("p", "n", "d", "rank", "seed", "threads")


class UsageError(Exception):
    pass


def _parse_bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise UsageError(f"not a boolean: {s!r}")


def resolve_settings(args: argparse.Namespace, environ=None) -> dict:
    """Merge flags, environment, config file and defaults."""
    environ = os.environ if environ is None else environ
    merged = dict(DEFAULTS)
    merged["budgets"] = {}
    cfg_path = getattr(args, "config", None) or environ.get(ENV_PREFIX + "CONFIG")
    if cfg_path:
        try:
            cfg = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {cfg_path}: {e}") from e
        for k, v in cfg.items():
            if k == "budgets":
                merged["budgets"].update({b: int(x) for b, x in v.items()})
            elif k in merged:
                merged[k] = v
            else:
                raise UsageError(f"unknown config key {k!r}")
    for k in DEFAULTS:
        env = environ.get(ENV_PREFIX + k.upper())
        if env is not None:
            merged[k] = env
    for b in budget.DEFAULTS:
        env = environ.get(f"{ENV_PREFIX}BUDGET_{b.upper()}")
        if env is not None:
            merged["budgets"][b] = env
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    for b in budget.DEFAULTS:
        v = getattr(args, f"budget_{b}", None)
        if v is not None:
            merged["budgets"][b] = v
    try:
        for k in INT_KEYS:
            merged[k] = int(merged[k])
        merged["budgets"] = {b: int(v) for b, v in merged["budgets"].items()}
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad integer setting: {e}") from e
    merged["deterministic"] = _parse_bool(merged["deterministic"])
    return merged


def _config(s: dict) -> suites.RunConfig:
    return suites.RunConfig(
        p=s["p"],
        n=s["n"],
        d=s["d"],
        rank=s["rank"],
        seed=s["seed"],
        threads=s["threads"],
        deterministic=s["deterministic"],
        budgets=s["budgets"],
        out=s["out"],
    )


def _emit(obj, s: dict, name: str) -> None:
    text = dumps(obj)
    if s.get("out"):
        out = Path(s["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    sys.stdout.write(text)


def _read(path: str) -> dict:
    try:
        return load(path)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read {path}: {e}") from e


def _function(d: dict) -> DenseFunction:
    return DenseFunction.from_dict(d.get("function", d))


def _tuple(d: dict):
    return load_tuple(d.get("tuple", d))


def _fraction(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"not a rational number: {s!r}") from e


# ----------------------------------------------------------------- commands


def cmd_verify(args, s) -> int:
    cfg = _config(s)
    recs = suites.run_suite(args.suite, cfg)
    out = Path(s["out"] or "reports")
    c, j = suites.write_reports(recs, out)
    failed = [r for r in recs if r.failed]
    for r in failed:
        log.error("FAIL %s %s %s", r.suite, r.lemma_anchor, r.instance_id)
    sys.stdout.write(f"{len(recs)} records, {len(failed)} failed; wrote {c} and {j}\n")
    return 1 if failed else 0


def cmd_norms(args, s) -> int:
    f = _function(_read(args.instance))
    F = harmonic.dft(f)
    l2 = float(np.sum(np.abs(f.values) ** 2))
    res = {
        "size": f.domain.size,
        "l2_squared": l2,
        "parseval_rhs": float(np.sum(np.abs(F.values) ** 2)) / f.domain.size,
        "u2": harmonic.u2_norm(f),
        "u3": harmonic.u3_norm(f),
    }
    _emit(res, s, "norms.json")
    return 0


def cmd_levelset(args, s) -> int:
    Q, symmetric = _tuple(_read(args.instance))
    a = np.zeros(Q.d, dtype=np.int64) if args.a is None else np.array([int(v) for v in args.a.split(",")])
    if len(a) != Q.d:
        raise UsageError(f"--a needs {Q.d} entries")
    pts = quadsets.level_set(Q, a)
    cert = quadsets.tuple_rank(Q)
    labels = quadsets.level_labels(Q, Q.domain.points())
    sizes = np.bincount(labels, minlength=Q.p**Q.d)
    res = {
        "size": len(pts),
        "domain_size": Q.domain.size,
        "rank": suites._cert(cert),
        "input_symmetric": symmetric,
        "fiber_sizes_sum": int(sizes.sum()),
        "points": pts.tolist() if args.points else None,
    }
    _emit(res, s, "levelset.json")
    return 0 if int(sizes.sum()) == Q.domain.size else 1


def cmd_brauer(args, s) -> int:
    if args.brauer_cmd == "lower-bound":
        r = args.r if args.r is not None else s["n"]
        c = brauer.lower_bound_coloring(s["p"], s["n"], r)
        w = brauer.find_monochromatic_brauer(c)
        _emit({"coloring": c.to_dict(), "monochromatic": None if w is None else w.__dict__}, s, "coloring.json")
        return 0 if w is None else 1
    if args.brauer_cmd == "check":
        data = _read(args.coloring)
        c = brauer.Coloring.from_dict(data.get("coloring", data))
        w = brauer.find_monochromatic_brauer(c)
        res = {"monochromatic": w is not None}
        if w is not None:
            res["witness"] = {"x": list(w.x), "y": list(w.y), "color": w.color, "points": w.points(c.p)}
        _emit(res, s, "brauer-check.json")
        return 0
    data = _read(args.instance)
    Q, _ = _tuple(data)
    if "set" in data:
        A = points_from_json(data["set"], Q.n, Q.p)
    else:
        A = quadsets.level_set(Q.homogeneous())
    res = brauer.counting_lemma(Q, A)
    _emit(
        {
            "count": res["count"],
            "main_term": str(res["main_term"]),
            "normalized_error": res["normalized_error"],
            "rank": res["rank"],
            "constant": brauer.COUNTING_CONSTANT,
            "within_constant": res["normalized_error"] <= brauer.COUNTING_CONSTANT,
        },
        s,
        "brauer-count.json",
    )
    return 0 if res["normalized_error"] <= brauer.COUNTING_CONSTANT else 1


def _sets(data: dict, n: int, p: int):
    return [points_from_json(A, n, p) for A in data["sets"]]


def cmd_partition(args, s) -> int:
    data = _read(args.instance)
    Q, _ = _tuple(data)
    sets = _sets(data, Q.n, Q.p)
    res = increment.high_rank_partition(Q, s["rank"], sets)
    _emit(
        {
            "new_domain": res.new_domain.to_dict(),
            "new_tuple": res.new_tuple.to_dict(),
            "stats": {k: v for k, v in res.stats.items() if k != "witnesses"},
            "witnesses": [w.to_dict() for w in res.stats["witnesses"]],
        },
        s,
        "partition.json",
    )
    return 0


def cmd_increment(args, s) -> int:
    if args.increment_cmd == "verify-cert":
        data = _read(args.cert)
        cert = data.get("certificate", data)
        try:
            res = increment.verify_certificate(cert)
        except AssertionError as e:
            _emit({"valid": False, "error": str(e)}, s, "verify-cert.json")
            return 1
        _emit({"valid": True, **res}, s, "verify-cert.json")
        return 0
    data = _read(args.sets)
    p = int(data.get("p", s["p"]))
    n = int(data.get("n", s["n"]))
    sets = _sets(data, n, p)
    try:
        state, res = increment.sparsity_expansion_iterate(
            sets,
            _fraction(args.alpha),
            _fraction(args.beta),
            s["rank"],
            p=p,
            n=n,
            gain_threshold=_fraction(args.gain),
            max_stages=args.max_stages,
        )
    except IncrementNotFound as e:
        _emit({"status": "increment-not-found", "message": str(e), "trace": e.trace}, s, "increment.json")
        return 1
    _emit({"status": "certified", **res}, s, "increment.json")
    return 0


def cmd_inverse(args, s) -> int:
    data = _read(args.instance)
    Q, _ = _tuple(data)
    f = _function(data)
    rng = np.random.default_rng(s["seed"])
    v = inverse_lab.quadratic_witness_search(f, Q, mode=args.mode, cutoff=args.cutoff, rng=rng)
    _emit(v.to_dict(), s, "inverse.json")
    return 0


def cmd_complexity(args, s) -> int:
    if args.complexity_cmd == "check":
        S = complexity2.LinearSystem.from_dict(_read(args.system))
        res = {
            "translation_invariant": complexity2.is_translation_invariant(S),
            "complexity_le_2": complexity2.complexity_at_most_two(S),
        }
        _emit(res, s, "complexity.json")
        return 0
    f = _function(_read(args.weights))
    try:
        c = [int(v) for v in args.coeffs.split(",")]
    except ValueError as e:
        raise UsageError(f"bad --coeffs: {args.coeffs}") from e
    if len(c) == 3:
        C = complexity2.ci_coefficients(*c, f.p)
    elif len(c) == 4:
        C = tuple(c)
    else:
        raise UsageError("--coeffs takes c1,c2,c3 or four coefficients")
    a = complexity2.weighted_solution_count(f, C)
    b = complexity2.weighted_solution_count(f, C, "brute")
    rel = abs(a - b) / max(1.0, abs(b))
    _emit({"coefficients": list(C), "fourier": a, "brute": b, "rel_err": rel}, s, "count.json")
    return 0 if rel <= 1e-6 else 1


def cmd_gen(args, s) -> int:
    params = {"p": s["p"], "n": s["n"], "d": s["d"], "rank": args.min_rank if args.min_rank is not None else 0}
    if args.r is not None:
        params["r"] = args.r
    if args.tuple:
        params["tuple"] = _read(args.tuple).get("tuple")
    inst = suites.generate_instance(args.kind, params, s["seed"])
    _emit(inst, s, f"{args.kind}.json")
    return 0


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("shared settings")
    g.add_argument("--p", type=int, help="field size (3, 5 or 7)")
    g.add_argument("--n", type=int, help="ambient dimension")
    g.add_argument("--d", type=int, help="number of quadratic forms")
    g.add_argument("--rank", type=int, help="rank threshold R")
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--threads", type=int, help="worker threads for suites")
    g.add_argument("--deterministic", action="store_const", const=True, help="zero out timing fields")
    g.add_argument("--out", help="output directory")
    g.add_argument("--config", help="JSON settings file")
    g.add_argument("-v", "--verbose", action="store_true")
    for b in budget.DEFAULTS:
        g.add_argument(f"--budget-{b.replace('_', '-')}", dest=f"budget_{b}", type=int, metavar="N")

    parser = argparse.ArgumentParser(prog="quadfourier", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", help=f"one of {', '.join(suites.SUITES)}, all")
    v.set_defaults(func=cmd_verify)

    nm = sub.add_parser("norms", parents=[common], help="Parseval, U2 and U3 of a function")
    nm.add_argument("--instance", required=True)
    nm.set_defaults(func=cmd_norms)

    ls = sub.add_parser("levelset", parents=[common], help="level set and rank of a quadratic tuple")
    ls.add_argument("--instance", required=True)
    ls.add_argument("--a", help="comma-separated level value (default 0)")
    ls.add_argument("--points", action="store_true", help="include the points")
    ls.set_defaults(func=cmd_levelset)

    br = sub.add_parser("brauer", parents=[common], help="Brauer quadruple tools")
    brs = br.add_subparsers(dest="brauer_cmd", required=True)
    lb = brs.add_parser("lower-bound", parents=[common])
    lb.add_argument("--r", type=int)
    brc = brs.add_parser("check", parents=[common])
    brc.add_argument("--coloring", required=True)
    bcn = brs.add_parser("count", parents=[common])
    bcn.add_argument("--instance", required=True)
    br.set_defaults(func=cmd_brauer)

    pa = sub.add_parser("partition", parents=[common], help="high-rank partition of a tuple")
    pa.add_argument("--instance", required=True)
    pa.set_defaults(func=cmd_partition)

    inc = sub.add_parser("increment", parents=[common], help="density-increment driver")
    incs = inc.add_subparsers(dest="increment_cmd", required=True)
    run = incs.add_parser("run", parents=[common])
    run.add_argument("--sets", required=True)
    run.add_argument("--alpha", default="1/4")
    run.add_argument("--beta", default="1/4")
    run.add_argument("--gain", default="0", help="minimum density gain per stage")
    run.add_argument("--max-stages", type=int, default=16)
    vc = incs.add_parser("verify-cert", parents=[common])
    vc.add_argument("--cert", required=True)
    inc.set_defaults(func=cmd_increment)

    iv = sub.add_parser("inverse", parents=[common], help="quadratic witness search")
    ivs = iv.add_subparsers(dest="inverse_cmd", required=True)
    se = ivs.add_parser("search", parents=[common])
    se.add_argument("--instance", required=True)
    se.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    se.add_argument("--cutoff", type=int, default=0)
    iv.set_defaults(func=cmd_inverse)

    cx = sub.add_parser("complexity", parents=[common], help="linear systems and four-point counts")
    cxs = cx.add_subparsers(dest="complexity_cmd", required=True)
    ch = cxs.add_parser("check", parents=[common])
    ch.add_argument("--system", required=True)
    co = cxs.add_parser("count", parents=[common])
    co.add_argument("--weights", required=True)
    co.add_argument("--coeffs", required=True)
    cx.set_defaults(func=cmd_complexity)

    ge = sub.add_parser("gen", parents=[common], help="generate a seeded instance")
    ge.add_argument(
        "kind",
        choices=("random-quadtuple", "planted-phase", "random-coloring", "lower-bound-coloring", "planted-density-set"),
    )
    ge.add_argument("--r", type=int, help="number of colours")
    ge.add_argument("--min-rank", type=int, help="rejection-sample until the tuple rank reaches this")
    ge.add_argument("--tuple", help="instance file whose tuple to reuse (planted-phase)")
    ge.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        s = resolve_settings(args)
        return args.func(args, s)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except AssertionError as e:
        sys.stderr.write(f"check failed: {e}\n")
        return 1
    except (QuadFourierError, ValueError, KeyError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
