"""Seeded verification suites, instance generators and report files.

Random instances come from numpy's ``Generator`` over the PCG64 bit
generator. Instance ``i`` of suite ``s`` is drawn from
``SeedSequence([seed, crc32(s), i])``, so results do not depend on how
instances are scheduled across threads.
"""

from __future__ import annotations

import csv
import io as _stdio
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import brauer, complexity2, harmonic, increment, inverse_lab, quadsets, records
from . import budget as _budget
from .errors import BadParams, BudgetExceeded, UnknownSuite
from .gf import Subspace, all_points, random_subspace
from .harmonic import DenseFunction
from .io import dumps, jsonable
from .quadsets import QuadraticPoly, QuadTuple

SUITES = ("fourier", "u2u3", "section3", "brauer", "increment", "inverse", "appendix")
CSV_COLUMNS = ("suite", "lemma_anchor", "instance_id", "lhs", "rhs", "pass", "ratio", "wall_time_ms")


@dataclass
class RunConfig:
    p: int = 3
    n: int = 3
    d: int = 1
    rank: int = 4
    seed: int = 0
    threads: int = 1
    deterministic: bool = False
    budgets: dict = field(default_factory=dict)
    tolerance: float = 1e-9
    out: str | None = None

    def __post_init__(self):
        if self.p not in (3, 5, 7):
            raise BadParams(f"p must be 3, 5 or 7, got {self.p}")
        if self.threads < 1:
            raise BadParams("threads must be positive")
        for k, v in self.budgets.items():
            if k not in _budget.DEFAULTS:
                raise BadParams(f"unknown budget {k!r}")
            if v <= 0:
                raise BadParams(f"budget {k} must be positive")

    def rng(self, suite: str, i: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, zlib.crc32(suite.encode()), i]))


@dataclass
class ReportRecord:
    suite: str
    lemma_anchor: str
    instance_id: str
    lhs: str
    rhs: str
    passed: object  # True / False / "report-only" / "vacuous" / ...
    ratio: str = ""
    wall_time_ms: int = 0

    def row(self) -> list:
        p = self.passed
        return [
            self.suite,
            self.lemma_anchor,
            self.instance_id,
            self.lhs,
            self.rhs,
            str(p).lower() if isinstance(p, bool) else p,
            self.ratio,
            self.wall_time_ms,
        ]

    def to_dict(self) -> dict:
        return dict(zip(CSV_COLUMNS, self.row()))

    @property
    def failed(self) -> bool:
        return self.passed is False


def fmt(x) -> str:
    """Decimal string with 12 significant digits."""
    if x is None:
        return ""
    if isinstance(x, Fraction):
        x = float(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return f"{x:.12g}"


def _from_check(suite: str, inst: str, c: records.Check) -> ReportRecord:
    if c.status in (records.PASS, records.FAIL):
        passed = c.status == records.PASS
    elif c.status == records.VACUOUS:
        passed = True
    else:
        passed = c.status
    return ReportRecord(suite, c.lemma, inst, fmt(c.lhs), fmt(c.rhs), passed, fmt(c.ratio))


# ----------------------------------------------------------------- instances


def generate_instance(kind: str, params: dict, seed: int) -> dict:
    """Deterministic instance of the given kind, with ground-truth metadata."""
    rng = np.random.default_rng(seed)
    p = int(params.get("p", 3))
    n = int(params.get("n", 3))
    if p not in (3, 5, 7):
        raise BadParams(f"unsupported p={p}")
    if kind == "random-quadtuple":
        d = int(params.get("d", 1))
        R = int(params.get("rank", 0))
        if R > n:
            raise BadParams("rank cannot exceed n")
        Q = quadsets.random_tuple(rng, n, p, d, min_rank=R, homogeneous=bool(params.get("homogeneous", False)))
        cert = quadsets.tuple_rank(Q)
        return {"kind": kind, "seed": seed, "tuple": Q.to_dict(), "rank_certificate": _cert(cert)}
    if kind == "planted-phase":
        if "tuple" in params:
            from .io import tuple_from_dict

            Q = tuple_from_dict(params["tuple"])
        else:
            Q = quadsets.random_tuple(rng, n, p, int(params.get("d", 1)), min_rank=int(params.get("rank", 0)))
        q_star = quadsets.random_quadratic(rng, Q.n, Q.p)
        f = inverse_lab.planted_phase(Q, q_star)
        return {
            "kind": kind,
            "seed": seed,
            "tuple": Q.to_dict(),
            "function": f.to_dict(),
            "metadata": {"q_star": q_star.to_dict()},
        }
    if kind == "random-coloring":
        r = int(params.get("r", 2))
        c = brauer.Coloring.random(rng, p, n, r)
        return {"kind": kind, "seed": seed, "coloring": c.to_dict()}
    if kind == "lower-bound-coloring":
        r = int(params.get("r", n))
        c = brauer.lower_bound_coloring(p, n, r)
        return {"kind": kind, "seed": seed, "coloring": c.to_dict()}
    if kind == "planted-density-set":
        d = int(params.get("d", 1))
        Q = quadsets.random_tuple(rng, n, p, d, homogeneous=True)
        L = rng.integers(0, p, size=(d, n))
        a = rng.integers(0, p, size=d)
        pts = all_points(n, p)
        cell = np.all((Q.eval(pts) + pts @ L.T) % p == a, axis=1) if d else np.ones(len(pts), dtype=bool)
        return {
            "kind": kind,
            "seed": seed,
            "tuple": Q.to_dict(),
            "set": pts[cell].tolist(),
            "metadata": {"L": L.tolist(), "a": a.tolist()},
        }
    raise BadParams(f"unknown instance kind {kind!r}")


def _cert(cert) -> dict:
    return {
        "rank": "inf" if cert.rank == math.inf else int(cert.rank),
        "lambda": None if cert.minimizing_lambda is None else list(cert.minimizing_lambda),
    }


# ------------------------------------------------------------------- suites


def _fourier(cfg: RunConfig, i: int):
    rng = cfg.rng("fourier", i)
    H = Subspace.full(cfg.p, cfg.n)
    f = DenseFunction(H, rng.standard_normal(H.size) + 1j * rng.standard_normal(H.size))
    F = harmonic.dft(f)
    lhs = float(np.sum(np.abs(f.values) ** 2))
    rhs = float(np.sum(np.abs(F.values) ** 2)) / H.size
    back = harmonic.inverse_dft(F)
    err = float(np.max(np.abs(back.values - f.values)))
    out = [
        records.hard("parseval", lhs, rhs, abs(lhs - rhs) <= 1e-8 * rhs),
        records.hard("dft-roundtrip", err, 1e-9, err <= 1e-9),
    ]
    if H.size <= _budget.DEFAULTS["u2_direct"]:
        a, b = harmonic.u2_fourth_power(f, "direct"), harmonic.u2_fourth_power(f)
        out.append(records.hard("u2-dual-path", a, b, abs(a - b) <= 1e-8 * b))
    return out


def _high_rank_level(cfg: RunConfig, rng, n: int = 4):
    return quadsets.random_tuple(rng, n, cfg.p, 1, min_rank=n)


def _u2u3(cfg: RunConfig, i: int):
    rng = cfg.rng("u2u3", i)
    Q = _high_rank_level(cfg, rng)
    H = Q.domain
    phi = quadsets.level_set(Q)
    mask = quadsets.level_mask(Q, [0], H.points())
    f = DenseFunction(H, mask * rng.uniform(-1, 1, H.size))
    eps = harmonic.fourier_uniformity(phi, H).epsilon
    thr = math.sqrt(2 * eps * len(phi)) * f.l2_norm()
    K = thr * (1 + rng.uniform(0, 1))
    out = [harmonic.check_spectral_estimate(f, phi, K, eps)]
    q_star = quadsets.random_quadratic(rng, H.ambient_dim, cfg.p)
    g = inverse_lab.planted_phase(Q, q_star)
    eta = inverse_lab.u3_relative_ratio(g, Q)
    out.append(records.hard("u3-quadratic-phase-invariance", eta, 1.0, abs(eta - 1) <= 1e-6))
    return out


def _section3(cfg: RunConfig, i: int):
    rng = cfg.rng("section3", i)
    n = max(cfg.n, 4) if cfg.p == 3 else max(cfg.n, 2)
    out = []
    if i == 0:
        H3 = Subspace.full(cfg.p, 3)
        bad = 0
        for q in increment.homogeneous_forms(H3):
            if not quadsets.check_weyl(q, H3).passed:
                bad += 1
        out.append(records.hard("weyl-bound-all-forms", bad, 0, bad == 0))
        return out
    Q = quadsets.random_tuple(rng, n, cfg.p, 1, min_rank=min(n, 4))
    q = quadsets.random_quadratic(rng, n, cfg.p)
    V = random_subspace(rng, cfg.p, n, int(rng.integers(0, n + 1)))
    x0 = rng.integers(0, cfg.p, size=n)
    out.append(quadsets.check_weyl(q, V.coset(x0)))
    h = rng.integers(0, cfg.p, size=n)
    ell = rng.integers(0, cfg.p, size=n)
    out.append(quadsets.check_coset_uniformity(Q, V, h, ell))
    u = rng.integers(0, cfg.p, size=(1, n))
    v = rng.integers(0, cfg.p, size=(1, n))
    out.append(quadsets.check_differenced_set(Q, u, v))
    if i == 1:
        out.append(quadsets.generic_codim_census(Q, k=1))
        out.append(quadsets.differenced_uniformity_census(Q)["check"])
    return out


def _brauer(cfg: RunConfig, i: int):
    rng = cfg.rng("brauer", i)
    out = []
    if i == 0:
        for n in range(1, 4):
            c = brauer.lower_bound_coloring(3, n, n)
            w = brauer.find_monochromatic_brauer(c)
            out.append(records.hard(f"lower-bound-coloring-n{n}", 0 if w is None else 1, 0, w is None))
        w = brauer.find_monochromatic_brauer(brauer.Coloring.monochrome(3, 2))
        out.append(records.hard("monochrome-witness", 0 if w is None else 1, 1, w is not None))
        return out
    n = 3
    Q = quadsets.random_tuple(rng, n, 3, 1, min_rank=2)
    Z0 = quadsets.level_set(Q.homogeneous())
    A = Z0[rng.random(len(Z0)) < 0.6]
    out.append(brauer.check_counting_lemma(Q, A))
    H = Q.domain
    fs = [DenseFunction(H, (rng.random(H.size) < 0.5).astype(np.int64)) for _ in range(4)]
    fast = brauer.count_brauer(*fs)
    slow = _brauer_oracle(*fs)
    out.append(records.hard("brauer-count-oracle", fast, slow, fast == slow))
    return out


def _brauer_oracle(f0, f1, f2, g) -> int:
    H = f0.domain
    p = H.p
    pts = [tuple(x) for x in H.points()]
    pos = {x: j for j, x in enumerate(pts)}
    v = [f.values for f in (f0, f1, f2, g)]
    total = 0
    for xi, x in enumerate(pts):
        for yi, y in enumerate(pts):
            a = pos[tuple((s + t) % p for s, t in zip(x, y))]
            b = pos[tuple((s + 2 * t) % p for s, t in zip(x, y))]
            total += int(v[0][xi]) * int(v[1][a]) * int(v[2][b]) * int(v[3][yi])
    return total


def pinned_iteration_sets(n: int = 3, p: int = 3):
    """Two slabs ``x_1 = 1`` and ``x_1 = 2``; both start dense and non-expanding."""
    P = all_points(n, p)
    return [P[P[:, 0] == 1], P[P[:, 0] == 2]]


def _increment(cfg: RunConfig, i: int):
    rng = cfg.rng("increment", i)
    out = []
    if i == 0:
        sets = pinned_iteration_sets()
        state, res = increment.sparsity_expansion_iterate(sets, Fraction(1, 4), Fraction(1, 4), 2, p=3, n=3)
        v = increment.verify_certificate(res["certificate"])
        out.append(records.hard("iteration-certificate", sum(v["sets"]), len(sets), all(v["sets"]), stages=state.m))
        return out
    n = 3
    d = int(rng.integers(1, 3))
    polys = [quadsets.random_quadratic(rng, n, 3) for _ in range(d)]
    if d == 2:
        polys[1] = QuadraticPoly(polys[0].B, rng.integers(0, 3, n), int(rng.integers(0, 3)), 3)
    Q = QuadTuple(polys)
    P = all_points(n, 3)
    sets = [P[rng.random(len(P)) < 0.4] for _ in range(2)]
    R = 2
    res = increment.high_rank_partition(Q, R, sets)
    before, after = res.stats["density_before"], res.stats["density_after"]
    out.append(records.hard("partition-density", float(min(a - b for a, b in zip(after, before))), 0, all(a >= b for a, b in zip(after, before))))
    out.append(records.hard("partition-codim", res.stats["codim_increase"], (R + len(sets) - 1) * d, res.stats["codim_increase"] <= (R + len(sets) - 1) * d))
    return out


def _inverse(cfg: RunConfig, i: int):
    rng = cfg.rng("inverse", i)
    Q = _high_rank_level(cfg, rng)
    q_star = quadsets.random_quadratic(rng, 4, cfg.p)
    f = inverse_lab.planted_phase(Q, q_star)
    v = inverse_lab.quadratic_witness_search(f, Q)
    return [
        records.hard("inverse-planted-correlation", v.correlation, v.level_size / 2, v.correlation >= v.level_size / 2 - 1e-9),
        records.hard("inverse-planted-eta", v.eta, 1.0, abs(v.eta - 1) <= 1e-6),
    ]


def _appendix(cfg: RunConfig, i: int):
    rng = cfg.rng("appendix", i)
    out = []
    if i == 0:
        for p in (5, 7):
            bad = 0
            for c in complexity2.valid_coefficient_triples(p):
                C = complexity2.ci_coefficients(*c, p)
                bad += sum(C) % p != 0
            out.append(records.hard(f"ci-sum-zero-p{p}", bad, 0, bad == 0))
        out.append(records.hard("brauer-complexity-two", 1, 1, complexity2.complexity_at_most_two(complexity2.brauer_system())))
        out.append(complexity2.kernel_sum_check(complexity2.four_ap_system()))
        return out
    p, n = 5, 1 + (i % 2)
    H = Subspace.full(p, n)
    f = DenseFunction(H, rng.random(H.size))
    C = complexity2.ci_coefficients(1, 2, 3, p)
    a = complexity2.weighted_solution_count(f, C)
    b = complexity2.weighted_solution_count(f, C, "brute")
    out.append(records.hard("polynomial-method-dual-path", a, b, abs(a - b) <= 1e-6 * max(1.0, abs(b))))
    Q = QuadTuple([quadsets.random_quadratic(rng, n, p)])
    B = DenseFunction(H, (rng.random(H.size) < 0.5).astype(np.int64))
    out.append(complexity2.check_von_neumann(B, Q, 1, 2, 3))
    return out


BATTERIES = {
    "fourier": (_fourier, 20),
    "u2u3": (_u2u3, 10),
    "section3": (_section3, 12),
    "brauer": (_brauer, 6),
    "increment": (_increment, 6),
    "inverse": (_inverse, 3),
    "appendix": (_appendix, 8),
}


def _run_one(args):
    suite, cfg, i = args
    fn = BATTERIES[suite][0]
    t0 = time.perf_counter()
    inst = f"{suite}-{cfg.seed}-{i}"
    try:
        checks = fn(cfg, i)
        recs = [_from_check(suite, inst, c) for c in checks]
    except BudgetExceeded as e:
        recs = [ReportRecord(suite, "budget", inst, fmt(e.size), fmt(e.limit), "budget-exceeded")]
    except AssertionError as e:
        recs = [ReportRecord(suite, f"assertion: {e}", inst, "", "", False)]
    ms = 0 if cfg.deterministic else int(round((time.perf_counter() - t0) * 1000))
    for r in recs:
        r.wall_time_ms = ms
    return recs


def run_suite(name: str, config: RunConfig) -> list[ReportRecord]:
    """Run one suite (or ``"all"``) and return its records in a fixed order."""
    if name == "all":
        names = list(SUITES)
    elif name in BATTERIES:
        names = [name]
    else:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    saved = dict(_budget.DEFAULTS)
    _budget.DEFAULTS.update(config.budgets)
    try:
        jobs = [(s, config, i) for s in names for i in range(BATTERIES[s][1])]
        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as ex:
                chunks = list(ex.map(_run_one, jobs))
        else:
            chunks = [_run_one(j) for j in jobs]
    finally:
        _budget.DEFAULTS.clear()
        _budget.DEFAULTS.update(saved)
    return [r for c in chunks for r in c]


def render_csv(recs: list[ReportRecord]) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in recs:
        w.writerow(r.row())
    return buf.getvalue()


def write_reports(recs: list[ReportRecord], out_dir, stem: str = "report") -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    c = out / f"{stem}.csv"
    j = out / f"{stem}.json"
    c.write_text(render_csv(recs))
    j.write_text(dumps([r.to_dict() for r in recs]))
    return c, j


__all__ = [
    "RunConfig",
    "ReportRecord",
    "run_suite",
    "generate_instance",
    "write_reports",
    "render_csv",
    "jsonable",
]
