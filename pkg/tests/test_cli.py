from __future__ import annotations

import argparse
import json

import numpy as np
import pytest

from quadfourier import cli
from quadfourier.brauer import Coloring
from quadfourier.complexity2 import brauer_system
from quadfourier.gf import Subspace
from quadfourier.harmonic import DenseFunction, u2_norm
from quadfourier.inverse_lab import QUADRATIC
from quadfourier.suites import CSV_COLUMNS, generate_instance, pinned_iteration_sets

KINDS = ["random-quadtuple", "planted-phase", "random-coloring", "lower-bound-coloring", "planted-density-set"]


def _run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def _json(text: str):
    return json.loads(text)


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_unknown_suite_is_usage_error(capsys, tmp_path):
    code, out = _run(capsys, "verify", "nonsense", "--out", str(tmp_path))
    assert code == 2 and "unknown suite" in out.err


def test_bad_flag_exits_two():
    with pytest.raises(SystemExit) as e:
        cli.main(["verify"])
    assert e.value.code == 2


def test_out_of_range_json_is_usage_error(capsys, tmp_path):
    inst = {"tuple": {"p": 3, "ambient_dim": 1, "polys": [{"B": [[5]], "L": [0], "c": 0}]}}
    code, out = _run(capsys, "levelset", "--instance", _write(tmp_path / "bad.json", inst))
    assert code == 2 and out.err.startswith("error")


def test_missing_file_is_usage_error(capsys, tmp_path):
    code, _ = _run(capsys, "norms", "--instance", str(tmp_path / "absent.json"))
    assert code == 2


def test_verify_writes_reports(capsys, tmp_path):
    code, out = _run(capsys, "verify", "fourier", "--seed", "0", "--deterministic", "--out", str(tmp_path))
    assert code == 0 and "0 failed" in out.out
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert all(line.endswith(",0") for line in lines[1:])
    rows = _json((tmp_path / "report.json").read_text())
    assert len(rows) == len(lines) - 1 and rows[0]["suite"] == "fourier"


@pytest.mark.parametrize("kind", KINDS)
def test_gen_every_kind(kind, capsys):
    code, out = _run(capsys, "gen", kind, "--p", "3", "--n", "3", "--seed", "5")
    assert code == 0
    inst = _json(out.out)
    assert inst["kind"] == kind and inst["seed"] == 5
    again = _json(_run(capsys, "gen", kind, "--p", "3", "--n", "3", "--seed", "5")[1].out)
    assert again == inst


def test_gen_random_quadtuple_records_rank():
    inst = generate_instance("random-quadtuple", {"p": 3, "n": 4, "d": 1, "rank": 4}, 7)
    assert inst["rank_certificate"]["rank"] >= 4
    with pytest.raises(ValueError):
        generate_instance("random-quadtuple", {"p": 3, "n": 2, "rank": 4}, 0)


def test_gen_planted_phase_reuses_tuple(capsys, tmp_path):
    base = _json(_run(capsys, "gen", "random-quadtuple", "--n", "3", "--min-rank", "3", "--seed", "1")[1].out)
    path = _write(tmp_path / "q.json", base)
    inst = _json(_run(capsys, "gen", "planted-phase", "--tuple", path, "--seed", "2")[1].out)
    assert inst["tuple"] == base["tuple"]


def test_lower_bound_command(capsys):
    code, out = _run(capsys, "brauer", "lower-bound", "--p", "3", "--n", "2", "--r", "2")
    assert code == 0
    res = _json(out.out)
    assert res["monochromatic"] is None
    assert res["coloring"]["colors"] == Coloring.from_dict(res["coloring"]).colors.tolist()


def test_lower_bound_too_few_colours(capsys):
    code, _ = _run(capsys, "brauer", "lower-bound", "--p", "3", "--n", "3", "--r", "2")
    assert code == 2


def test_brauer_check_monochrome(capsys, tmp_path):
    path = _write(tmp_path / "c.json", {"coloring": Coloring.monochrome(3, 2).to_dict()})
    code, out = _run(capsys, "brauer", "check", "--coloring", path)
    res = _json(out.out)
    assert code == 0 and res["monochromatic"]
    assert res["witness"]["x"] == [0, 1] and res["witness"]["y"] == [1, 0]


def test_brauer_count_command(capsys, tmp_path):
    inst = generate_instance("random-quadtuple", {"p": 3, "n": 4, "d": 1, "rank": 4}, 7)
    code, out = _run(capsys, "brauer", "count", "--instance", _write(tmp_path / "q.json", inst))
    res = _json(out.out)
    assert code == 0 and res["within_constant"]
    assert res["normalized_error"] <= res["constant"]


def _ns(**kw):
    return argparse.Namespace(**kw)


def test_settings_precedence(tmp_path):
    cfg = _write(tmp_path / "cfg.json", {"p": 7, "n": 2, "seed": 11, "budgets": {"level_set": 50}})
    s = cli.resolve_settings(_ns(config=cfg), {})
    assert (s["p"], s["n"], s["seed"], s["budgets"]) == (7, 2, 11, {"level_set": 50})
    s = cli.resolve_settings(_ns(config=cfg), {"QF_P": "5", "QF_DETERMINISTIC": "yes"})
    assert s["p"] == 5 and s["n"] == 2 and s["deterministic"]
    s = cli.resolve_settings(_ns(config=cfg, p=3), {"QF_P": "5"})
    assert s["p"] == 3
    s = cli.resolve_settings(_ns(), {})
    assert s["p"] == cli.DEFAULTS["p"] and s["budgets"] == {}


def test_settings_errors(tmp_path):
    with pytest.raises(cli.UsageError):
        cli.resolve_settings(_ns(), {"QF_P": "three"})
    with pytest.raises(cli.UsageError):
        cli.resolve_settings(_ns(config=_write(tmp_path / "c.json", {"colour": 1})), {})
    with pytest.raises(cli.UsageError):
        cli.resolve_settings(_ns(), {"QF_DETERMINISTIC": "maybe"})


def test_env_reaches_commands(capsys, monkeypatch):
    monkeypatch.setenv("QF_N", "2")
    code, out = _run(capsys, "gen", "lower-bound-coloring", "--r", "2")
    assert code == 0 and _json(out.out)["coloring"]["n"] == 2


def test_bad_p_is_usage_error(capsys):
    code, _ = _run(capsys, "verify", "fourier", "--p", "4")
    assert code == 2


def _sets_file(tmp_path):
    sets = [A.tolist() for A in pinned_iteration_sets()]
    return _write(tmp_path / "sets.json", {"p": 3, "n": 3, "sets": sets})


def test_increment_run_and_verify(capsys, tmp_path):
    out_dir = tmp_path / "out"
    code, out = _run(capsys, "increment", "run", "--sets", _sets_file(tmp_path), "--rank", "2", "--out", str(out_dir))
    assert code == 0
    res = _json(out.out)
    assert res["status"] == "certified"
    code, out = _run(capsys, "increment", "verify-cert", "--cert", str(out_dir / "increment.json"))
    assert code == 0 and _json(out.out)["valid"]


def test_verify_cert_rejects_tampering(capsys, tmp_path):
    out_dir = tmp_path / "out"
    _run(capsys, "increment", "run", "--sets", _sets_file(tmp_path), "--rank", "2", "--out", str(out_dir))
    data = _json((out_dir / "increment.json").read_text())
    data["certificate"]["sets"][0] = []
    code, out = _run(capsys, "increment", "verify-cert", "--cert", _write(tmp_path / "bad.json", data))
    assert code == 1 and not _json(out.out)["valid"]


def test_increment_stage_limit(capsys, tmp_path):
    code, out = _run(capsys, "increment", "run", "--sets", _sets_file(tmp_path), "--max-stages", "0")
    assert code == 1 and _json(out.out)["status"] == "increment-not-found"


def test_complexity_check_brauer(capsys, tmp_path):
    path = _write(tmp_path / "s.json", brauer_system(3).to_dict())
    code, out = _run(capsys, "complexity", "check", "--system", path)
    res = _json(out.out)
    assert code == 0
    assert res == {"translation_invariant": False, "complexity_le_2": True}


def test_complexity_count(capsys, tmp_path):
    H = Subspace.full(5, 1)
    f = DenseFunction(H, np.ones(5))
    path = _write(tmp_path / "w.json", {"function": f.to_dict()})
    code, out = _run(capsys, "complexity", "count", "--weights", path, "--coeffs", "1,2,3")
    res = _json(out.out)
    assert code == 0 and res["coefficients"] == [1, 2, 3, 4]
    assert res["fourier"] == pytest.approx(125) and res["brute"] == pytest.approx(125)
    code, _ = _run(capsys, "complexity", "count", "--weights", path, "--coeffs", "1,x")
    assert code == 2


def test_levelset_command(capsys, tmp_path):
    inst = generate_instance("random-quadtuple", {"p": 3, "n": 4, "d": 1, "rank": 4}, 7)
    code, out = _run(capsys, "levelset", "--instance", _write(tmp_path / "q.json", inst), "--points")
    res = _json(out.out)
    assert code == 0 and res["fiber_sizes_sum"] == 81
    assert len(res["points"]) == res["size"]
    code, _ = _run(capsys, "levelset", "--instance", str(tmp_path / "q.json"), "--a", "0,0")
    assert code == 2


def test_norms_command(capsys, tmp_path):
    rng = np.random.default_rng(0)
    f = DenseFunction(Subspace.full(3, 2), rng.random(9))
    code, out = _run(capsys, "norms", "--instance", _write(tmp_path / "f.json", {"function": f.to_dict()}))
    res = _json(out.out)
    assert code == 0 and res["size"] == 9
    assert res["l2_squared"] == pytest.approx(res["parseval_rhs"])
    assert res["u2"] == pytest.approx(u2_norm(f, "direct"))


def test_inverse_search_command(capsys, tmp_path):
    inst = generate_instance("planted-phase", {"p": 3, "n": 3, "d": 1, "rank": 3}, 3)
    code, out = _run(capsys, "inverse", "search", "--instance", _write(tmp_path / "i.json", inst))
    res = _json(out.out)
    assert code == 0 and res["branch"] == QUADRATIC


def test_partition_command(capsys, tmp_path):
    inst = generate_instance("planted-density-set", {"p": 3, "n": 3, "d": 1}, 4)
    data = {"tuple": inst["tuple"], "sets": [inst["set"]]}
    code, out = _run(capsys, "partition", "--instance", _write(tmp_path / "p.json", data), "--rank", "2")
    res = _json(out.out)
    assert code == 0
    assert res["stats"]["density_after"][0] >= res["stats"]["density_before"][0]
