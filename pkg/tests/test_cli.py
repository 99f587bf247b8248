from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import random_instance, uniform_instance
from vco import io as vio
from vco.cli import main
from vco.model import BackupPlan, Configuration


@pytest.fixture
def tiny8_path(tmp_path):
    path = tmp_path / "tiny8.json"
    vio.save_instance(uniform_instance(8), path)
    return path


def _lines(capsys):
    return capsys.readouterr().out.strip().splitlines()


def test_solve_writes_document(tiny8_path, tmp_path, capsys):
    out = tmp_path / "cfg.json"
    assert main(["solve", str(tiny8_path), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["objective_value"] == pytest.approx(11.9)
    assert doc["leader_of"] == [0] * 8 and doc["backups"] == {"0": 1}
    assert doc["stats"]["certified"] is True
    assert _lines(capsys)[0] == "value=11.9"


def test_solve_normal_mode(tiny8_path, capsys):
    assert main(["solve", str(tiny8_path), "--mode", "normal"]) == 0
    assert _lines(capsys)[0] == "value=12.0"


def test_solve_malformed_and_infeasible(tmp_path, tiny8_path):
    bad = tmp_path / "bad.json"
    bad.write_text(tiny8_path.read_text()[:40])
    assert main(["solve", str(bad)]) == 2
    assert main(["solve", str(tmp_path / "missing.json")]) == 2
    small = tmp_path / "n3.json"
    vio.save_instance(uniform_instance(3), small)
    assert main(["solve", str(small)]) == 3


def test_solve_iteration_limit_still_writes(tmp_path, monkeypatch):
    inst = random_instance(np.random.default_rng(3), 9)
    path = tmp_path / "i.json"
    vio.save_instance(inst, path)
    import vco.cli as cli
    real = cli.solve_vco
    monkeypatch.setattr(cli, "solve_vco", lambda inst, tol: real(inst, tol=tol, max_iterations=1))
    out = tmp_path / "cfg.json"
    assert main(["solve", str(path), "--out", str(out)]) == 4
    assert json.loads(out.read_text())["stats"]["certified"] is False


def test_oracle_command(tiny8_path, tmp_path, capsys):
    assert main(["oracle", str(tiny8_path)]) == 0
    assert _lines(capsys)[0] == "value=11.9"
    big = tmp_path / "n13.json"
    vio.save_instance(uniform_instance(13), big)
    assert main(["oracle", str(big)]) == 5
    zero = tmp_path / "zero.json"
    vio.save_instance(uniform_instance(8, f=0.0), zero)
    assert main(["oracle", str(zero)]) == 0
    assert _lines(capsys)[0] == "value=12.0"
    assert main(["--size-guard", "4", "oracle", str(tiny8_path)]) == 5


def test_replay_command(tiny8_path, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    vio.save_configuration(cfg, Configuration((0,) * 8), BackupPlan({0: 1}))
    empty = tmp_path / "empty.json"
    vio.save_schedule(empty, [])
    assert main(["replay", str(tiny8_path), str(cfg), str(empty)]) == 0
    assert _lines(capsys)[-1] == "leader_of=0,0,0,0,0,0,0,0"
    one = tmp_path / "one.json"
    vio.save_schedule(one, [(1, 0)])
    assert main(["replay", str(tiny8_path), str(cfg), str(one)]) == 0
    assert _lines(capsys)[1] == "1,0,1,11.0,"
    drain = tmp_path / "drain.json"
    vio.save_schedule(drain, [(v + 1, v) for v in range(8)])
    assert main(["replay", str(tiny8_path), str(cfg), str(drain)]) == 6
    garbled = tmp_path / "garbled.json"
    garbled.write_text('{"schedule": [[1]]}')
    assert main(["replay", str(tiny8_path), str(cfg), str(garbled)]) == 2


def test_bench_command(tiny8_path, tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", str(tiny8_path), "--strategies", "vco,random", "--seeds", "0,1,2",
                 "--requests", "20", "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert len(rows) == 7
    first = out.read_text()
    assert main(["--jitter", "0.1", "bench", str(tiny8_path), "--seeds", "0-2", "--requests", "20",
                 "--out", str(out)]) == 0
    assert out.read_text() == first
    agg = [l for l in _lines(capsys) if l.startswith("aggregate")]
    assert len(agg) == 4
    assert main(["bench", str(tmp_path / "nope.json"), "--out", str(out)]) == 2
    assert main(["bench", str(tiny8_path), "--strategies", "magic", "--out", str(out)]) == 2


def test_validate_command(tiny8_path, tmp_path, capsys):
    assert main(["validate", str(tiny8_path)]) == 0
    good = tmp_path / "good.json"
    vio.save_configuration(good, Configuration((0,) * 8), BackupPlan({0: 1}))
    assert main(["validate", str(tiny8_path), str(good)]) == 0
    bad = tmp_path / "bad.json"
    vio.save_configuration(bad, Configuration((0, 0, 0, 3, 3, 3, 3, 3)))
    assert main(["validate", str(tiny8_path), str(bad)]) == 1
    assert "CommitteeTooSmall" in capsys.readouterr().out


def test_global_flags_in_either_position(tiny8_path, capsys):
    assert main(["--tol", "1e-5", "solve", str(tiny8_path)]) == 0
    assert main(["solve", str(tiny8_path), "--tol", "1e-5"]) == 0


def test_documents_round_trip(tmp_path):
    inst = random_instance(np.random.default_rng(0), 6)
    path = tmp_path / "i.json"
    vio.save_instance(inst, path)
    back = vio.load_instance(path)
    assert np.array_equal(back.D, inst.D) and np.array_equal(back.f, inst.f) and back.f_min == inst.f_min
    cfg_path = tmp_path / "c.json"
    stats = {"iterations": 3, "gap": 0.0}
    vio.save_configuration(cfg_path, Configuration((0, 0, 0, 3, 3, 3)), BackupPlan({0: 1, 3: 4}), 12.5, stats)
    cfg, plan, value, got = vio.load_configuration(cfg_path)
    assert cfg == Configuration((0, 0, 0, 3, 3, 3)) and plan == BackupPlan({0: 1, 3: 4})
    assert value == 12.5 and got == stats
    doc = json.loads(cfg_path.read_text())
    vio.save_configuration(cfg_path, cfg, plan, value, got)
    assert json.loads(cfg_path.read_text()) == doc


def test_instance_document_checks(tmp_path):
    base = vio.instance_to_dict(uniform_instance(4))
    for mutate in (lambda d: d.pop("D"), lambda d: d.update(dv=[1.0]), lambda d: d.update(n=0),
                   lambda d: d.update(schema_version=99), lambda d: d.update(f=[2.0] * 4)):
        doc = json.loads(json.dumps(base))
        mutate(doc)
        with pytest.raises(vio.DocumentError):
            vio.instance_from_dict(doc)
    doc = json.loads(json.dumps(base))
    doc.pop("dv_rev")
    assert np.array_equal(vio.instance_from_dict(doc).dv_rev, vio.instance_from_dict(doc).dv)
