from __future__ import annotations

import numpy as np
import pytest

from conftest import uniform_instance
from vco.compare import (CSV_HEADER, FaultModel, Workload, compare, csv_text, random_configuration,
                         tiered_instance)
from vco.model import validate_configuration


def test_random_configuration_examples():
    inst4 = uniform_instance(4)
    cfg = random_configuration(inst4, 0)
    assert len(cfg.leaders()) == 1 and len(cfg.followers(cfg.leaders()[0])) == 3
    inst9 = uniform_instance(9)
    sizes = sorted(len(f) + 1 for f in random_configuration(inst9, 1).committees().values())
    assert sizes == [4, 5]


def test_random_configuration_always_valid_n40():
    inst = uniform_instance(40)
    for seed in range(1000):
        assert validate_configuration(inst, random_configuration(inst, seed)) == []


def test_random_configuration_is_seeded():
    inst = uniform_instance(12)
    assert random_configuration(inst, 5) == random_configuration(inst, 5)


def test_row_and_aggregate_counts():
    inst = uniform_instance(8)
    table = compare(inst, ["vco", "random"], Workload(rate=10, requests=20), FaultModel(), range(10))
    assert len(table.rows) == 20 and len(table.aggregates) == 2
    assert [(r.strategy, r.seed) for r in table.rows] == sorted((r.strategy, r.seed) for r in table.rows)


def test_uniform_instance_strategies_tie():
    inst = uniform_instance(8)
    table = compare(inst, ["vco", "random"], Workload(rate=10, requests=40), FaultModel(), range(5), jitter=0.0)
    assert table.aggregate("vco").latency_mean == table.aggregate("random").latency_mean == 13.0
    noisy = compare(inst, ["vco", "random"], Workload(rate=10, requests=40), FaultModel(), range(5), jitter=0.1)
    assert abs(noisy.aggregate("vco").latency_mean - noisy.aggregate("random").latency_mean) < 13.0 * 0.1 * 3


def test_row_errors_do_not_abort_table():
    inst = uniform_instance(4)
    faults = FaultModel(crashes=3, target="any", window=(10.0, 20.0))
    table = compare(inst, ["vco", "random"], Workload(rate=10, requests=10), faults, [0, 1])
    assert all(r.error.startswith("LivenessLost") for r in table.rows)
    assert table.aggregate("vco").failed == 2
    assert ',"LivenessLost: committee' in csv_text(table)


def test_csv_is_deterministic():
    inst = tiered_instance(0, n=12, regions=3, flaky=2)
    args = (inst, ["vco", "random"], Workload(rate=5, requests=30), FaultModel(crashes=1), [0, 1, 2])
    a, b = csv_text(compare(*args)), csv_text(compare(*args))
    assert a == b
    assert a.splitlines()[0].split(",") == CSV_HEADER
    assert len(a.splitlines()) == 7


def test_fault_model_schedule():
    inst = tiered_instance(1)
    cfg = random_configuration(inst, 1)
    sched = FaultModel(crashes=2, window=(50.0, 60.0)).schedule(inst, cfg, 3)
    assert len(sched) == 2 and all(50.0 <= f.time <= 60.0 for f in sched)
    assert all(cfg.is_leader(f.node) for f in sched)
    flaky = FaultModel(crashes=3, target="flaky").schedule(inst, cfg, 3)
    assert len({f.node for f in flaky}) == 3
    with pytest.raises(ValueError):
        FaultModel(target="nobody")


def test_tiered_instance_shape():
    inst = tiered_instance(2)
    assert inst.n == 40
    assert np.allclose(inst.D, inst.D.T)
    off = inst.D[~np.eye(40, dtype=bool)]
    assert np.all(((off >= 1) & (off <= 5)) | ((off >= 20) & (off <= 50)))
    assert sorted(np.unique(inst.f)) == [0.01, 0.3] and np.count_nonzero(inst.f == 0.3) == 8
