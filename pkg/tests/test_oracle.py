from __future__ import annotations

import numpy as np
import pytest

from conftest import random_instance, uniform_instance
from vco.model import Instance, total_objective, validate_configuration
from vco.oracle import (SizeGuardExceeded, count_configurations, enumerate_configurations, joint_best_plan,
                        oracle_solve_normal, oracle_solve_vco)


@pytest.mark.parametrize("n, expected", [(4, 4), (5, 5), (8, 568)])
def test_enumeration_counts_examples(n, expected):
    assert sum(1 for _ in enumerate_configurations(uniform_instance(n))) == expected


@pytest.mark.parametrize("n", range(4, 10))
def test_enumeration_matches_closed_form_and_is_valid(n):
    inst = uniform_instance(n)
    cfgs = list(enumerate_configurations(inst))
    assert len(cfgs) == count_configurations(n, 4)
    assert len(set(cfgs)) == len(cfgs)
    assert all(validate_configuration(inst, c) == [] for c in cfgs)


def test_count_by_independent_recount():
    # n = 9 with blocks of at least 4: {9} or {4, 5}
    from math import comb
    assert count_configurations(9, 4) == 9 + comb(9, 4) * 4 * 5


def test_size_guard():
    with pytest.raises(SizeGuardExceeded):
        next(enumerate_configurations(uniform_instance(13)))
    with pytest.raises(SizeGuardExceeded):
        oracle_solve_vco(uniform_instance(6), size_guard=5)


def test_oracle_normal_examples(tiny8):
    cfg, value = oracle_solve_normal(tiny8)
    assert value == 12.0 and cfg.leaders() == [0]
    cfg, value = oracle_solve_normal(uniform_instance(4, d=2.0, dv=5.0))
    assert value == 3 * 2.0 + 5.0 and cfg.leaders() == [0]


def test_oracle_normal_picks_cheap_verifier_link():
    D = np.ones((6, 6))
    np.fill_diagonal(D, 0.0)
    dv = np.full(6, 100.0)
    dv[4] = 0.0
    cfg, value = oracle_solve_normal(Instance(D=D, dv=dv, f=np.zeros(6)))
    assert cfg.leaders() == [4] and value == 5.0


def test_oracle_vco_examples(tiny8):
    res = oracle_solve_vco(tiny8)
    assert res.best_value == pytest.approx(11.9, abs=1e-12)
    assert res.best_cfg.leaders() == [0] and res.best_plan.backup_of == {0: 1}
    assert res.enumerated_count == 568
    assert res.best_value == total_objective(tiny8, res.best_cfg, res.best_plan)
    res4 = oracle_solve_vco(uniform_instance(4, f=0.5))
    assert res4.best_value == pytest.approx(7.5, abs=1e-12)


def test_oracle_vco_without_failures_matches_normal():
    rng = np.random.default_rng(3)
    for _ in range(5):
        inst = random_instance(rng, int(rng.integers(4, 9)))
        inst = inst.with_failure_probs(np.zeros(inst.n))
        assert oracle_solve_vco(inst).best_value == oracle_solve_normal(inst)[1]


def test_per_leader_plan_equals_joint_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(25):
        inst = random_instance(rng, int(rng.integers(4, 9)))
        cfgs = list(enumerate_configurations(inst))
        cfg = cfgs[rng.integers(len(cfgs))]
        from vco.oracle import best_backup
        from vco.model import BackupPlan
        per_leader = BackupPlan({i: best_backup(inst, f)[0] for i, f in cfg.committees().items()})
        joint, value = joint_best_plan(inst, cfg)
        assert total_objective(inst, cfg, per_leader) == pytest.approx(value, abs=1e-9)
        assert per_leader == joint
