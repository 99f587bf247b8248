from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import asym_instance, random_instance, uniform_instance
from vco.model import (BackupPlan, Configuration, ConfigurationError, Instance, InstanceError, NotALeader,
                       ScenarioSet, ViolationKind, check_binary_constraints, exd, expected_vc_delay_Q,
                       extra_delay_f, normal_objective, saved_delay_g, total_objective, validate_backup_plan,
                       validate_configuration)
from vco.oracle import best_backup, enumerate_configurations


def test_normal_objective_tiny8(tiny8, single8, split8):
    assert normal_objective(tiny8, single8) == 12.0
    assert normal_objective(tiny8, split8) == 16.0


def test_normal_objective_zero_delays():
    inst = uniform_instance(8, d=0.0, dv=0.0)
    assert normal_objective(inst, Configuration((0, 0, 0, 0, 4, 4, 4, 4))) == 0.0


def test_extra_delay_examples(asym):
    cfg = Configuration((0, 0, 0, 0))
    assert extra_delay_f(asym, cfg, BackupPlan({0: 1}), 0) == 15.0
    assert extra_delay_f(asym, cfg, BackupPlan({0: 3}), 0) == 11.0


def test_extra_delay_tiny8_all_candidates_tie(tiny8, single8):
    for k in range(1, 8):
        assert extra_delay_f(tiny8, single8, BackupPlan({0: k}), 0) == 11.0


def test_extra_delay_rejects_non_leader(tiny8, single8):
    with pytest.raises(NotALeader):
        extra_delay_f(tiny8, single8, BackupPlan({0: 1}), 3)


def test_saved_delay_examples(tiny8, single8):
    D = np.zeros((3, 3))
    D[0, 1], D[0, 2] = 1.0, 4.0
    inst = Instance(D=D, dv=np.array([8.0, 0.0, 0.0]), f=np.zeros(3))
    assert saved_delay_g(inst, Configuration((0, 0, 0)), 0) == 13.0
    assert saved_delay_g(tiny8, single8, 0) == 12.0
    zero = uniform_instance(8, d=0.0, dv=0.0)
    assert saved_delay_g(zero, single8, 0) == 0.0
    with pytest.raises(NotALeader):
        saved_delay_g(tiny8, single8, 5)


def test_expected_q_examples(tiny8, single8, split8):
    assert expected_vc_delay_Q(tiny8.with_failure_probs(np.zeros(8)), single8, BackupPlan({0: 1})) == 0.0
    assert expected_vc_delay_Q(tiny8, single8, BackupPlan({0: 1})) == pytest.approx(-0.1, abs=1e-12)
    assert expected_vc_delay_Q(tiny8, split8, BackupPlan({0: 1, 4: 5})) == pytest.approx(-0.2, abs=1e-12)


def test_total_objective_examples(tiny8, single8, split8):
    assert total_objective(tiny8, single8, BackupPlan({0: 1})) == pytest.approx(11.9, abs=1e-12)
    assert total_objective(tiny8, split8, BackupPlan({0: 1, 4: 5})) == pytest.approx(15.8, abs=1e-12)
    zero_f = tiny8.with_failure_probs(np.zeros(8))
    assert total_objective(zero_f, split8, BackupPlan({0: 1, 4: 5})) == normal_objective(zero_f, split8)


def test_validate_configuration_examples(tiny8, single8):
    small = Configuration((0, 0, 0, 3, 3, 3, 3, 3))
    kinds = [v.kind for v in validate_configuration(tiny8, small)]
    assert kinds == [ViolationKind.COMMITTEE_TOO_SMALL]
    bad_target = Configuration((1, 1, 5, 1, 1, 1, 1, 1))
    kinds = [v.kind for v in validate_configuration(tiny8, bad_target)]
    assert ViolationKind.FOLLOWER_AS_LEADER_TARGET in kinds
    assert validate_configuration(tiny8, single8) == []
    missing = Configuration((0, 0, 0, 0, 0, 0, 0, -1))
    assert [v.kind for v in validate_configuration(tiny8, missing)] == [ViolationKind.ASSIGNMENT_MISSING]


def test_validate_backup_plan_examples(tiny8, single8, split8):
    assert [v.kind for v in validate_backup_plan(tiny8, single8, BackupPlan({}))] == [ViolationKind.MISSING_BACKUP]
    kinds = [v.kind for v in validate_backup_plan(tiny8, split8, BackupPlan({0: 5, 4: 5}))]
    assert kinds == [ViolationKind.BACKUP_NOT_FOLLOWER]
    kinds = [v.kind for v in validate_backup_plan(tiny8, single8, BackupPlan({0: 1, 3: 2}))]
    assert kinds == [ViolationKind.ORPHAN_BACKUP]
    assert validate_backup_plan(tiny8, single8, BackupPlan({0: 1})) == []


def test_evaluators_reject_invalid_configuration(tiny8):
    with pytest.raises(ConfigurationError):
        normal_objective(tiny8, Configuration((0, 0, 0, 3, 3, 3, 3, 3)))


def test_instance_validation():
    with pytest.raises(InstanceError):
        Instance(D=np.ones((3, 3)), dv=np.zeros(3), f=np.zeros(3))
    with pytest.raises(InstanceError):
        Instance(D=np.zeros((3, 3)), dv=np.zeros(3), f=np.full(3, 1.5))
    with pytest.raises(InstanceError):
        Instance(D=np.zeros((3, 3)), dv=np.array([0.0, -1.0, 0.0]), f=np.zeros(3))
    with pytest.raises(InstanceError):
        Instance(D=np.full((2, 2), np.nan), dv=np.zeros(2), f=np.zeros(2))
    inst = uniform_instance(4)
    assert np.array_equal(inst.dv_rev, inst.dv)
    with pytest.raises(ValueError):
        inst.D[0, 1] = 3.0


def test_scenario_weights_equal_failure_probabilities(tiny8):
    s = ScenarioSet.from_instance(tiny8)
    assert len(s) == 9
    assert all(s.weight(i) == 0.1 for i in range(8))


def _random_plan(cfg, rng):
    return BackupPlan({i: int(rng.choice(f)) for i, f in cfg.committees().items()})


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(4, 9))
def test_total_is_normal_plus_q_exactly(seed, n):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n)
    cfgs = list(enumerate_configurations(inst))
    cfg = cfgs[rng.integers(len(cfgs))]
    plan = _random_plan(cfg, rng)
    assert total_objective(inst, cfg, plan) == normal_objective(inst, cfg) + expected_vc_delay_Q(inst, cfg, plan)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), lam=st.sampled_from([0.0, 0.5, 2.0, 3.0]))
def test_q_scales_linearly_with_weights(seed, lam):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 8, f_max=0.3)
    cfg = Configuration((0, 0, 0, 0, 4, 4, 4, 4))
    plan = _random_plan(cfg, rng)
    scaled = inst.with_failure_probs(inst.f * lam)
    assert expected_vc_delay_Q(scaled, cfg, plan) == pytest.approx(lam * expected_vc_delay_Q(inst, cfg, plan),
                                                                    rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_total_as_weighted_committee_mix(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 9)
    cfg = Configuration((0, 0, 0, 0, 4, 4, 4, 4, 4))
    plan = _random_plan(cfg, rng)
    mix = 0.0
    for i, fol in cfg.committees().items():
        p = inst.f[i]
        mix += (1 - p) * saved_delay_g(inst, cfg, i) + p * exd(inst, plan.backup_of[i], fol)
    assert total_objective(inst, cfg, plan) == pytest.approx(mix, rel=1e-12)


def _all_leader_maps(n):
    return itertools.product(range(-1, n), repeat=n)


def test_validation_agrees_with_binary_formulas_exhaustively_n5():
    inst = uniform_instance(5)
    for leader_of in _all_leader_maps(5):
        cfg = Configuration(leader_of)
        ok = validate_configuration(inst, cfg) == []
        assert ok == (check_binary_constraints(inst, cfg.x_matrix()) == [])


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_validation_agrees_with_binary_formulas_random(data):
    n = data.draw(st.integers(4, 8))
    inst = uniform_instance(n)
    leader_of = tuple(data.draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n)))
    cfg = Configuration(leader_of)
    ok = validate_configuration(inst, cfg) == []
    assert ok == (check_binary_constraints(inst, cfg.x_matrix()) == [])
    if ok:
        committees = cfg.committees()
        backups = {i: data.draw(st.integers(0, n - 1)) for i in committees}
        plan = BackupPlan(backups)
        y, z = plan.yz_tensors(cfg)
        plan_ok = validate_backup_plan(inst, cfg, plan) == []
        assert plan_ok == (check_binary_constraints(inst, cfg.x_matrix(), y, z) == [])


def test_binary_formulas_flag_wrong_reassignment(tiny8, split8):
    plan = BackupPlan({0: 1, 4: 5})
    y, z = plan.yz_tensors(split8)
    assert check_binary_constraints(tiny8, split8.x_matrix(), y, z) == []
    z2 = z.copy()
    z2[0, 2, 1], z2[0, 2, 3] = 0, 1
    assert "reassign_to_backup" in check_binary_constraints(tiny8, split8.x_matrix(), y, z2)
    y2 = y.copy()
    y2[0, 1], y2[0, 5] = 0, 1
    assert "backup_is_follower" in check_binary_constraints(tiny8, split8.x_matrix(), y2, z)


def test_best_backup_asym_committee():
    inst = asym_instance()
    assert best_backup(inst, [1, 2, 3]) == (3, 11.0)
    assert [exd(inst, k, [1, 2, 3]) for k in (1, 2, 3)] == [15.0, 16.0, 11.0]
