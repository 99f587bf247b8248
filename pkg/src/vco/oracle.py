"""Brute-force ground truth for small instances.

Everything here is deliberately naive: enumerate, evaluate, keep the
first minimum. Solvers are checked against these functions, so they must
not share shortcuts with the solver code paths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .model import (TOL, BackupPlan, Configuration, Instance, exd, normal_objective,
                    total_objective)

DEFAULT_SIZE_GUARD = 12


class SizeGuardExceeded(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    best_cfg: Configuration
    best_plan: BackupPlan
    best_value: float
    enumerated_count: int


def _check_guard(inst: Instance, size_guard: int) -> None:
    if inst.n > size_guard:
        raise SizeGuardExceeded(f"n={inst.n} exceeds size guard {size_guard}")


def _partitions(items: list[int], min_block: int) -> Iterator[list[list[int]]]:
    # The first remaining item anchors its block, so every partition is produced once
    # with blocks ordered by smallest member.
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for extra in range(min_block - 1, len(rest) + 1):
        for mates in itertools.combinations(rest, extra):
            chosen = set(mates)
            remaining = [x for x in rest if x not in chosen]
            for tail in _partitions(remaining, min_block):
                yield [[first, *mates], *tail]


def enumerate_configurations(inst: Instance, size_guard: int = DEFAULT_SIZE_GUARD) -> Iterator[Configuration]:
    _check_guard(inst, size_guard)
    n = inst.n
    for blocks in _partitions(list(range(n)), inst.min_committee):
        for leaders in itertools.product(*blocks):
            leader_of = [0] * n
            for leader, block in zip(leaders, blocks):
                for j in block:
                    leader_of[j] = leader
            yield Configuration(tuple(leader_of))


def count_configurations(n: int, min_block: int) -> int:
    """Closed-form count: sum over set partitions of the product of block sizes.

    Recurrence on the block containing node 0: c(n) = sum_k C(n-1, k-1) * k * c(n-k).
    """
    from math import comb

    c = [1] + [0] * n
    for m in range(1, n + 1):
        c[m] = sum(comb(m - 1, k - 1) * k * c[m - k] for k in range(min_block, m + 1))
    return c[n]


def oracle_solve_normal(inst: Instance, size_guard: int = DEFAULT_SIZE_GUARD) -> tuple[Configuration, float]:
    best_cfg, best = None, np.inf
    for cfg in enumerate_configurations(inst, size_guard):
        val = normal_objective(inst, cfg)
        if val < best - TOL:
            best_cfg, best = cfg, val
    if best_cfg is None:
        raise ValueError("no feasible configuration")
    return best_cfg, best


def best_backup(inst: Instance, followers: list[int]) -> tuple[int, float]:
    """Candidate scan over followers; lowest index wins ties."""
    best_k, best = -1, np.inf
    for k in followers:
        val = exd(inst, k, followers)
        if val < best:
            best_k, best = k, val
    return best_k, best


def oracle_solve_vco(inst: Instance, size_guard: int = DEFAULT_SIZE_GUARD) -> OracleResult:
    best: OracleResult | None = None
    count = 0
    for cfg in enumerate_configurations(inst, size_guard):
        count += 1
        plan = BackupPlan({i: best_backup(inst, fol)[0] for i, fol in cfg.committees().items()})
        val = total_objective(inst, cfg, plan)
        if best is None or val < best.best_value - TOL:
            best = OracleResult(cfg, plan, val, 0)
    if best is None:
        raise ValueError("no feasible configuration")
    return OracleResult(best.best_cfg, best.best_plan, best.best_value, count)


def enumerate_backup_plans(cfg: Configuration) -> Iterator[BackupPlan]:
    """Every joint choice of one follower-backup per leader."""
    committees = cfg.committees()
    leaders = list(committees)
    for choice in itertools.product(*(committees[i] for i in leaders)):
        yield BackupPlan(dict(zip(leaders, choice)))


def joint_best_plan(inst: Instance, cfg: Configuration) -> tuple[BackupPlan, float]:
    best_plan, best = None, np.inf
    for plan in enumerate_backup_plans(cfg):
        val = total_objective(inst, cfg, plan)
        if val < best - TOL:
            best_plan, best = plan, val
    return best_plan, best


def enumerate_scenario_yz(inst: Instance, cfg: Configuration, i: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """All binary (y_i, z_i) for the single-failure model of leader i.

    y has length n (y[k] = y_i^k) and z is n x n (z[j, k] = z_ij^k).
    Constraints checked literally: one backup among k != i, y_i^k <= x_ik,
    sum_k z_ij^k = x_ij for j != i, and y_i^k <= z_ij^k for followers j.
    Choices for each follower are filtered per follower, then crossed.
    """
    n = inst.n
    x = cfg.x_matrix()
    others = [k for k in range(n) if k != i]
    followers = [j for j in others if x[i, j] == 1]
    for kb in others:
        y = np.zeros(n, dtype=int)
        y[kb] = 1
        if sum(y[k] for k in others) != x[i, i]:
            continue
        if any(y[k] > x[i, k] for k in others):
            continue
        per_follower: list[list[int]] = []
        for j in followers:
            ok = []
            for target in others:
                zj = np.zeros(n, dtype=int)
                zj[target] = 1
                if all(y[k] <= zj[k] for k in others):
                    ok.append(target)
            per_follower.append(ok)
        for targets in itertools.product(*per_follower):
            z = np.zeros((n, n), dtype=int)
            for j, t in zip(followers, targets):
                z[j, t] = 1
            yield y, z


def scenario_objective(inst: Instance, cfg: Configuration, i: int, y: np.ndarray, z: np.ndarray) -> float:
    """sum_k f_{S_i}^k - g_{S_i}, evaluated from the binary variables."""
    n = inst.n
    x = cfg.x_matrix()
    # Accumulate left to right so the value is bit-identical to the closed-form path.
    total = 0.0
    for k in range(n):
        if k == i:
            continue
        total += float(inst.dv[k]) * y[k]
        for j in range(n):
            total += float(inst.D[k, j]) * z[j, k]
    g = float(inst.dv[i]) * x[i, i]
    for j in range(n):
        if j != i:
            g += float(inst.D[i, j]) * x[i, j]
    return total - g


def exhaustive_subproblem(inst: Instance, cfg: Configuration, i: int) -> tuple[int | None, float]:
    """Exact scenario optimum by enumerating every feasible (y, z)."""
    if not cfg.is_leader(i):
        return None, 0.0
    best_k, best = None, np.inf
    for y, z in enumerate_scenario_yz(inst, cfg, i):
        val = scenario_objective(inst, cfg, i, y, z)
        k = int(np.flatnonzero(y)[0])
        if val < best or (val == best and best_k is not None and k < best_k):
            best_k, best = k, val
    return best_k, best
