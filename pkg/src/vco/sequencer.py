"""Backup-leader selection as views advance.

A ``ViewState`` is an immutable snapshot: the current configuration, the
precomputed backup for every leader, and the failure history. Each
transition returns a new state and touches only the affected committee.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from .model import (INACTIVE, Configuration, ConfigurationError, Instance, NotALeader, exd,
                    validate_configuration)


class EmptyCommittee(RuntimeError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    view: int
    failed: int
    backup: int | None
    exd_value: float | None
    warning: str = ""

    def as_row(self) -> list:
        return [self.view, self.failed, "" if self.backup is None else self.backup,
                "" if self.exd_value is None else repr(self.exd_value), self.warning]


@dataclass(frozen=True)
class ViewState:
    view: int
    cfg: Configuration
    precomputed_backups: Mapping[int, tuple[int | None, tuple[int, ...]]]
    history: tuple[tuple[int, int, int], ...] = ()
    undersized: frozenset[int] = frozenset()
    inst: Instance | None = field(default=None, compare=False, repr=False)

    def backup_of(self, leader: int) -> int | None:
        return self.precomputed_backups[leader][0]


def exd_backup(inst: Instance, followers: Iterable[int]) -> tuple[int | None, float | None]:
    """argmin exd over the followers, lowest index on ties."""
    followers = list(followers)
    best_k, best = None, None
    for k in followers:
        val = exd(inst, k, followers)
        if best is None or val < best:
            best_k, best = k, val
    return best_k, best


def yz_backup(inst: Instance, cfg: Configuration, i: int) -> tuple[int | None, float | None]:
    """Exact search over (y, z) for the failure of leader i.

    y picks one node k != i with x_ik = 1. Each follower j then needs
    exactly one target k' with z_jk' >= y_k', so z is pinned to k and the
    objective is read off the tensors.
    """
    n = cfg.n
    x = cfg.x_matrix()
    followers = [j for j in range(n) if j != i and x[i, j] == 1]
    best_k, best = None, None
    for k in range(n):
        if k == i or x[i, k] != 1:
            continue
        y = np.zeros(n, dtype=int)
        y[k] = 1
        z = np.zeros((n, n), dtype=int)
        for j in followers:
            z[j, k] = 1
        val = 0.0
        for kk in range(n):
            if kk == i:
                continue
            val += float(inst.dv[kk]) * y[kk]
            for j in range(n):
                val += float(inst.D[kk, j]) * z[j, kk]
        if best is None or val < best:
            best_k, best = k, val
    return best_k, best


def _backup_entry(inst: Instance, cfg: Configuration, i: int) -> tuple[int | None, tuple[int, ...]]:
    followers = cfg.followers(i)
    k, val = exd_backup(inst, followers)
    k2, val2 = yz_backup(inst, cfg, i)
    if val != val2:
        raise RuntimeError(f"backup paths disagree for leader {i}: exd {val} vs y/z {val2}")
    return k, tuple(followers)


def precompute_backups(state_or_cfg: ViewState | Configuration, inst: Instance | None = None,
                       leaders: Iterable[int] | None = None) -> dict[int, tuple[int | None, tuple[int, ...]]]:
    if isinstance(state_or_cfg, ViewState):
        cfg = state_or_cfg.cfg
        inst = inst if inst is not None else state_or_cfg.inst
    else:
        cfg = state_or_cfg
    if inst is None:
        raise ValueError("an instance is required")
    todo = cfg.leaders() if leaders is None else leaders
    return {i: _backup_entry(inst, cfg, i) for i in todo}


def init_view_state(cfg: Configuration, inst: Instance) -> ViewState:
    v = validate_configuration(inst, cfg)
    if v:
        raise ConfigurationError(v)
    return ViewState(0, cfg, precompute_backups(cfg, inst), inst=inst)


def _refresh(state: ViewState, leader_of: list[int], touched: Iterable[int],
             dropped: Iterable[int] = ()) -> tuple[Configuration, dict, frozenset[int]]:
    inst = state.inst
    cfg = Configuration(tuple(leader_of))
    backups = {i: v for i, v in state.precomputed_backups.items() if i not in set(dropped)}
    touched = [i for i in touched if cfg.is_leader(i)]
    backups.update(precompute_backups(cfg, inst, touched))
    backups = dict(sorted(backups.items()))
    need = 3 * inst.f_min
    undersized = set(state.undersized) - set(dropped)
    for i in touched:
        if len(cfg.followers(i)) < need:
            undersized.add(i)
        else:
            undersized.discard(i)
    return cfg, backups, frozenset(undersized)


def rotate_leader(state: ViewState, i: int, k: int) -> ViewState:
    """Hand committee i to follower k; i is removed and marked inactive."""
    cfg = state.cfg
    if not cfg.is_leader(i):
        raise NotALeader(f"node {i} is not a leader")
    followers = cfg.followers(i)
    if not followers:
        raise EmptyCommittee(f"committee of {i} has no surviving member")
    if k not in followers:
        raise ValueError(f"node {k} is not a follower of {i}")
    leader_of = list(cfg.leader_of)
    leader_of[i] = INACTIVE
    for j in followers:
        leader_of[j] = k
    new_cfg, backups, undersized = _refresh(state, leader_of, [k], dropped=[i])
    return replace(state, view=state.view + 1, cfg=new_cfg, precomputed_backups=backups,
                   history=state.history + ((state.view + 1, i, k),), undersized=undersized)


def on_leader_failure(state: ViewState, i: int) -> ViewState:
    if not state.cfg.is_leader(i):
        raise NotALeader(f"node {i} is not a leader")
    k = state.precomputed_backups[i][0]
    if k is None:
        raise EmptyCommittee(f"committee of {i} has no surviving member")
    return rotate_leader(state, i, k)


def remove_follower(state: ViewState, j: int) -> ViewState:
    """Drop a crashed follower; the view number does not change."""
    cfg = state.cfg
    leader = cfg.leader_of[j]
    if leader == INACTIVE:
        raise ValueError(f"node {j} is already inactive")
    if leader == j:
        raise ValueError(f"node {j} is a leader; use on_leader_failure")
    leader_of = list(cfg.leader_of)
    leader_of[j] = INACTIVE
    new_cfg, backups, undersized = _refresh(state, leader_of, [leader])
    return replace(state, cfg=new_cfg, precomputed_backups=backups, undersized=undersized)


def replay_failure_schedule(cfg: Configuration, inst: Instance,
                            schedule: Iterable[tuple[int, int]]) -> tuple[ViewState, list[TraceRecord]]:
    schedule = [(int(v), int(node)) for v, node in schedule]
    for (a, _), (b, _) in zip(schedule, schedule[1:]):
        if b <= a:
            raise ValueError("schedule views must be strictly increasing")
    state = init_view_state(cfg, inst)
    trace: list[TraceRecord] = []
    for view, node in schedule:
        if not state.cfg.is_leader(node):
            trace.append(TraceRecord(view, node, None, None, "noop"))
            continue
        followers = state.cfg.followers(node)
        state = on_leader_failure(state, node)
        k = state.history[-1][2]
        warning = "undersized" if k in state.undersized else ""
        trace.append(TraceRecord(view, node, k, exd(inst, k, followers), warning))
    return state, trace
