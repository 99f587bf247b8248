"""Domain types and pure evaluators for the committee/view-change model.

All delays are float milliseconds. Self-delay ``D[i, i]`` is zero by
convention, so sums over a committee may include the leader without
changing the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

INACTIVE = -1
TOL = 1e-9


class InstanceError(ValueError):
    """Raised when instance data breaks a structural invariant."""


class ConfigurationError(ValueError):
    """Raised by evaluators handed an invalid configuration or plan."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class NotALeader(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Instance:
    D: np.ndarray
    dv: np.ndarray
    f: np.ndarray
    f_min: int = 1
    dv_rev: np.ndarray | None = None

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        dv = np.array(self.dv, dtype=float).reshape(-1)
        f = np.array(self.f, dtype=float).reshape(-1)
        n = dv.shape[0]
        if D.ndim == 1 and D.size == n * n:
            D = D.reshape(n, n)
        dv_rev = dv.copy() if self.dv_rev is None else np.array(self.dv_rev, dtype=float).reshape(-1)
        if n < 1:
            raise InstanceError("instance needs at least one node")
        if D.shape != (n, n):
            raise InstanceError(f"D has shape {D.shape}, expected {(n, n)}")
        if f.shape != (n,) or dv_rev.shape != (n,):
            raise InstanceError("f and dv_rev must have length n")
        for name, arr in (("D", D), ("dv", dv), ("dv_rev", dv_rev), ("f", f)):
            if not np.all(np.isfinite(arr)):
                raise InstanceError(f"{name} has non-finite entries")
        if np.any(D < 0) or np.any(dv < 0) or np.any(dv_rev < 0):
            raise InstanceError("delays must be nonnegative")
        if np.any(np.diag(D) != 0):
            raise InstanceError("D must have a zero diagonal")
        if np.any(f < 0) or np.any(f > 1):
            raise InstanceError("failure probabilities must lie in [0, 1]")
        if int(self.f_min) != self.f_min or self.f_min < 1:
            raise InstanceError("f_min must be a positive integer")
        for arr in (D, dv, dv_rev, f):
            arr.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "dv", dv)
        object.__setattr__(self, "dv_rev", dv_rev)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "f_min", int(self.f_min))

    @property
    def n(self) -> int:
        return self.dv.shape[0]

    @property
    def min_committee(self) -> int:
        """Smallest admissible committee, leader included."""
        return 3 * self.f_min + 1

    @property
    def feasible(self) -> bool:
        return self.n >= self.min_committee

    def scaled(self, factor: float) -> "Instance":
        return Instance(self.D * factor, self.dv * factor, self.f, self.f_min, self.dv_rev * factor)

    def with_failure_probs(self, f) -> "Instance":
        return Instance(self.D, self.dv, f, self.f_min, self.dv_rev)


@dataclass(frozen=True)
class Configuration:
    """Leader assignment: ``leader_of[j] == i`` means x_ij = 1.

    ``INACTIVE`` (-1) marks a node that belongs to no committee, which
    only happens after the view sequencer removes a failed leader.
    """

    leader_of: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "leader_of", tuple(int(v) for v in self.leader_of))

    @classmethod
    def from_committees(cls, n: int, committees: Mapping[int, Iterable[int]]) -> "Configuration":
        leader_of = [INACTIVE] * n
        for leader, members in committees.items():
            leader_of[leader] = leader
            for j in members:
                leader_of[j] = leader
        return cls(tuple(leader_of))

    @property
    def n(self) -> int:
        return len(self.leader_of)

    def leaders(self) -> list[int]:
        return [i for i, l in enumerate(self.leader_of) if l == i]

    def is_leader(self, i: int) -> bool:
        return 0 <= i < self.n and self.leader_of[i] == i

    def followers(self, i: int) -> list[int]:
        return [j for j, l in enumerate(self.leader_of) if l == i and j != i]

    def committees(self) -> dict[int, list[int]]:
        """Leader -> ascending follower list, leaders ascending."""
        out: dict[int, list[int]] = {i: [] for i in self.leaders()}
        for j, l in enumerate(self.leader_of):
            if l != j and l in out:
                out[l].append(j)
        return out

    def active(self) -> list[int]:
        return [j for j, l in enumerate(self.leader_of) if l != INACTIVE]

    def x_matrix(self) -> np.ndarray:
        x = np.zeros((self.n, self.n), dtype=int)
        for j, l in enumerate(self.leader_of):
            if 0 <= l < self.n:
                x[l, j] = 1
        return x

    @classmethod
    def from_x(cls, x: np.ndarray) -> "Configuration":
        x = np.asarray(x)
        n = x.shape[0]
        leader_of = [INACTIVE] * n
        for j in range(n):
            rows = np.flatnonzero(x[:, j] > 0.5)
            if rows.size == 1:
                leader_of[j] = int(rows[0])
        return cls(tuple(leader_of))


@dataclass(frozen=True)
class BackupPlan:
    """``backup_of[i] = k``: follower k takes over if leader i fails.

    Follower reassignment is implied: every follower of i moves to k.
    """

    backup_of: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "backup_of", {int(k): int(v) for k, v in sorted(self.backup_of.items())})

    def __hash__(self):
        return hash(tuple(self.backup_of.items()))

    def yz_tensors(self, cfg: Configuration) -> tuple[np.ndarray, np.ndarray]:
        """Binary y[i, k] and z[i, j, k] implied by the plan."""
        n = cfg.n
        y = np.zeros((n, n), dtype=int)
        z = np.zeros((n, n, n), dtype=int)
        for i, k in self.backup_of.items():
            if 0 <= i < n and 0 <= k < n:
                y[i, k] = 1
                for j in cfg.followers(i):
                    z[i, j, k] = 1
        return y, z


@dataclass(frozen=True)
class ScenarioSet:
    """Scenarios S_0..S_n; S_i (i >= 1 in the 1-based sense) is the failure of node i.

    Node indices are 0-based here, so ``weight(i)`` is the weight of the
    failure of node ``i``. S_0 carries no weight term.
    """

    weights: tuple[float, ...]

    @classmethod
    def from_instance(cls, inst: Instance) -> "ScenarioSet":
        return cls(tuple(float(p) for p in inst.f))

    def weight(self, i: int) -> float:
        return self.weights[i]

    def __len__(self) -> int:
        return len(self.weights) + 1


class ViolationKind(str, Enum):
    ASSIGNMENT_MISSING = "AssignmentMissing"
    FOLLOWER_AS_LEADER_TARGET = "FollowerAsLeaderTarget"
    COMMITTEE_TOO_SMALL = "CommitteeTooSmall"
    MISSING_BACKUP = "MissingBackup"
    BACKUP_NOT_FOLLOWER = "BackupNotFollower"
    ORPHAN_BACKUP = "OrphanBackup"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    node: int
    detail: str = ""

    def __str__(self):
        return f"{self.kind.value}(node={self.node}){': ' + self.detail if self.detail else ''}"


def validate_configuration(inst: Instance, cfg: Configuration, *, allow_inactive: bool = False,
                           check_size: bool = True) -> list[Violation]:
    out: list[Violation] = []
    n = inst.n
    if cfg.n != n:
        return [Violation(ViolationKind.ASSIGNMENT_MISSING, -1, f"configuration has {cfg.n} nodes, instance {n}")]
    for j, l in enumerate(cfg.leader_of):
        if l == INACTIVE and allow_inactive:
            continue
        if not 0 <= l < n:
            out.append(Violation(ViolationKind.ASSIGNMENT_MISSING, j, "no leader"))
        elif cfg.leader_of[l] != l:
            out.append(Violation(ViolationKind.FOLLOWER_AS_LEADER_TARGET, j, f"assigned to non-leader {l}"))
    if check_size:
        need = 3 * inst.f_min
        for i, fol in cfg.committees().items():
            if len(fol) < need:
                out.append(Violation(ViolationKind.COMMITTEE_TOO_SMALL, i,
                                     f"{len(fol)} followers, need {need}"))
    return out


def validate_backup_plan(inst: Instance, cfg: Configuration, plan: BackupPlan) -> list[Violation]:
    out: list[Violation] = []
    committees = cfg.committees()
    for i, fol in committees.items():
        if i not in plan.backup_of:
            out.append(Violation(ViolationKind.MISSING_BACKUP, i))
        elif plan.backup_of[i] not in fol:
            out.append(Violation(ViolationKind.BACKUP_NOT_FOLLOWER, i, f"backup {plan.backup_of[i]}"))
    for i in plan.backup_of:
        if i not in committees:
            out.append(Violation(ViolationKind.ORPHAN_BACKUP, i))
    return out


def _require_valid(inst: Instance, cfg: Configuration, plan: BackupPlan | None = None) -> None:
    v = validate_configuration(inst, cfg)
    if not v and plan is not None:
        v = validate_backup_plan(inst, cfg, plan)
    if v:
        raise ConfigurationError(v)


def exd(inst: Instance, k: int, members: Iterable[int]) -> float:
    """Extra delay when k leads ``members``: d_kv + sum of d_kj (j = k adds 0)."""
    total = float(inst.dv[k])
    row = inst.D[k]
    for j in members:
        total += float(row[j])
    return total


def committee_delay(inst: Instance, leader: int, followers: Iterable[int]) -> float:
    """d_iv + sum_j d_ij for one committee (the g term)."""
    return exd(inst, leader, followers)


def normal_objective(inst: Instance, cfg: Configuration) -> float:
    _require_valid(inst, cfg)
    return sum(committee_delay(inst, i, fol) for i, fol in cfg.committees().items())


def _leader_followers(cfg: Configuration, i: int) -> list[int]:
    if not cfg.is_leader(i):
        raise NotALeader(f"node {i} is not a leader")
    return cfg.followers(i)


def extra_delay_f(inst: Instance, cfg: Configuration, plan: BackupPlan, i: int) -> float:
    fol = _leader_followers(cfg, i)
    _require_valid(inst, cfg, plan)
    return exd(inst, plan.backup_of[i], fol)


def saved_delay_g(inst: Instance, cfg: Configuration, i: int) -> float:
    fol = _leader_followers(cfg, i)
    return committee_delay(inst, i, fol)


def expected_vc_delay_Q(inst: Instance, cfg: Configuration, plan: BackupPlan) -> float:
    _require_valid(inst, cfg, plan)
    total = 0.0
    for i, fol in cfg.committees().items():
        total += float(inst.f[i]) * (exd(inst, plan.backup_of[i], fol) - committee_delay(inst, i, fol))
    return total


def total_objective(inst: Instance, cfg: Configuration, plan: BackupPlan) -> float:
    return normal_objective(inst, cfg) + expected_vc_delay_Q(inst, cfg, plan)


def check_binary_constraints(inst: Instance, x: np.ndarray, y: np.ndarray | None = None,
                             z: np.ndarray | None = None) -> list[str]:
    """Evaluate the 0/1 constraint formulas directly on x (and y, z).

    Returns the names of violated constraint families. The size and
    backup-reassignment rows use the leader-conditional forms: size only
    binds when x_ii = 1, and y_i^k <= z_ij^k only for followers j of i.
    """
    n = inst.n
    x = np.asarray(x)
    bad: list[str] = []
    if np.any(x.sum(axis=0) != 1):
        bad.append("assignment")
    diag = np.diag(x)
    if np.any(x > diag[:, None]):
        bad.append("leader_self_assignment")
    off = x.sum(axis=1) - diag
    if np.any(off < 3 * inst.f_min * diag):
        bad.append("committee_size")
    if y is None or z is None:
        return bad
    y = np.asarray(y)
    z = np.asarray(z)
    idx = np.arange(n)
    if np.any(z[idx, idx, :] != 0) or np.any(z[idx, :, idx] != 0):
        bad.append("reassign_range")
    for i in range(n):
        if sum(y[i, k] for k in range(n) if k != i) != diag[i] or y[i, i] != 0:
            bad.append("one_backup")
            break
    if np.any(y > x):
        bad.append("backup_is_follower")
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            if x[i, j] and np.any(y[i] > z[i, j]):
                bad.append("reassign_to_backup")
                return bad
            if sum(z[i, j, k] for k in range(n) if k != i) != x[i, j]:
                bad.append("reassign_every_follower")
                return bad
    return bad


def isclose(a: float, b: float, tol: float = TOL) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)
