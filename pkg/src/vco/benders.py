"""Benders decomposition for the view-change optimization model.

The master problem chooses the committee configuration x and a bound
theta on the expected view-change delay. For fixed x each failure
scenario separates into a 1-median choice of backup over the failed
leader's followers, so subproblems are solved in closed form.

Cuts. For scenario i the optimal value Q*_i(x) is a minimum over
candidate backups, which no single backup's linear form bounds from
below at every configuration. Each iteration therefore adds, per
scenario, the strongest linear underestimator of the shape

    a_i * x_ii + sum_j b_ij * x_ij - g_i(x)

that is tight at the current x-hat and valid for every follower set of
admissible size. Finding (a_i, b_i) is a small LP (see
``scenario_cut_coefficients``). Scenarios are aggregated with weights
f_i into one inequality per iteration.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .bnb import NodeLimit, branch_and_bound
from .lp import LinearProgram, LPStatus
from .model import (TOL, BackupPlan, Configuration, ConfigurationError, Instance, NotALeader,
                    committee_delay, exd, normal_objective, validate_configuration)

log = logging.getLogger(__name__)

EXACT_LIMIT = 30
DEFAULT_TOL = 1e-6


class Infeasible(ValueError):
    pass


class IterationLimit(RuntimeError):
    """Raised when a solve stops early; ``result`` holds the best incumbent."""

    def __init__(self, message: str, result: "VCOResult | None" = None):
        super().__init__(message)
        self.result = result


# ---------------------------------------------------------------- subproblems

def _valid_or_raise(inst: Instance, cfg: Configuration) -> None:
    v = validate_configuration(inst, cfg)
    if v:
        raise ConfigurationError(v)


def solve_subproblem(inst: Instance, cfg: Configuration, i: int) -> tuple[int | None, float]:
    """Optimal backup for the failure of ``i`` and the scenario value Q*_i.

    Non-leaders trigger no view change and contribute (None, 0.0).
    """
    if not cfg.is_leader(i):
        return None, 0.0
    followers = cfg.followers(i)
    best_k, best = None, np.inf
    for k in followers:
        val = exd(inst, k, followers)
        if val < best:
            best_k, best = k, val
    return best_k, best - committee_delay(inst, i, followers)


def subproblem_backups(inst: Instance, cfg: Configuration) -> BackupPlan:
    return BackupPlan({i: solve_subproblem(inst, cfg, i)[0] for i in cfg.leaders()})


def q_star(inst: Instance, cfg: Configuration) -> float:
    _valid_or_raise(inst, cfg)
    total = 0.0
    for i in cfg.leaders():
        total += float(inst.f[i]) * solve_subproblem(inst, cfg, i)[1]
    return total


@dataclass
class DualSolution:
    alpha: float
    beta: np.ndarray
    gamma: np.ndarray  # gamma[k, j]
    lam: np.ndarray


def dual_solution(inst: Instance, cfg: Configuration, i: int, k_star: int) -> DualSolution:
    """Closed-form optimal dual of the scenario-i relaxation at ``cfg``.

    Rows: one-backup (alpha), backup-is-follower (beta_k <= 0), backup
    pulls follower j (gamma_kj <= 0, followers j only) and follower
    reassignment (lambda_j). With lambda = 0 and gamma_kj = -d_kj the
    y_k row reads alpha <= exd(k) on followers, so alpha = exd(k*);
    non-followers absorb the slack through beta_k.
    """
    if not cfg.is_leader(i):
        raise NotALeader(f"node {i} is not a leader")
    n = inst.n
    followers = cfg.followers(i)
    alpha = exd(inst, k_star, followers)
    beta = np.zeros(n)
    gamma = np.zeros((n, n))
    lam = np.zeros(n)
    fset = set(followers)
    for k in range(n):
        if k == i:
            continue
        for j in followers:
            gamma[k, j] = -float(inst.D[k, j])
        if k not in fset:
            beta[k] = min(0.0, exd(inst, k, followers) - alpha)
    return DualSolution(alpha, beta, gamma, lam)


def dual_objective(inst: Instance, cfg: Configuration, i: int, dual: DualSolution) -> float:
    x = cfg.x_matrix()
    n = inst.n
    val = dual.alpha * x[i, i]
    for k in range(n):
        if k != i:
            val += dual.beta[k] * x[i, k]
    for j in range(n):
        if j != i:
            val += dual.lam[j] * x[i, j]
    return val - committee_delay(inst, i, cfg.followers(i))


def dual_violation(inst: Instance, cfg: Configuration, i: int, dual: DualSolution) -> float:
    """Largest violation of the dual constraints (<= 0 means feasible)."""
    n = inst.n
    followers = cfg.followers(i)
    worst = max(0.0, float(dual.beta.max(initial=0.0)), float(dual.gamma.max(initial=0.0)))
    for k in range(n):
        if k == i:
            continue
        lhs = dual.alpha + dual.beta[k] + sum(dual.gamma[k, j] for j in followers)
        worst = max(worst, lhs - float(inst.dv[k]))
        for j in range(n):
            if j == i:
                continue
            g = dual.gamma[k, j] if j in followers else 0.0
            worst = max(worst, dual.lam[j] - g - float(inst.D[k, j]))
    return worst


def lp_relax_subproblem(inst: Instance, cfg: Configuration, i: int) -> tuple[dict, float]:
    """LP relaxation of the reformulated scenario-i subproblem (y and z over followers)."""
    if not cfg.is_leader(i):
        raise NotALeader(f"node {i} is not a leader")
    F = cfg.followers(i)
    s = len(F)
    # variables: y_k (s) then z_jk (s*s, row-major by j)
    nv = s + s * s
    c = np.zeros(nv)
    for a, k in enumerate(F):
        c[a] = inst.dv[k]
        for b, j in enumerate(F):
            c[s + b * s + a] = inst.D[k, j]
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    row = np.zeros(nv)
    row[:s] = 1.0
    A_eq.append(row)
    b_eq.append(1.0)
    for b in range(s):
        row = np.zeros(nv)
        row[s + b * s: s + (b + 1) * s] = 1.0
        A_eq.append(row)
        b_eq.append(1.0)
        for a in range(s):
            row = np.zeros(nv)
            row[a] = 1.0
            row[s + b * s + a] = -1.0
            A_ub.append(row)
            b_ub.append(0.0)
    res = LinearProgram(c, np.array(A_ub), np.array(b_ub), np.array(A_eq), np.array(b_eq),
                        np.zeros(nv), np.ones(nv)).solve()
    if not res.ok:
        raise RuntimeError(f"subproblem relaxation failed: {res.status.value}")
    y = {k: float(res.x[a]) for a, k in enumerate(F)}
    z = {(j, k): float(res.x[s + b * s + a]) for b, j in enumerate(F) for a, k in enumerate(F)}
    return {"y": y, "z": z}, res.fun - committee_delay(inst, i, F)


# ----------------------------------------------------------------------- cuts

def scenario_cut_coefficients(inst: Instance, i: int, followers: list[int] | None,
                              tight_value: float | None = None) -> tuple[float, np.ndarray]:
    """Coefficients (a, b) of a valid underestimator of exd-min for scenario i.

    Validity: for every candidate k and follower set F' of i with
    |F'| >= 3 f_min containing k,
        a + sum_{j in F'} b_j <= d_kv + sum_{j in F'} d_kj.
    The inner minimum over F' is replaced by its LP dual (sum of the
    cheapest terms), which keeps the whole problem a single LP. When
    ``followers`` is given the cut is made tight there.
    """
    n = inst.n
    m = 3 * inst.f_min
    O = [k for k in range(n) if k != i]
    no = len(O)
    pos = {k: p for p, k in enumerate(O)}
    ia = 0
    ib = lambda j: 1 + pos[j]
    it = lambda k: 1 + no + pos[k]
    pairs = [(k, j) for k in O for j in O if j != k]
    sidx = {kj: 1 + 2 * no + p for p, kj in enumerate(pairs)}
    nv = 1 + 2 * no + len(pairs)
    A = np.zeros((no + len(pairs), nv))
    rhs = np.zeros(no + len(pairs))
    r = 0
    for k in O:
        A[r, ia] = 1.0
        A[r, ib(k)] += 1.0
        A[r, it(k)] = -(m - 1)
        for j in O:
            if j != k:
                A[r, sidx[(k, j)]] = 1.0
        rhs[r] = inst.dv[k]
        r += 1
    for (k, j) in pairs:
        A[r, it(k)] = 1.0
        A[r, sidx[(k, j)]] = -1.0
        A[r, ib(j)] = 1.0
        rhs[r] = inst.D[k, j]
        r += 1
    A_eq = b_eq = None
    size = m
    if followers is not None:
        A_eq = np.zeros((1, nv))
        A_eq[0, ia] = 1.0
        for j in followers:
            A_eq[0, ib(j)] = 1.0
        b_eq = np.array([tight_value])
        size = max(m, len(followers))
    rho = size / no
    c = np.zeros(nv)
    c[ia] = -1.0
    c[1:1 + no] = -rho
    big = 4.0 * (float(inst.dv.sum()) + float(inst.D.sum())) + 1.0
    lb = np.concatenate([np.full(1 + no, -big), np.zeros(no + len(pairs))])
    ub = np.concatenate([np.full(1 + no, big), np.full(no + len(pairs), np.inf)])
    res = LinearProgram(c, A, rhs, A_eq, b_eq, lb, ub).solve()
    if res.status is not LPStatus.OPTIMAL:
        raise RuntimeError(f"cut LP for scenario {i} failed: {res.status.value}")
    b = np.zeros(n)
    for j in O:
        b[j] = res.x[ib(j)]
    a = float(res.x[ia])
    if followers is not None:
        # restore exact tightness lost to pivoting round-off
        a = float(tight_value) - sum(float(b[j]) for j in followers)
    return a, b


@dataclass
class BendersCut:
    """theta >= sum_ij coef[i, j] * x_ij (aggregated over all scenarios)."""

    coef: np.ndarray
    backups: dict[int, int]
    origin: Configuration | None
    value_at_origin: float
    scenario_terms: dict[int, tuple[float, np.ndarray]] = field(default_factory=dict)

    def rhs_x(self, x: np.ndarray) -> float:
        return float(np.sum(self.coef * x))

    def rhs(self, cfg: Configuration) -> float:
        return self.rhs_x(cfg.x_matrix())


def scenario_floor(inst: Instance, i: int) -> float:
    """Smallest possible Q*_i over every admissible committee led by i.

    For backup k the scenario value is d_kv - d_iv - d_ik plus a sum of
    (d_kj - d_ij) over the other followers; the minimum takes the m-1
    cheapest of those terms and every further negative one.
    """
    n = inst.n
    m = 3 * inst.f_min
    best = np.inf
    for k in range(n):
        if k == i:
            continue
        others = [j for j in range(n) if j != i and j != k]
        diff = np.sort(inst.D[k, others] - inst.D[i, others])
        val = float(inst.dv[k] - inst.dv[i] - inst.D[i, k]) + float(diff[:m - 1].sum()) \
            + float(np.minimum(diff[m - 1:], 0.0).sum())
        best = min(best, val)
    return best


def floor_cut(inst: Instance) -> BendersCut:
    """theta >= sum_i f_i * floor_i * x_ii, valid for every configuration."""
    coef = np.diag([float(inst.f[i]) * scenario_floor(inst, i) for i in range(inst.n)])
    return BendersCut(coef, {}, None, float("nan"))


def generate_cut(inst: Instance, cfg: Configuration, backups: dict[int, int] | BackupPlan) -> BendersCut:
    if isinstance(backups, BackupPlan):
        backups = dict(backups.backup_of)
    n = inst.n
    committees = cfg.committees()
    coef = np.zeros((n, n))
    terms = {}
    q = 0.0
    for i in range(n):
        p = float(inst.f[i])
        if p == 0.0:
            continue
        if i in committees:
            fol = committees[i]
            tight = exd(inst, backups[i], fol)
            a, b = scenario_cut_coefficients(inst, i, fol, tight)
            q += p * (tight - committee_delay(inst, i, fol))
        else:
            a, b = float(inst.dv[i]) + scenario_floor(inst, i), inst.D[i].astype(float)
        terms[i] = (a, b)
        coef[i, i] += p * (a - float(inst.dv[i]))
        for j in range(n):
            if j != i:
                coef[i, j] += p * (float(b[j]) - float(inst.D[i, j]))
    return BendersCut(coef, dict(backups), cfg, q, terms)


def theta_lower_bound(inst: Instance) -> float:
    return -float(np.sum(inst.f * (inst.dv + inst.D.sum(axis=1))))


# --------------------------------------------------------------------- master

@dataclass
class MasterResult:
    cfg: Configuration
    theta: float
    value: float
    nodes: int


def _master_lp(inst: Instance, cuts: list[BendersCut] | None) -> tuple[LinearProgram, np.ndarray, np.ndarray]:
    n = inst.n
    nx = n * n
    with_theta = cuts is not None
    nv = nx + (1 if with_theta else 0)
    idx = lambda i, j: i * n + j
    c = np.zeros(nv)
    for i in range(n):
        c[idx(i, i)] = inst.dv[i]
        for j in range(n):
            if j != i:
                c[idx(i, j)] = inst.D[i, j]
    A_eq = np.zeros((n, nv))
    for j in range(n):
        for i in range(n):
            A_eq[j, idx(i, j)] = 1.0
    rows = []
    for i in range(n):
        for j in range(n):
            if j != i:
                r = np.zeros(nv)
                r[idx(i, j)] = 1.0
                r[idx(i, i)] = -1.0
                rows.append(r)
    for i in range(n):
        r = np.zeros(nv)
        r[idx(i, i)] = 3.0 * inst.f_min
        for j in range(n):
            if j != i:
                r[idx(i, j)] = -1.0
        rows.append(r)
    # at most floor(n / committee size) leaders; valid, and it tightens the relaxation
    r = np.zeros(nv)
    for i in range(n):
        r[idx(i, i)] = 1.0
    rows.append(r)
    lb = np.zeros(nv)
    ub = np.ones(nv)
    if with_theta:
        c[nx] = 1.0
        for cut in cuts:
            r = np.zeros(nv)
            r[:nx] = cut.coef.reshape(-1)
            r[nx] = -1.0
            rows.append(r)
        lb[nx] = theta_lower_bound(inst)
        ub[nx] = np.inf
    A_ub = np.array(rows)
    b_ub = np.zeros(len(rows))
    b_ub[n * (n - 1) + n] = n // inst.min_committee
    lp = LinearProgram(c, A_ub, b_ub, A_eq, np.ones(n), lb, ub)
    return lp, lb, ub


def branching_order(n: int) -> list[int]:
    """Leader flags x_ii first, then assignments x_ij, each lexicographic."""
    return [i * n + i for i in range(n)] + [i * n + j for i in range(n) for j in range(n) if i != j]


def _theta_at(inst: Instance, cuts: list[BendersCut], cfg: Configuration) -> float:
    x = cfg.x_matrix()
    return max([theta_lower_bound(inst)] + [cut.rhs_x(x) for cut in cuts])


def solve_master(inst: Instance, cuts: list[BendersCut], *, incumbent: Configuration | None = None,
                 node_limit: int = 500_000) -> MasterResult:
    """Exact master: min normal delay + theta over admissible x, theta above every cut."""
    if not inst.feasible:
        raise Infeasible(f"n={inst.n} < {inst.min_committee}: no admissible committee")
    lp, lb, ub = _master_lp(inst, cuts)
    n = inst.n
    inc = None
    if incumbent is not None:
        theta = _theta_at(inst, cuts, incumbent)
        xv = np.concatenate([incumbent.x_matrix().reshape(-1).astype(float), [theta]])
        inc = (xv, normal_objective(inst, incumbent) + theta)
    try:
        res = branch_and_bound(lp, branching_order(n), lb=lb, ub=ub, incumbent=inc, node_limit=node_limit)
    except NodeLimit as exc:
        raise IterationLimit(str(exc)) from exc
    if res.x is None:
        raise Infeasible("master problem has no admissible configuration")
    cfg = Configuration.from_x(res.x[:n * n].reshape(n, n))
    theta = _theta_at(inst, cuts, cfg)
    return MasterResult(cfg, theta, normal_objective(inst, cfg) + theta, res.nodes)


# ----------------------------------------------------------------- benders loop

@dataclass
class BendersState:
    cuts: list[BendersCut] = field(default_factory=list)
    incumbent: tuple[Configuration, BackupPlan, float] | None = None
    lower_bound: float = -np.inf
    upper_bound: float = np.inf
    iterations: int = 0
    master_nodes_explored: int = 0
    lower_bounds: list[float] = field(default_factory=list)
    upper_bounds: list[float] = field(default_factory=list)
    certified: bool = True
    wall_time: float = 0.0

    @property
    def gap(self) -> float:
        return self.upper_bound - self.lower_bound

    def stats(self) -> dict:
        return {
            "iterations": self.iterations,
            "cuts": len(self.cuts),
            "nodes": self.master_nodes_explored,
            "gap": float(self.gap) if np.isfinite(self.gap) else None,
            "wall_time_s": round(self.wall_time, 6),
            "certified": self.certified,
        }


@dataclass
class VCOResult:
    cfg: Configuration
    plan: BackupPlan
    value: float
    state: BendersState

    def __iter__(self):
        return iter((self.cfg, self.plan, self.value, self.state))


def solve_vco(inst: Instance, tol: float = DEFAULT_TOL, *, max_iterations: int | None = None,
              exact_limit: int = EXACT_LIMIT, node_limit: int = 500_000) -> VCOResult:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not inst.feasible:
        raise Infeasible(f"n={inst.n} < {inst.min_committee}: no admissible committee")
    t0 = time.perf_counter()
    state = BendersState()
    if inst.n > exact_limit:
        from .heuristic import heuristic_solve

        cfg, value = heuristic_solve(inst)
        plan = subproblem_backups(inst, cfg)
        state.incumbent = (cfg, plan, value)
        state.upper_bound = value
        state.certified = False
        state.wall_time = time.perf_counter() - t0
        return VCOResult(cfg, plan, value, state)
    limit = max_iterations if max_iterations is not None else 10 * inst.n
    if inst.f.any():
        state.cuts.append(floor_cut(inst))
    while True:
        if state.iterations >= limit:
            state.wall_time = time.perf_counter() - t0
            result = _result_from(state)
            raise IterationLimit(f"no convergence after {limit} iterations (gap {state.gap:.3g})", result)
        try:
            master = solve_master(inst, state.cuts, node_limit=node_limit,
                                  incumbent=state.incumbent[0] if state.incumbent else None)
        except IterationLimit as exc:
            state.wall_time = time.perf_counter() - t0
            state.certified = False
            raise IterationLimit(str(exc), _result_from(state)) from exc
        state.iterations += 1
        state.master_nodes_explored += master.nodes
        state.lower_bound = max(state.lower_bound, master.value)
        x_hat = master.cfg
        plan = subproblem_backups(inst, x_hat)
        value = normal_objective(inst, x_hat) + q_star(inst, x_hat)
        if state.incumbent is None or value < state.upper_bound - TOL:
            state.incumbent = (x_hat, plan, value)
            state.upper_bound = value
        state.lower_bounds.append(state.lower_bound)
        state.upper_bounds.append(state.upper_bound)
        log.debug("iter %d: LB=%.6f UB=%.6f nodes=%d", state.iterations, state.lower_bound,
                  state.upper_bound, master.nodes)
        if state.upper_bound - state.lower_bound <= tol:
            break
        state.cuts.append(generate_cut(inst, x_hat, plan))
    state.wall_time = time.perf_counter() - t0
    return _result_from(state)


def _result_from(state: BendersState) -> VCOResult | None:
    if state.incumbent is None:
        return None
    cfg, plan, value = state.incumbent
    return VCOResult(cfg, plan, value, state)


def solve_normal_case(inst: Instance, *, exact_limit: int = EXACT_LIMIT,
                      node_limit: int = 500_000) -> tuple[Configuration, float]:
    """Exact solve of the view-change-blind model (no theta, no cuts)."""
    if not inst.feasible:
        raise Infeasible(f"n={inst.n} < {inst.min_committee}: no admissible committee")
    if inst.n > exact_limit:
        from .heuristic import heuristic_solve

        return heuristic_solve(inst.with_failure_probs(np.zeros(inst.n)))
    lp, lb, ub = _master_lp(inst, None)
    try:
        res = branch_and_bound(lp, branching_order(inst.n), lb=lb, ub=ub, node_limit=node_limit)
    except NodeLimit as exc:
        raise IterationLimit(str(exc)) from exc
    if res.x is None:
        raise Infeasible("no admissible configuration")
    cfg = Configuration.from_x(res.x.reshape(inst.n, inst.n))
    return cfg, normal_objective(inst, cfg)
