"""Dense bounded-variable simplex.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
and ``lb <= x <= ub``. Every structural variable needs at least one
finite bound.

Two entry points share one tableau engine:

* a cold two-phase primal simplex (artificial basis), and
* a warm start from a previously optimal basis after bound changes,
  which keeps dual feasibility and runs the dual simplex. Branch and
  bound uses this path for child nodes.

Pricing is Dantzig's rule; after a run of degenerate pivots it falls back
to Bland's smallest-index rule until progress resumes, which rules out
cycling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
REFACTOR_EVERY = 64
DEGENERATE_STREAK = 30


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class Basis:
    """Snapshot sufficient to warm-start: basic columns and nonbasic values."""

    basic: np.ndarray
    x: np.ndarray
    # factorized tableau carried along so a child solve can skip refactoring
    T: np.ndarray | None = None
    d: np.ndarray | None = None
    age: int = 0


@dataclass
class LPResult:
    status: LPStatus
    x: np.ndarray | None
    fun: float
    iterations: int
    basis: Basis | None = None

    @property
    def ok(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class LinearProgram:
    """An LP in bounded standard form, reusable across bound changes."""

    def __init__(self, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None,
                 max_iter: int = 50_000):
        c = np.asarray(c, dtype=float)
        ns = c.shape[0]
        A_ub = np.zeros((0, ns)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
        A_eq = np.zeros((0, ns)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
        b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
        mu, me = A_ub.shape[0], A_eq.shape[0]
        m = mu + me
        self.ns, self.mu, self.m = ns, mu, m
        # columns: structural | ub slacks | artificials
        self.N = ns + mu + m
        A = np.zeros((m, self.N))
        A[:mu, :ns] = A_ub
        A[mu:, :ns] = A_eq
        A[:mu, ns:ns + mu] = np.eye(mu)
        self.art0 = ns + mu
        self.A = A
        self.b = np.concatenate([b_ub, b_eq])
        self.c = np.concatenate([c, np.zeros(mu + m)])
        lb = np.zeros(ns) if lb is None else np.asarray(lb, dtype=float).copy()
        ub = np.full(ns, np.inf) if ub is None else np.asarray(ub, dtype=float).copy()
        if np.any(np.isinf(lb) & np.isinf(ub)):
            raise ValueError("free variables need at least one finite bound")
        self.lb = np.concatenate([lb, np.zeros(mu), np.zeros(m)])
        self.ub = np.concatenate([ub, np.full(mu, np.inf), np.zeros(m)])
        self.max_iter = max_iter

    # ------------------------------------------------------------------ api

    def solve(self, lb=None, ub=None, warm: Basis | None = None) -> LPResult:
        """Solve with optional structural bound overrides."""
        lo, hi = self.lb.copy(), self.ub.copy()
        if lb is not None:
            lo[:self.ns] = lb
        if ub is not None:
            hi[:self.ns] = ub
        if np.any(lo[:self.ns] > hi[:self.ns] + FEAS_TOL):
            return LPResult(LPStatus.INFEASIBLE, None, np.inf, 0)
        if warm is not None:
            res = _Tableau(self, lo, hi).warm_dual(warm)
            if res is not None:
                return res
        return _Tableau(self, lo, hi).two_phase()


class _Tableau:
    def __init__(self, lp: LinearProgram, lo: np.ndarray, hi: np.ndarray):
        self.lp = lp
        self.lo = lo
        self.hi = hi
        self.iters = 0
        self.since_refactor = 0

    # ------------------------------------------------------------ helpers

    def _nonbasic_start(self) -> np.ndarray:
        x = np.where(np.isfinite(self.lo), self.lo, self.hi)
        return x.astype(float)

    def _refactor(self) -> None:
        lp = self.lp
        B = lp.A[:, self.basic]
        try:
            self.T = np.linalg.solve(B, lp.A)
        except np.linalg.LinAlgError:
            raise _Singular from None
        nb = np.ones(lp.N, dtype=bool)
        nb[self.basic] = False
        rhs = lp.b - lp.A[:, nb] @ self.x[nb]
        self.x[self.basic] = np.linalg.solve(B, rhs)
        self.d = self.cost - self.cost[self.basic] @ self.T
        self.since_refactor = 0

    def _pivot(self, r: int, j: int) -> None:
        T = self.T
        piv = T[r, j]
        T[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.d -= self.d[j] * T[r]
        self.d[j] = 0.0
        self.basic[r] = j
        self.is_basic[:] = False
        self.is_basic[self.basic] = True
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self._refactor()

    def _result(self, status: LPStatus) -> LPResult:
        lp = self.lp
        if status is not LPStatus.OPTIMAL:
            return LPResult(status, None, np.inf if status is LPStatus.INFEASIBLE else -np.inf, self.iters)
        x = self.x[:lp.ns].copy()
        x = np.minimum(np.maximum(x, self.lo[:lp.ns]), self.hi[:lp.ns])
        fun = float(lp.c[:lp.ns] @ x)
        basis = Basis(self.basic.copy(), self.x.copy(), self.T, self.d, self.since_refactor)
        return LPResult(status, x, fun, self.iters, basis)

    # ------------------------------------------------------------ primal

    def _primal(self) -> LPStatus:
        lo, hi = self.lo, self.hi
        degenerate = 0
        while True:
            if self.iters >= self.lp.max_iter:
                return LPStatus.ITERATION_LIMIT
            d = self.d
            nb = ~self.is_basic
            movable = hi > lo
            at_lo = np.abs(self.x - lo) <= FEAS_TOL
            at_hi = np.abs(self.x - hi) <= FEAS_TOL
            up = nb & movable & (d < -PIVOT_TOL) & ~at_hi
            down = nb & movable & (d > PIVOT_TOL) & ~at_lo
            cand = up | down
            if not cand.any():
                return LPStatus.OPTIMAL
            if degenerate >= DEGENERATE_STREAK:
                j = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                j = int(np.argmax(score))
            direction = 1.0 if up[j] else -1.0
            col = self.T[:, j] * direction
            xb = self.x[self.basic]
            lb_b, ub_b = lo[self.basic], hi[self.basic]
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = col > PIVOT_TOL
                inc = col < -PIVOT_TOL
                ratio = np.full(col.shape, np.inf)
                ratio[dec] = (xb[dec] - lb_b[dec]) / col[dec]
                ratio[inc] = (ub_b[inc] - xb[inc]) / -col[inc]
            ratio = np.maximum(ratio, 0.0)
            own = hi[j] - lo[j]
            t_min = ratio.min() if ratio.size else np.inf
            if own <= t_min:
                t = own
                r = -1
            else:
                # Harris pass: allow a FEAS_TOL overshoot, then prefer large pivots
                with np.errstate(divide="ignore", invalid="ignore"):
                    relaxed = np.where(dec | inc, ratio + FEAS_TOL / np.abs(col), np.inf)
                ties = np.flatnonzero(ratio <= relaxed.min())
                mag = np.abs(col[ties])
                if degenerate >= DEGENERATE_STREAK:
                    ok = ties[mag >= 0.1 * mag.max()]
                    r = int(ok[np.argmin(self.basic[ok])])
                else:
                    r = int(ties[np.argmax(mag)])
                t = ratio[r]
            if not np.isfinite(t):
                return LPStatus.UNBOUNDED
            self.iters += 1
            degenerate = degenerate + 1 if t <= PIVOT_TOL else 0
            self.x[self.basic] = xb - t * col
            self.x[j] += direction * t
            if r < 0:
                continue
            leaving = self.basic[r]
            self.x[leaving] = lb_b[r] if col[r] > 0 else ub_b[r]
            self._pivot(r, j)

    def two_phase(self) -> LPResult:
        lp = self.lp
        m = lp.m
        self.x = self._nonbasic_start()
        self.x[lp.art0:] = 0.0
        resid = lp.b - lp.A[:, :lp.art0] @ self.x[:lp.art0]
        # Artificial signs are chosen per solve; the column block is rewritten in place.
        sign = np.where(resid >= 0, 1.0, -1.0)
        lp.A[:, lp.art0:] = np.diag(sign)
        self.basic = np.arange(lp.art0, lp.art0 + m)
        self.is_basic = np.zeros(lp.N, dtype=bool)
        self.is_basic[self.basic] = True
        self.x[self.basic] = np.abs(resid)
        hi_art = self.hi[lp.art0:].copy()
        self.hi[lp.art0:] = np.inf
        self.cost = np.zeros(lp.N)
        self.cost[lp.art0:] = 1.0
        try:
            self._refactor()
            status = self._primal()
            if status is not LPStatus.OPTIMAL:
                return self._result(status)
            infeas = float(self.x[lp.art0:].sum())
            if infeas > FEAS_TOL * max(1.0, np.abs(lp.b).max(initial=0.0)):
                return self._result(LPStatus.INFEASIBLE)
            self.hi[lp.art0:] = hi_art
            self.x[lp.art0:] = np.where(self.is_basic[lp.art0:], self.x[lp.art0:], 0.0)
            self.cost = lp.c.copy()
            self._refactor()
            return self._result(self._primal())
        except _Singular:
            return self._result(LPStatus.ITERATION_LIMIT)

    # -------------------------------------------------------------- dual

    def warm_dual(self, warm: Basis) -> LPResult | None:
        """Re-solve from a dual-feasible basis; None means fall back to cold start."""
        lp = self.lp
        lo, hi = self.lo, self.hi
        self.basic = warm.basic.copy()
        self.is_basic = np.zeros(lp.N, dtype=bool)
        self.is_basic[self.basic] = True
        self.x = warm.x.copy()
        self.cost = lp.c.copy()
        nb = ~self.is_basic
        clamped = np.minimum(np.maximum(self.x, lo), hi)
        if warm.T is not None:
            self.T = warm.T.copy()
            self.d = warm.d.copy()
            self.since_refactor = warm.age
            moved = np.flatnonzero(nb & (clamped != self.x))
            for j in moved:
                self.x[self.basic] -= self.T[:, j] * (clamped[j] - self.x[j])
                self.x[j] = clamped[j]
        else:
            self.x[nb] = clamped[nb]
            try:
                self._refactor()
            except _Singular:
                return None
        # restore dual feasibility by bound flips where possible
        movable = nb & (hi > lo)
        wrong_lo = movable & (np.abs(self.x - lo) <= FEAS_TOL) & (self.d < -PIVOT_TOL)
        wrong_hi = movable & (np.abs(self.x - hi) <= FEAS_TOL) & (self.d > PIVOT_TOL)
        if np.any(wrong_lo & ~np.isfinite(hi)) or np.any(wrong_hi & ~np.isfinite(lo)):
            return None
        mid = movable & (np.abs(self.x - lo) > FEAS_TOL) & (np.abs(self.x - hi) > FEAS_TOL)
        if np.any(mid & (np.abs(self.d) > PIVOT_TOL)):
            return None
        if wrong_lo.any() or wrong_hi.any():
            self.x[wrong_lo] = hi[wrong_lo]
            self.x[wrong_hi] = lo[wrong_hi]
            try:
                self._refactor()
            except _Singular:
                return None
        try:
            status = self._dual()
        except _Singular:
            return None
        if status is LPStatus.OPTIMAL:
            # Dual simplex ends primal feasible; a primal pass mops up tolerance drift.
            try:
                status = self._primal()
            except _Singular:
                return None
        return self._result(status)

    def _dual(self) -> LPStatus:
        lo, hi = self.lo, self.hi
        while True:
            if self.iters >= self.lp.max_iter:
                return LPStatus.ITERATION_LIMIT
            xb = self.x[self.basic]
            lb_b, ub_b = lo[self.basic], hi[self.basic]
            below = lb_b - xb
            above = xb - ub_b
            infeas = np.maximum(below, above)
            if infeas.size == 0:
                return LPStatus.OPTIMAL
            r = int(np.argmax(infeas))
            if infeas[r] <= FEAS_TOL:
                return LPStatus.OPTIMAL
            go_up = below[r] > above[r]
            row = self.T[r]
            nb = ~self.is_basic
            movable = nb & (hi > lo)
            at_hi = np.abs(self.x - hi) <= FEAS_TOL
            inc_ok = movable & ~at_hi  # x_j may increase
            dec_ok = movable & at_hi   # x_j may decrease
            # x_B[r] changes by -row[j] * delta_j
            if go_up:
                elig = (inc_ok & (row < -PIVOT_TOL)) | (dec_ok & (row > PIVOT_TOL))
            else:
                elig = (inc_ok & (row > PIVOT_TOL)) | (dec_ok & (row < -PIVOT_TOL))
            if not elig.any():
                return LPStatus.INFEASIBLE
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(elig, np.abs(self.d) / np.abs(row), np.inf)
            with np.errstate(divide="ignore", invalid="ignore"):
                relaxed = np.where(elig, (np.abs(self.d) + PIVOT_TOL) / np.abs(row), np.inf)
            ties = np.flatnonzero(ratios <= relaxed.min())
            j = int(ties[np.argmax(np.abs(row[ties]))])
            target = lb_b[r] if go_up else ub_b[r]
            delta = (xb[r] - target) / row[j]
            self.iters += 1
            self.x[self.basic] = xb - delta * self.T[:, j]
            self.x[j] += delta
            leaving = self.basic[r]
            self.x[leaving] = target
            self._pivot(r, j)


class _Singular(Exception):
    pass


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None) -> LPResult:
    """One-shot convenience wrapper."""
    return LinearProgram(c, A_ub, b_ub, A_eq, b_eq, lb, ub).solve()
