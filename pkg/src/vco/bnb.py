"""Depth-first branch and bound over binary variables of a LinearProgram."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lp import LinearProgram, LPStatus

INT_TOL = 1e-6


class NodeLimit(RuntimeError):
    pass


@dataclass
class BnBResult:
    x: np.ndarray | None
    value: float
    nodes: int


def branch_and_bound(lp: LinearProgram, binaries: Sequence[int], *, lb: np.ndarray, ub: np.ndarray,
                     incumbent: tuple[np.ndarray, float] | None = None, tol: float = 1e-9,
                     node_limit: int = 500_000) -> BnBResult:
    """Minimise ``lp`` with ``binaries`` restricted to {0, 1}.

    Branches on the first fractional variable in ``binaries`` order and
    explores the 1-branch first. Children warm-start from the parent basis.
    """
    best_x, best = (None, np.inf) if incumbent is None else (incumbent[0].copy(), float(incumbent[1]))
    order = np.asarray(binaries, dtype=int)
    stack = [(lb.copy(), ub.copy(), None)]
    nodes = 0
    while stack:
        if nodes >= node_limit:
            raise NodeLimit(f"branch and bound exceeded {node_limit} nodes")
        lo, hi, warm = stack.pop()
        nodes += 1
        res = lp.solve(lo, hi, warm=warm)
        if res.status is LPStatus.INFEASIBLE:
            continue
        if not res.ok:
            raise RuntimeError(f"LP relaxation failed: {res.status.value}")
        if res.fun >= best - tol:
            continue
        vals = res.x[order]
        frac = np.abs(vals - np.round(vals)) > INT_TOL
        if not frac.any():
            x = res.x.copy()
            x[order] = np.round(vals)
            best_x, best = x, res.fun
            continue
        v = int(order[np.flatnonzero(frac)[0]])
        lo0, hi0 = lo.copy(), hi.copy()
        hi0[v] = 0.0
        lo1, hi1 = lo.copy(), hi.copy()
        lo1[v] = 1.0
        stack.append((lo0, hi0, res.basis))
        stack.append((lo1, hi1, res.basis))
    return BnBResult(best_x, best, nodes)
