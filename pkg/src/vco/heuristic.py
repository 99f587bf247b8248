"""Greedy seeding plus local search for instances too large for the exact master.

Results are not certified optimal. A solution is a list of blocks; each
block is charged with its best internal leader, so the search only moves
nodes between blocks and leader choice is recomputed on the fly.
"""

from __future__ import annotations

import numpy as np

from .model import TOL, Configuration, Instance, normal_objective


def _block_cost(inst: Instance, block: np.ndarray) -> tuple[float, int]:
    """(cost, leader) for a block under its best leader, failure term included."""
    sub = inst.D[np.ix_(block, block)]
    rows = sub.sum(axis=1)
    dv = inst.dv[block]
    f = inst.f[block]
    g = dv + rows
    # exd[l, k]: backup k taking over the followers of leader l (the block minus l)
    exd = dv[None, :] + rows[None, :] - sub.T
    np.fill_diagonal(exd, np.inf)
    best_exd = exd.min(axis=1)
    cost = g + f * (best_exd - g)
    pos = int(np.argmin(cost))
    return float(cost[pos]), int(block[pos])


def _seed(inst: Instance, p: int) -> list[list[int]]:
    n = inst.n
    m = inst.min_committee - 1
    score = inst.dv + inst.D.sum(axis=1) / max(n - 1, 1)
    order = np.argsort(score, kind="stable")
    free = set(range(n))
    blocks: list[list[int]] = []
    for i in order:
        i = int(i)
        if len(blocks) == p:
            break
        if i not in free or len(free) < m + 1:
            continue
        free.discard(i)
        near = sorted(free, key=lambda j: (inst.D[i, j], j))[:m]
        free.difference_update(near)
        blocks.append([i, *near])
    for j in sorted(free):
        b = min(range(len(blocks)), key=lambda b: (inst.D[blocks[b][0], j], b))
        blocks[b].append(j)
    return blocks


def _local_search(inst: Instance, blocks: list[list[int]], max_rounds: int = 200) -> list[list[int]]:
    size_min = inst.min_committee
    blocks = [sorted(b) for b in blocks]
    cost = [_block_cost(inst, np.array(b))[0] for b in blocks]
    for _ in range(max_rounds):
        improved = False
        for a in range(len(blocks)):
            for b in range(len(blocks)):
                if a == b:
                    continue
                # relocate one node a -> b
                if len(blocks[a]) > size_min:
                    for j in list(blocks[a]):
                        na = [x for x in blocks[a] if x != j]
                        nb = sorted(blocks[b] + [j])
                        ca = _block_cost(inst, np.array(na))[0]
                        cb = _block_cost(inst, np.array(nb))[0]
                        if ca + cb < cost[a] + cost[b] - TOL:
                            blocks[a], blocks[b], cost[a], cost[b] = na, nb, ca, cb
                            improved = True
                            if len(blocks[a]) <= size_min:
                                break
                if b <= a:
                    continue
                # swap one node between a and b
                for j in list(blocks[a]):
                    if j not in blocks[a]:
                        continue
                    for k in list(blocks[b]):
                        na = sorted([x for x in blocks[a] if x != j] + [k])
                        nb = sorted([x for x in blocks[b] if x != k] + [j])
                        ca = _block_cost(inst, np.array(na))[0]
                        cb = _block_cost(inst, np.array(nb))[0]
                        if ca + cb < cost[a] + cost[b] - TOL:
                            blocks[a], blocks[b], cost[a], cost[b] = na, nb, ca, cb
                            improved = True
                            break
        if not improved:
            break
    return blocks


def _to_configuration(inst: Instance, blocks: list[list[int]]) -> Configuration:
    leader_of = [0] * inst.n
    for b in blocks:
        _, leader = _block_cost(inst, np.array(b))
        for j in b:
            leader_of[j] = leader
    return Configuration(tuple(leader_of))


def heuristic_solve(inst: Instance) -> tuple[Configuration, float]:
    """Best configuration found over all committee counts, with its total objective."""
    from .benders import q_star

    best_cfg, best = None, np.inf
    for p in range(1, inst.n // inst.min_committee + 1):
        blocks = _local_search(inst, _seed(inst, p))
        cfg = _to_configuration(inst, blocks)
        val = normal_objective(inst, cfg) + q_star(inst, cfg)
        if val < best - TOL:
            best_cfg, best = cfg, val
    return best_cfg, best
