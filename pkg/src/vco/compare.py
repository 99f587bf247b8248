"""Strategy comparison runs: build a configuration per strategy, inject faults, simulate."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .benders import solve_normal_case, solve_vco
from .model import Configuration, Instance
from .sim import STRATEGIES, Fault, SimConfig, SimMetrics, run

CSV_HEADER = ["strategy", "seed", "n", "faults", "throughput_ops", "latency_mean_ms", "latency_p50_ms",
              "latency_p99_ms", "view_changes", "committed", "error"]
FAULT_TARGETS = ("leaders", "flaky", "any")


def random_configuration(inst: Instance, seed: int) -> Configuration:
    """Shuffle, cut into blocks of the minimum committee size, fold the rest into the last block."""
    n, size = inst.n, inst.min_committee
    if n < size:
        raise ValueError(f"n={n} cannot host a committee of {size}")
    rng = np.random.default_rng(seed)
    order = [int(v) for v in rng.permutation(n)]
    blocks = [order[s:s + size] for s in range(0, n - n % size, size)]
    blocks[-1].extend(order[n - n % size:])
    leader_of = [0] * n
    for block in blocks:
        leader = block[int(rng.integers(len(block)))]
        for j in block:
            leader_of[j] = leader
    return Configuration(tuple(leader_of))


@dataclass(frozen=True)
class Workload:
    rate: float = 10.0  # requests per committee per second
    requests: int = 200


@dataclass(frozen=True)
class FaultModel:
    """``crashes`` distinct nodes crash at uniform times inside ``window`` (ms).

    target: ``leaders`` picks initial leaders uniformly, ``flaky`` picks
    initial leaders with probability proportional to f_i, ``any`` picks
    among all nodes.
    """

    crashes: int = 0
    target: str = "leaders"
    window: tuple[float, float] = (100.0, 1000.0)
    kind: str = "crash"

    def __post_init__(self):
        if self.target not in FAULT_TARGETS:
            raise ValueError(f"unknown fault target {self.target!r}")
        if self.crashes < 0:
            raise ValueError("crashes must be nonnegative")

    def schedule(self, inst: Instance, cfg: Configuration, seed: int) -> list[Fault]:
        if self.crashes == 0:
            return []
        rng = np.random.default_rng([seed, 7])
        pool = np.arange(inst.n) if self.target == "any" else np.array(cfg.leaders())
        k = min(self.crashes, pool.size)
        p = None
        if self.target == "flaky":
            w = inst.f[pool].astype(float)
            p = w / w.sum() if w.sum() > 0 else None
            k = min(k, int(np.count_nonzero(w))) if p is not None else k
        nodes = rng.choice(pool, size=k, replace=False, p=p)
        times = np.sort(rng.uniform(self.window[0], self.window[1], size=k))
        return [Fault(float(t), int(v), self.kind) for t, v in zip(times, nodes)]


@dataclass
class CompareRow:
    strategy: str
    seed: int
    n: int
    faults: int
    metrics: SimMetrics | None = None
    error: str = ""

    def csv_fields(self) -> list:
        m = self.metrics
        if m is None:
            return [self.strategy, self.seed, self.n, self.faults, "", "", "", "", "", "", self.error]
        return [self.strategy, self.seed, self.n, self.faults, f"{m.throughput:.6f}", f"{m.latency_mean:.6f}",
                f"{m.latency_p50:.6f}", f"{m.latency_p99:.6f}", m.view_changes, m.committed, self.error]


@dataclass
class Aggregate:
    strategy: str
    runs: int
    failed: int
    throughput: float
    latency_mean: float
    latency_p50: float
    latency_p99: float
    view_changes: float
    committed: float

    def line(self) -> str:
        return (f"aggregate strategy={self.strategy} runs={self.runs} failed={self.failed} "
                f"throughput_ops={self.throughput:.6f} latency_mean_ms={self.latency_mean:.6f} "
                f"latency_p50_ms={self.latency_p50:.6f} latency_p99_ms={self.latency_p99:.6f} "
                f"view_changes={self.view_changes:.3f} committed={self.committed:.3f}")


@dataclass
class CompareTable:
    rows: list[CompareRow]
    aggregates: list[Aggregate] = field(default_factory=list)

    def row(self, strategy: str, seed: int) -> CompareRow:
        return next(r for r in self.rows if r.strategy == strategy and r.seed == seed)

    def aggregate(self, strategy: str) -> Aggregate:
        return next(a for a in self.aggregates if a.strategy == strategy)


def _aggregate(strategy: str, rows: list[CompareRow]) -> Aggregate:
    ok = [r.metrics for r in rows if r.metrics is not None]

    def mean(attr):
        vals = [getattr(m, attr) for m in ok]
        return float(np.mean(vals)) if vals else float("nan")

    return Aggregate(strategy, len(rows), len(rows) - len(ok), mean("throughput"), mean("latency_mean"),
                     mean("latency_p50"), mean("latency_p99"), mean("view_changes"), mean("committed"))


def strategy_configuration(inst: Instance, strategy: str, seed: int) -> Configuration:
    if strategy == "vco":
        return solve_vco(inst).cfg
    if strategy == "normal-only":
        return solve_normal_case(inst)[0]
    if strategy == "random":
        return random_configuration(inst, seed)
    raise ValueError(f"unknown strategy {strategy!r}")


def compare(inst: Instance, strategies: Sequence[str], workload: Workload, faults: FaultModel,
            seeds: Iterable[int], *, jitter: float = 0.1, timeout: float | None = None,
            slow_factor: float = 10.0) -> CompareTable:
    if not strategies:
        raise ValueError("at least one strategy is required")
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}")
    seeds = sorted(int(s) for s in seeds)
    cache: dict[str, Configuration | Exception] = {}
    rows: list[CompareRow] = []
    for strategy in sorted(set(strategies)):
        for seed in seeds:
            row = CompareRow(strategy, seed, inst.n, faults.crashes)
            try:
                if strategy == "random":
                    cfg = random_configuration(inst, seed)
                else:
                    # solver strategies are deterministic, so solve once per strategy
                    if strategy not in cache:
                        try:
                            cache[strategy] = strategy_configuration(inst, strategy, seed)
                        except Exception as exc:  # noqa: BLE001 - recorded per row
                            cache[strategy] = exc
                    if isinstance(cache[strategy], Exception):
                        raise cache[strategy]
                    cfg = cache[strategy]
                schedule = faults.schedule(inst, cfg, seed)
                row.faults = len(schedule)
                sim = SimConfig(inst, cfg, strategy=strategy, rate=workload.rate, requests=workload.requests,
                                fault_schedule=schedule, slow_factor=slow_factor, timeout=timeout,
                                jitter=jitter, seed=seed)
                row.metrics = run(sim)
            except Exception as exc:  # noqa: BLE001 - one failed row must not sink the table
                row.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
            rows.append(row)
    aggregates = [_aggregate(s, [r for r in rows if r.strategy == s]) for s in sorted(set(strategies))]
    return CompareTable(rows, aggregates)


def write_csv(table: CompareTable, out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in table.rows:
        w.writerow(r.csv_fields())


def csv_text(table: CompareTable) -> str:
    buf = io.StringIO()
    write_csv(table, buf)
    return buf.getvalue()


def tiered_instance(seed: int, n: int = 40, regions: int = 4, intra: tuple[float, float] = (1.0, 5.0),
                    inter: tuple[float, float] = (20.0, 50.0), dv: tuple[float, float] = (5.0, 15.0),
                    f_base: float = 0.01, flaky: int = 8, f_flaky: float = 0.3) -> Instance:
    """Nodes spread over regions: cheap links inside a region, expensive ones across.

    ``flaky`` randomly chosen nodes get failure probability ``f_flaky``.
    """
    rng = np.random.default_rng(seed)
    region = np.arange(n) % regions
    rng.shuffle(region)
    same = region[:, None] == region[None, :]
    lo = np.where(same, intra[0], inter[0])
    hi = np.where(same, intra[1], inter[1])
    D = rng.uniform(lo, hi)
    D = np.triu(D, 1)
    D = D + D.T
    f = np.full(n, f_base)
    f[rng.choice(n, size=min(flaky, n), replace=False)] = f_flaky
    return Instance(D=D, dv=rng.uniform(dv[0], dv[1], size=n), f=f)
