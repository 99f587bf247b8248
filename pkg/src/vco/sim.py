"""Discrete-event simulator for committees of a parallel BFT network.

Each committee orders requests one at a time through PrePrepare,
Prepare, Commit and a round trip to the verification committee. Rounds
are synchronized: a round ends when its slowest message lands (see
``synchronized_round``). Leader crashes are detected by timeout and
resolved through ViewChange, ViewChangeAck and NewView rounds, with the
new leader chosen by the view sequencer or at random.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .model import INACTIVE, Configuration, Instance, validate_configuration
from .sequencer import EmptyCommittee, init_view_state, on_leader_failure, remove_follower, rotate_leader

STRATEGIES = ("vco", "normal-only", "random")
FAULT_KINDS = ("crash", "slow")


class LivenessLost(RuntimeError):
    pass


class ConfigInvalid(ValueError):
    pass


class MessageKind(str, Enum):
    PRE_PREPARE = "PrePrepare"
    PREPARE = "Prepare"
    COMMIT = "Commit"
    VERIFY_REQ = "VerifyReq"
    VERIFY_REPLY = "VerifyReply"
    VIEW_CHANGE = "ViewChange"
    VIEW_CHANGE_ACK = "ViewChangeAck"
    NEW_VIEW = "NewView"


VERIFIER = -1  # the verification committee as a single endpoint


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    sender: int
    receiver: int
    view: int
    seq: int
    send: float
    arrival: float


@dataclass(frozen=True)
class Fault:
    time: float
    node: int
    kind: str = "crash"


@dataclass
class SimConfig:
    inst: Instance
    cfg: Configuration
    strategy: str = "vco"
    rate: float = 20.0  # requests per committee per second
    requests: int = 100  # total, dealt round-robin to committees
    fault_schedule: Sequence[Fault] = ()
    slow_factor: float = 10.0
    timeout: float | None = None
    jitter: float = 0.0
    seed: int = 0
    record_messages: bool = False

    def __post_init__(self):
        self.fault_schedule = tuple(Fault(float(f[0]), int(f[1]), str(f[2])) if not isinstance(f, Fault) else f
                                    for f in self.fault_schedule)
        if self.strategy not in STRATEGIES:
            raise ConfigInvalid(f"unknown strategy {self.strategy!r}")
        if self.rate <= 0:
            raise ConfigInvalid("request rate must be positive")
        if self.requests < 0:
            raise ConfigInvalid("request count must be nonnegative")
        if self.slow_factor < 1:
            raise ConfigInvalid("slow_factor must be at least 1")
        if not 0 <= self.jitter < 1:
            raise ConfigInvalid("jitter must lie in [0, 1)")
        if self.timeout is not None and self.timeout <= self.max_delay:
            raise ConfigInvalid(f"timeout {self.timeout} must exceed the largest delay {self.max_delay}")
        for f in self.fault_schedule:
            if f.kind not in FAULT_KINDS:
                raise ConfigInvalid(f"unknown fault kind {f.kind!r}")
            if not 0 <= f.node < self.inst.n:
                raise ConfigInvalid(f"fault targets unknown node {f.node}")
        v = validate_configuration(self.inst, self.cfg)
        if v:
            raise ConfigInvalid("; ".join(map(str, v)))

    @property
    def max_delay(self) -> float:
        inst = self.inst
        return float(max(inst.D.max(initial=0.0), inst.dv.max(initial=0.0), inst.dv_rev.max(initial=0.0)))

    @property
    def resolved_timeout(self) -> float:
        """Explicit timeout, or three times the largest link delay (at least 1 ms)."""
        if self.timeout is not None:
            return float(self.timeout)
        return max(3.0 * self.max_delay, 1.0)


@dataclass
class SimMetrics:
    throughput: float
    latency_mean: float
    latency_p50: float
    latency_p99: float
    view_changes: int
    committed: int
    trace_digest: str
    latencies: tuple[float, ...] = ()
    committee_latency: dict[int, float] = field(default_factory=dict)
    trace: list[str] = field(default_factory=list, repr=False)
    messages: list[Message] = field(default_factory=list, repr=False)


def synchronized_round(start: float, arrivals: np.ndarray) -> float:
    """The phase-latency model: a round completes when its last message arrives."""
    return start + (float(arrivals.max()) if arrivals.size else 0.0)


def ack_quorum(committee_size: int) -> int:
    """ViewChangeAcks the new leader waits for: ceil((2N - 5) / 3), never negative."""
    return max(0, math.ceil((2 * committee_size - 5) / 3))


def request_phase_delays(inst: Instance, leader: int, followers: Sequence[int]) -> tuple[float, float, float, float]:
    """Noise-free phase durations for one request; handy for recomputation checks."""
    f = list(followers)
    pp = max((float(inst.D[leader, j]) for j in f), default=0.0)
    pairs = [float(inst.D[a, b]) for a in f for b in f if a != b]
    pr = max(pairs, default=0.0)
    return pp, pr, pr, float(inst.dv[leader]) + float(inst.dv_rev[leader])


@dataclass
class _Committee:
    cid: int
    leader: int
    view: int = 0
    status: str = "normal"  # normal | stalled | vc
    epoch: int = 0
    queue: deque = field(default_factory=deque)
    current: int | None = None
    phase_start: float = 0.0
    detect_pending: bool = False
    vc_size: int = 0
    latencies: list[float] = field(default_factory=list)


class _Simulation:
    def __init__(self, sim: SimConfig):
        self.sim = sim
        self.inst = sim.inst
        self.timeout = sim.resolved_timeout
        jitter_ss, policy_ss = np.random.SeedSequence(sim.seed).spawn(2)
        self.rng = np.random.default_rng(jitter_ss)
        self.policy_rng = np.random.default_rng(policy_ss)
        self.state = init_view_state(sim.cfg, sim.inst)
        self.slow: set[int] = set()
        self.crashed: set[int] = set()
        self.heap: list = []
        self.ordinal = 0
        self.trace: list[str] = []
        self.messages: list[Message] = []
        self.committees = {i: _Committee(i, i) for i in sim.cfg.leaders()}
        self.cid_of_leader = {i: i for i in sim.cfg.leaders()}
        self.arrival: dict[int, float] = {}
        self.committed: set[int] = set()
        self.latencies: list[float] = []
        self.view_changes = 0
        self.last_commit = 0.0
        self.last_arrival = 0.0
        self.seq = 0

    # ----------------------------------------------------------- plumbing

    def push(self, t: float, kind: str, *payload) -> None:
        heapq.heappush(self.heap, (t, self.ordinal, kind, payload))
        self.ordinal += 1

    def log(self, t: float, text: str) -> None:
        self.trace.append(f"{t!r} {text}")

    def link(self, a: int, b: int) -> float:
        inst = self.inst
        if a == VERIFIER:
            base = float(inst.dv_rev[b])
        elif b == VERIFIER:
            base = float(inst.dv[a])
        else:
            base = float(inst.D[a, b])
        if a in self.slow or b in self.slow:
            base *= self.sim.slow_factor
        return base

    def send(self, kind: MessageKind, pairs: list[tuple[int, int]], t0: float, view: int) -> np.ndarray:
        """Delays of a batch of messages sent at t0 (jitter applied)."""
        base = np.array([self.link(a, b) for a, b in pairs], dtype=float)
        if self.sim.jitter > 0 and base.size:
            eps = self.sim.jitter
            base = base * self.rng.uniform(1.0 - eps, 1.0 + eps, size=base.size)
        if self.sim.record_messages:
            for (a, b), d in zip(pairs, base):
                self.messages.append(Message(kind, a, b, view, self.seq, t0, t0 + float(d)))
        return base

    def members(self, c: _Committee) -> list[int]:
        return self.state.cfg.followers(c.leader)

    # ------------------------------------------------------------ request path

    def start_next(self, c: _Committee, t: float) -> None:
        if c.status != "normal" or c.current is not None or not c.queue:
            return
        c.current = c.queue.popleft()
        self.seq += 1
        self.log(t, f"start c={c.cid} req={c.current} leader={c.leader} view={c.view}")
        self.run_phase(c, t, 0)

    def run_phase(self, c: _Committee, t: float, phase: int) -> None:
        leader = c.leader
        followers = self.members(c)
        if phase == 0:
            d = self.send(MessageKind.PRE_PREPARE, [(leader, j) for j in followers], t, c.view)
            end = synchronized_round(t, d)
            if end - t > self.timeout:
                # followers give up on a leader that is too slow
                self.log(t, f"slow-leader c={c.cid} leader={leader}")
                self.stall(c, t, detect_at=t + self.timeout)
                return
        elif phase in (1, 2):
            kind = MessageKind.PREPARE if phase == 1 else MessageKind.COMMIT
            d = self.send(kind, [(a, b) for a in followers for b in followers if a != b], t, c.view)
            end = synchronized_round(t, d)
        else:
            req = self.send(MessageKind.VERIFY_REQ, [(leader, VERIFIER)], t, c.view)
            rep = self.send(MessageKind.VERIFY_REPLY, [(VERIFIER, leader)], t + float(req[0]), c.view)
            end = t + float(req[0]) + float(rep[0])
        self.push(end, "phase", c.cid, c.epoch, phase)

    def on_phase(self, t: float, cid: int, epoch: int, phase: int) -> None:
        c = self.committees[cid]
        if epoch != c.epoch or c.current is None:
            return
        if phase < 3:
            self.run_phase(c, t, phase + 1)
            return
        req = c.current
        if req in self.committed:
            raise AssertionError(f"request {req} committed twice")
        self.committed.add(req)
        lat = t - self.arrival[req]
        self.latencies.append(lat)
        c.latencies.append(lat)
        self.last_commit = max(self.last_commit, t)
        self.log(t, f"commit c={cid} req={req} view={c.view} latency={lat!r}")
        c.current = None
        self.start_next(c, t)

    def on_arrival(self, t: float, cid: int, req: int) -> None:
        c = self.committees[cid]
        self.arrival[req] = t
        self.last_arrival = max(self.last_arrival, t)
        c.queue.append(req)
        self.log(t, f"arrive c={cid} req={req}")
        if c.status == "stalled" and not c.detect_pending:
            c.detect_pending = True
            self.push(t + self.timeout, "detect", cid, c.epoch)
        self.start_next(c, t)

    # ------------------------------------------------------------ faults

    def stall(self, c: _Committee, t: float, detect_at: float | None) -> None:
        """The leader stops serving; the request in flight goes back to the queue head."""
        c.epoch += 1
        if c.current is not None:
            c.queue.appendleft(c.current)
            c.current = None
        c.status = "stalled"
        c.detect_pending = False
        if detect_at is None and c.queue:
            detect_at = t + self.timeout
        if detect_at is not None:
            c.detect_pending = True
            self.push(detect_at, "detect", c.cid, c.epoch)

    def check_liveness(self, c: _Committee, t: float) -> None:
        live = [j for j in self.members(c) if j not in self.crashed]
        if c.leader not in self.crashed:
            live.append(c.leader)
        need = 2 * self.inst.f_min + 1
        if len(live) < need:
            raise LivenessLost(f"committee {c.cid} has {len(live)} live members at t={t:.3f}, needs {need}")

    def on_fault(self, t: float, node: int, kind: str) -> None:
        self.log(t, f"fault {kind} node={node}")
        leader = self.state.cfg.leader_of[node]
        if leader == INACTIVE or node in self.crashed:
            return
        c = self.committees[self.cid_of_leader[leader]]
        if kind == "slow":
            self.slow.add(node)
            return
        self.crashed.add(node)
        if node == c.leader:
            if c.status != "stalled":
                self.stall(c, t, detect_at=None)
        else:
            self.state = remove_follower(self.state, node)
        self.check_liveness(c, t)

    def on_detect(self, t: float, cid: int, epoch: int) -> None:
        c = self.committees[cid]
        if epoch != c.epoch:
            return
        c.detect_pending = False
        old = c.leader
        size = len(self.members(c)) + 1
        try:
            if self.sim.strategy == "random":
                candidates = [j for j in self.members(c) if j not in self.crashed]
                if not candidates:
                    raise EmptyCommittee(f"committee of {old} has no surviving member")
                k = int(candidates[self.policy_rng.integers(len(candidates))])
                self.state = rotate_leader(self.state, old, k)
            else:
                self.state = on_leader_failure(self.state, old)
        except EmptyCommittee as exc:
            raise LivenessLost(str(exc)) from exc
        new = self.state.history[-1][2]
        del self.cid_of_leader[old]
        self.cid_of_leader[new] = cid
        c.leader = new
        c.view += 1
        c.status = "vc"
        c.vc_size = size
        c.epoch += 1
        self.view_changes += 1
        self.log(t, f"detect c={cid} failed={old} backup={new} view={c.view}")
        if new in self.crashed:
            # the chosen backup is itself dead; followers will time out again
            self.stall(c, t, detect_at=t + self.timeout)
            return
        followers = [j for j in self.members(c) if j not in self.crashed]
        group = [new] + followers
        d = self.send(MessageKind.VIEW_CHANGE, [(a, b) for a in group for b in group if a != b], t, c.view)
        self.push(synchronized_round(t, d), "vc", cid, c.epoch, 1)

    def on_vc(self, t: float, cid: int, epoch: int, step: int) -> None:
        c = self.committees[cid]
        if epoch != c.epoch:
            return
        followers = [j for j in self.members(c) if j not in self.crashed]
        if step == 1:
            q = ack_quorum(c.vc_size)
            if len(followers) < q:
                raise LivenessLost(f"committee {cid}: {len(followers)} ack senders, quorum {q}")
            d = self.send(MessageKind.VIEW_CHANGE_ACK, [(j, c.leader) for j in followers], t, c.view)
            wait = float(np.sort(d)[q - 1]) if q > 0 else 0.0
            self.log(t, f"vc-acks c={cid} quorum={q}")
            self.push(t + wait, "vc", cid, epoch, 2)
        elif step == 2:
            d = self.send(MessageKind.NEW_VIEW, [(c.leader, j) for j in followers], t, c.view)
            self.push(synchronized_round(t, d), "vc", cid, epoch, 3)
        else:
            c.status = "normal"
            self.log(t, f"new-view c={cid} leader={c.leader} view={c.view}")
            self.start_next(c, t)

    # ------------------------------------------------------------ driver

    def run(self) -> SimMetrics:
        sim = self.sim
        cids = sorted(self.committees)
        interval = 1000.0 / sim.rate
        for r in range(sim.requests):
            cid = cids[r % len(cids)]
            self.push((r // len(cids)) * interval, "arrival", cid, r)
        for f in sim.fault_schedule:
            self.push(f.time, "fault", f.node, f.kind)
        handlers = {"arrival": self.on_arrival, "phase": self.on_phase, "fault": self.on_fault,
                    "detect": self.on_detect, "vc": self.on_vc}
        while self.heap:
            t, _, kind, payload = heapq.heappop(self.heap)
            handlers[kind](t, *payload)
        return self.metrics()

    def metrics(self) -> SimMetrics:
        lat = np.array(self.latencies, dtype=float)
        horizon = max(self.last_commit, self.last_arrival)
        committed = len(self.committed)
        throughput = committed / (horizon / 1000.0) if horizon > 0 else 0.0
        if lat.size:
            mean, p50, p99 = float(lat.mean()), float(np.percentile(lat, 50)), float(np.percentile(lat, 99))
        else:
            mean = p50 = p99 = float("nan")
        digest = hashlib.sha256("\n".join(self.trace).encode()).hexdigest()
        per = {c.cid: float(np.mean(c.latencies)) for c in self.committees.values() if c.latencies}
        return SimMetrics(throughput, mean, p50, p99, self.view_changes, committed, digest,
                          tuple(self.latencies), per, self.trace, self.messages)


def run(sim: SimConfig) -> SimMetrics:
    return _Simulation(sim).run()
