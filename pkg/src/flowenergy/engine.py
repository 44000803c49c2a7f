"""Exact event-driven execution of scheduling policies.

Speeds are piecewise constant between events (arrivals and completions), so
each segment is integrated in closed form; there is no time-stepping error.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

from .errors import InvalidInstanceError, MalformedTrajectoryError, SimulationError
from .power import PowerFunction
from .workload import Instance

# A job counts as complete once its remaining work falls below this fraction
# of its size; guards floating-point drift in long runs.
COMPLETION_TOL = 1e-12

# Abort if the next event is further away than this (livelock guard).
TIME_CAP = 1e12


@dataclass
class SimState:
    """Read-only view handed to policies at decision points."""

    time: float
    m: int
    power: PowerFunction
    remaining: dict[int, float]
    sizes: dict[int, float]


@dataclass(frozen=True)
class Decision:
    """Per-event policy output: which jobs run where and how fast.

    Jobs absent from `speeds` are queued.  `servers` maps the same job ids
    to server indices.
    """

    speeds: dict[int, float]
    servers: dict[int, int]


@dataclass(frozen=True)
class Segment:
    """One constant-speed interval of a trajectory.

    `remaining` holds per-job remaining work at `start` for every unfinished
    arrived job; `speeds`/`servers` cover only the jobs running in this
    segment.
    """

    start: float
    end: float
    remaining: dict[int, float]
    speeds: dict[int, float]
    servers: dict[int, int]


@dataclass
class Trajectory:
    m: int
    power: PowerFunction
    segments: list[Segment] = field(default_factory=list)
    arrivals: dict[int, float] = field(default_factory=dict)
    sizes: dict[int, float] = field(default_factory=dict)
    completions: dict[int, float] = field(default_factory=dict)
    events: list[tuple[float, str, int]] = field(default_factory=list)

    @property
    def makespan(self) -> float:
        return self.segments[-1].end if self.segments else 0.0

    def event_times(self) -> list[float]:
        return sorted({t for t, _, _ in self.events})

    def remaining_at(self, t: float) -> dict[int, float]:
        """Per-job remaining work of arrived unfinished jobs at time t.

        At segment boundaries the left segment wins, so a job completing
        exactly at t is reported with remaining 0 and dropped.
        """
        out: dict[int, float] = {}
        for seg in self.segments:
            if seg.start <= t <= seg.end:
                for jid, rem in seg.remaining.items():
                    r = rem - seg.speeds.get(jid, 0.0) * (t - seg.start)
                    if r > COMPLETION_TOL * self.sizes[jid]:
                        out[jid] = r
                return out
        return out

    def export_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for seg in self.segments:
                fh.write(
                    json.dumps(
                        {
                            "start": seg.start,
                            "end": seg.end,
                            "remaining": seg.remaining,
                            "speeds": seg.speeds,
                            "servers": seg.servers,
                        }
                    )
                    + "\n"
                )


@dataclass
class CostBreakdown:
    flow_time: float
    energy: float
    total: float
    per_job_flow: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "flow_time": self.flow_time,
            "energy": self.energy,
            "total": self.total,
            "per_job_flow": self.per_job_flow,
        }


def _server_power(power: PowerFunction, speeds: dict[int, float], servers: dict[int, int]) -> float:
    """Total instantaneous power: each server draws P(sum of its job speeds).

    For one-job-per-server policies this is just the sum of per-job P(s);
    processor sharing splits one physical speed across a server's jobs.
    """
    per_server: dict[int, float] = {}
    for jid, sp in speeds.items():
        per_server[servers[jid]] = per_server.get(servers[jid], 0.0) + sp
    return sum(power.power(s) for s in per_server.values())


def _validate_decision(decision: Decision, state: SimState, shared: bool) -> None:
    for jid in decision.speeds:
        if jid not in state.remaining:
            raise SimulationError(f"decision assigns speed to unknown/finished job {jid}")
        if decision.speeds[jid] <= 0:
            raise SimulationError(f"decision assigns nonpositive speed to job {jid}")
        if jid not in decision.servers:
            raise SimulationError(f"running job {jid} has no server")
        if not 0 <= decision.servers[jid] < state.m:
            raise SimulationError(f"job {jid} assigned to invalid server {decision.servers[jid]}")
    if not shared:
        used = list(decision.servers[j] for j in decision.speeds)
        if len(used) != len(set(used)):
            raise SimulationError("two jobs scheduled on one server")


def simulate(
    instance: Instance, policy, record: bool = True
) -> tuple[Trajectory, CostBreakdown]:
    """Run `policy` on `instance` until all jobs complete."""
    policy.reset(instance)
    jobs = instance.jobs
    traj = Trajectory(m=instance.m, power=instance.power)
    remaining: dict[int, float] = {}
    sizes: dict[int, float] = {}
    state = SimState(0.0, instance.m, instance.power, remaining, sizes)
    t = 0.0
    i = 0
    flow_acc = 0.0
    energy_acc = 0.0
    shared = getattr(policy, "shared_servers", False)

    while True:
        while i < len(jobs) and jobs[i].arrival <= t:
            job = jobs[i]
            remaining[job.id] = job.size
            sizes[job.id] = job.size
            traj.arrivals[job.id] = job.arrival
            traj.sizes[job.id] = job.size
            traj.events.append((job.arrival, "arrival", job.id))
            state.time = t
            policy.on_arrival(job, state)
            i += 1
        if not remaining:
            if i >= len(jobs):
                break
            t = jobs[i].arrival
            continue

        state.time = t
        decision = policy.decide(state)
        _validate_decision(decision, state, shared)

        horizons = []
        if i < len(jobs):
            horizons.append(jobs[i].arrival - t)
        for jid, sp in decision.speeds.items():
            horizons.append(remaining[jid] / sp)
        if not horizons:
            raise SimulationError(f"no running job and no future arrival at t={t}")
        tau = min(horizons)
        if tau > TIME_CAP:
            raise SimulationError(f"no event within {TIME_CAP} time units at t={t}")
        tau = max(tau, 0.0)

        n = len(remaining)
        flow_acc += n * tau
        energy_acc += _server_power(instance.power, decision.speeds, decision.servers) * tau
        if record:
            traj.segments.append(
                Segment(t, t + tau, dict(remaining), dict(decision.speeds), dict(decision.servers))
            )
        t += tau
        done = []
        for jid, sp in decision.speeds.items():
            remaining[jid] -= sp * tau
            if remaining[jid] <= COMPLETION_TOL * sizes[jid]:
                done.append(jid)
        for jid in sorted(done):
            del remaining[jid]
            traj.completions[jid] = t
            traj.events.append((t, "completion", jid))

    per_job_flow = {jid: traj.completions[jid] - traj.arrivals[jid] for jid in traj.completions}
    cost = CostBreakdown(
        flow_time=flow_acc, energy=energy_acc, total=flow_acc + energy_acc, per_job_flow=per_job_flow
    )
    return traj, cost


def evaluate_cost(trajectory: Trajectory, power: PowerFunction) -> CostBreakdown:
    """Recompute the cost integrals from recorded segments.

    Independent of the simulator's online accumulation; the two flow-time
    computations (sum of per-job flows vs the time integral of the job
    count) are cross-checked here.
    """
    flow = 0.0
    energy = 0.0
    prev_end = None
    for seg in trajectory.segments:
        if seg.end < seg.start:
            raise MalformedTrajectoryError(f"segment ends before it starts: {seg}")
        # idle gaps between busy periods are fine; overlaps are not
        if prev_end is not None and seg.start < prev_end - 1e-9:
            raise MalformedTrajectoryError(
                f"segments overlap: {prev_end} -> {seg.start}"
            )
        prev_end = seg.end
        tau = seg.end - seg.start
        flow += len(seg.remaining) * tau
        energy += _server_power(power, seg.speeds, seg.servers) * tau
    per_job_flow = {
        jid: trajectory.completions[jid] - trajectory.arrivals[jid] for jid in trajectory.completions
    }
    flow_from_jobs = sum(per_job_flow.values())
    if not math.isclose(flow, flow_from_jobs, rel_tol=1e-9, abs_tol=1e-9):
        raise MalformedTrajectoryError(
            f"flow-time computations disagree: integral {flow} vs per-job {flow_from_jobs}"
        )
    return CostBreakdown(flow_time=flow, energy=energy, total=flow + energy, per_job_flow=per_job_flow)


def competitive_ratio(instance: Instance, policy, baseline_cost: float) -> float:
    """Policy cost divided by a baseline cost on the same instance."""
    if len(instance.jobs) == 0:
        raise InvalidInstanceError("competitive ratio undefined on an empty instance")
    if not baseline_cost > 0:
        raise InvalidInstanceError(f"baseline cost must be positive, got {baseline_cost}")
    _, cost = simulate(instance, policy, record=False)
    return cost.total / baseline_cost


@dataclass
class LongRunMetrics:
    """Time-average cost-rate measurement of a long stochastic run."""

    cost_rate: float
    std_error: float
    cycles: int
    window: float
    low_confidence: bool


def measure_gated_static(
    instance: Instance,
    speed: float,
    routing_seed: int,
    horizon: float,
    warmup_frac: float = 0.1,
) -> LongRunMetrics:
    """Fast processor-sharing run of random routing at a fixed gated speed.

    Measures the time-average of n(t) + total power over the window after
    the warm-up prefix, with a standard error estimated from regeneration
    cycles (empty-system epochs).
    """
    import numpy as np

    if horizon <= 0:
        raise InvalidInstanceError("horizon must be positive")
    m = instance.m
    power = instance.power
    p_active = power.power(speed)
    rng = np.random.default_rng(routing_seed)
    routes = rng.integers(0, m, size=len(instance.jobs))

    queues: list[list[float]] = [[] for _ in range(m)]
    updated = [0.0] * m
    version = [0] * m
    heap: list[tuple[float, int, int]] = []

    def push_completion(k: int, now: float) -> None:
        if queues[k]:
            tc = now + min(queues[k]) * len(queues[k]) / speed
            heapq.heappush(heap, (tc, k, version[k]))

    def advance(k: int, now: float) -> None:
        dt = now - updated[k]
        if dt > 0 and queues[k]:
            dec = dt * speed / len(queues[k])
            queues[k] = [r - dec for r in queues[k]]
        updated[k] = now

    window_start = warmup_frac * horizon
    t = 0.0
    n_total = 0
    busy = 0
    cost = 0.0
    cycle_costs: list[float] = []
    cycle_lengths: list[float] = []
    cycle_t0: float | None = None
    cycle_c0 = 0.0
    i = 0
    jobs = instance.jobs

    while True:
        t_next = math.inf
        kind = None
        if i < len(jobs):
            t_next, kind = jobs[i].arrival, "arrival"
        while heap and heap[0][2] != version[heap[0][1]]:
            heapq.heappop(heap)
        if heap and heap[0][0] < t_next:
            t_next, kind = heap[0][0], "completion"
        t_stop = min(t_next, horizon)
        if t_stop > t:
            lo, hi = max(t, window_start), min(t_stop, horizon)
            if hi > lo:
                cost += (n_total + busy * p_active) * (hi - lo)
            t = t_stop
        if t_next > horizon or kind is None:
            break
        if kind == "arrival":
            k = int(routes[i])
            advance(k, t)
            if not queues[k]:
                busy += 1
            queues[k].append(jobs[i].size)
            version[k] += 1
            push_completion(k, t)
            n_total += 1
            i += 1
        else:
            _, k, _ = heapq.heappop(heap)
            advance(k, t)
            kept = [r for r in queues[k] if r > COMPLETION_TOL]
            if len(kept) == len(queues[k]) and kept:
                # the prediction was version-valid, so the minimal job is
                # done; rounding (event time quantized to ulp(t)) can leave
                # a residue above the tolerance, which would loop forever
                kept.remove(min(kept))
            queues[k] = kept
            n_total = sum(len(q) for q in queues)
            if not queues[k]:
                busy -= 1
            version[k] += 1
            push_completion(k, t)
        if n_total == 0 and t >= window_start:
            if cycle_t0 is not None:
                cycle_costs.append(cost - cycle_c0)
                cycle_lengths.append(t - cycle_t0)
            cycle_t0 = t
            cycle_c0 = cost

    window = horizon - window_start
    rate = cost / window
    ncyc = len(cycle_costs)
    low_confidence = ncyc < 30
    if ncyc >= 2:
        c = np.asarray(cycle_costs)
        ln = np.asarray(cycle_lengths)
        r = c.sum() / ln.sum()
        resid = c - r * ln
        var = (resid @ resid) / (ncyc - 1)
        se = math.sqrt(var * ncyc) / ln.sum()
    else:
        se = math.inf
    return LongRunMetrics(cost_rate=rate, std_error=se, cycles=ncyc, window=window, low_confidence=low_confidence)
