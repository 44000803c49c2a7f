"""Online routing/scheduling/speed-scaling policies.

All policies share one decision interface: `on_arrival` is called once per
job (in id order, so simultaneous arrivals are routed sequentially), and
`decide` is called at every event to produce the assignments and speeds
that hold until the next event.  Ties are always broken by lowest job id
or server index for determinism.
"""

from __future__ import annotations

import numpy as np

from .engine import Decision, SimState
from .errors import InvalidInstanceError, PolicyMismatchError
from .workload import Instance, Job


class Policy:
    shared_servers = False

    def reset(self, instance: Instance) -> None:
        self.m = instance.m
        self.power = instance.power

    def on_arrival(self, job: Job, state: SimState) -> None:
        pass

    def decide(self, state: SimState) -> Decision:
        raise NotImplementedError


class SrptSpeedScale(Policy):
    """Serve the min(m, n) shortest-remaining jobs, migration allowed.

    Each served job runs at the speed whose power draw is n/m when n >= m
    and 1 otherwise, so total power always equals the job count n.
    """

    def decide(self, state: SimState) -> Decision:
        n = len(state.remaining)
        if n == 0:
            return Decision({}, {})
        served = sorted(state.remaining.items(), key=lambda kv: (kv[1], kv[0]))[: min(self.m, n)]
        speed = state.power.speed_for_power(n / self.m if n >= self.m else 1.0)
        speeds = {jid: speed for jid, _ in served}
        servers = {jid: k for k, (jid, _) in enumerate(served)}
        return Decision(speeds, servers)


class _DispatchPolicy(Policy):
    """Base for immediate-dispatch non-migratory policies.

    Routing happens once per job on arrival; within each server the shortest
    remaining job runs at the speed whose power draw equals that server's
    unfinished-job count.
    """

    def reset(self, instance: Instance) -> None:
        super().reset(instance)
        self.assigned: dict[int, int] = {}

    def route(self, job: Job, state: SimState) -> int:
        raise NotImplementedError

    def on_arrival(self, job: Job, state: SimState) -> None:
        self.assigned[job.id] = self.route(job, state)

    def _server_jobs(self, state: SimState) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.m)]
        for jid in state.remaining:
            groups[self.assigned[jid]].append(jid)
        return groups

    def _head(self, jids: list[int], state: SimState) -> int:
        return min(jids, key=lambda j: (state.remaining[j], j))

    def decide(self, state: SimState) -> Decision:
        speeds: dict[int, float] = {}
        servers: dict[int, int] = {}
        for k, jids in enumerate(self._server_jobs(state)):
            if not jids:
                continue
            head = self._head(jids, state)
            speeds[head] = state.power.speed_for_power(float(len(jids)))
            servers[head] = k
        return Decision(speeds, servers)


class GreedyLeastWorkload(_DispatchPolicy):
    """Route each arrival to the server with least unfinished assigned work."""

    def route(self, job: Job, state: SimState) -> int:
        load = [0.0] * self.m
        for jid, srv in self.assigned.items():
            if jid in state.remaining and jid != job.id:
                load[srv] += state.remaining[jid]
        return min(range(self.m), key=lambda k: (load[k], k))


class GreedyLeastDispatched(_DispatchPolicy):
    """Route to the server with least cumulative dispatched work so far."""

    def reset(self, instance: Instance) -> None:
        super().reset(instance)
        self.dispatched = [0.0] * self.m

    def route(self, job: Job, state: SimState) -> int:
        k = min(range(self.m), key=lambda s: (self.dispatched[s], s))
        self.dispatched[k] += job.size
        return k


class JoinShortestQueue(_DispatchPolicy):
    """Route to the server with the fewest unfinished assigned jobs."""

    def route(self, job: Job, state: SimState) -> int:
        counts = [0] * self.m
        for jid, srv in self.assigned.items():
            if jid in state.remaining and jid != job.id:
                counts[srv] += 1
        return min(range(self.m), key=lambda k: (counts[k], k))


class NonMigratorySrpt(_DispatchPolicy):
    """Threshold routing on per-server least remaining time, no migration.

    An arrival of size x goes to the lowest-index server whose least
    remaining processing time exceeds x; failing that, to the lowest-index
    idle server, then to server 0.
    """

    def route(self, job: Job, state: SimState) -> int:
        y = [0.0] * self.m
        idle = [True] * self.m
        for jid, srv in self.assigned.items():
            if jid in state.remaining and jid != job.id:
                r = state.remaining[jid]
                y[srv] = r if idle[srv] else min(y[srv], r)
                idle[srv] = False
        for k in range(self.m):
            if not idle[k] and y[k] > job.size:
                return k
        for k in range(self.m):
            if idle[k]:
                return k
        return 0


class RoundRobinUnit(_DispatchPolicy):
    """Round-robin dispatch for equal-size jobs, FCFS within each server.

    Server k runs its oldest unfinished job at the speed whose power draw
    equals its backlog count.  Refuses instances with mixed job sizes.
    """

    def reset(self, instance: Instance) -> None:
        if not instance.unit_sizes():
            raise PolicyMismatchError("round-robin-unit requires equal job sizes")
        super().reset(instance)

    def route(self, job: Job, state: SimState) -> int:
        return job.id % self.m

    def _head(self, jids: list[int], state: SimState) -> int:
        return min(jids)


class RandomGatedStatic(Policy):
    """Uniform random routing; busy servers run at a fixed speed, shared
    equally among their unfinished jobs (processor sharing)."""

    shared_servers = True

    def __init__(self, speed: float, seed: int = 0):
        if not speed > 0:
            raise InvalidInstanceError(f"gated speed must be positive, got {speed}")
        self.speed = speed
        self.seed = seed

    def reset(self, instance: Instance) -> None:
        super().reset(instance)
        self.assigned: dict[int, int] = {}
        self._rng = np.random.default_rng(self.seed)

    def on_arrival(self, job: Job, state: SimState) -> None:
        self.assigned[job.id] = int(self._rng.integers(0, self.m))

    def decide(self, state: SimState) -> Decision:
        groups: dict[int, list[int]] = {}
        for jid in state.remaining:
            groups.setdefault(self.assigned[jid], []).append(jid)
        speeds: dict[int, float] = {}
        servers: dict[int, int] = {}
        for k, jids in groups.items():
            share = self.speed / len(jids)
            for jid in jids:
                speeds[jid] = share
                servers[jid] = k
        return Decision(speeds, servers)


POLICY_KINDS = {
    "srpt-speedscale": SrptSpeedScale,
    "round-robin-unit": RoundRobinUnit,
    "greedy-least-workload": GreedyLeastWorkload,
    "greedy-least-dispatched": GreedyLeastDispatched,
    "jsq": JoinShortestQueue,
    "nonmigratory-srpt": NonMigratorySrpt,
    "random-gated-static": RandomGatedStatic,
}


def make_policy(kind: str, params: dict | None = None) -> Policy:
    """Build a policy from its config kind and per-kind parameters."""
    params = dict(params or {})
    if kind not in POLICY_KINDS:
        raise InvalidInstanceError(f"unknown policy kind {kind!r}")
    if kind == "random-gated-static":
        return RandomGatedStatic(speed=float(params["speed"]), seed=int(params.get("seed", 0)))
    if params:
        raise InvalidInstanceError(f"policy {kind!r} takes no parameters, got {params}")
    return POLICY_KINDS[kind]()
