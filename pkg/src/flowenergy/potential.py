"""Potential-function evaluation and numerical drift verification.

The potential compares an algorithm trajectory with a comparator trajectory
over the same arrival sequence.  It is the sum of two parts:

  * an imbalance term: a weighted integral, over remaining-size levels q,
    of the (positive part of the) per-server excess of the algorithm's
    count of jobs with remaining size >= q over the comparator's; and
  * a work term: a constant times the difference of total remaining work.

Both parts are evaluated exactly as piecewise integrals; only the time
derivative is approximated (by centered differences strictly inside
segments, where the potential is smooth).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

from .engine import Trajectory
from .errors import InvalidInstanceError
from .power import PowerFunction

DRIFT_TOL = 1e-7
BOUNDARY_TOL = 1e-9


@lru_cache(maxsize=None)
def imbalance_weight(power: PowerFunction, m: int, i: int) -> float:
    """Weight of an imbalance level of i jobs: the telescoping sum of the
    marginal power at levels 1/m .. i/m.  Zero for i <= 0."""
    if i <= 0:
        return 0.0
    return imbalance_weight(power, m, i - 1) + power.marginal_at_power(i / m)


def _level_intervals(alg_works, opp_works):
    """Iterate (interval_length, n_alg, n_opp) over the level axis q, where
    n_* counts jobs with remaining size >= q; constant on each interval."""
    pts = sorted(set(alg_works) | set(opp_works))
    a_sorted = sorted(alg_works)
    o_sorted = sorted(opp_works)
    prev = 0.0
    for b in pts:
        n_alg = len(a_sorted) - _bisect_right(a_sorted, prev)
        n_opp = len(o_sorted) - _bisect_right(o_sorted, prev)
        yield b - prev, n_alg, n_opp
        prev = b


def _bisect_right(arr, x):
    import bisect

    return bisect.bisect_right(arr, x)


def phi1(alg_works, opp_works, m: int, power: PowerFunction, c1: float) -> float:
    """Imbalance part: c1 * integral over q of the weight of the positive
    per-server count excess."""
    total = 0.0
    for length, n_alg, n_opp in _level_intervals(alg_works, opp_works):
        if n_alg > n_opp:
            total += imbalance_weight(power, m, n_alg - n_opp) * length
    return c1 * total


def phi2(alg_works, opp_works, c2: float) -> float:
    """Work part: c2 * (algorithm remaining work - comparator remaining
    work); the level integral of the count difference telescopes to this."""
    return c2 * (sum(alg_works) - sum(opp_works))


def phi_total(alg_works, opp_works, m: int, power: PowerFunction, c1: float, c2: float) -> float:
    return phi1(alg_works, opp_works, m, power, c1) + phi2(alg_works, opp_works, c2)


@dataclass(frozen=True)
class DriftConstants:
    c1: float
    c2: float
    c: float
    name: str


def general_power_constants(power: PowerFunction) -> DriftConstants:
    """Constant set valid for any supported power curve, checked against a
    shortest-remaining-disciplined comparator."""
    c2 = 2.0 / power.speed_for_power(1.0)
    c = 2.0 + c2 * max(1.0, power.power(power.breakeven_speed))
    return DriftConstants(c1=2.0, c2=c2, c=c, name="thm1")


def small_alpha_constants(alpha: float) -> DriftConstants:
    """Constant set for pure power laws with exponent in (1, 2), valid
    against arbitrary comparators."""
    if not 1.0 < alpha < 2.0:
        raise InvalidInstanceError(f"small-alpha constants need exponent in (1,2), got {alpha}")
    c1 = 2.0 / (2.0 - alpha)
    return DriftConstants(c1=c1, c2=3.0, c=3.0 + c1, name="thm2")


def srpt_vs_opt_ceiling(power: PowerFunction, m: int) -> float:
    """Worst-case cost ratio ceiling for the speed-scaled shortest-remaining
    policy against the true offline optimum."""
    c2 = 2.0 / power.speed_for_power(1.0)
    return power.power(2.0 - 1.0 / m) * (
        2.0 + c2 * max(1.0, power.power(power.breakeven_speed))
    )


@dataclass
class DriftReport:
    constants: DriftConstants
    sample_times: list[float] = field(default_factory=list)
    lhs: list[float] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    min_slack: float = math.inf
    integrated_min_slack: float = math.inf
    boundary_jumps: list[tuple[float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.integrated_min_slack >= -DRIFT_TOL and self.min_slack >= -DRIFT_TOL

    def to_dict(self) -> dict:
        return {
            "constants": {
                "c1": self.constants.c1,
                "c2": self.constants.c2,
                "c": self.constants.c,
                "preset": self.constants.name,
            },
            "sample_times": self.sample_times,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "min_slack": None if math.isinf(self.min_slack) else self.min_slack,
            "integrated_min_slack": (
                None if math.isinf(self.integrated_min_slack) else self.integrated_min_slack
            ),
            "passed": self.passed,
        }

    def export_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def _check_same_instance(alg: Trajectory, opp: Trajectory) -> None:
    if alg.arrivals != opp.arrivals or alg.sizes != opp.sizes:
        raise InvalidInstanceError("trajectories do not share an arrival sequence")
    if alg.m != opp.m or alg.power != opp.power:
        raise InvalidInstanceError("trajectories do not share servers/power curve")


def _segment_rate(traj: Trajectory, t0: float, t1: float):
    """(job count, total power) on the segment of `traj` covering [t0, t1]."""
    from .engine import _server_power

    for seg in traj.segments:
        if seg.start <= t0 and t1 <= seg.end + 1e-15:
            return len(seg.remaining), _server_power(traj.power, seg.speeds, seg.servers)
    # idle gap between busy periods, or past the last completion
    return 0, 0.0


def check_drift(
    alg_traj: Trajectory,
    opp_traj: Trajectory,
    constants: DriftConstants,
    samples_per_segment: int = 3,
) -> DriftReport:
    """Verify the drift inequality along a paired run.

    Pointwise: at sampled non-event times, cost rate of the algorithm plus
    the potential's time derivative (centered differences) must not exceed
    c times the comparator's cost rate.  Integrated (authoritative): over
    every common segment, the potential change plus the integrated
    algorithm cost must not exceed c times the integrated comparator cost.
    """
    _check_same_instance(alg_traj, opp_traj)
    report = DriftReport(constants=constants)
    m, power = alg_traj.m, alg_traj.power
    c1, c2, c = constants.c1, constants.c2, constants.c

    def phi_at(t: float) -> float:
        return phi_total(
            list(alg_traj.remaining_at(t).values()),
            list(opp_traj.remaining_at(t).values()),
            m,
            power,
            c1,
            c2,
        )

    bounds = sorted(
        set(s.start for s in alg_traj.segments)
        | set(s.end for s in alg_traj.segments)
        | set(s.start for s in opp_traj.segments)
        | set(s.end for s in opp_traj.segments)
    )
    for t0, t1 in zip(bounds, bounds[1:]):
        tau = t1 - t0
        if tau <= 1e-15:
            continue
        n_a, p_a = _segment_rate(alg_traj, t0, t1)
        n_o, p_o = _segment_rate(opp_traj, t0, t1)
        # one-sided limits just inside the interval: at an exact boundary the
        # two trajectories can resolve to different sides (e.g. across an
        # idle gap), which would leak the event jump into the integral
        eps = min(1e-12 * max(1.0, t1), 0.25 * tau)
        dphi = phi_at(t1 - eps) - phi_at(t0 + eps)
        lhs_int = dphi + (n_a + p_a) * tau
        rhs_int = c * (n_o + p_o) * tau
        scale = max(1.0, abs(lhs_int), abs(rhs_int))
        report.integrated_min_slack = min(
            report.integrated_min_slack, (rhs_int - lhs_int) / scale
        )
        h = 1e-6 * tau
        for k in range(samples_per_segment):
            t = t0 + (k + 1) * tau / (samples_per_segment + 1)
            dphi_dt = (phi_at(t + h) - phi_at(t - h)) / (2 * h)
            lhs = n_a + p_a + dphi_dt
            rhs = c * (n_o + p_o)
            report.sample_times.append(t)
            report.lhs.append(lhs)
            report.rhs.append(rhs)
            report.min_slack = min(
                report.min_slack, (rhs - lhs) / max(1.0, abs(lhs), abs(rhs))
            )
    return report


@dataclass
class BoundaryReport:
    phi_before: float
    phi_after: float
    max_arrival_jump: float
    max_departure_jump: float

    @property
    def passed(self) -> bool:
        return (
            abs(self.phi_before) <= BOUNDARY_TOL
            and abs(self.phi_after) <= BOUNDARY_TOL
            and self.max_arrival_jump <= BOUNDARY_TOL
            and self.max_departure_jump <= BOUNDARY_TOL
        )


def check_boundary(alg_traj: Trajectory, opp_traj: Trajectory) -> BoundaryReport:
    """Check that the potential vanishes outside the busy horizon and never
    jumps up across an arrival or departure."""
    _check_same_instance(alg_traj, opp_traj)
    m, power = alg_traj.m, alg_traj.power

    def phi_at_sets(t: float, side: str) -> float:
        # evaluate just off the event to get one-sided limits
        eps = 1e-12 * max(1.0, t)
        tt = t - eps if side == "left" else t + eps
        return phi_total(
            list(alg_traj.remaining_at(tt).values()),
            list(opp_traj.remaining_at(tt).values()),
            m,
            power,
            1.0,
            1.0,
        )

    if not alg_traj.arrivals:
        return BoundaryReport(0.0, 0.0, 0.0, 0.0)
    t_first = min(alg_traj.arrivals.values())
    t_end = max(
        list(alg_traj.completions.values()) + list(opp_traj.completions.values())
    )
    phi_before = phi_at_sets(t_first, "left") if t_first > 0 else 0.0
    phi_after = phi_at_sets(t_end, "right")
    arr_jump = 0.0
    dep_jump = 0.0
    events = sorted(set(alg_traj.events) | set(opp_traj.events))
    for t, kind, _ in events:
        jump = phi_at_sets(t, "right") - phi_at_sets(t, "left")
        if kind == "arrival":
            arr_jump = max(arr_jump, abs(jump))
        else:
            dep_jump = max(dep_jump, jump)
    return BoundaryReport(phi_before, phi_after, arr_jump, max(dep_jump, 0.0))


_BOUND_KINDS = (
    "imbalance-srpt-comparator",
    "work-srpt-comparator",
    "imbalance-any-comparator",
    "work-any-comparator",
)


def drift_bound_slack(
    alg_works: list[float],
    opp_works: list[float],
    m: int,
    power: PowerFunction,
    opp_speeds: list[float],
    which: str,
    c1: float = 1.0,
    c2: float = 1.0,
    opp_served: list[int] | None = None,
) -> float:
    """Slack (bound minus measured derivative) of one of the per-part drift
    bounds at a frozen profile.

    The algorithm side always serves its min(m, n) shortest jobs at the
    count-matched speeds.  For the *-srpt-comparator bounds the comparator
    serves its shortest jobs; the *-any-comparator bounds (pure power law
    only) allow an arbitrary served subset via `opp_served` indices into
    the sorted comparator works.
    """
    if which not in _BOUND_KINDS:
        raise InvalidInstanceError(f"unknown bound kind {which!r}")
    anyc = which.endswith("any-comparator")
    if anyc and power.coefficient != 1.0:
        raise InvalidInstanceError("any-comparator bounds require a pure power law")
    if which == "work-any-comparator" and any(s < 1.0 for s in opp_speeds):
        # this bound replaces each comparator speed by its power draw,
        # valid only at speeds where power dominates speed
        raise InvalidInstanceError("work-any-comparator bound requires comparator speeds >= 1")
    n = len(alg_works)
    n_o = len(opp_works)
    r = len(opp_speeds)
    if r > min(m, n_o):
        raise InvalidInstanceError("comparator cannot serve more jobs than min(m, n_o)")
    alg_sorted = sorted(alg_works)
    opp_sorted = sorted(opp_works)
    if opp_served is None:
        opp_served = list(range(r))
    elif not anyc:
        raise InvalidInstanceError("srpt-comparator bounds fix the served set to the shortest jobs")
    k_alg = min(m, n)
    alg_speed = power.speed_for_power(n / m if n >= m else 1.0) if n else 0.0
    alg_speeds = [alg_speed] * k_alg

    def advance(h: float) -> tuple[list[float], list[float]]:
        a = list(alg_sorted)
        for i in range(k_alg):
            a[i] -= alg_speeds[i] * h
        o = list(opp_sorted)
        for idx, sp in zip(opp_served, opp_speeds):
            o[idx] -= sp * h
        return a, o

    scale = min(
        [w for w in alg_sorted[:k_alg]] + [opp_sorted[i] for i in opp_served] + [1.0]
    )
    h = 1e-7 * scale
    a_plus, o_plus = advance(h)
    a_minus, o_minus = advance(-h)

    p_opp = sum(power.power(s) for s in opp_speeds)
    if which.startswith("imbalance"):
        measured = (phi1(a_plus, o_plus, m, power, c1) - phi1(a_minus, o_minus, m, power, c1)) / (
            2 * h
        )
        if anyc:
            alpha = power.alpha
            if n >= m:
                bound = c1 * n_o - c1 * (2 - alpha) * n + c1 * (2 - alpha) * (m - 1) / 2.0 + c1 * p_opp
            else:
                bound = c1 * n_o + c1 * (2 - alpha) * n / 2.0 + c1 * p_opp
        else:
            if n >= m:
                bound = c1 * n_o - c1 * n + c1 * (m - 1) / 2.0 + c1 * p_opp
            else:
                bound = c1 * n_o - c1 * n * (n + 1) / (2.0 * m) + c1 * p_opp
    else:
        measured = (phi2(a_plus, o_plus, c2) - phi2(a_minus, o_minus, c2)) / (2 * h)
        if anyc:
            bound = -c2 * min(m, n) + c2 * p_opp
        else:
            s_min = power.speed_for_power(1.0)
            bound = -c2 * min(m, n) * s_min + c2 * sum(
                max(power.power(power.breakeven_speed), power.power(s)) for s in opp_speeds
            )
    return bound - measured
