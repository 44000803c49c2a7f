"""Command-line front end.

Subcommands: simulate, compare, adversarial-sweep, stochastic, drift-check.
Exit codes: 0 when all asserted properties pass, 1 on a property violation,
2 on usage/configuration errors.  Report paths get figures rendered next to
the CSV/JSON tables.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness, report
from .engine import simulate
from .errors import InvalidInstanceError, PolicyMismatchError
from .harness import SWEEP_FAMILIES
from .policies import POLICY_KINDS, make_policy
from .power import PowerFunction
from .workload import Instance, SizeDistribution, StochasticSpec, load_instance

log = logging.getLogger(__name__)

USAGE_ERROR = 2
PROPERTY_VIOLATION = 1


def _power_from_args(args) -> PowerFunction:
    return PowerFunction(alpha=args.alpha, coefficient=args.coefficient)


def _load(args) -> Instance:
    if not args.instance:
        raise InvalidInstanceError("an --instance file is required")
    if not Path(args.instance).exists():
        raise InvalidInstanceError(f"instance file not found: {args.instance}")
    return load_instance(args.instance)


def _out_base(args, default: str) -> Path:
    out = Path(args.out) if args.out else Path(default)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    instance = _load(args)
    policy = make_policy(args.policy, {"speed": args.speed, "seed": args.seed} if args.policy == "random-gated-static" else None)
    out = _out_base(args, "simulate_result.json")
    if not instance.jobs:
        report.write_json({"cost": {"flow_time": 0.0, "energy": 0.0, "total": 0.0, "per_job_flow": {}}}, out)
        print(f"empty instance: cost 0 -> {out}")
        return 0
    traj, cost = simulate(instance, policy)
    report.write_json(
        {
            "policy": args.policy,
            "m": instance.m,
            "power": instance.power.to_dict(),
            "cost": cost.to_dict(),
        },
        out,
    )
    traj.export_jsonl(out.with_suffix(".trajectory.jsonl"))
    fig = report.plot_trajectory(traj, out)
    print(f"total cost {cost.total:.7f} (flow {cost.flow_time:.7f} + energy {cost.energy:.7f})")
    print(f"wrote {out}, {out.with_suffix('.trajectory.jsonl')}, {fig}")
    return 0


def cmd_compare(args) -> int:
    instance = _load(args)
    kinds = args.policy.split(",") if args.policy else ["srpt-speedscale"]
    for kind in kinds:
        if kind not in POLICY_KINDS:
            raise InvalidInstanceError(f"unknown policy kind {kind!r}")
    records = harness.compare_policies(instance, kinds, baseline=args.baseline)
    out = _out_base(args, "compare.csv")
    report.write_ratio_csv(records, out)
    report.write_json([r.to_dict() for r in records], out.with_suffix(".json"))
    violation = False
    if records:
        ceiling = harness.theorem_ceiling(instance.power, instance.m)
        for rec in records:
            flag = ""
            if rec.policy == "srpt-speedscale":
                if rec.baseline_method in ("enumeration", "closed-form"):
                    ok = rec.ratio <= ceiling + 1e-6
                    violation = violation or not ok
                    flag = f" ceiling {ceiling:.6f} {'ok' if ok else 'VIOLATED'}"
                else:
                    flag = f" (upper-bound baseline, ceiling {ceiling:.6f} not asserted)"
            print(f"{rec.policy}: cost {rec.cost_policy:.7f} ratio {rec.ratio:.7f}{flag}")
    print(f"wrote {out}, {out.with_suffix('.json')}")
    return PROPERTY_VIOLATION if violation else 0


def cmd_adversarial_sweep(args) -> int:
    power = _power_from_args(args)
    m_grid = [int(x) for x in args.m_grid.split(",")]
    result = harness.adversarial_sweep(args.family, m_grid, args.d, power)
    out = _out_base(args, f"sweep_{args.family}.csv")
    report.write_ratio_csv(result.records, out)
    doc = {
        "family": result.family,
        "alpha": result.alpha,
        "d": result.d,
        "slope": result.slope,
        "monotone": result.monotone,
        "records": [r.to_dict() for r in result.records],
    }
    report.write_json(doc, out.with_suffix(".json"))
    fig = report.plot_sweep(result, out)
    for rec in result.records:
        print(f"m={rec.m}: ratio {rec.ratio:.6f}")
    if result.slope is not None:
        print(f"fitted log-log slope {result.slope:.4f} (predicted {1 - 1 / power.alpha:.4f})")
    print(f"wrote {out}, {out.with_suffix('.json')}, {fig}")
    return 0


def cmd_stochastic(args) -> int:
    power = _power_from_args(args)
    if args.horizon <= 0:
        raise InvalidInstanceError("stochastic runs need a positive --horizon")
    spec = StochasticSpec(
        rate=args.rate,
        size_dist=SizeDistribution("exponential", {"mean": args.mean_size}),
        horizon=args.horizon,
        seed=args.seed,
    )
    result = harness.stochastic_run(spec, args.m, power)
    out = _out_base(args, "stochastic.json")
    report.write_json(
        {
            "spec": spec.to_dict(),
            "m": args.m,
            "power": power.to_dict(),
            "gated_speed": result.gated_speed,
            "predicted_cost_rate": result.predicted_cost_rate,
            "measured_cost_rate": result.measured_cost_rate,
            "std_error": result.std_error,
            "cycles": result.cycles,
            "low_confidence": result.low_confidence,
            "lower_bound": result.lower_bound,
            "ratio": result.ratio,
        },
        out,
    )
    fig = report.plot_stochastic(result, out)
    print(
        f"gated speed {result.gated_speed:.6f}; measured cost rate "
        f"{result.measured_cost_rate:.5f} (predicted {result.predicted_cost_rate:.5f}, "
        f"se {result.std_error:.4g}, {result.cycles} cycles)"
    )
    print(f"lower bound {result.lower_bound:.5f}; ratio {result.ratio:.5f}")
    print(f"wrote {out}, {fig}")
    if result.low_confidence:
        print("low confidence: fewer than 30 regeneration cycles; not asserted")
        return 0
    # measured long-run rate must sit near its own prediction
    if abs(result.measured_cost_rate - result.predicted_cost_rate) > 3 * result.std_error + 0.05 * result.predicted_cost_rate:
        print("PROPERTY VIOLATION: measured cost rate outside 3-sigma of prediction")
        return PROPERTY_VIOLATION
    return 0


def cmd_drift_check(args) -> int:
    power = _power_from_args(args)
    seeds = [args.seed + i for i in range(args.seeds)]
    result = harness.drift_check_batch(power, args.constants, seeds, keep_reports=True)
    out = _out_base(args, "drift.json")
    report.write_json(
        {
            "preset": result.preset,
            "c1": result.constants.c1,
            "c2": result.constants.c2,
            "c": result.constants.c,
            "seeds": seeds,
            "min_integrated_slack": result.min_slack,
            "min_pointwise_slack": result.min_pointwise_slack,
            "passed": result.passed,
        },
        out,
    )
    fig = report.plot_drift(result.reports, out)
    print(
        f"constants {result.preset}: c1={result.constants.c1:.6f} "
        f"c2={result.constants.c2:.6f} c={result.constants.c:.6f}"
    )
    print(f"min integrated slack {result.min_slack:.3e} over {len(seeds)} seeds")
    print(f"wrote {out}, {fig}")
    if not result.passed:
        print("PROPERTY VIOLATION: drift or boundary check failed")
        return PROPERTY_VIOLATION
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowenergy",
        description="Simulation and analysis of multi-server speed scaling under flow time plus energy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_power=True):
        p.add_argument("--out", help="output path; figures are written alongside")
        p.add_argument("--seed", type=int, default=0)
        if needs_power:
            p.add_argument("--alpha", type=float, default=2.0, help="power-curve exponent (> 1)")
            p.add_argument("--coefficient", type=float, default=1.0, help="power-curve scale (>= 1)")

    p = sub.add_parser("simulate", help="run one policy on one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", default="srpt-speedscale", choices=sorted(POLICY_KINDS))
    p.add_argument("--speed", type=float, default=1.0, help="gated speed for random-gated-static")
    common(p, needs_power=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="policies vs a baseline on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", help="comma-separated policy kinds (default srpt-speedscale)")
    p.add_argument("--baseline", default="brute", choices=["brute", "burst", "analytic"])
    common(p, needs_power=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("adversarial-sweep", help="greedy vs spreading dispatch growth sweep")
    p.add_argument("--family", required=True, choices=sorted(SWEEP_FAMILIES))
    p.add_argument("--m-grid", default="2,4,8,16", help="comma-separated server counts")
    p.add_argument("--d", type=int, default=4, help="adversarial size exponent: w = m**d")
    common(p)
    p.set_defaults(func=cmd_adversarial_sweep)

    p = sub.add_parser("stochastic", help="long-run gated-static measurement vs lower bound")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rate", type=float, required=True, help="Poisson arrival rate")
    p.add_argument("--mean-size", type=float, default=1.0, help="mean of the exponential job size")
    p.add_argument("--horizon", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_stochastic)

    p = sub.add_parser("drift-check", help="verify the drift inequality over random instances")
    p.add_argument("--constants", default="thm1", choices=["thm1", "thm2"])
    p.add_argument("--seeds", type=int, default=20, help="number of seeded instances")
    common(p)
    p.set_defaults(func=cmd_drift_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInstanceError, PolicyMismatchError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
