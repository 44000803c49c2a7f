import math

import numpy as np
import pytest

from flowenergy import (
    Instance,
    InvalidInstanceError,
    PowerFunction,
    SrptSpeedScale,
    check_boundary,
    check_drift,
    drift_bound_slack,
    general_power_constants,
    imbalance_weight,
    os_comparator,
    phi1,
    phi2,
    phi_total,
    simulate,
    small_alpha_constants,
    srpt_vs_opt_ceiling,
)
from flowenergy.baselines import ArbitraryComparator, BurstOptimalSpeedProfile
from flowenergy.harness import random_instance

P2 = PowerFunction(2.0)


def test_imbalance_weight_recursion():
    # alpha=2, m=2: weights telescope marginal power at levels 1/2, 2/2, ...
    assert imbalance_weight(P2, 2, 0) == 0.0
    assert imbalance_weight(P2, 2, -3) == 0.0
    assert imbalance_weight(P2, 2, 1) == pytest.approx(math.sqrt(2.0), rel=1e-12)
    assert imbalance_weight(P2, 2, 2) == pytest.approx(math.sqrt(2.0) + 2.0, rel=1e-12)


def test_imbalance_weight_convex():
    for m in (1, 2, 4):
        vals = [imbalance_weight(P2, m, i) for i in range(12)]
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        assert all(d2 >= d1 - 1e-12 for d1, d2 in zip(diffs, diffs[1:]))


def test_phi1_hand_example():
    assert phi1([1.0, 2.0], [1.5], 1, P2, 2.0) == pytest.approx(6.0, rel=1e-12)


def test_phi1_trivial_cases():
    assert phi1([1.0, 2.0], [1.0, 2.0], 2, P2, 5.0) == 0.0
    assert phi1([], [5.0], 1, P2, 2.0) == 0.0
    assert phi1([], [], 1, P2, 2.0) == 0.0


def test_phi2_telescopes_to_work_difference():
    assert phi2([2.0, 3.0], [1.0], 2.0) == pytest.approx(8.0, rel=1e-12)
    assert phi2([], [4.0], 2.0) == pytest.approx(-8.0, rel=1e-12)
    rng = np.random.default_rng(41)
    for _ in range(50):
        alg = rng.uniform(0.1, 5.0, size=rng.integers(0, 6)).tolist()
        opp = rng.uniform(0.1, 5.0, size=rng.integers(0, 6)).tolist()
        # independent oracle: integrate the count difference over levels
        pts = sorted(set(alg) | set(opp) | {0.0})
        integral = 0.0
        for a, b in zip(pts, pts[1:]):
            integral += (sum(1 for w in alg if w > a) - sum(1 for w in opp if w > a)) * (b - a)
        assert phi2(alg, opp, 3.0) == pytest.approx(3.0 * integral, abs=1e-12)


def test_constant_presets():
    c = general_power_constants(P2)
    assert (c.c1, c.c2, c.c) == (2.0, 2.0, 4.0)
    p_coeff = PowerFunction(2.0, coefficient=4.0)
    c2 = general_power_constants(p_coeff)
    assert c2.c2 == pytest.approx(2.0 / p_coeff.speed_for_power(1.0), rel=1e-12)
    t2 = small_alpha_constants(1.5)
    assert (t2.c1, t2.c2, t2.c) == (4.0, 3.0, 7.0)
    with pytest.raises(InvalidInstanceError):
        small_alpha_constants(2.0)


def test_ceiling_values():
    assert srpt_vs_opt_ceiling(P2, 2) == pytest.approx(9.0, rel=1e-12)
    assert srpt_vs_opt_ceiling(P2, 1) == pytest.approx(4.0, rel=1e-12)


def test_check_drift_empty_instance():
    inst = Instance.from_arrivals(1, P2, [])
    alg, _ = simulate(inst, SrptSpeedScale())
    opp, _ = simulate(inst, SrptSpeedScale())
    rep = check_drift(alg, opp, general_power_constants(P2))
    assert rep.min_slack == math.inf
    assert rep.passed


def test_check_drift_burst_example():
    inst = Instance.from_arrivals(1, P2, [(0.0, 1.0), (0.0, 2.0)])
    alg, _ = simulate(inst, SrptSpeedScale())
    opp = os_comparator(inst, BurstOptimalSpeedProfile())
    rep = check_drift(alg, opp, general_power_constants(P2))
    assert rep.integrated_min_slack >= -1e-7
    assert rep.min_slack >= -1e-7
    assert rep.passed


def test_check_drift_small_alpha_arbitrary_comparator():
    p = PowerFunction(1.5)
    rng = np.random.default_rng(42)
    inst = random_instance(rng, p)
    alg, _ = simulate(inst, SrptSpeedScale())
    opp, _ = simulate(inst, ArbitraryComparator(seed=11))
    rep = check_drift(alg, opp, small_alpha_constants(1.5))
    assert rep.integrated_min_slack >= -1e-7


def test_check_drift_rejects_mismatched_instances():
    a = Instance.from_arrivals(1, P2, [(0.0, 1.0)])
    b = Instance.from_arrivals(1, P2, [(0.0, 2.0)])
    alg, _ = simulate(a, SrptSpeedScale())
    opp, _ = simulate(b, SrptSpeedScale())
    with pytest.raises(InvalidInstanceError):
        check_drift(alg, opp, general_power_constants(P2))


def test_drift_report_json(tmp_path):
    inst = Instance.from_arrivals(1, P2, [(0.0, 1.0), (0.0, 2.0)])
    alg, _ = simulate(inst, SrptSpeedScale())
    opp = os_comparator(inst, BurstOptimalSpeedProfile())
    rep = check_drift(alg, opp, general_power_constants(P2))
    path = tmp_path / "report.json"
    rep.export_json(path)
    import json

    doc = json.loads(path.read_text())
    assert doc["passed"]
    assert len(doc["lhs"]) == len(doc["sample_times"])


def test_boundary_conditions():
    rng = np.random.default_rng(43)
    for _ in range(10):
        inst = random_instance(rng, P2)
        alg, _ = simulate(inst, SrptSpeedScale())
        opp = os_comparator(inst, BurstOptimalSpeedProfile())
        rep = check_boundary(alg, opp)
        assert rep.passed, rep


def test_boundary_empty():
    inst = Instance.from_arrivals(1, P2, [])
    alg, _ = simulate(inst, SrptSpeedScale())
    rep = check_boundary(alg, alg)
    assert rep.passed


def _random_profile(rng, m, power):
    n = int(rng.integers(0, 8))
    n_o = int(rng.integers(0, 8))
    alg = rng.uniform(0.2, 6.0, size=n).tolist()
    opp = rng.uniform(0.2, 6.0, size=n_o).tolist()
    r = int(rng.integers(0, min(m, n_o) + 1)) if n_o else 0
    return alg, opp, r


@pytest.mark.parametrize("m", [1, 2, 4])
def test_srpt_comparator_bound_slacks(m):
    rng = np.random.default_rng(44)
    c1, c2 = 2.0, 2.0
    for _ in range(1000):
        alg, opp, r = _random_profile(rng, m, P2)
        speeds = rng.uniform(0.1, 3.0, size=r).tolist()
        for which in ("imbalance-srpt-comparator", "work-srpt-comparator"):
            slack = drift_bound_slack(alg, opp, m, P2, speeds, which, c1=c1, c2=c2)
            assert slack >= -1e-7, (which, m, alg, opp, speeds)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_any_comparator_bound_slacks(alpha):
    p = PowerFunction(alpha)
    rng = np.random.default_rng(45)
    m = 2
    c1 = 2.0 / (2.0 - alpha)
    for _ in range(500):
        alg, opp, r = _random_profile(rng, m, p)
        served = sorted(rng.choice(len(opp), size=r, replace=False).tolist()) if r else []
        # the imbalance bound holds for any comparator speed; the work bound
        # only in the regime where power draw dominates speed
        slack = drift_bound_slack(
            alg, opp, m, p, rng.uniform(0.1, 3.0, size=r).tolist(),
            "imbalance-any-comparator", c1=c1, c2=3.0, opp_served=served,
        )
        assert slack >= -1e-7, (alg, opp, served)
        slack = drift_bound_slack(
            alg, opp, m, p, rng.uniform(1.0, 3.0, size=r).tolist(),
            "work-any-comparator", c1=c1, c2=3.0, opp_served=served,
        )
        assert slack >= -1e-7, (alg, opp, served)


def test_work_any_comparator_regime_guard():
    with pytest.raises(InvalidInstanceError):
        drift_bound_slack([1.0], [1.0], 1, PowerFunction(1.5), [0.5], "work-any-comparator")


def test_bound_kind_validation():
    with pytest.raises(InvalidInstanceError):
        drift_bound_slack([1.0], [1.0], 1, P2, [1.0], "nope")
    with pytest.raises(InvalidInstanceError):
        drift_bound_slack([1.0], [1.0], 1, P2, [1.0, 1.0], "work-srpt-comparator")
    p_coeff = PowerFunction(1.5, coefficient=2.0)
    with pytest.raises(InvalidInstanceError):
        drift_bound_slack([1.0], [1.0], 1, p_coeff, [1.0], "work-any-comparator")


def test_phi_total_composition():
    alg, opp = [1.0, 2.0], [1.5]
    assert phi_total(alg, opp, 1, P2, 2.0, 3.0) == pytest.approx(
        phi1(alg, opp, 1, P2, 2.0) + phi2(alg, opp, 3.0), rel=1e-12
    )
