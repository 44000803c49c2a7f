import json
import logging

import numpy as np
import pytest

from flowenergy import (
    Instance,
    InvalidInstanceError,
    Job,
    PowerFunction,
    SizeDistribution,
    StochasticSpec,
    gen_jsq_adversary,
    gen_least_workload_adversary,
    gen_nonmigratory_srpt_adversary,
    gen_stochastic,
    load_instance,
    save_instance,
)

P2 = PowerFunction(2.0)


def test_job_validation():
    with pytest.raises(InvalidInstanceError):
        Job(id=0, arrival=-1.0, size=1.0)
    with pytest.raises(InvalidInstanceError):
        Job(id=0, arrival=0.0, size=0.0)


def test_instance_ordering_enforced():
    jobs = (Job(0, 1.0, 1.0), Job(1, 0.5, 1.0))
    with pytest.raises(InvalidInstanceError):
        Instance(m=1, power=P2, jobs=jobs)
    with pytest.raises(InvalidInstanceError):
        Instance(m=0, power=P2, jobs=())


def test_from_arrivals_sorts_and_ids():
    inst = Instance.from_arrivals(2, P2, [(1.0, 3.0), (0.0, 1.0), (1.0, 2.0)])
    assert [j.id for j in inst.jobs] == [0, 1, 2]
    assert [j.arrival for j in inst.jobs] == [0.0, 1.0, 1.0]
    # equal arrivals keep input order
    assert [j.size for j in inst.jobs] == [1.0, 3.0, 2.0]
    assert inst.total_work == 6.0
    assert not inst.is_single_burst()
    assert not inst.unit_sizes()


def test_least_workload_adversary_shape():
    inst = gen_least_workload_adversary(m=3, w=4, power=P2)
    sizes = sorted(j.size for j in inst.jobs)
    assert sizes == [1.0] * 4 + [4.0] * 2
    assert sum(1 for j in inst.jobs if j.arrival == 0.0) == 2
    with pytest.raises(InvalidInstanceError):
        gen_least_workload_adversary(m=1, w=4, power=P2)


def test_jsq_adversary_shape():
    m, w = 3, 5
    inst = gen_jsq_adversary(m=m, w=w, power=P2)
    assert len(inst.jobs) == m * m
    assert sum(1 for j in inst.jobs if j.size == w) == m
    # every m-th arrival is the large one
    for i, j in enumerate(inst.jobs):
        assert j.size == (w if (i + 1) % m == 0 else 1.0)


def test_nonmigratory_adversary_shape():
    m, w = 3, 10.0
    inst = gen_nonmigratory_srpt_adversary(m=m, w=w, power=P2)
    units = [j for j in inst.jobs if j.arrival == 0.0]
    assert len(units) == m - 1 and all(j.size == 1.0 for j in units)
    larges = sorted((j.size for j in inst.jobs if j.arrival > 0), reverse=True)
    assert len(larges) == m
    assert larges[0] == w and all(a > b for a, b in zip(larges, larges[1:]))
    with pytest.raises(InvalidInstanceError):
        gen_nonmigratory_srpt_adversary(m=3, w=1.0, eps=0.5, power=P2)


def test_size_distributions():
    rng = np.random.default_rng(0)
    det = SizeDistribution("deterministic", {"value": 2.0})
    assert det.mean() == 2.0
    assert np.all(det.sample(rng, 10) == 2.0)
    exp = SizeDistribution("exponential", {"mean": 3.0})
    xs = exp.sample(np.random.default_rng(1), 200_000)
    assert xs.mean() == pytest.approx(3.0, rel=0.02)
    bp = SizeDistribution("bounded-pareto", {"shape": 1.5, "lower": 1.0, "upper": 100.0})
    ys = bp.sample(np.random.default_rng(2), 200_000)
    assert np.all((ys >= 1.0) & (ys <= 100.0))
    assert ys.mean() == pytest.approx(bp.mean(), rel=0.02)
    with pytest.raises(InvalidInstanceError):
        SizeDistribution("weird")
    with pytest.raises(InvalidInstanceError):
        SizeDistribution("bounded-pareto", {"shape": 1.0, "lower": 5.0, "upper": 1.0})


def test_stochastic_generation_reproducible():
    spec = StochasticSpec(
        rate=2.0, size_dist=SizeDistribution("exponential", {"mean": 1.0}), horizon=100.0, seed=5
    )
    assert spec.load == 2.0
    a = gen_stochastic(spec, 2, P2)
    b = gen_stochastic(spec, 2, P2)
    assert a == b
    assert len(a.jobs) == pytest.approx(200, abs=60)
    assert all(0 < j.arrival <= 100.0 for j in a.jobs)
    c = gen_stochastic(
        StochasticSpec(rate=2.0, size_dist=spec.size_dist, horizon=100.0, seed=6), 2, P2
    )
    assert c != a
    assert StochasticSpec.from_dict(spec.to_dict()) == spec
    assert spec.to_dict()["lambda"] == 2.0


def test_save_load_round_trip(tmp_path):
    inst = Instance.from_arrivals(2, PowerFunction(2.5, 1.5), [(0.0, 1.0), (0.5, 2.0)])
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    assert load_instance(path) == inst


def test_load_diagnostics(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(InvalidInstanceError, match="line"):
        load_instance(bad)
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"m": 1, "jobs": []}))
    with pytest.raises(InvalidInstanceError, match="power"):
        load_instance(missing)


def test_load_unsorted_warns(tmp_path, caplog):
    doc = {
        "m": 1,
        "power": {"alpha": 2.0},
        "jobs": [{"arrival": 1.0, "size": 1.0}, {"arrival": 0.0, "size": 2.0}],
    }
    path = tmp_path / "unsorted.json"
    path.write_text(json.dumps(doc))
    with caplog.at_level(logging.WARNING):
        inst = load_instance(path)
    assert "not sorted" in caplog.text
    assert [j.arrival for j in inst.jobs] == [0.0, 1.0]
