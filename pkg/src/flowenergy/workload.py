"""Jobs, arrival sequences, adversarial generators, and instance files."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInstanceError
from .power import PowerFunction

log = logging.getLogger(__name__)

# Gap used to realize "in quick succession" arrival bursts.  Small enough
# that no policy completes meaningful work between arrivals at the speeds
# any of the implemented policies use.
DEFAULT_BURST_GAP = 1e-6


@dataclass(frozen=True)
class Job:
    """A single job: id is the 0-based arrival ordinal."""

    id: int
    arrival: float
    size: float

    def __post_init__(self) -> None:
        if self.arrival < 0:
            raise InvalidInstanceError(f"job {self.id}: negative arrival {self.arrival}")
        if not self.size > 0:
            raise InvalidInstanceError(f"job {self.id}: size must be positive, got {self.size}")


@dataclass(frozen=True)
class Instance:
    """An arrival sequence together with the server count and power curve."""

    m: int
    power: PowerFunction
    jobs: tuple[Job, ...]

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InvalidInstanceError(f"server count must be >= 1, got {self.m}")
        ids = [j.id for j in self.jobs]
        if ids != list(range(len(self.jobs))):
            raise InvalidInstanceError("job ids must be 0..J-1 in order")
        keys = [(j.arrival, j.id) for j in self.jobs]
        if keys != sorted(keys):
            raise InvalidInstanceError("jobs must be sorted by (arrival, id)")

    @classmethod
    def from_arrivals(
        cls, m: int, power: PowerFunction, arrivals_sizes: list[tuple[float, float]]
    ) -> "Instance":
        """Build an instance, assigning ids in (arrival, input-order) order."""
        order = sorted(range(len(arrivals_sizes)), key=lambda i: (arrivals_sizes[i][0], i))
        jobs = tuple(
            Job(id=k, arrival=arrivals_sizes[i][0], size=arrivals_sizes[i][1])
            for k, i in enumerate(order)
        )
        return cls(m=m, power=power, jobs=jobs)

    @property
    def total_work(self) -> float:
        return sum(j.size for j in self.jobs)

    def is_single_burst(self) -> bool:
        """True when every job arrives at the same instant."""
        return len({j.arrival for j in self.jobs}) <= 1

    def unit_sizes(self) -> bool:
        """True when all job sizes are equal."""
        return len({j.size for j in self.jobs}) <= 1


@dataclass(frozen=True)
class SizeDistribution:
    """Job-size distribution descriptor.

    kinds:
      deterministic: params {"value"}
      exponential:   params {"mean"}
      bounded-pareto: params {"shape", "lower", "upper"}
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("deterministic", "exponential", "bounded-pareto"):
            raise InvalidInstanceError(f"unknown size distribution kind {self.kind!r}")
        if self.kind == "bounded-pareto":
            a, lo, hi = self.params["shape"], self.params["lower"], self.params["upper"]
            if not (lo > 0 and hi > lo and a > 0):
                raise InvalidInstanceError("bounded-pareto needs 0 < lower < upper and shape > 0")

    def mean(self) -> float:
        if self.kind == "deterministic":
            return float(self.params["value"])
        if self.kind == "exponential":
            return float(self.params["mean"])
        a = self.params["shape"]
        lo, hi = self.params["lower"], self.params["upper"]
        if a == 1.0:
            return float(np.log(hi / lo) / (1.0 / lo - 1.0 / hi))
        norm = 1.0 - (lo / hi) ** a
        return float(lo**a / norm * a / (a - 1.0) * (lo ** (1.0 - a) - hi ** (1.0 - a)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "deterministic":
            return np.full(n, float(self.params["value"]))
        if self.kind == "exponential":
            return rng.exponential(float(self.params["mean"]), size=n)
        a = self.params["shape"]
        lo, hi = self.params["lower"], self.params["upper"]
        u = rng.random(n)
        # Inverse-CDF of the Pareto truncated to [lo, hi].
        return (lo**-a - u * (lo**-a - hi**-a)) ** (-1.0 / a)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "SizeDistribution":
        return cls(kind=d["kind"], params=dict(d.get("params", {})))


@dataclass(frozen=True)
class StochasticSpec:
    """Poisson arrivals at `rate` over [0, horizon] with i.i.d. sizes."""

    rate: float
    size_dist: SizeDistribution
    horizon: float
    seed: int

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise InvalidInstanceError(f"arrival rate must be positive, got {self.rate}")
        if self.horizon < 0:
            raise InvalidInstanceError(f"horizon must be nonnegative, got {self.horizon}")

    @property
    def load(self) -> float:
        """Rate at which work enters the system: rate * mean job size."""
        return self.rate * self.size_dist.mean()

    def to_dict(self) -> dict:
        return {
            "lambda": self.rate,
            "size_dist": self.size_dist.to_dict(),
            "horizon": self.horizon,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StochasticSpec":
        return cls(
            rate=float(d["lambda"]),
            size_dist=SizeDistribution.from_dict(d["size_dist"]),
            horizon=float(d["horizon"]),
            seed=int(d["seed"]),
        )


def gen_least_workload_adversary(
    m: int, w: int, power: PowerFunction, gap: float = DEFAULT_BURST_GAP
) -> Instance:
    """m-1 jobs of size w at time 0, then w unit jobs in a burst just after.

    Forces least-unfinished-workload routing to pile all unit jobs onto one
    server.
    """
    if m < 2 or w < 1:
        raise InvalidInstanceError(f"need m >= 2 and w >= 1, got m={m}, w={w}")
    arrivals = [(0.0, float(w))] * (m - 1) + [(gap, 1.0)] * int(w)
    return Instance.from_arrivals(m, power, arrivals)


def gen_jsq_adversary(
    m: int, w: float, power: PowerFunction, gap: float = DEFAULT_BURST_GAP
) -> Instance:
    """m*m jobs in quick succession; every m-th arrival has size w, rest size 1.

    Shortest-queue routing degenerates to round robin on this stream, sending
    all the size-w jobs to one server.
    """
    if m < 2 or w < 1:
        raise InvalidInstanceError(f"need m >= 2 and w >= 1, got m={m}, w={w}")
    arrivals = []
    for i in range(m * m):
        size = float(w) if (i + 1) % m == 0 else 1.0
        arrivals.append((i * gap, size))
    return Instance.from_arrivals(m, power, arrivals)


def gen_nonmigratory_srpt_adversary(
    m: int,
    w: float,
    eps: float | None = None,
    power: PowerFunction | None = None,
    gap: float = DEFAULT_BURST_GAP,
) -> Instance:
    """m-1 unit jobs at 0, then m jobs of sizes w, w-eps, ... in quick succession.

    The descending sizes force remaining-time-threshold routing to stack all
    m large jobs on the one initially idle server.
    """
    if power is None:
        raise InvalidInstanceError("power function required")
    if eps is None:
        eps = 1e-3 * w
    if m < 2:
        raise InvalidInstanceError(f"need m >= 2, got m={m}")
    if not w > m * eps:
        raise InvalidInstanceError(f"need w > m*eps, got w={w}, m*eps={m * eps}")
    arrivals = [(0.0, 1.0)] * (m - 1)
    for i in range(m):
        arrivals.append(((i + 1) * gap, float(w) - i * eps))
    return Instance.from_arrivals(m, power, arrivals)


def gen_stochastic(spec: StochasticSpec, m: int, power: PowerFunction) -> Instance:
    """Seeded Poisson arrivals over [0, horizon] with i.i.d. sizes."""
    rng = np.random.default_rng(spec.seed)
    times = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / spec.rate)
        if t > spec.horizon:
            break
        times.append(t)
    sizes = spec.size_dist.sample(rng, len(times))
    return Instance.from_arrivals(m, power, list(zip(times, (float(s) for s in sizes))))


def save_instance(instance: Instance, path) -> None:
    doc = {
        "m": instance.m,
        "power": instance.power.to_dict(),
        "jobs": [{"arrival": j.arrival, "size": j.size} for j in instance.jobs],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInstanceError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    for key in ("m", "power", "jobs"):
        if key not in doc:
            raise InvalidInstanceError(f"{path}: missing field {key!r}")
    try:
        power = PowerFunction.from_dict(doc["power"])
    except (KeyError, TypeError) as exc:
        raise InvalidInstanceError(f"{path}: bad power descriptor: {exc}")
    arrivals = []
    for i, rec in enumerate(doc["jobs"]):
        try:
            arrivals.append((float(rec["arrival"]), float(rec["size"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInstanceError(f"{path}: jobs[{i}]: {exc}")
    if arrivals != sorted(arrivals, key=lambda p: p[0]):
        log.warning("%s: arrivals not sorted; canonicalizing", path)
    return Instance.from_arrivals(int(doc["m"]), power, arrivals)
