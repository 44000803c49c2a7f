"""Power-usage curves for speed-scaled servers.

Only power-law curves P(s) = coefficient * s**alpha with alpha > 1 and
coefficient >= 1 are supported.  This family is strictly increasing and
strictly convex with P(0) = 0, and is submultiplicative
(P(x*y) <= P(x)*P(y)), which is all the analysis machinery relies on.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PowerFunction:
    """P(s) = coefficient * s**alpha.

    alpha: exponent, must be > 1 (strict convexity).
    coefficient: scale, must be >= 1 (submultiplicativity).
    """

    alpha: float
    coefficient: float = 1.0

    def __post_init__(self) -> None:
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        if not self.coefficient >= 1.0:
            raise ValueError(f"coefficient must be >= 1, got {self.coefficient}")

    def power(self, speed: float) -> float:
        """Power drawn while running at `speed`."""
        if speed < 0:
            raise ValueError(f"speed must be nonnegative, got {speed}")
        return self.coefficient * speed**self.alpha

    def speed_for_power(self, p: float) -> float:
        """Inverse curve: the speed whose power draw is `p`."""
        if p < 0:
            raise ValueError(f"power must be nonnegative, got {p}")
        return (p / self.coefficient) ** (1.0 / self.alpha)

    def marginal(self, speed: float) -> float:
        """Derivative of the power curve at `speed`."""
        if speed < 0:
            raise ValueError(f"speed must be nonnegative, got {speed}")
        return self.coefficient * self.alpha * speed ** (self.alpha - 1.0)

    def marginal_at_power(self, x: float) -> float:
        """Marginal power at the speed whose power draw is x.

        Returns 0 for x <= 0 by convention; callers index this map at
        possibly-negative queue-count differences.
        """
        if x <= 0:
            return 0.0
        return self.marginal(self.speed_for_power(x))

    @property
    def breakeven_speed(self) -> float:
        """The speed threshold above which power exceeds speed.

        For the power-law curve this is coefficient**(-1/(alpha-1)).
        """
        return self.coefficient ** (-1.0 / (self.alpha - 1.0))

    def tangent_slack(self, s: float, s_tilde: float, x: float) -> float:
        """Slack of the convexity tangent inequality

            D(x)*(s_tilde - s) <= (P_inv(x) - s)*D(x) + P(s_tilde) - x,

        where D is `marginal_at_power`.  Returns RHS - LHS, which is
        nonnegative for all valid inputs.
        """
        if s < 0 or s_tilde < 0 or x < 0:
            raise ValueError("tangent_slack arguments must be nonnegative")
        d = self.marginal_at_power(x)
        lhs = d * (s_tilde - s)
        rhs = (self.speed_for_power(x) - s) * d + self.power(s_tilde) - x
        return rhs - lhs

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "coefficient": self.coefficient}

    @classmethod
    def from_dict(cls, d: dict) -> "PowerFunction":
        return cls(alpha=float(d["alpha"]), coefficient=float(d.get("coefficient", 1.0)))
