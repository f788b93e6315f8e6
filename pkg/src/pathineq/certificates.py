"""Inequality certificates and the shared tolerance policy.

A certificate records one checked inequality instance: identifier, both
sides, slack = rhs - lhs, and the pass verdict.  All certified
inequalities here are scale-homogeneous, so the pass rule uses a
relative-absolute tolerance:

    passed  <=>  slack >= -tolerance * max(1, |rhs|)

Exact-zero slack is a legitimate boundary case (single-point paths,
zero increments), hence the signed comparison instead of demanding
strict positivity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

__all__ = ["InequalityId", "Certificate", "DEFAULT_TOLERANCE", "tolerance_scale"]

DEFAULT_TOLERANCE = 1e-9


class InequalityId(enum.Enum):
    """Identifiers for every inequality the package certifies."""

    DAVIS_QV_BOUND = "DAVIS_QV_BOUND"          # sqrt([x]_N) <= 3 x*_N - (h.x)_N
    DAVIS_MAX_BOUND = "DAVIS_MAX_BOUND"        # x*_N <= 6 sqrt([x]_N) + 2 (h.x)_N
    DAVIS_QV_SHARP = "DAVIS_QV_SHARP"          # sqrt([x]_N) <= (sqrt(2)+1) x*_N - (h.x)_N
    BDG_QV_BOUND = "BDG_QV_BOUND"              # [x]_N^(p/2) <= c_p (x*_N)^p - (h.x)_N
    BDG_MAX_BOUND = "BDG_MAX_BOUND"            # (x*_N)^p <= c_p [x]_N^(p/2) + 2 (g.x)_N
    SHIFTED_QV = "SHIFTED_QV"                  # sqrt([x]_N) - sqrt([x]_{i-1}) <= 2a x*_N + (f^i.x)_i^N
    SHIFTED_MAX = "SHIFTED_MAX"                # x*_N - x*_{i-1} <= b sqrt([x]_N) + (g^i.x)_i^N
    GN_LINEAR = "GN_LINEAR"                    # a_n^p <= p c_n a_n^(p-1) + (w.x)_n
    GN_POWER = "GN_POWER"                      # a_n^p <= (p-1)^(p-1) c_n^p + p (w.x)_n
    CONT_DAVIS = "CONT_DAVIS"                  # sqrt([M]_T) <= 1.5 M*_T - (H.M)_T
    AUX_F_STEP = "AUX_F_STEP"                  # one-step bound for the potential f
    AUX_G_STEP = "AUX_G_STEP"                  # one-step bound for the potential g


def tolerance_scale(rhs: float) -> float:
    """Scale factor for the relative-absolute pass rule."""
    return max(1.0, abs(rhs))


@dataclass(frozen=True)
class Certificate:
    """One checked inequality instance; ``slack = rhs - lhs`` as computed."""

    inequality_id: InequalityId
    lhs: float
    rhs: float
    slack: float
    tolerance: float
    passed: bool

    @classmethod
    def check(
        cls,
        inequality_id: InequalityId,
        lhs: float,
        rhs: float,
        tolerance: float = DEFAULT_TOLERANCE,
    ) -> "Certificate":
        if not tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {tolerance!r}")
        lhs = float(lhs)
        rhs = float(rhs)
        slack = rhs - lhs
        passed = slack >= -tolerance * tolerance_scale(rhs)
        return cls(inequality_id, lhs, rhs, slack, float(tolerance), bool(passed))

    def tightness_ratio(self) -> float:
        """lhs/rhs with 0/0 = 0; values near 1 mark near-equality instances."""
        if self.lhs == 0.0 and self.rhs == 0.0:
            return 0.0
        return self.lhs / self.rhs

    def to_dict(self) -> dict:
        return {
            "inequality_id": self.inequality_id.value,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        return cls(
            inequality_id=InequalityId(data["inequality_id"]),
            lhs=float(data["lhs"]),
            rhs=float(data["rhs"]),
            slack=float(data["slack"]),
            tolerance=float(data["tolerance"]),
            passed=bool(data["passed"]),
        )
