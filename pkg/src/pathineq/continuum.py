"""Numerical exploration of the continuous-time bounds on discretized
Brownian paths.

For a continuous local martingale started at 0 the quadratic-variation
bound holds with the smaller constant 3/2 and integrand
M_s / (sqrt([M]_s) v M*_s).  A discretization can violate it by a
fluctuation of order sqrt(dt), so the certificate here is *reported*,
never asserted per path: the empirical slack distribution should push
its lower tail toward 0 under grid refinement.

Everything is a finite path plus a time step.  Discrete [M] uses squared
increments (not the grid time), keeping the module purely pathwise and
internally consistent with the denominator; integrals are left-point
sums, matching the predictable convention of the discrete theory.  The
fully discrete certificates of :mod:`pathineq.davis` apply to these
paths verbatim and always pass, which anchors the approximations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .certificates import DEFAULT_TOLERANCE, Certificate, InequalityId
from .mc import Generator, McReport, keyed_rng, sample_matrix, _stats2d
from .paths import Path, Strategy

__all__ = [
    "CONTINUOUS_QV_CONSTANT",
    "BmPath",
    "sample_bm",
    "continuous_davis_slack",
    "heuristic_strategies",
    "superhedge_report",
    "refinement_report",
    "RefinementLevel",
    "RefinementReport",
]

CONTINUOUS_QV_CONSTANT = 1.5


@dataclass(frozen=True, eq=False)
class BmPath:
    """Uniform-grid discretization of a Brownian path started at 0."""

    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"grid step must be finite and positive, got {self.dt!r}")
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 1 or arr.size < 1 or not np.all(np.isfinite(arr)):
            raise ValueError("values must be a non-empty finite 1-d sequence")
        if arr[0] != 0.0:
            raise ValueError("discretized Brownian paths start at 0")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def steps(self) -> int:
        return self.values.size - 1

    @property
    def horizon(self) -> float:
        return self.steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt

    def to_path(self) -> Path:
        """Plain path view; the grid step is metadata on the side."""
        return Path(self.values)


def sample_bm(horizon: float, steps: int, count: int, seed: int) -> list[BmPath]:
    """Keyed Brownian samples on the uniform grid (same RNG contract as mc)."""
    if steps < 1:
        raise ValueError(f"need at least one step, got {steps!r}")
    gen = Generator.bm_discrete(horizon=horizon)
    X = sample_matrix(gen, steps, count, seed)
    dt = horizon / steps
    return [BmPath(dt=dt, values=row) for row in X]


def _slack_batch(X: np.ndarray) -> np.ndarray:
    """Certificate slacks, vectorized over rows of the value matrix."""
    running_max, quad_var = _stats2d(X)
    n = X.shape[1] - 1
    denom = np.maximum(np.sqrt(quad_var[:, :n]), running_max[:, :n])
    H = np.zeros((X.shape[0], n))
    np.divide(X[:, :n], denom, out=H, where=denom > 0)
    if n:
        traded = np.add.accumulate(H * np.diff(X, axis=1), axis=1)[:, -1]
    else:
        traded = np.zeros(X.shape[0])
    lhs = np.sqrt(quad_var[:, -1])
    rhs = CONTINUOUS_QV_CONSTANT * running_max[:, -1] - traded
    return rhs - lhs


def continuous_davis_slack(bm: BmPath, tolerance: float = DEFAULT_TOLERANCE) -> Certificate:
    """Left-point discretization of the constant-3/2 bound on one path.

        sqrt([M]_T) <= 1.5 M*_T - sum_k H_k (M_{k+1} - M_k),
        H_k = M_k / (sqrt([M]_k) v M*_k), 0/0 = 0.

    May fail by a discretization fluctuation; consume the slack
    distribution (see :func:`refinement_report`) rather than the pass
    flag of an individual path.
    """
    slack = float(_slack_batch(bm.values[None, :])[0])
    running_max, quad_var = _stats2d(bm.values[None, :])
    lhs = float(np.sqrt(quad_var[0, -1]))
    return Certificate.check(
        InequalityId.CONT_DAVIS, lhs=lhs, rhs=lhs + slack, tolerance=tolerance
    )


def heuristic_strategies(bm: BmPath) -> tuple[Strategy, Strategy]:
    """The two bounded continuum integrands, evaluated at the left grid points.

        s1_k = -M_k / (sqrt(t_k) v M*_k)
        s2_k = -M_k / sqrt(t_k + (M*_k)^2)

    Both live in [-1, 1] (0/0 = 0 at the origin).  s1 is the form that
    yields the sharper continuous constant; s2 transplants the discrete
    strategy shape onto the time grid.
    """
    n = bm.steps
    M = bm.values[:n]
    t = bm.times[:n]
    running_max = np.maximum.accumulate(np.abs(bm.values))[:n]
    d1 = np.maximum(np.sqrt(t), running_max)
    v1 = np.zeros(n)
    np.divide(-M, d1, out=v1, where=d1 > 0)
    d2 = np.sqrt(t + running_max * running_max)
    v2 = np.zeros(n)
    np.divide(-M, d2, out=v2, where=d2 > 0)
    return Strategy(v1), Strategy(v2)


def _required_static_size(X: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-path minimal a with sqrt(T) <= a M*_T + (s.M)_T, for both integrands.

    Rows whose running max vanishes admit no finite answer and come back
    as NaN (callers exclude them).
    """
    count, cols = X.shape
    n = cols - 1
    t = np.arange(cols) * dt
    running_max = np.maximum.accumulate(np.abs(X), axis=1)
    M = X[:, :n]
    rm = running_max[:, :n]
    d1 = np.maximum(np.sqrt(t[:n])[None, :], rm)
    s1 = np.zeros_like(M)
    np.divide(-M, d1, out=s1, where=d1 > 0)
    d2 = np.sqrt(t[:n][None, :] + rm * rm)
    s2 = np.zeros_like(M)
    np.divide(-M, d2, out=s2, where=d2 > 0)
    dX = np.diff(X, axis=1)
    traded1 = np.add.accumulate(s1 * dX, axis=1)[:, -1] if n else np.zeros(count)
    traded2 = np.add.accumulate(s2 * dX, axis=1)[:, -1] if n else np.zeros(count)
    peak = running_max[:, -1]
    target = math.sqrt(n * dt)
    a1 = np.where(peak > 0, (target - traded1) / np.where(peak > 0, peak, 1.0), np.nan)
    a2 = np.where(peak > 0, (target - traded2) / np.where(peak > 0, peak, 1.0), np.nan)
    return a1, a2


def superhedge_report(
    count: int, steps: int, horizon: float, seed: int
) -> tuple[McReport, McReport]:
    """Distribution of the minimal static-position size for both integrands.

    For each sampled path, the smallest a making
    sqrt(T) <= a M*_T + (s.M)_T at the horizon; identically-zero paths
    are excluded (the requirement is 0/0 there).  One report per
    integrand; the estimate is the sample mean of a, with the maximum
    and upper quantiles in extra.  Exploratory: no pathwise assertion.
    """
    if count < 2:
        raise ValueError("need at least 2 samples")
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be finite and positive, got {horizon!r}")
    if steps < 1:
        raise ValueError(f"need at least one step, got {steps!r}")
    t0 = time.perf_counter()
    gen = Generator.bm_discrete(horizon=horizon)
    X = sample_matrix(gen, steps, count, seed)
    a1, a2 = _required_static_size(X, horizon / steps)
    elapsed = time.perf_counter() - t0

    def build(a: np.ndarray, label: str) -> McReport:
        kept = a[~np.isnan(a)]
        if kept.size < 2:
            estimate, se = math.nan, math.nan
        else:
            estimate = float(np.mean(kept))
            se = float(np.std(kept, ddof=1) / math.sqrt(kept.size))
        extra = {
            "integrand": label,
            "excluded": int(a.size - kept.size),
            "max": float(np.max(kept)) if kept.size else math.nan,
            "q99": float(np.quantile(kept, 0.99)) if kept.size else math.nan,
        }
        return McReport(
            generator=gen.label(),
            length=steps,
            samples=count,
            estimate=estimate,
            std_error=se,
            seed=int(seed),
            elapsed=elapsed,
            extra=extra,
        )

    return build(a1, "ratio"), build(a2, "sqrt")


# ---------------------------------------------------------------------------
# Refinement study of the slack distribution.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RefinementLevel:
    steps: int
    quantile_01: float
    quantile_01_se: float
    mean_negative_part: float
    mean_negative_part_se: float
    frac_above_threshold: float

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "quantile_01": self.quantile_01,
            "quantile_01_se": self.quantile_01_se,
            "mean_negative_part": self.mean_negative_part,
            "mean_negative_part_se": self.mean_negative_part_se,
            "frac_above_threshold": self.frac_above_threshold,
        }


@dataclass(frozen=True)
class RefinementReport:
    """Slack distribution summaries over a ladder of grid refinements."""

    horizon: float
    samples: int
    seed: int
    threshold: float
    levels: tuple[RefinementLevel, ...]

    def quantile_ladder_monotone(self, z: float = 2.0) -> bool:
        """Is the 1%-quantile nondecreasing along the ladder within z SEs?"""
        for a, b in zip(self.levels, self.levels[1:]):
            allowance = z * math.hypot(a.quantile_01_se, b.quantile_01_se)
            if b.quantile_01 < a.quantile_01 - allowance:
                return False
        return True

    def negative_part_monotone(self, z: float = 2.0) -> bool:
        """Is the mean negative part nonincreasing along the ladder within z SEs?"""
        for a, b in zip(self.levels, self.levels[1:]):
            allowance = z * math.hypot(a.mean_negative_part_se, b.mean_negative_part_se)
            if b.mean_negative_part > a.mean_negative_part + allowance:
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "samples": self.samples,
            "seed": self.seed,
            "threshold": self.threshold,
            "levels": [level.to_dict() for level in self.levels],
        }


def _bootstrap_quantile_se(
    values: np.ndarray, q: float, seed: int, stream: int, resamples: int = 300
) -> float:
    rng = keyed_rng(seed, stream)
    idx = rng.integers(0, values.size, size=(resamples, values.size))
    return float(np.std(np.quantile(values[idx], q, axis=1), ddof=1))


def refinement_report(
    count: int,
    steps_ladder: tuple[int, ...] = (256, 1024, 4096),
    horizon: float = 1.0,
    seed: int = 0,
    threshold_factor: float = -0.05,
) -> RefinementReport:
    """Slack distribution of the constant-3/2 bound across grid refinements.

    For each step count, samples `count` paths with the same per-sample
    keys (a fixed seed set), records the empirical 1%-quantile of the
    slack (bootstrap standard error), the mean negative part, and the
    fraction of paths with slack >= threshold_factor * sqrt(horizon).
    """
    if count < 2:
        raise ValueError("need at least 2 samples")
    threshold = threshold_factor * math.sqrt(horizon)
    levels = []
    for stream, steps in enumerate(steps_ladder):
        gen = Generator.bm_discrete(horizon=horizon)
        X = sample_matrix(gen, steps, count, seed)
        slack = _slack_batch(X)
        neg = np.minimum(slack, 0.0)
        q01 = float(np.quantile(slack, 0.01))
        q01_se = _bootstrap_quantile_se(slack, 0.01, seed, 1_000_000 + stream)
        levels.append(
            RefinementLevel(
                steps=int(steps),
                quantile_01=q01,
                quantile_01_se=q01_se,
                mean_negative_part=float(np.mean(-neg)),
                mean_negative_part_se=float(np.std(-neg, ddof=1) / math.sqrt(count)),
                frac_above_threshold=float(np.mean(slack >= threshold)),
            )
        )
    return RefinementReport(
        horizon=horizon,
        samples=count,
        seed=int(seed),
        threshold=threshold,
        levels=tuple(levels),
    )
