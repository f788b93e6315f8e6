"""Pathwise Davis bounds and the auxiliary potentials behind them.

The predictable strategy

    h_n = x_n / sqrt([x]_n + (x*_n)^2)        (0/0 = 0, |h_n| <= 1)

turns the classical Davis inequalities into deterministic statements
that hold for every finite real path, not just in expectation:

    sqrt([x]_N) <= 3 x*_N - (h.x)_N                (quadratic-variation bound)
    x*_N        <= 6 sqrt([x]_N) + 2 (h.x)_N       (running-max bound)
    sqrt([x]_N) <= (sqrt(2)+1) x*_N - (h.x)_N      (sharpened constant)

The proofs telescope two potentials f and g of the state
(value, running max, quadratic variation).  Their one-step increments
are controlled by the traded increment plus, respectively, a
quadratic-variation or a running-max increment; this module certifies
those one-step bounds numerically on grids and random points, which is
the computational substitute for the case analysis that proves them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certificates import DEFAULT_TOLERANCE, Certificate, InequalityId, tolerance_scale
from .paths import Path, PathStats, Strategy, compute_stats, integral
from .rng import keyed_rng

__all__ = [
    "QV_CONSTANT",
    "MAX_CONSTANT",
    "SHARP_QV_CONSTANT",
    "STEP_MAX_CONSTANT",
    "AuxPoint",
    "GridResult",
    "davis_strategy",
    "certify_davis",
    "certify_davis_sharp",
    "aux_f",
    "aux_g",
    "check_aux_step",
    "check_aux_step_batch",
    "aux_step_grid",
    "sample_admissible_points",
]

QV_CONSTANT = 3.0
MAX_CONSTANT = 6.0
SHARP_QV_CONSTANT = 1.0 + math.sqrt(2.0)
# Sharp coefficient of the running-max increment in the one-step bound for g.
STEP_MAX_CONSTANT = math.sqrt(2.0) - 1.0

# Below this value of m^2 + q the potentials are evaluated in normalized
# coordinates; the direct formulas would underflow when squaring m.
_NORMALIZE_BELOW = 1e-300


def davis_strategy(path: Path) -> Strategy:
    """The bounded predictable integrand ``h_n = x_n / sqrt([x]_n + (x*_n)^2)``.

    A vanishing denominator means the path is identically zero so far, in
    which case the 0/0 = 0 convention applies (explicit branch, never NaN).
    """
    x = path.values
    N = path.last_index
    stats = compute_stats(path)
    denom = np.sqrt(stats.quad_var[:N] + stats.running_max[:N] * stats.running_max[:N])
    values = np.zeros(N)
    np.divide(x[:N], denom, out=values, where=denom > 0)
    return Strategy(values)


def _davis_sides(path: Path) -> tuple[PathStats, float]:
    stats = compute_stats(path)
    h = davis_strategy(path)
    return stats, integral(h, path)


def certify_davis(
    path: Path, tolerance: float = DEFAULT_TOLERANCE
) -> tuple[Certificate, Certificate]:
    """Certify both Davis bounds (constants 3 and 6) on one path."""
    stats, traded = _davis_sides(path)
    N = path.last_index
    root_qv = math.sqrt(stats.qv_at(N))
    cert_qv = Certificate.check(
        InequalityId.DAVIS_QV_BOUND,
        lhs=root_qv,
        rhs=QV_CONSTANT * stats.max_at(N) - traded,
        tolerance=tolerance,
    )
    cert_max = Certificate.check(
        InequalityId.DAVIS_MAX_BOUND,
        lhs=stats.max_at(N),
        rhs=MAX_CONSTANT * root_qv + 2.0 * traded,
        tolerance=tolerance,
    )
    return cert_qv, cert_max


def certify_davis_sharp(path: Path, tolerance: float = DEFAULT_TOLERANCE) -> Certificate:
    """Certify the quadratic-variation bound with the sharper constant sqrt(2)+1."""
    stats, traded = _davis_sides(path)
    N = path.last_index
    return Certificate.check(
        InequalityId.DAVIS_QV_SHARP,
        lhs=math.sqrt(stats.qv_at(N)),
        rhs=SHARP_QV_CONSTANT * stats.max_at(N) - traded,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# Auxiliary potentials.  Domain: |x| <= m, q >= 0.
#
#   f(x, m, q) = -2 sqrt(q) + sqrt(m^2+q) - (m^2 - x^2) / (2 sqrt(m^2+q))
#   g(x, m, q) = -2 m       + sqrt(m^2+q) + (m^2 - x^2) / (2 sqrt(m^2+q))
#
# continuously extended by f(0,0,0) = g(0,0,0) = 0.  Both are homogeneous
# of degree 1 under (x, m, q) -> (t x, t m, t^2 q), which the tiny-input
# branch exploits to dodge underflow.
# ---------------------------------------------------------------------------


def _fg_direct(x: float, m: float, q: float) -> tuple[float, float]:
    root = math.hypot(m, math.sqrt(q))
    half_gap = (m * m - x * x) / (2.0 * root)
    f = -2.0 * math.sqrt(q) + root - half_gap
    g = -2.0 * m + root + half_gap
    return f, g


def _fg(x: float, m: float, q: float) -> tuple[float, float]:
    s = math.hypot(m, math.sqrt(q))
    if s == 0.0:
        return 0.0, 0.0
    if s * s < _NORMALIZE_BELOW:
        rq = math.sqrt(q) / s
        f, g = _fg_direct(x / s, m / s, rq * rq)
        return s * f, s * g
    return _fg_direct(x, m, q)


def _check_aux_domain(x: float, m: float, q: float) -> None:
    if not (math.isfinite(x) and math.isfinite(m) and math.isfinite(q)):
        raise ValueError("auxiliary potential arguments must be finite")
    if q < 0:
        raise ValueError(f"quadratic-variation coordinate must be nonnegative, got q={q!r}")
    if abs(x) > m:
        raise ValueError(f"need |x| <= m, got x={x!r}, m={m!r}")


def aux_f(x: float, m: float, q: float) -> float:
    """Potential controlling the quadratic-variation side; f(0,0,0) = 0."""
    _check_aux_domain(x, m, q)
    return _fg(x, m, q)[0]


def aux_g(x: float, m: float, q: float) -> float:
    """Potential controlling the running-max side; g(0,0,0) = 0."""
    _check_aux_domain(x, m, q)
    return _fg(x, m, q)[1]


@dataclass(frozen=True)
class AuxPoint:
    """Admissible state (x, m, q) plus a step d: |x| <= m, q >= 0, d real."""

    x: float
    m: float
    q: float
    d: float

    def __post_init__(self):
        _check_aux_domain(self.x, self.m, self.q)
        if not math.isfinite(self.d):
            raise ValueError("step d must be finite")


def check_aux_step(
    point: AuxPoint, tolerance: float = DEFAULT_TOLERANCE
) -> tuple[Certificate, Certificate]:
    """Certify the one-step increment bounds for f and g at one point.

    With m' = m v |x+d| and q' = q + d^2:

        f(x+d, m', q') - f(x, m, q) <=  x d / sqrt(m^2+q) + (sqrt(q') - sqrt(q))
        g(x+d, m', q') - g(x, m, q) <= -x d / sqrt(m^2+q) + c (m' - m)

    with c = sqrt(2) - 1.  Summed along a path these telescope into the
    Davis bounds, so they must hold at every admissible point.
    """
    x, m, q, d = point.x, point.m, point.q, point.d
    m_next = max(m, abs(x + d))
    q_next = q + d * d
    f0, g0 = _fg(x, m, q)
    f1, g1 = _fg(x + d, m_next, q_next)
    s = math.hypot(m, math.sqrt(q))
    drift = (x / s) * d if s > 0.0 else 0.0
    cert_f = Certificate.check(
        InequalityId.AUX_F_STEP,
        lhs=f1 - f0,
        rhs=drift + (math.hypot(math.sqrt(q), d) - math.sqrt(q)),
        tolerance=tolerance,
    )
    cert_g = Certificate.check(
        InequalityId.AUX_G_STEP,
        lhs=g1 - g0,
        rhs=-drift + STEP_MAX_CONSTANT * (m_next - m),
        tolerance=tolerance,
    )
    return cert_f, cert_g


def _fg_batch(x: np.ndarray, m: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rootq = np.sqrt(q)
    s = np.hypot(m, rootq)
    tiny = (s > 0.0) & (s * s < _NORMALIZE_BELOW)
    xs = np.where(tiny, x / np.where(s > 0, s, 1.0), x)
    ms = np.where(tiny, m / np.where(s > 0, s, 1.0), m)
    qs = np.where(tiny, (rootq / np.where(s > 0, s, 1.0)) ** 2, q)
    root = np.hypot(ms, np.sqrt(qs))
    safe_root = np.where(root > 0, root, 1.0)
    half_gap = (ms * ms - xs * xs) / (2.0 * safe_root)
    f = -2.0 * np.sqrt(qs) + root - half_gap
    g = -2.0 * ms + root + half_gap
    f = np.where(root > 0, f, 0.0)
    g = np.where(root > 0, g, 0.0)
    scale = np.where(tiny, s, 1.0)
    return scale * f, scale * g


def check_aux_step_batch(
    x: np.ndarray,
    m: np.ndarray,
    q: np.ndarray,
    d: np.ndarray,
    tolerance: float = DEFAULT_TOLERANCE,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`check_aux_step` over admissible coordinate arrays.

    Returns ``(ok_f, ok_g, slack_f, slack_g)``; callers own the
    admissibility of the inputs (|x| <= m, q >= 0, all finite).
    """
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    q = np.asarray(q, dtype=float)
    d = np.asarray(d, dtype=float)
    m_next = np.maximum(m, np.abs(x + d))
    q_next = q + d * d
    f0, g0 = _fg_batch(x, m, q)
    f1, g1 = _fg_batch(x + d, m_next, q_next)
    rootq = np.sqrt(q)
    s = np.hypot(m, rootq)
    drift = np.where(s > 0, x / np.where(s > 0, s, 1.0) * d, 0.0)
    rhs_f = drift + (np.hypot(rootq, d) - rootq)
    rhs_g = -drift + STEP_MAX_CONSTANT * (m_next - m)
    slack_f = rhs_f - (f1 - f0)
    slack_g = rhs_g - (g1 - g0)
    ok_f = slack_f >= -tolerance * np.maximum(1.0, np.abs(rhs_f))
    ok_g = slack_g >= -tolerance * np.maximum(1.0, np.abs(rhs_g))
    return ok_f, ok_g, slack_f, slack_g


@dataclass(frozen=True)
class GridResult:
    """Outcome of a deterministic sweep of the one-step bounds."""

    points: int
    failures: int
    worst_slack_f: float
    worst_slack_g: float
    worst_point_f: AuxPoint
    worst_point_g: AuxPoint

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "failures": self.failures,
            "worst_slack_f": self.worst_slack_f,
            "worst_slack_g": self.worst_slack_g,
            "worst_point_f": vars(self.worst_point_f).copy(),
            "worst_point_g": vars(self.worst_point_g).copy(),
            "passed": self.passed,
        }


def default_grid_axes(m: float = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The documented deterministic grid at running max m (default 1).

    x sweeps m * {-1, -0.9, ..., 1}; q sweeps {0} plus decades 1e-3..1e4;
    d sweeps {0} plus nine log-spaced magnitudes 1e-2..1e2 of both signs.
    """
    xs = m * np.linspace(-1.0, 1.0, 21)
    qs = np.concatenate([[0.0], 10.0 ** np.arange(-3.0, 5.0)])
    mags = np.logspace(-2.0, 2.0, 9)
    ds = np.concatenate([[0.0], mags, -mags])
    return xs, qs, ds


def sample_admissible_points(
    count: int, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Random admissible (x, m, q, d) tuples for bulk one-step checks.

    Magnitudes are log-uniform across several decades with deliberate
    mass on the boundary |x| = m and on the degenerate slices x = 0,
    m = 0, q = 0, d = 0.  Deterministic given (count, seed).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count!r}")
    rng = keyed_rng(seed, 0)
    m = 10.0 ** rng.uniform(-3.0, 3.0, count)
    m[rng.random(count) < 0.02] = 0.0
    x = m * rng.uniform(-1.0, 1.0, count)
    at_boundary = rng.random(count) < 0.10
    x[at_boundary] = m[at_boundary] * np.where(rng.random(count)[at_boundary] < 0.5, 1.0, -1.0)
    x[rng.random(count) < 0.05] = 0.0
    q = 10.0 ** rng.uniform(-6.0, 6.0, count)
    q[rng.random(count) < 0.05] = 0.0
    d = np.where(rng.random(count) < 0.5, 1.0, -1.0) * 10.0 ** rng.uniform(-3.0, 3.0, count)
    d[rng.random(count) < 0.02] = 0.0
    return x, m, q, d


def aux_step_grid(m: float = 1.0, tolerance: float = DEFAULT_TOLERANCE) -> GridResult:
    """Sweep the one-step bounds for f and g over the deterministic grid."""
    if not (math.isfinite(m) and m > 0):
        raise ValueError(f"grid running max must be finite and positive, got {m!r}")
    xs, qs, ds = default_grid_axes(m)
    X, Q, D = np.meshgrid(xs, qs, ds, indexing="ij")
    x = X.ravel()
    q = Q.ravel()
    d = D.ravel()
    marr = np.full_like(x, m)
    ok_f, ok_g, slack_f, slack_g = check_aux_step_batch(x, marr, q, d, tolerance)
    failures = int(np.count_nonzero(~ok_f) + np.count_nonzero(~ok_g))
    i_f = int(np.argmin(slack_f))
    i_g = int(np.argmin(slack_g))
    return GridResult(
        points=x.size,
        failures=failures,
        worst_slack_f=float(slack_f[i_f]),
        worst_slack_g=float(slack_g[i_g]),
        worst_point_f=AuxPoint(float(x[i_f]), m, float(q[i_f]), float(d[i_f])),
        worst_point_g=AuxPoint(float(x[i_g]), m, float(q[i_g]), float(d[i_g])),
    )
