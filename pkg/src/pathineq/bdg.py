"""Pathwise BDG bounds for p > 1: shifted strategies, the pathwise
Garsia-Neveu lemma, and the explicit p-th power certificates.

The route mirrors the classical reduction of the p > 1 case to the
p = 1 case.  Davis bounds restarted at a later index i give the shifted
integrands

    f^(i)_n = (x_n - x_{i-1}) / sqrt([x]_n - [x]_{i-1} + max_{i<=k<=n} (x_k - x_{i-1})^2)

(index -1 quantities are 0, 0/0 = 0).  The pathwise Garsia-Neveu lemma
lifts the resulting linear bounds on increments of a nondecreasing
sequence to p-th power bounds with explicit integrand weights.  Chaining
the two produces, with c_p = 6^p (p-1)^(p-1),

    [x]_N^(p/2) <= c_p (x*_N)^p - (h.x)_N
    (x*_N)^p    <= c_p [x]_N^(p/2) + 2 (g.x)_N

for every finite real path, where h and g aggregate the f^(i) with
weights p^2 (sqrt([x]_i)^(p-1) - sqrt([x]_{i-1})^(p-1)) and
p^2 ((x*_i)^(p-1) - (x*_{i-1})^(p-1)).

Numerics: the denominator difference [x]_n - [x]_{i-1} is evaluated as
the tail sum of squared increments (exactly equal in real arithmetic,
and immune to the cancellation a literal prefix subtraction would
suffer).  Powers a^e of nonnegative bases use exp(e log a) with an
explicit zero branch, so a = 0 never hits platform pow corner cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import DEFAULT_TOLERANCE, Certificate, InequalityId, tolerance_scale
from .paths import Path, Strategy, compute_stats, integral, sq_increments

__all__ = [
    "P_MAX",
    "BdgConfig",
    "ShiftedStrategy",
    "GnInstance",
    "PremiseViolation",
    "shifted_strategy",
    "certify_shifted_davis",
    "gn_weights",
    "certify_gn",
    "bdg_constant",
    "bdg_strategies",
    "certify_bdg",
]

# Largest p admitted by default: 6^8 * 7^7 ~ 1.4e12 sits comfortably in
# double precision, larger exponents erode the certificate tolerances.
P_MAX = 8.0

# Build the full triangular integrand table at once up to this path
# length; beyond it, fall back to per-origin rows to bound memory.
_TABLE_MAX_LEN = 512


def _validate_p(p: float, allow_large_p: bool = False) -> float:
    p = float(p)
    if not (math.isfinite(p) and p > 1.0):
        raise ValueError(f"exponent p must be finite and > 1, got {p!r}")
    if p > P_MAX and not allow_large_p:
        raise ValueError(f"p={p!r} exceeds P_MAX={P_MAX}; pass allow_large_p=True to override")
    return p


def _pow_nonneg(base: float, expo: float) -> float:
    """``base ** expo`` for nonnegative bases: 0 for base <= 0, exp(e log b) otherwise."""
    if base <= 0.0:
        return 0.0
    return math.exp(expo * math.log(base))


def _pow_nonneg_arr(base: np.ndarray, expo: float) -> np.ndarray:
    out = np.zeros_like(base)
    pos = base > 0.0
    out[pos] = np.exp(expo * np.log(base[pos]))
    return out


@dataclass(frozen=True)
class BdgConfig:
    """Exponent and Davis constants used by the shifted certificates.

    alpha and beta are the constants of the underlying full-range
    bounds; the defaults (3, 6) certify the printed form.  alpha may be
    lowered to sqrt(2)+1 (the sharpened constant) without breaking
    soundness; anything smaller is the caller's own conjecture.
    """

    p: float = 2.0
    alpha: float = 3.0
    beta: float = 6.0
    allow_large_p: bool = False

    def __post_init__(self):
        _validate_p(self.p, self.allow_large_p)
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be finite and positive, got {self.alpha!r}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and positive, got {self.beta!r}")


@dataclass(frozen=True, eq=False)
class ShiftedStrategy:
    """Integrand with origin i: ``values[j - origin]`` is the position over step j."""

    origin: int
    values: np.ndarray

    def __post_init__(self):
        if self.origin < 0:
            raise ValueError(f"origin must be nonnegative, got {self.origin!r}")
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise ValueError("shifted strategy values must be a finite 1-d sequence")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size


def _shifted_values(x: np.ndarray, t: np.ndarray, i: int) -> np.ndarray:
    """f^(i)_n for n = i..N-1 on the raw value array x (t = sq_increments(x))."""
    base = x[i - 1] if i >= 1 else 0.0
    y = x[i:] - base
    qv_shift = np.add.accumulate(t[i:])
    running_sq = np.maximum.accumulate(y * y)
    denom = np.sqrt(qv_shift + running_sq)
    vals = np.zeros(y.size)
    np.divide(y, denom, out=vals, where=denom > 0)
    return vals[: x.size - 1 - i]


def shifted_strategy(path: Path, i: int) -> ShiftedStrategy:
    """Davis strategy restarted at index i, as an explicit closed form.

    Equals the full-range strategy applied to the shifted path
    ``y_j = x_{j+i} - x_{i-1}``; in particular i = 0 reproduces
    :func:`pathineq.davis.davis_strategy` exactly.  Every value is
    bounded by 1 in absolute value.
    """
    N = path.last_index
    if not 0 <= i <= N:
        raise IndexError(f"shift origin {i} out of range [0, {N}]")
    x = path.values
    vals = _shifted_values(x, sq_increments(x), i)
    return ShiftedStrategy(origin=i, values=vals)


def certify_shifted_davis(
    path: Path,
    i: int,
    cfg: BdgConfig | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> tuple[Certificate, Certificate]:
    """Certify the Davis bounds restarted at index i.

    With s = shifted_strategy(path, i), alpha = cfg.alpha, beta = cfg.beta:

        sqrt([x]_N) - sqrt([x]_{i-1}) <= 2 alpha x*_N + ((-s).x)_i^N
        x*_N - x*_{i-1}               <= beta sqrt([x]_N) + ((2s).x)_i^N

    The signs follow the hypothesis form in which the traded term is
    added on the right; the quadratic-variation side therefore trades -s
    and the running-max side trades 2s.
    """
    cfg = cfg if cfg is not None else BdgConfig()
    N = path.last_index
    if not 0 <= i <= N:
        raise IndexError(f"shift origin {i} out of range [0, {N}]")
    s = shifted_strategy(path, i)
    stats = compute_stats(path)
    root_qv_N = math.sqrt(stats.qv_at(N))
    root_qv_prev = math.sqrt(stats.qv_at(i - 1))
    traded_f = integral(ShiftedStrategy(origin=i, values=-s.values), path, i, N)
    traded_g = integral(ShiftedStrategy(origin=i, values=2.0 * s.values), path, i, N)
    cert_qv = Certificate.check(
        InequalityId.SHIFTED_QV,
        lhs=root_qv_N - root_qv_prev,
        rhs=2.0 * cfg.alpha * stats.max_at(N) + traded_f,
        tolerance=tolerance,
    )
    cert_max = Certificate.check(
        InequalityId.SHIFTED_MAX,
        lhs=stats.max_at(N) - stats.max_at(i - 1),
        rhs=cfg.beta * root_qv_N + traded_g,
        tolerance=tolerance,
    )
    return cert_qv, cert_max


# ---------------------------------------------------------------------------
# Pathwise Garsia-Neveu lemma.
# ---------------------------------------------------------------------------


class PremiseViolation(ValueError):
    """The linear increment premise fails at some origin index."""

    def __init__(self, index: int, gap: float):
        self.index = index
        self.gap = gap
        super().__init__(
            f"premise a_n - a_(i-1) <= c_n + (h^(i).x)_i^n fails worst at i={index} "
            f"(gap {gap:.6g} beyond tolerance)"
        )


@dataclass(frozen=True, eq=False)
class GnInstance:
    """Data of one power-lift instance.

    a_0..a_n nondecreasing and nonnegative (a_{-1} = 0), a scalar bound
    c_n carried as the last entry of c, integrand family h[i] covering
    steps i..n-1 for i = 0..n-1, and the path x of length n+1.  The
    premise

        a_n - a_{i-1} <= c_n + (h^(i).x)_i^n     for 0 <= i <= n

    is verified at construction under the certificate tolerance policy;
    the worst offending origin is reported on failure.
    """

    p: float
    a: np.ndarray
    c: np.ndarray
    h: tuple[np.ndarray, ...]
    x: Path
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        p = float(self.p)
        if not (math.isfinite(p) and p > 1.0):
            raise ValueError(f"exponent p must be finite and > 1, got {self.p!r}")
        object.__setattr__(self, "p", p)
        a = np.array(self.a, dtype=float, copy=True)
        c = np.array(self.c, dtype=float, copy=True)
        n = self.x.last_index
        if a.ndim != 1 or a.size != n + 1 or not np.all(np.isfinite(a)):
            raise ValueError("a must be a finite sequence matching the path length")
        if a[0] < 0 or (a.size > 1 and np.any(np.diff(a) < 0)):
            raise ValueError("a must be nonnegative and nondecreasing")
        if c.ndim != 1 or c.size != n + 1 or not np.all(np.isfinite(c)):
            raise ValueError("c must be a finite sequence matching the path length")
        rows = []
        if len(self.h) != n:
            raise ValueError(f"integrand family must have {n} rows, got {len(self.h)}")
        for i, row in enumerate(self.h):
            arr = np.array(row, dtype=float, copy=True)
            if arr.ndim != 1 or arr.size != n - i or not np.all(np.isfinite(arr)):
                raise ValueError(f"integrand row {i} must be finite with {n - i} entries")
            arr.flags.writeable = False
            rows.append(arr)
        a.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "h", tuple(rows))
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        self._check_premise()

    def _check_premise(self) -> None:
        n = self.x.last_index
        cn = float(self.c[-1])
        an = float(self.a[-1])
        worst_gap = 0.0
        worst_i = -1
        for i in range(n + 1):
            traded = (
                integral(ShiftedStrategy(origin=i, values=self.h[i]), self.x, i, n)
                if i < n
                else 0.0
            )
            rhs = cn + traded
            prev = float(self.a[i - 1]) if i > 0 else 0.0
            gap = (an - prev) - rhs
            allowance = self.tolerance * tolerance_scale(rhs)
            if gap > allowance and gap > worst_gap:
                worst_gap = gap
                worst_i = i
        if worst_i >= 0:
            raise PremiseViolation(worst_i, worst_gap)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "a": [float(v) for v in self.a],
            "c": [float(v) for v in self.c],
            "h": [[float(v) for v in row] for row in self.h],
            "x": self.x.to_list(),
            "tolerance": self.tolerance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GnInstance":
        return cls(
            p=float(data["p"]),
            a=np.asarray(data["a"], dtype=float),
            c=np.asarray(data["c"], dtype=float),
            h=tuple(np.asarray(row, dtype=float) for row in data["h"]),
            x=Path(data["x"]),
            tolerance=float(data.get("tolerance", DEFAULT_TOLERANCE)),
        )


def gn_weights(inst: GnInstance) -> Strategy:
    """Aggregate integrand ``w_j = sum_{i<=j} p (a_i^(p-1) - a_{i-1}^(p-1)) h^(i)_j``."""
    n = inst.x.last_index
    w = np.zeros(n)
    prev_pow = 0.0
    for i in range(n):
        cur_pow = _pow_nonneg(float(inst.a[i]), inst.p - 1.0)
        w[i:] += inst.p * (cur_pow - prev_pow) * inst.h[i]
        prev_pow = cur_pow
    return Strategy(w)


def certify_gn(
    inst: GnInstance, tolerance: float = DEFAULT_TOLERANCE
) -> tuple[Certificate, Certificate]:
    """Certify the two lifted bounds of a premise-checked instance.

        a_n^p <= p c_n a_n^(p-1) + (w.x)_n
        a_n^p <= (p-1)^(p-1) c_n^p + p (w.x)_n

    Both hold whenever the construction premise does; the second follows
    from the first through Young's inequality, so it shares the traded
    term up to the factor p.
    """
    w = gn_weights(inst)
    traded = integral(w, inst.x)
    an = float(inst.a[-1])
    cn = float(inst.c[-1])
    p = inst.p
    lhs = _pow_nonneg(an, p)
    cert_linear = Certificate.check(
        InequalityId.GN_LINEAR,
        lhs=lhs,
        rhs=p * cn * _pow_nonneg(an, p - 1.0) + traded,
        tolerance=tolerance,
    )
    cert_power = Certificate.check(
        InequalityId.GN_POWER,
        lhs=lhs,
        rhs=_pow_nonneg(p - 1.0, p - 1.0) * _pow_nonneg(cn, p) + p * traded,
        tolerance=tolerance,
    )
    return cert_linear, cert_power


# ---------------------------------------------------------------------------
# Explicit p-th power certificates.
# ---------------------------------------------------------------------------


def bdg_constant(p: float, allow_large_p: bool = False) -> float:
    """The certificate constant ``c_p = 6^p (p-1)^(p-1)`` for p > 1.

    Exact at integer p (c_2 = 36, c_3 = 864); the limit for p -> 1+ is 6,
    but p = 1 itself is the Davis regime and not a legal input here.
    """
    p = _validate_p(p, allow_large_p)
    return 6.0**p * (p - 1.0) ** (p - 1.0)


def _integrand_rows(x: np.ndarray):
    """Yield (i, f^(i)_{i..N-1}) rows of the triangular integrand table.

    For short paths the whole table is built with masked row-wise
    accumulations (bit-identical to the per-origin kernel, which remains
    the fallback for long paths).
    """
    N = x.size - 1
    if N <= 0:
        return
    t = sq_increments(x)
    if x.size > _TABLE_MAX_LEN:
        for i in range(N):
            yield i, _shifted_values(x, t, i)
        return
    xm1 = np.concatenate(([0.0], x[:-1]))
    below = np.tril(np.ones((N + 1, N + 1), dtype=bool), k=-1)  # entries k < i
    Y = x[None, :] - xm1[:, None]
    T = np.tile(t, (N + 1, 1))
    T[below] = 0.0
    S = np.add.accumulate(T, axis=1)
    Z = Y * Y
    Z[below] = -np.inf
    M = np.maximum.accumulate(Z, axis=1)
    denom = np.zeros_like(Y)
    np.sqrt(S + M, out=denom, where=~below)
    F = np.zeros_like(Y)
    np.divide(Y, denom, out=F, where=(denom > 0) & ~below)
    for i in range(N):
        yield i, F[i, i:N]


def bdg_strategies(
    path: Path, p: float, allow_large_p: bool = False
) -> tuple[Strategy, Strategy]:
    """The two aggregated integrands behind the p-th power certificates.

        h_n = sum_{i<=n} p^2 (sqrt([x]_i)^(p-1) - sqrt([x]_{i-1})^(p-1)) f^(i)_n
        g_n = sum_{i<=n} p^2 ((x*_i)^(p-1)      - (x*_{i-1})^(p-1))      f^(i)_n

    Direct triangular summation, O(N^2); the inner maxima are maintained
    incrementally per origin, and each h_n accumulates its origins in
    ascending order.
    """
    p = _validate_p(p, allow_large_p)
    N = path.last_index
    if N == 0:
        empty = np.zeros(0)
        return Strategy(empty), Strategy(empty)
    stats = compute_stats(path)
    pow_qv = _pow_nonneg_arr(np.sqrt(stats.quad_var), p - 1.0)
    pow_max = _pow_nonneg_arr(stats.running_max, p - 1.0)
    p2 = p * p
    w_qv = p2 * np.diff(np.concatenate(([0.0], pow_qv)))
    w_max = p2 * np.diff(np.concatenate(([0.0], pow_max)))
    h = np.zeros(N)
    g = np.zeros(N)
    for i, row in _integrand_rows(path.values):
        h[i:] += w_qv[i] * row
        g[i:] += w_max[i] * row
    return Strategy(h), Strategy(g)


def certify_bdg(
    path: Path,
    p: float,
    tolerance: float = DEFAULT_TOLERANCE,
    allow_large_p: bool = False,
) -> tuple[Certificate, Certificate]:
    """Certify both p-th power bounds with constant c_p on one path.

        [x]_N^(p/2) <= c_p (x*_N)^p - (h.x)_N
        (x*_N)^p    <= c_p [x]_N^(p/2) + 2 (g.x)_N
    """
    p = _validate_p(p, allow_large_p)
    h, g = bdg_strategies(path, p, allow_large_p)
    stats = compute_stats(path)
    N = path.last_index
    cp = bdg_constant(p, allow_large_p)
    qv_pow = stats.qv_at(N) ** (p / 2.0)
    max_pow = stats.max_at(N) ** p
    cert_qv = Certificate.check(
        InequalityId.BDG_QV_BOUND,
        lhs=qv_pow,
        rhs=cp * max_pow - integral(h, path),
        tolerance=tolerance,
    )
    cert_max = Certificate.check(
        InequalityId.BDG_MAX_BOUND,
        lhs=max_pow,
        rhs=cp * qv_pow + 2.0 * integral(g, path),
        tolerance=tolerance,
    )
    return cert_qv, cert_max
