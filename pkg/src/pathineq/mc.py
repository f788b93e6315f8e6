"""Monte Carlo verification of the probabilistic consequences.

The pathwise certificates hold for every path, so their expectation
forms can only fail through the traded term.  For any martingale the
traded term has mean zero (bounded predictable integrand against
martingale increments), which this module checks statistically, along
with the moment bounds themselves and an adversarial tightness search
over deterministic paths.

Reproducibility contract: sampling uses the Philox counter-based
generator keyed per sample with (seed, sample index), so sample k
depends only on (seed, k) and never on batching or scheduling.  Sample
aggregation uses numpy's pairwise reduction over the full sample vector,
which is deterministic for a fixed sample count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .certificates import DEFAULT_TOLERANCE, Certificate, InequalityId
from .davis import certify_davis, certify_davis_sharp
from .bdg import bdg_constant, certify_bdg
from .paths import Path
from .rng import keyed_rng, validate_seed as _validate_seed

__all__ = [
    "Generator",
    "McReport",
    "ScanResult",
    "CounterexampleFound",
    "SCANNABLE_INEQUALITIES",
    "keyed_rng",
    "sample_paths",
    "sample_matrix",
    "verify_zero_integral",
    "empirical_bdg_ratio",
    "bdg_bound_check",
    "scan_tightness",
]


@dataclass(frozen=True)
class Generator:
    """Menu of discrete-time martingale laws.

    kind is one of "srw" (fair +-1 steps), "gaussian_walk" (increments
    sigma * N(0,1)), "rademacher_scaled" (increment eps_k * sigma_k with
    sigma_k = 1 + min(1, |x_k|), a bounded adapted scale, eps_k fair
    signs), or "bm_discrete" (increments sqrt(T/N) * N(0,1) on a uniform
    grid over [0, T]).  Every kind has conditionally sign-symmetric
    increments given the past, hence conditional increment mean zero.
    """

    kind: str
    sigma: float = 1.0
    horizon: float = 1.0
    x0: float = 0.0

    _KINDS = ("srw", "gaussian_walk", "rademacher_scaled", "bm_discrete")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; choose from {self._KINDS}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be finite and nonnegative, got {self.sigma!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be finite and positive, got {self.horizon!r}")
        if not math.isfinite(self.x0):
            raise ValueError(f"x0 must be finite, got {self.x0!r}")

    @classmethod
    def srw(cls, x0: float = 0.0) -> "Generator":
        return cls(kind="srw", x0=x0)

    @classmethod
    def gaussian_walk(cls, sigma: float = 1.0, x0: float = 0.0) -> "Generator":
        return cls(kind="gaussian_walk", sigma=sigma, x0=x0)

    @classmethod
    def rademacher_scaled(cls, x0: float = 0.0) -> "Generator":
        return cls(kind="rademacher_scaled", x0=x0)

    @classmethod
    def bm_discrete(cls, horizon: float = 1.0) -> "Generator":
        return cls(kind="bm_discrete", horizon=horizon, x0=0.0)

    def label(self) -> str:
        if self.kind == "gaussian_walk":
            return f"gaussian_walk(sigma={self.sigma:g})"
        if self.kind == "bm_discrete":
            return f"bm_discrete(T={self.horizon:g})"
        return self.kind

    def _draws(self, rng: np.random.Generator, length: int) -> np.ndarray:
        """Raw per-step randomness for one sample (length N array)."""
        if self.kind == "srw" or self.kind == "rademacher_scaled":
            return rng.integers(0, 2, size=length).astype(float) * 2.0 - 1.0
        if self.kind == "gaussian_walk":
            return self.sigma * rng.standard_normal(length)
        # bm_discrete
        dt = self.horizon / length if length else 0.0
        return math.sqrt(dt) * rng.standard_normal(length)

    def _assemble(self, draws: np.ndarray) -> np.ndarray:
        """Paths from raw draws; draws has shape (count, N)."""
        count, length = draws.shape
        out = np.empty((count, length + 1))
        out[:, 0] = self.x0
        if self.kind == "rademacher_scaled":
            for k in range(length):
                cur = out[:, k]
                out[:, k + 1] = cur + draws[:, k] * (1.0 + np.minimum(1.0, np.abs(cur)))
        elif length:
            np.add.accumulate(draws, axis=1, out=draws)
            out[:, 1:] = self.x0 + draws
        return out


def sample_matrix(gen: Generator, length: int, count: int, seed: int) -> np.ndarray:
    """(count, length+1) matrix of sample paths; row k depends only on (seed, k)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count!r}")
    if length < 0:
        raise ValueError(f"path length must be >= 0, got {length!r}")
    seed = _validate_seed(seed)
    draws = np.empty((count, length))
    for k in range(count):
        draws[k] = gen._draws(keyed_rng(seed, k), length)
    return gen._assemble(draws)


def sample_paths(gen: Generator, length: int, count: int, seed: int):
    """Stream of :class:`Path` samples, identical to the rows of sample_matrix."""
    for k in range(count):
        draws = gen._draws(keyed_rng(_validate_seed(seed), k), length)
        yield Path(gen._assemble(draws[None, :])[0])


# ---------------------------------------------------------------------------
# Reports.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class McReport:
    """One Monte Carlo estimate with its sampling pedigree."""

    generator: str
    length: int
    samples: int
    estimate: float
    std_error: float
    seed: int
    elapsed: float
    passed: bool | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_elapsed: bool = True) -> dict:
        out = {
            "generator": self.generator,
            "length": self.length,
            "samples": self.samples,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "seed": self.seed,
        }
        if include_elapsed:
            out["elapsed"] = self.elapsed
        if self.passed is not None:
            out["passed"] = self.passed
        if self.extra:
            out["extra"] = dict(self.extra)
        return out


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    est = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(values.size))
    return est, se


def _stats2d(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Running max and quadratic variation along axis 1 (rows are paths)."""
    running_max = np.maximum.accumulate(np.abs(X), axis=1)
    t = np.empty_like(X)
    t[:, 0] = X[:, 0] * X[:, 0]
    if X.shape[1] > 1:
        d = np.diff(X, axis=1)
        t[:, 1:] = d * d
    quad_var = np.add.accumulate(t, axis=1)
    return running_max, quad_var


def _davis2d(X: np.ndarray, running_max: np.ndarray, quad_var: np.ndarray) -> np.ndarray:
    N = X.shape[1] - 1
    denom = np.sqrt(quad_var[:, :N] + running_max[:, :N] * running_max[:, :N])
    H = np.zeros((X.shape[0], N))
    np.divide(X[:, :N], denom, out=H, where=denom > 0)
    return H


def _integral2d(H: np.ndarray, X: np.ndarray) -> np.ndarray:
    if H.shape[1] == 0:
        return np.zeros(H.shape[0])
    terms = H * np.diff(X, axis=1)
    return np.add.accumulate(terms, axis=1)[:, -1]


def verify_zero_integral(gen: Generator, length: int, count: int, seed: int) -> McReport:
    """Sample mean of the traded term under the bounded strategy.

    The integrand is the Davis strategy evaluated path by path; for any
    of the menu martingales the exact mean is 0, so the report passes
    when |estimate| <= 3 standard errors.
    """
    if count < 2:
        raise ValueError("need at least 2 samples for a standard error")
    t0 = time.perf_counter()
    X = sample_matrix(gen, length, count, seed)
    running_max, quad_var = _stats2d(X)
    traded = _integral2d(_davis2d(X, running_max, quad_var), X)
    estimate, std_error = _mean_se(traded)
    return McReport(
        generator=gen.label(),
        length=length,
        samples=count,
        estimate=estimate,
        std_error=std_error,
        seed=int(seed),
        elapsed=time.perf_counter() - t0,
        passed=bool(abs(estimate) <= 3.0 * std_error),
    )


def empirical_bdg_ratio(
    gen: Generator, length: int, count: int, p: float, seed: int
) -> tuple[McReport, McReport]:
    """Estimates of E[[X]_N^(p/2)] and E[(X*_N)^p] with standard errors.

    p >= 1; p = 1 is the Davis regime (constants 3 and 6), p > 1 the
    power regime (constant c_p both ways).  Use :func:`bdg_bound_check`
    to compare the two reports against those constants.
    """
    if not (math.isfinite(p) and p >= 1.0):
        raise ValueError(f"moment exponent must satisfy p >= 1, got {p!r}")
    if count < 2:
        raise ValueError("need at least 2 samples for a standard error")
    t0 = time.perf_counter()
    X = sample_matrix(gen, length, count, seed)
    running_max, quad_var = _stats2d(X)
    qv_samples = quad_var[:, -1] ** (p / 2.0)
    max_samples = running_max[:, -1] ** p
    elapsed = time.perf_counter() - t0
    est_qv, se_qv = _mean_se(qv_samples)
    est_max, se_max = _mean_se(max_samples)
    common = dict(generator=gen.label(), length=length, samples=count, seed=int(seed))
    report_qv = McReport(
        estimate=est_qv,
        std_error=se_qv,
        elapsed=elapsed,
        extra={"moment": "quad_var^(p/2)", "p": p},
        **common,
    )
    report_max = McReport(
        estimate=est_max,
        std_error=se_max,
        elapsed=elapsed,
        extra={"moment": "running_max^p", "p": p},
        **common,
    )
    return report_qv, report_max


def bdg_bound_check(
    report_qv: McReport, report_max: McReport, p: float, z: float = 3.0
) -> tuple[bool, bool]:
    """Do the two moment estimates respect the certified constants within z SEs?"""
    if p == 1.0:
        a_p, b_p = 3.0, 6.0
    else:
        a_p = b_p = bdg_constant(p)
    m1, s1 = report_qv.estimate, report_qv.std_error
    m2, s2 = report_max.estimate, report_max.std_error
    ok_qv = m1 <= a_p * m2 + z * (s1 + a_p * s2)
    ok_max = m2 <= b_p * m1 + z * (s2 + b_p * s1)
    return bool(ok_qv), bool(ok_max)


# ---------------------------------------------------------------------------
# Adversarial tightness search.
# ---------------------------------------------------------------------------


SCANNABLE_INEQUALITIES = (
    InequalityId.DAVIS_QV_BOUND,
    InequalityId.DAVIS_MAX_BOUND,
    InequalityId.DAVIS_QV_SHARP,
    InequalityId.BDG_QV_BOUND,
    InequalityId.BDG_MAX_BOUND,
)

_SCAN_MAX_LEN = 64


class CounterexampleFound(RuntimeError):
    """A certified inequality failed on a scanned path.

    The certified inequalities are theorems, so this signals an
    implementation bug (or a broken tolerance), never a mathematical
    discovery.  The offending path and certificate ride along.
    """

    def __init__(self, certificate: Certificate, path: Path):
        self.certificate = certificate
        self.path = path
        super().__init__(
            f"{certificate.inequality_id.value} violated: lhs={certificate.lhs!r} "
            f"rhs={certificate.rhs!r} on path of length {len(path)}"
        )


@dataclass(frozen=True, eq=False)
class ScanResult:
    """Best tightness ratio found and the path achieving it."""

    inequality_id: InequalityId
    best_ratio: float
    argmax_path: Path
    iterations: int
    seed: int
    p: float | None = None

    def to_dict(self) -> dict:
        out = {
            "inequality_id": self.inequality_id.value,
            "best_ratio": self.best_ratio,
            "argmax_path": self.argmax_path.to_list(),
            "iterations": self.iterations,
            "seed": self.seed,
        }
        if self.p is not None:
            out["p"] = self.p
        return out


def _scan_certificate(
    inequality_id: InequalityId, path: Path, p: float | None, tolerance: float
) -> Certificate:
    if inequality_id is InequalityId.DAVIS_QV_BOUND:
        return certify_davis(path, tolerance)[0]
    if inequality_id is InequalityId.DAVIS_MAX_BOUND:
        return certify_davis(path, tolerance)[1]
    if inequality_id is InequalityId.DAVIS_QV_SHARP:
        return certify_davis_sharp(path, tolerance)
    if inequality_id is InequalityId.BDG_QV_BOUND:
        return certify_bdg(path, p, tolerance)[0]
    if inequality_id is InequalityId.BDG_MAX_BOUND:
        return certify_bdg(path, p, tolerance)[1]
    raise ValueError(f"{inequality_id} is not a scannable pathwise inequality")


def _evaluate(inequality_id, values: np.ndarray, p, tolerance) -> float:
    path = Path(values)
    cert = _scan_certificate(inequality_id, path, p, tolerance)
    if not cert.passed:
        raise CounterexampleFound(cert, path)
    return cert.tightness_ratio()


def _default_start(rng: np.random.Generator, restart: int) -> np.ndarray:
    if restart == 0:
        return np.array([1.0])
    length = int(rng.integers(1, 17))
    steps = rng.standard_normal(length - 1) if length > 1 else np.zeros(0)
    start = rng.standard_normal()
    return np.concatenate(([start], start + np.cumsum(steps)))


def _renormalized(values: np.ndarray) -> np.ndarray:
    peak = float(np.max(np.abs(values)))
    if peak > 0 and not 1e-3 <= peak <= 1e3:
        return values / peak
    return values


def scan_tightness(
    inequality_id: InequalityId,
    max_iters: int,
    seed: int,
    restarts: int = 4,
    p: float | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    start: Path | None = None,
) -> ScanResult:
    """Random-restart hill climb maximizing lhs/rhs of one certified inequality.

    Moves: Gaussian perturbation of a single coordinate with an adaptive
    step size, appending or removing a point (length capped at 64), and
    slack-homogeneity renormalization for conditioning.  Every candidate
    is certified; a failing certificate raises
    :class:`CounterexampleFound` instead of reporting a ratio above
    1 + tolerance.

    With max_iters = 0 the result is the best ratio over the start paths
    alone.  p is required for (and only for) the p > 1 inequalities.
    """
    if inequality_id not in SCANNABLE_INEQUALITIES:
        raise ValueError(f"{inequality_id} is not a scannable pathwise inequality")
    needs_p = inequality_id in (InequalityId.BDG_QV_BOUND, InequalityId.BDG_MAX_BOUND)
    if needs_p and p is None:
        raise ValueError(f"{inequality_id.value} requires an exponent p")
    if not needs_p and p is not None:
        raise ValueError(f"{inequality_id.value} does not take an exponent p")
    if max_iters < 0 or restarts < 1:
        raise ValueError("need max_iters >= 0 and restarts >= 1")
    seed = _validate_seed(seed)

    best_ratio = -math.inf
    best_values: np.ndarray | None = None
    iterations = 0
    share, remainder = divmod(max_iters, restarts)
    for restart in range(restarts):
        rng = keyed_rng(seed, restart)
        if start is not None:
            cur = np.array(start.values, dtype=float)
        else:
            cur = _default_start(rng, restart)
        cur_ratio = _evaluate(inequality_id, cur, p, tolerance)
        if cur_ratio > best_ratio:
            best_ratio, best_values = cur_ratio, cur.copy()
        sigma = 0.5
        budget = share + (1 if restart < remainder else 0)
        for _ in range(budget):
            cand = _renormalized(cur)
            scale = max(1.0, float(np.max(np.abs(cand))))
            move = rng.random()
            append_ok = cand.size < _SCAN_MAX_LEN
            if move < 0.70 or (0.70 <= move < 0.85 and not append_ok):
                cand = cand.copy()
                j = int(rng.integers(cand.size))
                cand[j] += sigma * scale * rng.standard_normal()
            elif move < 0.85:
                tail = cand[-1] + sigma * scale * rng.standard_normal()
                cand = np.append(cand, tail)
            elif cand.size > 1:
                j = int(rng.integers(cand.size))
                cand = np.delete(cand, j)
            else:
                cand = cand + sigma * scale * rng.standard_normal()
            iterations += 1
            ratio = _evaluate(inequality_id, cand, p, tolerance)
            if ratio > cur_ratio:
                cur, cur_ratio = cand, ratio
                sigma = min(sigma * 1.25, 4.0)
                if cur_ratio > best_ratio:
                    best_ratio, best_values = cur_ratio, cand.copy()
            else:
                sigma = max(sigma * 0.97, 1e-4)
    return ScanResult(
        inequality_id=inequality_id,
        best_ratio=float(best_ratio),
        argmax_path=Path(best_values),
        iterations=iterations,
        seed=seed,
        p=p,
    )
