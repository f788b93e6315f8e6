"""Path functionals shared by the whole package.

A path is a finite real sequence ``x_0, ..., x_N`` (``N >= 0``).  Three
derived objects drive everything else:

* running maximum:      ``x*_n = max_{k<=n} |x_k|``
* quadratic variation:  ``[x]_n = x_0^2 + sum_{k<n} (x_{k+1} - x_k)^2``
* discrete integral:    ``(h.x)_i^n = sum_{j=i}^{n-1} h_j (x_{j+1} - x_j)``

Two conventions hold package-wide: every indexed sequence (path values,
running maximum, quadratic variation) is 0 at index -1, and 0/0 = 0
wherever a strategy denominator vanishes.  All arithmetic is IEEE double;
accumulations run strictly left to right so that results match a naive
definitional re-computation to within a few ulps.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Path",
    "PathStats",
    "Strategy",
    "compute_stats",
    "integral",
    "scale_path",
    "path_from_csv",
    "path_from_json",
    "read_path_file",
]


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values (no NaN or infinities)")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Path:
    """Immutable finite real path ``x_0..x_N`` (at least one point)."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, "path values")
        if arr.size < 1:
            raise ValueError("a path needs at least one point")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    @property
    def last_index(self) -> int:
        """N, the final time index."""
        return self.values.size - 1

    def value_at(self, k: int) -> float:
        """``x_k`` with the convention ``x_{-1} = 0``."""
        if k == -1:
            return 0.0
        if not 0 <= k <= self.last_index:
            raise IndexError(f"path index {k} out of range [-1, {self.last_index}]")
        return float(self.values[k])

    def to_list(self) -> list[float]:
        return [float(v) for v in self.values]


@dataclass(frozen=True, eq=False)
class PathStats:
    """Running maximum and quadratic variation sequences of one path."""

    running_max: np.ndarray
    quad_var: np.ndarray

    def __post_init__(self):
        rm = _frozen_array(self.running_max, "running_max")
        qv = _frozen_array(self.quad_var, "quad_var")
        if rm.size != qv.size or rm.size < 1:
            raise ValueError("running_max and quad_var must have equal positive length")
        object.__setattr__(self, "running_max", rm)
        object.__setattr__(self, "quad_var", qv)

    @property
    def last_index(self) -> int:
        return self.running_max.size - 1

    def max_at(self, n: int) -> float:
        """``x*_n`` with ``x*_{-1} = 0``."""
        if n == -1:
            return 0.0
        if not 0 <= n <= self.last_index:
            raise IndexError(f"stats index {n} out of range [-1, {self.last_index}]")
        return float(self.running_max[n])

    def qv_at(self, n: int) -> float:
        """``[x]_n`` with ``[x]_{-1} = 0``."""
        if n == -1:
            return 0.0
        if not 0 <= n <= self.last_index:
            raise IndexError(f"stats index {n} out of range [-1, {self.last_index}]")
        return float(self.quad_var[n])


@dataclass(frozen=True, eq=False)
class Strategy:
    """Integrand ``h_0..h_{N-1}``; ``h_n`` is the position held over the step n -> n+1.

    A strategy for a path of N+1 points has N entries (none for a
    single-point path).  The index origin is 0; shifted integrands carry
    their own origin (see :mod:`pathineq.bdg`).
    """

    values: np.ndarray

    origin: int = 0

    def __post_init__(self):
        arr = _frozen_array(self.values, "strategy values")
        object.__setattr__(self, "values", arr)
        if self.origin != 0:
            raise ValueError("Strategy origin is fixed at 0; use ShiftedStrategy for i > 0")

    def __len__(self) -> int:
        return self.values.size


def compute_stats(path: Path) -> PathStats:
    """Running maximum and quadratic variation, one streaming sweep each.

    ``running_max[n] = max(|x_0|, ..., |x_n|)`` and
    ``quad_var[n] = x_0^2 + sum_{k<n} (x_{k+1} - x_k)^2``; both are
    nondecreasing in n.
    """
    x = path.values
    running_max = np.maximum.accumulate(np.abs(x))
    quad_var = np.add.accumulate(sq_increments(x))
    return PathStats(running_max=running_max, quad_var=quad_var)


def sq_increments(x: np.ndarray) -> np.ndarray:
    """Terms ``t_k = (x_k - x_{k-1})^2`` with ``x_{-1} = 0`` (so ``t_0 = x_0^2``).

    Partial sums of ``t`` give the quadratic variation; tail sums give
    differences ``[x]_n - [x]_{i-1}`` without subtracting large prefixes.
    """
    t = np.empty_like(x)
    t[0] = x[0] * x[0]
    if x.size > 1:
        d = np.diff(x)
        t[1:] = d * d
    return t


def integral(h, path: Path, i: int = 0, n: int | None = None) -> float:
    """Discrete integral ``(h.x)_i^n = sum_{j=i}^{n-1} h_j (x_{j+1} - x_j)``.

    Empty ranges (``i == n``) integrate to 0.  ``h`` may be a
    :class:`Strategy` or any object with ``values`` and an integer
    ``origin`` attribute; its entries must cover indices ``i..n-1``.
    The sum accumulates strictly left to right.
    """
    N = path.last_index
    if n is None:
        n = N
    if not 0 <= i <= n <= N:
        raise IndexError(f"integral range [{i}, {n}] invalid for a path with last index {N}")
    if i == n:
        return 0.0
    origin = getattr(h, "origin", 0)
    vals = h.values
    lo, hi = i - origin, n - origin
    if lo < 0 or hi > vals.size:
        raise IndexError(
            f"strategy (origin {origin}, {vals.size} entries) does not cover indices {i}..{n - 1}"
        )
    terms = vals[lo:hi] * np.diff(path.values[i : n + 1])
    return float(np.add.accumulate(terms)[-1])


def scale_path(path: Path, lam: float) -> Path:
    """Componentwise scaling ``x -> lam * x`` for ``lam > 0``."""
    if not (isinstance(lam, (int, float)) and math.isfinite(lam) and lam > 0):
        raise ValueError(f"scale factor must be a finite positive real, got {lam!r}")
    return Path(path.values * float(lam))


# ---------------------------------------------------------------------------
# Path file formats: CSV (one real per line, comma-separated fields allowed)
# and JSON (flat array of numbers).  Both reject NaN and infinities.
# ---------------------------------------------------------------------------


def path_from_csv(text: str) -> Path:
    values: list[float] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        for token in line.split(","):
            token = token.strip()
            if not token:
                raise ValueError(f"empty field on line {lineno}")
            try:
                v = float(token)
            except ValueError as exc:
                raise ValueError(f"cannot parse {token!r} on line {lineno}") from exc
            if not math.isfinite(v):
                raise ValueError(f"non-finite value {token!r} on line {lineno}")
            values.append(v)
    if not values:
        raise ValueError("path file contains no values")
    return Path(values)


def _reject_constant(token: str) -> float:
    raise ValueError(f"non-finite JSON constant {token!r} is not a valid path entry")


def path_from_json(text: str) -> Path:
    data = json.loads(text, parse_constant=_reject_constant)
    if not isinstance(data, list) or not data:
        raise ValueError("JSON path must be a non-empty flat array of numbers")
    values: list[float] = []
    for entry in data:
        if isinstance(entry, bool) or not isinstance(entry, (int, float)):
            raise ValueError(f"JSON path entries must be numbers, got {entry!r}")
        values.append(float(entry))
    return Path(values)


def read_path_file(filename: str | os.PathLike) -> Path:
    """Load a path from a CSV or JSON file (dispatch on extension, then content)."""
    with open(filename, "r", encoding="utf-8") as fh:
        text = fh.read()
    name = str(filename).lower()
    if name.endswith(".json") or text.lstrip().startswith("["):
        return path_from_json(text)
    return path_from_csv(text)
