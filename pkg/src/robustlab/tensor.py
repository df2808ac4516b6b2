"""Dense vector arithmetic, norms, projections, and seeded randomness.

All public operations work on 1-D float64 arrays and reject non-finite
values on the way in, so NaN/Inf cannot propagate silently into the
attack or certification code.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InvalidBoxError

# Entries with |v| <= L0_EPS count as zero for the L0 norm, so that
# floating-point noise does not inflate sparsity counts.
L0_EPS = 1e-12

NORM_KINDS = ("l0", "l1", "l2", "linf")


def as_vec(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-D float64 array, optionally checking length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {v.shape}")
    if v.size == 0:
        raise DimensionError("empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or Inf")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected vector of length {dim}, got {v.size}")
    return v


def as_mat(x, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce to a finite 2-D float64 array, optionally checking shape."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf")
    if rows is not None and m.shape[0] != rows:
        raise DimensionError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionError(f"expected {cols} cols, got {m.shape[1]}")
    return m


def norm(v, p: str) -> float:
    """p-norm of a vector; p is one of 'l0', 'l1', 'l2', 'linf'.

    'l0' counts entries with magnitude above L0_EPS.
    """
    v = as_vec(v)
    if p == "l0":
        return float(np.count_nonzero(np.abs(v) > L0_EPS))
    if p == "l1":
        return float(np.sum(np.abs(v)))
    if p == "l2":
        return float(np.sqrt(np.sum(v * v)))
    if p == "linf":
        return float(np.max(np.abs(v)))
    raise ValueError(f"unknown norm kind {p!r}; expected one of {NORM_KINDS}")


def project_box(x, lo: float, hi: float) -> np.ndarray:
    """Coordinatewise clamp of x into [lo, hi]. Idempotent."""
    if lo > hi:
        raise InvalidBoxError(f"box lower bound {lo} exceeds upper bound {hi}")
    return np.clip(as_vec(x), lo, hi)


def project_linf_ball(x, center, eps: float) -> np.ndarray:
    """Project x onto the L-inf ball of radius eps around center."""
    x = as_vec(x)
    center = as_vec(center, dim=x.size)
    if eps < 0:
        raise ValueError(f"negative ball radius {eps}")
    return center + np.clip(x - center, -eps, eps)


def snap_linf(x, center, eps: float) -> np.ndarray:
    """Nudge x so the measured distance of the stored doubles satisfies
    max|x_i - center_i| <= eps exactly.

    center + eps can round one ulp outward, so a freshly projected point
    may still measure as outside the closed ball; inclusive threshold
    checks need the stored values to pass, not the ideal reals.
    """
    out = np.minimum(np.maximum(as_vec(x), center - eps), center + eps)
    over = np.abs(out - center) > eps
    while np.any(over):
        out = np.where(over, np.nextafter(out, center), out)
        over = np.abs(out - center) > eps
    return out


class Rng:
    """Deterministic counter-based random generator (Philox).

    A fixed seed yields a bit-identical sample stream across runs and
    platforms. Instances are single-owner: hand them off, never share.
    ``derive`` produces an independent child stream, so components can
    split randomness without coordinating draw counts.
    """

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        self.seed = int(seed)
        self._spawn_key = _spawn_key
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=_spawn_key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def derive(self, tag: int) -> "Rng":
        """Independent child stream; same (seed, tag) -> same stream."""
        return Rng(self.seed, self._spawn_key + (int(tag),))

    def uniform(self, lo: float, hi: float, size: int | None = None):
        return self._gen.uniform(lo, hi, size=size)

    def normal(self, size: int | None = None, scale: float = 1.0):
        return self._gen.normal(0.0, scale, size=size)

    def integers(self, lo: int, hi: int, size: int | None = None):
        """Integers in [lo, hi)."""
        return self._gen.integers(lo, hi, size=size)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Rng(seed={self.seed}, spawn_key={self._spawn_key})"


def sample_uniform(rng: Rng, lo, hi) -> np.ndarray:
    """One point with each coordinate uniform in [lo_i, hi_i]."""
    lo = as_vec(lo)
    hi = as_vec(hi, dim=lo.size)
    if np.any(lo > hi):
        raise InvalidBoxError("sample_uniform requires lo <= hi coordinatewise")
    u = rng.uniform(0.0, 1.0, size=lo.size)
    return lo + u * (hi - lo)
