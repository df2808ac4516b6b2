"""Parametric input transforms and seeded families of them.

Every concrete transform clips its output into the [0, 1] input box, so
applying a sampled transform to an admissible point always yields an
admissible point. Transforms expose a vector-Jacobian product so
gradients can flow through them during expectation-based attacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Rng, as_vec

BOX_LO = 0.0
BOX_HI = 1.0

TRANSFORM_KINDS = ("identity", "brightness", "noise", "shift")


@dataclass(frozen=True, eq=False)
class SampledTransform:
    """One concrete transform t(x) = clip(linear-map(x)).

    kind "identity":   t(x) = x
    kind "brightness": t(x) = clip(gamma * x)
    kind "noise":      t(x) = clip(x + offset)
    kind "shift":      t(x) = clip(roll(x, k))
    """

    kind: str
    gamma: float = 1.0
    offset: np.ndarray | None = None
    shift: int = 0

    def apply(self, x) -> np.ndarray:
        x = as_vec(x)
        if self.kind == "identity":
            return x.copy()
        if self.kind == "brightness":
            raw = self.gamma * x
        elif self.kind == "noise":
            raw = x + as_vec(self.offset, dim=x.size)
        elif self.kind == "shift":
            raw = np.roll(x, self.shift)
        else:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        return np.clip(raw, BOX_LO, BOX_HI)

    def vjp(self, x, g) -> np.ndarray:
        """J(x)^T g where J is the transform Jacobian at x.

        Clipped coordinates get derivative 0 (same convention as ReLU
        at its kink).
        """
        x = as_vec(x)
        g = as_vec(g, dim=x.size)
        if self.kind == "identity":
            return g.copy()
        if self.kind == "brightness":
            raw = self.gamma * x
            mask = (raw > BOX_LO) & (raw < BOX_HI)
            return self.gamma * (g * mask)
        if self.kind == "noise":
            raw = x + as_vec(self.offset, dim=x.size)
            mask = (raw > BOX_LO) & (raw < BOX_HI)
            return g * mask
        if self.kind == "shift":
            raw = np.roll(x, self.shift)
            mask = (raw > BOX_LO) & (raw < BOX_HI)
            return np.roll(g * mask, -self.shift)
        raise ValueError(f"unknown transform kind {self.kind!r}")


@dataclass(frozen=True)
class TransformKind:
    """Parameter distribution for one transform kind.

    brightness: gamma ~ Uniform[lo, hi]
    noise:      offset ~ Uniform[-magnitude, magnitude]^d
    shift:      k ~ Uniform{-max_shift, ..., max_shift}
    identity:   no parameters
    """

    kind: str
    lo: float = 1.0
    hi: float = 1.0
    magnitude: float = 0.0
    max_shift: int = 0

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind == "brightness" and self.lo > self.hi:
            raise ValueError("brightness range requires lo <= hi")


@dataclass(frozen=True)
class TransformFamily:
    """A distribution over transforms: kinds, sample count, and seed.

    `sample(dim)` returns a fixed list of concrete transforms; the same
    (kinds, samples, seed) always yields the same list.
    """

    kinds: tuple[TransformKind, ...]
    samples: int = 64
    seed: int = 0

    def __post_init__(self):
        if not self.kinds:
            raise ValueError("transform family needs at least one kind")
        if self.samples < 1:
            raise ValueError("sample count must be >= 1")

    def sample(self, dim: int) -> list[SampledTransform]:
        rng = Rng(self.seed)
        out: list[SampledTransform] = []
        for _ in range(self.samples):
            idx = int(rng.integers(0, len(self.kinds))) if len(self.kinds) > 1 else 0
            spec = self.kinds[idx]
            if spec.kind == "identity":
                out.append(SampledTransform("identity"))
            elif spec.kind == "brightness":
                out.append(
                    SampledTransform("brightness", gamma=float(rng.uniform(spec.lo, spec.hi)))
                )
            elif spec.kind == "noise":
                out.append(
                    SampledTransform(
                        "noise",
                        offset=rng.uniform(-spec.magnitude, spec.magnitude, size=dim),
                    )
                )
            elif spec.kind == "shift":
                k = int(rng.integers(-spec.max_shift, spec.max_shift + 1))
                out.append(SampledTransform("shift", shift=k))
        return out


def identity_family(samples: int = 1, seed: int = 0) -> TransformFamily:
    return TransformFamily(kinds=(TransformKind("identity"),), samples=samples, seed=seed)
