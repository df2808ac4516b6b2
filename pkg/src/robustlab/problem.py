"""Robustness problems as first-class constraint triples.

A problem pins an anchor input x and three constraints on a candidate
x*: admissibility (x* in an allowed set), distance (a scalar gauge of
x* against x compared to a threshold alpha), and target behavior (what
the adversary must achieve, parametrized by beta). A problem also
carries a mode: decide feasibility, minimize alpha, or maximize beta.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import network as nn
from .errors import DimensionError, InvalidBoxError
from .tensor import NORM_KINDS, as_vec, norm
from .transforms import TransformFamily

# Coordinates matching within this tolerance count as the same point for
# finite-set membership.
MEMBERSHIP_EPS = 1e-12

Mode = str  # "decision" | "min-alpha" | "max-beta"
MODES = ("decision", "min-alpha", "max-beta")
RELATIONS = ("<=", ">=")


# ---------------------------------------------------------------------------
# Admissible sets


@dataclass(frozen=True)
class Box:
    """All points with every coordinate in [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise InvalidBoxError(
                f"box lower bound {self.lo} exceeds upper bound {self.hi}"
            )


@dataclass(frozen=True, eq=False)
class FiniteSet:
    """An explicit list of admissible points."""

    points: tuple[np.ndarray, ...]
    source: str | None = None  # file path this set was loaded from, if any

    def __post_init__(self):
        pts = tuple(as_vec(p) for p in self.points)
        if not pts:
            raise ValueError("finite admissible set must be nonempty")
        object.__setattr__(self, "points", pts)


@dataclass(eq=False)
class TransformOrbit:
    """Points produced by applying the family's transforms to a base input.

    Membership is producer-tagged: a candidate is admissible iff some
    producer registered it via `register`. Deciding orbit membership by
    inverting transforms is not attempted.
    """

    base: np.ndarray
    family: TransformFamily
    _produced: set[bytes] = field(default_factory=set)

    def __post_init__(self):
        self.base = as_vec(self.base)

    def register(self, point) -> np.ndarray:
        point = as_vec(point, dim=self.base.size)
        self._produced.add(point.tobytes())
        return point

    def contains(self, point) -> bool:
        point = as_vec(point, dim=self.base.size)
        return point.tobytes() in self._produced


AdmissibleSet = Box | FiniteSet | TransformOrbit


def check_admissible(adm: AdmissibleSet, cand) -> bool:
    cand = as_vec(cand)
    if isinstance(adm, Box):
        return bool(np.all(cand >= adm.lo) and np.all(cand <= adm.hi))
    if isinstance(adm, FiniteSet):
        dim = adm.points[0].size
        if cand.size != dim:
            raise DimensionError(f"candidate has length {cand.size}, set points {dim}")
        return any(np.all(np.abs(cand - p) <= MEMBERSHIP_EPS) for p in adm.points)
    if isinstance(adm, TransformOrbit):
        return adm.contains(cand)
    raise TypeError(f"unknown admissible set {type(adm).__name__}")


# ---------------------------------------------------------------------------
# Quantitative functions and the distance constraint


@dataclass(frozen=True)
class LpDistance:
    p: str  # one of NORM_KINDS

    def __post_init__(self):
        if self.p not in NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.p!r}")


@dataclass(frozen=True)
class ExpectedTransformedDistance:
    """Monte Carlo mean of d(t(cand), t(x)) over a seeded transform sample."""

    family: TransformFamily
    inner: str = "l2"

    def __post_init__(self):
        if self.inner not in NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.inner!r}")


@dataclass(frozen=True, eq=False)
class CustomDistance:
    """Named scalar function of (x, cand); must return a value >= 0."""

    name: str
    fn: object  # Callable[[np.ndarray, np.ndarray], float]


QuantFunction = LpDistance | ExpectedTransformedDistance | CustomDistance


def eval_mu(mu: QuantFunction, x, cand) -> float:
    x = as_vec(x)
    cand = as_vec(cand, dim=x.size)
    if isinstance(mu, LpDistance):
        return norm(cand - x, mu.p)
    if isinstance(mu, ExpectedTransformedDistance):
        transforms = mu.family.sample(x.size)
        vals = [norm(t.apply(cand) - t.apply(x), mu.inner) for t in transforms]
        return float(np.mean(vals))
    if isinstance(mu, CustomDistance):
        value = float(mu.fn(x, cand))  # type: ignore[operator]
        if value < 0:
            raise ValueError(f"custom distance {mu.name!r} returned negative value")
        return value
    raise TypeError(f"unknown quantitative function {type(mu).__name__}")


@dataclass(frozen=True)
class DistanceConstraint:
    mu: QuantFunction
    alpha: float
    relation: str = "<="  # "<=" or ">="

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}")
        if self.alpha < 0 and isinstance(self.mu, (LpDistance, ExpectedTransformedDistance)):
            raise ValueError("distance threshold alpha must be non-negative")


def check_distance(dc: DistanceConstraint, x, cand) -> bool:
    value = eval_mu(dc.mu, x, cand)
    # Thresholds are inclusive on both sides.
    return value <= dc.alpha if dc.relation == "<=" else value >= dc.alpha


# ---------------------------------------------------------------------------
# Target behavior


@dataclass(frozen=True)
class Targeted:
    """Candidate classified as y_target, which must differ from f(x)."""

    y_target: int


@dataclass(frozen=True)
class Untargeted:
    """Candidate label differs from the anchor's label."""


@dataclass(frozen=True)
class LossAtLeast:
    """loss(cand, f(x)-label) >= beta."""

    beta: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("loss threshold beta must be non-negative")


@dataclass(frozen=True)
class ExpectedTargetLogProbAtLeast:
    """Mean over sampled transforms of log P(y_target | t(cand)) >= beta."""

    y_target: int
    beta: float
    family: TransformFamily


@dataclass(frozen=True)
class CoverageAtLeast:
    """Hidden-unit coverage of the candidate alone >= beta."""

    beta: float
    threshold: float = 0.0


@dataclass(frozen=True)
class InvarianceViolation:
    """Witness against 'every nearby point keeps the anchor's label'."""


TargetBehavior = (
    Targeted
    | Untargeted
    | LossAtLeast
    | ExpectedTargetLogProbAtLeast
    | CoverageAtLeast
    | InvarianceViolation
)


def expected_target_log_prob(net: nn.Network, tb: ExpectedTargetLogProbAtLeast, cand) -> float:
    cand = as_vec(cand)
    transforms = tb.family.sample(cand.size)
    vals = []
    for t in transforms:
        p = nn.forward(net, t.apply(cand)).probabilities
        vals.append(np.log(max(p[tb.y_target], nn.PROB_FLOOR)))
    return float(np.mean(vals))


def check_target(net: nn.Network, tb: TargetBehavior, x, cand) -> bool:
    x = as_vec(x, dim=net.input_dim)
    cand = as_vec(cand, dim=net.input_dim)
    if isinstance(tb, Targeted):
        if not 0 <= tb.y_target < net.num_classes:
            raise ValueError(f"target class {tb.y_target} out of range")
        anchor_label = nn.forward(net, x).label
        if tb.y_target == anchor_label:
            return False
        return nn.forward(net, cand).label == tb.y_target
    if isinstance(tb, (Untargeted, InvarianceViolation)):
        return nn.forward(net, cand).label != nn.forward(net, x).label
    if isinstance(tb, LossAtLeast):
        anchor_label = nn.forward(net, x).label
        return nn.loss(net, cand, anchor_label) >= tb.beta
    if isinstance(tb, ExpectedTargetLogProbAtLeast):
        if not 0 <= tb.y_target < net.num_classes:
            raise ValueError(f"target class {tb.y_target} out of range")
        return expected_target_log_prob(net, tb, cand) >= tb.beta
    if isinstance(tb, CoverageAtLeast):
        return nn.neuron_coverage(net, [cand], tb.threshold) >= tb.beta
    raise TypeError(f"unknown target behavior {type(tb).__name__}")


# ---------------------------------------------------------------------------
# The problem triple and its evaluation


@dataclass(frozen=True, eq=False)
class RobustnessProblem:
    """Anchor input plus the three constraints and an optimization mode.

    `x` may be None for a problem template parsed from text; bind an
    anchor with `with_anchor` before evaluating candidates.
    """

    admissible: AdmissibleSet
    distance: DistanceConstraint
    target: TargetBehavior
    mode: Mode = "decision"
    x: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.x is not None:
            object.__setattr__(self, "x", as_vec(self.x))

    def with_anchor(self, x) -> "RobustnessProblem":
        return replace(self, x=as_vec(x))

    def with_alpha(self, alpha: float) -> "RobustnessProblem":
        return replace(self, distance=replace(self.distance, alpha=float(alpha)))

    def with_beta(self, beta: float) -> "RobustnessProblem":
        return replace(self, target=replace(self.target, beta=float(beta)))

    @property
    def anchor(self) -> np.ndarray:
        if self.x is None:
            raise ValueError("problem has no anchor input bound")
        return self.x


@dataclass(frozen=True)
class Verdict:
    """Outcome of checking one candidate against one problem."""

    admissible_ok: bool
    distance_ok: bool
    target_ok: bool
    mu_value: float

    @property
    def overall(self) -> bool:
        return self.admissible_ok and self.distance_ok and self.target_ok


def evaluate(problem: RobustnessProblem, net: nn.Network, cand) -> Verdict:
    """Check all three constraints; no short-circuiting, so the verdict is
    fully populated even when an early constraint fails."""
    x = problem.anchor
    cand = as_vec(cand, dim=x.size)
    admissible_ok = check_admissible(problem.admissible, cand)
    mu_value = eval_mu(problem.distance.mu, x, cand)
    if problem.distance.relation == "<=":
        distance_ok = mu_value <= problem.distance.alpha
    else:
        distance_ok = mu_value >= problem.distance.alpha
    target_ok = check_target(net, problem.target, x, cand)
    return Verdict(
        admissible_ok=admissible_ok,
        distance_ok=distance_ok,
        target_ok=target_ok,
        mu_value=mu_value,
    )
