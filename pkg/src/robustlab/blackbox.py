"""Query-limited attacks: substitute training with gradient-guided
dataset augmentation, transfer of white-box attacks, and finite-difference
gradient estimation.

The attacked model sits behind QueryOracle, which meters every query and
exposes labels (always) and score vectors (only with score access). No
code in this module touches the hidden network's parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import network as nn
from .errors import CapabilityError
from .problem import (
    Box,
    DistanceConstraint,
    LpDistance,
    RobustnessProblem,
    Untargeted,
    Verdict,
    check_admissible,
)
from .tensor import Rng, as_vec, norm, project_box, snap_linf
from .whitebox import AttackBudget, AttackResult, fgsm, pgd

LABEL_ONLY = "label-only"
SCORE_ACCESS = "score-access"
ORACLE_MODES = (LABEL_ONLY, SCORE_ACCESS)

DEFAULT_LAMBDA = 0.1
DEFAULT_FD_H = 1e-4


class QueryOracle:
    """Metered front for a hidden classifier.

    The wrapped network is captured in closures only; the oracle's public
    surface is label(), scores(), and counters.
    """

    def __init__(self, net: nn.Network, mode: str = LABEL_ONLY):
        if mode not in ORACLE_MODES:
            raise ValueError(f"mode must be one of {ORACLE_MODES}")
        self._mode = mode
        self._count = 0
        self._input_dim = net.input_dim
        self._num_classes = net.num_classes

        def predict(z) -> nn.Prediction:
            return nn.forward(net, as_vec(z, dim=net.input_dim))

        self._predict = predict

    @property
    def mode(self) -> str:
        return self._mode

    @property
    def query_count(self) -> int:
        return self._count

    @property
    def input_dim(self) -> int:
        return self._input_dim

    @property
    def num_classes(self) -> int:
        return self._num_classes

    def label(self, x) -> int:
        self._count += 1
        return self._predict(x).label

    def scores(self, x) -> np.ndarray:
        if self._mode != SCORE_ACCESS:
            raise CapabilityError("oracle grants labels only, not scores")
        self._count += 1
        return self._predict(x).probabilities


@dataclass(frozen=True)
class SubstituteConfig:
    """Augmentation rounds plus the substitute's architecture and trainer."""

    rounds: int = 3
    lam: float = DEFAULT_LAMBDA
    hidden: tuple[int, ...] = (16,)
    activation: str = "relu"
    epochs: int = 200
    learning_rate: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if self.lam <= 0:
            raise ValueError("lambda step must be positive")


@dataclass(frozen=True)
class TransferReport:
    substitute_fooled: bool
    target_fooled: bool
    transferred: bool
    queries_used: int

    def __post_init__(self):
        if self.transferred != (self.substitute_fooled and self.target_fooled):
            raise ValueError("transferred must equal substitute_fooled and target_fooled")


def train_substitute(
    oracle: QueryOracle, seeds, cfg: SubstituteConfig = SubstituteConfig()
) -> tuple[nn.Network, int]:
    """Grow a labeled set by querying the oracle and stepping along the
    substitute's own gradient signs; retrain from scratch each round.

    Round k labels the points added in round k-1, so the set doubles each
    round and queries_used sums the newly labeled counts.
    """
    points = [as_vec(s, dim=oracle.input_dim) for s in seeds]
    if not points:
        raise ValueError("seed set must be nonempty")
    root = Rng(cfg.seed)
    labels: list[int] = []
    queries = 0
    f_sub: nn.Network | None = None
    for round_idx in range(cfg.rounds):
        new_points = points[len(labels):]
        labels.extend(oracle.label(p) for p in new_points)
        queries += len(new_points)
        data = nn.LabeledDataset(inputs=tuple(points), labels=tuple(labels))
        f_sub = nn.init_network(
            oracle.input_dim,
            cfg.hidden,
            oracle.num_classes,
            rng=root.derive(round_idx),
            activation=cfg.activation,
        )
        f_sub = nn.train(f_sub, data, epochs=cfg.epochs, learning_rate=cfg.learning_rate)
        if round_idx + 1 < cfg.rounds:
            augmented = [
                project_box(
                    p + cfg.lam * np.sign(nn.grad_logit(f_sub, p, y)), 0.0, 1.0
                )
                for p, y in zip(points, labels)
            ]
            points.extend(augmented)
    return f_sub, queries


def transfer_attack(
    oracle: QueryOracle,
    f_sub: nn.Network,
    x,
    attack: str = "fgsm",
    budget: AttackBudget = AttackBudget(eps=0.1),
    rng: Rng | None = None,
) -> tuple[AttackResult, TransferReport]:
    """Craft an adversary on the substitute, then spend two oracle queries
    to see whether it carries over."""
    x = as_vec(x, dim=oracle.input_dim)
    if f_sub.input_dim != oracle.input_dim:
        raise ValueError(
            f"substitute input dim {f_sub.input_dim} != oracle dim {oracle.input_dim}"
        )
    sub_label = nn.forward(f_sub, x).label
    if attack == "fgsm":
        result = fgsm(f_sub, x, sub_label, budget.eps)
    elif attack == "pgd":
        result = pgd(f_sub, x, sub_label, budget, rng=rng if rng is not None else Rng(0))
    else:
        raise ValueError(f"transfer attack must be 'fgsm' or 'pgd', got {attack!r}")
    before = oracle.label(x)
    after = oracle.label(result.x_star)
    substitute_fooled = nn.forward(f_sub, result.x_star).label != sub_label
    target_fooled = after != before
    report = TransferReport(
        substitute_fooled=substitute_fooled,
        target_fooled=target_fooled,
        transferred=substitute_fooled and target_fooled,
        queries_used=2,
    )
    return result, report


def _score_loss(oracle: QueryOracle, x, y: int) -> float:
    p = oracle.scores(x)
    return -math.log(max(float(p[y]), nn.PROB_FLOOR))


def fd_gradient(oracle: QueryOracle, x, y: int, h: float = DEFAULT_FD_H) -> np.ndarray:
    """Central-difference estimate of the loss gradient from score queries;
    costs exactly 2 * dim queries."""
    x = as_vec(x, dim=oracle.input_dim)
    if h <= 0:
        raise ValueError("step h must be positive")
    if not 0 <= y < oracle.num_classes:
        raise ValueError(f"class {y} out of range")
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (_score_loss(oracle, x + e, y) - _score_loss(oracle, x - e, y)) / (2.0 * h)
    return g


def fd_attack(
    oracle: QueryOracle, x, y: int, eps: float, h: float = DEFAULT_FD_H
) -> AttackResult:
    """Signed step along the estimated gradient; 2 * dim + 2 queries total.

    The verdict is assembled from oracle answers (score argmax before and
    after), since the true network is not available for a white-box check.
    """
    x = as_vec(x, dim=oracle.input_dim)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    g = fd_gradient(oracle, x, y, h)
    x_star = snap_linf(project_box(x + eps * np.sign(g), 0.0, 1.0), x, eps)
    scores_before = oracle.scores(x)
    scores_after = oracle.scores(x_star)
    problem = RobustnessProblem(
        admissible=Box(0.0, 1.0),
        distance=DistanceConstraint(LpDistance("linf"), alpha=eps),
        target=Untargeted(),
        x=x,
    )
    mu = norm(x_star - x, "linf")
    verdict = Verdict(
        admissible_ok=check_admissible(problem.admissible, x_star),
        distance_ok=mu <= eps,
        target_ok=int(np.argmax(scores_after)) != int(np.argmax(scores_before)),
        mu_value=mu,
    )
    return AttackResult(
        x_star=x_star,
        problem=problem,
        verdict=verdict,
        mu_value=mu,
        loss_value=-math.log(max(float(scores_after[y]), nn.PROB_FLOOR)),
        iterations=1,
        gradient_evals=0,
        method="fd",
    )
