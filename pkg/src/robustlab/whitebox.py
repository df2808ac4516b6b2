"""Gradient-based attacks: FGSM, PGD, DeepFool, targeted minimum
perturbation, and expectation-over-transforms, plus a mode-aware solver.

Every attack returns an AttackResult whose stored verdict equals a fresh
evaluate() of its own problem, so downstream reports can re-derive every
outcome from (problem, x_star) alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import network as nn
from .errors import AmbiguousLabelError, IncompatibleMethodError
from .problem import (
    Box,
    DistanceConstraint,
    ExpectedTransformedDistance,
    LpDistance,
    LossAtLeast,
    RobustnessProblem,
    Targeted,
    Untargeted,
    Verdict,
    eval_mu,
    evaluate,
)
from .tensor import Rng, as_vec, norm, project_box, project_linf_ball, snap_linf
from .transforms import BOX_HI, BOX_LO, TransformFamily

DEEPFOOL_OVERSHOOT = 0.02
DEEPFOOL_MAX_ITER = 50
PENALTY_C_LO = 1e-3
PENALTY_C_HI = 1e3
PENALTY_ROUNDS = 10
ALPHA_RESOLUTION = 1e-3

ATTACK_METHODS = ("fgsm", "pgd", "deepfool", "minpert", "eot")


@dataclass(frozen=True)
class AttackBudget:
    """Perturbation radius and optimizer effort.

    step_size = None selects the saturating default 2.5 * eps / steps.
    """

    eps: float
    steps: int = 1
    step_size: float | None = None

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be non-negative")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")

    def effective_step(self) -> float:
        if self.step_size is not None:
            return self.step_size
        if self.steps == 0:
            return self.eps
        return 2.5 * self.eps / self.steps


@dataclass(frozen=True)
class AttackResult:
    x_star: np.ndarray
    problem: RobustnessProblem
    verdict: Verdict
    mu_value: float
    loss_value: float
    iterations: int
    gradient_evals: int
    method: str
    trace: tuple[np.ndarray, ...] | None = None

    @property
    def success(self) -> bool:
        return self.verdict.overall


def _linf_problem(x: np.ndarray, eps: float) -> RobustnessProblem:
    return RobustnessProblem(
        admissible=Box(BOX_LO, BOX_HI),
        distance=DistanceConstraint(LpDistance("linf"), alpha=eps),
        target=Untargeted(),
        x=x,
    )


def _l2_problem(x: np.ndarray, alpha: float, target) -> RobustnessProblem:
    return RobustnessProblem(
        admissible=Box(BOX_LO, BOX_HI),
        distance=DistanceConstraint(LpDistance("l2"), alpha=alpha),
        target=target,
        x=x,
    )


def _result(net, problem, x_star, loss_value, iterations, gradient_evals, method, trace=None):
    verdict = evaluate(problem, net, x_star)
    return AttackResult(
        x_star=x_star,
        problem=problem,
        verdict=verdict,
        mu_value=verdict.mu_value,
        loss_value=float(loss_value),
        iterations=iterations,
        gradient_evals=gradient_evals,
        method=method,
        trace=trace,
    )


def fgsm(net: nn.Network, x, y: int, eps: float) -> AttackResult:
    """One signed-gradient step of size eps, box-projected.

    y must be the model's own label at x; sign(0) contributes nothing.
    """
    x = as_vec(x, dim=net.input_dim)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    label = nn.forward(net, x).label
    if y != label:
        raise ValueError(f"fgsm expects the model's label at x ({label}), got {y}")
    g = nn.grad_input(net, x, y)
    x_star = snap_linf(project_box(x + eps * np.sign(g), BOX_LO, BOX_HI), x, eps)
    return _result(
        net,
        _linf_problem(x, eps),
        x_star,
        loss_value=nn.loss(net, x_star, y),
        iterations=1,
        gradient_evals=1,
        method="fgsm",
    )


def pgd(
    net: nn.Network,
    x,
    y: int,
    budget: AttackBudget,
    rng: Rng | None = None,
    random_start: bool = True,
) -> AttackResult:
    """Iterated signed-gradient ascent on loss(net, ., y), projected into
    the eps ball around x intersected with the box.

    Returns the visited iterate (excluding the start point) with the
    highest loss; the full iterate sequence is kept in trace.
    """
    x = as_vec(x, dim=net.input_dim)
    nn._check_class(net, y)
    if budget.steps < 1:
        raise ValueError("pgd needs at least one step")
    if random_start and rng is None:
        raise ValueError("random_start requires an rng")
    eps = budget.eps
    step = budget.effective_step()

    current = x
    if random_start:
        current = snap_linf(
            project_box(x + rng.uniform(-eps, eps, size=x.size), BOX_LO, BOX_HI), x, eps
        )
    trace = [current]
    best_x = None
    best_loss = -math.inf
    for _ in range(budget.steps):
        g = nn.grad_input(net, current, y)
        current = snap_linf(
            project_box(
                project_linf_ball(current + step * np.sign(g), x, eps), BOX_LO, BOX_HI
            ),
            x,
            eps,
        )
        trace.append(current)
        current_loss = nn.loss(net, current, y)
        if current_loss > best_loss:
            best_loss = current_loss
            best_x = current
    return _result(
        net,
        _linf_problem(x, eps),
        best_x,
        loss_value=best_loss,
        iterations=budget.steps,
        gradient_evals=budget.steps,
        method="pgd",
        trace=tuple(trace),
    )


def deepfool(
    net: nn.Network,
    x,
    max_iter: int = DEEPFOOL_MAX_ITER,
    overshoot: float = DEEPFOOL_OVERSHOOT,
    y: int | None = None,
) -> AttackResult:
    """Iterative linearization toward the nearest class boundary (L2).

    y defaults to the model's label at x; passing a different y makes the
    degenerate already-flipped case reachable (0 iterations, x* = x).
    """
    x = as_vec(x, dim=net.input_dim)
    logits = nn.forward(net, x).logits
    top = np.flatnonzero(logits == logits.max())
    if top.size > 1:
        raise AmbiguousLabelError(f"logits tie between classes {top.tolist()}")
    label = int(top[0]) if y is None else nn._check_class(net, y)

    r_total = np.zeros_like(x)
    iterations = 0
    gradient_evals = 0
    while iterations < max_iter:
        x_adv = project_box(x + (1.0 + overshoot) * r_total, BOX_LO, BOX_HI)
        if nn.forward(net, x_adv).label != label:
            break
        current = x + r_total
        pred = nn.forward(net, current)
        grads = [nn.grad_logit(net, current, k) for k in range(net.num_classes)]
        gradient_evals += net.num_classes
        best_step = None
        best_dist = math.inf
        for k in range(net.num_classes):
            if k == label:
                continue
            w_k = grads[k] - grads[label]
            f_k = pred.logits[k] - pred.logits[label]
            denom = float(np.dot(w_k, w_k))
            if denom == 0.0:
                continue
            dist = abs(f_k) / math.sqrt(denom)
            if dist < best_dist:
                best_dist = dist
                best_step = abs(f_k) / denom * w_k
        if best_step is None:
            break
        r_total = r_total + best_step
        iterations += 1

    x_star = project_box(x + (1.0 + overshoot) * r_total, BOX_LO, BOX_HI)
    achieved = norm(x_star - x, "l2")
    problem = _l2_problem(x, achieved, Untargeted())
    return _result(
        net,
        problem,
        x_star,
        loss_value=nn.loss(net, x_star, label),
        iterations=iterations,
        gradient_evals=gradient_evals,
        method="deepfool",
    )


@dataclass(frozen=True)
class PenaltySchedule:
    """Bisection schedule over the distance weight c plus inner-loop effort."""

    c_lo: float = PENALTY_C_LO
    c_hi: float = PENALTY_C_HI
    rounds: int = PENALTY_ROUNDS
    steps: int = 300
    learning_rate: float = 0.1

    def __post_init__(self):
        if not 0 < self.c_lo < self.c_hi:
            raise ValueError("need 0 < c_lo < c_hi")
        if self.rounds < 1 or self.steps < 1:
            raise ValueError("rounds and steps must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def _penalty_descent(net, x, y_t, c, steps, lr):
    # The penalty term contributes curvature 2c, so plain descent needs
    # lr < 1/c to stay stable; cap the rate instead of asking callers to.
    lr = min(lr, 0.9 / (2.0 * c))
    z = x
    for _ in range(steps):
        g = 2.0 * c * (z - x) + nn.grad_input(net, z, y_t)
        z = project_box(z - lr * g, BOX_LO, BOX_HI)
    return z


def min_perturbation_targeted(
    net: nn.Network,
    x,
    y_t: int,
    schedule: PenaltySchedule = PenaltySchedule(),
) -> AttackResult:
    """Smallest-found L2 perturbation classified as y_t.

    Minimizes c * ||r||^2 + loss(x + r, y_t) by projected gradient descent
    at each c of a log-space bisection: success pushes c up (stronger
    distance weight, smaller r), failure pushes it down.
    """
    x = as_vec(x, dim=net.input_dim)
    nn._check_class(net, y_t)
    label = nn.forward(net, x).label
    if y_t == label:
        raise ValueError(f"target class {y_t} already holds at x")

    lo = math.log(schedule.c_lo)
    hi = math.log(schedule.c_hi)
    best_x = None
    best_r = math.inf
    for _ in range(schedule.rounds):
        c = math.exp(0.5 * (lo + hi))
        cand = _penalty_descent(net, x, y_t, c, schedule.steps, schedule.learning_rate)
        if nn.forward(net, cand).label == y_t:
            r = norm(cand - x, "l2")
            if r < best_r:
                best_r = r
                best_x = cand
            lo = math.log(c)
        else:
            hi = math.log(c)

    if best_x is None:
        best_x = x
        best_r = 0.0
    problem = _l2_problem(x, best_r, Targeted(y_t))
    return _result(
        net,
        problem,
        best_x,
        loss_value=nn.loss(net, best_x, y_t),
        iterations=schedule.rounds,
        gradient_evals=schedule.rounds * schedule.steps,
        method="minpert",
    )


def _expected_distance(transforms, x_star, x) -> float:
    return float(
        np.mean([norm(t.apply(x_star) - t.apply(x), "l2") for t in transforms])
    )


def _rescale_feasible(transforms, x, cand, eps) -> np.ndarray:
    """Largest point on the segment [x, cand] meeting the sampled
    expected-distance bound; bisection on the scale."""
    if _expected_distance(transforms, cand, x) <= eps:
        return cand
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if _expected_distance(transforms, x + mid * (cand - x), x) <= eps:
            lo = mid
        else:
            hi = mid
    return x + lo * (cand - x)


def eot_attack(
    net: nn.Network,
    x,
    y_t: int,
    family: TransformFamily,
    budget: AttackBudget,
) -> AttackResult:
    """Gradient ascent on the sampled mean of log P(y_t | t(x')) subject to
    mean_t ||t(x') - t(x)||_2 <= eps, enforced by rescaling toward x.

    The transform sample is drawn once from the family's seed and reused
    for every step, so the run is deterministic.
    """
    x = as_vec(x, dim=net.input_dim)
    nn._check_class(net, y_t)
    transforms = family.sample(x.size)
    if not transforms:
        raise ValueError("transform family produced an empty sample")
    eps = budget.eps

    current = x
    for _ in range(budget.steps):
        g = np.zeros_like(x)
        for t in transforms:
            tx = t.apply(current)
            # d log P(y_t)/d input is the negative cross-entropy gradient.
            g += t.vjp(current, -nn.grad_input(net, tx, y_t))
        g /= len(transforms)
        current = project_box(current + budget.effective_step() * g, BOX_LO, BOX_HI)
        current = _rescale_feasible(transforms, x, current, eps)

    problem = RobustnessProblem(
        admissible=Box(BOX_LO, BOX_HI),
        distance=DistanceConstraint(
            ExpectedTransformedDistance(family=family, inner="l2"), alpha=eps
        ),
        target=Targeted(y_t),
        x=x,
    )
    return _result(
        net,
        problem,
        current,
        loss_value=nn.loss(net, current, y_t),
        iterations=budget.steps,
        gradient_evals=budget.steps * len(transforms),
        method="eot",
    )


def _attack_at(net, problem, method, eps, budget, rng):
    """Run one attack consistent with the problem at radius eps."""
    x = problem.anchor
    if method == "fgsm":
        return fgsm(net, x, nn.forward(net, x).label, eps)
    if method == "pgd":
        inner = AttackBudget(eps=eps, steps=budget.steps, step_size=budget.step_size)
        return pgd(net, x, nn.forward(net, x).label, inner, rng=rng)
    if method == "deepfool":
        return deepfool(net, x)
    if method == "minpert":
        return min_perturbation_targeted(net, x, problem.target.y_target)
    if method == "eot":
        inner = AttackBudget(eps=eps, steps=budget.steps, step_size=budget.step_size)
        return eot_attack(net, x, problem.target.y_target, problem.distance.mu.family, inner)
    raise IncompatibleMethodError(f"unknown attack method {method!r}")


def _check_compatibility(problem: RobustnessProblem, method: str) -> None:
    target = problem.target
    mu = problem.distance.mu
    ok = False
    if method in ("fgsm", "pgd"):
        ok = isinstance(target, (Untargeted, LossAtLeast)) and (
            isinstance(mu, LpDistance) and mu.p == "linf"
        )
    elif method == "deepfool":
        ok = isinstance(target, Untargeted) and isinstance(mu, LpDistance) and mu.p == "l2"
    elif method == "minpert":
        ok = isinstance(target, Targeted) and isinstance(mu, LpDistance) and mu.p == "l2"
    elif method == "eot":
        ok = isinstance(target, Targeted) and isinstance(mu, ExpectedTransformedDistance)
    if not ok:
        raise IncompatibleMethodError(
            f"method {method!r} does not fit target "
            f"{type(target).__name__} with distance {type(mu).__name__}"
        )


def solve(
    problem: RobustnessProblem,
    net: nn.Network,
    method: str,
    budget: AttackBudget,
    rng: Rng | None = None,
) -> AttackResult:
    """Dispatch a problem to an attack according to its mode.

    decision: one attack at the stated alpha. min-alpha: binary search for
    the smallest radius (resolution 1e-3) at which the attack succeeds,
    problem rebound at that radius. max-beta: maximize the loss target and
    rebind beta to the achieved value.
    """
    _check_compatibility(problem, method)
    if rng is None:
        rng = Rng(0)

    if problem.mode == "decision":
        result = _attack_at(net, problem, method, problem.distance.alpha, budget, rng)
        return _rebind(net, result, problem)

    if problem.mode == "min-alpha":
        hi_result = _attack_at(net, problem, method, 1.0, budget, rng.derive(0))
        if not evaluate(problem.with_alpha(1.0), net, hi_result.x_star).overall:
            return _rebind(net, hi_result, problem.with_alpha(1.0))
        lo, hi = 0.0, 1.0
        best = hi_result
        k = 1
        while hi - lo > ALPHA_RESOLUTION:
            mid = 0.5 * (lo + hi)
            cand = _attack_at(net, problem, method, mid, budget, rng.derive(k))
            k += 1
            if evaluate(problem.with_alpha(mid), net, cand.x_star).overall:
                hi = mid
                best = cand
            else:
                lo = mid
        return _rebind(net, best, problem.with_alpha(hi))

    # max-beta
    if not isinstance(problem.target, LossAtLeast):
        raise IncompatibleMethodError(
            "max-beta mode requires a loss threshold target"
        )
    result = _attack_at(net, problem, method, problem.distance.alpha, budget, rng)
    achieved = nn.loss(net, result.x_star, nn.forward(net, problem.anchor).label)
    return _rebind(net, result, problem.with_beta(achieved))


def _rebind(net, result: AttackResult, problem: RobustnessProblem) -> AttackResult:
    """Re-house an attack's candidate under the caller's problem."""
    verdict = evaluate(problem, net, result.x_star)
    return AttackResult(
        x_star=result.x_star,
        problem=problem,
        verdict=verdict,
        mu_value=verdict.mu_value,
        loss_value=result.loss_value,
        iterations=result.iterations,
        gradient_evals=result.gradient_evals,
        method=result.method,
        trace=result.trace,
    )
