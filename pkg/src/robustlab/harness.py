"""Experiment orchestration: load model/data/problem text, run one method
per dataset input, and emit deterministic reports.

Report rows mirror the constraint-triple columns: admissibility, distance
constraint with achieved distance, target behavior with achieved value,
and outcome. Wall-clock runtime stays on the row object only; emitted
documents must be byte-identical across equal runs.
"""

from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass

import numpy as np

from . import network as nn
from .blackbox import (
    LABEL_ONLY,
    SCORE_ACCESS,
    QueryOracle,
    SubstituteConfig,
    fd_attack,
    train_substitute,
    transfer_attack,
)
from .errors import IncompatibleMethodError, SpecPrintError
from .modelio import load_dataset, load_model
from .problem import LpDistance, RobustnessProblem, Untargeted
from .speclang import parse_problem, print_problem
from .tensor import Rng
from .verify import certify_enumeration, certify_ibp, grid_falsify
from .whitebox import AttackBudget, pgd, solve

ATTACK_METHODS = ("fgsm", "pgd", "deepfool", "minpert", "eot")
BLACKBOX_METHODS = ("fd", "transfer")
CERTIFY_METHODS = ("certify-ibp", "certify-enum", "grid")
ALL_METHODS = ATTACK_METHODS + BLACKBOX_METHODS + CERTIFY_METHODS

DEFAULT_GRID_RESOLUTION = 0.01

CSV_HEADER = [
    "input",
    "admissible",
    "distance",
    "mu",
    "target",
    "achieved",
    "outcome",
    "iterations",
    "gradient_evals",
    "queries",
    "work",
    "x_star",
]


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    data: str
    spec: str
    method: str
    eps: float | None = None
    steps: int = 20
    step_size: float | None = None
    samples: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.method not in ALL_METHODS:
            raise IncompatibleMethodError(
                f"unknown method {self.method!r}; expected one of {ALL_METHODS}"
            )


@dataclass(frozen=True)
class ReportRow:
    input_id: int
    admissible: str
    distance: str
    mu_value: float | None
    target: str
    achieved: float | None
    outcome: str
    iterations: int
    gradient_evals: int
    queries: int
    work: int
    runtime_s: float
    x_star: tuple[float, ...] | None


def adversarial_train(
    net: nn.Network,
    data: nn.LabeledDataset,
    inner: AttackBudget,
    epochs: int,
    learning_rate: float,
    seed: int = 0,
) -> nn.Network:
    """Each epoch: replace every input by its PGD adversary against the
    current parameters, then take one full-batch descent step on the
    adversarial batch. inner.eps = 0 reproduces plain training exactly."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    root = Rng(seed)
    current = net
    for epoch in range(int(epochs)):
        adv_inputs = []
        for i, (x, y) in enumerate(data):
            rng = root.derive(epoch * len(data) + i)
            adv_inputs.append(pgd(current, x, y, inner, rng=rng).x_star)
        grads = nn._mean_param_grads(current, adv_inputs, data.labels)
        current = nn.gradient_step(current, grads, learning_rate)
    return current


def _problem_columns(problem: RobustnessProblem) -> tuple[str, str, str]:
    try:
        adm, dist, target, _mode = print_problem(problem).split("; ")
        return adm, dist, target
    except SpecPrintError:
        return (
            type(problem.admissible).__name__,
            f"{type(problem.distance.mu).__name__} {problem.distance.relation} "
            f"{problem.distance.alpha!r}",
            type(problem.target).__name__,
        )


def _require_linf_untargeted(problem: RobustnessProblem, method: str) -> None:
    mu = problem.distance.mu
    if not (isinstance(mu, LpDistance) and mu.p == "linf"):
        raise IncompatibleMethodError(f"method {method!r} needs an linf distance")
    if not isinstance(problem.target, Untargeted):
        raise IncompatibleMethodError(f"method {method!r} needs an untargeted goal")


def _attack_row(i, net, problem, cfg, rng) -> ReportRow:
    budget = AttackBudget(
        eps=problem.distance.alpha, steps=cfg.steps, step_size=cfg.step_size
    )
    start = time.perf_counter()
    result = solve(problem, net, cfg.method, budget, rng=rng)
    runtime = time.perf_counter() - start
    adm, dist, target = _problem_columns(result.problem)
    return ReportRow(
        input_id=i,
        admissible=adm,
        distance=dist,
        mu_value=result.mu_value,
        target=target,
        achieved=result.loss_value,
        outcome="success" if result.success else "failure",
        iterations=result.iterations,
        gradient_evals=result.gradient_evals,
        queries=0,
        work=0,
        runtime_s=runtime,
        x_star=tuple(float(v) for v in result.x_star),
    )


def _fd_row(i, net, problem, cfg) -> ReportRow:
    _require_linf_untargeted(problem, cfg.method)
    oracle = QueryOracle(net, SCORE_ACCESS)
    x = problem.anchor
    start = time.perf_counter()
    y = oracle.label(x)
    result = fd_attack(oracle, x, y, eps=problem.distance.alpha)
    runtime = time.perf_counter() - start
    adm, dist, target = _problem_columns(result.problem)
    return ReportRow(
        input_id=i,
        admissible=adm,
        distance=dist,
        mu_value=result.mu_value,
        target=target,
        achieved=result.loss_value,
        outcome="success" if result.success else "failure",
        iterations=result.iterations,
        gradient_evals=result.gradient_evals,
        queries=oracle.query_count,
        work=0,
        runtime_s=runtime,
        x_star=tuple(float(v) for v in result.x_star),
    )


def _transfer_rows(net, problem_template, data, cfg) -> list[ReportRow]:
    _require_linf_untargeted(problem_template, cfg.method)
    oracle = QueryOracle(net, LABEL_ONLY)
    sub_cfg = SubstituteConfig(
        rounds=cfg.samples if cfg.samples else 3, seed=cfg.seed
    )
    f_sub, _train_queries = train_substitute(oracle, data.inputs, sub_cfg)
    rows = []
    root = Rng(cfg.seed)
    for i, (x, _y) in enumerate(data):
        problem = problem_template.with_anchor(x)
        eps = problem.distance.alpha
        budget = AttackBudget(eps=eps, steps=cfg.steps, step_size=cfg.step_size)
        start = time.perf_counter()
        result, report = transfer_attack(
            oracle, f_sub, x, attack="pgd", budget=budget, rng=root.derive(i)
        )
        runtime = time.perf_counter() - start
        adm, dist, target = _problem_columns(result.problem)
        rows.append(
            ReportRow(
                input_id=i,
                admissible=adm,
                distance=dist,
                mu_value=result.mu_value,
                target=target,
                achieved=result.loss_value,
                outcome="transferred" if report.transferred else "not-transferred",
                iterations=result.iterations,
                gradient_evals=result.gradient_evals,
                queries=report.queries_used,
                work=0,
                runtime_s=runtime,
                x_star=tuple(float(v) for v in result.x_star),
            )
        )
    return rows


def _certify_row(i, net, problem, cfg) -> ReportRow:
    _require_linf_untargeted(problem, cfg.method)
    if problem.mode != "decision":
        raise IncompatibleMethodError("certification rows require decision mode")
    x = problem.anchor
    eps = problem.distance.alpha
    start = time.perf_counter()
    if cfg.method == "certify-ibp":
        cert = certify_ibp(net, x, eps)
    elif cfg.method == "certify-enum":
        cert = certify_enumeration(net, x, eps)
    else:
        resolution = cfg.step_size if cfg.step_size else DEFAULT_GRID_RESOLUTION
        cert = grid_falsify(net, x, eps, resolution)
    runtime = time.perf_counter() - start
    adm, dist, target = _problem_columns(problem)
    witness = None
    mu = None
    if cert.witness is not None:
        witness = tuple(float(v) for v in cert.witness)
        mu = float(np.max(np.abs(cert.witness - x)))
    outcome = cert.status if cert.diagnostic is None else f"{cert.status}: {cert.diagnostic}"
    return ReportRow(
        input_id=i,
        admissible=adm,
        distance=dist,
        mu_value=mu,
        target=target,
        achieved=None,
        outcome=outcome,
        iterations=0,
        gradient_evals=0,
        queries=0,
        work=cert.work,
        runtime_s=runtime,
        x_star=witness,
    )


def run_experiment(cfg: ExperimentConfig) -> list[ReportRow]:
    """One row per dataset input; any failure aborts naming the input."""
    for path in (cfg.model, cfg.data):
        if not os.path.isfile(path):
            raise FileNotFoundError(f"no such file: {path}")
    net = load_model(cfg.model)
    data = load_dataset(cfg.data)
    template = parse_problem(cfg.spec)
    if cfg.eps is not None:
        template = template.with_alpha(cfg.eps)

    if cfg.method == "transfer":
        return _transfer_rows(net, template, data, cfg)

    root = Rng(cfg.seed)
    rows = []
    for i, (x, _y) in enumerate(data):
        problem = template.with_anchor(x)
        try:
            if cfg.method in ATTACK_METHODS:
                rows.append(_attack_row(i, net, problem, cfg, root.derive(i)))
            elif cfg.method == "fd":
                rows.append(_fd_row(i, net, problem, cfg))
            else:
                rows.append(_certify_row(i, net, problem, cfg))
        except Exception as e:
            raise RuntimeError(f"input {i}: {e}") from e
    return rows


def _fmt_opt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def _fmt_point(point: tuple[float, ...] | None) -> str:
    return "" if point is None else " ".join(repr(v) for v in point)


def emit_report(rows: list[ReportRow], fmt: str = "csv") -> str:
    """Render rows as a csv or markdown document (runtime excluded so
    equal runs emit equal bytes)."""
    if not rows:
        raise ValueError("report needs at least one row")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r.input_id,
                    r.admissible,
                    r.distance,
                    _fmt_opt(r.mu_value),
                    r.target,
                    _fmt_opt(r.achieved),
                    r.outcome,
                    r.iterations,
                    r.gradient_evals,
                    r.queries,
                    r.work,
                    _fmt_point(r.x_star),
                ]
            )
        return buf.getvalue()
    if fmt == "markdown":
        lines = [
            "| input | admissibility | distance constraint | target behavior "
            "| outcome | mu | iterations | gradient evals | queries | work |",
            "| --- | --- | --- | --- | --- | --- | --- | --- | --- | --- |",
        ]
        for r in rows:
            lines.append(
                f"| {r.input_id} | {r.admissible} | {r.distance} | {r.target} "
                f"| {r.outcome} | {_fmt_opt(r.mu_value)} | {r.iterations} "
                f"| {r.gradient_evals} | {r.queries} | {r.work} |"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"format must be 'csv' or 'markdown', got {fmt!r}")


def write_report(rows: list[ReportRow], path: str, fmt: str = "csv") -> str:
    text = emit_report(rows, fmt)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return text
