"""Command-line front end.

Subcommands: attack, certify, substitute, train, adv-train, generate,
report. Exit code 0 means the run completed; robustness findings live in
the output, not the exit code.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import network as nn
from .blackbox import LABEL_ONLY, QueryOracle, SubstituteConfig, train_substitute
from .datagen import GENERATORS
from .errors import RobustlabError
from .harness import (
    ALL_METHODS,
    ATTACK_METHODS,
    CERTIFY_METHODS,
    ExperimentConfig,
    adversarial_train,
    run_experiment,
    write_report,
)
from .modelio import load_dataset, load_model, save_dataset, save_model
from .plots import render_figures
from .speclang import parse_problem
from .tensor import Rng
from .whitebox import AttackBudget

DEFAULT_HIDDEN = (16,)
DEFAULT_SPEC = "admissible box 0.0 1.0; distance linf <= {eps}; target untargeted; mode decision"


def _read_spec(value: str | None, eps: float | None) -> str:
    if value is None:
        return DEFAULT_SPEC.format(eps=repr(eps if eps is not None else 0.1))
    if os.path.isfile(value):
        with open(value, "r", encoding="utf-8") as f:
            return f.read()
    return value


def _experiment_args(p: argparse.ArgumentParser, methods) -> None:
    p.add_argument("--model", required=True, help="model json path")
    p.add_argument("--data", required=True, help="dataset csv path")
    p.add_argument("--spec", help="problem text or a path to it (default: untargeted linf)")
    p.add_argument("--method", required=True, choices=methods)
    p.add_argument("--eps", type=float, help="override the problem's distance threshold")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--step-size", type=float)
    p.add_argument("--samples", type=int, help="transform draws / substitute rounds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report here")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")


def _build_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        model=args.model,
        data=args.data,
        spec=_read_spec(args.spec, args.eps),
        method=args.method,
        eps=args.eps,
        steps=args.steps,
        step_size=args.step_size,
        samples=args.samples,
        seed=args.seed,
    )


def _run_and_print(args, figures: bool) -> int:
    cfg = _build_config(args)
    rows = run_experiment(cfg)
    for r in rows:
        mu = "" if r.mu_value is None else f" mu={r.mu_value!r}"
        print(f"input {r.input_id}: {r.outcome}{mu}")
    if args.out:
        write_report(rows, args.out, args.format)
        print(f"report: {args.out}")
        if figures:
            alpha = parse_problem(cfg.spec).distance.alpha if cfg.eps is None else cfg.eps
            for path in render_figures(rows, args.out, alpha=alpha):
                print(f"figure: {path}")
    return 0


def _cmd_attack(args) -> int:
    return _run_and_print(args, figures=False)


def _cmd_certify(args) -> int:
    return _run_and_print(args, figures=False)


def _cmd_report(args) -> int:
    if not args.out:
        print("report requires --out", file=sys.stderr)
        return 2
    return _run_and_print(args, figures=True)


def _cmd_substitute(args) -> int:
    net = load_model(args.model)
    data = load_dataset(args.data)
    oracle = QueryOracle(net, LABEL_ONLY)
    cfg = SubstituteConfig(rounds=args.samples if args.samples else 3, seed=args.seed)
    f_sub, queries = train_substitute(oracle, data.inputs, cfg)
    agree = sum(
        1 for x in data.inputs if nn.forward(f_sub, x).label == oracle.label(x)
    ) / len(data)
    print(f"queries used for training: {queries}")
    print(f"agreement with oracle on the dataset: {agree:.3f}")
    if args.out:
        save_model(f_sub, args.out)
        print(f"substitute model: {args.out}")
    return 0


def _fresh_net(data, seed: int) -> nn.Network:
    num_classes = max(data.labels) + 1
    return nn.init_network(data.input_dim, list(DEFAULT_HIDDEN), num_classes, rng=Rng(seed))


def _cmd_train(args) -> int:
    data = load_dataset(args.data)
    net = _fresh_net(data, args.seed)
    lr = args.step_size if args.step_size else 0.5
    net = nn.train(net, data, epochs=args.steps, learning_rate=lr)
    print(f"training accuracy: {nn.accuracy(net, data):.3f}")
    save_model(net, args.out)
    print(f"model: {args.out}")
    return 0


def _cmd_adv_train(args) -> int:
    data = load_dataset(args.data)
    net = load_model(args.model) if args.model else _fresh_net(data, args.seed)
    lr = args.step_size if args.step_size else 0.5
    inner = AttackBudget(eps=args.eps, steps=10)
    net = adversarial_train(
        net, data, inner, epochs=args.steps, learning_rate=lr, seed=args.seed
    )
    print(f"training accuracy: {nn.accuracy(net, data):.3f}")
    save_model(net, args.out)
    print(f"model: {args.out}")
    return 0


def _cmd_generate(args) -> int:
    data = GENERATORS[args.method](args.samples, args.seed)
    save_dataset(data, args.out)
    print(f"dataset: {args.out} ({len(data)} samples)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustlab",
        description="Adversarial attacks, certification, and reports for tiny networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attack", help="run a white-box or query-based attack per input")
    _experiment_args(p, ATTACK_METHODS + ("fd", "transfer"))
    p.set_defaults(fn=_cmd_attack)

    p = sub.add_parser("certify", help="certify or falsify label stability per input")
    _experiment_args(p, CERTIFY_METHODS)
    p.set_defaults(fn=_cmd_certify)

    p = sub.add_parser("report", help="run any method and write a report plus figures")
    _experiment_args(p, ALL_METHODS)
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("substitute", help="train a substitute model through a label oracle")
    p.add_argument("--model", required=True, help="oracle model json path")
    p.add_argument("--data", required=True, help="seed points csv path")
    p.add_argument("--samples", type=int, help="augmentation rounds (default 3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the substitute model here")
    p.set_defaults(fn=_cmd_substitute)

    p = sub.add_parser("train", help="train a fresh classifier on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=int, default=200, help="training epochs")
    p.add_argument("--step-size", type=float, help="learning rate (default 0.5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model json path")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("adv-train", help="train with PGD inner maximization")
    p.add_argument("--model", help="starting model (default: fresh init)")
    p.add_argument("--data", required=True)
    p.add_argument("--eps", type=float, default=0.1, help="inner PGD radius")
    p.add_argument("--steps", type=int, default=100, help="training epochs")
    p.add_argument("--step-size", type=float, help="learning rate (default 0.5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model json path")
    p.set_defaults(fn=_cmd_adv_train)

    p = sub.add_parser("generate", help="write a seeded toy dataset")
    p.add_argument("--method", choices=sorted(GENERATORS), default="blobs")
    p.add_argument("--samples", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="dataset csv path")
    p.set_defaults(fn=_cmd_generate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (RobustlabError, OSError, RuntimeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
