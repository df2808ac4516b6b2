"""Textual mini-language for robustness problems.

Grammar (clauses separated by ';', whitespace-insensitive, one problem
per document; every clause must appear exactly once):

    admissible box <lo> <hi>
    admissible finite <file>
    distance <l0|l1|l2|linf|eot> <=|>= <alpha>
    target targeted <class> | untargeted | loss >= <beta>
           | coverage >= <beta> | invariance
    mode decision | min-alpha | max-beta

`print_problem` emits exactly this grammar in canonical clause order, so
print(parse(print(p))) == print(p). The anchor input x is not part of
the text; bind it per input with RobustnessProblem.with_anchor.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SpecPrintError, SpecSemanticError, SpecSyntaxError
from .problem import (
    Box,
    CoverageAtLeast,
    CustomDistance,
    DistanceConstraint,
    ExpectedTargetLogProbAtLeast,
    ExpectedTransformedDistance,
    FiniteSet,
    InvarianceViolation,
    LossAtLeast,
    LpDistance,
    RobustnessProblem,
    Targeted,
    TransformOrbit,
    Untargeted,
)
from .tensor import NORM_KINDS
from .transforms import identity_family

# Default sample budget for the expectation-based distance when parsed
# from text (the grammar cannot carry a transform family).
EOT_DEFAULT_SAMPLES = 64
EOT_DEFAULT_SEED = 0


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[list[_Token]]:
    """Split into clauses of tokens; ';' and newlines both end a clause."""
    clauses: list[list[_Token]] = []
    current: list[_Token] = []
    for line_no, line in enumerate(text.splitlines() or [text], start=1):
        i = 0
        while i < len(line):
            ch = line[i]
            if ch.isspace():
                i += 1
                continue
            if ch == ";":
                if current:
                    clauses.append(current)
                    current = []
                i += 1
                continue
            j = i
            while j < len(line) and not line[j].isspace() and line[j] != ";":
                j += 1
            current.append(_Token(line[i:j], line_no, i + 1))
            i = j
        if current:
            clauses.append(current)
            current = []
    if current:
        clauses.append(current)
    return clauses


def _number(tok: _Token) -> float:
    try:
        return float(tok.text)
    except ValueError:
        raise SpecSyntaxError(f"expected a number, got {tok.text!r}", tok.line, tok.column)


def _integer(tok: _Token) -> int:
    try:
        return int(tok.text)
    except ValueError:
        raise SpecSyntaxError(f"expected an integer, got {tok.text!r}", tok.line, tok.column)


def _expect_len(clause: list[_Token], n: int, what: str) -> None:
    if len(clause) != n:
        tok = clause[min(len(clause), n) - 1] if clause else _Token("", 1, 1)
        raise SpecSyntaxError(f"malformed {what} clause", tok.line, tok.column)


def _parse_admissible(clause: list[_Token]):
    if len(clause) < 2:
        raise SpecSyntaxError("admissible clause needs a variant", clause[0].line, clause[0].column)
    variant = clause[1].text
    if variant == "box":
        _expect_len(clause, 4, "admissible box")
        lo, hi = _number(clause[2]), _number(clause[3])
        try:
            return Box(lo=lo, hi=hi)
        except ValueError as e:
            raise SpecSemanticError(str(e)) from e
    if variant == "finite":
        _expect_len(clause, 3, "admissible finite")
        from .modelio import load_points

        path = clause[2].text
        try:
            points = load_points(path)
        except OSError as e:
            raise SpecSemanticError(f"cannot read finite set file {path!r}: {e}") from e
        return FiniteSet(points=tuple(points), source=path)
    raise SpecSyntaxError(
        f"unknown admissible variant {variant!r}", clause[1].line, clause[1].column
    )


def _parse_distance(clause: list[_Token]) -> DistanceConstraint:
    _expect_len(clause, 4, "distance")
    kind = clause[1].text
    relation = clause[2].text
    if relation not in ("<=", ">="):
        raise SpecSyntaxError(
            f"expected '<=' or '>=', got {relation!r}", clause[2].line, clause[2].column
        )
    alpha = _number(clause[3])
    if kind in NORM_KINDS:
        mu = LpDistance(kind)
    elif kind == "eot":
        mu = ExpectedTransformedDistance(
            family=identity_family(samples=EOT_DEFAULT_SAMPLES, seed=EOT_DEFAULT_SEED),
            inner="l2",
        )
    else:
        raise SpecSyntaxError(f"unknown norm {kind!r}", clause[1].line, clause[1].column)
    try:
        return DistanceConstraint(mu=mu, alpha=alpha, relation=relation)
    except ValueError as e:
        raise SpecSemanticError(str(e)) from e


def _parse_target(clause: list[_Token]):
    if len(clause) < 2:
        raise SpecSyntaxError("target clause needs a variant", clause[0].line, clause[0].column)
    variant = clause[1].text
    try:
        if variant == "targeted":
            _expect_len(clause, 3, "target targeted")
            y = _integer(clause[2])
            if y < 0:
                raise SpecSemanticError(f"target class must be non-negative, got {y}")
            return Targeted(y_target=y)
        if variant == "untargeted":
            _expect_len(clause, 2, "target untargeted")
            return Untargeted()
        if variant == "invariance":
            _expect_len(clause, 2, "target invariance")
            return InvarianceViolation()
        if variant in ("loss", "coverage"):
            _expect_len(clause, 4, f"target {variant}")
            if clause[2].text != ">=":
                raise SpecSyntaxError(
                    f"expected '>=', got {clause[2].text!r}", clause[2].line, clause[2].column
                )
            beta = _number(clause[3])
            return LossAtLeast(beta) if variant == "loss" else CoverageAtLeast(beta)
    except ValueError as e:
        raise SpecSemanticError(str(e)) from e
    raise SpecSyntaxError(f"unknown target variant {variant!r}", clause[1].line, clause[1].column)


def parse_problem(text: str) -> RobustnessProblem:
    """Parse the mini-language into an anchor-free problem."""
    clauses = _tokenize(text)
    if not clauses:
        raise SpecSyntaxError("empty problem text", 1, 1)
    parts: dict[str, object] = {}
    for clause in clauses:
        head = clause[0]
        if head.text in parts:
            raise SpecSyntaxError(f"duplicate {head.text!r} clause", head.line, head.column)
        if head.text == "admissible":
            parts["admissible"] = _parse_admissible(clause)
        elif head.text == "distance":
            parts["distance"] = _parse_distance(clause)
        elif head.text == "target":
            parts["target"] = _parse_target(clause)
        elif head.text == "mode":
            _expect_len(clause, 2, "mode")
            mode = clause[1].text
            if mode not in ("decision", "min-alpha", "max-beta"):
                raise SpecSyntaxError(
                    f"unknown mode {mode!r}", clause[1].line, clause[1].column
                )
            parts["mode"] = mode
        else:
            raise SpecSyntaxError(f"unknown clause {head.text!r}", head.line, head.column)
    for required in ("admissible", "distance", "target", "mode"):
        if required not in parts:
            raise SpecSyntaxError(f"missing {required!r} clause", 1, 1)
    return RobustnessProblem(
        admissible=parts["admissible"],  # type: ignore[arg-type]
        distance=parts["distance"],  # type: ignore[arg-type]
        target=parts["target"],  # type: ignore[arg-type]
        mode=parts["mode"],  # type: ignore[arg-type]
    )


def _fmt(value: float) -> str:
    return repr(float(value))


def print_problem(problem: RobustnessProblem) -> str:
    """Canonical single-line form of a problem (anchor excluded)."""
    adm = problem.admissible
    if isinstance(adm, Box):
        adm_text = f"admissible box {_fmt(adm.lo)} {_fmt(adm.hi)}"
    elif isinstance(adm, FiniteSet):
        if adm.source is None:
            raise SpecPrintError("finite set without a source file cannot be printed")
        adm_text = f"admissible finite {adm.source}"
    elif isinstance(adm, TransformOrbit):
        raise SpecPrintError("transform-orbit admissibility is not printable")
    else:
        raise SpecPrintError(f"unprintable admissible set {type(adm).__name__}")

    mu = problem.distance.mu
    if isinstance(mu, LpDistance):
        kind = mu.p
    elif isinstance(mu, ExpectedTransformedDistance):
        kind = "eot"
    elif isinstance(mu, CustomDistance):
        raise SpecPrintError(f"custom distance {mu.name!r} is not printable")
    else:
        raise SpecPrintError(f"unprintable distance {type(mu).__name__}")
    dist_text = f"distance {kind} {problem.distance.relation} {_fmt(problem.distance.alpha)}"

    tb = problem.target
    if isinstance(tb, Targeted):
        target_text = f"target targeted {tb.y_target}"
    elif isinstance(tb, Untargeted):
        target_text = "target untargeted"
    elif isinstance(tb, LossAtLeast):
        target_text = f"target loss >= {_fmt(tb.beta)}"
    elif isinstance(tb, CoverageAtLeast):
        if tb.threshold != 0.0:
            raise SpecPrintError("coverage target with non-default threshold is not printable")
        target_text = f"target coverage >= {_fmt(tb.beta)}"
    elif isinstance(tb, InvarianceViolation):
        target_text = "target invariance"
    elif isinstance(tb, ExpectedTargetLogProbAtLeast):
        raise SpecPrintError("expected-log-prob target is not printable")
    else:
        raise SpecPrintError(f"unprintable target {type(tb).__name__}")

    return f"{adm_text}; {dist_text}; {target_text}; mode {problem.mode}"
