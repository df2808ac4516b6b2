"""Adversarial robustness as explicit constraint triples, with attacks,
certification, and a reporting harness for desk-scale networks.

A robustness problem fixes three constraints on a candidate x* near an
anchor x: admissibility (x* in an allowed set), distance (a quantitative
function of (x, x*) against a threshold alpha), and target behavior (what
the adversary wants, with threshold beta). Attacks produce candidates,
verifiers certify their absence, and every result is judged by the same
evaluate() regardless of which method produced it.
"""

from .blackbox import (
    LABEL_ONLY,
    SCORE_ACCESS,
    QueryOracle,
    SubstituteConfig,
    TransferReport,
    fd_attack,
    fd_gradient,
    train_substitute,
    transfer_attack,
)
from .datagen import blobs, two_moons
from .errors import (
    AmbiguousLabelError,
    CapabilityError,
    CoverageUndefinedError,
    DatasetFormatError,
    DimensionError,
    IncompatibleMethodError,
    InvalidBoxError,
    ModelFormatError,
    RobustlabError,
    SpecPrintError,
    SpecSemanticError,
    SpecSyntaxError,
    UnsupportedActivationError,
    WorkBudgetError,
)
from .harness import (
    ExperimentConfig,
    ReportRow,
    adversarial_train,
    emit_report,
    run_experiment,
    write_report,
)
from .modelio import (
    load_dataset,
    load_model,
    load_points,
    save_dataset,
    save_model,
    save_points,
)
from .network import (
    LabeledDataset,
    Layer,
    Network,
    Prediction,
    accuracy,
    forward,
    forward_trace,
    grad_input,
    grad_logit,
    grad_params,
    init_network,
    loss,
    mean_loss,
    neuron_coverage,
    softmax,
    train,
)
from .plots import render_figures
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
    Verdict,
    check_admissible,
    check_distance,
    check_target,
    eval_mu,
    evaluate,
)
from .speclang import parse_problem, print_problem
from .tensor import Rng, norm, project_box, project_linf_ball, snap_linf
from .transforms import SampledTransform, TransformFamily, TransformKind, identity_family
from .verify import (
    FALSIFIED,
    ROBUST,
    UNKNOWN,
    Certificate,
    LayerBounds,
    certified_radius,
    certify_enumeration,
    certify_ibp,
    grid_falsify,
    ibp_bounds,
)
from .whitebox import (
    AttackBudget,
    AttackResult,
    PenaltySchedule,
    deepfool,
    eot_attack,
    fgsm,
    min_perturbation_targeted,
    pgd,
    solve,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
