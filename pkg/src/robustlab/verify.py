"""Desk-scale certification that a label is constant over an Linf ball.

Three routes with different soundness/completeness trade-offs:

- certify_ibp: interval bound propagation. Sound, incomplete, fast.
- certify_enumeration: exact for tiny ReLU nets. Walks the reachable
  ReLU on/off patterns; within each pattern the network is affine over a
  polytope, so label invariance reduces to linear programs.
- grid_falsify: exhaustive forward passes over a discretized ball. Finds
  counterexamples, proves nothing.

All three take the region (ball around x) intersected with the [0, 1]
input box, matching what the attacks project into.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import network as nn
from .errors import UnsupportedActivationError, WorkBudgetError
from .tensor import as_vec, snap_linf

ROBUST = "robust"
FALSIFIED = "falsified"
UNKNOWN = "unknown"

ENUM_HIDDEN_BUDGET = 16
LP_TOL = 1e-9
GRID_WORK_LIMIT = 1_000_000
RADIUS_RESOLUTION = 1e-3
CERTIFY_METHODS = ("ibp", "enumeration")


@dataclass(frozen=True)
class Certificate:
    status: str
    eps: float
    method: str
    witness: np.ndarray | None = None
    work: int = 0
    diagnostic: str | None = None

    def __post_init__(self):
        if self.status not in (ROBUST, FALSIFIED, UNKNOWN):
            raise ValueError(f"unknown status {self.status!r}")
        if (self.status == FALSIFIED) != (self.witness is not None):
            raise ValueError("witness must accompany falsified status, and only that")


def _falsified(net: nn.Network, x, eps, witness, method, work) -> Certificate:
    """Build a falsified certificate, re-checking the witness first."""
    witness = snap_linf(as_vec(witness, dim=net.input_dim), x, eps)
    if float(np.max(np.abs(witness - x))) > eps:
        raise ValueError("witness escapes the ball")
    if witness.min() < 0.0 or witness.max() > 1.0:
        raise ValueError("witness escapes the box")
    if nn.forward(net, witness).label == nn.forward(net, x).label:
        raise ValueError("witness does not change the label")
    return Certificate(
        status=FALSIFIED, eps=eps, method=method, witness=witness, work=work
    )


@dataclass(frozen=True)
class LayerBounds:
    """Interval enclosures per layer; index 0 of pre/post is the first
    layer's pre-activation over the input box."""

    input_lo: np.ndarray
    input_hi: np.ndarray
    pre_lo: tuple[np.ndarray, ...]
    pre_hi: tuple[np.ndarray, ...]
    post_lo: tuple[np.ndarray, ...]
    post_hi: tuple[np.ndarray, ...]

    def __post_init__(self):
        pairs = [(self.input_lo, self.input_hi)]
        pairs += list(zip(self.pre_lo, self.pre_hi))
        pairs += list(zip(self.post_lo, self.post_hi))
        for lo, hi in pairs:
            if np.any(lo > hi):
                raise ValueError("interval lower bound exceeds upper bound")

    @property
    def logit_lo(self) -> np.ndarray:
        return self.post_lo[-1]

    @property
    def logit_hi(self) -> np.ndarray:
        return self.post_hi[-1]


def _require_relu_identity(net: nn.Network) -> None:
    for layer in net.layers:
        if layer.activation not in ("relu", "identity"):
            raise UnsupportedActivationError(
                f"interval analysis supports relu/identity, got {layer.activation!r}"
            )


def _affine_interval(w, b, lo, hi):
    w_pos = np.clip(w, 0.0, None)
    w_neg = np.clip(w, None, 0.0)
    return w_pos @ lo + w_neg @ hi + b, w_pos @ hi + w_neg @ lo + b


def ibp_bounds(net: nn.Network, lo, hi) -> LayerBounds:
    """Propagate the input box through every layer with interval
    arithmetic; weights are split by sign for the affine step."""
    _require_relu_identity(net)
    lo = as_vec(lo, dim=net.input_dim)
    hi = as_vec(hi, dim=net.input_dim)
    if np.any(lo > hi):
        raise ValueError("input box has lo > hi")
    pre_lo, pre_hi, post_lo, post_hi = [], [], [], []
    cur_lo, cur_hi = lo, hi
    for layer in net.layers:
        p_lo, p_hi = _affine_interval(layer.weights, layer.bias, cur_lo, cur_hi)
        pre_lo.append(p_lo)
        pre_hi.append(p_hi)
        if layer.activation == "relu":
            cur_lo, cur_hi = np.maximum(p_lo, 0.0), np.maximum(p_hi, 0.0)
        else:
            cur_lo, cur_hi = p_lo, p_hi
        post_lo.append(cur_lo)
        post_hi.append(cur_hi)
    return LayerBounds(
        input_lo=lo,
        input_hi=hi,
        pre_lo=tuple(pre_lo),
        pre_hi=tuple(pre_hi),
        post_lo=tuple(post_lo),
        post_hi=tuple(post_hi),
    )


def _region(x: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    return np.maximum(x - eps, 0.0), np.minimum(x + eps, 1.0)


def certify_ibp(net: nn.Network, x, eps: float) -> Certificate:
    """Robust when the true logit's lower bound beats every rival's upper
    bound; otherwise Unknown. Never falsifies."""
    x = as_vec(x, dim=net.input_dim)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    label = nn.forward(net, x).label
    lo, hi = _region(x, eps)
    bounds = ibp_bounds(net, lo, hi)
    own_lo = bounds.logit_lo[label]
    rival_hi = np.delete(bounds.logit_hi, label)
    status = ROBUST if rival_hi.size == 0 or own_lo > rival_hi.max() else UNKNOWN
    return Certificate(status=status, eps=eps, method="ibp", work=1)


def _maximize(objective, const, g_rows, h_vals, var_bounds):
    """Max of objective . z + const over the polytope; returns (value, z)."""
    a_ub = np.asarray(g_rows) if g_rows else None
    b_ub = np.asarray(h_vals) if h_vals else None
    res = linprog(-objective, A_ub=a_ub, b_ub=b_ub, bounds=var_bounds, method="highs")
    if res.status == 2:
        return None
    if res.status != 0:
        raise RuntimeError(f"linear program failed with status {res.status}")
    return -res.fun + const, res.x


def _feasible(g_rows, h_vals, var_bounds) -> bool:
    zero = np.zeros(len(var_bounds))
    res = linprog(zero, A_ub=np.asarray(g_rows), b_ub=np.asarray(h_vals),
                  bounds=var_bounds, method="highs")
    return res.status != 2


def certify_enumeration(net: nn.Network, x, eps: float) -> Certificate:
    """Exact decision for tiny ReLU nets by activation-pattern search.

    Depth-first over layers: units whose pre-activation interval over the
    region is sign-fixed are not branched; each full layer assignment is
    kept only if its polytope is feasible. At a leaf the network is
    affine, and each rival logit gap is maximized by an LP; a gap above
    the 1e-9 tolerance yields a forward-checked witness.
    """
    _require_relu_identity(net)
    x = as_vec(x, dim=net.input_dim)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if net.hidden_unit_count > ENUM_HIDDEN_BUDGET:
        return Certificate(
            status=UNKNOWN,
            eps=eps,
            method="enumeration",
            diagnostic=(
                f"{net.hidden_unit_count} hidden units exceed the "
                f"enumeration budget of {ENUM_HIDDEN_BUDGET}"
            ),
        )
    for layer in net.layers[:-1]:
        if layer.activation != "relu":
            raise UnsupportedActivationError(
                f"enumeration needs relu hidden layers, got {layer.activation!r}"
            )

    label = nn.forward(net, x).label
    lo, hi = _region(x, eps)
    var_bounds = list(zip(lo.tolist(), hi.tolist()))
    hidden = net.layers[:-1]
    out = net.layers[-1]
    dim = x.size

    leaves = 0
    marginal = False
    witness_cert: Certificate | None = None

    def descend(idx, m, c, g_rows, h_vals):
        nonlocal leaves, marginal, witness_cert
        if idx == len(hidden):
            leaves += 1
            a = out.weights @ m
            d = out.weights @ c + out.bias
            for k in range(net.num_classes):
                if k == label:
                    continue
                res = _maximize(a[k] - a[label], d[k] - d[label], g_rows, h_vals, var_bounds)
                if res is None:
                    return False
                value, z = res
                # An exact tie already flips the argmax when the rival has
                # the lower index, so such rivals only need gap >= 0.
                threshold = -LP_TOL if k < label else LP_TOL
                if value > threshold:
                    try:
                        witness_cert = _falsified(net, x, eps, z, "enumeration", leaves)
                        return True
                    except ValueError:
                        marginal = True
            return False
        layer = hidden[idx]
        a = layer.weights @ m
        d = layer.weights @ c + layer.bias
        p_lo, p_hi = _affine_interval(a, 0.0, lo, hi)
        p_lo, p_hi = p_lo + d, p_hi + d
        signs = np.where(p_lo >= 0.0, 1.0, np.where(p_hi <= 0.0, 0.0, -1.0))
        unstable = np.flatnonzero(signs < 0)
        for bits in itertools.product((1.0, 0.0), repeat=unstable.size):
            s = signs.copy()
            s[unstable] = bits
            new_rows = list(g_rows)
            new_vals = list(h_vals)
            for i, on in zip(unstable, bits):
                if on:
                    new_rows.append(-a[i])
                    new_vals.append(d[i])
                else:
                    new_rows.append(a[i])
                    new_vals.append(-d[i])
            if unstable.size and not _feasible(new_rows, new_vals, var_bounds):
                continue
            if descend(idx + 1, s[:, None] * a, s * d, new_rows, new_vals):
                return True
        return False

    found = descend(0, np.eye(dim), np.zeros(dim), [], [])
    if found:
        return witness_cert
    if marginal:
        return Certificate(
            status=UNKNOWN,
            eps=eps,
            method="enumeration",
            work=leaves,
            diagnostic="rival logit gap within LP tolerance; cannot certify either way",
        )
    return Certificate(status=ROBUST, eps=eps, method="enumeration", work=leaves)


def _axis_values(center: float, eps: float, resolution: float) -> np.ndarray:
    k_max = int(np.floor(eps / resolution + 1e-9))
    offsets = np.arange(-k_max, k_max + 1) * resolution
    offsets = np.clip(offsets, -eps, eps)
    offsets = np.concatenate([offsets, [-eps, eps]])
    values = np.clip(center + offsets, 0.0, 1.0)
    return np.unique(snap_linf(values, center, eps))


def grid_falsify(net: nn.Network, x, eps: float, resolution: float) -> Certificate:
    """Exhaustive forward sweep over the discretized region; returns the
    lexicographically first counterexample, else Unknown."""
    x = as_vec(x, dim=net.input_dim)
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    label = nn.forward(net, x).label
    axes = [_axis_values(x[i], eps, resolution) for i in range(x.size)]
    total = 1
    for vals in axes:
        total *= vals.size
        if total > GRID_WORK_LIMIT:
            raise WorkBudgetError(
                f"grid of more than {GRID_WORK_LIMIT} points exceeds the work limit"
            )
    work = 0
    for point in itertools.product(*axes):
        work += 1
        z = np.array(point)
        if nn.forward(net, z).label != label:
            return _falsified(net, x, eps, z, "grid", work)
    return Certificate(status=UNKNOWN, eps=eps, method="grid", work=work)


def certified_radius(
    net: nn.Network, x, method: str = "ibp", resolution: float = RADIUS_RESOLUTION
) -> float:
    """Largest radius certified Robust by the chosen method, located by
    binary search at the given resolution (a lower bound on the truth)."""
    if method not in CERTIFY_METHODS:
        raise ValueError(f"method must be one of {CERTIFY_METHODS}")
    certify = certify_ibp if method == "ibp" else certify_enumeration
    x = as_vec(x, dim=net.input_dim)

    def robust(eps: float) -> bool:
        return certify(net, x, eps).status == ROBUST

    if not robust(0.0):
        return 0.0
    if robust(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if robust(mid):
            lo = mid
        else:
            hi = mid
    return lo
