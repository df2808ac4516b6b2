"""Forward evaluation, loss, gradients, training, and neuron coverage."""

import numpy as np
import pytest

import robustlab as rl
from robustlab.network import forward_trace, grad_params
from conftest import linear_net

import math


def test_forward_identity_network():
    net = linear_net(np.eye(2), np.zeros(2))
    pred = rl.forward(net, np.array([0.3, 0.8]))
    assert np.array_equal(pred.logits, np.array([0.3, 0.8]))
    assert pred.label == 1


def test_relu_activation_clamps_negatives():
    net = rl.Network(
        input_dim=2,
        num_classes=2,
        layers=(
            rl.Layer(weights=np.eye(2), bias=np.zeros(2), activation="relu"),
            rl.Layer(weights=np.eye(2), bias=np.zeros(2), activation="identity"),
        ),
    )
    _, post = forward_trace(net, np.array([-1.0, 2.0]))
    assert np.array_equal(post[0], np.array([0.0, 2.0]))


def test_argmax_tie_breaks_to_lowest_index():
    net = linear_net(np.zeros((2, 2)), np.array([3.0, 3.0]))
    assert rl.forward(net, np.array([0.1, 0.9])).label == 0


def test_probabilities_normalized():
    rng = rl.Rng(2)
    for trial in range(20):
        net = rl.init_network(3, [4], 3, rng=rl.Rng(200 + trial), scale=2.0)
        p = rl.forward(net, rng.uniform(0.0, 1.0, size=3)).probabilities
        assert abs(float(np.sum(p)) - 1.0) < 1e-9
        assert np.all(p >= 0.0) and np.all(p <= 1.0)


def test_label_invariant_under_positive_logit_scaling():
    rng = rl.Rng(9)
    for trial in range(20):
        W = rng.normal(size=6, scale=1.5).reshape(2, 3)
        b = rng.normal(size=2)
        x = rng.uniform(0.0, 1.0, size=3)
        for c in (0.5, 2.0, 10.0):
            assert (
                rl.forward(linear_net(W, b), x).label
                == rl.forward(linear_net(c * W, c * b), x).label
            )


def test_forward_dim_mismatch():
    net = linear_net(np.eye(2), np.zeros(2))
    with pytest.raises(rl.DimensionError):
        rl.forward(net, np.array([0.1, 0.2, 0.3]))


def test_loss_perfect_confidence_is_zero():
    # drive one logit far above the rest; the clamped log saturates at 0
    net = linear_net(np.zeros((2, 1)), np.array([60.0, 0.0]))
    assert rl.loss(net, np.array([0.5]), 0) == 0.0


def test_loss_uniform_probabilities():
    for k in (2, 3, 5):
        net = linear_net(np.zeros((k, 2)), np.zeros(k))
        got = rl.loss(net, np.array([0.3, 0.4]), k - 1)
        assert abs(got - math.log(k)) < 1e-12


def test_loss_matches_direct_formula():
    rng = rl.Rng(11)
    for trial in range(30):
        net = rl.init_network(2, [5], 3, rng=rl.Rng(400 + trial), scale=2.0)
        x = rng.uniform(0.0, 1.0, size=2)
        y = int(rng.integers(0, 3))
        logits = rl.forward(net, x).logits
        z = logits - np.max(logits)
        probs = np.exp(z) / np.sum(np.exp(z))
        want = -math.log(max(float(probs[y]), 1e-12))
        assert abs(rl.loss(net, x, y) - want) < 1e-12


def test_loss_invalid_class():
    net = linear_net(np.eye(2), np.zeros(2))
    with pytest.raises((rl.DimensionError, IndexError, ValueError)):
        rl.loss(net, np.array([0.1, 0.2]), 5)


def test_grad_input_single_weight_closed_form():
    # logits (w*x, 0) with one input: dL/dx = (p0 - [y==0]) * w
    w = 1.7
    net = linear_net(np.array([[w], [0.0]]), np.zeros(2))
    x = np.array([0.4])
    p0 = rl.forward(net, x).probabilities[0]
    for y, indicator in ((0, 1.0), (1, 0.0)):
        g = rl.grad_input(net, x, y)
        assert abs(g[0] - (p0 - indicator) * w) < 1e-12


def test_grad_input_matches_finite_differences_sigmoid():
    h = 1e-5
    for trial in range(20):
        net = rl.init_network(3, [5, 4], 3, rng=rl.Rng(500 + trial), scale=1.5,
                              activation="sigmoid")
        x = rl.Rng(550 + trial).uniform(0.1, 0.9, size=3)
        y = int(rl.Rng(560 + trial).integers(0, 3))
        g = rl.grad_input(net, x, y)
        fd = np.zeros_like(g)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd[j] = (rl.loss(net, x + e, y) - rl.loss(net, x - e, y)) / (2 * h)
        rel = rl.norm(g - fd, "l2") / max(rl.norm(fd, "l2"), 1e-12)
        assert rel < 1e-5


def test_logit_gradient_constant_within_linear_region():
    net = rl.init_network(2, [6], 2, rng=rl.Rng(77), scale=2.0)
    x = np.array([0.43, 0.61])
    h = 1e-6

    def pattern(p):
        pre, _ = forward_trace(net, p)
        return tuple(tuple(z > 0) for z in pre[:-1])

    g0 = rl.grad_logit(net, x, 0)
    moved = 0
    for delta in (np.array([h, 0.0]), np.array([0.0, h]), np.array([-h, h])):
        if pattern(x + delta) == pattern(x):
            # same activation pattern, same masks, identical gradient
            assert np.array_equal(rl.grad_logit(net, x + delta, 0), g0)
            moved += 1
    assert moved >= 1


def test_relu_network_affine_within_pattern():
    rng = rl.Rng(21)
    checked = 0
    for trial in range(40):
        net = rl.init_network(2, [5], 2, rng=rl.Rng(600 + trial), scale=2.0)
        a = rng.uniform(0.0, 1.0, size=2)
        b = a + rng.uniform(-0.02, 0.02, size=2)
        mid = 0.5 * (a + b)

        def pat(p):
            pre, _ = forward_trace(net, p)
            return tuple(tuple(z > 0) for z in pre[:-1])

        if pat(a) == pat(b) == pat(mid):
            la = rl.forward(net, a).logits
            lb = rl.forward(net, b).logits
            lm = rl.forward(net, mid).logits
            assert rl.norm(lm - 0.5 * (la + lb), "linf") < 1e-9
            checked += 1
    assert checked >= 10


def test_grad_params_finite_difference_spotcheck():
    net = rl.init_network(2, [4], 2, rng=rl.Rng(31), scale=1.5, activation="sigmoid")
    x = np.array([0.35, 0.65])
    y = 1
    grads = grad_params(net, x, y)
    h = 1e-6
    # three handpicked parameters: two weights and one bias
    spots = [(0, "w", (1, 0)), (1, "w", (0, 2)), (0, "b", 1)]
    for li, kind, idx in spots:
        layers = [
            rl.Layer(weights=l.weights.copy(), bias=l.bias.copy(), activation=l.activation)
            for l in net.layers
        ]
        if kind == "w":
            layers[li].weights[idx] += h
        else:
            layers[li].bias[idx] += h
        bumped = rl.Network(input_dim=2, num_classes=2, layers=tuple(layers))
        fd = (rl.loss(bumped, x, y) - rl.loss(net, x, y)) / h
        got = grads[li][0][idx] if kind == "w" else grads[li][1][idx]
        assert abs(got - fd) / max(abs(fd), 1e-8) < 1e-4


def test_grad_params_linear_in_duplicated_points():
    # summed-loss gradient over a duplicated point is exactly twice the
    # single-point gradient, and a fresh array object changes nothing
    net = rl.init_network(2, [4], 2, rng=rl.Rng(32), scale=1.5)
    x = np.array([0.3, 0.7])
    g_once = grad_params(net, x, 0)
    g_copy = grad_params(net, x.copy(), 0)
    for (gw, gb), (cw, cb) in zip(g_once, g_copy):
        assert np.array_equal(gw, cw) and np.array_equal(gb, cb)
        assert np.array_equal(gw + cw, 2.0 * gw)
        assert np.array_equal(gb + cb, 2.0 * gb)


def test_gradients_vanish_after_convergence():
    data = rl.blobs(40, seed=7)
    net = rl.train(
        rl.init_network(2, [], 2, rng=rl.Rng(3), scale=1.0),
        data,
        epochs=3000,
        learning_rate=2.0,
    )
    assert rl.accuracy(net, data) == 1.0
    per_sample = [grad_params(net, x, y) for x, y in data]
    for li in range(len(net.layers)):
        gw = np.mean([g[li][0] for g in per_sample], axis=0)
        gb = np.mean([g[li][1] for g in per_sample], axis=0)
        assert rl.norm(gw.ravel(), "l2") < 1e-3
        assert rl.norm(gb, "l2") < 1e-3


def test_train_single_linear_layer_separates_blobs():
    data = rl.blobs(40, seed=7)
    net = rl.train(
        rl.init_network(2, [], 2, rng=rl.Rng(3), scale=1.0),
        data,
        epochs=500,
        learning_rate=0.5,
    )
    assert rl.accuracy(net, data) >= 0.95


def test_train_zero_epochs_is_identity():
    data = rl.blobs(10, seed=1)
    net = rl.init_network(2, [4], 2, rng=rl.Rng(5), scale=2.0)
    out = rl.train(net, data, epochs=0, learning_rate=0.5)
    for a, b in zip(out.layers, net.layers):
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)


def test_train_deterministic():
    data = rl.blobs(16, seed=2)
    a = rl.train(rl.init_network(2, [4], 2, rng=rl.Rng(6), scale=2.0), data,
                 epochs=50, learning_rate=0.5)
    b = rl.train(rl.init_network(2, [4], 2, rng=rl.Rng(6), scale=2.0), data,
                 epochs=50, learning_rate=0.5)
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.weights, lb.weights)
        assert np.array_equal(la.bias, lb.bias)


def test_train_empty_dataset_rejected():
    net = rl.init_network(2, [4], 2, rng=rl.Rng(6), scale=2.0)
    with pytest.raises((ValueError, rl.DimensionError)):
        rl.train(net, rl.LabeledDataset(inputs=(), labels=()), epochs=1,
                 learning_rate=0.5)


def _coverage_net(bias):
    """One 2-unit hidden ReLU layer with zero weights plus identity head."""
    return rl.Network(
        input_dim=2,
        num_classes=2,
        layers=(
            rl.Layer(weights=np.zeros((2, 2)), bias=np.asarray(bias, dtype=float),
                     activation="relu"),
            rl.Layer(weights=np.eye(2), bias=np.zeros(2), activation="identity"),
        ),
    )


def test_neuron_coverage_hand_case():
    net = _coverage_net([1.0, -1.0])
    got = rl.neuron_coverage(net, [np.array([0.2, 0.9])], threshold=0.0)
    assert got == 0.5


def test_neuron_coverage_threshold_above_everything():
    net = _coverage_net([1.0, -1.0])
    assert rl.neuron_coverage(net, [np.array([0.2, 0.9])], threshold=5.0) == 0.0


def test_neuron_coverage_monotone_in_input_set():
    net = rl.init_network(2, [6], 2, rng=rl.Rng(44), scale=2.0)
    rng = rl.Rng(45)
    xs_a = [rng.uniform(0.0, 1.0, size=2) for _ in range(3)]
    xs_b = [rng.uniform(0.0, 1.0, size=2) for _ in range(3)]
    ca = rl.neuron_coverage(net, xs_a, threshold=0.1)
    cb = rl.neuron_coverage(net, xs_b, threshold=0.1)
    cu = rl.neuron_coverage(net, xs_a + xs_b, threshold=0.1)
    assert cu >= max(ca, cb)


def test_neuron_coverage_monotone_in_threshold():
    net = rl.init_network(2, [6], 2, rng=rl.Rng(46), scale=2.0)
    xs = [rl.Rng(47).uniform(0.0, 1.0, size=2) for _ in range(5)]
    covs = [rl.neuron_coverage(net, xs, threshold=t) for t in (0.0, 0.2, 0.5, 1.0)]
    assert all(a >= b for a, b in zip(covs, covs[1:]))


def test_neuron_coverage_needs_hidden_units():
    net = linear_net(np.eye(2), np.zeros(2))
    with pytest.raises(rl.CoverageUndefinedError):
        rl.neuron_coverage(net, [np.array([0.5, 0.5])], threshold=0.0)
