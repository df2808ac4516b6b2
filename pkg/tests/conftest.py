"""Shared fixtures and helpers for the test suite.

The expensive trained models are session-scoped so the module tests and
the acceptance campaign reuse the same deterministic artifacts instead
of retraining them per test.
"""

import numpy as np
import pytest

import robustlab as rl


def linear_net(W, b, activation="identity"):
    """Single-layer network computing logits = W x + b."""
    W = np.asarray(W, dtype=float)
    b = np.asarray(b, dtype=float)
    return rl.Network(
        input_dim=W.shape[1],
        num_classes=W.shape[0],
        layers=(rl.Layer(weights=W, bias=b, activation=activation),),
    )


def binary_margin_net(w, b):
    """Two-class net with logits (w.x + b, 0): label flips at w.x + b = 0."""
    w = np.asarray(w, dtype=float)
    return linear_net(np.vstack([w, np.zeros_like(w)]), np.array([float(b), 0.0]))


@pytest.fixture(scope="session")
def moons_model():
    data = rl.two_moons(40, seed=7)
    net = rl.train(
        rl.init_network(2, [8], 2, rng=rl.Rng(3), scale=2.0),
        data,
        epochs=300,
        learning_rate=0.5,
    )
    return net, data


@pytest.fixture(scope="session")
def blob_oracle():
    """A trained two-blob classifier used as the hidden query target."""
    data = rl.blobs(40, seed=7)
    net = rl.train(
        rl.init_network(2, [8], 2, rng=rl.Rng(3), scale=2.0),
        data,
        epochs=300,
        learning_rate=0.5,
    )
    return net, data


@pytest.fixture(scope="session")
def lattice_substitute(blob_oracle):
    """Substitute trained against the blob oracle from 20 lattice seeds.

    The seed points form a 5x4 lattice spanning the data region so the
    substitute is constrained everywhere a held-out grid will probe.
    """
    oracle_net, _ = blob_oracle
    seeds = [
        np.array([a, b])
        for a in np.linspace(0.1, 0.9, 5)
        for b in np.linspace(0.1, 0.9, 4)
    ]
    oracle = rl.QueryOracle(oracle_net, mode=rl.LABEL_ONLY)
    sub, queries = rl.train_substitute(
        oracle, seeds, rl.SubstituteConfig(rounds=5, seed=0)
    )
    return sub, queries, seeds


@pytest.fixture(scope="session")
def training_pair():
    """Plain vs adversarially trained nets on the same blobs task.

    Same initialization, epochs, and learning rate; only the inner
    perturbation budget differs.
    """
    data = rl.blobs(30, seed=5)
    net0 = rl.init_network(2, [8], 2, rng=rl.Rng(1), scale=2.0)
    plain = rl.train(net0, data, epochs=200, learning_rate=0.5)
    adv = rl.adversarial_train(
        net0,
        data,
        rl.AttackBudget(eps=0.1, steps=10),
        epochs=200,
        learning_rate=0.5,
        seed=5,
    )
    return net0, plain, adv, data
