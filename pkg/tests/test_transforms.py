"""Parametric transforms, their sampling, and gradient pullbacks."""

import numpy as np
import pytest

import robustlab as rl
from robustlab.transforms import SampledTransform


def test_identity_family_is_identity():
    fam = rl.identity_family(4, seed=0)
    ts = fam.sample(3)
    x = np.array([0.2, 0.5, 0.9])
    assert len(ts) == 4
    for t in ts:
        assert np.array_equal(t.apply(x), x)


def test_family_sampling_deterministic():
    kinds = (
        rl.TransformKind("brightness", lo=0.8, hi=1.2),
        rl.TransformKind("noise", magnitude=0.05),
    )
    a = rl.TransformFamily(kinds=kinds, samples=16, seed=9).sample(2)
    b = rl.TransformFamily(kinds=kinds, samples=16, seed=9).sample(2)
    for ta, tb in zip(a, b):
        assert ta.kind == tb.kind
        assert ta.gamma == tb.gamma
        if ta.offset is not None:
            assert np.array_equal(ta.offset, tb.offset)


def test_transforms_map_box_into_box():
    kinds = (
        rl.TransformKind("brightness", lo=0.0, hi=2.0),
        rl.TransformKind("noise", magnitude=0.5),
        rl.TransformKind("shift", max_shift=2),
    )
    ts = rl.TransformFamily(kinds=kinds, samples=40, seed=1).sample(4)
    rng = rl.Rng(2)
    for t in ts:
        for _ in range(5):
            out = t.apply(rng.uniform(0.0, 1.0, size=4))
            assert np.all(out >= 0.0) and np.all(out <= 1.0)


def test_brightness_hand_case():
    t = SampledTransform("brightness", gamma=0.5)
    assert np.array_equal(t.apply(np.array([0.4, 1.0])), np.array([0.2, 0.5]))


def test_brightness_clips():
    t = SampledTransform("brightness", gamma=3.0)
    out = t.apply(np.array([0.5, 0.1]))
    assert out[0] == 1.0
    assert out[1] == 3.0 * 0.1


def test_shift_rolls_coordinates():
    t = SampledTransform("shift", shift=1)
    assert np.array_equal(t.apply(np.array([0.1, 0.2, 0.3])),
                          np.array([0.3, 0.1, 0.2]))


def test_vjp_matches_finite_differences_when_unclipped():
    # scalar probe h(t(x)) = g . t(x); its x-gradient is the vjp of g
    kinds = (
        rl.TransformKind("brightness", lo=0.6, hi=0.9),
        rl.TransformKind("noise", magnitude=0.05),
        rl.TransformKind("shift", max_shift=1),
    )
    ts = rl.TransformFamily(kinds=kinds, samples=12, seed=4).sample(3)
    g = np.array([0.7, -1.3, 0.4])
    x = np.array([0.3, 0.5, 0.6])
    h = 1e-7
    for t in ts:
        raw_interior = True
        if t.kind == "brightness":
            raw_interior = np.all((t.gamma * x > 0.0) & (t.gamma * x < 1.0))
        elif t.kind == "noise":
            raw = x + t.offset
            raw_interior = np.all((raw > 0.0) & (raw < 1.0))
        if not raw_interior:
            continue
        got = t.vjp(x, g)
        fd = np.zeros(3)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd[j] = (g @ t.apply(x + e) - g @ t.apply(x - e)) / (2 * h)
        assert rl.norm(got - fd, "linf") < 1e-6


def test_vjp_zero_on_clipped_coordinates():
    t = SampledTransform("brightness", gamma=3.0)
    x = np.array([0.5, 0.1])  # first coordinate clips at 1.0
    out = t.vjp(x, np.array([1.0, 1.0]))
    assert out[0] == 0.0
    assert out[1] == 3.0


def test_family_requires_kinds_and_samples():
    with pytest.raises(ValueError):
        rl.TransformFamily(kinds=(), samples=4, seed=0)
    with pytest.raises(ValueError):
        rl.TransformFamily(kinds=(rl.TransformKind("identity"),), samples=0, seed=0)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        rl.TransformKind("rotate")


def test_brightness_range_validated():
    with pytest.raises(ValueError):
        rl.TransformKind("brightness", lo=1.5, hi=0.5)
