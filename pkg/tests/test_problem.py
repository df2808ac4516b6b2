"""Constraint-triple construction, the three checks, and full verdicts.

A robustness question is a conjunction of three constraints over a
candidate point: admissibility, bounded (or forced) distance from the
anchor, and a behavioral target. These tests pin the semantics of each
piece and of their conjunction.
"""

import numpy as np
import pytest

import robustlab as rl
from robustlab.problem import check_distance, check_target, eval_mu
from conftest import binary_margin_net, linear_net


def box_linf_problem(alpha, target=None, mode="decision"):
    return rl.RobustnessProblem(
        admissible=rl.Box(0.0, 1.0),
        distance=rl.DistanceConstraint(rl.LpDistance("linf"), alpha),
        target=target if target is not None else rl.Untargeted(),
        mode=mode,
    )


# ---------------------------------------------------------------- admissible


def test_box_contains_interior_point():
    assert rl.check_admissible(rl.Box(0.0, 1.0), np.array([0.5, 0.5]))


def test_box_rejects_boundary_overshoot():
    assert not rl.check_admissible(rl.Box(0.0, 1.0), np.array([1.0 + 1e-6, 0.0]))


def test_box_boundary_is_inclusive():
    assert rl.check_admissible(rl.Box(0.0, 1.0), np.array([1.0, 0.0]))


def test_box_requires_ordered_bounds():
    with pytest.raises(rl.InvalidBoxError):
        rl.Box(1.0, 0.0)


def test_finite_set_membership():
    x = np.array([0.25, 0.75])
    fs = rl.FiniteSet(points=(x,))
    assert rl.check_admissible(fs, x)
    assert rl.check_admissible(fs, x + 1e-13)
    assert not rl.check_admissible(fs, x + 1e-6)


def test_finite_set_must_be_nonempty():
    with pytest.raises(ValueError):
        rl.FiniteSet(points=())


def test_transform_orbit_is_producer_tagged():
    fam = rl.identity_family(2, seed=0)
    base = np.array([0.4, 0.6])
    orbit = rl.TransformOrbit(base=base, family=fam)
    produced = fam.sample(2)[0].apply(base)
    orbit.register(produced)
    assert rl.check_admissible(orbit, produced)
    assert not rl.check_admissible(orbit, produced + 0.05)


# ------------------------------------------------------------------ distance


def test_eval_mu_identity_of_indiscernibles():
    x = np.array([0.3, 0.3])
    assert eval_mu(rl.LpDistance("l2"), x, x) == 0.0


def test_eval_mu_linf_hand_value():
    got = eval_mu(rl.LpDistance("linf"), np.zeros(2), np.array([0.1, -0.05]))
    assert got == pytest.approx(0.1, abs=1e-15)


def test_eval_mu_symmetry_random_pairs():
    rng = rl.Rng(17)
    for _ in range(30):
        a = rng.uniform(0.0, 1.0, size=4)
        b = rng.uniform(0.0, 1.0, size=4)
        for p in ("l0", "l1", "l2", "linf"):
            mu = rl.LpDistance(p)
            assert eval_mu(mu, a, b) == eval_mu(mu, b, a)


def test_expected_transformed_distance_identity_collapses_to_l2():
    mu = rl.ExpectedTransformedDistance(rl.identity_family(8, seed=0), "l2")
    rng = rl.Rng(18)
    for _ in range(20):
        a = rng.uniform(0.0, 1.0, size=3)
        b = rng.uniform(0.0, 1.0, size=3)
        assert eval_mu(mu, a, b) == rl.norm(b - a, "l2")


def test_expected_transformed_distance_deterministic():
    fam = rl.TransformFamily(
        kinds=(rl.TransformKind("brightness", lo=0.7, hi=1.3),), samples=64, seed=3
    )
    mu = rl.ExpectedTransformedDistance(fam, "l2")
    a = np.array([0.3, 0.6])
    b = np.array([0.42, 0.51])
    assert eval_mu(mu, a, b) == eval_mu(mu, a, b)


def test_expected_transformed_distance_sample_doubling_stable():
    # doubling the draw count moves the estimate by < 3 standard errors
    kinds = (rl.TransformKind("brightness", lo=0.7, hi=1.3),)
    a = np.array([0.3, 0.6])
    b = np.array([0.42, 0.51])
    ts = rl.TransformFamily(kinds=kinds, samples=64, seed=3).sample(2)
    ds = [rl.norm(t.apply(b) - t.apply(a), "l2") for t in ts]
    se = float(np.std(ds, ddof=1) / np.sqrt(len(ds)))
    m64 = eval_mu(rl.ExpectedTransformedDistance(
        rl.TransformFamily(kinds=kinds, samples=64, seed=3), "l2"), a, b)
    m128 = eval_mu(rl.ExpectedTransformedDistance(
        rl.TransformFamily(kinds=kinds, samples=128, seed=3), "l2"), a, b)
    assert abs(m128 - m64) < 3.0 * se


def test_distance_constraint_boundary_inclusive():
    dc = rl.DistanceConstraint(rl.LpDistance("linf"), 0.1)
    x = np.zeros(2)
    assert check_distance(dc, x, x + np.array([0.1, 0.0]))


def test_distance_constraint_zero_alpha_same_point():
    dc = rl.DistanceConstraint(rl.LpDistance("l2"), 0.0)
    x = np.array([0.4, 0.4])
    assert check_distance(dc, x, x)


def test_distance_constraint_rejects_larger_perturbation():
    dc = rl.DistanceConstraint(rl.LpDistance("l2"), 0.05)
    x = np.zeros(2)
    assert not check_distance(dc, x, x + np.array([0.1, 0.0]))


def test_distance_constraint_at_least_relation():
    dc = rl.DistanceConstraint(rl.LpDistance("l2"), 0.5, relation=">=")
    x = np.zeros(2)
    assert check_distance(dc, x, x + np.array([0.6, 0.0]))
    assert not check_distance(dc, x, x + np.array([0.1, 0.0]))


def test_distance_constraint_negative_alpha_rejected():
    with pytest.raises(ValueError):
        rl.DistanceConstraint(rl.LpDistance("linf"), -0.1)


def test_at_most_monotone_in_alpha():
    x = np.zeros(2)
    cand = np.array([0.07, -0.02])
    results = [
        check_distance(rl.DistanceConstraint(rl.LpDistance("linf"), a), x, cand)
        for a in (0.01, 0.05, 0.07, 0.1, 0.5)
    ]
    # once true it stays true as alpha grows
    for earlier, later in zip(results, results[1:]):
        assert later >= earlier


# -------------------------------------------------------------------- target


def test_untargeted_same_point_fails():
    net = binary_margin_net([1.0, -1.0], 0.0)
    x = np.array([0.8, 0.2])
    assert not check_target(net, rl.Untargeted(), x, x)


def test_untargeted_true_on_label_flip():
    net = binary_margin_net([1.0, -1.0], 0.0)
    assert check_target(net, rl.Untargeted(), np.array([0.8, 0.2]),
                        np.array([0.2, 0.8]))


def test_targeted_requires_label_change():
    net = binary_margin_net([1.0, -1.0], 0.0)
    x = np.array([0.8, 0.2])
    y = rl.forward(net, x).label
    # asking for the anchor's own label can never count as a failure
    assert not check_target(net, rl.Targeted(y), x, x)


def test_targeted_true_when_candidate_hits_target():
    net = binary_margin_net([1.0, -1.0], 0.0)
    x = np.array([0.8, 0.2])
    y_t = 1 - rl.forward(net, x).label
    cand = np.array([0.2, 0.8])
    assert rl.forward(net, cand).label == y_t
    assert check_target(net, rl.Targeted(y_t), x, cand)


def test_loss_at_least_zero_always_holds():
    net = binary_margin_net([1.0, -1.0], 0.0)
    x = np.array([0.8, 0.2])
    assert check_target(net, rl.LossAtLeast(0.0), x, x)


def test_loss_at_least_threshold():
    net = binary_margin_net([2.0, 0.0], 0.0)
    x = np.array([0.9, 0.5])
    cand = np.array([0.1, 0.5])
    achieved = rl.loss(net, cand, rl.forward(net, x).label)
    assert check_target(net, rl.LossAtLeast(achieved), x, cand)
    assert not check_target(net, rl.LossAtLeast(achieved + 1e-9), x, cand)


def test_loss_at_least_negative_beta_rejected():
    with pytest.raises(ValueError):
        rl.LossAtLeast(-1.0)


def test_coverage_target():
    net = rl.init_network(2, [6], 2, rng=rl.Rng(50), scale=2.0)
    x = np.array([0.5, 0.5])
    cand = np.array([0.6, 0.4])
    cov = rl.neuron_coverage(net, [cand], threshold=0.0)
    assert check_target(net, rl.CoverageAtLeast(cov, threshold=0.0), x, cand)
    assert not check_target(net, rl.CoverageAtLeast(cov + 0.01, threshold=0.0), x, cand)


def test_invariance_violation_is_label_flip():
    net = binary_margin_net([1.0, -1.0], 0.0)
    x = np.array([0.8, 0.2])
    assert check_target(net, rl.InvarianceViolation(), x, np.array([0.2, 0.8]))
    assert not check_target(net, rl.InvarianceViolation(), x, x)


def test_expected_target_log_prob():
    net = binary_margin_net([4.0, 0.0], -2.0)
    fam = rl.identity_family(4, seed=0)
    x = np.array([0.9, 0.5])
    cand = np.array([0.1, 0.5])
    y_t = rl.forward(net, cand).label
    lp = float(np.log(rl.forward(net, cand).probabilities[y_t]))
    tb = rl.ExpectedTargetLogProbAtLeast(y_t, lp - 1e-9, fam)
    assert check_target(net, tb, x, cand)
    tb_hi = rl.ExpectedTargetLogProbAtLeast(y_t, lp + 1e-6, fam)
    assert not check_target(net, tb_hi, x, cand)


# ------------------------------------------------------------------ verdicts


def test_verdict_conjunction_and_no_short_circuit():
    net = binary_margin_net([1.0, -1.0], 0.0)
    x = np.array([0.8, 0.2])
    problem = box_linf_problem(2.0).with_anchor(x)
    # candidate outside the box but within distance and target-flipping:
    # admissibility fails alone, yet mu and target are still evaluated
    cand = np.array([-0.2, 0.9])
    v = rl.evaluate(problem, net, cand)
    assert not v.admissible_ok
    assert v.distance_ok
    assert v.target_ok
    assert not v.overall
    assert v.mu_value == rl.norm(cand - x, "linf")


def test_verdict_same_point_untargeted_false():
    net = binary_margin_net([1.0, -1.0], 0.0)
    x = np.array([0.8, 0.2])
    problem = box_linf_problem(0.5).with_anchor(x)
    v = rl.evaluate(problem, net, x)
    assert v.admissible_ok and v.distance_ok
    assert not v.target_ok
    assert not v.overall


def test_verdict_overall_implies_each_check():
    net = binary_margin_net([1.0, -1.0], 0.0)
    rng = rl.Rng(99)
    problem = box_linf_problem(1.0).with_anchor(np.array([0.8, 0.2]))
    hits = 0
    for _ in range(50):
        cand = rng.uniform(-0.2, 1.2, size=2)
        v = rl.evaluate(problem, net, cand)
        if v.overall:
            hits += 1
            assert v.admissible_ok and v.distance_ok and v.target_ok
    assert hits > 0


def test_problem_anchor_required_for_evaluation():
    net = binary_margin_net([1.0, -1.0], 0.0)
    problem = box_linf_problem(0.5)
    with pytest.raises(ValueError):
        rl.evaluate(problem, net, np.array([0.5, 0.5]))


def test_with_alpha_and_with_beta_rebind():
    p = box_linf_problem(0.5, target=rl.LossAtLeast(1.0))
    assert p.with_alpha(0.25).distance.alpha == 0.25
    assert p.with_beta(2.5).target.beta == 2.5


def test_invalid_mode_rejected():
    with pytest.raises(ValueError):
        rl.RobustnessProblem(
            admissible=rl.Box(0.0, 1.0),
            distance=rl.DistanceConstraint(rl.LpDistance("linf"), 0.1),
            target=rl.Untargeted(),
            mode="maximize-alpha",
        )


def test_custom_distance():
    mu = rl.CustomDistance("half-l1", lambda a, b: 0.5 * rl.norm(b - a, "l1"))
    got = eval_mu(mu, np.zeros(2), np.array([0.2, 0.4]))
    assert got == pytest.approx(0.3, abs=1e-15)
