"""Certified CC-distance machinery: bounds, witnesses, invariances.

The vertical Heisenberg distance is frozen against an independent
isoperimetric oracle (shortest planar loop of prescribed signed area).
"""

import numpy as np
import pytest

from carnot import catalog
from carnot.errors import InputError, UnreachableError
from carnot.group import dilate
from carnot.metric import (
    BallBoxConstant,
    CCSpace,
    ControlPath,
    HorizontalMetric,
    OptimizerBudget,
    calibrate_ballbox,
    cc_lower_abelian,
    cc_lower_ballbox,
    cc_upper,
    cc_upper_batch,
    close_defect_batch,
    estimate_distance,
    path_endpoint,
    radial_geodesic,
)

from oracles import min_loop_length

FAST = OptimizerBudget(segments=8, starts=2, endpoint_tol=1e-7,
                       penalty_init=1e4, penalty_growth=100.0,
                       penalty_max=1e10, max_iter=150, gtol=1e-10)


def test_horizontal_metric_validation():
    with pytest.raises(InputError):
        HorizontalMetric(np.array([[1.0, 2.0], [0.0, 1.0]]))  # asymmetric
    with pytest.raises(InputError):
        HorizontalMetric(np.array([[1.0, 0.0], [0.0, -1.0]]))  # not PD
    m = HorizontalMetric(np.diag([4.0, 1.0]))
    assert m.norm(np.array([1.0, 0.0])) == 2.0


def test_radial_geodesic_distance(heis):
    v = np.array([3.0, 4.0, 0.0])
    p = radial_geodesic(heis, np.zeros(3), v, 1.0)
    est = estimate_distance(heis, np.zeros(3), p, budget=FAST)
    # radial geodesics realize the distance: both bounds pin |v| = 5
    assert est.lower == pytest.approx(5.0, abs=1e-12)
    assert est.upper == pytest.approx(5.0, rel=1e-6)
    assert est.upper >= 5.0 - 1e-12
    with pytest.raises(InputError):
        radial_geodesic(heis, np.zeros(3), np.array([0.0, 0.0, 1.0]), 1.0)


def test_vertical_distance_matches_isoperimetric_oracle(heis):
    # frozen oracle value: sqrt(4 pi) = 3.544908; loop with area 1
    oracle = min_loop_length(1.0)
    assert oracle == pytest.approx(np.sqrt(4 * np.pi), rel=1e-3)
    est = cc_upper(heis, np.zeros(3), np.array([0.0, 0.0, 1.0]),
                   budget=OptimizerBudget(segments=64))
    assert est.upper == pytest.approx(np.sqrt(4 * np.pi), rel=0.01)
    assert est.upper >= np.sqrt(4 * np.pi) - 1e-9  # certified upper bound


def test_witness_is_feasible(heis, rng):
    target = rng.standard_normal(3)
    est = cc_upper(heis, np.zeros(3), target, budget=FAST)
    end = est.witness.endpoint(heis)
    assert np.allclose(end, target, atol=1e-8)
    assert est.witness.length(heis) == pytest.approx(est.upper, rel=1e-12)


def test_control_path_reparametrization(heis, rng):
    path = ControlPath(
        durations=rng.uniform(0.1, 1.0, 5),
        controls=rng.standard_normal((5, 2)),
        basepoint=rng.standard_normal(3),
    )
    fixed = path.constant_speed()
    assert np.allclose(fixed.endpoint(heis), path.endpoint(heis), atol=1e-12)
    assert fixed.length(heis) == pytest.approx(path.length(heis))
    speeds = heis.metric.norm(fixed.controls)
    assert np.allclose(speeds, speeds[0])
    back = fixed.reversed(heis)
    assert np.allclose(back.endpoint(heis), path.basepoint, atol=1e-10)


def test_square_loop_closure_exact(heis):
    # closing a pure e^Z defect costs exactly 4 (unit commutator square)
    endpoints = np.zeros((1, 3))
    targets = np.array([[0.0, 0.0, 1.0]])
    extra, closed, res, _ = close_defect_batch(heis, endpoints, targets)
    assert extra[0] == pytest.approx(4.0, rel=1e-12)
    assert res[0] < 1e-12
    assert np.allclose(closed, targets, atol=1e-12)


def test_ladder_closure_engel_exact(engel_space):
    # step 3: defects in every layer close exactly in few passes
    targets = np.array([[0.3, -0.2, 0.15, -0.4]])
    endpoints = np.zeros((1, 4))
    extra, closed, res, _ = close_defect_batch(engel_space, endpoints, targets)
    assert res[0] < 1e-10
    assert np.allclose(closed, targets, atol=1e-10)
    assert extra[0] > 0


def test_lower_bounds(heis, heis_ballbox):
    x = np.zeros(3)
    y = np.array([0.6, -0.8, 0.0])
    assert cc_lower_abelian(heis, x, y) == pytest.approx(1.0)
    z = np.array([0.0, 0.0, 1.0])
    assert cc_lower_abelian(heis, x, z) == 0.0
    bb = cc_lower_ballbox(heis, x, z, heis_ballbox)
    assert 0 < bb <= np.sqrt(4 * np.pi)


def test_ballbox_constant_calibration(heis_ballbox):
    assert heis_ballbox.A >= 1.0
    assert heis_ballbox.max_ratio <= heis_ballbox.A
    assert heis_ballbox.as_dict()["samples"] == 150


def test_lower_never_exceeds_upper(heis, heis_ballbox, rng):
    pts = rng.standard_normal((200, 3))
    upper, _ = cc_upper_batch(heis, pts, budget=FAST, seed=1)
    from carnot.metric import _lower_bounds_batch
    lower, _ = _lower_bounds_batch(heis, pts, heis_ballbox)
    assert np.all(lower <= upper * (1 + 1e-9))


def test_triangle_inequality_certified(heis, rng):
    # lower(x,z) <= upper(x,y) + upper(y,z) holds for the true metric
    xs = rng.standard_normal((50, 3))
    ys = rng.standard_normal((50, 3))
    dxy = np.array([
        estimate_distance(heis, x, y, budget=FAST, seed=2).upper
        for x, y in zip(xs, ys)
    ])
    dyz = np.array([
        estimate_distance(heis, y, np.zeros(3), budget=FAST, seed=2).upper
        for y in ys
    ])
    dxz_lower = np.array([cc_lower_abelian(heis, x, np.zeros(3)) for x in xs])
    assert np.all(dxz_lower <= dxy + dyz + 1e-9)


def test_left_invariance(heis, rng):
    x = rng.standard_normal(3)
    y = rng.standard_normal(3)
    g = rng.standard_normal(3)
    gx = heis.group.bch(g, x)
    gy = heis.group.bch(g, y)
    e1 = estimate_distance(heis, x, y, budget=FAST, seed=3)
    e2 = estimate_distance(heis, gx, gy, budget=FAST, seed=3)
    # the displacement agrees up to float roundoff in the translation,
    # which the optimizer amplifies mildly
    assert e1.upper == pytest.approx(e2.upper, rel=1e-3)
    assert e1.lower == pytest.approx(e2.lower, rel=1e-9)


def test_dilation_covariance_exact(heis, rng):
    pts = rng.standard_normal((20, 3))
    # powers of two dilate without roundoff, so covariance is bitwise
    pts2 = np.array([dilate(heis.algebra, 4.0, p) for p in pts])
    u1, _ = cc_upper_batch(heis, pts, budget=FAST, seed=4)
    u2, _ = cc_upper_batch(heis, pts2, budget=FAST, seed=4)
    assert np.allclose(u2, 4.0 * u1, rtol=1e-12)
    # generic factors agree up to normalization roundoff
    pts3 = np.array([dilate(heis.algebra, 3.0, p) for p in pts])
    u3, _ = cc_upper_batch(heis, pts3, budget=FAST, seed=4)
    assert np.allclose(u3, 3.0 * u1, rtol=5e-3)


def test_symmetry(heis, rng):
    pts = rng.standard_normal((20, 3))
    u1, _ = cc_upper_batch(heis, pts, budget=FAST, seed=5)
    u2, _ = cc_upper_batch(heis, -pts, budget=FAST, seed=5)
    # same optimization problem up to the symmetry x -> -x of the group
    assert np.allclose(u1, u2, rtol=0.02)


def test_estimate_distance_report(heis, heis_ballbox):
    est = estimate_distance(heis, np.zeros(3), np.array([0.0, 0.0, 1.0]),
                            budget=FAST, ballbox=heis_ballbox, seed=6)
    doc = est.as_dict(pair=[[0, 0, 0], [0, 0, 1]])
    assert doc["lower_method"] == "ball-box"
    assert doc["lower"] <= doc["upper"]
    assert doc["witness_segments"] is not None
    assert doc["seed"] == 6
    assert est.midpoint == pytest.approx(0.5 * (est.lower + est.upper))


def test_unreachable_layer_raises():
    # grading-valid algebra whose layer 2 is not generated by brackets
    c = np.zeros((2, 2, 2))
    a = catalog.GradedAlgebra("stub", [1, 1], c)
    space = CCSpace(a)
    with pytest.raises(UnreachableError):
        space.ladder()


def test_calibration_input_validation(heis):
    with pytest.raises(InputError):
        calibrate_ballbox(heis, samples=10)


def test_zero_distance(heis):
    est = estimate_distance(heis, np.ones(3), np.ones(3), budget=FAST)
    assert est.upper == 0.0
    assert est.lower == 0.0


def test_anisotropic_metric_distance():
    # doubling the metric on X doubles the cost of moving along X
    space = CCSpace(catalog.heisenberg(),
                    HorizontalMetric(np.diag([4.0, 1.0])))
    est = estimate_distance(space, np.zeros(3),
                            np.array([1.0, 0.0, 0.0]), budget=FAST)
    assert est.upper == pytest.approx(2.0, rel=1e-9)
    assert est.lower == pytest.approx(2.0, rel=1e-9)
