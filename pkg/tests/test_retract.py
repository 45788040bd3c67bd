import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pconvex.errors import DomainError, ValidationError
from pconvex.gauge import box, euclidean_disk, pball
from pconvex.pcore import PointSet
from pconvex.retract import (
    ADMISSIBLE_TOL,
    admissible_r_scan,
    admissible_residual,
    continuity_constant,
    inward_membership,
    outward_membership,
    p_distance,
    radial_retract,
    retract_many,
)

HALF = pball([1.0, 1.0], 0.5)
L1 = pball([1.0, 1.0], 1.0)


def grid_distance(p, x, n=801):
    """Brute-force min of sum |x_i - y_i|^p over a dense grid of the unit p-ball."""
    g = np.linspace(-1, 1, n)
    Y = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
    Y = Y[np.sum(np.abs(Y) ** p, axis=1) <= 1.0]
    return float(np.min(np.sum(np.abs(np.asarray(x) - Y) ** p, axis=1)))


# --- retraction ----------------------------------------------------------

def test_retract_outside_point():
    r = radial_retract(HALF, [1.0, 1.0])
    np.testing.assert_allclose(r.point, [0.25, 0.25], rtol=1e-15)
    assert not r.was_inside and r.gauge.value == pytest.approx(1.0, abs=1e-12)
    assert r.input_gauge.value == pytest.approx(2.0)


def test_retract_boundary_point_is_identity():
    r = radial_retract(HALF, [0.25, 0.25])
    assert r.was_inside
    np.testing.assert_array_equal(r.point, [0.25, 0.25])


def test_retract_origin():
    r = radial_retract(HALF, [0.0, 0.0])
    assert r.was_inside
    np.testing.assert_array_equal(r.point, [0.0, 0.0])


def test_retract_dimension_checked():
    with pytest.raises(DomainError):
        retract_many(HALF, np.ones((2, 3)))


BODIES = [HALF, L1, pball([2.0, 0.5, 1.0], 0.25), euclidean_disk(2.0, p=0.75), box([1.0, 3.0], p=0.4)]


@pytest.mark.parametrize("body", BODIES, ids=lambda b: f"{b.name}-{b.p}")
def test_retraction_contract(body):
    rng = np.random.default_rng(0)
    X = body.boundary_points(rng, 5000) * rng.uniform(0, 4, size=(5000, 1))
    R, inside, g = retract_many(body, X)
    np.testing.assert_array_equal(R[inside], X[inside])
    assert np.all(body.contains(R))
    assert np.all(g[~inside] > 1.0)
    np.testing.assert_allclose(body.gauge(R[~inside]), 1.0, atol=1e-12)
    R2, inside2, _ = retract_many(body, R)
    assert np.all(inside2)
    np.testing.assert_array_equal(R2, R)


@given(seed=st.integers(0, 100_000), scale=st.floats(1e-3, 1e3))
def test_idempotence_is_exact(seed, scale):
    x = np.random.default_rng(seed).normal(size=(1, 2)) * scale
    once, _, _ = retract_many(HALF, x)
    twice, _, _ = retract_many(HALF, once)
    np.testing.assert_array_equal(once, twice)


@given(seed=st.integers(0, 100_000))
def test_retraction_stays_on_ray(seed):
    x = np.random.default_rng(seed).normal(size=2) * 3
    r = radial_retract(L1, x).point
    # parallel and same direction
    assert abs(x[0] * r[1] - x[1] * r[0]) <= 1e-12 * (1 + np.abs(x).max())
    assert float(x @ r) >= 0


@pytest.mark.parametrize("body", BODIES, ids=lambda b: f"{b.name}-{b.p}")
def test_retraction_has_no_jumps(body):
    # near the axes the p < 1 gauge is only Hoelder continuous, so the
    # observed ratio may grow as the step shrinks; the displacement must not
    moves = [continuity_constant(body, samples=400, seed=1, step=h) * h for h in (1e-4, 1e-6, 1e-8)]
    assert moves[0] > moves[1] > moves[2]
    assert moves[2] < 1e-3


def test_convex_retraction_is_lipschitz():
    for body in (L1, box([1.0, 3.0]), euclidean_disk(1.0)):
        assert 0 < continuity_constant(body, samples=400, seed=1) < 5.0


# --- distances -----------------------------------------------------------

def test_l1_distance_to_l1_ball():
    est = p_distance(L1, [2.0, 0.0], L1, seed=0)
    assert est.upper_bound
    assert est.value == pytest.approx(1.0, abs=1e-9)
    assert grid_distance(1.0, [2.0, 0.0]) == pytest.approx(1.0, abs=1e-12)


def test_half_distance_to_half_ball():
    est = p_distance(HALF, [4.0, 0.0], HALF, seed=0)
    assert est.value == pytest.approx(3**0.5, abs=1e-9)
    assert grid_distance(0.5, [4.0, 0.0]) == pytest.approx(3**0.5, abs=1e-12)
    np.testing.assert_allclose(est.nearest, [1.0, 0.0], atol=1e-9)


def test_distance_of_member_is_zero():
    assert p_distance(HALF, [0.1, 0.1], HALF).value == 0.0


@given(seed=st.integers(0, 1000))
def test_distance_is_an_upper_bound_of_grid_min(seed):
    x = np.random.default_rng(seed).uniform(-3, 3, size=2)
    est = p_distance(L1, x, L1, budget=400, seed=seed)
    truth = max(0.0, np.abs(x).sum() - 1.0)  # l1 distance to the l1 ball
    assert truth - 1e-12 <= est.value <= truth + 1e-6
    assert (est.value == 0.0) == (np.abs(x).sum() <= 1.0)


def test_distance_to_point_sample():
    est = p_distance(lambda X: np.sum(np.abs(X), axis=-1), [0, 0], [[1, 1], [0.5, 0], [3, 3]])
    assert est.value == 0.5 and est.evaluations == 3
    np.testing.assert_array_equal(est.nearest, [0.5, 0])


def test_distance_errors():
    with pytest.raises(ValidationError):
        p_distance(L1, [0, 0], [])
    with pytest.raises(DomainError):
        p_distance(L1, [0, 0], [[1, 2, 3]])
    with pytest.raises(ValidationError):
        p_distance("not a seminorm", [0, 0], [[1, 2]])


# --- admissible steps and inward sets -----------------------------------

@pytest.mark.parametrize("p", [0.1, 0.25, 0.5, 0.75, 0.99])
def test_only_zero_and_one_are_admissible(p):
    np.testing.assert_array_equal(admissible_r_scan(p, 10.0, 1e-4), [0.0, 1.0])


def test_every_step_is_admissible_when_convex():
    r = admissible_r_scan(1.0, 2.0, 1e-3)
    assert r.size == 2001 and r[-1] == 2.0


@given(p=st.floats(0.05, 0.95), r=st.floats(1e-3, 100.0))
def test_weight_equation_residual_sign(p, r):
    # away from 0 and 1 the residual is strictly positive for p < 1
    if abs(r - 1.0) < 1e-3:
        return
    assert admissible_residual(p, r) > ADMISSIBLE_TOL


def test_resolution_must_divide_one():
    with pytest.raises(DomainError):
        admissible_r_scan(0.5, 10.0, 0.3)
    with pytest.raises(DomainError):
        admissible_residual(0.5, -1.0)


def test_inward_examples():
    ok, w = inward_membership(HALF, [1.0, 0.0], [0.0, 1.0], 0.5)
    assert ok and w.r == 1.0 and w.admissible
    ok, w = inward_membership(HALF, [1.0, 0.0], [1.0, 0.0], 0.5)
    assert ok and w.r == 0.0
    ok, w = inward_membership(HALF, [1.0, 0.0], [2.0, 0.0], 0.5)
    assert not ok and w is None


@given(seed=st.integers(0, 10_000))
def test_inward_set_for_small_p_is_point_plus_body(seed):
    rng = np.random.default_rng(seed)
    x = HALF.boundary_points(rng, 1)[0]
    z = rng.uniform(-1.5, 1.5, size=2)
    ok, _ = inward_membership(HALF, x, z, 0.5)
    assert ok == bool(HALF.contains(z[None, :])[0])


@given(seed=st.integers(0, 10_000))
def test_inward_cone_at_l1_vertex(seed):
    # at the vertex (1, 0) of the l1 ball the inward set is z0 - 1 <= -|z1|
    z = np.random.default_rng(seed).uniform(-3, 3, size=2)
    margin = (z[0] - 1.0) + abs(z[1])
    if abs(margin) < 1e-6:
        return
    ok, w = inward_membership(L1, [1.0, 0.0], z, 1.0)
    assert ok == (margin < 0)
    if ok:
        assert L1.contains(w.endpoint[None, :])[0]
        np.testing.assert_allclose([1.0, 0.0] + w.r * (w.endpoint - [1.0, 0.0]), z, atol=1e-9)


def test_inward_over_point_sets():
    C = PointSet([[0.0, 0.0], [2.0, 2.0]])
    ok, w = inward_membership(C, [1.0, 0.0], [3.0, 0.0], 1.0)
    assert not ok
    ok, w = inward_membership(C, [1.0, 0.0], [-1.0, 0.0], 1.0)
    assert ok and w.r == pytest.approx(2.0)
    ok, _ = inward_membership(C, [1.0, 0.0], [2.0, 2.0], 0.5)
    assert ok


def test_outward_literal_and_derived_forms():
    x = np.array([0.5, 0.0])
    # literal form: {x} union {2x} union -C
    assert outward_membership(HALF, x, 2 * x, 0.5)[0]
    assert outward_membership(HALF, x, [-0.1, 0.0], 0.5)[0]
    # derived form: {x} union (2x - C)
    assert outward_membership(HALF, x, [1.0, 0.0], 0.5, literal=False)[0]
    assert not outward_membership(HALF, x, [3.0, 0.0], 0.5, literal=False)[0]
    # the two forms disagree away from x and 2x
    x = np.array([1.0, 0.0])
    assert outward_membership(HALF, x, [-0.5, 0.0], 0.5)[0]
    assert not outward_membership(HALF, x, [-0.5, 0.0], 0.5, literal=False)[0]
    assert not outward_membership(HALF, x, [1.9, 0.0], 0.5)[0]
    assert outward_membership(HALF, x, [1.9, 0.0], 0.5, literal=False)[0]


def test_outward_convex_case_reflects_inward():
    ok, w = outward_membership(L1, [1.0, 0.0], [2.0, 0.0], 1.0)
    assert ok and w.r < 0
