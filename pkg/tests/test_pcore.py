import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pconvex.errors import DomainError, UnsupportedRegimeError, ValidationError
from pconvex.pcore import (
    PExponent,
    PointSet,
    WeightVector,
    admissible_pair,
    as_p,
    check_p_convex,
    finite_hull_membership,
    p_combination,
    replay_witness,
    singleton_hull_membership,
    unit_pball_oracle,
    vectorize_oracle,
)

exponents = st.sampled_from([0.1, 0.25, 0.5, 0.75, 0.9, 1.0])


def ball_sampler(radius, dim=2):
    def sample(rng, n):
        return rng.uniform(-radius, radius, size=(n, dim))
    return sample


# --- exponent and weights ------------------------------------------------

@pytest.mark.parametrize("bad", [0.0, -0.5, 1.5, float("nan"), float("inf")])
def test_exponent_rejects_values_outside_unit_interval(bad):
    with pytest.raises(DomainError, match=r"p must lie in \(0,1\]"):
        PExponent(bad)


def test_as_p_accepts_floats_and_exponents():
    assert as_p(0.5) == 0.5
    assert as_p(PExponent(0.25)) == 0.25


def test_weight_vector_enforces_unit_power_sum():
    WeightVector([0.25, 0.25], 0.5)
    with pytest.raises(ValidationError):
        WeightVector([0.5, 0.5], 0.5)
    with pytest.raises(ValidationError):
        WeightVector([-0.1, 1.0], 1.0)
    with pytest.raises(ValidationError):
        WeightVector([], 1.0)


def test_weight_vector_is_read_only():
    w = WeightVector([0.3, 0.7], 1.0)
    with pytest.raises(ValueError):
        w.t[0] = 0.1


@given(p=exponents, u=st.floats(0.0, 1.0))
def test_admissible_pair_has_unit_power_sum(p, u):
    s, t = admissible_pair(p, u)
    assert abs(s**p + t**p - 1.0) <= 1e-12


@given(p=exponents, raw=st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=6))
def test_normalised_weights_validate(p, raw):
    # scaling raw weights so their p-th powers sum to one is always valid
    raw = np.asarray(raw)
    t = raw / np.sum(raw**p) ** (1.0 / p)
    w = WeightVector(t, p)
    assert abs(np.sum(w.t**p) - 1.0) <= 1e-12


# --- combinations --------------------------------------------------------

def test_combination_of_unit_vectors():
    z = p_combination([[1, 0], [0, 1]], WeightVector([0.25, 0.25], 0.5))
    np.testing.assert_allclose(z, [0.25, 0.25])


def test_combination_of_single_point_is_identity():
    z = p_combination([[3.0, -2.0]], WeightVector([1.0], 0.3))
    np.testing.assert_array_equal(z, [3.0, -2.0])


def test_combination_rejects_non_unit_weights():
    with pytest.raises(ValidationError):
        p_combination([[1, 0], [0, 1]], WeightVector([0.5, 0.5], 0.5))


def test_combination_length_mismatch():
    with pytest.raises(ValidationError, match="2 points but 1 weights"):
        p_combination([[1, 0], [0, 1]], WeightVector([1.0], 0.5))


def test_point_set_validation():
    assert PointSet([1.0, 2.0]).dim == 2
    with pytest.raises(ValidationError):
        PointSet([])
    with pytest.raises(ValidationError):
        PointSet([[1.0, np.nan]])


# --- convexity checks ----------------------------------------------------

def test_unit_pball_passes_at_matching_exponent():
    rep = check_p_convex(unit_pball_oracle(0.5), 0.5, ball_sampler(1.0), trials=10_000, seed=1)
    assert rep.passed and rep.trials == 10_000


def test_euclidean_disk_passes_at_half():
    disk = vectorize_oracle(lambda x: float(np.hypot(*x)) <= 1.0)
    rep = check_p_convex(disk, 0.5, ball_sampler(1.0), trials=2000, seed=2)
    assert rep.passed


def test_shifted_disk_fails_with_replayable_witness():
    centre = np.array([5.0, 0.0])

    def disk(X):
        return np.linalg.norm(np.asarray(X) - centre, axis=-1) <= 0.1

    rep = check_p_convex(disk, 0.5, lambda rng, n: centre + rng.uniform(-0.1, 0.1, (n, 2)), 500, 3)
    assert not rep.passed
    w = rep.witness
    again = replay_witness(disk, 0.5, w.x, w.y, w.u)
    assert again is not None
    np.testing.assert_allclose(again.z, w.z)
    assert rep.as_dict()["witness"]["u"] == w.u


def test_shifted_disk_hand_witness():
    centre = np.array([5.0, 0.0])

    def disk(X):
        return np.linalg.norm(np.asarray(X) - centre, axis=-1) <= 0.1

    w = replay_witness(disk, 0.5, centre, centre, 0.5)
    assert (w.s, w.t) == (0.25, 0.25)
    np.testing.assert_allclose(w.z, [2.5, 0.0])


def test_pball_of_smaller_exponent_fails_at_larger():
    # the unit 0.5-ball is not convex: (1,0) and (0,1) have midpoint outside
    rep = check_p_convex(unit_pball_oracle(0.5), 1.0, ball_sampler(1.0), trials=5000, seed=4)
    assert not rep.passed


def test_empty_sample_gives_vacuous_pass():
    rep = check_p_convex(lambda X: np.zeros(len(X), bool), 0.5, ball_sampler(1.0), trials=10, max_draws=40)
    assert rep.passed and rep.trials == 0


def test_trials_must_be_positive():
    with pytest.raises(DomainError):
        check_p_convex(unit_pball_oracle(1.0), 1.0, ball_sampler(1.0), trials=0)


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75, 1.0])
def test_exponent_monotonicity(p):
    oracle = unit_pball_oracle(p, [1.0, 2.0])
    for s in np.linspace(0.05, 1.0, 8) * p:
        assert check_p_convex(oracle, s, ball_sampler(1.0), trials=2000, seed=5).passed


@given(p=st.sampled_from([0.25, 0.5, 0.75]), seed=st.integers(0, 10_000))
def test_scaling_containment(p, seed):
    rng = np.random.default_rng(seed)
    oracle = unit_pball_oracle(p)
    X = rng.uniform(-1, 1, size=(200, 3))
    X = X[oracle(X)]
    alpha = rng.uniform(1e-9, 1.0, size=(len(X), 1))
    assert np.all(oracle(alpha * X))


@given(p=exponents, seed=st.integers(0, 10_000))
def test_combination_of_members_is_member(p, seed):
    rng = np.random.default_rng(seed)
    oracle = unit_pball_oracle(p, [1.0, 0.5, 2.0])
    X = rng.uniform(-1, 1, size=(400, 3))
    X = X[oracle(X)][:6]
    if len(X) == 0:
        return
    raw = rng.uniform(0.01, 1.0, size=len(X))
    w = WeightVector(raw / np.sum(raw**p) ** (1.0 / p), p)
    assert oracle(p_combination(X, w)[None, :])[0]


# --- hull membership -----------------------------------------------------

def test_singleton_hull_examples():
    assert singleton_hull_membership([2, 0], [1, 0], 0.5, closed=True)
    assert not singleton_hull_membership([2, 0], [0, 0], 0.5, closed=False)
    assert singleton_hull_membership([2, 0], [0, 0], 0.5, closed=True)
    assert not singleton_hull_membership([2, 0], [3, 0], 0.5)
    assert not singleton_hull_membership([2, 0], [1, 0.1], 0.5)


def test_singleton_hull_rejects_convex_regime():
    with pytest.raises(UnsupportedRegimeError):
        singleton_hull_membership([1, 0], [0.5, 0], 1.0)


@given(k=st.integers(-500, 1500), p=st.sampled_from([0.3, 0.5, 0.9]))
def test_singleton_hull_agrees_with_grid(k, p):
    x = np.array([1.5, -0.5])
    q = (k / 1000) * x
    grid = np.arange(0, 1001) / 1000
    brute = bool(np.any(np.max(np.abs(grid[:, None] * x - q), axis=1) <= 1e-10))
    assert singleton_hull_membership(x, q, p, closed=True) == brute


def test_two_point_hull_interior_point():
    res = finite_hull_membership([[1, 0], [0, 1]], [0.25, 0.25], 0.5)
    assert res.member
    np.testing.assert_allclose(res.witness.weights.t, [0.25, 0.25], atol=1e-8)


def test_two_point_hull_generator():
    res = finite_hull_membership([[1, 0], [0, 1]], [1, 0], 0.5)
    assert res.member
    np.testing.assert_allclose(res.witness.coefficients, [1, 0], atol=1e-9)


def test_two_point_hull_rejects_far_point():
    res = finite_hull_membership([[1, 0], [0, 1]], [1, 1], 0.5)
    assert not res.member and res.witness is None and res.best_error > 0.5


def test_two_point_hull_far_point_grid_oracle():
    # on the feasible curve t1^0.5 + t2^0.5 = 1 the coordinate sum peaks at 1
    u = np.linspace(0, 1, 200_001)
    assert np.max(u**2 + (1 - u) ** 2) == pytest.approx(1.0)


def test_hull_witness_reproduces_query():
    pts = [[1, 0], [0, 1], [-1, -1]]
    q = np.array([0.05, 0.1])
    res = finite_hull_membership(pts, q, 0.5, seed=3)
    assert res.member
    w = res.witness
    z = p_combination(np.asarray(pts, float)[list(w.indices)], w.weights)
    np.testing.assert_allclose(z, q, atol=1e-8)


def test_hull_dimension_mismatch():
    with pytest.raises(DomainError):
        finite_hull_membership([[1, 0], [0, 1]], [1, 0, 0], 0.5)


def test_hull_convex_case():
    assert finite_hull_membership([[1, 0], [0, 1]], [0.5, 0.5], 1.0).member
    assert not finite_hull_membership([[1, 0], [0, 1]], [0.25, 0.25], 1.0).member
