import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pconvex.errors import DivergentSequenceError, DomainError, ValidationError
from pconvex.mnc import (
    GENERATORS,
    DiagOperator,
    classify_operator,
    constant,
    geometric,
    hausdorff_mnc,
    kuratowski_mnc,
    measures_consistent,
    mobius,
    power,
    scaled_ball,
    tail_box,
    union_bracket,
    weighted_ball,
)

exponents = st.sampled_from([0.25, 0.5, 0.75, 1.0])


def direct_tail(terms_fn, N, p, M=2_000_000):
    """Sum |a_i|^p for N < i <= M directly (oracle for the closed forms)."""
    i = np.arange(N + 1, M + 1, dtype=float)
    return float(np.sum(np.abs(terms_fn(i)) ** p))


def dp(x, y, p):
    return float(np.sum(np.abs(np.asarray(x) - np.asarray(y)) ** p))


# --- generators ----------------------------------------------------------

def test_generator_terms():
    np.testing.assert_allclose(geometric(0.5).term([1, 2, 3]), [0.5, 0.25, 0.125])
    np.testing.assert_allclose(power(2).term([1, 2]), [1.0, 0.25])
    np.testing.assert_allclose(mobius().term([1, 3]), [0.5, 0.75])
    assert constant(0.3).term([7])[0] == 0.3
    with pytest.raises(DomainError):
        power(1).term([0])


def test_geometric_tail_matches_direct_sum():
    for r, p in [(0.5, 1.0), (0.9, 0.5), (0.3, 0.25)]:
        assert geometric(r).power_tail(10, p) == pytest.approx(
            direct_tail(lambda i: r**i, 10, p), rel=1e-12)


def test_power_tail_matches_direct_sum():
    # truncated direct sums miss roughly M**(1 - s)/(s - 1) of the tail
    got = power(2).power_tail(10, 1.0)
    approx = direct_tail(lambda i: i**-2.0, 10, 1.0) + 1 / 2_000_000
    assert got == pytest.approx(approx, rel=1e-9)


def test_generator_registry():
    assert GENERATORS.build("geometric", {"ratio": 0.5}) == geometric(0.5)
    assert GENERATORS.build("mobius", {}) == mobius()


# --- frozen brackets -----------------------------------------------------

def test_geometric_box_hausdorff_bracket():
    b = hausdorff_mnc(tail_box(geometric(0.5), 1.0), truncation=10)
    assert b.lower == 0.0
    assert b.upper == pytest.approx(2**-10, rel=1e-14)
    assert b.limit == 0.0 and b.value is None


def test_unit_ball_hausdorff_closes_on_one():
    b = hausdorff_mnc(scaled_ball(1.0, 0.5))
    assert b.lower == b.upper == b.value == 1.0


def test_half_ball_hausdorff():
    assert hausdorff_mnc(scaled_ball(0.5, 0.5)).value == pytest.approx(0.5**0.5, rel=1e-15)


def test_unit_ball_kuratowski_is_two():
    for p in (0.25, 0.5, 1.0):
        assert kuratowski_mnc(scaled_ball(1.0, p)).value == 2.0


def test_power_box_kuratowski_vanishes():
    b = kuratowski_mnc(tail_box(power(2), 1.0), truncation=1000)
    assert b.limit == 0.0 and b.lower == 0.0 and b.upper < 3e-3


def test_hull_has_the_same_measure():
    ball = scaled_ball(1.0, 0.5)
    assert kuratowski_mnc(ball.p_convex_hull()) == kuratowski_mnc(ball)
    assert hausdorff_mnc(ball.p_convex_hull()) == hausdorff_mnc(ball)


def test_packing_oracle_for_lower_bound():
    # kappa e_i are pairwise 2 kappa^p apart in d_p
    kappa, p = 0.7, 0.5
    E = kappa * np.eye(6)
    d = [dp(E[i], E[j], p) for i in range(6) for j in range(i + 1, 6)]
    np.testing.assert_allclose(d, 2 * kappa**p)
    assert kuratowski_mnc(scaled_ball(kappa, p)).lower == pytest.approx(2 * kappa**p)


# --- errors --------------------------------------------------------------

@pytest.mark.parametrize("gen,p", [(geometric(1.0), 1.0), (power(0.5), 1.0), (power(1.0), 0.5),
                                   (constant(0.2), 1.0), (mobius(), 0.5)])
def test_divergent_boxes_are_rejected(gen, p):
    with pytest.raises(DivergentSequenceError, match="unbounded in d_p metric"):
        hausdorff_mnc(tail_box(gen, p))
    with pytest.raises(DivergentSequenceError):
        kuratowski_mnc(tail_box(gen, p))


def test_bad_arguments():
    with pytest.raises(DomainError):
        hausdorff_mnc(scaled_ball(1.0, 1.0), truncation=0)
    with pytest.raises(DomainError):
        kuratowski_mnc(scaled_ball(1.0, 1.0), tol=0.0)
    with pytest.raises(ValidationError):
        scaled_ball(0.0, 1.0)
    with pytest.raises(ValidationError):
        tail_box(None, 1.0)
    with pytest.raises(ValidationError):
        scaled_ball(1.0, 1.0).union(scaled_ball(1.0, 0.5))


# --- properties ----------------------------------------------------------

@given(p=exponents, kappa=st.floats(0.01, 100.0), N=st.integers(1, 5000))
def test_scaling_law_is_exact(p, kappa, N):
    ball = scaled_ball(1.0, p)
    f = kappa**p
    for fn in (hausdorff_mnc, kuratowski_mnc):
        base, scaled = fn(ball, N), fn(ball.scaled(kappa), N)
        assert (scaled.lower, scaled.upper) == (f * base.lower, f * base.upper)


@given(p=exponents, a=st.floats(0.01, 10.0), b=st.floats(0.01, 10.0))
def test_semi_additivity_on_balls(p, a, b):
    A, B = scaled_ball(a, p), scaled_ball(b, p)
    for fn in (hausdorff_mnc, kuratowski_mnc):
        joined = fn(A.union(B))
        parts = union_bracket([fn(A), fn(B)])
        assert (joined.lower, joined.upper) == (parts.lower, parts.upper)


SETS = [
    scaled_ball(0.4, 0.5), scaled_ball(3.0, 1.0),
    tail_box(geometric(0.5), 1.0), tail_box(geometric(0.9), 0.25), tail_box(power(3), 0.5),
    weighted_ball(mobius(), 0.5), weighted_ball(geometric(0.8), 1.0),
    weighted_ball(constant(0.5), 0.75), weighted_ball(power(1), 0.25, kappa=2.0),
]


@pytest.mark.parametrize("s", SETS, ids=lambda s: f"{s.kind}-{s.p}")
def test_measure_ordering(s):
    for N in (1, 3, 10, 100, 1000, 10_000):
        h, k = hausdorff_mnc(s, N), kuratowski_mnc(s, N)
        assert measures_consistent(h, k)
        assert h.lower <= h.upper and k.lower <= k.upper


@pytest.mark.parametrize("s", SETS, ids=lambda s: f"{s.kind}-{s.p}")
def test_brackets_tighten_with_truncation(s):
    for fn in (hausdorff_mnc, kuratowski_mnc):
        bs = [fn(s, N) for N in (1, 2, 5, 10, 100, 1000)]
        assert all(x.upper >= y.upper for x, y in zip(bs, bs[1:]))
        assert all(x.lower <= y.lower for x, y in zip(bs, bs[1:]))


@pytest.mark.parametrize("s", SETS, ids=lambda s: f"{s.kind}-{s.p}")
def test_zero_measure_exactly_for_summable_boxes(s):
    if s.kind == "scaled_ball":
        expect_zero = False
    else:
        expect_zero = s.kind == "tail_box" or s.edges.limit_abs == 0.0
    assert (hausdorff_mnc(s).limit == 0.0) == expect_zero
    assert (kuratowski_mnc(s).limit == 0.0) == expect_zero


# --- operator classes ----------------------------------------------------

def test_half_scaling_is_contraction():
    c = classify_operator(DiagOperator(constant(0.5)), scaled_ball(1.0, 1.0), 1.0)
    assert (c.k, c.cls, c.condensing) == (0.5, "k_set_contraction", True)
    assert c.image_bracket.value == 0.5 * c.set_bracket.value


def test_identity_scaling_is_one_set_contractive():
    c = classify_operator(DiagOperator(constant(1.0)), scaled_ball(1.0, 1.0), 1.0)
    assert (c.k, c.cls, c.sup_attained) == (1.0, "one_set_contractive", True)


def test_mobius_is_not_condensing():
    c = classify_operator(DiagOperator(mobius()), scaled_ball(1.0, 1.0), 1.0)
    assert (c.k, c.cls, c.condensing, c.sup_attained) == (1.0, "one_set_contractive", False, False)
    # the image keeps the measure of the ball in the limit
    assert c.image_bracket.limit == c.set_bracket.limit == 1.0
    assert c.image_bracket.upper == 1.0 and c.image_bracket.lower == pytest.approx(1.0, abs=1e-3)


def test_expansive_and_unbounded():
    c = classify_operator(DiagOperator(constant(2.0)), scaled_ball(1.0, 0.5), 0.5)
    assert c.cls == "expansive" and c.k == pytest.approx(2**0.5)
    with pytest.raises(DivergentSequenceError):
        DiagOperator(geometric(2.0))


def test_exponent_mismatch():
    with pytest.raises(ValidationError):
        classify_operator(DiagOperator(constant(0.5)), scaled_ball(1.0, 1.0), 0.5)


@given(c=st.floats(0.0, 0.999), p=exponents)
def test_constant_contraction_k(c, p):
    cl = classify_operator(DiagOperator(constant(c)), scaled_ball(1.0, p), p)
    assert cl.k == pytest.approx(c**p) and cl.condensing
