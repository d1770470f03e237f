import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bssc.errors import ValidationError
from bssc.probability import (
    BinaryDist,
    JointTable,
    Matrix2,
    binary_entropy,
    check_prob,
    conditional_entropy_given,
    directed_information,
    mutual_information,
    stationary_binary,
    stationary_power,
)

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def entropy_oracle(p):
    # direct definition, no symmetry trick
    return -sum(x * math.log2(x) for x in (p, 1 - p) if x > 0)


@pytest.mark.parametrize(
    "p, expected",
    [
        (0.5, 1.0),
        (0.0, 0.0),
        (1.0, 0.0),
        (0.79, 0.741482739931273724775),  # mpmath, 30 digits
    ],
)
def test_binary_entropy_examples(p, expected):
    assert binary_entropy(p) == pytest.approx(expected, abs=1e-14)


def test_check_prob_clamps_band_and_rejects_outside():
    assert check_prob(1.0 + 5e-13) == 1.0
    assert check_prob(-5e-13) == 0.0
    with pytest.raises(ValidationError):
        check_prob(1.0 + 1e-9)
    with pytest.raises(ValidationError):
        check_prob(float("nan"))


@given(probs)
def test_entropy_matches_definition_and_is_symmetric(p):
    assert binary_entropy(p) == pytest.approx(entropy_oracle(p), abs=1e-12)
    assert binary_entropy(p) == pytest.approx(binary_entropy(1 - p), abs=1e-12)
    assert 0.0 <= binary_entropy(p) <= 1.0


@given(probs, probs, probs)
def test_entropy_concave(p, q, t):
    lhs = binary_entropy(t * p + (1 - t) * q)
    assert lhs >= t * binary_entropy(p) + (1 - t) * binary_entropy(q) - 1e-12


def test_conditional_entropy_examples():
    u = BinaryDist.uniform()
    assert conditional_entropy_given(Matrix2.symmetric(0.5), u) == 1.0
    assert conditional_entropy_given(Matrix2.symmetric(1.0), BinaryDist(0.3)) == 0.0
    got = conditional_entropy_given(Matrix2.symmetric(0.7141), u)
    assert got == pytest.approx(0.863365947606649183, abs=1e-12)  # mpmath H(0.7141)


def test_matrix2_rejects_non_stochastic_rows():
    with pytest.raises(ValidationError):
        Matrix2(((0.5, 0.6), (0.5, 0.5)))
    m = Matrix2(((0.2, 0.8), (0.8, 0.2)))
    assert m.is_doubly_stochastic()
    assert not Matrix2(((0.2, 0.8), (0.3, 0.7))).is_doubly_stochastic()


def test_stationary_binary_and_power_agree():
    m = Matrix2(((0.9, 0.1), (0.3, 0.7)))
    pi = stationary_binary(m)
    assert pi.p0 == pytest.approx(0.75)
    assert stationary_power(m.as_array()) == pytest.approx([0.75, 0.25], abs=1e-14)
    with pytest.raises(ValidationError):
        stationary_binary(Matrix2(((1.0, 0.0), (0.0, 1.0))))


def test_stationary_power_matches_linear_solve():
    rng = np.random.default_rng(3)
    P = rng.random((4, 4))
    P /= P.sum(axis=1, keepdims=True)
    A = np.vstack([P.T - np.eye(4), np.ones(4)])
    ref = np.linalg.lstsq(A, np.r_[np.zeros(4), 1.0], rcond=None)[0]
    assert stationary_power(P) == pytest.approx(ref, abs=1e-12)


def _product_joint(n, pb, pa, W):
    """b_{-1} ~ pb, a_i iid ~ pa, b_i ~ W[a_i] (memoryless)."""
    m = np.zeros((2,) * (2 * n + 3))
    for idx in itertools.product((0, 1), repeat=2 * n + 3):
        w = pb[idx[0]]
        for i in range(n + 1):
            a, b = idx[1 + 2 * i], idx[2 + 2 * i]
            w *= pa[a] * W[a][b]
        m[idx] = w
    return JointTable(m)


def test_directed_information_independent_is_zero():
    W = [[0.3, 0.7], [0.3, 0.7]]
    j = _product_joint(2, [0.5, 0.5], [0.4, 0.6], W)
    assert directed_information(j) == pytest.approx(0.0, abs=1e-14)


def test_directed_information_n0_is_mutual_information():
    W = np.array([[0.9, 0.1], [0.2, 0.8]])
    pa = np.array([0.3, 0.7])
    j = _product_joint(0, [0.5, 0.5], pa, W)
    assert directed_information(j, 0) == pytest.approx(mutual_information(pa[:, None] * W), abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 3),
    st.floats(0.01, 0.99),
    st.floats(0.01, 0.99),
    st.floats(0.01, 0.99),
)
def test_directed_information_memoryless_is_n_plus_one_mi(n, pa0, w0, w1):
    W = np.array([[w0, 1 - w0], [w1, 1 - w1]])
    pa = np.array([pa0, 1 - pa0])
    j = _product_joint(n, [0.5, 0.5], pa, W)
    assert directed_information(j) == pytest.approx((n + 1) * mutual_information(pa[:, None] * W), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2), st.integers(0, 2**32 - 1))
def test_directed_information_nonnegative_for_random_joints(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.random((2,) * (2 * n + 3)) ** 3
    j = JointTable(m / m.sum())
    assert directed_information(j) >= 0.0


def test_joint_table_validation():
    with pytest.raises(ValidationError):
        JointTable(np.full((2, 2, 2), 0.2))
    with pytest.raises(ValidationError):
        JointTable(np.full((2, 2), 0.25))
    bad = np.full((2, 2, 2), 0.125)
    bad[0, 0, 0] = -0.1
    bad[0, 0, 1] += 0.1
    with pytest.raises(ValidationError):
        JointTable(bad)
    with pytest.raises(ValidationError):
        directed_information(JointTable(np.full((2, 2, 2), 0.125)), horizon=1)


def test_joint_table_from_atoms_roundtrip():
    atoms = {(0, 0, 0): 0.5, (1, 1, 1): 0.5}
    j = JointTable.from_atoms(atoms, 0)
    assert {k: v for k, v in j.atoms() if v > 0} == atoms
    assert j.horizon == 0
