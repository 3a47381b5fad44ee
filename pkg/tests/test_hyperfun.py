import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from betasource.combinatorics import DomainError
from betasource.hyperfun import (
    HypergeometricSpec,
    TruncationPolicy,
    check_1f1_identity,
    haar_mc_0f0,
    hyperg_one_set,
    hyperg_two_set,
)

small = st.floats(-1, 1, allow_nan=False)


def test_zero_x_gives_one_exactly():
    spec = HypergeometricSpec((), (), 0.5, 3)
    res = hyperg_two_set(spec, np.zeros(3), np.array([0.4, -2.0, 1.1]))
    assert res.value == 1


@settings(max_examples=25, deadline=None)
@given(st.lists(small, min_size=1, max_size=4), small, st.sampled_from([0.5, 1.0, 2.0]))
def test_constant_y_is_exponential(x, c, alpha):
    x = np.array(x)
    spec = HypergeometricSpec((), (), alpha, len(x))
    res = hyperg_two_set(spec, x, c * np.ones(len(x)))
    assert res.value == pytest.approx(math.exp(c * x.sum()), rel=1e-10)


def test_one_set_0f0_is_exponential():
    x = np.array([0.3, -0.5, 0.8])
    res = hyperg_one_set(HypergeometricSpec((), (), 2.0, 3), x)
    assert res.value == pytest.approx(math.exp(x.sum()), rel=1e-12)


def test_one_variable_reductions():
    res = hyperg_two_set(HypergeometricSpec((), (1.7,), 1.0, 1), np.array([0.8]), np.array([-1.5]))
    assert res.value == pytest.approx(special.hyp0f1(1.7, -1.2), rel=1e-12)
    res = hyperg_one_set(HypergeometricSpec((0.6,), (), 2.0, 1), np.array([0.3]), TruncationPolicy(60))
    assert res.value == pytest.approx(0.7**-0.6, rel=1e-10)
    res = hyperg_one_set(HypergeometricSpec((0.5,), (1.5,), 2.0, 1), np.array([0.7j]))
    assert res.value == pytest.approx(complex(special.hyp1f1(0.5, 1.5, 0.7j)), rel=1e-12)


def test_exchange_and_permutation_symmetry():
    spec = HypergeometricSpec((0.4,), (1.3,), 0.5, 3)
    x = np.array([0.2, -0.6, 0.5])
    y = np.array([0.9, 0.1, -0.4])
    v = hyperg_two_set(spec, x, y).value
    assert hyperg_two_set(spec, y, x).value == pytest.approx(v, rel=1e-12)
    assert hyperg_two_set(spec, x[::-1], y).value == pytest.approx(v, rel=1e-12)


def test_truncation_monotone_for_positive_args():
    spec = HypergeometricSpec((), (2.0,), 1.0, 2)
    x = np.array([0.7, 0.3])
    values = [hyperg_one_set(spec, x, TruncationPolicy(d, 1e-300)).value.real for d in range(1, 10)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_inadmissible_lower_parameter():
    with pytest.raises(DomainError):
        HypergeometricSpec((), (-1.0,), 1.0, 2)
    # (i-1)/alpha - b = 1 at i=2 for alpha=1, b=0
    with pytest.raises(DomainError):
        HypergeometricSpec((), (0.0,), 1.0, 2)


@pytest.mark.parametrize("beta,y", [(2, (0.0, 0.0)), (2, (0.5, -0.2)), (1, (0.3, 0.3)), (4, (-0.7, 0.9))])
def test_1f1_identity(beta, y):
    assert check_1f1_identity(beta, 2, np.array(y), TruncationPolicy(30)) < 1e-8


def test_1f1_identity_rejects_odd_n():
    with pytest.raises(DomainError):
        check_1f1_identity(2, 3, np.zeros(3))


def test_haar_examples():
    est = haar_mc_0f0(1, [0.7], [1.3], samples=100, seed=0)
    assert est.mean == pytest.approx(math.exp(0.91))
    assert est.stderr == pytest.approx(0.0, abs=1e-12)
    est = haar_mc_0f0(2, [0.0, 0.0], [0.5, 0.2], samples=1000, seed=0)
    assert est.mean == pytest.approx(1.0) and est.stderr < 1e-12
    est = haar_mc_0f0(2, [1.0, -1.0], [0.5, 0.2], samples=100_000, seed=3)
    series = hyperg_two_set(HypergeometricSpec((), (), 1.0, 2), np.array([1.0, -1.0]), np.array([0.5, 0.2])).value
    assert est.within(series)
