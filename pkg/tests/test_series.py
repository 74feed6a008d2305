from hypothesis import given
from hypothesis import strategies as st

from omegaparity.series import (PowerSeries, compute_a_sequence, fk_tail_by_product,
                                fk_tail_coefficients, geometric_target, one_minus_q_power)


def test_a_sequence_examples():
    assert compute_a_sequence(6) == [1, 1, 2, 3, 6, 9]
    assert compute_a_sequence(9)[6:] == [18, 30, 56]
    assert compute_a_sequence(1) == [1]


def test_fk_examples():
    assert fk_tail_coefficients(6, 9).coefficients == (1, 0, 0, 0, 0, 0, 0, -18, -30, -56)
    assert fk_tail_coefficients(1, 2)[2] == -1
    assert fk_tail_coefficients(2, 3)[3] == -2


def test_a_sequence_defines_product():
    K = 30
    acc = PowerSeries.one(K)
    for k, a in enumerate(compute_a_sequence(K), start=1):
        acc = acc * one_minus_q_power(k, a, K)
    assert acc == geometric_target(K)


def test_a_positive():
    assert all(a > 0 for a in compute_a_sequence(60))


@given(st.integers(1, 24), st.integers(1, 12))
def test_tail_two_ways(k, extra):
    K = k + extra
    f = fk_tail_coefficients(k, K)
    assert f == fk_tail_by_product(k, K)
    assert f[0] == 1
    assert all(f[d] == 0 for d in range(1, k + 1))
    assert len(f.coefficients) == K + 1


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=12), st.integers(0, 11))
def test_inverse(coeffs, order):
    coeffs[0] = 1
    a = PowerSeries(tuple(coeffs), order)
    assert a * a.inverse() == PowerSeries.one(order)
