import numpy as np
import pytest
from hypothesis import given, strategies as st

from wardsoliton.errors import NotHolomorphic
from wardsoliton.laurent import (
    MatrixLaurentJet,
    jet_derivative,
    jet_mul,
    holomorphic_value,
    pole_jet,
    simple_element_jet,
    simple_inverse_jet,
)
from wardsoliton.matrix import projector_from_span


def rand_proj(seed, n=2, k=1):
    rng = np.random.default_rng(seed)
    return projector_from_span(rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))).matrix


def rand_jet(seed, n=3, lowest=-1, length=5):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(length, n, n)) + 1j * rng.normal(size=(length, n, n))
    return MatrixLaurentJet(0.3 + 1j, lowest, c)


def scalar_jet(coeffs, lowest, center=1j):
    c = np.asarray(coeffs, dtype=complex)[:, None, None]
    return MatrixLaurentJet(center, lowest, c)


def test_element_times_inverse_is_identity():
    z = 0.5 + 1.2j
    P = rand_proj(3)
    perp = np.eye(2) - P
    g = simple_element_jet(z, perp, z, 4)
    gi = simple_inverse_jet(z, perp, z, 4)
    prod = jet_mul(g, gi)
    assert np.allclose(prod.coefficient(0), np.eye(2), atol=1e-10)
    for e in range(prod.lowest, prod.order + 1):
        if e != 0:
            assert np.linalg.norm(prod.coefficient(e)) < 1e-10


def test_scalar_pole_times_zero():
    a = scalar_jet([1.0, 0, 0], -1)  # 1/(s-z)
    b = scalar_jet([0, 1.0, 0, 0], 0)  # (s-z)
    prod = jet_mul(a, b)
    assert np.isclose(prod.coefficient(0)[0, 0], 1)
    assert abs(prod.coefficient(-1)[0, 0]) < 1e-14 and abs(prod.coefficient(1)[0, 0]) < 1e-14


def test_two_factor_leading_coefficient():
    z = -0.4 + 0.9j
    P1, P2 = rand_proj(1), rand_proj(2)
    g1 = simple_element_jet(z, np.eye(2) - P1, z, 2)
    g2 = simple_element_jet(z, np.eye(2) - P2, z, 2)
    prod = jet_mul(g2, g1)
    assert prod.lowest == -2
    ref = (z - np.conj(z)) ** 2 * (np.eye(2) - P2) @ (np.eye(2) - P1)
    assert np.allclose(prod.coefficient(-2), ref, atol=1e-12)


def test_holomorphic_value_examples():
    j = rand_jet(0, lowest=0)
    assert np.array_equal(holomorphic_value(j), j.coefficient(0))
    bad = rand_jet(1, lowest=-1)
    c = bad.coeffs.copy()
    c[0] = 1e-3 * np.eye(3)
    with pytest.raises(NotHolomorphic):
        holomorphic_value(MatrixLaurentJet(bad.center, -1, c), 1e-9)


def test_derivative_examples():
    sq = scalar_jet([0, 0, 1.0, 0], 0)  # (s-z)^2
    d = jet_derivative(sq)
    assert np.isclose(d.coefficient(1)[0, 0], 2) and abs(d.coefficient(0)[0, 0]) < 1e-15
    inv = scalar_jet([1.0, 0, 0], -1)
    di = jet_derivative(inv)
    assert di.lowest == -2 and np.isclose(di.coefficient(-2)[0, 0], -1)


def test_simple_element_derivative_away_from_pole():
    z0, c = 0.2 + 1.1j, -0.7 + 2.3j
    perp = np.eye(2) - rand_proj(4)
    j = simple_element_jet(z0, perp, c, 5)
    d = jet_derivative(j)
    exact0 = -(z0 - np.conj(z0)) / (c - z0) ** 2 * perp
    exact1 = 2 * (z0 - np.conj(z0)) / (c - z0) ** 3 * perp
    assert np.allclose(d.coefficient(0), exact0, atol=1e-12)
    assert np.allclose(d.coefficient(1), exact1, atol=1e-12)


def test_pole_jet_evaluates_function():
    a, c = 1 + 1j, 0.5
    Q = rand_proj(5)
    j = pole_jet(a, Q, c, 0.0, 12)
    h = 0.05
    exact = np.eye(2) + c / (h - a) * Q
    assert np.allclose(j(h), exact, atol=1e-12)


@given(st.integers(0, 10**5))
def test_associativity(seed):
    a, b, c = rand_jet(seed), rand_jet(seed + 1), rand_jet(seed + 2)
    lhs = jet_mul(jet_mul(a, b), c)
    rhs = jet_mul(a, jet_mul(b, c))
    assert lhs.lowest == rhs.lowest and lhs.order == rhs.order
    assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 1e-12 * (1 + np.max(np.abs(lhs.coeffs)))


@given(st.integers(0, 10**5))
def test_leibniz(seed):
    a, b = rand_jet(seed, lowest=-1, length=6), rand_jet(seed + 7, lowest=0, length=6)
    lhs = jet_derivative(jet_mul(a, b))
    r1 = jet_mul(jet_derivative(a), b)
    r2 = jet_mul(a, jet_derivative(b))
    for e in range(lhs.lowest, min(lhs.order, r1.order, r2.order) + 1):
        assert np.allclose(lhs.coefficient(e), r1.coefficient(e) + r2.coefficient(e), atol=1e-10)


def test_dimension_and_center_mismatch():
    with pytest.raises(ValueError):
        jet_mul(rand_jet(0, n=2), rand_jet(1, n=3))
    other = MatrixLaurentJet(0.0, 0, np.zeros((2, 3, 3)))
    with pytest.raises(ValueError):
        jet_mul(rand_jet(0), other)
