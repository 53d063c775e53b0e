import numpy as np
import pytest
from numpy.testing import assert_allclose

from partialcop import QuadratureRule, gauss_rule


def test_two_point_rule_is_classical():
    rule = gauss_rule(2)
    assert_allclose(np.sort(rule.nodes), [(1 - 1 / np.sqrt(3)) / 2, (1 + 1 / np.sqrt(3)) / 2],
                    atol=1e-15)
    assert_allclose(rule.weights, [0.5, 0.5], atol=1e-15)


def test_cubic_exact_with_two_points():
    assert gauss_rule(2).integrate(lambda x: x ** 3) == pytest.approx(0.25, abs=1e-15)


def test_exponential_integral():
    assert gauss_rule(16).integrate(np.exp) == pytest.approx(np.e - 1.0, abs=1e-12)


@pytest.mark.parametrize("order", [2, 3, 5, 8, 16, 64])
def test_monomial_exactness_up_to_degree(order):
    rule = gauss_rule(order)
    for k in range(2 * order):
        got = rule.integrate(lambda x, k=k: x ** k)
        assert got == pytest.approx(1.0 / (k + 1), abs=1e-12), f"degree {k}"


@pytest.mark.parametrize("order", [2, 16, 64, 128])
def test_rule_invariants(order):
    rule = gauss_rule(order)
    assert rule.order == order
    assert len(rule.nodes) == len(rule.weights) == order
    assert np.all(rule.nodes > 0) and np.all(rule.nodes < 1)
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 1.0) < 1e-12


def test_tensor_integration():
    rule = gauss_rule(16)
    assert rule.integrate2(lambda u, v: u * v) == pytest.approx(0.25, abs=1e-13)
    assert rule.integrate2(lambda u, v: np.exp(u + v)) == pytest.approx((np.e - 1) ** 2, abs=1e-11)


def test_rescaled_interval():
    rule = gauss_rule(24)
    x, w = rule.rescaled(0.0, 0.3)
    assert np.sum(w * np.exp(x)) == pytest.approx(np.exp(0.3) - 1.0, abs=1e-13)


def test_order_too_small_rejected():
    with pytest.raises(ValueError):
        gauss_rule(1)


def test_rule_validation():
    with pytest.raises(ValueError):
        QuadratureRule(nodes=np.array([0.0, 0.5]), weights=np.array([0.5, 0.5]), order=2)
    with pytest.raises(ValueError):
        QuadratureRule(nodes=np.array([0.25, 0.75]), weights=np.array([0.6, 0.6]), order=2)


def test_rules_are_immutable():
    rule = gauss_rule(8)
    with pytest.raises(ValueError):
        rule.nodes[0] = 0.5
