import itertools

import numpy as np
import pytest

from core.approx import (MAX_PROJECTOR_QUBITS, MonomialSpec, enumerate_specs, evaluate_polynomial,
                         monomial_angle, monomial_circuit, monomial_expectation, monomial_features)
from core.errors import DomainError


def test_monomial_angle_endpoints():
    assert monomial_angle(1.0) == 0.0
    assert monomial_angle(0.0) == pytest.approx(np.pi)
    with pytest.raises(DomainError):
        monomial_angle(1.5)


@pytest.mark.parametrize("exponents", [(1,), (3,), (2, 1), (0, 4), (1, 1, 1)])
def test_monomials_are_exact_on_a_grid(exponents):
    spec = MonomialSpec(exponents)
    grid = np.linspace(0, 1, 5)
    for x in itertools.product(grid, repeat=len(exponents)):
        expected = np.prod([v ** m for v, m in zip(x, exponents)])
        assert abs(monomial_expectation(spec, x) - expected) <= 1e-12


def test_monomial_circuit_shape():
    t = monomial_circuit(MonomialSpec((2, 0, 3)))
    assert t.num_qubits == 5
    assert t.num_input_slots == 2
    assert t.num_weight_slots == 0


def test_spec_validation():
    with pytest.raises(DomainError):
        MonomialSpec((0, 0))
    with pytest.raises(DomainError):
        MonomialSpec((-1, 2))
    with pytest.raises(DomainError):
        monomial_expectation(MonomialSpec((MAX_PROJECTOR_QUBITS + 1,)), [0.5])
    with pytest.raises(DomainError):
        monomial_expectation(MonomialSpec((1, 1)), [0.5])


def test_spec_str():
    assert str(MonomialSpec((2, 0, 1))) == "x1^2*x3^1"


def test_enumerate_specs():
    specs = enumerate_specs(2, 2)
    assert [s.exponents for s in specs] == [(0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]


def test_polynomial_through_affine_head(rng):
    terms = [(-2.0, MonomialSpec((2, 0))), (3.0, MonomialSpec((1, 3)))]
    for _ in range(5):
        x1, x2 = rng.uniform(0, 1, size=2)
        expected = 0.5 - 2 * x1 ** 2 + 3 * x1 * x2 ** 3
        assert evaluate_polynomial(terms, [x1, x2], constant=0.5) == pytest.approx(expected, abs=1e-10)


def test_monomial_features():
    specs = [MonomialSpec((1,)), MonomialSpec((2,))]
    assert monomial_features(specs, [0.5]) == pytest.approx([0.5, 0.25])
