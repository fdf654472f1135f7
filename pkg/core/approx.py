# core/approx.py
"""Circuits that compute monomials exactly.

R_y(2 arccos sqrt(x)) takes |0> to sqrt(x)|0> + sqrt(1-x)|1>, so the
probability of reading 0 is x. A tensor product of m_i such rotations per
variable, measured with the all-zeros projector, returns prod_i x_i**m_i.
Polynomials follow by feeding a bank of monomial outputs into an affine layer.
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .layers import AffineLayer, affine_forward
from .pqc import CircuitTemplate, ParamRef, Rotation, run
from .simcore import expectation, projector

# =================== CONSTANTS ===================
MAX_DEGREE = 20
# all-zeros projector is expanded into 2**q Pauli strings
MAX_PROJECTOR_QUBITS = 6


@dataclass(frozen=True)
class MonomialSpec:
    """x_1**m_1 * ... * x_k**m_k."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(m) for m in self.exponents)
        if any(m < 0 for m in exps) or not any(exps):
            raise DomainError(f"exponents must be non-negative with at least one positive, got {exps}")
        if sum(exps) > MAX_DEGREE:
            raise DomainError(f"total degree {sum(exps)} exceeds {MAX_DEGREE}")
        object.__setattr__(self, "exponents", exps)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def num_vars(self) -> int:
        return len(self.exponents)

    def __str__(self):
        return "*".join(f"x{i + 1}^{m}" for i, m in enumerate(self.exponents) if m)


def monomial_angle(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"monomial inputs must lie in [0, 1], got {x}")
    return 2.0 * math.acos(math.sqrt(x))


def monomial_circuit(spec: MonomialSpec) -> CircuitTemplate:
    """One Input slot per variable with a positive exponent, bound to m_i R_y gates."""
    gates, qubit = [], 0
    active = [m for m in spec.exponents if m]
    for slot, m in enumerate(active):
        for _ in range(m):
            gates.append(Rotation("Y", qubit, ParamRef.input(slot)))
            qubit += 1
    return CircuitTemplate.from_gates(spec.degree, gates)


def monomial_expectation(spec: MonomialSpec, x) -> float:
    x = [float(v) for v in x]
    if len(x) != spec.num_vars:
        raise DomainError(f"monomial takes {spec.num_vars} variables, got {len(x)}")
    if spec.degree > MAX_PROJECTOR_QUBITS:
        raise DomainError(f"degree {spec.degree} exceeds the {MAX_PROJECTOR_QUBITS}-qubit projector limit")
    angles = [monomial_angle(v) for v in x]
    state = run(monomial_circuit(spec), [a for a, m in zip(angles, spec.exponents) if m])
    return expectation(state, projector({q: 0 for q in range(spec.degree)}))


# ---------- polynomial harness ----------
def monomial_features(specs, x) -> np.ndarray:
    return np.array([monomial_expectation(spec, x) for spec in specs])


def evaluate_polynomial(terms, x, constant: float = 0.0) -> float:
    """constant + sum_t c_t * monomial_t(x): monomial outputs fed through a 1-output affine layer."""
    coefficients = [c for c, _ in terms]
    specs = [s for _, s in terms]
    head = AffineLayer(np.array([coefficients], dtype=np.float64), np.array([constant], dtype=np.float64))
    return float(affine_forward(head, monomial_features(specs, x))[0])


def enumerate_specs(num_vars: int, max_degree: int) -> list[MonomialSpec]:
    """Every exponent vector over `num_vars` variables with 1 <= total degree <= max_degree."""
    out = []
    for exps in itertools.product(range(max_degree + 1), repeat=num_vars):
        if 1 <= sum(exps) <= max_degree:
            out.append(MonomialSpec(exps))
    return sorted(out, key=lambda s: (s.degree, s.exponents))
