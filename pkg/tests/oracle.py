"""Dense Kronecker-product reference for small circuits."""
from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def embed(op, qubit, n):
    # qubit 0 is the leftmost factor
    return reduce(np.kron, [op if q == qubit else I2 for q in range(n)])


def rotation(axis, qubit, angle, n):
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return embed(c * I2 - 1j * s * PAULI[axis], qubit, n)


def cnot(control, target, n):
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        j = i ^ (1 << (n - 1 - target)) if i >> (n - 1 - control) & 1 else i
        m[j, i] = 1
    return m


def pauli_string(factors, n):
    ops = dict(factors)
    return reduce(np.kron, [PAULI[ops[q]] if q in ops else I2 for q in range(n)])


def observable_matrix(obs, n):
    return sum(t.coefficient * pauli_string(t.factors, n) for t in obs.terms)


def run_dense(template, inputs=(), weights=()):
    from core.pqc import Rotation, resolve_angle

    n = template.num_qubits
    x, w = np.asarray(inputs, dtype=float), np.asarray(weights, dtype=float)
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1
    for g in template.gates:
        if isinstance(g, Rotation):
            psi = rotation(g.axis, g.qubit, resolve_angle(g.param, x, w), n) @ psi
        else:
            psi = cnot(g.control, g.target, n) @ psi
    return psi


def expectation_dense(template, obs, inputs=(), weights=()):
    psi = run_dense(template, inputs, weights)
    return float(np.real(np.vdot(psi, observable_matrix(obs, template.num_qubits) @ psi)))
