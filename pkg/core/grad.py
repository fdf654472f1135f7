# core/grad.py
"""Gradients of PQC expectation values.

Three engines, all returning (d_inputs, d_weights) sized by the template's slot
counts:

* parameter shift: 1/2 [f(s + pi/2) - f(s - pi/2)] per slot, exact for a slot
  bound to a single rotation gate (generators square to I);
* central finite differences: test oracle only;
* adjoint: one forward preparation and one backward sweep over the gates.

A slot bound to several gates is shifted in all of them at once. The shift
rule is then no longer exact (adjoint and finite differences still are).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .parallel import ordered_map
from .pqc import (CircuitTemplate, Rotation, SlotKind, check_vectors, prepare_amplitudes,
                  resolve_angle)
from .simcore import (Observable, check_observable, cnot_amplitudes, expectation_amplitudes,
                      observable_amplitudes, pauli_amplitudes, rotate_amplitudes)

logger = logging.getLogger(__name__)

# =================== CONSTANTS ===================
SHIFT = math.pi / 2
DEFAULT_FD_STEP = 1e-5
FD_STEP_RANGE = (1e-8, 1e-2)


@dataclass(frozen=True, eq=False)
class ExpectationJob:
    """<0|U(inputs, weights)^dagger H U(inputs, weights)|0> for one template and observable."""

    template: CircuitTemplate
    observable: Observable
    inputs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x, w = check_vectors(self.template, self.inputs, self.weights)
        check_observable(self.observable, self.template.num_qubits)
        # private copies of the vectors
        object.__setattr__(self, "inputs", x.copy())
        object.__setattr__(self, "weights", w.copy())

    def value(self) -> float:
        return _evaluate(self.template, (self.observable,), self.inputs, self.weights)[0]


def _evaluate(template, observables, x, w) -> np.ndarray:
    amps = prepare_amplitudes(template, x, w)
    n = template.num_qubits
    return np.array([expectation_amplitudes(amps, n, obs) for obs in observables])


def _kind(which) -> SlotKind:
    kind = SlotKind(which)
    if kind is SlotKind.CONST:
        raise UsageError("constant angles have no slot to differentiate")
    return kind


def _shifted_pair(template, observables, x, w, kind: SlotKind, slot: int, step: float):
    xs, ws = x.copy(), w.copy()
    target = xs if kind is SlotKind.INPUT else ws
    if not 0 <= slot < len(target):
        raise UsageError(f"{kind.value} slot {slot} out of range (template has {len(target)})")
    target[slot] += step
    plus = _evaluate(template, observables, xs, ws)
    target[slot] -= 2 * step
    minus = _evaluate(template, observables, xs, ws)
    return plus, minus


def _all_slots(template: CircuitTemplate):
    return ([(SlotKind.INPUT, i) for i in range(template.num_input_slots)]
            + [(SlotKind.WEIGHT, k) for k in range(template.num_weight_slots)])


def _split_slots(template: CircuitTemplate, values) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=np.float64)
    n_in = template.num_input_slots
    return values[:n_in].copy(), values[n_in:].copy()


# ---------- parameter shift ----------
def shift_gradient_single(job: ExpectationJob, which, slot: int) -> float:
    plus, minus = _shifted_pair(job.template, (job.observable,), job.inputs, job.weights,
                                _kind(which), slot, SHIFT)
    return float(0.5 * (plus[0] - minus[0]))


def shift_gradient_all(job: ExpectationJob, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Every slot by the shift rule: 2 * (input + weight slots) circuit executions."""
    grads = ordered_map(lambda ks: shift_gradient_single(job, ks[0], ks[1]),
                        _all_slots(job.template), threads)
    return _split_slots(job.template, grads)


def shift_jacobian(template: CircuitTemplate, observables, inputs, weights,
                   threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Jacobian of [<H_j>] w.r.t. inputs and weights (m x n_in, m x n_w).

    Each shifted state is measured against every observable, so the cost is
    still 2 * slots executions regardless of m.
    """
    x, w = check_vectors(template, inputs, weights)
    observables = tuple(observables)
    for obs in observables:
        check_observable(obs, template.num_qubits)

    def column(ks):
        plus, minus = _shifted_pair(template, observables, x, w, ks[0], ks[1], SHIFT)
        return 0.5 * (plus - minus)

    cols = ordered_map(column, _all_slots(template), threads)
    jac = np.array(cols).T if cols else np.zeros((len(observables), 0))
    jac = jac.reshape(len(observables), template.num_input_slots + template.num_weight_slots)
    n_in = template.num_input_slots
    return jac[:, :n_in].copy(), jac[:, n_in:].copy()


# ---------- finite differences ----------
def finite_difference_gradient(job: ExpectationJob, h: float = DEFAULT_FD_STEP) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = FD_STEP_RANGE
    if not lo <= h <= hi:
        raise UsageError(f"finite-difference step must be in [{lo:g}, {hi:g}], got {h:g}")
    grads = []
    for kind, slot in _all_slots(job.template):
        plus, minus = _shifted_pair(job.template, (job.observable,), job.inputs, job.weights, kind, slot, h)
        grads.append((plus[0] - minus[0]) / (2 * h))
    return _split_slots(job.template, grads)


# ---------- adjoint ----------
def adjoint_vjp(template: CircuitTemplate, observables, upstream, inputs, weights) -> tuple[np.ndarray, np.ndarray]:
    """sum_j upstream_j * d<H_j>/d(inputs, weights) from a single backward sweep.

    The sweep runs against H_eff = sum_j upstream_j H_j: with |psi_k> the state
    after gate k and <lambda_k| = <psi_L| H_eff G_L ... G_{k+1}, the derivative
    for the angle of gate k = exp(-i t/2 P) is Im <lambda_k| P |psi_k>.
    """
    x, w = check_vectors(template, inputs, weights)
    observables = tuple(observables)
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if len(upstream) != len(observables):
        raise UsageError(f"got {len(upstream)} upstream values for {len(observables)} observables")
    h_eff = Observable.combine(observables, upstream)
    n = template.num_qubits
    check_observable(h_eff, n)

    psi = prepare_amplitudes(template, x, w)
    lam = observable_amplitudes(psi, n, h_eff)
    d_x, d_w = np.zeros(len(x)), np.zeros(len(w))

    for gate in reversed(template.gates):
        if isinstance(gate, Rotation):
            ref = gate.param
            if ref.kind is not SlotKind.CONST:
                g = np.vdot(lam, pauli_amplitudes(psi, n, ((gate.qubit, gate.axis),))).imag
                if ref.kind is SlotKind.INPUT:
                    d_x[ref.slot] += g
                else:
                    d_w[ref.slot] += g
            angle = -resolve_angle(ref, x, w)
            rotate_amplitudes(psi, n, gate.axis, gate.qubit, angle)
            rotate_amplitudes(lam, n, gate.axis, gate.qubit, angle)
        else:
            cnot_amplitudes(psi, n, gate.control, gate.target)
            cnot_amplitudes(lam, n, gate.control, gate.target)
    return d_x, d_w


def adjoint_gradient(job: ExpectationJob) -> tuple[np.ndarray, np.ndarray]:
    return adjoint_vjp(job.template, (job.observable,), (1.0,), job.inputs, job.weights)


def relative_error(a, b) -> float:
    """max |a - b| / max(1, |b|) over all components."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))
