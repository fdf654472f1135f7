# core/simcore.py
"""Dense state-vector simulation.

Amplitude ordering: qubit 0 is the most significant bit of the basis index, so
`|q0 q1 ... q(n-1)>` sits at index `q0 * 2**(n-1) + ... + q(n-1)`.

The public operations (`apply_rotation`, `apply_cnot`, `expectation`) have value
semantics. The `*_amplitudes` kernels below them work in place on a raw numpy
buffer and are what the circuit runner and the gradient engines use.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, UsageError

logger = logging.getLogger(__name__)

# =================== CONSTANTS ===================
MAX_QUBITS = 24
AXES = ("X", "Y", "Z")


# =================== DOMAIN TYPES ===================
@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state of `num_qubits` qubits as 2**num_qubits complex amplitudes."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not isinstance(self.num_qubits, (int, np.integer)) or not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ConfigurationError(f"qubit count must be in 1..{MAX_QUBITS}, got {self.num_qubits}")
        object.__setattr__(self, "num_qubits", int(self.num_qubits))
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1))
        if len(self.amplitudes) != 1 << self.num_qubits:
            raise UsageError(
                f"expected {1 << self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got {len(self.amplitudes)}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class PauliString:
    """coefficient * P_{q1} P_{q2} ... with identity on every unlisted qubit.

    `factors` is kept as a tuple of (qubit, axis) pairs sorted by qubit; an empty
    tuple is the identity term.
    """

    factors: tuple[tuple[int, str], ...] = ()
    coefficient: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise ConfigurationError(f"Pauli coefficient must be finite, got {self.coefficient}")
        seen = set()
        for qubit, axis in self.factors:
            if axis not in AXES:
                raise ConfigurationError(f"unknown Pauli axis {axis!r}")
            if qubit < 0 or qubit in seen:
                raise ConfigurationError(f"invalid or repeated qubit {qubit} in Pauli string")
            seen.add(qubit)
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @classmethod
    def from_map(cls, factors: dict[int, str], coefficient: float = 1.0) -> "PauliString":
        return cls(tuple(factors.items()), coefficient)

    @property
    def max_qubit(self) -> int:
        return max((q for q, _ in self.factors), default=-1)


@dataclass(frozen=True)
class Observable:
    """Real-weighted sum of Pauli strings."""

    terms: tuple[PauliString, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def single(cls, axis: str, qubit: int, coefficient: float = 1.0) -> "Observable":
        return cls((PauliString(((qubit, axis),), coefficient),))

    @property
    def max_qubit(self) -> int:
        return max((t.max_qubit for t in self.terms), default=-1)

    def scaled(self, factor: float) -> "Observable":
        return Observable(tuple(PauliString(t.factors, t.coefficient * factor) for t in self.terms))

    @staticmethod
    def combine(observables, coefficients) -> "Observable":
        """sum_j c_j H_j as a single observable (terms are concatenated, not merged)."""
        terms = []
        for obs, c in zip(observables, coefficients, strict=True):
            terms.extend(obs.scaled(float(c)).terms)
        return Observable(tuple(terms))


def projector(assignment: dict[int, int]) -> Observable:
    """|b><b| on the listed qubits, expanded into 2**q Pauli strings.

    Each factor is (I + s Z)/2 with s = +1 for bit 0 and -1 for bit 1.
    """
    for qubit, bit in assignment.items():
        if bit not in (0, 1) or qubit < 0:
            raise ConfigurationError(f"invalid projector assignment {qubit}: {bit}")
    return _projector(tuple(sorted(assignment.items())))


@lru_cache(maxsize=64)
def _projector(items: tuple[tuple[int, int], ...]) -> Observable:
    scale = 0.5 ** len(items)
    terms = []
    for mask in range(1 << len(items)):
        factors, sign = [], 1.0
        for pos, (qubit, bit) in enumerate(items):
            if mask >> pos & 1:
                factors.append((qubit, "Z"))
                if bit:
                    sign = -sign
        terms.append(PauliString(tuple(factors), sign * scale))
    return Observable(tuple(terms))


# =================== VALIDATION ===================
def _check_qubit(qubit: int, num_qubits: int):
    if not 0 <= qubit < num_qubits:
        raise UsageError(f"qubit index {qubit} out of range for {num_qubits} qubits")


def _check_axis(axis: str):
    if axis not in AXES:
        raise UsageError(f"rotation axis must be one of {AXES}, got {axis!r}")


def check_observable(obs: Observable, num_qubits: int):
    if obs.max_qubit >= num_qubits:
        raise UsageError(
            f"observable acts on qubit {obs.max_qubit} but the state has {num_qubits} qubits"
        )


# =================== IN-PLACE KERNELS ===================
def _split(amps: np.ndarray, num_qubits: int, qubit: int) -> np.ndarray:
    # view with the target qubit as the middle axis
    return amps.reshape(1 << qubit, 2, 1 << (num_qubits - qubit - 1))


def rotate_amplitudes(amps: np.ndarray, num_qubits: int, axis: str, qubit: int, angle: float):
    """Apply exp(-i angle/2 P_axis) on `qubit`, in place."""
    v = _split(amps, num_qubits, qubit)
    v0, v1 = v[:, 0, :], v[:, 1, :]
    if axis == "Z":
        phase = complex(math.cos(angle / 2), -math.sin(angle / 2))
        v0 *= phase
        v1 *= phase.conjugate()
        return
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if axis == "X":
        t0 = c * v0 - 1j * s * v1
        t1 = c * v1 - 1j * s * v0
    else:
        t0 = c * v0 - s * v1
        t1 = c * v1 + s * v0
    v0[...] = t0
    v1[...] = t1


def cnot_amplitudes(amps: np.ndarray, num_qubits: int, control: int, target: int):
    t = amps.reshape((2,) * num_qubits)
    lo = [slice(None)] * num_qubits
    hi = [slice(None)] * num_qubits
    lo[control] = hi[control] = 1
    lo[target], hi[target] = 0, 1
    lo, hi = tuple(lo), tuple(hi)
    tmp = t[lo].copy()
    t[lo] = t[hi]
    t[hi] = tmp


def pauli_amplitudes(amps: np.ndarray, num_qubits: int, factors) -> np.ndarray:
    """Return P|amps> for a tuple of (qubit, axis) factors (new buffer)."""
    out = amps.copy()
    for qubit, axis in factors:
        v = _split(out, num_qubits, qubit)
        if axis == "Z":
            v[:, 1, :] *= -1
        elif axis == "X":
            v[...] = v[:, ::-1, :].copy()
        else:
            v0 = v[:, 0, :].copy()
            v[:, 0, :] = -1j * v[:, 1, :]
            v[:, 1, :] = 1j * v0
    return out


def observable_amplitudes(amps: np.ndarray, num_qubits: int, obs: Observable) -> np.ndarray:
    """Return H|amps> (not normalized)."""
    out = np.zeros_like(amps)
    for term in obs.terms:
        if term.factors:
            out += term.coefficient * pauli_amplitudes(amps, num_qubits, term.factors)
        else:
            out += term.coefficient * amps
    return out


def expectation_amplitudes(amps: np.ndarray, num_qubits: int, obs: Observable) -> float:
    total = 0.0
    for term in obs.terms:
        if term.factors:
            value = np.vdot(amps, pauli_amplitudes(amps, num_qubits, term.factors))
        else:
            value = np.vdot(amps, amps)
        # Hermitian terms: the imaginary part is rounding residue
        total += term.coefficient * value.real
    return float(total)


# =================== PUBLIC OPERATIONS ===================
def init_zero_state(num_qubits: int) -> StateVector:
    """|0...0> on `num_qubits` qubits."""
    if not isinstance(num_qubits, (int, np.integer)) or not 1 <= num_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"qubit count must be in 1..{MAX_QUBITS}, got {num_qubits}")
    amps = np.zeros(1 << int(num_qubits), dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(int(num_qubits), amps)


def apply_rotation(state: StateVector, axis: str, qubit: int, angle: float) -> StateVector:
    _check_axis(axis)
    _check_qubit(qubit, state.num_qubits)
    if not math.isfinite(angle):
        raise UsageError(f"rotation angle must be finite, got {angle}")
    out = state.copy()
    rotate_amplitudes(out.amplitudes, out.num_qubits, axis, qubit, float(angle))
    return out


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    if control == target:
        raise UsageError(f"CNOT control and target must differ (both {control})")
    _check_qubit(control, state.num_qubits)
    _check_qubit(target, state.num_qubits)
    out = state.copy()
    cnot_amplitudes(out.amplitudes, out.num_qubits, control, target)
    return out


def expectation(state: StateVector, obs: Observable) -> float:
    """<state|obs|state>, exactly real."""
    check_observable(obs, state.num_qubits)
    return expectation_amplitudes(state.amplitudes, state.num_qubits, obs)


def apply_observable(state: StateVector, obs: Observable) -> np.ndarray:
    check_observable(obs, state.num_qubits)
    return observable_amplitudes(state.amplitudes, state.num_qubits, obs)


def probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2
