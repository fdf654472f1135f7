# core/pqc.py
"""Circuit templates with symbolic angle slots, and the ansatz builders.

A template never holds numbers for its Input/Weight angles; `run` resolves them
from the vectors it is given. Builders reconstruct the encoder/transformation
layout from the layer parameter counts:

* encoder: `depth` blocks of rotation columns (one rotation per qubit, axis per
  column) each followed by an entangler. Input slots are handed out in circuit
  order, qubit-fastest inside a column; positions past `active_slots` become
  Const(0) pads, so padding fills the last columns first.
* transformation: an [X, Z] pair of columns, then `depth` blocks of
  entangler + [Z, X, Z] columns, every angle a Weight slot
  (num_qubits * (2 + 3 * depth) weights).
"""
import logging
import math
import threading
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, UsageError
from .simcore import AXES, StateVector, cnot_amplitudes, init_zero_state, rotate_amplitudes

logger = logging.getLogger(__name__)

# =================== CONSTANTS ===================
TRANSFORM_HEAD_AXES = ("X", "Z")
TRANSFORM_BLOCK_AXES = ("Z", "X", "Z")


# =================== EXECUTION COUNTER ===================
class ExecutionCounter:
    """Counts state preparations (circuit executions) across threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value = 0

    def increment(self):
        with self._lock:
            self._value += 1

    @property
    def value(self) -> int:
        return self._value

    def reset(self):
        with self._lock:
            self._value = 0


EXECUTIONS = ExecutionCounter()


# =================== DOMAIN TYPES ===================
class SlotKind(str, Enum):
    INPUT = "input"
    WEIGHT = "weight"
    CONST = "const"


@dataclass(frozen=True)
class ParamRef:
    kind: SlotKind
    slot: int = -1
    value: float = 0.0

    @classmethod
    def input(cls, slot: int) -> "ParamRef":
        return cls(SlotKind.INPUT, slot)

    @classmethod
    def weight(cls, slot: int) -> "ParamRef":
        return cls(SlotKind.WEIGHT, slot)

    @classmethod
    def const(cls, value: float = 0.0) -> "ParamRef":
        return cls(SlotKind.CONST, -1, float(value))


@dataclass(frozen=True)
class Rotation:
    axis: str
    qubit: int
    param: ParamRef


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int


GateTemplate = Rotation | Cnot


@dataclass(frozen=True)
class CircuitTemplate:
    num_qubits: int
    gates: tuple[GateTemplate, ...]
    num_input_slots: int
    num_weight_slots: int
    # builder name + arguments, kept so checkpoints can store a readable descriptor
    recipe: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not 1 <= self.num_qubits:
            raise ConfigurationError(f"template needs at least one qubit, got {self.num_qubits}")
        used = {SlotKind.INPUT: set(), SlotKind.WEIGHT: set()}
        for gate in self.gates:
            if isinstance(gate, Cnot):
                if gate.control == gate.target:
                    raise ConfigurationError(f"CNOT with control == target ({gate.control})")
                for q in (gate.control, gate.target):
                    self._check_qubit(q)
                continue
            if gate.axis not in AXES:
                raise ConfigurationError(f"unknown rotation axis {gate.axis!r}")
            self._check_qubit(gate.qubit)
            ref = gate.param
            if ref.kind is SlotKind.CONST:
                if not math.isfinite(ref.value):
                    raise ConfigurationError(f"constant angle must be finite, got {ref.value}")
            else:
                used[ref.kind].add(ref.slot)
        for kind, count in ((SlotKind.INPUT, self.num_input_slots), (SlotKind.WEIGHT, self.num_weight_slots)):
            if used[kind] != set(range(count)):
                raise ConfigurationError(
                    f"{kind.value} slots must be exactly 0..{count - 1}, template uses {sorted(used[kind])}"
                )

    def _check_qubit(self, qubit: int):
        if not 0 <= qubit < self.num_qubits:
            raise ConfigurationError(f"gate qubit {qubit} outside {self.num_qubits}-qubit template")

    @classmethod
    def from_gates(cls, num_qubits: int, gates, recipe: dict | None = None) -> "CircuitTemplate":
        """Build a template, inferring slot counts from the highest slot used."""
        gates = tuple(gates)
        counts = {SlotKind.INPUT: 0, SlotKind.WEIGHT: 0}
        for g in gates:
            if isinstance(g, Rotation) and g.param.kind is not SlotKind.CONST:
                counts[g.param.kind] = max(counts[g.param.kind], g.param.slot + 1)
        return cls(num_qubits, gates, counts[SlotKind.INPUT], counts[SlotKind.WEIGHT], recipe)

    @cached_property
    def bindings(self) -> dict[SlotKind, list[list[int]]]:
        """Gate indices bound to each Input and Weight slot."""
        out = {
            SlotKind.INPUT: [[] for _ in range(self.num_input_slots)],
            SlotKind.WEIGHT: [[] for _ in range(self.num_weight_slots)],
        }
        for i, g in enumerate(self.gates):
            if isinstance(g, Rotation) and g.param.kind is not SlotKind.CONST:
                out[g.param.kind][g.param.slot].append(i)
        return out

    @property
    def num_rotations(self) -> int:
        return sum(isinstance(g, Rotation) for g in self.gates)

    @property
    def num_pads(self) -> int:
        return sum(isinstance(g, Rotation) and g.param.kind is SlotKind.CONST for g in self.gates)


# =================== RUNNING ===================
def check_vectors(tmpl: CircuitTemplate, inputs, weights) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(inputs, dtype=np.float64).reshape(-1)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(x) != tmpl.num_input_slots:
        raise UsageError(f"template takes {tmpl.num_input_slots} inputs, got {len(x)}")
    if len(w) != tmpl.num_weight_slots:
        raise UsageError(f"template takes {tmpl.num_weight_slots} weights, got {len(w)}")
    return x, w


def resolve_angle(ref: ParamRef, x: np.ndarray, w: np.ndarray) -> float:
    if ref.kind is SlotKind.INPUT:
        return float(x[ref.slot])
    if ref.kind is SlotKind.WEIGHT:
        return float(w[ref.slot])
    return ref.value


def prepare_amplitudes(tmpl: CircuitTemplate, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Apply every gate to |0...0> in a fresh buffer. Vectors must already be checked."""
    EXECUTIONS.increment()
    n = tmpl.num_qubits
    amps = init_zero_state(n).amplitudes
    for gate in tmpl.gates:
        if isinstance(gate, Rotation):
            rotate_amplitudes(amps, n, gate.axis, gate.qubit, resolve_angle(gate.param, x, w))
        else:
            cnot_amplitudes(amps, n, gate.control, gate.target)
    return amps


def run(tmpl: CircuitTemplate, inputs=(), weights=()) -> StateVector:
    """State obtained by applying the template to |0...0> with angles resolved from the vectors."""
    x, w = check_vectors(tmpl, inputs, weights)
    return StateVector(tmpl.num_qubits, prepare_amplitudes(tmpl, x, w))


def compose(first: CircuitTemplate, second: CircuitTemplate) -> CircuitTemplate:
    """`first` then `second` on the same register: inputs from `first`, weights from `second`."""
    if first.num_qubits != second.num_qubits:
        raise ConfigurationError(
            f"cannot compose {first.num_qubits}-qubit and {second.num_qubits}-qubit templates"
        )
    if first.num_weight_slots or second.num_input_slots:
        raise ConfigurationError("compose expects an input-only template followed by a weight-only one")
    return CircuitTemplate(
        first.num_qubits,
        first.gates + second.gates,
        first.num_input_slots,
        second.num_weight_slots,
    )


# =================== BUILDERS ===================
def build_entangler(num_qubits: int, ring: bool = False) -> tuple[Cnot, ...]:
    """Linear CNOT chain CNOT(0,1) ... CNOT(n-2,n-1); `ring` closes it with CNOT(n-1,0)."""
    if num_qubits < 2:
        raise ConfigurationError(f"entangler needs at least 2 qubits, got {num_qubits}")
    chain = [Cnot(q, q + 1) for q in range(num_qubits - 1)]
    if ring and num_qubits > 2:
        chain.append(Cnot(num_qubits - 1, 0))
    return tuple(chain)


def build_encoder(num_qubits: int, depth_e: int, column_axes, active_slots: int,
                  ring: bool = False) -> CircuitTemplate:
    column_axes = tuple(column_axes)
    if depth_e < 1 or not column_axes:
        raise ConfigurationError("encoder needs depth >= 1 and at least one rotation column")
    if any(a not in AXES for a in column_axes):
        raise ConfigurationError(f"encoder column axes must be drawn from {AXES}, got {column_axes}")
    capacity = num_qubits * depth_e * len(column_axes)
    if not 0 <= active_slots <= capacity:
        raise ConfigurationError(
            f"encoder with {num_qubits} qubits x {depth_e} blocks x {len(column_axes)} columns "
            f"holds {capacity} inputs, asked for {active_slots}"
        )
    entangler = build_entangler(num_qubits, ring)

    gates, position = [], 0
    for _ in range(depth_e):
        for axis in column_axes:
            for qubit in range(num_qubits):
                ref = ParamRef.input(position) if position < active_slots else ParamRef.const(0.0)
                gates.append(Rotation(axis, qubit, ref))
                position += 1
        gates.extend(entangler)

    recipe = {
        "builder": "encoder",
        "num_qubits": num_qubits,
        "depth": depth_e,
        "column_axes": list(column_axes),
        "active_slots": active_slots,
        "ring": ring,
    }
    logger.debug("encoder %s: %d inputs, %d pads", recipe, active_slots, capacity - active_slots)
    return CircuitTemplate(num_qubits, tuple(gates), active_slots, 0, recipe)


def build_transformation(num_qubits: int, depth_t: int, ring: bool = False) -> CircuitTemplate:
    if num_qubits < 2 or depth_t < 1:
        raise ConfigurationError(
            f"transformation needs >= 2 qubits and depth >= 1, got {num_qubits} qubits, depth {depth_t}"
        )
    entangler = build_entangler(num_qubits, ring)
    gates, slot = [], 0

    def column(axis):
        nonlocal slot
        for qubit in range(num_qubits):
            gates.append(Rotation(axis, qubit, ParamRef.weight(slot)))
            slot += 1

    for axis in TRANSFORM_HEAD_AXES:
        column(axis)
    for _ in range(depth_t):
        gates.extend(entangler)
        for axis in TRANSFORM_BLOCK_AXES:
            column(axis)

    recipe = {"builder": "transformation", "num_qubits": num_qubits, "depth": depth_t, "ring": ring}
    return CircuitTemplate(num_qubits, tuple(gates), 0, slot, recipe)


def template_from_recipe(recipe: dict) -> CircuitTemplate:
    """Rebuild a template from the descriptor a builder attached to it."""
    builder = recipe.get("builder")
    if builder == "encoder":
        return build_encoder(recipe["num_qubits"], recipe["depth"], recipe["column_axes"],
                             recipe["active_slots"], recipe.get("ring", False))
    if builder == "transformation":
        return build_transformation(recipe["num_qubits"], recipe["depth"], recipe.get("ring", False))
    raise ConfigurationError(f"unknown template builder {builder!r}")
