# core/layers.py
"""Quantum and classical layers with a common forward/backward contract.

A quantum layer maps x to [<psi|V(W)^dagger H_j V(W)|psi> + b_j]_j with
|psi> = U(x)|0...0>. For differentiation U then V is treated as one circuit
whose slots split into inputs (from U) and weights (from V).
"""
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property, singledispatch

import numpy as np

from .errors import ConfigurationError, UsageError
from .grad import adjoint_vjp, shift_jacobian
from .pqc import CircuitTemplate, ParamRef, Rotation, check_vectors, compose, prepare_amplitudes
from .simcore import Observable, check_observable, expectation_amplitudes

logger = logging.getLogger(__name__)

ENGINES = ("adjoint", "shift")
MAX_ACTIVATION_QUBITS = 20


@dataclass(frozen=True, eq=False)
class LayerGrad:
    d_input: np.ndarray
    d_weights: np.ndarray
    d_bias: np.ndarray


def _vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite")
    return arr


# =================== QUANTUM LAYER ===================
@dataclass(frozen=True, eq=False)
class QnnLayer:
    encoder: CircuitTemplate
    transformation: CircuitTemplate
    observables: tuple[Observable, ...]
    weights: np.ndarray
    bias: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "observables", tuple(self.observables))
        object.__setattr__(self, "weights", _vector(self.weights, "weights"))
        object.__setattr__(self, "bias", _vector(self.bias, "bias"))
        if self.encoder.num_weight_slots or self.transformation.num_input_slots:
            raise ConfigurationError("encoder must have only input slots, transformation only weight slots")
        if self.encoder.num_qubits != self.transformation.num_qubits:
            raise ConfigurationError("encoder and transformation act on different qubit counts")
        if not self.observables:
            raise ConfigurationError("a quantum layer needs at least one observable")
        for obs in self.observables:
            check_observable(obs, self.num_qubits)
        if len(self.weights) != self.transformation.num_weight_slots:
            raise ConfigurationError(
                f"transformation has {self.transformation.num_weight_slots} weight slots, "
                f"got {len(self.weights)} weights"
            )
        if len(self.bias) not in (0, len(self.observables)):
            raise ConfigurationError(f"bias must be empty or length {len(self.observables)}, got {len(self.bias)}")

    @classmethod
    def from_templates(cls, encoder, transformation, observables, bias=None, weights=None) -> "QnnLayer":
        """Layer with zero weights (and zero bias when `bias` is True) unless values are given."""
        if weights is None:
            weights = np.zeros(transformation.num_weight_slots)
        if bias is True:
            bias = np.zeros(len(tuple(observables)))
        elif bias is None or bias is False:
            bias = np.zeros(0)
        return cls(encoder, transformation, tuple(observables), weights, bias)

    @cached_property
    def circuit(self) -> CircuitTemplate:
        return compose(self.encoder, self.transformation)

    @property
    def num_qubits(self) -> int:
        return self.encoder.num_qubits

    @property
    def input_dim(self) -> int:
        return self.encoder.num_input_slots

    @property
    def output_dim(self) -> int:
        return len(self.observables)

    def parameters(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights.copy(), "bias": self.bias.copy()}

    def with_parameters(self, params: dict) -> "QnnLayer":
        return replace(self, weights=params.get("weights", self.weights), bias=params.get("bias", self.bias))


def qnnl_forward(layer: QnnLayer, x) -> np.ndarray:
    """One state preparation; every observable is measured on the same final state."""
    x, w = check_vectors(layer.circuit, x, layer.weights)
    amps = prepare_amplitudes(layer.circuit, x, w)
    y = np.array([expectation_amplitudes(amps, layer.num_qubits, obs) for obs in layer.observables])
    if len(layer.bias):
        y = y + layer.bias
    return y


def qnnl_backward(layer: QnnLayer, x, upstream, engine: str = "adjoint", threads: int = 1) -> LayerGrad:
    x, w = check_vectors(layer.circuit, x, layer.weights)
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if len(upstream) != layer.output_dim:
        raise UsageError(f"upstream gradient has length {len(upstream)}, layer outputs {layer.output_dim}")
    if engine == "shift":
        jx, jw = shift_jacobian(layer.circuit, layer.observables, x, w, threads)
        d_input, d_weights = upstream @ jx, upstream @ jw
    elif engine == "adjoint":
        d_input, d_weights = adjoint_vjp(layer.circuit, layer.observables, upstream, x, w)
    else:
        raise UsageError(f"gradient engine must be one of {ENGINES}, got {engine!r}")
    d_bias = upstream.copy() if len(layer.bias) else np.zeros(0)
    return LayerGrad(d_input, d_weights, d_bias)


def make_cosine_activation_layer(m: int) -> QnnLayer:
    """R_y(x_j) on qubit j measured with Z_j: forward(x) == cos(x) elementwise.

    Z_j = 2|0><0|_j - I, the affine rescaling of the single-qubit projector.
    """
    if not 1 <= m <= MAX_ACTIVATION_QUBITS:
        raise ConfigurationError(f"activation width must be in 1..{MAX_ACTIVATION_QUBITS}, got {m}")
    encoder = CircuitTemplate.from_gates(m, [Rotation("Y", j, ParamRef.input(j)) for j in range(m)])
    transformation = CircuitTemplate(m, (), 0, 0)
    observables = [Observable.single("Z", j) for j in range(m)]
    return QnnLayer.from_templates(encoder, transformation, observables, bias=True)


# =================== AFFINE LAYER ===================
@dataclass(frozen=True, eq=False)
class AffineLayer:
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        weight = np.array(self.weight, dtype=np.float64)
        if weight.ndim != 2:
            raise ConfigurationError(f"affine weight must be a matrix, got shape {weight.shape}")
        if not np.all(np.isfinite(weight)):
            raise ConfigurationError("affine weight must be finite")
        bias = _vector(self.bias, "bias")
        if len(bias) != weight.shape[0]:
            raise ConfigurationError(f"bias length {len(bias)} does not match {weight.shape[0]} outputs")
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)

    @classmethod
    def zeros(cls, n_in: int, n_out: int) -> "AffineLayer":
        return cls(np.zeros((n_out, n_in)), np.zeros(n_out))

    @property
    def input_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weight.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"weights": self.weight.copy(), "bias": self.bias.copy()}

    def with_parameters(self, params: dict) -> "AffineLayer":
        weight = np.asarray(params.get("weights", self.weight), dtype=np.float64).reshape(self.weight.shape)
        return AffineLayer(weight, params.get("bias", self.bias))


def _check_input(layer, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if len(x) != layer.input_dim:
        raise UsageError(f"layer takes {layer.input_dim} inputs, got {len(x)}")
    return x


def affine_forward(layer: AffineLayer, x) -> np.ndarray:
    return layer.weight @ _check_input(layer, x) + layer.bias


def affine_backward(layer: AffineLayer, x, upstream) -> LayerGrad:
    x = _check_input(layer, x)
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if len(upstream) != layer.output_dim:
        raise UsageError(f"upstream gradient has length {len(upstream)}, layer outputs {layer.output_dim}")
    return LayerGrad(layer.weight.T @ upstream, np.outer(upstream, x).reshape(-1), upstream.copy())


# =================== DISPATCH ===================
@singledispatch
def layer_forward(layer, x) -> np.ndarray:
    raise UsageError(f"unsupported layer type {type(layer).__name__}")


@layer_forward.register
def _(layer: QnnLayer, x) -> np.ndarray:
    return qnnl_forward(layer, x)


@layer_forward.register
def _(layer: AffineLayer, x) -> np.ndarray:
    return affine_forward(layer, x)


@singledispatch
def layer_backward(layer, x, upstream, engine: str = "adjoint", threads: int = 1) -> LayerGrad:
    raise UsageError(f"unsupported layer type {type(layer).__name__}")


@layer_backward.register
def _(layer: QnnLayer, x, upstream, engine: str = "adjoint", threads: int = 1) -> LayerGrad:
    return qnnl_backward(layer, x, upstream, engine, threads)


@layer_backward.register
def _(layer: AffineLayer, x, upstream, engine: str = "adjoint", threads: int = 1) -> LayerGrad:
    return affine_backward(layer, x, upstream)
