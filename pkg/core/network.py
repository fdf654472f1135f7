# core/network.py
"""Layer stacks, the one-hot squared-error loss, Adam and the training loop."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .data import BinaryDataset
from .errors import ConfigurationError, UsageError
from .layers import ENGINES, AffineLayer, LayerGrad, QnnLayer, layer_backward, layer_forward
from .parallel import ordered_map
from .pqc import build_encoder, build_transformation
from .simcore import Observable, projector

logger = logging.getLogger(__name__)

# =================== CONSTANTS ===================
LOG_COLUMNS = ["iteration", "train_loss", "test_loss", "test_accuracy", "eta"]
DEFAULT_SCHEDULE = ((0, 0.01), (200, 0.001))
INIT_RANGE = (-math.pi, math.pi)


# =================== NETWORK ===================
class Network:
    """Ordered stack of quantum and affine layers, n_0 -> n_1 -> ... -> n_l."""

    def __init__(self, layers):
        self.layers = list(layers)
        if not self.layers:
            raise ConfigurationError("a network needs at least one layer")
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.output_dim != b.input_dim:
                raise ConfigurationError(
                    f"layer {i} outputs {a.output_dim} values but layer {i + 1} takes {b.input_dim}"
                )
        self.version = 0

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable arrays by name (`layers.<i>.weights|bias`); empty arrays are left out."""
        out = {}
        for i, layer in enumerate(self.layers):
            for key, arr in layer.parameters().items():
                if arr.size:
                    out[f"layers.{i}.{key}"] = arr
        return out

    def set_parameters(self, params: dict):
        per_layer = [{} for _ in self.layers]
        for name, arr in params.items():
            _, idx, key = name.split(".")
            per_layer[int(idx)][key] = np.asarray(arr, dtype=np.float64)
        self.layers = [layer.with_parameters(p) if p else layer for layer, p in zip(self.layers, per_layer)]
        self.version += 1

    def num_parameters(self) -> int:
        return sum(arr.size for arr in self.parameters().values())

    def __repr__(self):
        dims = [self.input_dim] + [layer.output_dim for layer in self.layers]
        return f"Network({' -> '.join(map(str, dims))}, {self.num_parameters()} parameters)"


@dataclass(frozen=True, eq=False)
class Trace:
    inputs: list
    output: np.ndarray
    version: int


def forward(net: Network, x) -> tuple[np.ndarray, Trace]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if len(x) != net.input_dim:
        raise UsageError(f"network takes {net.input_dim} inputs, got {len(x)}")
    inputs = []
    for layer in net.layers:
        inputs.append(x)
        x = layer_forward(layer, x)
    return x, Trace(inputs, x, net.version)


def backward(net: Network, trace: Trace, dl_dy, engine: str = "adjoint") -> list[LayerGrad]:
    """Chain rule right to left; returns one LayerGrad per layer."""
    if trace.version != net.version or len(trace.inputs) != len(net.layers):
        raise UsageError("trace is stale: the network changed since the forward pass")
    upstream = np.asarray(dl_dy, dtype=np.float64).reshape(-1)
    grads = [None] * len(net.layers)
    for i in reversed(range(len(net.layers))):
        grads[i] = layer_backward(net.layers[i], trace.inputs[i], upstream, engine)
        upstream = grads[i].d_input
    return grads


def grads_by_name(net: Network, grads: list[LayerGrad]) -> dict[str, np.ndarray]:
    """LayerGrads reshaped and keyed like `net.parameters()`."""
    params = net.parameters()
    out = {}
    for i, g in enumerate(grads):
        for key, value in (("weights", g.d_weights), ("bias", g.d_bias)):
            name = f"layers.{i}.{key}"
            if name in params:
                out[name] = np.asarray(value).reshape(params[name].shape)
    return out


# =================== LOSS ===================
def loss_mse_onehot(y_pred, label: int) -> tuple[float, np.ndarray]:
    """|y - e_label|^2 and its gradient 2 (y - e_label)."""
    if label not in (0, 1):
        raise UsageError(f"label must be 0 or 1, got {label}")
    y = np.asarray(y_pred, dtype=np.float64).reshape(-1)
    target = np.zeros_like(y)
    target[label] = 1.0
    diff = y - target
    return float(diff @ diff), 2.0 * diff


# =================== OPTIMIZER ===================
def eta_at(schedule, step: int) -> float:
    """Rate of the last schedule entry whose start is <= step."""
    eta = schedule[0][1]
    for start, value in schedule:
        if start <= step:
            eta = value
    return float(eta)


@dataclass(eq=False)
class AdamState:
    lr_schedule: tuple = DEFAULT_SCHEDULE
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lr_schedule = tuple((int(s), float(e)) for s, e in self.lr_schedule)
        if not self.lr_schedule or list(self.lr_schedule) != sorted(self.lr_schedule):
            raise ConfigurationError(f"learning-rate schedule must be non-empty and sorted, got {self.lr_schedule}")
        if self.step < 0:
            raise ConfigurationError("optimizer step must be >= 0")

    @property
    def eta(self) -> float:
        return eta_at(self.lr_schedule, self.step)


def adam_step(state: AdamState, params: dict, grads: dict) -> dict:
    """One Adam update with bias correction; moments in `state` are updated in place."""
    if params.keys() != grads.keys():
        raise UsageError(f"parameter/gradient names differ: {sorted(params)} vs {sorted(grads)}")
    eta = state.eta
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    out = {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise UsageError(f"gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        out[name] = p - eta * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return out


# =================== TRAINING ===================
@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 400
    batch_size: int = 240
    lr_schedule: tuple = DEFAULT_SCHEDULE
    seed: int = 0
    gradient_engine: str = "adjoint"
    eval_every: int = 10
    threads: int = 1

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigurationError(f"iterations must be >= 0, got {self.iterations}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch size must be >= 1, got {self.batch_size}")
        schedule = tuple((int(s), float(e)) for s, e in self.lr_schedule)
        if not schedule or list(schedule) != sorted(schedule):
            raise ConfigurationError(f"learning-rate schedule must be non-empty and sorted, got {schedule}")
        object.__setattr__(self, "lr_schedule", schedule)
        if self.gradient_engine not in ENGINES:
            raise ConfigurationError(f"gradient engine must be one of {ENGINES}, got {self.gradient_engine!r}")


@dataclass(eq=False)
class TrainResult:
    network: Network
    optimizer: AdamState
    log: pd.DataFrame


def initialize_parameters(net: Network, seed: int):
    """Every weight and bias uniform in (-pi, pi), drawn layer by layer in name order."""
    rng = np.random.default_rng(seed)
    lo, hi = INIT_RANGE
    net.set_parameters({name: rng.uniform(lo, hi, size=p.shape) for name, p in net.parameters().items()})


def batch_indices(num_samples: int, batch_size: int, seed: int, step: int) -> np.ndarray:
    """Batch for a given step: epoch-wise shuffles without replacement, tail batches dropped.

    Epoch e uses the permutation of default_rng([seed, e]), so any step can be
    recomputed without replaying the ones before it.
    """
    per_epoch = num_samples // batch_size
    epoch, offset = divmod(step, per_epoch)
    order = np.random.default_rng([seed, epoch]).permutation(num_samples)
    return order[offset * batch_size:(offset + 1) * batch_size]


def sample_loss_and_grads(net: Network, x, label: int, engine: str = "adjoint") -> tuple[float, dict]:
    y, trace = forward(net, x)
    loss, dl_dy = loss_mse_onehot(y, label)
    return loss, grads_by_name(net, backward(net, trace, dl_dy, engine))


def batch_loss_and_gradients(net: Network, batch: BinaryDataset, engine: str = "adjoint",
                             threads: int = 1) -> tuple[float, dict]:
    """Mean loss and mean gradients; per-sample results are summed in sample order."""
    results = ordered_map(
        lambda i: sample_loss_and_grads(net, batch.features[i], int(batch.labels[i]), engine),
        range(len(batch)), threads,
    )
    total = 0.0
    grads = {name: np.zeros_like(p) for name, p in net.parameters().items()}
    for loss, sample_grads in results:
        total += loss
        for name, g in sample_grads.items():
            grads[name] += g
    scale = 1.0 / len(batch)
    return total * scale, {name: g * scale for name, g in grads.items()}


def evaluate(net: Network, dataset: BinaryDataset, threads: int = 1) -> tuple[float, float]:
    """(mean loss, accuracy); argmax ties go to label 0."""
    if len(dataset) == 0:
        return float("nan"), float("nan")
    outputs = ordered_map(lambda i: forward(net, dataset.features[i])[0], range(len(dataset)), threads)
    total, correct = 0.0, 0
    for y, label in zip(outputs, dataset.labels):
        total += loss_mse_onehot(y, int(label))[0]
        correct += int(np.argmax(y)) == int(label)
    return total / len(dataset), correct / len(dataset)


def train(net: Network, dataset: BinaryDataset, config: TrainConfig, test_set: BinaryDataset | None = None,
          optimizer: AdamState | None = None, callback=None) -> TrainResult:
    """Run `config.iterations` Adam steps over mini-batches of `dataset`.

    Without an `optimizer` the parameters are freshly initialized from the seed;
    passing a restored optimizer resumes at its step. `callback(iteration, net,
    optimizer, log)` runs after every update with the log rows so far.
    """
    if len(dataset) == 0:
        raise ConfigurationError("training set is empty")
    batch_size = config.batch_size
    if batch_size > len(dataset):
        logger.warning("batch size %d exceeds %d training samples; using full batches", batch_size, len(dataset))
        batch_size = len(dataset)
    if optimizer is None:
        initialize_parameters(net, config.seed)
        optimizer = AdamState(lr_schedule=config.lr_schedule)

    rows = []
    if optimizer.step == 0 and test_set is not None:
        test_loss, test_acc = evaluate(net, test_set, config.threads)
        rows.append(_log_row(0, math.nan, test_loss, test_acc, optimizer.eta))
        logger.info("iteration 0: test loss %.6f, test accuracy %.4f", test_loss, test_acc)

    for step in range(optimizer.step, config.iterations):
        batch = dataset.subset(batch_indices(len(dataset), batch_size, config.seed, step))
        loss, grads = batch_loss_and_gradients(net, batch, config.gradient_engine, config.threads)
        eta = optimizer.eta
        net.set_parameters(adam_step(optimizer, net.parameters(), grads))
        iteration = step + 1

        test_loss = test_acc = math.nan
        due = config.eval_every > 0 and iteration % config.eval_every == 0
        if test_set is not None and (due or iteration == config.iterations):
            test_loss, test_acc = evaluate(net, test_set, config.threads)
            logger.info("iteration %d: train loss %.6f, test loss %.6f, test accuracy %.4f, eta %g",
                        iteration, loss, test_loss, test_acc, eta)
        else:
            logger.debug("iteration %d: train loss %.6f", iteration, loss)
        rows.append(_log_row(iteration, loss, test_loss, test_acc, eta))
        if callback is not None:
            callback(iteration, net, optimizer, pd.DataFrame(rows, columns=LOG_COLUMNS))

    return TrainResult(net, optimizer, pd.DataFrame(rows, columns=LOG_COLUMNS))


def _log_row(iteration, train_loss, test_loss, test_accuracy, eta) -> dict:
    return {"iteration": iteration, "train_loss": train_loss, "test_loss": test_loss,
            "test_accuracy": test_accuracy, "eta": eta}


# =================== REFERENCE ARCHITECTURE ===================
def _pauli_block(axes, num_qubits) -> list[Observable]:
    # all qubits for the first axis, then all qubits for the next, ...
    return [Observable.single(axis, q) for axis in axes for q in range(num_qubits)]


def build_paper_network() -> Network:
    """Three quantum layers 64 -> 24 -> 12 -> 2 (8, 6 and 4 qubits), zero parameters.

    Parameters per layer (transformation + bias): 136 + 24, 84 + 12, 32 + 0.
    """
    input_layer = QnnLayer.from_templates(
        build_encoder(8, 2, ("Z", "X", "Z", "X"), 64),
        build_transformation(8, 5),
        _pauli_block(("X", "Y", "Z"), 8),
        bias=True,
    )
    hidden_layer = QnnLayer.from_templates(
        build_encoder(6, 1, ("Z", "X", "Z", "X", "Z"), 24),
        build_transformation(6, 4),
        _pauli_block(("Y", "Z"), 6),
        bias=True,
    )
    output_layer = QnnLayer.from_templates(
        build_encoder(4, 1, ("Z", "X", "Z", "X", "Z"), 12),
        build_transformation(4, 2),
        [projector({0: 0}), projector({0: 1})],
    )
    return Network([input_layer, hidden_layer, output_layer])


def build_affine_network(dims) -> Network:
    """Stack of zero-initialized affine layers with the given dimensions."""
    return Network([AffineLayer.zeros(a, b) for a, b in zip(dims, dims[1:])])
