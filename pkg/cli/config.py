# cli/config.py
"""Run settings shared by every subcommand.

Precedence, lowest first: RunConfig defaults, the `--config` JSON file,
`QDNN_<NAME>` environment variables, explicit command-line flags.
"""
import json
import math
import os
from dataclasses import dataclass, fields

from core.errors import ConfigurationError
from core.network import TrainConfig

ENV_PREFIX = "QDNN_"


@dataclass(frozen=True)
class RunConfig:
    # data / output
    data_dir: str = ""
    out_dir: str = "runs/latest"
    limit_train: int = 0
    limit_test: int = 0
    angle_scale: float = math.pi
    # training protocol
    architecture: str = "paper"
    iterations: int = 400
    batch: int = 240
    eta: float = 0.01
    eta2: float = 0.001
    switch_at: int = 200
    engine: str = "adjoint"
    seed: int = 0
    threads: int = 1
    eval_every: int = 10
    checkpoint_every: int = 50
    resume: str = ""
    # eval
    checkpoint: str = ""
    split: str = "test"
    # gradcheck
    jobs: int = 50
    min_qubits: int = 2
    max_qubits: int = 6
    layers: str = "paper"

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigurationError(f"--threads must be >= 1, got {self.threads}")
        if self.engine not in ("adjoint", "shift"):
            raise ConfigurationError(f"--engine must be 'adjoint' or 'shift', got {self.engine!r}")
        if self.split not in ("train", "test"):
            raise ConfigurationError(f"--split must be 'train' or 'test', got {self.split!r}")
        if self.layers not in ("paper", "none"):
            raise ConfigurationError(f"--layers must be 'paper' or 'none', got {self.layers!r}")
        if not 2 <= self.min_qubits <= self.max_qubits:
            raise ConfigurationError("gradcheck qubit range must satisfy 2 <= --min-qubits <= --max-qubits")

    def lr_schedule(self) -> tuple:
        if self.switch_at <= 0:
            return ((0, self.eta2),)
        return ((0, self.eta), (self.switch_at, self.eta2))

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            iterations=self.iterations,
            batch_size=self.batch,
            lr_schedule=self.lr_schedule(),
            seed=self.seed,
            gradient_engine=self.engine,
            eval_every=self.eval_every,
            threads=self.threads,
        )

    def require(self, name: str):
        """Raise a ConfigurationError naming the flag when a needed setting is empty."""
        if not getattr(self, name):
            flag = "--" + name.replace("_", "-")
            raise ConfigurationError(f"{flag} is required (or set {ENV_PREFIX}{name.upper()})")


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, value):
    kind = type(_FIELDS[name].default)
    if kind is int and isinstance(value, float) and not value.is_integer():
        raise ConfigurationError(f"setting {name!r}: expected an integer, got {value!r}")
    try:
        return kind(value)
    except (TypeError, ValueError, OverflowError) as e:
        raise ConfigurationError(f"setting {name!r}: cannot interpret {value!r} as {kind.__name__}") from e


def read_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            values = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}") from e
    if not isinstance(values, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    values = {k.replace("-", "_"): v for k, v in values.items()}
    unknown = sorted(set(values) - set(_FIELDS))
    if unknown:
        raise ConfigurationError(f"config file {path} has unknown settings: {', '.join(unknown)}")
    return values


def resolve_config(flags: dict, config_path: str | None = None, environ=None) -> RunConfig:
    """Merge defaults, config file, environment and flags (None flags are ignored)."""
    environ = os.environ if environ is None else environ
    values = read_config_file(config_path) if config_path else {}
    for name in _FIELDS:
        env_value = environ.get(ENV_PREFIX + name.upper())
        if env_value is not None:
            values[name] = env_value
    for name, value in flags.items():
        if name in _FIELDS and value is not None:
            values[name] = value
    return RunConfig(**{name: _coerce(name, v) for name, v in values.items()})
