# cli/checkpoint.py
"""Versioned JSON checkpoints.

Layout:
    {"format_version": 1,
     "architecture": [layer descriptors],
     "parameters": {"layers.<i>.weights": [...], ...},
     "step": int,
     "optimizer": {... Adam hyperparameters, schedule and moments ...} | null}

Floats are written with Python's shortest round-trip repr (at most 17
significant digits), so a reload reproduces every parameter bit for bit.
"""
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from core.errors import CheckpointError, QdnnError
from core.layers import AffineLayer, QnnLayer
from core.network import AdamState, Network
from core.pqc import CircuitTemplate, Cnot, ParamRef, Rotation, SlotKind, template_from_recipe
from core.simcore import Observable, PauliString

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass(eq=False)
class Checkpoint:
    network: Network
    step: int
    optimizer: AdamState | None


# ---------- architecture descriptors ----------
def template_to_dict(tmpl: CircuitTemplate) -> dict:
    if tmpl.recipe is not None:
        return {"recipe": tmpl.recipe}
    gates = []
    for g in tmpl.gates:
        if isinstance(g, Cnot):
            gates.append(["CNOT", g.control, g.target])
        else:
            p = g.param
            ref = ["const", p.value] if p.kind is SlotKind.CONST else [p.kind.value, p.slot]
            gates.append(["R" + g.axis, g.qubit, ref])
    return {"num_qubits": tmpl.num_qubits, "gates": gates}


def template_from_dict(d: dict) -> CircuitTemplate:
    if "recipe" in d:
        return template_from_recipe(d["recipe"])
    gates = []
    for g in d["gates"]:
        if g[0] == "CNOT":
            gates.append(Cnot(int(g[1]), int(g[2])))
            continue
        kind, arg = g[2]
        if kind == "const":
            ref = ParamRef.const(float(arg))
        else:
            ref = ParamRef(SlotKind(kind), int(arg))
        gates.append(Rotation(g[0][1:], int(g[1]), ref))
    return CircuitTemplate.from_gates(int(d["num_qubits"]), gates)


def observable_to_list(obs: Observable) -> list:
    return [[t.coefficient, [[q, axis] for q, axis in t.factors]] for t in obs.terms]


def observable_from_list(terms: list) -> Observable:
    return Observable(tuple(PauliString(tuple((int(q), axis) for q, axis in factors), float(c))
                            for c, factors in terms))


def layer_descriptor(layer) -> dict:
    if isinstance(layer, QnnLayer):
        return {
            "kind": "qnn",
            "num_qubits": layer.num_qubits,
            "encoder": template_to_dict(layer.encoder),
            "transformation": template_to_dict(layer.transformation),
            "observables": [observable_to_list(o) for o in layer.observables],
            "bias": bool(len(layer.bias)),
        }
    if isinstance(layer, AffineLayer):
        return {"kind": "affine", "input_dim": layer.input_dim, "output_dim": layer.output_dim}
    raise CheckpointError(f"cannot describe layer type {type(layer).__name__}")


def network_descriptor(net: Network) -> list[dict]:
    return [layer_descriptor(layer) for layer in net.layers]


def network_from_descriptor(descriptor: list) -> Network:
    layers = []
    for d in descriptor:
        if d["kind"] == "qnn":
            layers.append(QnnLayer.from_templates(
                template_from_dict(d["encoder"]),
                template_from_dict(d["transformation"]),
                [observable_from_list(o) for o in d["observables"]],
                bias=bool(d["bias"]),
            ))
        elif d["kind"] == "affine":
            layers.append(AffineLayer.zeros(int(d["input_dim"]), int(d["output_dim"])))
        else:
            raise CheckpointError(f"unknown layer kind {d['kind']!r}")
    return Network(layers)


# ---------- save / load ----------
def _arrays_to_lists(arrays: dict) -> dict:
    return {name: np.asarray(a, dtype=np.float64).reshape(-1).tolist() for name, a in arrays.items()}


def _optimizer_to_dict(opt: AdamState) -> dict:
    return {
        "lr_schedule": [list(entry) for entry in opt.lr_schedule],
        "beta1": opt.beta1,
        "beta2": opt.beta2,
        "eps": opt.eps,
        "step": opt.step,
        "m": _arrays_to_lists(opt.m),
        "v": _arrays_to_lists(opt.v),
    }


def save_checkpoint(path, net: Network, step: int, optimizer: AdamState | None = None):
    doc = {
        "format_version": FORMAT_VERSION,
        "architecture": network_descriptor(net),
        "parameters": _arrays_to_lists(net.parameters()),
        "step": int(step),
        "optimizer": _optimizer_to_dict(optimizer) if optimizer is not None else None,
    }
    os.makedirs(os.path.dirname(os.fspath(path)) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    logger.info("checkpoint written to %s (step %d)", path, step)


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise CheckpointError(f"checkpoint {path} must hold a JSON object")

    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format version {version}; this build reads version {FORMAT_VERSION}"
        )
    try:
        net = network_from_descriptor(doc["architecture"])
        shapes = {name: p.shape for name, p in net.parameters().items()}
        if set(doc["parameters"]) != set(shapes):
            raise CheckpointError(f"checkpoint {path} parameters do not match its architecture")
        net.set_parameters({name: np.array(values, dtype=np.float64).reshape(shapes[name])
                            for name, values in doc["parameters"].items()})
        optimizer = None
        if doc.get("optimizer") is not None:
            o = doc["optimizer"]
            optimizer = AdamState(
                lr_schedule=tuple(tuple(e) for e in o["lr_schedule"]),
                beta1=float(o["beta1"]), beta2=float(o["beta2"]), eps=float(o["eps"]),
                step=int(o["step"]),
                m={k: np.array(v, dtype=np.float64).reshape(shapes[k]) for k, v in o["m"].items()},
                v={k: np.array(v, dtype=np.float64).reshape(shapes[k]) for k, v in o["v"].items()},
            )
        return Checkpoint(net, int(doc["step"]), optimizer)
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError, IndexError, QdnnError) as e:
        raise CheckpointError(f"checkpoint {path} is corrupted: {e!r}") from e


def load_architecture(path) -> Network:
    """Network (zero parameters) from a JSON file holding a descriptor list."""
    try:
        with open(path, encoding="utf-8") as f:
            return network_from_descriptor(json.load(f))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise CheckpointError(f"cannot read architecture {path}: {e}") from e
