# cli/gradcheck.py
"""Parameter shift vs finite differences vs adjoint, on random circuits and the full network."""
import logging

import numpy as np
import pandas as pd

from core.data import BinaryDataset
from core.grad import (ExpectationJob, adjoint_gradient, finite_difference_gradient, relative_error,
                       shift_gradient_all)
from core.layers import ENGINES
from core.network import (batch_loss_and_gradients, build_paper_network, evaluate,
                          initialize_parameters)
from core.pqc import CircuitTemplate, Cnot, ParamRef, Rotation
from core.simcore import AXES, Observable, PauliString

from .config import RunConfig
from .console import print_table, section

logger = logging.getLogger(__name__)

SHIFT_FD_TOL = 1e-6
SHIFT_ADJOINT_TOL = 1e-8
NETWORK_ABS_TOL = 1e-5
NETWORK_REL_TOL = 1e-4
FD_STEP = 1e-5
NETWORK_COLUMNS = ["parameter", "size", "vs_fd_abs", "vs_fd_rel", "failing", "shift_vs_fd", "shift_vs_adjoint"]


# ---------- random jobs ----------
def random_template(rng: np.random.Generator, num_qubits: int, depth: int = 3) -> CircuitTemplate:
    """Rotation columns with a random axis per gate, CNOT chains in between.

    Each rotation gets a fresh Input slot, a fresh Weight slot, or (rarely) a
    constant angle.
    """
    gates, n_in, n_w = [], 0, 0
    for _ in range(depth):
        for q in range(num_qubits):
            draw = rng.random()
            if draw < 0.45:
                ref, n_in = ParamRef.input(n_in), n_in + 1
            elif draw < 0.9:
                ref, n_w = ParamRef.weight(n_w), n_w + 1
            else:
                ref = ParamRef.const(float(rng.uniform(-np.pi, np.pi)))
            gates.append(Rotation(AXES[rng.integers(3)], q, ref))
        for q in rng.permutation(num_qubits - 1):
            gates.append(Cnot(int(q), int(q) + 1))
    return CircuitTemplate.from_gates(num_qubits, gates)


def random_observable(rng: np.random.Generator, num_qubits: int, num_terms: int = 3) -> Observable:
    terms = []
    for _ in range(num_terms):
        qubits = rng.choice(num_qubits, size=rng.integers(1, min(3, num_qubits) + 1), replace=False)
        factors = tuple((int(q), AXES[rng.integers(3)]) for q in qubits)
        terms.append(PauliString(factors, float(rng.uniform(-1, 1))))
    return Observable(tuple(terms))


def random_job(rng: np.random.Generator, num_qubits: int) -> ExpectationJob:
    tmpl = random_template(rng, num_qubits)
    return ExpectationJob(
        tmpl,
        random_observable(rng, num_qubits),
        rng.uniform(-np.pi, np.pi, size=tmpl.num_input_slots),
        rng.uniform(-np.pi, np.pi, size=tmpl.num_weight_slots),
    )


# ---------- checks ----------
def job_report(seed: int, jobs: int, min_qubits: int, max_qubits: int) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    rows = []
    for j in range(jobs):
        job = random_job(rng, int(rng.integers(min_qubits, max_qubits + 1)))
        shift = np.concatenate(shift_gradient_all(job))
        fd = np.concatenate(finite_difference_gradient(job, FD_STEP))
        adjoint = np.concatenate(adjoint_gradient(job))
        rows.append({
            "job": j,
            "qubits": job.template.num_qubits,
            "slots": len(shift),
            "shift_vs_fd": float(np.max(np.abs(shift - fd), initial=0.0)),
            "shift_vs_adjoint": float(np.max(np.abs(shift - adjoint), initial=0.0)),
        })
    return pd.DataFrame(rows, columns=["job", "qubits", "slots", "shift_vs_fd", "shift_vs_adjoint"])


def network_fd_gradients(net, batch: BinaryDataset, h: float = FD_STEP) -> dict:
    """Central differences of the mean batch loss for every scalar parameter."""
    base = net.parameters()
    out = {}
    for name, p in base.items():
        g = np.zeros(p.size)
        for k in range(p.size):
            for sign in (1.0, -1.0):
                moved = {n: a.copy() for n, a in base.items()}
                moved[name].reshape(-1)[k] += sign * h
                net.set_parameters(moved)
                g[k] += sign * evaluate(net, batch)[0]
            g[k] /= 2 * h
        out[name] = g.reshape(p.shape)
    net.set_parameters(base)
    return out


def network_report(seed: int, engine: str) -> pd.DataFrame:
    """Backprop through the three-layer network on a 2-sample batch vs finite differences.

    `vs_fd_*` and `failing` judge the chosen engine (abs 1e-5 or rel 1e-4 per
    component); `shift_vs_fd` and `shift_vs_adjoint` are the certification columns.
    """
    rng = np.random.default_rng(seed)
    net = build_paper_network()
    initialize_parameters(net, seed)
    batch = BinaryDataset(rng.uniform(0, np.pi, size=(2, net.input_dim)), [0, 1])

    grads = {name: batch_loss_and_gradients(net, batch, name)[1] for name in ENGINES}
    fd = network_fd_gradients(net, batch)

    rows = []
    for name in fd:
        a, f = grads[engine][name].ravel(), fd[name].ravel()
        shift, adjoint = grads["shift"][name].ravel(), grads["adjoint"][name].ravel()
        abs_err = np.abs(a - f)
        rel_err = abs_err / np.maximum(np.abs(f), 1e-300)
        rows.append({
            "parameter": name,
            "size": a.size,
            "vs_fd_abs": float(abs_err.max()),
            "vs_fd_rel": relative_error(a, f),
            "failing": int(np.sum((abs_err > NETWORK_ABS_TOL) & (rel_err > NETWORK_REL_TOL))),
            "shift_vs_fd": float(np.max(np.abs(shift - f))),
            "shift_vs_adjoint": float(np.max(np.abs(shift - adjoint))),
        })
    return pd.DataFrame(rows, columns=NETWORK_COLUMNS)


def network_passes(rows: pd.DataFrame) -> bool:
    return (rows["failing"].sum() == 0
            and rows["shift_vs_fd"].max() <= SHIFT_FD_TOL
            and rows["shift_vs_adjoint"].max() <= SHIFT_ADJOINT_TOL)


def run_gradcheck(cfg: RunConfig) -> int:
    jobs = job_report(cfg.seed, cfg.jobs, cfg.min_qubits, cfg.max_qubits)
    with section(f"random circuits ({cfg.jobs} jobs, {cfg.min_qubits}-{cfg.max_qubits} qubits)"):
        print_table(jobs)
    ok = True
    if not jobs.empty:
        max_fd, max_adj = jobs["shift_vs_fd"].max(), jobs["shift_vs_adjoint"].max()
        print(f"max |shift - fd| = {max_fd:.3e} (tolerance {SHIFT_FD_TOL:g})")
        print(f"max |shift - adjoint| = {max_adj:.3e} (tolerance {SHIFT_ADJOINT_TOL:g})")
        ok = max_fd <= SHIFT_FD_TOL and max_adj <= SHIFT_ADJOINT_TOL

    if cfg.layers == "paper":
        net_rows = network_report(cfg.seed, cfg.engine)
        with section(f"three-layer network, 2-sample batch, {cfg.engine} engine"):
            print_table(net_rows)
        print(f"components outside abs {NETWORK_ABS_TOL:g} / rel {NETWORK_REL_TOL:g}: {int(net_rows['failing'].sum())}")
        print(f"network max |shift - fd| = {net_rows['shift_vs_fd'].max():.3e} (tolerance {SHIFT_FD_TOL:g})")
        print(f"network max |shift - adjoint| = {net_rows['shift_vs_adjoint'].max():.3e} "
              f"(tolerance {SHIFT_ADJOINT_TOL:g})")
        ok = ok and network_passes(net_rows)

    if not ok:
        logger.error("gradient check failed")
    return 0 if ok else 1
