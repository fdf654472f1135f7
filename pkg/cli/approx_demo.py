# cli/approx_demo.py
import itertools
import logging

import numpy as np
import pandas as pd

from core.approx import MonomialSpec, enumerate_specs, evaluate_polynomial, monomial_expectation
from core.layers import make_cosine_activation_layer, qnnl_forward

from .config import RunConfig
from .console import print_table, section

logger = logging.getLogger(__name__)

GRID_POINTS = 11
MAX_DEMO_DEGREE = 6
TOLERANCE = 1e-12


def monomial_table(max_vars: int = 2, max_degree: int = MAX_DEMO_DEGREE, points: int = GRID_POINTS) -> pd.DataFrame:
    """Worst grid point per monomial: one row per exponent spec."""
    grid = np.linspace(0.0, 1.0, points)
    rows = []
    for num_vars in range(1, max_vars + 1):
        for spec in enumerate_specs(num_vars, max_degree):
            worst = None
            for x in itertools.product(grid, repeat=num_vars):
                expected = float(np.prod([xi ** m for xi, m in zip(x, spec.exponents)]))
                computed = monomial_expectation(spec, x)
                err = abs(computed - expected)
                if worst is None or err > worst[3]:
                    worst = (x, expected, computed, err)
            x, expected, computed, err = worst
            rows.append({"spec": str(spec), "x": " ".join(f"{v:.1f}" for v in x),
                         "expected": expected, "computed": computed, "error": err})
    return pd.DataFrame(rows, columns=["spec", "x", "expected", "computed", "error"])


def cosine_table(seed: int, width: int = 3, rows: int = 8) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    layer = make_cosine_activation_layer(width)
    out = []
    for _ in range(rows):
        x = rng.uniform(-np.pi, np.pi, size=width)
        y = qnnl_forward(layer, x)
        out.append({"x": " ".join(f"{v:+.3f}" for v in x),
                    "max_error": float(np.max(np.abs(y - np.cos(x))))})
    return pd.DataFrame(out, columns=["x", "max_error"])


def polynomial_table(seed: int, rows: int = 5) -> pd.DataFrame:
    """p(x1, x2) = 0.5 - 2 x1^2 + 3 x1 x2^3 through the monomial bank and an affine head."""
    terms = [(-2.0, MonomialSpec((2, 0))), (3.0, MonomialSpec((1, 3)))]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(rows):
        x = rng.uniform(0.0, 1.0, size=2)
        expected = 0.5 - 2.0 * x[0] ** 2 + 3.0 * x[0] * x[1] ** 3
        computed = evaluate_polynomial(terms, x, constant=0.5)
        out.append({"x": f"{x[0]:.3f} {x[1]:.3f}", "expected": expected,
                    "computed": computed, "error": abs(computed - expected)})
    return pd.DataFrame(out, columns=["x", "expected", "computed", "error"])


def run_approx_demo(cfg: RunConfig) -> int:
    monomials = monomial_table()
    cosines = cosine_table(cfg.seed)
    polynomials = polynomial_table(cfg.seed)

    with section("monomial circuits (worst point of an 11-point grid per variable)"):
        print_table(monomials)
    with section("cosine activation layer"):
        print_table(cosines)
    with section("polynomial = monomial bank + affine layer"):
        print_table(polynomials)

    worst = {
        "monomial": float(monomials["error"].max()),
        "cosine": float(cosines["max_error"].max()),
        "polynomial": float(polynomials["error"].max()),
    }
    for name, err in worst.items():
        print(f"max {name} error: {err:.3e}")
    # polynomial outputs are held to 1e-10
    ok = worst["monomial"] <= TOLERANCE and worst["cosine"] <= TOLERANCE and worst["polynomial"] <= 1e-10
    if not ok:
        logger.error("exactness tolerance exceeded: %s", worst)
    return 0 if ok else 1
