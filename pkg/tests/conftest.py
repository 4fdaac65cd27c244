"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's own evaluation paths:
matrix exponentials come from a truncated Taylor series, integrals from a
fixed-mesh composite Simpson rule, and coefficient values from explicit
column scans.
"""

from __future__ import annotations

import numpy as np
import pytest

import ergobounds as eb

TWO_STATE_Q = np.array([[-1.0, 1.0], [1.0, -1.0]])
PERTURBED_Q = np.array([[-1.1, 0.9], [1.1, -0.9]])


@pytest.fixture(scope="session")
def two_state():
    return eb.make_semigroup(eb.Classical(2), TWO_STATE_Q)


@pytest.fixture(scope="session")
def two_state_perturbed():
    return eb.make_semigroup(eb.Classical(2), PERTURBED_Q)


@pytest.fixture(scope="session")
def lifted_rotation():
    gen = np.zeros((3, 3))
    gen[1, 2] = -1.0
    gen[2, 1] = 1.0
    return eb.make_semigroup(eb.DirectSum(2, "l2"), gen)


def taylor_expm(q: np.ndarray, t: float, cutoff: float = 1e-14) -> np.ndarray:
    """Truncated Taylor series for exp(t*q), independent of scipy."""
    m = q.shape[0]
    term = np.eye(m)
    total = np.eye(m)
    k = 0
    while np.abs(term).max() > cutoff:
        k += 1
        term = term @ (t * q) / k
        total = total + term
        if k > 500:
            raise RuntimeError("Taylor oracle failed to converge")
    return total


def simpson_matrix(f, a: float, b: float, panels: int) -> np.ndarray:
    """Fixed-mesh composite Simpson rule for matrix-valued integrands."""
    if panels % 2:
        panels += 1
    grid = np.linspace(a, b, panels + 1)
    values = np.stack([np.asarray(f(s), dtype=float) for s in grid])
    h = (b - a) / panels
    return (h / 3.0) * (
        values[0]
        + values[-1]
        + 4.0 * values[1:-1:2].sum(axis=0)
        + 2.0 * values[2:-2:2].sum(axis=0)
    )


def brute_delta_classical(matrix: np.ndarray) -> float:
    """Explicit double loop over column pairs."""
    n = matrix.shape[1]
    best = 0.0
    for i in range(n):
        for j in range(n):
            best = max(best, 0.5 * np.abs(matrix[:, i] - matrix[:, j]).sum())
    return best


def random_q_matrix(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    rates = rng.uniform(0.1, 1.0, size=(n, n)) * scale
    np.fill_diagonal(rates, 0.0)
    q = rates.copy()
    np.fill_diagonal(q, -rates.sum(axis=0))
    return q


def random_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    cols = rng.uniform(0.0, 1.0, size=(n, n))
    return cols / cols.sum(axis=0, keepdims=True)


def random_admissible_pair(rng: np.random.Generator, max_dim: int = 5):
    """A validated generator pair whose smallness hypotheses hold at t0 = 1.

    The perturbation rescales each off-diagonal rate multiplicatively and is
    shrunk until the fixed-point bounds' hypotheses are satisfied for both
    the flow and its time average.
    """
    n = int(rng.integers(2, max_dim + 1))
    space = eb.Classical(n)
    q1 = random_q_matrix(rng, n)
    wiggle = rng.uniform(-1.0, 1.0, size=(n, n))
    np.fill_diagonal(wiggle, 0.0)
    eta = 0.05
    sg1 = eb.make_semigroup(space, q1)
    rho_flow = eb.delta(eb.evolve(sg1, 1.0)).value
    rho_mean = eb.delta(eb.cesaro_average(sg1, 1.0)).value
    for _ in range(30):
        rates = q1 - np.diag(np.diag(q1))
        rates2 = rates * (1.0 + eta * wiggle)
        q2 = rates2.copy()
        np.fill_diagonal(q2, -rates2.sum(axis=0))
        sg2 = eb.make_semigroup(space, q2)
        gap_flow = eb.operator_norm(
            space, eb.evolve(sg1, 1.0).matrix - eb.evolve(sg2, 1.0).matrix
        )
        gap_mean = eb.operator_norm(
            space, eb.cesaro_average(sg1, 1.0).matrix - eb.cesaro_average(sg2, 1.0).matrix
        )
        if gap_flow < 0.5 * (1.0 - rho_flow) and gap_mean < 0.5 * (1.0 - rho_mean):
            break
        eta *= 0.5
    else:
        raise RuntimeError("could not scale the perturbation into admissibility")
    x = rng.dirichlet(np.ones(n))
    z = rng.dirichlet(np.ones(n))
    return sg1, sg2, x, z
