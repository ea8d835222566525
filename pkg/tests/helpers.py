"""Shared random generators for the test suite."""
from __future__ import annotations

import numpy as np

from qql.simulator import (
    Algorithm,
    DenseUnitary,
    Measurement,
    Picture,
    QuantumState,
    space_dim,
)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish unitary: QR of a complex Ginibre matrix, phases fixed."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (r.diagonal() / np.abs(r.diagonal()))


def random_state_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_algorithm(
    picture: Picture,
    domain_size: int,
    workspace: int,
    queries: int,
    rng: np.random.Generator,
) -> Algorithm:
    dim = space_dim(domain_size, workspace)
    initial = QuantumState(
        picture, domain_size, workspace, random_state_vector(dim, rng)
    )
    unitaries = tuple(
        DenseUnitary(random_unitary(dim, rng)) for _ in range(queries)
    )
    return Algorithm(initial, unitaries)


def random_block_measurement(
    dim: int, outcomes: int, rng: np.random.Generator
) -> Measurement:
    """Complete measurement with random subspace sizes summing to dim."""
    assert 1 <= outcomes <= dim
    cuts = np.sort(rng.choice(np.arange(1, dim), size=outcomes - 1, replace=False))
    sizes = np.diff(np.concatenate([[0], cuts, [dim]]))
    basis = random_unitary(dim, rng)
    blocks = []
    at = 0
    for size in sizes:
        blocks.append(basis[:, at : at + size])
        at += size
    return Measurement.from_blocks(blocks)
