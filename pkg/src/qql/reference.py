"""Constructive algorithms that meet the counting bound with equality.

Two builders are provided.  The one-query character distinguisher prepares
the uniform state over |0>..|N| (N = 2^n - 1); the phase oracle for a
parity character imprints (-1)^{a.x}, the states for distinct characters
are orthogonal, and one character transform maps them onto distinct basis
vectors, so D = N + 1 functions are told apart with certainty.

The uniform-subset algorithm stores a subset register S in the workspace,
starts uniform over the M(N, k) subsets with |S| <= k, and walks the query
index through the elements of S so that k oracle calls accumulate the
character chi(S, F).  A final character transform over the subset register
concentrates amplitude sqrt(M/2^N) on the guess G = F, for every F alike.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bounds import m_sum
from .errors import CapacityError, ParameterError
from .functions import FunctionFamily, all_functions_family, character_family
from .simulator import (
    Algorithm,
    ComposedUnitary,
    DenseUnitary,
    Measurement,
    PermutationUnitary,
    Picture,
    QuantumState,
    Unitary,
    WorkspaceWalsh,
    space_dim,
    success_matrix,
    worst_case_success,
)

MAX_SUBSET_DOMAIN = 12  # state dimension 2N*2^N; 12 keeps it under 10^5


@dataclass(frozen=True)
class AlgorithmBundle:
    """Algorithm, measurement and target family, with the exact success value
    the construction promises on every diagonal entry."""

    algorithm: Algorithm
    measurement: Measurement
    family: FunctionFamily
    predicted_success: Fraction

    def success_matrix(self) -> np.ndarray:
        return success_matrix(self.algorithm, self.measurement, self.family)

    def worst_case_success(self) -> float:
        return worst_case_success(self.success_matrix())


def predicted_success(domain_size: int, queries: int) -> Fraction:
    """m_sum(N, k) / 2^N, the uniform-subset success probability."""
    return Fraction(m_sum(domain_size, queries), 1 << domain_size)


def build_character_distinguisher(n: int) -> AlgorithmBundle:
    """One-query exact distinguisher for the 2^n parity characters."""
    if not 1 <= n <= 6:
        raise ParameterError(f"character distinguisher is built for n in 1..6, got {n}")
    domain = (1 << n) - 1
    dim = space_dim(domain, 1)

    amps = np.zeros(dim, dtype=np.complex128)
    amps[0 : domain + 1] = 1.0 / np.sqrt(domain + 1)
    initial = QuantumState(Picture.PHASE, domain, 1, amps)

    # (N+1)-point character transform on labels 0..N, identity on the
    # auxiliary labels; entry [b, x] = (-1)^{popcount(b & x)} / sqrt(N+1).
    block = np.arange(domain + 1)
    kernel = 1 - 2 * (
        np.bitwise_count((block[:, None] & block[None, :]).astype(np.uint64)).astype(
            np.int64
        )
        % 2
    )
    v1 = np.eye(dim, dtype=np.complex128)
    v1[0 : domain + 1, 0 : domain + 1] = kernel / np.sqrt(domain + 1)
    algorithm = Algorithm(initial, (DenseUnitary(v1),))

    # Outcome a is spanned by |a>; the auxiliary labels never acquire
    # amplitude, so completeness is restored by attaching them to outcome 0.
    partition = np.concatenate(
        [np.arange(domain + 1), np.zeros(domain - 1, dtype=np.int64)]
    )
    measurement = Measurement.from_partition(partition, outcome_count=domain + 1)

    return AlgorithmBundle(algorithm, measurement, character_family(n), Fraction(1))


def _element_schedule(domain_size: int, queries: int) -> np.ndarray:
    """Row S, column i-1: the i-th smallest element of subset mask S, or 0
    when S has fewer than i elements."""
    count = 1 << domain_size
    table = np.zeros((count, queries), dtype=np.int64)
    for mask in range(count):
        elements = [x + 1 for x in range(domain_size) if (mask >> x) & 1]
        for i, e in enumerate(elements[:queries]):
            table[mask, i] = e
    return table


def _label_shift(domain_size: int, workspace_size: int, delta: np.ndarray) -> Unitary:
    """Permutation shifting label x to (x + delta[w]) mod (N+1) on labels
    0..N, per workspace value w; auxiliary labels stay put."""
    labels = 2 * domain_size
    label_grid, w_grid = np.meshgrid(
        np.arange(labels), np.arange(workspace_size), indexing="ij"
    )
    dest_label = label_grid.copy()
    signal = label_grid <= domain_size
    dest_label[signal] = (label_grid[signal] + delta[w_grid[signal]]) % (
        domain_size + 1
    )
    return PermutationUnitary((dest_label * workspace_size + w_grid).reshape(-1))


def build_uniform_subset_algorithm(domain_size: int, queries: int) -> AlgorithmBundle:
    """k-query algorithm distinguishing all 2^N functions with probability
    m_sum(N, k)/2^N, the same for every F."""
    if domain_size > MAX_SUBSET_DOMAIN:
        raise CapacityError(
            f"subset algorithm state space is (2N)*2^N; N capped at "
            f"{MAX_SUBSET_DOMAIN}, got {domain_size}"
        )
    if domain_size < 1 or not 1 <= queries <= domain_size:
        raise ParameterError(
            f"need 1 <= k <= N, got k = {queries}, N = {domain_size}"
        )
    workspace = 1 << domain_size
    dim = space_dim(domain_size, workspace)
    total = m_sum(domain_size, queries)

    schedule = _element_schedule(domain_size, queries)
    weights = np.bitwise_count(np.arange(workspace, dtype=np.uint64)).astype(np.int64)

    amps = np.zeros(dim, dtype=np.complex128)
    low = np.flatnonzero(weights <= queries)
    amps[schedule[low, 0] * workspace + low] = 1.0 / np.sqrt(total)
    initial = QuantumState(Picture.PHASE, domain_size, workspace, amps)

    unitaries: list[Unitary] = []
    for i in range(queries - 1):
        delta = (schedule[:, i + 1] - schedule[:, i]) % (domain_size + 1)
        unitaries.append(_label_shift(domain_size, workspace, delta))
    reset = _label_shift(domain_size, workspace, -schedule[:, queries - 1])
    unitaries.append(
        ComposedUnitary([reset, WorkspaceWalsh(2 * domain_size, workspace)])
    )

    # Guess G is read off the subset register: outcome = workspace value.
    partition = np.tile(np.arange(workspace), 2 * domain_size)
    measurement = Measurement.from_partition(partition, outcome_count=workspace)

    return AlgorithmBundle(
        Algorithm(initial, tuple(unitaries)),
        measurement,
        all_functions_family(domain_size),
        predicted_success(domain_size, queries),
    )
