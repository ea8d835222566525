"""State-vector execution of k-query oracle algorithms.

Two equivalent basis pictures are supported.  In the bitflip picture the
basis is |x, q, w> with x in 1..N, q in {+1, -1} and workspace w; the oracle
maps |x, q, w> to |x, q*F(x), w>.  In the phase picture the oracle is
diagonal: F̂|x> = F(x)|x> for x = 1..N, while |0> and the auxiliary
symmetric labels are +1 eigenvectors.  Both pictures have dimension 2*N*W
and are related by the explicit rotation of :func:`convert_picture`.

An algorithm is the alternating product V_k F̂ ... V_1 F̂ applied to a fixed
initial state, the oracle acting first.  Measurements are projective, given
by orthonormal bases of pairwise orthogonal subspaces that together span
the whole space.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, ModelError, ParameterError, ValidationError
from .functions import BooleanFunction, FunctionFamily
from .walsh import fwht

UNITARITY_TOL = 1e-10
NORM_TOL = 1e-12
ORTHO_TOL = 1e-12
ROUNDTRIP_TOL = 1e-14

# Dense materialization of structured operators is for conversion, I/O and
# tests; past this dimension a single matrix tops 64 MiB and the structured
# path should be used instead.
MAX_DENSE_DIM = 2048


class Picture(enum.Enum):
    BITFLIP = "bitflip"
    PHASE = "phase"


def space_dim(domain_size: int, workspace_size: int) -> int:
    if domain_size < 1:
        raise ParameterError(f"domain size must be >= 1, got {domain_size}")
    if workspace_size < 1:
        raise ParameterError(f"workspace size must be >= 1, got {workspace_size}")
    return 2 * domain_size * workspace_size


def bitflip_index(domain_size: int, workspace_size: int, x: int, q: int, w: int) -> int:
    """Flat index of |x, q, w> with blocks ordered by x, then q = +1, -1."""
    if not 1 <= x <= domain_size:
        raise ParameterError(f"x must lie in 1..{domain_size}, got {x}")
    if q not in (1, -1):
        raise ParameterError(f"q must be +1 or -1, got {q}")
    if not 0 <= w < workspace_size:
        raise ParameterError(f"w must lie in 0..{workspace_size - 1}, got {w}")
    return ((x - 1) * 2 + (0 if q == 1 else 1)) * workspace_size + w


def phase_label(domain_size: int, x: int, symmetric: bool = False) -> int:
    """Label of |x> (x = 0..N), or of the auxiliary 0_x when symmetric is set.

    Labels 0..N are |0>, |1>, .., |N|; labels N+1..2N-1 are the symmetric
    combinations 0_x for x = 2..N.  |0> itself is the symmetric combination
    at x = 1, so phase_label(N, 1, symmetric=True) returns 0.
    """
    if symmetric:
        if not 1 <= x <= domain_size:
            raise ParameterError(f"symmetric label needs x in 1..{domain_size}, got {x}")
        return 0 if x == 1 else domain_size + x - 1
    if not 0 <= x <= domain_size:
        raise ParameterError(f"x must lie in 0..{domain_size}, got {x}")
    return x


def phase_index(domain_size: int, workspace_size: int, label: int, w: int) -> int:
    if not 0 <= label < 2 * domain_size:
        raise ParameterError(
            f"phase label must lie in 0..{2 * domain_size - 1}, got {label}"
        )
    if not 0 <= w < workspace_size:
        raise ParameterError(f"w must lie in 0..{workspace_size - 1}, got {w}")
    return label * workspace_size + w


@dataclass(frozen=True)
class QuantumState:
    picture: Picture
    domain_size: int
    workspace_size: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        dim = space_dim(self.domain_size, self.workspace_size)
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (dim,):
            raise ValidationError(
                f"amplitude vector must have shape ({dim},), got {amps.shape}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def _replace_amplitudes(self, amps: np.ndarray) -> "QuantumState":
        return QuantumState(self.picture, self.domain_size, self.workspace_size, amps)


def basis_state(
    picture: Picture, domain_size: int, workspace_size: int, index: int
) -> QuantumState:
    dim = space_dim(domain_size, workspace_size)
    if not 0 <= index < dim:
        raise ParameterError(f"basis index must lie in 0..{dim - 1}, got {index}")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return QuantumState(picture, domain_size, workspace_size, amps)


class Unitary:
    """Norm-preserving operator on the full space, applied to flat vectors."""

    dim: int

    def apply(self, amps: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        if self.dim > MAX_DENSE_DIM:
            raise CapacityError(
                f"dense form of a dimension-{self.dim} operator exceeds the "
                f"{MAX_DENSE_DIM} cap"
            )
        out = np.empty((self.dim, self.dim), dtype=np.complex128)
        probe = np.zeros(self.dim, dtype=np.complex128)
        for i in range(self.dim):
            probe[i] = 1.0
            out[:, i] = self.apply(probe)
            probe[i] = 0.0
        return out


class DenseUnitary(Unitary):
    def __init__(self, matrix: np.ndarray) -> None:
        mat = np.asarray(matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValidationError(f"unitary must be square, got shape {mat.shape}")
        defect = np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])).max()
        if defect > UNITARITY_TOL:
            raise ValidationError(
                f"matrix fails unitarity: max |U†U - I| = {defect:.3e}"
            )
        self._matrix = mat.copy()
        self._matrix.flags.writeable = False
        self.dim = mat.shape[0]

    def apply(self, amps: np.ndarray) -> np.ndarray:
        return self._matrix @ amps

    def matrix(self) -> np.ndarray:
        return self._matrix


class PermutationUnitary(Unitary):
    """U e_i = e_{destination[i]}; a relabeling of the basis."""

    def __init__(self, destination: Sequence[int]) -> None:
        dest = np.asarray(destination, dtype=np.int64)
        if dest.ndim != 1:
            raise ValidationError("permutation must be a flat index array")
        if not np.array_equal(np.sort(dest), np.arange(dest.shape[0])):
            raise ValidationError("destination array is not a permutation")
        self._destination = dest
        self.dim = dest.shape[0]

    def apply(self, amps: np.ndarray) -> np.ndarray:
        out = np.empty_like(amps)
        out[self._destination] = amps
        return out


class WorkspaceWalsh(Unitary):
    """Normalized Walsh transform on the workspace factor, identity elsewhere."""

    def __init__(self, label_count: int, workspace_size: int) -> None:
        if label_count < 1:
            raise ParameterError(f"label count must be >= 1, got {label_count}")
        if workspace_size < 1 or workspace_size & (workspace_size - 1):
            raise ParameterError(
                f"Walsh workspace must be a power of two, got {workspace_size}"
            )
        self.label_count = label_count
        self.workspace_size = workspace_size
        self.dim = label_count * workspace_size

    def apply(self, amps: np.ndarray) -> np.ndarray:
        out = amps.reshape(self.label_count, self.workspace_size).copy()
        out = fwht(out, axis=1)
        out /= np.sqrt(self.workspace_size)
        return out.reshape(self.dim)


class ComposedUnitary(Unitary):
    """Product of factors; factors[0] acts first."""

    def __init__(self, factors: Sequence[Unitary]) -> None:
        if not factors:
            raise ValidationError("composition needs at least one factor")
        dims = {f.dim for f in factors}
        if len(dims) != 1:
            raise ValidationError(f"factor dimensions disagree: {sorted(dims)}")
        self.factors = tuple(factors)
        self.dim = self.factors[0].dim

    def apply(self, amps: np.ndarray) -> np.ndarray:
        for factor in self.factors:
            amps = factor.apply(amps)
        return amps


@dataclass(frozen=True)
class Algorithm:
    """Alternating product V_k F̂ ... V_1 F̂ |s>, the oracle acting first."""

    initial: QuantumState
    unitaries: tuple[Unitary, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "unitaries", tuple(self.unitaries))
        if len(self.unitaries) < 1:
            raise ValidationError("an algorithm makes at least one query")
        for i, u in enumerate(self.unitaries):
            if u.dim != self.initial.dim:
                raise ValidationError(
                    f"V_{i + 1} has dimension {u.dim}, state space is "
                    f"{self.initial.dim}"
                )
        err = abs(self.initial.norm() - 1.0)
        if err > NORM_TOL:
            raise ValidationError(f"initial state norm is off by {err:.3e}")

    @property
    def picture(self) -> Picture:
        return self.initial.picture

    @property
    def domain_size(self) -> int:
        return self.initial.domain_size

    @property
    def workspace_size(self) -> int:
        return self.initial.workspace_size

    @property
    def query_count(self) -> int:
        return len(self.unitaries)


def apply_oracle_bitflip(state: QuantumState, f: BooleanFunction) -> QuantumState:
    """|x, q, w> -> |x, q*F(x), w>: swap the q pair wherever F(x) = -1."""
    if state.picture is not Picture.BITFLIP:
        raise ModelError("bitflip oracle applied to a phase-picture state")
    if f.domain_size != state.domain_size:
        raise ModelError(
            f"oracle domain {f.domain_size} != state domain {state.domain_size}"
        )
    cube = state.amplitudes.reshape(
        state.domain_size, 2, state.workspace_size
    ).copy()
    flip = f.sign_array() < 0
    cube[flip] = cube[flip][:, ::-1]
    return state._replace_amplitudes(cube.reshape(state.dim))


def apply_oracle_phase(state: QuantumState, f: BooleanFunction) -> QuantumState:
    """F̂|x> = F(x)|x> for x = 1..N; |0> and auxiliary labels are untouched."""
    if state.picture is not Picture.PHASE:
        raise ModelError("phase oracle applied to a bitflip-picture state")
    if f.domain_size != state.domain_size:
        raise ModelError(
            f"oracle domain {f.domain_size} != state domain {state.domain_size}"
        )
    n = state.domain_size
    signs = np.ones(2 * n)
    signs[1 : n + 1] = f.sign_array()
    table = state.amplitudes.reshape(2 * n, state.workspace_size) * signs[:, None]
    return state._replace_amplitudes(table.reshape(state.dim))


def apply_oracle(state: QuantumState, f: BooleanFunction) -> QuantumState:
    if state.picture is Picture.BITFLIP:
        return apply_oracle_bitflip(state, f)
    return apply_oracle_phase(state, f)


def conversion_matrix(domain_size: int, workspace_size: int) -> np.ndarray:
    """Columns express each phase basis vector in the bitflip basis.

    A phase coordinate vector c corresponds to the bitflip vector B c; both
    oracles are intertwined, B F̂_phase = F̂_bitflip B.
    """
    dim = space_dim(domain_size, workspace_size)
    if dim > MAX_DENSE_DIM:
        raise CapacityError(f"dense conversion capped at dimension {MAX_DENSE_DIM}")
    b = np.zeros((dim, dim))
    r = 1.0 / np.sqrt(2.0)
    for x in range(1, domain_size + 1):
        plus = bitflip_index(domain_size, workspace_size, x, 1, 0)
        minus = bitflip_index(domain_size, workspace_size, x, -1, 0)
        sym = phase_index(
            domain_size, workspace_size, phase_label(domain_size, x, symmetric=True), 0
        )
        anti = phase_index(domain_size, workspace_size, x, 0)
        for w in range(workspace_size):
            b[plus + w, sym + w] = r
            b[minus + w, sym + w] = r
            b[plus + w, anti + w] = r
            b[minus + w, anti + w] = -r
    return b


def convert_picture(state: QuantumState, target: Picture) -> QuantumState:
    """Rotate between pictures: (|x,+1> - |x,-1>)/sqrt(2) <-> |x>, and the
    symmetric combinations <-> |0> (x = 1) or 0_x (x >= 2)."""
    if state.picture is target:
        return state
    n, w = state.domain_size, state.workspace_size
    r = 1.0 / np.sqrt(2.0)
    if state.picture is Picture.BITFLIP:
        cube = state.amplitudes.reshape(n, 2, w)
        sym = (cube[:, 0] + cube[:, 1]) * r
        anti = (cube[:, 0] - cube[:, 1]) * r
        table = np.empty((2 * n, w), dtype=np.complex128)
        table[0] = sym[0]
        table[1 : n + 1] = anti
        table[n + 1 :] = sym[1:]
    else:
        table = state.amplitudes.reshape(2 * n, w)
        sym = np.empty((n, w), dtype=np.complex128)
        sym[0] = table[0]
        sym[1:] = table[n + 1 :]
        anti = table[1 : n + 1]
        cube = np.empty((n, 2, w), dtype=np.complex128)
        cube[:, 0] = (sym + anti) * r
        cube[:, 1] = (sym - anti) * r
        table = cube.reshape(2 * n, w)
    return QuantumState(target, n, w, table.reshape(state.dim))


def run(algorithm: Algorithm, f: BooleanFunction) -> QuantumState:
    """The exact alternating product V_k F̂ ... V_1 F̂ applied to |s>."""
    if f.domain_size != algorithm.domain_size:
        raise ModelError(
            f"oracle domain {f.domain_size} != algorithm domain "
            f"{algorithm.domain_size}"
        )
    state = algorithm.initial
    for u in algorithm.unitaries:
        state = apply_oracle(state, f)
        state = state._replace_amplitudes(u.apply(state.amplitudes))
    return state


class Measurement:
    """Complete projective measurement into pairwise orthogonal subspaces.

    Stored either as explicit orthonormal bases (one column block per
    outcome) or, when every subspace is spanned by computational basis
    vectors, as a partition of basis indices.  The second form is the
    internal optimization that keeps exponential-workspace measurements
    cheap; both present the same interface.
    """

    def __init__(
        self,
        dim: int,
        blocks: tuple[np.ndarray, ...] | None,
        partition: np.ndarray | None,
        outcome_count: int,
    ) -> None:
        self.dim = dim
        self._blocks = blocks
        self._partition = partition
        self.outcome_count = outcome_count

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray]) -> "Measurement":
        if not blocks:
            raise ValidationError("measurement needs at least one outcome")
        mats = tuple(
            np.asarray(b, dtype=np.complex128).reshape(np.shape(b)[0], -1)
            for b in blocks
        )
        dim = mats[0].shape[0]
        if any(m.shape[0] != dim for m in mats):
            raise ValidationError("outcome blocks live in different spaces")
        total = sum(m.shape[1] for m in mats)
        if total != dim:
            raise ValidationError(
                f"outcome dimensions sum to {total}, space has dimension {dim}"
            )
        stacked = np.hstack(mats)
        defect = np.abs(stacked.conj().T @ stacked - np.eye(dim)).max()
        if defect > ORTHO_TOL:
            raise ValidationError(
                f"outcome vectors are not orthonormal: max defect {defect:.3e}"
            )
        frozen = []
        for m in mats:
            m = m.copy()
            m.flags.writeable = False
            frozen.append(m)
        return cls(dim, tuple(frozen), None, len(frozen))

    @classmethod
    def from_partition(
        cls, partition: Sequence[int], outcome_count: int | None = None
    ) -> "Measurement":
        part = np.asarray(partition, dtype=np.int64)
        if part.ndim != 1 or part.size == 0:
            raise ValidationError("partition must be a nonempty flat index array")
        if part.min() < 0:
            raise ValidationError("partition labels must be nonnegative")
        count = int(part.max()) + 1 if outcome_count is None else outcome_count
        if part.max() >= count:
            raise ValidationError(
                f"partition label {int(part.max())} outside 0..{count - 1}"
            )
        part = part.copy()
        part.flags.writeable = False
        return cls(part.shape[0], None, part, count)

    @property
    def outcome_dimensions(self) -> list[int]:
        if self._blocks is not None:
            return [b.shape[1] for b in self._blocks]
        counts = np.bincount(self._partition, minlength=self.outcome_count)
        return [int(c) for c in counts]

    def basis_block(self, outcome: int) -> np.ndarray:
        """Orthonormal basis of the outcome subspace, as columns."""
        if not 0 <= outcome < self.outcome_count:
            raise ParameterError(f"no outcome {outcome}")
        if self._blocks is not None:
            return self._blocks[outcome]
        idx = np.flatnonzero(self._partition == outcome)
        block = np.zeros((self.dim, idx.size), dtype=np.complex128)
        block[idx, np.arange(idx.size)] = 1.0
        return block

    def amplitudes(self, state: QuantumState) -> list[np.ndarray]:
        """Per outcome, the coefficients of the state in the subspace basis."""
        if state.dim != self.dim:
            raise ValidationError(
                f"state dimension {state.dim} != measurement dimension {self.dim}"
            )
        if self._blocks is not None:
            return [b.conj().T @ state.amplitudes for b in self._blocks]
        return [
            state.amplitudes[np.flatnonzero(self._partition == ell)]
            for ell in range(self.outcome_count)
        ]

    def probabilities(self, state: QuantumState) -> np.ndarray:
        if state.dim != self.dim:
            raise ValidationError(
                f"state dimension {state.dim} != measurement dimension {self.dim}"
            )
        if self._partition is not None:
            weights = np.abs(state.amplitudes) ** 2
            return np.bincount(
                self._partition, weights=weights, minlength=self.outcome_count
            )
        return np.array(
            [np.sum(np.abs(b.conj().T @ state.amplitudes) ** 2) for b in self._blocks]
        )


def outcome_probabilities(state: QuantumState, m: Measurement) -> np.ndarray:
    """||P_l state||^2 for every outcome l."""
    return m.probabilities(state)


def success_matrix(
    algorithm: Algorithm, m: Measurement, family: FunctionFamily
) -> np.ndarray:
    """Entry (l, j) is the probability of outcome l when the oracle is F_j."""
    if m.outcome_count != family.size:
        raise ValidationError(
            f"measurement has {m.outcome_count} outcomes, family has "
            f"{family.size} functions"
        )
    out = np.empty((m.outcome_count, family.size))
    for j, f in enumerate(family):
        out[:, j] = m.probabilities(run(algorithm, f))
    return out


def worst_case_success(matrix: np.ndarray) -> float:
    return float(np.min(np.diagonal(matrix)))


def convert_measurement(m: Measurement, target: Picture, source: Picture,
                        domain_size: int, workspace_size: int) -> Measurement:
    """Re-express every outcome basis in the other picture."""
    if source is target:
        return m
    b = conversion_matrix(domain_size, workspace_size)
    rot = b.T if source is Picture.BITFLIP else b
    blocks = [rot @ m.basis_block(ell) for ell in range(m.outcome_count)]
    return Measurement.from_blocks(blocks)


def convert_algorithm(algorithm: Algorithm, target: Picture) -> Algorithm:
    """Conjugate every unitary and rotate the initial state into target."""
    if algorithm.picture is target:
        return algorithm
    b = conversion_matrix(algorithm.domain_size, algorithm.workspace_size)
    rot = b.T if algorithm.picture is Picture.BITFLIP else b
    initial = convert_picture(algorithm.initial, target)
    unitaries = tuple(
        DenseUnitary(rot @ u.matrix() @ rot.T) for u in algorithm.unitaries
    )
    return Algorithm(initial, unitaries)


def _pairs(vec: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in vec]


def _unpairs(data, what: str) -> np.ndarray:
    try:
        return np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed {what}: {exc}") from exc


def algorithm_to_json(algorithm: Algorithm) -> dict:
    dim = algorithm.initial.dim
    return {
        "picture": algorithm.picture.value,
        "domain_size": algorithm.domain_size,
        "workspace": algorithm.workspace_size,
        "k": algorithm.query_count,
        "initial": _pairs(algorithm.initial.amplitudes),
        "unitaries": [_pairs(u.matrix().reshape(dim * dim)) for u in algorithm.unitaries],
    }


def algorithm_from_json(data: dict) -> Algorithm:
    try:
        picture = Picture(data["picture"])
        domain_size = int(data["domain_size"])
        workspace = int(data["workspace"])
        k = int(data["k"])
        initial_pairs = data["initial"]
        unitary_pairs = data["unitaries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed algorithm object: {exc}") from exc
    dim = space_dim(domain_size, workspace)
    initial = QuantumState(picture, domain_size, workspace, _unpairs(initial_pairs, "initial state"))
    if len(unitary_pairs) != k:
        raise ValidationError(f"k = {k} but {len(unitary_pairs)} unitaries given")
    unitaries = []
    for i, flat in enumerate(unitary_pairs):
        vec = _unpairs(flat, f"unitary {i + 1}")
        if vec.shape[0] != dim * dim:
            raise ValidationError(
                f"unitary {i + 1} has {vec.shape[0]} entries, expected {dim * dim}"
            )
        unitaries.append(DenseUnitary(vec.reshape(dim, dim)))
    return Algorithm(initial, tuple(unitaries))


def measurement_to_json(m: Measurement) -> dict:
    return {
        "outcomes": [
            [_pairs(m.basis_block(ell)[:, r]) for r in range(m.basis_block(ell).shape[1])]
            for ell in range(m.outcome_count)
        ]
    }


def measurement_from_json(data: dict) -> Measurement:
    try:
        outcomes = data["outcomes"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed measurement object: {exc}") from exc
    blocks = []
    for vectors in outcomes:
        cols = [_unpairs(v, "measurement vector") for v in vectors]
        if not cols:
            raise ValidationError("empty outcome block in measurement file")
        blocks.append(np.stack(cols, axis=1))
    return Measurement.from_blocks(blocks)


def load_algorithm(path: str) -> Algorithm:
    with open(path) as fh:
        return algorithm_from_json(json.load(fh))


def save_algorithm(algorithm: Algorithm, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(algorithm_to_json(algorithm), fh)


def load_measurement(path: str) -> Measurement:
    with open(path) as fh:
        return measurement_from_json(json.load(fh))


def save_measurement(m: Measurement, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(measurement_to_json(m), fh)
