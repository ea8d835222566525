"""Numerical search for the best worst-case distinguishing probability.

The search space is a reduced phase picture on labels 0..N tensored with a
workspace of size W, dimension d = (N+1)*W: the auxiliary labels of the
full simulator basis are +1 eigenvectors of every oracle and add nothing
an algorithm could exploit, so they are dropped here and restored by
:func:`embed_algorithm` when a candidate is handed to the simulator.

Each of the k step unitaries, plus one more whose first column is the
initial state, is exp(i H) for a Hermitian H assembled from a free real
d x d parameter block.  The measurement is not parameterized: the final
states' pretty-good measurement is used, whose diagonal success is
|sqrt(Gram)_jj|^2.  Ascent maximizes a soft minimum of that diagonal with
the temperature annealed toward zero; restarts run as one batched tensor.
The reported optimum is re-evaluated in exact numpy arithmetic and checked
against the counting ceiling m_sum(N, k)/D, which no measurement can beat.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import torch

from .bounds import m_sum
from .errors import ModelError, ParameterError, ValidationError
from .functions import FunctionFamily, all_functions_family, explicit_family
from .simulator import (
    Algorithm,
    DenseUnitary,
    Measurement,
    Picture,
    QuantumState,
    space_dim,
)

PGM_CUTOFF = 1e-12
POVM_COMPLETENESS_TOL = 1e-10
CEILING_SLACK = 1e-9

# Newton-Schulz square-root settings for the differentiable inner loop; the
# tiny ridge keeps the iteration defined when the Gram matrix is singular,
# which happens exactly at the interesting optima.
_SQRT_ITERATIONS = 40
_SQRT_RIDGE = 1e-9


def default_workspace(domain_size: int, family_size: int) -> int:
    """Smallest power of two W with (N+1)*W >= D."""
    w = 1
    while (domain_size + 1) * w < family_size:
        w *= 2
    return w


def phase_sign_table(family: FunctionFamily) -> np.ndarray:
    """Row j holds (+1, F_j(1), .., F_j(N)): the oracle diagonal on labels 0..N."""
    n = family.domain_size
    table = np.ones((family.size, n + 1))
    for j, f in enumerate(family):
        table[j, 1:] = f.sign_array()
    return table


@dataclass(frozen=True)
class ParamAlgorithm:
    """Free parameters of a k-query candidate on the reduced phase space.

    theta has shape (k+1, d, d); block 0 generates the unitary whose first
    column is the initial state, blocks 1..k generate V_1..V_k.  A block A
    yields the Hermitian H = (A + A^T)/2 + i (A - A^T)/2 and then exp(i H).
    """

    domain_size: int
    workspace: int
    theta: np.ndarray

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=np.float64)
        d = (self.domain_size + 1) * self.workspace
        if theta.ndim != 3 or theta.shape[1:] != (d, d) or theta.shape[0] < 2:
            raise ValidationError(
                f"theta must have shape (k+1, {d}, {d}) with k >= 1, "
                f"got {theta.shape}"
            )
        theta = theta.copy()
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    def query_count(self) -> int:
        return self.theta.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.theta.shape[1]

    @classmethod
    def random(
        cls,
        domain_size: int,
        queries: int,
        workspace: int,
        rng: np.random.Generator,
        scale: float = 0.7,
    ) -> "ParamAlgorithm":
        d = (domain_size + 1) * workspace
        theta = rng.normal(0.0, scale, size=(queries + 1, d, d))
        return cls(domain_size, workspace, theta)

    @classmethod
    def from_unitaries(
        cls,
        domain_size: int,
        workspace: int,
        initial: np.ndarray,
        unitaries: Sequence[np.ndarray],
    ) -> "ParamAlgorithm":
        """Parameter point realizing the given exact algorithm."""
        d = (domain_size + 1) * workspace
        s = np.asarray(initial, dtype=np.complex128)
        if s.shape != (d,):
            raise ValidationError(f"initial state must have shape ({d},)")
        if abs(np.linalg.norm(s) - 1.0) > 1e-10:
            raise ValidationError("initial state must be normalized")
        blocks = [_theta_from_hermitian(_unitary_log(_unitary_with_first_column(s)))]
        for u in unitaries:
            u = np.asarray(u, dtype=np.complex128)
            if u.shape != (d, d):
                raise ValidationError(f"unitaries must have shape ({d}, {d})")
            blocks.append(_theta_from_hermitian(_unitary_log(u)))
        return cls(domain_size, workspace, np.stack(blocks))

    def realize(self) -> tuple[np.ndarray, list[np.ndarray]]:
        """Exact initial state and unitaries, via Hermitian eigendecomposition."""
        mats = [_expm_hermitian(h) for h in _hermitian_blocks(self.theta)]
        return mats[0][:, 0].copy(), mats[1:]


def _hermitian_blocks(theta: np.ndarray) -> np.ndarray:
    sym = 0.5 * (theta + np.swapaxes(theta, -1, -2))
    anti = 0.5 * (theta - np.swapaxes(theta, -1, -2))
    return sym + 1j * anti


def _theta_from_hermitian(h: np.ndarray) -> np.ndarray:
    return h.real + h.imag


def _expm_hermitian(h: np.ndarray) -> np.ndarray:
    """exp(i h) for Hermitian h, exactly unitary up to roundoff."""
    w, u = np.linalg.eigh(h)
    return (u * np.exp(1j * w)) @ u.conj().T


def _unitary_with_first_column(s: np.ndarray) -> np.ndarray:
    """Any unitary whose first column is s (completed by QR)."""
    d = s.shape[0]
    basis = np.eye(d, dtype=np.complex128)
    pivot = int(np.argmax(np.abs(s)))
    basis[:, [0, pivot]] = basis[:, [pivot, 0]]
    basis[:, 0] = s
    q, r = np.linalg.qr(basis)
    return q * (r.diagonal() / np.abs(r.diagonal()))


def _unitary_log(v: np.ndarray) -> np.ndarray:
    """Hermitian h with exp(i h) = v, branch angles in (-pi, pi].

    Eigenvectors of a normal matrix within a degenerate eigenvalue cluster
    come back skewed from the general solver; re-orthonormalizing each
    cluster restores a unitary eigenbasis.
    """
    w, p = np.linalg.eig(v)
    angles = np.angle(w)
    order = np.argsort(angles)
    angles, p = angles[order], p[:, order]
    cols = []
    start = 0
    for stop in range(1, len(angles) + 1):
        if stop == len(angles) or angles[stop] - angles[stop - 1] > 1e-8:
            q, _ = np.linalg.qr(p[:, start:stop])
            cols.append(q)
            start = stop
    u = np.hstack(cols)
    h = (u * angles) @ u.conj().T
    return 0.5 * (h + h.conj().T)


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 40
    max_iterations: int = 1500
    learning_rate: float = 0.08
    tau_start: float = 0.3
    tau_end: float = 1e-3
    tolerance: float = 1e-10
    seed: int = 0
    workspace: int | None = None
    polish_candidates: int = 3
    polish_iterations: int = 120
    projective_rounding: bool = False

    def __post_init__(self) -> None:
        positive = {
            "restarts": self.restarts,
            "max_iterations": self.max_iterations,
            "learning_rate": self.learning_rate,
            "tau_start": self.tau_start,
            "tau_end": self.tau_end,
            "tolerance": self.tolerance,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ParameterError(f"{name} must be positive, got {value}")
        if self.seed < 0:
            raise ParameterError(f"seed must be nonnegative, got {self.seed}")
        if self.workspace is not None and self.workspace < 1:
            raise ParameterError(f"workspace must be >= 1, got {self.workspace}")
        if self.polish_candidates < 0 or self.polish_iterations < 0:
            raise ParameterError("polish settings must be nonnegative")


@dataclass(frozen=True)
class OptResult:
    p_hat: float
    parameters: ParamAlgorithm
    per_function_success: np.ndarray
    bound_ceiling: Fraction
    certified_gap: float
    converged: bool

    def __post_init__(self) -> None:
        vec = np.asarray(self.per_function_success, dtype=np.float64).copy()
        vec.flags.writeable = False
        object.__setattr__(self, "per_function_success", vec)


class PovmMeasurement:
    """Positive operators summing to the identity; outcome j on state v has
    probability <v|E_j|v>."""

    def __init__(self, elements: Sequence[np.ndarray]) -> None:
        mats = tuple(np.asarray(e, dtype=np.complex128) for e in elements)
        dim = mats[0].shape[0]
        total = sum(mats)
        defect = np.abs(total - np.eye(dim)).max()
        if defect > POVM_COMPLETENESS_TOL:
            raise ValidationError(f"POVM completeness defect {defect:.3e}")
        self.elements = mats
        self.dim = dim
        self.outcome_count = len(mats)

    def probabilities(self, vector: np.ndarray) -> np.ndarray:
        return np.array(
            [float(np.real(vector.conj() @ e @ vector)) for e in self.elements]
        )

    def success_matrix(self, states: Sequence[np.ndarray]) -> np.ndarray:
        cols = [self.probabilities(np.asarray(s)) for s in states]
        return np.stack(cols, axis=1)


def pretty_good_measurement(states: Sequence[np.ndarray]) -> PovmMeasurement:
    """Square-root discrimination measurement of the ensemble.

    E_j = G^{-1/2} |psi_j><psi_j| G^{-1/2} with G the frame operator
    sum_j |psi_j><psi_j|, pseudo-inverted below the 1e-12 cutoff; the
    orthogonal complement of the span is folded in uniformly so the
    elements sum to the identity.  Orthonormal states come back as the
    projective measurement onto them.
    """
    psi = np.stack([np.asarray(s, dtype=np.complex128) for s in states], axis=1)
    d, count = psi.shape
    frame = psi @ psi.conj().T
    w, u = np.linalg.eigh(frame)
    keep = w > PGM_CUTOFF
    inv_sqrt = (u[:, keep] / np.sqrt(w[keep])) @ u[:, keep].conj().T
    perp = u[:, ~keep] @ u[:, ~keep].conj().T
    rotated = inv_sqrt @ psi
    elements = [
        np.outer(rotated[:, j], rotated[:, j].conj()) + perp / count
        for j in range(count)
    ]
    return PovmMeasurement(elements)


def _lowdin_rounding(states: np.ndarray) -> np.ndarray:
    """Orthonormal vectors closest to the ensemble (columns), for the
    projective refinement of the PGM; requires a well-conditioned span."""
    gram = states.conj().T @ states
    w, u = np.linalg.eigh(gram)
    if w.min() < PGM_CUTOFF:
        raise ModelError(
            "projective rounding needs linearly independent final states"
        )
    inv_sqrt = (u / np.sqrt(w)) @ u.conj().T
    return states @ inv_sqrt


def _final_states_numpy(
    params: ParamAlgorithm, family: FunctionFamily
) -> np.ndarray:
    if family.domain_size != params.domain_size:
        raise ValidationError(
            f"family domain {family.domain_size} != parameter domain "
            f"{params.domain_size}"
        )
    signs = np.repeat(phase_sign_table(family), params.workspace, axis=1)
    initial, unitaries = params.realize()
    states = np.broadcast_to(initial, (family.size, params.dim)).copy()
    for v in unitaries:
        states = (states * signs) @ v.T
    return states.T  # columns indexed by function


def exact_success_diagonal(
    params: ParamAlgorithm, family: FunctionFamily, projective: bool = False
) -> np.ndarray:
    """Per-function success of the PGM (or its projective rounding) on the
    exact final states, in plain numpy arithmetic."""
    psi = _final_states_numpy(params, family)
    if projective:
        basis = _lowdin_rounding(psi)
        return np.abs(np.sum(basis.conj() * psi, axis=0)) ** 2
    pgm = pretty_good_measurement(list(psi.T))
    return np.array(
        [pgm.probabilities(psi[:, j])[j] for j in range(family.size)]
    )


def _torch_unitaries(theta: torch.Tensor) -> torch.Tensor:
    """Batched exp(i H) from real parameter blocks (.., d, d)."""
    sym = 0.5 * (theta + theta.transpose(-1, -2))
    anti = 0.5 * (theta - theta.transpose(-1, -2))
    h = torch.complex(sym, anti)
    return torch.linalg.matrix_exp(1j * h)


def _sqrt_psd(g: torch.Tensor) -> torch.Tensor:
    """Newton-Schulz square root of PSD matrices (.., D, D).

    Differentiable everywhere, unlike the eigendecomposition route whose
    gradient blows up at degenerate spectra; those occur exactly at the
    orthogonal-ensemble optima this search is after.
    """
    count = g.shape[-1]
    eye = torch.eye(count, dtype=g.dtype, device=g.device)
    g = (1.0 - _SQRT_RIDGE) * g + _SQRT_RIDGE * eye
    # Gram of unit vectors: eigenvalues lie in [0, D], so g/D lands in [0, 1].
    y = g / count
    z = eye.expand_as(g).clone()
    for _ in range(_SQRT_ITERATIONS):
        t = 0.5 * (3.0 * eye - z @ y)
        y = y @ t
        z = t @ z
    return y * math.sqrt(count)


def _soft_min(values: torch.Tensor, tau: float) -> torch.Tensor:
    """-tau * (logsumexp(-v/tau) - log D): a smooth lower bound on min(v)
    that tightens as tau -> 0 and is exact on constant vectors."""
    count = values.shape[-1]
    return -tau * (
        torch.logsumexp(-values / tau, dim=-1) - math.log(count)
    )


def _batched_success_diagonal(
    theta: torch.Tensor, signs: torch.Tensor
) -> torch.Tensor:
    """PGM diagonal success for a batch of parameter points.

    theta: (B, k+1, d, d) real; signs: (D, d) oracle diagonals.
    Returns (B, D) real success probabilities.
    """
    mats = _torch_unitaries(theta)
    states = mats[:, 0, :, 0]  # (B, d) initial states
    states = states.unsqueeze(1).expand(-1, signs.shape[0], -1)
    for i in range(1, theta.shape[1]):
        states = states * signs
        states = torch.einsum("bij,bdj->bdi", mats[:, i], states)
    gram = torch.einsum("bjd,bld->bjl", states.conj(), states)
    root = _sqrt_psd(gram)
    return torch.diagonal(root, dim1=-2, dim2=-1).abs() ** 2


def objective(params: ParamAlgorithm, family: FunctionFamily, tau: float) -> float:
    """Soft worst-case PGM success of one parameter point; tau -> 0 recovers
    the hard minimum over the family."""
    if tau <= 0:
        raise ParameterError(f"temperature must be positive, got {tau}")
    theta = torch.from_numpy(params.theta.copy()).unsqueeze(0)
    signs = _sign_tensor(family, params)
    diag = _batched_success_diagonal(theta, signs)
    return float(_soft_min(diag, tau)[0])


def objective_gradient(
    params: ParamAlgorithm, family: FunctionFamily, tau: float
) -> np.ndarray:
    """d objective / d theta, by reverse-mode differentiation."""
    if tau <= 0:
        raise ParameterError(f"temperature must be positive, got {tau}")
    theta = torch.from_numpy(params.theta.copy()).unsqueeze(0)
    theta.requires_grad_(True)
    signs = _sign_tensor(family, params)
    value = _soft_min(_batched_success_diagonal(theta, signs), tau).sum()
    value.backward()
    return theta.grad[0].numpy().copy()


def _sign_tensor(family: FunctionFamily, params: ParamAlgorithm) -> torch.Tensor:
    if family.domain_size != params.domain_size:
        raise ValidationError(
            f"family domain {family.domain_size} != parameter domain "
            f"{params.domain_size}"
        )
    signs = np.repeat(phase_sign_table(family), params.workspace, axis=1)
    return torch.from_numpy(signs).to(torch.complex128)


def optimize(
    family: FunctionFamily, queries: int, cfg: OptimizerConfig | None = None
) -> OptResult:
    """Multi-restart ascent over k-query algorithms on the family.

    Restarts evolve together as one batched tensor under Adam while the
    soft-min temperature anneals; the leading candidates are then polished
    individually with L-BFGS and re-scored in exact arithmetic.  The best
    hard minimum is returned together with the counting ceiling
    m_sum(N, k)/D it can never exceed.
    """
    cfg = cfg or OptimizerConfig()
    n = family.domain_size
    if n > 8:
        raise ParameterError(f"optimizer is desk-scale: N <= 8, got {n}")
    if not 1 <= queries <= 4:
        raise ParameterError(f"optimizer is desk-scale: 1 <= k <= 4, got {queries}")
    workspace = cfg.workspace or default_workspace(n, family.size)
    if workspace > 8:
        raise ParameterError(f"optimizer is desk-scale: W <= 8, got {workspace}")
    d = (n + 1) * workspace
    if d < family.size:
        raise ParameterError(
            f"dimension (N+1)*W = {d} cannot host {family.size} orthogonal "
            f"outcomes; raise the workspace"
        )

    torch.manual_seed(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)
    theta = torch.randn(
        (cfg.restarts, queries + 1, d, d), generator=gen, dtype=torch.float64
    ) * 0.7
    theta.requires_grad_(True)
    signs = _sign_tensor(
        family, ParamAlgorithm(n, workspace, np.zeros((queries + 1, d, d)))
    )

    opt = torch.optim.Adam([theta], lr=cfg.learning_rate)
    schedule = torch.optim.lr_scheduler.CosineAnnealingLR(
        opt, T_max=cfg.max_iterations, eta_min=0.05 * cfg.learning_rate
    )
    anneal = (cfg.tau_end / cfg.tau_start) ** (1.0 / max(cfg.max_iterations - 1, 1))

    best_hard = -np.inf
    stall = 0
    converged = False
    tau = cfg.tau_start
    check_every = 25
    for it in range(cfg.max_iterations):
        opt.zero_grad()
        diag = _batched_success_diagonal(theta, signs)
        loss = -_soft_min(diag, tau).sum()
        loss.backward()
        opt.step()
        schedule.step()
        tau = max(tau * anneal, cfg.tau_end)
        if (it + 1) % check_every == 0 or it + 1 == cfg.max_iterations:
            hard = float(diag.detach().min(dim=1).values.max())
            if hard > best_hard + cfg.tolerance:
                best_hard = hard
                stall = 0
            else:
                stall += 1
            # Twelve flat checkpoints at floor temperature: the ascent is done.
            if stall >= 12 and tau <= cfg.tau_end * (1 + 1e-12):
                converged = True
                break

    with torch.no_grad():
        hard = _batched_success_diagonal(theta, signs).min(dim=1).values
        order = torch.argsort(hard, descending=True)

    candidates = order[: max(1, cfg.polish_candidates)].tolist()
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    for idx in candidates:
        point = theta.detach()[idx].clone()
        if cfg.polish_iterations > 0:
            point = _polish(point, signs, cfg)
        params_np = point.numpy().copy()
        trial = ParamAlgorithm(n, workspace, params_np)
        successes = exact_success_diagonal(
            trial, family, projective=cfg.projective_rounding
        )
        p_hat = float(successes.min())
        if best is None or p_hat > best[0]:
            best = (p_hat, params_np, successes)

    p_hat, params_np, successes = best
    ceiling = Fraction(m_sum(n, queries), family.size)
    if p_hat > float(ceiling) + CEILING_SLACK:
        raise ModelError(
            f"found success {p_hat} above the counting ceiling {ceiling}; "
            f"the evaluation is broken"
        )
    return OptResult(
        p_hat=p_hat,
        parameters=ParamAlgorithm(n, workspace, params_np),
        per_function_success=successes,
        bound_ceiling=ceiling,
        certified_gap=float(ceiling) - p_hat,
        converged=converged,
    )


def _polish(
    point: torch.Tensor, signs: torch.Tensor, cfg: OptimizerConfig
) -> torch.Tensor:
    point = point.unsqueeze(0).clone().requires_grad_(True)
    opt = torch.optim.LBFGS(
        [point],
        max_iter=cfg.polish_iterations,
        history_size=25,
        tolerance_grad=1e-14,
        tolerance_change=1e-16,
        line_search_fn="strong_wolfe",
    )

    def closure():
        opt.zero_grad()
        loss = -_soft_min(
            _batched_success_diagonal(point, signs), cfg.tau_end
        ).sum()
        loss.backward()
        return loss

    opt.step(closure)
    return point.detach()[0]


def embed_algorithm(params: ParamAlgorithm) -> Algorithm:
    """Lift a reduced-space candidate into the full simulator basis.

    Labels 0..N with workspace W occupy the leading (N+1)*W coordinates of
    the 2NW phase-picture space; the auxiliary block gets the identity.
    """
    n, w = params.domain_size, params.workspace
    dim = space_dim(n, w)
    initial_small, unitaries_small = params.realize()
    amps = np.zeros(dim, dtype=np.complex128)
    amps[: params.dim] = initial_small
    initial = QuantumState(Picture.PHASE, n, w, amps)
    unitaries = []
    for u in unitaries_small:
        full = np.eye(dim, dtype=np.complex128)
        full[: params.dim, : params.dim] = u
        unitaries.append(DenseUnitary(full))
    return Algorithm(initial, tuple(unitaries))


def pgm_measurement_full(
    params: ParamAlgorithm, family: FunctionFamily
) -> Measurement:
    """Projective measurement on the full simulator space obtained by
    rounding the PGM of the final states; outcome j targets F_j, one extra
    outcome absorbs the orthogonal complement."""
    psi = _final_states_numpy(params, family)
    basis_small = _lowdin_rounding(psi)
    dim = space_dim(params.domain_size, params.workspace)
    count = basis_small.shape[1]
    used = np.zeros((dim, count), dtype=np.complex128)
    used[: params.dim] = basis_small
    blocks = [used[:, j : j + 1] for j in range(count)]
    # Complement = top eigenvectors of I - (used used^dagger), exactly dim-count.
    u = np.linalg.eigh(np.eye(dim, dtype=np.complex128) - used @ used.conj().T)[1]
    blocks.append(u[:, count:])
    return Measurement.from_blocks(blocks)


@dataclass(frozen=True)
class SubsetSearchRow:
    excluded_mask: int
    family_masks: tuple[int, ...]
    p_hat: float
    bound_ceiling: Fraction
    per_function_success: tuple[float, ...]


@dataclass(frozen=True)
class SubsetSearchResult:
    rows: tuple[SubsetSearchRow, ...]
    best_p_hat: float

    @property
    def all_below_one(self) -> bool:
        return all(row.p_hat < 1.0 for row in self.rows)


def search_seven_function_sets(cfg: OptimizerConfig | None = None) -> SubsetSearchResult:
    """Optimize over every 7-member subset of the 8 functions on N=3 with
    k=2 queries; the counting bound alone would allow all 7 to be told
    apart perfectly, so any best-found value below 1 is consistent with
    the claimed impossibility (and never a proof of it)."""
    cfg = cfg or OptimizerConfig(restarts=24, max_iterations=900)
    base = all_functions_family(3)
    rows = []
    for excluded in base.masks():
        masks = tuple(m for m in base.masks() if m != excluded)
        family = explicit_family(3, masks)
        result = optimize(family, 2, cfg)
        rows.append(
            SubsetSearchRow(
                excluded_mask=excluded,
                family_masks=masks,
                p_hat=result.p_hat,
                bound_ceiling=result.bound_ceiling,
                per_function_success=tuple(
                    float(x) for x in result.per_function_success
                ),
            )
        )
    return SubsetSearchResult(tuple(rows), max(row.p_hat for row in rows))
