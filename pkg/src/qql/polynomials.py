"""Multilinear polynomial view of query algorithms.

Each outcome amplitude of a k-query algorithm is a multilinear polynomial of
degree at most k in the oracle values F(1)..F(N).  This module represents
such polynomials by their character coefficients, recovers them from a
simulated algorithm by an exhaustive Walsh transform over all 2^N oracles,
and checks the floor that degree-k polynomials normalized at one reference
oracle must obey.

Coefficients are stored in a flat array aligned with
:func:`qql.functions.subsets_by_weight`, i.e. ordered by (|S|, mask value).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bounds import m_sum
from .errors import CapacityError, ParameterError, ValidationError
from .functions import (
    MAX_ENUM_DOMAIN,
    BooleanFunction,
    and_parity,
    subset_elements,
    subset_from_elements,
    subsets_by_weight,
)
from .walsh import fwht

# Extracted coefficients above the degree cap must stay below this; it
# separates genuine structure from double-precision accumulation over the
# <= 2^16 terms the exhaustive sweep may add.
DEGREE_TOL = 1e-10

# How close |Q(F0)| must be to 1 for the floor statement to apply.
REFERENCE_TOL = 1e-9


@lru_cache(maxsize=None)
def subset_basis(domain_size: int, degree_cap: int) -> np.ndarray:
    """Subset masks with |S| <= cap in canonical order, as a uint64 array."""
    return np.array(subsets_by_weight(domain_size, degree_cap), dtype=np.uint64)


@lru_cache(maxsize=None)
def _subset_rank(domain_size: int, degree_cap: int) -> dict[int, int]:
    return {int(m): i for i, m in enumerate(subset_basis(domain_size, degree_cap))}


@dataclass(frozen=True)
class MultilinearPolynomial:
    """Complex character coefficients a_S for subsets S with |S| <= degree_cap."""

    domain_size: int
    degree_cap: int
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        if not 0 <= self.degree_cap <= self.domain_size:
            raise ParameterError(
                f"degree cap must lie in 0..{self.domain_size}, got {self.degree_cap}"
            )
        coeffs = np.asarray(self.coefficients, dtype=np.complex128)
        expected = len(subset_basis(self.domain_size, self.degree_cap))
        if coeffs.shape != (expected,):
            raise ValidationError(
                f"expected {expected} coefficients for N={self.domain_size}, "
                f"cap={self.degree_cap}; got shape {coeffs.shape}"
            )
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_coefficient_map(
        cls, domain_size: int, degree_cap: int, mapping: dict[int, complex]
    ) -> "MultilinearPolynomial":
        rank = _subset_rank(domain_size, degree_cap)
        coeffs = np.zeros(len(rank), dtype=np.complex128)
        for mask, value in mapping.items():
            if mask not in rank:
                raise ValidationError(
                    f"subset mask {mask:#x} exceeds degree cap {degree_cap}"
                )
            coeffs[rank[mask]] = value
        return cls(domain_size, degree_cap, coeffs)

    def coefficient(self, mask: int) -> complex:
        pos = _subset_rank(self.domain_size, self.degree_cap).get(mask)
        return 0j if pos is None else complex(self.coefficients[pos])

    def items(self):
        """Yield (subset mask, coefficient) pairs for nonzero coefficients."""
        basis = subset_basis(self.domain_size, self.degree_cap)
        for mask, value in zip(basis, self.coefficients):
            if value != 0:
                yield int(mask), complex(value)

    def effective_degree(self) -> int:
        """Largest |S| carrying a nonzero coefficient (0 for the zero poly)."""
        deg = 0
        for mask, _ in self.items():
            deg = max(deg, mask.bit_count())
        return deg


def evaluate_poly(q: MultilinearPolynomial, f: BooleanFunction) -> complex:
    """sum_S a_S chi(S, F)."""
    if f.domain_size != q.domain_size:
        raise ValidationError(
            f"function domain {f.domain_size} != polynomial domain {q.domain_size}"
        )
    basis = subset_basis(q.domain_size, q.degree_cap)
    signs = 1 - 2 * and_parity(basis, f.mask)
    return complex(np.dot(q.coefficients, signs))


def evaluate_on_all(q: MultilinearPolynomial) -> np.ndarray:
    """Values Q(F) for every mask-ordered oracle F, via the Walsh transform."""
    n = q.domain_size
    if n > MAX_ENUM_DOMAIN:
        raise CapacityError(f"exhaustive evaluation is capped at N = {MAX_ENUM_DOMAIN}")
    full = np.zeros(1 << n, dtype=np.complex128)
    full[subset_basis(n, q.degree_cap).astype(np.int64)] = q.coefficients
    return fwht(full)


def parseval(q: MultilinearPolynomial) -> float:
    """sum_S |a_S|^2, which equals 2^-N sum_F |Q(F)|^2."""
    return float(np.sum(np.abs(q.coefficients) ** 2))


def lemma_floor(domain_size: int, queries: int) -> Fraction:
    """The exact floor 2^N / m_sum(N, k) on sum_F |Q(F)|^2."""
    return Fraction(1 << domain_size, m_sum(domain_size, queries))


def minimizer(
    domain_size: int, queries: int, reference: BooleanFunction
) -> MultilinearPolynomial:
    """The equal-magnitude polynomial achieving the floor with equality.

    Coefficients are chi(S, F0) / m_sum(N, k); the character twist by F0
    moves the all-plus-ones minimizer to an arbitrary reference oracle.
    """
    if reference.domain_size != domain_size:
        raise ValidationError("reference function domain does not match")
    basis = subset_basis(domain_size, queries)
    signs = 1 - 2 * and_parity(basis, reference.mask)
    coeffs = signs.astype(np.complex128) / m_sum(domain_size, queries)
    return MultilinearPolynomial(domain_size, queries, coeffs)


@dataclass(frozen=True)
class LemmaAuditReport:
    """Outcome of checking one polynomial against the normalized-sum floor."""

    applicable: bool
    value_at_reference: complex
    sum_of_squares: float
    degree: int
    floor: Fraction
    passes: bool

    def to_json(self) -> dict:
        return {
            "applicable": self.applicable,
            "value_at_reference": [
                self.value_at_reference.real,
                self.value_at_reference.imag,
            ],
            "sum_of_squares": self.sum_of_squares,
            "degree": self.degree,
            "floor": str(self.floor),
            "passes": self.passes,
        }


def lemma_audit(
    q: MultilinearPolynomial, reference: BooleanFunction
) -> LemmaAuditReport:
    """Check sum_F |Q(F)|^2 >= 2^N / m_sum(N, deg Q) for a unit-reference Q.

    The report is marked not applicable when |Q(F0)| strays from 1 by more
    than the stated tolerance; the sum is then still reported but the floor
    claim is vacuous.
    """
    value = evaluate_poly(q, reference)
    applicable = abs(abs(value) - 1.0) <= REFERENCE_TOL
    sum_sq = float(np.sum(np.abs(evaluate_on_all(q)) ** 2))
    degree = q.effective_degree()
    floor = lemma_floor(q.domain_size, degree)
    passes = bool(applicable and sum_sq >= float(floor) - 1e-12)
    return LemmaAuditReport(applicable, value, sum_sq, degree, floor, passes)


def extract_polynomials(algorithm, measurement) -> list[list[MultilinearPolynomial]]:
    """Recover the amplitude polynomials of every measurement basis vector.

    Runs the algorithm on all 2^N oracles, records each outcome-vector
    amplitude, and inverts the character transform.  The result is one
    polynomial per basis vector, grouped by outcome, each certified to have
    no coefficient above :data:`DEGREE_TOL` beyond |S| = k.
    """
    from .simulator import run  # deferred to keep module import acyclic

    n = algorithm.initial.domain_size
    # No monomial has more than N distinct factors, whatever k is.
    k = min(algorithm.query_count, n)
    if n > 16:
        raise CapacityError(f"coefficient extraction sweeps 2^N oracles; N = {n} > 16")
    if measurement.dim != algorithm.initial.dim:
        raise ValidationError(
            f"measurement dimension {measurement.dim} != state dimension "
            f"{algorithm.initial.dim}"
        )
    count = 1 << n
    total_rows = sum(measurement.outcome_dimensions)
    amplitudes = np.empty((total_rows, count), dtype=np.complex128)
    for fmask in range(count):
        state = run(algorithm, BooleanFunction(n, fmask))
        amplitudes[:, fmask] = np.concatenate(measurement.amplitudes(state))

    coeffs_full = fwht(amplitudes, axis=1) / count
    weights = np.bitwise_count(np.arange(count, dtype=np.uint64)).astype(np.int64)
    high = np.abs(coeffs_full[:, weights > k])
    if high.size and high.max() > DEGREE_TOL:
        raise ValidationError(
            f"amplitude coefficient of weight > {k} has magnitude "
            f"{high.max():.3e}; exceeds the {DEGREE_TOL:.0e} certificate"
        )

    basis = subset_basis(n, k).astype(np.int64)
    polys: list[list[MultilinearPolynomial]] = []
    row = 0
    for m_l in measurement.outcome_dimensions:
        group = []
        for _ in range(m_l):
            group.append(MultilinearPolynomial(n, k, coeffs_full[row, basis]))
            row += 1
        polys.append(group)
    return polys


def poly_to_json(q: MultilinearPolynomial) -> dict:
    return {
        "domain_size": q.domain_size,
        "coefficients": [
            {"subset": list(subset_elements(mask)), "re": value.real, "im": value.imag}
            for mask, value in q.items()
        ],
    }


def poly_from_json(data: dict) -> MultilinearPolynomial:
    try:
        domain_size = int(data["domain_size"])
        entries = data["coefficients"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed polynomial object: {exc}") from exc
    mapping: dict[int, complex] = {}
    cap = 0
    for entry in entries:
        try:
            mask = subset_from_elements(entry["subset"])
            value = complex(float(entry["re"]), float(entry.get("im", 0.0)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed coefficient entry: {exc}") from exc
        if mask in mapping:
            raise ValidationError(
                f"duplicate subset {sorted(subset_elements(mask))} in polynomial"
            )
        mapping[mask] = value
        cap = max(cap, mask.bit_count())
    return MultilinearPolynomial.from_coefficient_map(domain_size, cap, mapping)
