"""Exact counting bounds on distinguishable oracle functions.

Everything here is arbitrary-precision: Python integers for the binomial
sums and ``fractions.Fraction`` for success probabilities.  At n = 200 the
sorting bound touches binomials like C(19900, k), far beyond float range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError

RationalLike = Fraction | int | str


def _as_probability(p: RationalLike) -> Fraction:
    try:
        frac = Fraction(p)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"cannot parse probability {p!r}") from exc
    if not 0 < frac <= 1:
        raise ParameterError(f"probability must lie in (0, 1], got {frac}")
    return frac


def m_sum(domain_size: int, queries: int) -> int:
    """The query-count budget sum C(N,0) + C(N,1) + ... + C(N,k), exact."""
    if domain_size < 0:
        raise ParameterError(f"domain size must be >= 0, got {domain_size}")
    if not 0 <= queries <= domain_size:
        raise ParameterError(
            f"query count must lie in 0..{domain_size}, got {queries}"
        )
    return sum(math.comb(domain_size, i) for i in range(queries + 1))


def m_sum_terms(domain_size: int, queries: int) -> list[int]:
    """The individual binomials making up :func:`m_sum`, as a certificate."""
    if not 0 <= queries <= domain_size:
        raise ParameterError(
            f"query count must lie in 0..{domain_size}, got {queries}"
        )
    return [math.comb(domain_size, i) for i in range(queries + 1)]


def max_distinguishable(domain_size: int, queries: int, p: RationalLike) -> int:
    """Largest family size a k-query algorithm with success p could identify.

    floor(m_sum / p), computed exactly in rational arithmetic.
    """
    frac = _as_probability(p)
    return (m_sum(domain_size, queries) * frac.denominator) // frac.numerator


@dataclass(frozen=True)
class BoundQuery:
    """One feasibility question: can D functions survive k queries at level p."""

    domain_size: int
    queries: int
    success_probability: Fraction
    family_size: int

    def __post_init__(self) -> None:
        if not 0 <= self.queries <= self.domain_size:
            raise ParameterError(
                f"query count must lie in 0..{self.domain_size}, got {self.queries}"
            )
        object.__setattr__(
            self, "success_probability", _as_probability(self.success_probability)
        )
        if self.family_size < 1:
            raise ParameterError(f"family size must be >= 1, got {self.family_size}")


def is_feasible(query: BoundQuery) -> bool:
    """True iff D * p <= m_sum(N, k) holds exactly.

    False certifies that no k-query algorithm identifies every member of any
    D-function family with worst-case probability p.  True is only the
    counting bound's permission, not a construction.
    """
    p = query.success_probability
    lhs = query.family_size * p.numerator
    rhs = m_sum(query.domain_size, query.queries) * p.denominator
    return lhs <= rhs


def sorting_lower_bound(n: int) -> int:
    """Smallest k with n! <= m_sum(C(n,2), k): queries needed to sort n items.

    Orderings of n items are n! distinct comparison functions on the
    N = C(n,2) pairs, so identifying the ordering is a distinguishability
    problem and the counting bound applies.  The binomials are accumulated
    incrementally (C(N,k) from C(N,k-1)) so the scan is O(k) big-integer
    steps.
    """
    if n < 2:
        raise ParameterError(f"sorting bound needs n >= 2, got {n}")
    pairs = n * (n - 1) // 2
    target = math.factorial(n)
    total = 1  # m_sum(pairs, 0)
    term = 1
    k = 0
    while total < target:
        k += 1
        if k > pairs:
            raise ParameterError(
                f"n! exceeds 2^C(n,2); no query count suffices for n = {n}"
            )
        term = term * (pairs - k + 1) // k
        total += term
    return k
