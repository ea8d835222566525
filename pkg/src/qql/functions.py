"""Sign-valued oracle functions, families of them, and subset characters.

A function F maps {1..N} into {-1, +1} and is stored as an N-bit mask in
which bit x-1 is set exactly when F(x) = -1.  F(0) is defined to be +1; the
phase-picture oracle relies on that extension.  Subsets S of {1..N} use the
same mask encoding (bit x-1 set means x is in S), so the character
chi(S, F) = prod_{x in S} F(x) is the parity of ``popcount(S & F.mask)``.

With this encoding the pointwise product of two functions is the xor of
their masks, and enumerating all 2^N functions is a counter loop.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapacityError, ParameterError, ValidationError

# Enumerating all 2^N functions (or evaluating one on all of them) is kept
# below this domain size; 2^20 masks is already a million-entry sweep.
MAX_ENUM_DOMAIN = 20


@dataclass(frozen=True)
class BooleanFunction:
    """A map {1..N} -> {-1, +1} stored as an N-bit mask (bit set means -1)."""

    domain_size: int
    mask: int

    def __post_init__(self) -> None:
        if self.domain_size < 1:
            raise ParameterError(f"domain size must be >= 1, got {self.domain_size}")
        if not 0 <= self.mask < (1 << self.domain_size):
            raise ValidationError(
                f"mask {self.mask:#x} does not fit in {self.domain_size} bits"
            )

    @classmethod
    def from_values_string(cls, values: str) -> "BooleanFunction":
        """Parse a '+'/'-' string; character i gives the sign of F(i+1)."""
        mask = 0
        for i, ch in enumerate(values):
            if ch == "-":
                mask |= 1 << i
            elif ch != "+":
                raise ValidationError(f"invalid sign character {ch!r} in {values!r}")
        return cls(len(values), mask)

    def evaluate(self, x: int) -> int:
        """Return F(x) for x in 1..N, or +1 for the x = 0 extension."""
        if not 0 <= x <= self.domain_size:
            raise ParameterError(
                f"argument {x} outside 0..{self.domain_size}"
            )
        if x == 0:
            return 1
        return -1 if (self.mask >> (x - 1)) & 1 else 1

    __call__ = evaluate

    def values_string(self) -> str:
        """Inverse of :meth:`from_values_string`."""
        return "".join(
            "-" if (self.mask >> i) & 1 else "+" for i in range(self.domain_size)
        )

    def sign_array(self) -> np.ndarray:
        """Signs (F(1), ..., F(N)) as an int8 vector."""
        bits = (self.mask >> np.arange(self.domain_size)) & 1
        return (1 - 2 * bits).astype(np.int8)

    def product(self, other: "BooleanFunction") -> "BooleanFunction":
        """Pointwise product; masks simply xor."""
        if other.domain_size != self.domain_size:
            raise ValidationError("cannot multiply functions on different domains")
        return BooleanFunction(self.domain_size, self.mask ^ other.mask)


def evaluate(f: BooleanFunction, x: int) -> int:
    """Functional form of :meth:`BooleanFunction.evaluate`."""
    return f.evaluate(x)


def chi(subset: int, f: BooleanFunction) -> int:
    """Character value prod_{x in S} F(x); +1 for the empty subset."""
    if not 0 <= subset < (1 << f.domain_size):
        raise ValidationError(
            f"subset mask {subset:#x} does not fit in {f.domain_size} bits"
        )
    return -1 if (subset & f.mask).bit_count() & 1 else 1


def subset_elements(subset: int) -> tuple[int, ...]:
    """Decode a subset mask into its 1-based elements, ascending."""
    out = []
    x = 1
    while subset:
        if subset & 1:
            out.append(x)
        subset >>= 1
        x += 1
    return tuple(out)


def subset_from_elements(elements: Iterable[int]) -> int:
    mask = 0
    for x in elements:
        if x < 1:
            raise ParameterError(f"subset elements are 1-based, got {x}")
        mask |= 1 << (x - 1)
    return mask


def subsets_by_weight(domain_size: int, max_weight: int) -> list[int]:
    """All subset masks with |S| <= max_weight, ordered by (|S|, mask value).

    This is the canonical coefficient order used by the polynomial module
    and by the uniform-subset reference algorithm.
    """
    if not 0 <= max_weight <= domain_size:
        raise ParameterError(
            f"weight cap must lie in 0..{domain_size}, got {max_weight}"
        )
    masks: list[int] = []
    for w in range(max_weight + 1):
        layer = [subset_from_elements(c) for c in combinations(range(1, domain_size + 1), w)]
        layer.sort()
        masks.extend(layer)
    return masks


def and_parity(masks: np.ndarray, other: int) -> np.ndarray:
    """Vectorized popcount parity of ``masks & other`` (0 or 1 per entry)."""
    v = np.bitwise_and(np.asarray(masks, dtype=np.uint64), np.uint64(other))
    return (np.bitwise_count(v) & np.uint64(1)).astype(np.int64)


def chi_vector(masks: np.ndarray, f: BooleanFunction) -> np.ndarray:
    """chi(S, F) for a whole array of subset masks at once."""
    return 1 - 2 * and_parity(masks, f.mask)


@dataclass(frozen=True)
class FunctionFamily:
    """An ordered list of distinct functions sharing one domain size."""

    domain_size: int
    members: tuple[BooleanFunction, ...]

    def __post_init__(self) -> None:
        if len(self.members) < 1:
            raise ValidationError("a family needs at least one member")
        for f in self.members:
            if f.domain_size != self.domain_size:
                raise ValidationError(
                    f"member domain {f.domain_size} != family domain {self.domain_size}"
                )
        seen = {f.mask for f in self.members}
        if len(seen) != len(self.members):
            raise ValidationError("family members must be pairwise distinct")

    @property
    def size(self) -> int:
        return len(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[BooleanFunction]:
        return iter(self.members)

    def __getitem__(self, i: int) -> BooleanFunction:
        return self.members[i]

    def masks(self) -> tuple[int, ...]:
        return tuple(f.mask for f in self.members)


def grover_family(domain_size: int) -> FunctionFamily:
    """The N functions that are -1 at exactly one point, ordered by that point."""
    if domain_size < 1:
        raise ParameterError("grover family needs domain size >= 1")
    members = tuple(
        BooleanFunction(domain_size, 1 << j) for j in range(domain_size)
    )
    return FunctionFamily(domain_size, members)


def character_family(n: int) -> FunctionFamily:
    """The N+1 parity characters f_a(x) = (-1)^(a.x) on N = 2^n - 1 points.

    a.x is the parity of the bitwise AND of the binary representations of a
    and x.  a = 0 gives the constant +1 function; the family is closed under
    pointwise product (masks xor within the family).
    """
    if n < 1:
        raise ParameterError(f"character family needs n >= 1, got {n}")
    if n > 16:
        raise CapacityError(f"character family with n = {n} exceeds the 2^16 guard")
    domain_size = (1 << n) - 1
    members = []
    for a in range(domain_size + 1):
        mask = 0
        for x in range(1, domain_size + 1):
            if (a & x).bit_count() & 1:
                mask |= 1 << (x - 1)
        members.append(BooleanFunction(domain_size, mask))
    return FunctionFamily(domain_size, tuple(members))


def all_functions_family(domain_size: int) -> FunctionFamily:
    """All 2^N functions in mask order."""
    if domain_size < 1:
        raise ParameterError("domain size must be >= 1")
    if domain_size > MAX_ENUM_DOMAIN:
        raise CapacityError(
            f"enumerating all functions is capped at N = {MAX_ENUM_DOMAIN}, got {domain_size}"
        )
    members = tuple(
        BooleanFunction(domain_size, m) for m in range(1 << domain_size)
    )
    return FunctionFamily(domain_size, members)


def explicit_family(domain_size: int, masks: Sequence[int]) -> FunctionFamily:
    members = tuple(BooleanFunction(domain_size, m) for m in masks)
    return FunctionFamily(domain_size, members)


def make_family(
    kind: str,
    *,
    domain_size: int | None = None,
    n: int | None = None,
    masks: Sequence[int] | None = None,
) -> FunctionFamily:
    """Dispatch on a family kind name: grover, characters, all, or explicit.

    The character family takes either ``n`` directly or a ``domain_size``
    that must equal 2^n - 1.
    """
    if kind == "grover":
        if domain_size is None:
            raise ParameterError("grover family needs domain_size")
        return grover_family(domain_size)
    if kind == "characters":
        if n is None:
            if domain_size is None:
                raise ParameterError("character family needs n or domain_size")
            if domain_size < 1 or (domain_size + 1) & domain_size:
                raise ParameterError(
                    f"character family needs domain_size + 1 a power of two, got {domain_size}"
                )
            n = (domain_size + 1).bit_length() - 1
        return character_family(n)
    if kind == "all":
        if domain_size is None:
            raise ParameterError("all-functions family needs domain_size")
        return all_functions_family(domain_size)
    if kind == "explicit":
        if domain_size is None or masks is None:
            raise ParameterError("explicit family needs domain_size and masks")
        return explicit_family(domain_size, masks)
    raise ParameterError(f"unknown family kind {kind!r}")


def family_to_json(family: FunctionFamily) -> dict:
    return {
        "domain_size": family.domain_size,
        "functions": [f.values_string() for f in family],
    }


def family_from_json(data: dict) -> FunctionFamily:
    try:
        domain_size = int(data["domain_size"])
        strings = data["functions"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed family object: {exc}") from exc
    members = []
    for s in strings:
        if not isinstance(s, str) or len(s) != domain_size:
            raise ValidationError(
                f"function string {s!r} does not have length {domain_size}"
            )
        members.append(BooleanFunction.from_values_string(s))
    return FunctionFamily(domain_size, tuple(members))


def load_family(path: str) -> FunctionFamily:
    with open(path, "r", encoding="utf-8") as fh:
        return family_from_json(json.load(fh))


def save_family(family: FunctionFamily, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(family_to_json(family), fh, indent=2)
        fh.write("\n")
