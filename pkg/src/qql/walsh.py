"""Fast Walsh-Hadamard transform over mask-indexed arrays.

The kernel is the symmetric +/-1 character matrix H[s, f] = (-1)^popcount(s & f),
so the transform is its own inverse up to a factor of the length.  It is the
workhorse behind exhaustive polynomial evaluation, coefficient extraction,
and the subset-register mixing unitary of the uniform-subset algorithm.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterError


def fwht(a: np.ndarray, axis: int = 0) -> np.ndarray:
    """Unnormalized transform out[s] = sum_f (-1)^popcount(s & f) a[f].

    The axis length must be a power of two.  Applying the transform twice
    multiplies by the axis length.
    """
    a = np.array(np.moveaxis(np.asarray(a), axis, 0), copy=True)
    n = a.shape[0]
    if n == 0 or n & (n - 1):
        raise ParameterError(f"transform length must be a power of two, got {n}")
    h = 1
    while h < n:
        view = a.reshape(n // (2 * h), 2, h, *a.shape[1:])
        top = view[:, 0] + view[:, 1]
        bottom = view[:, 0] - view[:, 1]
        view[:, 0] = top
        view[:, 1] = bottom
        h *= 2
    return np.moveaxis(a, 0, axis)
