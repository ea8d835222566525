import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qql.errors import ParameterError
from qql.walsh import fwht


def brute_walsh(a: np.ndarray) -> np.ndarray:
    # independent route: the kernel sum, quadratic time
    n = a.shape[0]
    out = np.zeros_like(a, dtype=np.complex128)
    for s in range(n):
        for f in range(n):
            out[s] += (-1) ** ((s & f).bit_count()) * a[f]
    return out


@given(st.integers(0, 6), st.integers(0, 2**31 - 1))
def test_fwht_matches_kernel(log_n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=1 << log_n) + 1j * rng.normal(size=1 << log_n)
    assert np.allclose(fwht(a.copy()), brute_walsh(a), atol=1e-12)


@given(st.integers(0, 10), st.integers(0, 2**31 - 1))
def test_fwht_self_inverse(log_n, seed):
    rng = np.random.default_rng(seed)
    n = 1 << log_n
    a = rng.normal(size=n)
    assert np.allclose(fwht(fwht(a.copy())) / n, a, atol=1e-10)


def test_fwht_axis():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5, 8))
    rows = np.stack([brute_walsh(row.astype(np.complex128)) for row in a])
    assert np.allclose(fwht(a.copy(), axis=1), rows, atol=1e-12)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(ParameterError):
        fwht(np.zeros(6))
