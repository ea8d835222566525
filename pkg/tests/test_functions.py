import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qql.errors import ParameterError, ValidationError
from qql.functions import (
    BooleanFunction,
    FunctionFamily,
    all_functions_family,
    and_parity,
    character_family,
    chi,
    chi_vector,
    explicit_family,
    family_from_json,
    family_to_json,
    grover_family,
    make_family,
    subset_elements,
    subset_from_elements,
    subsets_by_weight,
)


def brute_chi(subset: int, f: BooleanFunction) -> int:
    # independent route: literal product over the subset's elements
    out = 1
    for x in subset_elements(subset):
        out *= f.evaluate(x)
    return out


@given(st.integers(1, 12), st.data())
def test_chi_matches_literal_product(n, data):
    mask = data.draw(st.integers(0, (1 << n) - 1))
    subset = data.draw(st.integers(0, (1 << n) - 1))
    f = BooleanFunction(n, mask)
    assert chi(subset, f) == brute_chi(subset, f)


@given(st.integers(1, 12), st.data())
def test_chi_multiplicative_in_subsets(n, data):
    mask = data.draw(st.integers(0, (1 << n) - 1))
    s = data.draw(st.integers(0, (1 << n) - 1))
    t = data.draw(st.integers(0, (1 << n) - 1))
    f = BooleanFunction(n, mask)
    # F(x)^2 = 1 collapses the overlap: chi_S chi_T = chi_{S xor T}
    assert chi(s, f) * chi(t, f) == chi(s ^ t, f)


@given(st.integers(1, 12), st.data())
def test_product_of_functions_is_mask_xor(n, data):
    a = data.draw(st.integers(0, (1 << n) - 1))
    b = data.draw(st.integers(0, (1 << n) - 1))
    fa, fb = BooleanFunction(n, a), BooleanFunction(n, b)
    prod = fa.product(fb)
    for x in range(n + 1):
        assert prod.evaluate(x) == fa.evaluate(x) * fb.evaluate(x)


def test_evaluate_zero_is_plus_one():
    f = BooleanFunction(4, 0b1111)
    assert f.evaluate(0) == 1
    assert f(0) == 1


def test_evaluate_range_checked():
    f = BooleanFunction(3, 0b101)
    with pytest.raises(ParameterError):
        f.evaluate(4)
    with pytest.raises(ParameterError):
        f.evaluate(-1)


def test_sign_array_matches_evaluate():
    f = BooleanFunction(6, 0b101101)
    signs = f.sign_array()
    assert signs.tolist() == [f.evaluate(x) for x in range(1, 7)]


def test_values_string_round_trip():
    f = BooleanFunction.from_values_string("+-+-")
    assert f.domain_size == 4
    assert f.values_string() == "+-+-"
    assert [f(x) for x in range(1, 5)] == [1, -1, 1, -1]


def test_subset_helpers_round_trip():
    mask = subset_from_elements([2, 5, 7])
    assert subset_elements(mask) == (2, 5, 7)
    with pytest.raises(ParameterError):
        subset_from_elements([0])


def test_subsets_by_weight_order_and_count():
    subs = subsets_by_weight(4, 2)
    weights = [s.bit_count() for s in subs]
    assert weights == sorted(weights)
    assert len(subs) == 1 + 4 + 6
    # ties in weight break by numeric mask value
    w1 = [s for s in subs if s.bit_count() == 1]
    assert w1 == sorted(w1)


def test_and_parity_vectorized():
    masks = np.array(subsets_by_weight(5, 5), dtype=np.uint64)
    f = BooleanFunction(5, 0b10110)
    par = and_parity(masks, f.mask)
    assert all(
        int(p) == (int(m) & f.mask).bit_count() % 2 for p, m in zip(par, masks)
    )
    signs = chi_vector(masks, f)
    assert all(int(s) == chi(int(m), f) for s, m in zip(signs, masks))


def test_grover_family():
    fam = grover_family(5)
    assert fam.size == 5
    for j, f in enumerate(fam):
        values = [f(x) for x in range(1, 6)]
        assert values.count(-1) == 1
        assert values[j] == -1


def test_character_family_is_parity():
    fam = character_family(3)
    assert fam.size == 8 and fam.domain_size == 7
    for a, f in enumerate(fam):
        for x in range(8):
            assert f(x) == (-1) ** ((a & x).bit_count())


def test_all_functions_family():
    fam = all_functions_family(3)
    assert fam.size == 8
    assert sorted(fam.masks()) == list(range(8))


def test_family_rejects_duplicates_and_mixed_domains():
    with pytest.raises(ValidationError):
        explicit_family(3, [1, 1])
    with pytest.raises(ValidationError):
        FunctionFamily(2, (BooleanFunction(2, 1), BooleanFunction(3, 1)))


def test_make_family_dispatch():
    assert make_family("characters", n=2).size == 4
    assert make_family("characters", domain_size=3).size == 4
    with pytest.raises(ParameterError):
        make_family("characters", domain_size=4)  # 4+1 is not a power of two
    assert make_family("grover", domain_size=4).size == 4
    assert make_family("all", domain_size=2).size == 4
    with pytest.raises(ParameterError):
        make_family("nonsense", domain_size=2)


def test_family_json_round_trip(tmp_path):
    fam = explicit_family(3, [0, 5, 7])
    data = family_to_json(fam)
    assert data["functions"] == ["+++", "-+-", "---"]
    back = family_from_json(json.loads(json.dumps(data)))
    assert back.masks() == fam.masks()
    with pytest.raises(ValidationError):
        family_from_json({"domain_size": 3, "functions": ["++"]})
    with pytest.raises(ValidationError):
        family_from_json({"domain_size": 2, "functions": ["+x"]})
