"""End-to-end acceptance gate.

One test per shipped claim; each records a PASS/FAIL line printed in the
terminal summary.  Tolerances and budgets are stated inline and are not
adjustable from the command line.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import record_criterion
from helpers import random_algorithm, random_block_measurement
from qql.bounds import m_sum, sorting_lower_bound
from qql.functions import (
    BooleanFunction,
    all_functions_family,
    character_family,
    explicit_family,
)
from qql.polynomials import (
    MultilinearPolynomial,
    evaluate_on_all,
    evaluate_poly,
    extract_polynomials,
    lemma_floor,
    minimizer,
    parseval,
    subset_basis,
)
from qql.reference import (
    build_character_distinguisher,
    build_uniform_subset_algorithm,
    predicted_success,
)
from qql.simulator import (
    Picture,
    convert_algorithm,
    convert_measurement,
    run,
    success_matrix,
)
from qql.walsh import fwht

# OptResults produced by this module, for the cross-suite ceiling criterion.
_OPT_RESULTS: list[tuple[str, object]] = []


def _record(number, title, passed, detail):
    record_criterion(number, title, passed, detail)


def test_criterion_1_example1_identity():
    title = "one-query character distinguisher is exact for n = 1..6"
    try:
        start = time.perf_counter()
        worst = 0.0
        for n in range(1, 7):
            bundle = build_character_distinguisher(n)
            s = bundle.success_matrix()
            dev = float(np.abs(s - np.eye(s.shape[0])).max())
            worst = max(worst, dev)
            assert dev <= 1e-12, f"n={n} deviates from identity by {dev:.3e}"
            d = bundle.family.size
            n_points = bundle.algorithm.domain_size
            assert d == n_points + 1 == m_sum(n_points, 1)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"took {elapsed:.2f}s, budget 1s"
    except BaseException as exc:
        _record(1, title, False, str(exc)[:160])
        raise
    _record(1, title, True, f"max |S - I| = {worst:.2e}, {elapsed:.2f}s")


def test_criterion_2_uniform_subset_equality():
    title = "uniform-subset algorithm hits m_sum(N,k)/2^N for N <= 8, k <= N"
    try:
        start = time.perf_counter()
        worst = 0.0
        for n in range(1, 9):
            for k in range(1, n + 1):
                bundle = build_uniform_subset_algorithm(n, k)
                expected = float(predicted_success(n, k))
                diag = np.diagonal(bundle.success_matrix())
                dev = float(np.abs(diag - expected).max())
                worst = max(worst, dev)
                assert dev <= 1e-12, f"(N,k)=({n},{k}) deviates by {dev:.3e}"
        assert predicted_success(3, 2) == Fraction(7, 8)
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"took {elapsed:.2f}s, budget 30s"
    except BaseException as exc:
        _record(2, title, False, str(exc)[:160])
        raise
    _record(2, title, True, f"max deviation {worst:.2e} over 36 cases, {elapsed:.2f}s")


def test_criterion_3_lemma_floor():
    title = "norm floor holds for 1000 random polynomials, minimizer is tight"
    try:
        start = time.perf_counter()
        rng = np.random.default_rng(2024)
        min_margin = np.inf
        for _ in range(1000):
            n = int(rng.integers(1, 11))
            k = int(rng.integers(1, n + 1))
            f0 = BooleanFunction(n, int(rng.integers(0, 1 << n)))
            size = len(subset_basis(n, k))
            while True:
                coeffs = rng.normal(size=size) + 1j * rng.normal(size=size)
                q = MultilinearPolynomial(n, k, coeffs)
                value = evaluate_poly(q, f0)
                if abs(value) > 1e-6:
                    break
            q = MultilinearPolynomial(n, k, coeffs / abs(value))
            total = float(np.sum(np.abs(evaluate_on_all(q)) ** 2))
            floor = float(lemma_floor(n, k))
            min_margin = min(min_margin, total - floor)
            assert total >= floor - 1e-12, (
                f"floor violated at (N,k)=({n},{k}): {total} < {floor}"
            )
        worst_eq = 0.0
        for _ in range(50):
            n = int(rng.integers(1, 11))
            k = int(rng.integers(1, n + 1))
            f0 = BooleanFunction(n, int(rng.integers(0, 1 << n)))
            q = minimizer(n, k, f0)
            total = float(np.sum(np.abs(evaluate_on_all(q)) ** 2))
            dev = abs(total - float(lemma_floor(n, k)))
            worst_eq = max(worst_eq, dev)
            assert dev <= 1e-12, f"minimizer misses floor by {dev:.3e}"
            assert abs(evaluate_poly(q, f0) - 1.0) <= 1e-12
        elapsed = time.perf_counter() - start
        assert elapsed < 20.0, f"took {elapsed:.2f}s, budget 20s"
    except BaseException as exc:
        _record(3, title, False, str(exc)[:160])
        raise
    _record(
        3,
        title,
        True,
        f"min margin {min_margin:.2e}, minimizer dev {worst_eq:.2e}, {elapsed:.2f}s",
    )


def test_criterion_4_degree_certificate():
    title = "100 random algorithms have no amplitude weight beyond k (N=4)"
    try:
        start = time.perf_counter()
        rng = np.random.default_rng(4)
        n = 4
        weights = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(int)
        worst_high = 0.0
        for trial in range(100):
            k = int(rng.integers(1, 4))
            w = int(rng.integers(1, 5))
            picture = Picture.BITFLIP if rng.integers(2) else Picture.PHASE
            alg = random_algorithm(picture, n, w, k, rng)
            values = np.empty((alg.initial.dim, 1 << n), dtype=np.complex128)
            for mask in range(1 << n):
                values[:, mask] = run(alg, BooleanFunction(n, mask)).amplitudes
            coeffs = fwht(values, axis=1) / (1 << n)
            high = float(np.abs(coeffs[:, weights > k]).max())
            worst_high = max(worst_high, high)
            assert high <= 1e-10, (
                f"trial {trial} (k={k}, W={w}): weight>{k} coefficient {high:.3e}"
            )
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"took {elapsed:.2f}s, budget 60s"
    except BaseException as exc:
        _record(4, title, False, str(exc)[:160])
        raise
    _record(4, title, True, f"max high-weight coefficient {worst_high:.2e}, {elapsed:.2f}s")


def test_criterion_5_global_probability_sum():
    title = "total outcome mass over all oracles equals 2^N (20 random runs)"
    try:
        start = time.perf_counter()
        rng = np.random.default_rng(5)
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(1, 9))
            w = int(rng.integers(1, 3))
            k = int(rng.integers(1, 4))
            picture = Picture.BITFLIP if rng.integers(2) else Picture.PHASE
            alg = random_algorithm(picture, n, w, k, rng)
            outcomes = int(rng.integers(1, min(alg.initial.dim, 6) + 1))
            m = random_block_measurement(alg.initial.dim, outcomes, rng)
            direct = 0.0
            for mask in range(1 << n):
                state = run(alg, BooleanFunction(n, mask))
                direct += float(m.probabilities(state).sum())
            target = float(1 << n)
            dev = abs(direct - target)
            # dual route: the same mass through the coefficient side
            polys = extract_polynomials(alg, m)
            via_parseval = target * sum(
                parseval(q) for group in polys for q in group
            )
            dev = max(dev, abs(via_parseval - target))
            worst = max(worst, dev / target)
            assert dev <= target * 1e-12, f"N={n}: mass off by {dev:.3e}"
        elapsed = time.perf_counter() - start
    except BaseException as exc:
        _record(5, title, False, str(exc)[:160])
        raise
    _record(5, title, True, f"max relative deviation {worst:.2e}, {elapsed:.2f}s")


def test_criterion_6_counting_values():
    title = "counting sums, sorting bound values, and the k_min(n)/n ratio"
    try:
        start = time.perf_counter()
        assert m_sum(3, 2) == 7
        for n in range(0, 65):
            assert m_sum(n, n) == 1 << n
        for n in range(2, 65):
            for k in range(1, n):
                assert m_sum(n, k) == m_sum(n - 1, k) + m_sum(n - 1, k - 1)
        assert sorting_lower_bound(2) == 1
        assert sorting_lower_bound(3) == 2
        k_min = {n: sorting_lower_bound(n) for n in range(10, 201)}
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.2f}s, budget 10s"
        ratio_violations = [
            n
            for n in range(11, 201)
            if k_min[n] * (n - 1) < k_min[n - 1] * n
        ]
        assert not ratio_violations, (
            f"k_min(n)/n decreases at n = {ratio_violations[:6]}: e.g. "
            f"k_min(11)/11 = {k_min[11]}/11 > k_min(12)/12 = {k_min[12]}/12"
        )
    except BaseException as exc:
        _record(6, title, False, str(exc)[:200])
        raise
    _record(6, title, True, f"all counting identities hold, {elapsed:.2f}s")


def test_criterion_7_optimizer_tight_cases():
    title = "optimizer recovers p = 1 on characters and 7/8 on all functions"
    from qql.optimizer import OptimizerConfig, optimize

    try:
        start = time.perf_counter()
        fam_chars = character_family(2)
        res_chars = optimize(
            fam_chars, 1, OptimizerConfig(restarts=12, max_iterations=600, seed=0)
        )
        _OPT_RESULTS.append(("characters(2) k=1", res_chars))
        assert res_chars.p_hat >= 1 - 1e-6, f"characters: p_hat = {res_chars.p_hat}"

        fam_all = all_functions_family(3)
        res_all = optimize(
            fam_all, 2, OptimizerConfig(restarts=40, max_iterations=1200, seed=0)
        )
        _OPT_RESULTS.append(("all(3) k=2", res_all))
        low, high = 7 / 8 - 0.01, 7 / 8 + 1e-9
        assert low <= res_all.p_hat <= high, f"all(3): p_hat = {res_all.p_hat}"
        elapsed = time.perf_counter() - start
        assert elapsed < 600.0, f"took {elapsed:.2f}s, budget 600s"
    except BaseException as exc:
        _record(7, title, False, str(exc)[:160])
        raise
    _record(
        7,
        title,
        True,
        f"p_hat = {res_chars.p_hat:.12f} and {res_all.p_hat:.12f}, {elapsed:.1f}s",
    )


def test_criterion_8_optimizer_ceiling_and_seven_subsets():
    title = "counting ceiling never violated; all eight 7-subsets stay below 1"
    from qql.optimizer import OptimizerConfig, search_seven_function_sets

    try:
        start = time.perf_counter()
        result = search_seven_function_sets(
            OptimizerConfig(restarts=8, max_iterations=400, seed=0)
        )
        assert len(result.rows) == 8
        for row in result.rows:
            assert row.p_hat * 7 <= m_sum(3, 2) + 1e-6, (
                f"ceiling violated on subset excluding {row.excluded_mask:#x}"
            )
            assert row.p_hat < 1.0, (
                f"subset excluding {row.excluded_mask:#x} reached {row.p_hat}"
            )
        assert result.all_below_one
        # optimize() itself raises beyond ceiling + 1e-9 on every call in the
        # suite; re-check the runs recorded by this module at 1e-6.
        for label, res in _OPT_RESULTS:
            d = len(res.per_function_success)
            num, den = res.bound_ceiling.numerator, res.bound_ceiling.denominator
            assert res.p_hat * d <= num * d / den + 1e-6, label
        elapsed = time.perf_counter() - start
    except BaseException as exc:
        _record(8, title, False, str(exc)[:160])
        raise
    _record(
        8,
        title,
        True,
        f"best p_hat {result.best_p_hat:.6f} < 1 across 8 subsets, {elapsed:.1f}s",
    )


def test_criterion_9_picture_equivalence():
    title = "bit-flip and phase pictures give identical success matrices"
    try:
        start = time.perf_counter()
        rng = np.random.default_rng(9)
        worst = 0.0
        for _ in range(50):
            n = int(rng.integers(1, 5))
            w = int(rng.integers(1, 3))
            k = int(rng.integers(1, 4))
            alg = random_algorithm(Picture.BITFLIP, n, w, k, rng)
            masks = rng.choice(1 << n, size=int(rng.integers(2, min(1 << n, 4) + 1)), replace=False)
            fam = explicit_family(n, sorted(int(m) for m in masks))
            m = random_block_measurement(alg.initial.dim, fam.size, rng)
            s_bit = success_matrix(alg, m, fam)
            alg_ph = convert_algorithm(alg, Picture.PHASE)
            m_ph = convert_measurement(m, Picture.PHASE, Picture.BITFLIP, n, w)
            s_ph = success_matrix(alg_ph, m_ph, fam)
            dev = float(np.abs(s_bit - s_ph).max())
            worst = max(worst, dev)
            assert dev <= 1e-12, f"pictures disagree by {dev:.3e}"
        elapsed = time.perf_counter() - start
    except BaseException as exc:
        _record(9, title, False, str(exc)[:160])
        raise
    _record(9, title, True, f"max deviation {worst:.2e} over 50 draws, {elapsed:.2f}s")
