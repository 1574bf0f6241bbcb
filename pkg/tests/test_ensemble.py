import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmdl import (
    EXACT,
    SURROGATE,
    BudgetError,
    Budgets,
    ExactDistribution,
    SeedSpec,
    draw_sign,
    exact_distribution,
    goldbach_coefficients,
    sample_coefficient,
    sample_path,
    symmetry_check,
)
from rmdl.ensemble import (
    _compositions,
    composition_rank,
    draw_signs,
    mix64,
    normalize_mode,
    nonzero_compositions,
    sample_coefficients,
)

A, B = math.log(2), math.log(3)


def reference_coefficient(table, r, n, seed):
    """Pure-Python oracle: explicit sign per composition, correctly rounded sum."""
    parts, ranks, weights = nonzero_compositions(table.lam, r, n)
    return math.fsum(draw_sign(seed, (r, n, int(k))) * w for k, w in zip(ranks, weights))


def brute_pmf(table, r, n):
    """Counter over all 2**L sign vectors with values rounded to 12 digits."""
    comps = list(_compositions(n, r))
    weights = [math.prod(table.lam[m] for m in c) for c in comps]
    out = Counter()
    for signs in itertools.product((1, -1), repeat=len(comps)):
        out[round(math.fsum(s * w for s, w in zip(signs, weights)), 12) + 0.0] += 1
    return out


def test_mixer_reference_vector():
    # splitmix64 finalizer applied to the golden-ratio increment of 0
    assert mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF


def test_composition_rank_is_lexicographic():
    for r in (1, 2, 3, 4):
        comps = list(_compositions(9, r))
        assert comps == sorted(comps)
        assert [composition_rank(c) for c in comps] == list(range(len(comps)))


def test_draw_sign_deterministic_and_range():
    seed = SeedSpec(7, 3)
    assert draw_sign(seed, (2, 100, 17)) == draw_sign(SeedSpec(7, 3), (2, 100, 17))
    assert draw_sign(seed, (2, 100, 17)) in (-1, 1)
    with pytest.raises(IndexError):
        draw_sign(seed, (2, 100, 99))
    with pytest.raises(IndexError):
        draw_sign(seed, (2, 100, -1))


def test_draw_signs_vector_matches_scalar():
    seed = SeedSpec(11, 2)
    ranks = np.arange(200)
    vec = draw_signs(seed, 3, 500, ranks)
    assert vec.tolist() == [draw_sign(seed, (3, 500, int(k))) for k in ranks]


def test_mean_sign_over_1e6_keys():
    n = 10**6 + 1
    signs = draw_signs(SeedSpec(2024), 2, n, np.arange(10**6, dtype=np.uint64))
    assert abs(signs.mean()) < 0.005


def test_replicates_agree_half_the_time():
    ranks = np.arange(10**5, dtype=np.uint64)
    a = draw_signs(SeedSpec(5, 0), 2, 10**5 + 1, ranks)
    b = draw_signs(SeedSpec(5, 1), 2, 10**5 + 1, ranks)
    assert abs((a == b).mean() - 0.5) < 0.01


def test_r_namespaces_differ():
    ranks = np.arange(10**4, dtype=np.uint64)
    a = draw_signs(SeedSpec(5), 2, 10**5, ranks)
    b = draw_signs(SeedSpec(5), 3, 10**5, ranks)
    assert abs((a == b).mean() - 0.5) < 0.03


def test_seed_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(0, 2**64)
    assert SeedSpec(2**64 - 1).prefix(2) >= 0


def test_mode_aliases():
    assert normalize_mode("exact") == EXACT
    assert normalize_mode("surrogate") == SURROGATE
    with pytest.raises(ValueError):
        normalize_mode("mcmc")


def test_coefficient_examples(t1e4):
    for k in range(20):
        s = SeedSpec(1, k)
        assert abs(sample_coefficient(t1e4, 2, 4, s)) == A * A
        assert abs(sample_coefficient(t1e4, 1, 9, s)) == B
        v = sample_coefficient(t1e4, 2, 5, s)
        assert min(abs(v - x) for x in (-2 * A * B, 0.0, 2 * A * B)) < 1e-15


@pytest.mark.parametrize("r,n", [(2, 50), (2, 997), (3, 60), (3, 211), (4, 40)])
def test_coefficient_matches_python_reference(t1e4, r, n):
    for k in range(5):
        s = SeedSpec(99, k)
        assert sample_coefficient(t1e4, r, n, s) == pytest.approx(reference_coefficient(t1e4, r, n, s), rel=1e-13, abs=1e-12)


def test_path_equals_coefficients_bitwise(t1e4):
    s = SeedSpec(3, 4)
    for r, n_max in ((1, 500), (2, 800), (3, 150)):
        y = sample_path(t1e4, r, n_max, s).y
        ns = [5, 97, n_max // 2, n_max]
        assert [y[n] for n in ns] == [sample_coefficient(t1e4, r, n, s) for n in ns]


def test_path_threads_bitwise(t1e4):
    s = SeedSpec(17)
    for r, n_max in ((2, 3000), (3, 400)):
        one = sample_path(t1e4, r, n_max, s, threads=1).y
        for k in (2, 3, 8):
            assert np.array_equal(one, sample_path(t1e4, r, n_max, s, threads=k).y)


def test_path_r1_is_signed_lambda(t1e4):
    y = sample_path(t1e4, 1, 10**4, SeedSpec(8)).y
    assert np.array_equal(np.abs(y), t1e4.lam)
    assert (y < 0).any() and (y > 0).any()


def test_paths_differ_and_respect_bound(t1e4):
    a = sample_path(t1e4, 2, 1000, SeedSpec(1)).y
    b = sample_path(t1e4, 2, 1000, SeedSpec(2)).y
    assert not np.array_equal(a, b)
    n = np.arange(2, 1001, dtype=float)
    for y in (a, b):
        assert np.all(np.abs(y[2:]) <= n * np.log(n) ** 2)


def test_path_reproducible(t1e4):
    s = SeedSpec(123, 9)
    assert np.array_equal(sample_path(t1e4, 2, 2000, s).y, sample_path(t1e4, 2, 2000, s).y)


def test_surrogate_normalisation(t1e5):
    c = goldbach_coefficients(t1e5, 3, 10**5, "fft")
    path = sample_path(t1e5, 3, 10**5, SeedSpec(42), "surrogate", c)
    assert path.mode == SURROGATE
    live = c.w > 0
    z = path.y[live] / np.sqrt(c.w[live])
    assert not path.y[~live].any()
    assert abs(np.var(z) - 1) < 0.05


def test_surrogate_needs_coefficients(t1e4):
    with pytest.raises(ValueError):
        sample_path(t1e4, 3, 100, SeedSpec(0), "surrogate")


def test_budget_errors(t1e4):
    tight = Budgets(terms_per_coefficient=100, path_terms=100)
    with pytest.raises(BudgetError):
        sample_coefficient(t1e4, 2, 102, SeedSpec(0), budgets=tight)
    with pytest.raises(BudgetError):
        sample_path(t1e4, 2, 90, SeedSpec(0), budgets=tight)
    with pytest.raises(BudgetError):
        exact_distribution(t1e4, 2, 26)


def test_budget_env_override(monkeypatch, t1e4):
    monkeypatch.setenv("RMDL_BUDGET_TERMS", "50")
    with pytest.raises(BudgetError):
        sample_coefficient(t1e4, 2, 60, SeedSpec(0))


@pytest.mark.parametrize("r,n", [(2, 100), (2, 1000), (3, 300)])
def test_moments_over_1e4_seeds(t1e4, r, n):
    seeds = [SeedSpec(777, k) for k in range(10**4)]
    y = sample_coefficients(t1e4, r, n, seeds)
    W = goldbach_coefficients(t1e4, r, n, "fft").w[n]
    assert abs(y.mean()) <= 4 * math.sqrt(W / 10**4)
    assert abs(y.var() / W - 1) < 0.10


def test_mean_bound_r2_n100(t1e4):
    y = sample_coefficients(t1e4, 2, 100, [SeedSpec(31337, k) for k in range(10**4)])
    W = goldbach_coefficients(t1e4, 2, 100, "direct").w[100]
    assert abs(y.mean()) <= 3 * math.sqrt(W / 10**4)


def test_exact_examples(t1e4):
    d = exact_distribution(t1e4, 2, 4)
    assert d.support.tolist() == [-A * A, A * A]
    assert d.exact_masses() == [Fraction(1, 2)] * 2
    d = exact_distribution(t1e4, 2, 5)
    assert np.allclose(d.support, [-2 * A * B, 0, 2 * A * B], atol=1e-15)
    assert d.exact_masses() == [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]
    d = exact_distribution(t1e4, 1, 6)
    assert d.support.tolist() == [0.0] and d.exact_masses() == [Fraction(1)]


@pytest.mark.parametrize("r,n", [(2, 5), (2, 6), (2, 10), (2, 13), (3, 6), (3, 7), (4, 7)])
def test_exact_matches_brute_force(t1e4, r, n):
    d = exact_distribution(t1e4, r, n)
    ours = Counter()
    for v, c in zip(d.support.tolist(), d.counts.tolist()):
        ours[round(v, 12) + 0.0] += c
    assert ours == brute_pmf(t1e4, r, n)
    assert d.total_count() == 2**d.denominator_log2
    assert sum(d.exact_masses()) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 26))
def test_symmetry_and_normalisation(r, n):
    from rmdl import build_mangoldt_table

    table = build_mangoldt_table(30)
    if r > n or math.comb(n - 1, r - 1) > 18:
        return
    d = exact_distribution(table, r, n)
    assert symmetry_check(d)
    assert sum(d.exact_masses()) == 1
    assert np.all(np.diff(d.support) > 0)


def test_symmetry_examples(t1e4):
    assert symmetry_check(exact_distribution(t1e4, 2, 5))
    assert symmetry_check(exact_distribution(t1e4, 2, 6))
    lopsided = ExactDistribution(n=1, r=1, support=np.array([1.0]), counts=np.array([1]), denominator_log2=0)
    assert not symmetry_check(lopsided)


def test_exact_support_covers_samples(t1e4):
    d = exact_distribution(t1e4, 3, 8)
    for k in range(50):
        v = sample_coefficient(t1e4, 3, 8, SeedSpec(4, k))
        assert np.min(np.abs(d.support - v)) < 1e-12
