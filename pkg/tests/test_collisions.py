import itertools
import math
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from circbs.collisions import (
    circular_distance,
    count_good_closed_form,
    count_good_outcomes_exact,
    enumerate_good_outcomes,
    enumerate_multisets,
    estimate_good_fraction,
    estimate_good_probability_mass,
    good_fraction_exact,
    good_mask,
    good_probability_mass_exact,
    is_good_by_distance,
    is_good_by_index_pattern,
    is_good_outcome,
    laurent_remainder_constant,
    multiset_count,
    n_good_formula,
    n_good_laurent,
    occupation,
    sample_good_outcomes,
    sample_outcome_uniform,
)
from circbs.errors import DomainError, GuardError
from circbs.matrices import circulant_from_phases, random_circulant


def brute_force_good(n, m):
    """Independent oracle: index-pattern uniqueness over itertools multisets."""
    return sum(
        len({(b - a) % m for a in range(n) for b in s}) == n * n
        for s in itertools.combinations_with_replacement(range(m), n)
    )


class TestDistance:
    def test_same(self):
        assert circular_distance(5, 5, 9) == 0

    def test_wraparound(self):
        assert circular_distance(0, 11, 12) == 1

    def test_antipodal(self):
        assert circular_distance(0, 6, 12) == 6

    @settings(max_examples=100)
    @given(st.integers(1, 200).flatmap(lambda m: st.tuples(st.just(m), st.integers(0, m - 1), st.integers(0, m - 1))))
    def test_symmetric_and_bounded(self, t):
        m, a, b = t
        d = circular_distance(a, b, m)
        assert d == circular_distance(b, a, m)
        assert 0 <= d <= m // 2

    def test_occupation(self):
        assert occupation([0, 0, 3], 5).tolist() == [2, 0, 0, 1, 0]


class TestPredicate:
    def test_examples(self):
        assert is_good_outcome([0, 3], 2, 6)
        assert not is_good_outcome([0, 1], 2, 6)
        assert not is_good_outcome([2, 2], 2, 6)
        assert not is_good_outcome([1, 1, 7], 3, 20)

    def test_wraparound_gap(self):
        assert not is_good_outcome([0, 9], 2, 10)
        assert is_good_outcome([0, 8], 2, 10)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_characterizations_agree_exhaustively(self, n):
        for m in range(1, 21):
            for s in itertools.combinations_with_replacement(range(m), n):
                assert is_good_by_distance(s, n, m) == is_good_by_index_pattern(s, n, m), (n, m, s)

    def test_vectorized_mask_agrees(self):
        for n in (1, 2, 3, 4):
            for m in (5, 9, 16, 23):
                outs = enumerate_multisets(n, m)
                mask = good_mask(outs, m)
                assert mask.tolist() == [is_good_by_distance(s, n, m) for s in outs]

    def test_rejects_bad_outcome(self):
        with pytest.raises(DomainError):
            is_good_outcome([0, 6], 2, 6)
        with pytest.raises(DomainError):
            is_good_outcome([0], 2, 6)


class TestCounting:
    def test_small_examples(self):
        assert count_good_outcomes_exact(2, 4) == 2
        assert enumerate_good_outcomes(2, 4).tolist() == [[0, 2], [1, 3]]
        assert count_good_outcomes_exact(2, 6) == 9
        assert count_good_closed_form(2, 6) == 9
        for m in (1, 5, 13):
            assert count_good_outcomes_exact(1, m) == m

    def test_exact_equals_closed_form_and_brute_force(self):
        for n in range(1, 5):
            for m in range(1, 41):
                if multiset_count(n, m) > 150_000:
                    continue
                exact = count_good_outcomes_exact(n, m)
                assert exact == count_good_closed_form(n, m), (n, m)
                if multiset_count(n, m) <= 20_000:
                    assert exact == brute_force_good(n, m), (n, m)

    def test_exact_equals_closed_form_large_m(self):
        for n in (3, 4):
            for m in (40, 41):
                assert count_good_outcomes_exact(n, m) == count_good_closed_form(n, m)

    def test_below_n_squared_at_most_n(self):
        for n in range(1, 5):
            for m in range(1, n * n):
                assert count_good_outcomes_exact(n, m) <= n

    def test_m_equals_n_squared_has_n_outcomes(self):
        # equally spaced outcomes survive; resolves the "none at m = n^2" remark
        for n in range(1, 5):
            assert count_good_outcomes_exact(n, n * n) == n

    def test_enumeration_guard(self):
        with pytest.raises(GuardError):
            count_good_outcomes_exact(6, 200)
        with pytest.raises(GuardError):
            enumerate_multisets(2, 50, limit=100)

    def test_multisets_lexicographic_and_complete(self):
        outs = enumerate_multisets(3, 5)
        assert outs.shape == (comb(7, 3), 3)
        assert [tuple(r) for r in outs] == sorted({tuple(r) for r in outs})


class TestFormulas:
    def test_formula_examples(self):
        assert n_good_formula(2, 6) == pytest.approx(3 / 7, rel=1e-14)
        assert n_good_formula(2, 4) == pytest.approx(0.2, rel=1e-14)
        assert n_good_formula(1, 17) == pytest.approx(1.0, rel=1e-15)
        assert n_good_formula(3, 10) == 0.0

    def test_formula_exact_for_two_photons(self):
        for m in range(4, 200):
            assert n_good_formula(2, m) == pytest.approx(good_fraction_exact(2, m), rel=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_formula_within_2_percent_at_50n3(self, n):
        for k in (50, 75, 100, 200):
            m = k * n**3
            assert abs(n_good_formula(n, m) / good_fraction_exact(n, m) - 1) <= 0.02

    def test_laurent_examples(self):
        assert n_good_laurent(3, 3600) == pytest.approx(0.99, abs=1e-15)
        assert n_good_laurent(2, 12) == 0.0
        assert n_good_formula(2, 12) > 0

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_laurent_difference_is_first_order(self, n):
        # expansion of the product gives 1 - (n^3 - n^2)/m, so the gap to the
        # Laurent form is 2 n^2 / m to leading order
        for k in (50, 100, 400):
            m = k * n**3
            diff = n_good_formula(n, m) - n_good_laurent(n, m)
            assert diff * m / (2 * n * n) == pytest.approx(1.0, rel=5 * n**3 / m + 1e-3)

    def test_remainder_constant_reported(self):
        c = laurent_remainder_constant(3, [50 * 27, 100 * 27])
        assert c == pytest.approx(200.0, rel=0.01)


class TestUniformSampling:
    def test_single_photon_uniform(self, rng):
        s = sample_outcome_uniform(1, 7, rng, size=100_000)
        counts = np.bincount(s[:, 0], minlength=7)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_two_photons_three_modes_uniform(self, rng):
        s = sample_outcome_uniform(2, 3, rng, size=100_000)
        keys = [tuple(r) for r in s]
        allowed = list(itertools.combinations_with_replacement(range(3), 2))
        counts = [keys.count(k) for k in allowed]
        assert sum(counts) == 100_000
        assert stats.chisquare(counts).pvalue > 0.01

    def test_three_photons_uniform(self, rng):
        s = sample_outcome_uniform(3, 4, rng, size=60_000)
        idx = {tuple(r): i for i, r in enumerate(enumerate_multisets(3, 4))}
        counts = np.bincount([idx[tuple(r)] for r in s], minlength=len(idx))
        assert stats.chisquare(counts).pvalue > 0.01

    def test_sorted_and_in_range(self, rng):
        s = sample_outcome_uniform(4, 9, rng, size=1000)
        assert np.all(np.diff(s, axis=1) >= 0) and s.min() >= 0 and s.max() < 9

    def test_reproducible(self):
        a = sample_outcome_uniform(3, 10, np.random.default_rng(3), size=50)
        b = sample_outcome_uniform(3, 10, np.random.default_rng(3), size=50)
        assert np.array_equal(a, b)

    def test_scalar_form(self, rng):
        assert sample_outcome_uniform(2, 5, rng).shape == (2,)


class TestGoodSampling:
    @pytest.mark.parametrize("method", ["rejection", "gaps"])
    def test_uniform_over_good(self, method, rng):
        n, m = 2, 9
        goods = {tuple(r): i for i, r in enumerate(enumerate_good_outcomes(n, m))}
        s = sample_good_outcomes(n, m, rng, 45_000, method=method)
        counts = np.bincount([goods[tuple(r)] for r in s], minlength=len(goods))
        assert stats.chisquare(counts).pvalue > 0.01

    def test_gap_sampler_three_photons(self, rng):
        n, m = 3, 12
        goods = {tuple(r): i for i, r in enumerate(enumerate_good_outcomes(n, m))}
        s = sample_good_outcomes(n, m, rng, 30_000, method="gaps")
        counts = np.bincount([goods[tuple(r)] for r in s], minlength=len(goods))
        assert len(goods) == count_good_closed_form(n, m)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_auto_falls_back_to_gaps(self, rng):
        # acceptance at (5, 26) is tiny, so auto must still deliver good outcomes
        assert good_fraction_exact(5, 26) < 1e-3
        s = sample_good_outcomes(5, 26, rng, 100)
        assert good_mask(s, 26).all() and s.shape == (100, 5)

    def test_no_good_outcome(self, rng):
        with pytest.raises(DomainError):
            sample_good_outcomes(3, 8, rng, 10)


class TestFractionEstimate:
    def test_two_photons_six_modes(self, rng):
        est = estimate_good_fraction(2, 6, 100_000, rng)
        assert abs(est.value - 9 / 21) <= 4 * est.error
        assert est.error == pytest.approx(math.sqrt(est.value * (1 - est.value) / 100_000))

    def test_zero_below_packing_bound(self, rng):
        assert estimate_good_fraction(2, 3, 10_000, rng).value == 0.0

    def test_three_photons_large_m(self, rng):
        m = 50 * 27
        est = estimate_good_fraction(3, m, 100_000, rng)
        assert abs(est.value - good_fraction_exact(3, m)) <= 4 * est.error

    def test_unbiased_over_repetitions(self):
        rng = np.random.default_rng(99)
        n, m, k = 2, 10, 2000
        vals = [estimate_good_fraction(n, m, k, rng).value for _ in range(100)]
        exact = good_fraction_exact(n, m)
        sigma = math.sqrt(exact * (1 - exact) / k) / math.sqrt(100)
        assert abs(np.mean(vals) - exact) <= 3 * sigma


class TestMass:
    def test_single_photon_mass_is_one(self, rng):
        u = random_circulant(13, rng)
        assert good_probability_mass_exact(u, 1) == pytest.approx(1.0, abs=1e-12)
        est = estimate_good_probability_mass(u, 1, 5000, rng)
        assert est.value == pytest.approx(1.0, abs=0.05)

    def test_estimate_matches_enumeration(self):
        rng = np.random.default_rng(16)
        u = random_circulant(16, rng)
        exact = good_probability_mass_exact(u, 2)
        est = estimate_good_probability_mass(u, 2, 20_000, rng)
        assert abs(est.value - exact) <= 4 * est.error

    def test_identity_circulant_has_no_good_mass(self):
        # U = I sends photons to 0..n-1, which are adjacent: never good
        u = circulant_from_phases(np.zeros(20))
        assert good_probability_mass_exact(u, 2) == pytest.approx(0.0, abs=1e-15)

    def test_guards(self, rng):
        with pytest.raises(GuardError):
            estimate_good_probability_mass(random_circulant(200, rng), 9, 10, rng)
        with pytest.raises(DomainError):
            estimate_good_probability_mass(random_circulant(6, rng), 3, 10, rng)
        with pytest.raises(GuardError):
            estimate_good_probability_mass(random_circulant(26, rng), 5, 10, rng)
