"""Tests for information densities, exact sum laws and the Gaussian helpers."""

import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import norm

from qres.channels import ChannelFamily, matrix_at
from qres.errors import InvalidParameterError, SupportExplosionError
from qres.info import (
    SumDistribution,
    berry_esseen_gap,
    cdf,
    closed_form_capacity,
    convolve,
    density_table,
    gaussian_cdf,
    gaussian_quantile,
    moments_grid,
    quantile,
    stats,
    sum_distribution,
    tail_probabilities,
    two_point_law,
)
from qres.info.sums import compact_atoms, poisson_binomial_pmf, write_csv


def _table(family: str, parameter: float, p: float, q: float | None = None):
    channel = ChannelFamily(kind=family, parameter=parameter)
    return density_table(p, matrix_at(channel, p if q is None else q))


class TestDensity:
    """Moments of iota_{p,q}."""

    def test_enumeration_matches_closed_forms(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            kind = ("bsc", "bec", "z")[int(rng.integers(3))]
            family = ChannelFamily(kind=kind, parameter=float(rng.random()))
            q = float(rng.uniform(0.01, 0.99))
            moments = stats(density_table(q, matrix_at(family, q)))
            assert moments.C == pytest.approx(closed_form_capacity(family, q), abs=1e-10)

    def test_grid_moments_match_table_moments(self):
        family = ChannelFamily(kind="bec", parameter=0.6)
        qs = np.linspace(0.05, 0.95, 7)
        C, V, T = moments_grid(family, qs)
        for i, q in enumerate(qs):
            moments = stats(density_table(q, matrix_at(family, q)))
            assert C[i] == pytest.approx(moments.C, abs=1e-12)
            assert V[i] == pytest.approx(moments.V, abs=1e-12)
            assert T[i] == pytest.approx(moments.T, abs=1e-12)

    def test_unused_cells_are_minus_infinity(self):
        table = _table("bsc", 0.0, 0.5)
        assert np.isneginf(table.values[0, 1])
        assert table.values[0, 0] == pytest.approx(math.log(2.0))
        assert table.max_used_value == pytest.approx(math.log(2.0))

    def test_exponential_of_minus_density_averages_below_one(self):
        # E[exp(-iota)] = sum over used cells of P(x) P_Y(y)
        rng = np.random.default_rng(77)
        for _ in range(200):
            kind = ("bsc", "bec", "z")[int(rng.integers(3))]
            family = ChannelFamily(kind=kind, parameter=float(rng.random()))
            table = density_table(float(rng.random()), matrix_at(family, float(rng.random())))
            values, probs = table.used_atoms()
            assert float(np.dot(probs, np.exp(-values))) <= 1.0 + 1e-12

    def test_input_probability_is_validated(self):
        channel = matrix_at(ChannelFamily(kind="bsc", parameter=0.1), 0.5)
        with pytest.raises(InvalidParameterError):
            density_table(1.5, channel)


class TestGaussian:
    """Phi and Phi^{-1}."""

    def test_quantile_matches_reference(self):
        for eps in (1e-10, 1e-4, 0.02, 0.1, 0.3, 0.5, 0.9, 0.975, 1 - 1e-6):
            assert gaussian_quantile(eps) == pytest.approx(norm.ppf(eps), abs=1e-9)

    def test_quantile_inverts_cdf(self):
        eps = np.array([0.001, 0.25, 0.75, 0.999])
        assert_allclose(gaussian_cdf(gaussian_quantile(eps)), eps, rtol=1e-9)

    def test_quantile_domain(self):
        for eps in (0.0, 1.0, -0.1, float("nan")):
            with pytest.raises(InvalidParameterError):
                gaussian_quantile(eps)


class TestSumDistribution:
    """Exact convolution laws and their quantiles."""

    def test_noiseless_sum_is_a_single_atom(self):
        dist = sum_distribution(_table("bsc", 0.0, 0.5), 10)
        assert_allclose(dist.support, [10 * math.log(2.0)])
        assert_allclose(dist.probs, [1.0])

    def test_mean_and_variance_scale_with_n(self):
        table = _table("bsc", 0.4, 0.5)
        moments = stats(table)
        dist = sum_distribution(table, 20)
        assert dist.mass == pytest.approx(1.0, abs=1e-12)
        mean = float(np.dot(dist.support, dist.probs))
        var = float(np.dot((dist.support - mean) ** 2, dist.probs))
        assert mean == pytest.approx(20 * moments.C, rel=1e-9)
        assert var == pytest.approx(20 * moments.V, rel=1e-9)

    def test_quantile_is_first_point_above_level(self):
        dist = SumDistribution(n=1, support=np.array([0.0, 1.0, 2.0]), probs=np.array([0.25, 0.5, 0.25]))
        assert quantile(dist, 0.1) == 0.0
        assert quantile(dist, 0.25) == 1.0
        assert quantile(dist, 0.8) == 2.0

    def test_quantile_with_deficit(self):
        dist = SumDistribution(n=1, support=np.array([0.0]), probs=np.array([0.5]), deficit=0.5)
        assert quantile(dist, 0.4) == -math.inf
        assert quantile(dist, 0.6) == 0.0

    def test_quantile_level_domain(self):
        dist = SumDistribution(n=1, support=np.array([0.0]), probs=np.array([1.0]))
        with pytest.raises(InvalidParameterError):
            quantile(dist, 1.0)

    def test_cdf_is_right_continuous(self):
        dist = SumDistribution(n=1, support=np.array([0.0, 1.0, 2.0]), probs=np.array([0.25, 0.5, 0.25]))
        assert cdf(dist, -1.0) == 0.0
        assert cdf(dist, 0.0) == 0.25
        assert cdf(dist, 0.5) == 0.25
        assert cdf(dist, 5.0) == 1.0

    def test_tail_probabilities_split_ties(self):
        dist = SumDistribution(n=1, support=np.array([0.0, 1.0, 2.0]), probs=np.array([0.25, 0.5, 0.25]))
        assert tail_probabilities(dist, 1.0) == (0.25, 0.5)
        assert tail_probabilities(dist, 1.0 + 1e-12) == (0.25, 0.5)

    def test_support_cap(self):
        with pytest.raises(SupportExplosionError):
            sum_distribution(_table("bsc", 0.4, 0.3), 10, support_cap=5)

    def test_bsc_support_stays_on_its_lattice(self):
        # the sum is fixed by the flip count and the count of ones received
        n = 200
        dist = sum_distribution(_table("bsc", 0.4, 0.3), n)
        assert dist.size <= (n + 1) ** 2
        assert dist.mass == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.diff(dist.support) > 0.0)

    def test_bec_erasures_add_nothing(self):
        n = 100
        dist = sum_distribution(_table("bec", 0.5, 0.3), n)
        assert dist.size <= (n + 1) * (n + 2) // 2
        assert dist.support[0] == pytest.approx(0.0, abs=1e-9)
        assert dist.probs[0] == pytest.approx(0.15**n, rel=1e-9)

    def test_merge_tol_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            sum_distribution(_table("bsc", 0.4, 0.3), 5, merge_tol=0.0)

    def test_merge_tolerance_is_absolute(self):
        support, _, _ = compact_atoms(np.array([1000.0, 1000.0 + 5e-10]), np.array([0.5, 0.5]))
        assert support.size == 2
        support, probs, _ = compact_atoms(np.array([0.0, 5e-13]), np.array([0.5, 0.5]))
        assert_allclose(probs, [1.0])
        assert support[0] == pytest.approx(2.5e-13)

    def test_convolution_commutes_and_associates(self):
        table = _table("bsc", 0.4, 0.3)
        a, b, c = (sum_distribution(table, n) for n in (3, 5, 7))
        ab, ba = convolve(a, b), convolve(b, a)
        assert_allclose(ab.support, ba.support, atol=1e-10)
        assert_allclose(ab.probs, ba.probs, atol=1e-12)
        left, right = convolve(ab, c), convolve(a, convolve(b, c))
        assert left.size == right.size
        assert_allclose(left.support, right.support, atol=1e-10)
        assert_allclose(left.probs, right.probs, atol=1e-12)

    def test_convolution_matches_longer_sum(self):
        table = _table("z", 0.3, 0.4)
        joined = convolve(sum_distribution(table, 4), sum_distribution(table, 6))
        direct = sum_distribution(table, 10)
        assert joined.n == direct.n == 10
        assert joined.size == direct.size
        assert_allclose(joined.support, direct.support, atol=1e-10)
        assert_allclose(joined.probs, direct.probs, atol=1e-12)

    def test_csv_export(self, tmp_path):
        path = tmp_path / "law.csv"
        write_csv(sum_distribution(_table("bsc", 0.4, 0.5), 3), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "value,prob"
        assert len(lines) == 1 + 4


class TestTwoPointLaw:
    """Law of sum_t iota(B_t; y_t) for fixed responses."""

    @staticmethod
    def _brute(table, responses, bit_probs):
        values, probs = [], []
        for bits in itertools.product((0, 1), repeat=len(responses)):
            b = np.array(bits)
            values.append(float(np.sum(table.values[b, responses])))
            probs.append(float(np.prod(np.where(b == 1, bit_probs, 1.0 - bit_probs))))
        return compact_atoms(np.array(values), np.array(probs))

    def test_constant_bit_probability_matches_enumeration(self):
        table = _table("bsc", 0.4, 0.3)
        responses = np.array([0, 1, 1, 0, 1, 0, 0, 1, 1])
        law = two_point_law(table, responses, 0.3)
        support, probs, deficit = self._brute(table, responses, np.full(responses.size, 0.3))
        assert_allclose(law.support, support, rtol=1e-12)
        assert_allclose(law.probs, probs, atol=1e-12)
        assert law.deficit == pytest.approx(deficit, abs=1e-12)

    def test_varying_bit_probabilities_match_enumeration(self):
        rng = np.random.default_rng(5)
        table = _table("bec", 0.5, 0.4)
        responses = rng.integers(0, 3, size=10)
        bit_probs = rng.uniform(0.1, 0.9, size=10)
        law = two_point_law(table, responses, bit_probs)
        support, probs, deficit = self._brute(table, responses, bit_probs)
        assert_allclose(law.support, support, rtol=1e-12)
        assert_allclose(law.probs, probs, atol=1e-12)
        assert law.deficit == pytest.approx(deficit, abs=1e-12)

    def test_poisson_binomial_sums_to_one(self):
        pmf = poisson_binomial_pmf(np.array([0.1, 0.5, 0.9, 0.3]))
        assert pmf.sum() == pytest.approx(1.0)
        assert pmf[0] == pytest.approx(0.9 * 0.5 * 0.1 * 0.7)


class TestBerryEsseen:
    """Exact-CDF-vs-Gaussian gap against 6T/(sqrt(n) V^{3/2})."""

    def test_gap_is_certified(self):
        table = _table("bsc", 0.4, 0.5)
        for n in (10, 50):
            assert berry_esseen_gap(table, n).certified

    @pytest.mark.slow
    def test_gap_shrinks_with_n(self):
        from qres.asymptotics import capacity

        family = ChannelFamily(kind="bsc", parameter=0.4)
        q = capacity(family).q_star
        table = density_table(q, matrix_at(family, q))
        gaps = {n: berry_esseen_gap(table, n) for n in (10, 100, 1000)}
        assert all(g.certified for g in gaps.values())
        assert gaps[1000].max_gap < gaps[10].max_gap

    @pytest.mark.slow
    def test_long_sum_stays_within_the_support_cap(self):
        from qres.asymptotics import capacity

        family = ChannelFamily(kind="bsc", parameter=0.4)
        q = capacity(family).q_star
        dist = sum_distribution(density_table(q, matrix_at(family, q)), 1000)
        assert dist.size <= 1001**2
        assert dist.mass == pytest.approx(1.0, abs=1e-9)
