"""Sampling oracle distribution, corruption, and accounting checks.

Statistical assertions use pinned seeds and conservative tolerances so the
suite stays deterministic.
"""

import math

import numpy as np
import pytest
from scipy import stats

from gibbsratio.instance import CountInstance, singleton_instance
from gibbsratio.models import GraphSpec, enumerate_ising
from gibbsratio.oracle import CORRUPTION_MODES, Corruption, SamplingOracle

ALPHA = 1e-3


def exact_probs(inst, beta):
    w = np.exp(inst.log_counts - beta * inst.energies)
    return w / w.sum()


@pytest.fixture
def two_level():
    return CountInstance([(0.0, 0.0), (1.0, 0.0)], 0.0, math.log(3.0))


class TestExactSampling:
    def test_singleton_always_returns_its_energy(self):
        oracle = SamplingOracle(singleton_instance())
        rng = np.random.default_rng(0)
        draws = oracle.sample_many(0.7, 1000, rng)
        assert (draws == 1.0).all()

    def test_symmetric_weights_at_zero(self, two_level):
        oracle = SamplingOracle(two_level)
        rng = np.random.default_rng(1)
        draws = oracle.sample_many(0.0, 100_000, rng)
        freq0 = (draws == 0.0).mean()
        assert abs(freq0 - 0.5) < 0.01

    def test_skewed_weights_within_four_se(self, two_level):
        # P(h=1) at beta = ln 3 is (1/3)/(4/3) = 1/4
        oracle = SamplingOracle(two_level)
        rng = np.random.default_rng(2)
        n = 100_000
        draws = oracle.sample_many(math.log(3.0), n, rng)
        p = 0.25
        se = math.sqrt(p * (1 - p) / n)
        assert abs((draws == 1.0).mean() - p) < 4 * se

    @pytest.mark.statistical
    def test_chi_square_against_gibbs_weights(self):
        inst = enumerate_ising(GraphSpec(4, ((0, 1), (1, 2), (2, 3), (3, 0))))
        oracle = SamplingOracle(inst)
        rng = np.random.default_rng(3)
        n = 100_000
        beta = 0.7
        draws = oracle.sample_many(beta, n, rng)
        observed = np.array([(draws == h).sum() for h in inst.energies])
        expected = n * exact_probs(inst, beta)
        _, p_value = stats.chisquare(observed, expected)
        assert p_value > ALPHA

    def test_sample_at_heterogeneous_betas(self, two_level):
        oracle = SamplingOracle(two_level)
        rng = np.random.default_rng(4)
        betas = np.full(50_000, math.log(3.0))
        betas[::2] = 0.0
        draws = oracle.sample_at(betas, rng)
        freq_even = (draws[::2] == 1.0).mean()  # beta 0 -> 1/2
        freq_odd = (draws[1::2] == 1.0).mean()  # beta ln3 -> 1/4
        assert abs(freq_even - 0.5) < 0.015
        assert abs(freq_odd - 0.25) < 0.015

    def test_scalar_sample_matches_support(self, two_level):
        oracle = SamplingOracle(two_level)
        rng = np.random.default_rng(5)
        for _ in range(10):
            assert oracle.sample(0.3, rng) in (0.0, 1.0)

    def test_one_uniform_consumed_per_exact_draw(self, two_level):
        # same stream position after n draws as after n raw uniforms
        oracle = SamplingOracle(two_level)
        rng_a = np.random.default_rng(6)
        rng_b = np.random.default_rng(6)
        oracle.sample_many(0.4, 137, rng_a)
        rng_b.random(137)
        assert rng_a.random() == rng_b.random()


class TestCallCounting:
    def test_fresh_oracle_is_zero(self, two_level):
        assert SamplingOracle(two_level).call_count == 0

    def test_counts_every_draw(self, two_level):
        oracle = SamplingOracle(two_level)
        rng = np.random.default_rng(7)
        for _ in range(7):
            oracle.sample(0.1, rng)
        assert oracle.call_count == 7
        oracle.sample_many(0.1, 10, rng)
        oracle.sample_at(np.array([0.0, 0.5, 1.0]), rng)
        assert oracle.call_count == 20

    def test_reset(self, two_level):
        oracle = SamplingOracle(two_level)
        oracle.sample(0.0, np.random.default_rng(8))
        oracle.reset_count()
        assert oracle.call_count == 0

    def test_corrupted_draws_counted_once_each(self, two_level):
        oracle = SamplingOracle(two_level).with_corruption(0.5, "uniform")
        rng = np.random.default_rng(9)
        oracle.sample_many(0.0, 25, rng)
        assert oracle.call_count == 25


class TestCorruption:
    def test_zero_budget_identical_stream(self, two_level):
        exact = SamplingOracle(two_level)
        wrapped = SamplingOracle(two_level).with_corruption(0.0, "uniform")
        a = exact.sample_many(0.9, 500, np.random.default_rng(10))
        b = wrapped.sample_many(0.9, 500, np.random.default_rng(10))
        np.testing.assert_array_equal(a, b)
        assert wrapped.corruption is None

    def test_budget_validation(self, two_level):
        with pytest.raises(ValueError):
            SamplingOracle(two_level).with_corruption(1.0)
        with pytest.raises(ValueError):
            SamplingOracle(two_level).with_corruption(-0.1)
        with pytest.raises(ValueError):
            Corruption(0.1, "bogus")

    @pytest.mark.statistical
    def test_uniform_corruption_tv_within_budget(self, two_level):
        # at a strongly skewed beta the exact oracle is nearly a point mass,
        # so a 0.5 uniform mixture moves TV by about 0.25; it must stay <= 0.5
        beta = 10.0
        budget = 0.5
        oracle = SamplingOracle(two_level).with_corruption(budget, "uniform")
        rng = np.random.default_rng(11)
        n = 200_000
        draws = oracle.sample_many(beta, n, rng)
        emp = np.array([(draws == h).mean() for h in two_level.energies])
        tv = 0.5 * np.abs(emp - exact_probs(two_level, beta)).sum()
        assert tv <= budget + 0.01

    @pytest.mark.statistical
    def test_uniform_corruption_matches_mixture_law(self, two_level):
        beta = math.log(3.0)
        budget = 0.3
        oracle = SamplingOracle(two_level).with_corruption(budget, "uniform")
        rng = np.random.default_rng(12)
        n = 200_000
        draws = oracle.sample_many(beta, n, rng)
        mix = (1 - budget) * exact_probs(two_level, beta) + budget * 0.5
        se = np.sqrt(mix * (1 - mix) / n)
        emp = np.array([(draws == h).mean() for h in two_level.energies])
        assert (np.abs(emp - mix) < 4 * se).all()

    @pytest.mark.parametrize("mode,target", [("adversarial_max_h", 1.0), ("adversarial_min_h", 0.0)])
    def test_degenerate_modes_push_mass_to_extreme(self, two_level, mode, target):
        budget = 0.4
        oracle = SamplingOracle(two_level).with_corruption(budget, mode)
        rng = np.random.default_rng(13)
        n = 100_000
        draws = oracle.sample_many(0.0, n, rng)
        expected = (1 - budget) * 0.5 + budget
        assert abs((draws == target).mean() - expected) < 0.01

    def test_modes_registry(self):
        assert set(CORRUPTION_MODES) == {"uniform", "adversarial_max_h", "adversarial_min_h"}
