"""
Tests for channel generation and NOMA metrics.

Tests cover:
- Unit conversions
- Seeded channel generation and user ordering
- SINR, rate and efficiency formulas on hand-computed instances
- SIC ordering checks
"""

import numpy as np
import pytest

from noma_tradeoff.exceptions import ContractViolationError, ValidationError
from noma_tradeoff.models import ChannelSet, SystemParams
from noma_tradeoff.utils import system_model as sm


@pytest.fixture
def scalar_pair() -> tuple[ChannelSet, SystemParams]:
    """Two single-antenna users with channel gains 4 and 1."""
    cs = ChannelSet(channels=np.array([[2.0], [1.0]]), distances=[1.0, 2.0], ordered=True)
    params = SystemParams(
        num_antennas=1,
        num_users=2,
        p_ava=10.0,
        noise_vars=[1.0, 1.0],
        rate_thresholds=[0.0, 0.0],
        p_loss=2.0,
        eps0=0.5,
        bandwidth=10.0,
    )
    return cs, params


class TestConversions:
    """Tests for unit conversions."""

    def test_dbm_to_watts(self):
        """Test dBm conversion."""
        assert sm.dbm_to_watts(30.0) == pytest.approx(1.0)
        assert sm.dbm_to_watts(40.0) == pytest.approx(10.0)

    def test_tx_snr_to_power(self):
        """Test transmit SNR conversion."""
        assert sm.tx_snr_to_power(10.0, 2.0) == pytest.approx(20.0)
        assert sm.tx_snr_to_power(0.0, 0.5) == pytest.approx(0.5)


class TestChannelGeneration:
    """Tests for generate_channels and order_users."""

    def test_same_seed_same_channels(self):
        """Test that channel draws are reproducible."""
        first = sm.generate_channels(7, [1.0, 2.0, 3.0], 1.0, 3)
        second = sm.generate_channels(7, [1.0, 2.0, 3.0], 1.0, 3)
        np.testing.assert_array_equal(first.channels, second.channels)
        other = sm.generate_channels(8, [1.0, 2.0, 3.0], 1.0, 3)
        assert not np.allclose(first.channels, other.channels)

    def test_generated_set_is_ordered(self):
        """Test that generated sets are sorted strongest first."""
        cs = sm.generate_channels(0, [1.0, 2.0, 3.0, 4.0, 50.0], 1.0, 3)
        assert cs.ordered
        assert cs.num_users == 5
        assert cs.num_antennas == 3
        assert np.all(np.diff(cs.gains) <= 0.0)
        assert sorted(cs.permutation) == [0, 1, 2, 3, 4]

    def test_order_users_records_permutation(self):
        """Test that the permutation maps stored users to original indices."""
        cs = ChannelSet(channels=np.array([[0.5], [2.0], [1.0]]), distances=[1.0, 2.0, 3.0])
        ordered = sm.order_users(cs)
        assert ordered.permutation == [1, 2, 0]
        assert ordered.distances == [2.0, 3.0, 1.0]
        np.testing.assert_allclose(ordered.channels[:, 0], [2.0, 1.0, 0.5])

    def test_order_users_ties_keep_index_order(self):
        """Test stable ordering of equal norms."""
        cs = ChannelSet(channels=np.array([[1.0], [1j], [-1.0]]), distances=[1.0, 1.0, 1.0])
        assert sm.order_users(cs).permutation == [0, 1, 2]

    def test_invalid_inputs(self):
        """Test input validation."""
        with pytest.raises(ValidationError):
            sm.generate_channels(0, [], 1.0, 2)
        with pytest.raises(ValidationError):
            sm.generate_channels(0, [1.0, 0.0], 1.0, 2)
        with pytest.raises(ValidationError):
            sm.generate_channels(0, [1.0], -1.0, 2)
        with pytest.raises(ValidationError):
            sm.generate_channels(0, [1.0], 1.0, 0)


class TestMetrics:
    """Tests for SINR, rates, SE and GEE."""

    def test_decoding_sinr(self, scalar_pair):
        """Test SINR values on the scalar pair."""
        cs, params = scalar_pair
        w = np.array([[1.0], [2.0]])
        assert sm.sinr_decode(0, 0, w, cs, params) == pytest.approx(4.0)
        assert sm.sinr_decode(0, 1, w, cs, params) == pytest.approx(16.0 / 5.0)
        assert sm.sinr_decode(1, 1, w, cs, params) == pytest.approx(2.0)

    def test_decoding_order_contract(self, scalar_pair):
        """Test that weaker receivers cannot decode stronger users."""
        cs, params = scalar_pair
        with pytest.raises(ContractViolationError):
            sm.sinr_decode(1, 0, np.ones((2, 1)), cs, params)

    def test_rates_take_the_worst_receiver(self, scalar_pair):
        """Test that a user's rate is the minimum over its decoders."""
        cs, params = scalar_pair
        w = np.array([[1.0], [2.0]])
        rates = sm.per_user_rates(w, cs, params)
        np.testing.assert_allclose(rates, [np.log2(5.0), np.log2(3.0)])
        assert sm.achievable_rate(1, w, cs, params) == pytest.approx(rates[1])

    def test_single_user_capacity(self):
        """Test matched filtering reaches log2(1 + P ||h||^2 / sigma^2)."""
        h = np.array([[1.0 + 1.0j, 0.5j]])
        cs = ChannelSet(channels=h, distances=[1.0])
        params = SystemParams(
            num_antennas=2, num_users=1, p_ava=3.0, noise_vars=[0.5], rate_thresholds=[0.0]
        )
        w = np.sqrt(3.0) * h / np.linalg.norm(h)
        expected = np.log2(1.0 + 3.0 * cs.gains[0] / 0.5)
        assert sm.se_of(w, cs, params) == pytest.approx(expected)

    def test_evaluate(self, scalar_pair):
        """Test that evaluate recomputes every metric."""
        cs, params = scalar_pair
        w = np.array([[1.0], [2.0]])
        solution = sm.evaluate(w, cs, params)
        se = np.log2(5.0) + np.log2(3.0)
        assert solution.tx_power == pytest.approx(5.0)
        assert solution.se == pytest.approx(se)
        assert solution.sum_rate == pytest.approx(10.0 * se)
        assert solution.gee == pytest.approx(10.0 * se / (5.0 / 0.5 + 2.0))
        assert sm.gee_of(w, cs, params) == pytest.approx(solution.gee)

    def test_zero_beamformers(self, scalar_pair):
        """Test that silence gives zero rates and a finite GEE."""
        cs, params = scalar_pair
        solution = sm.evaluate(np.zeros((2, 1)), cs, params)
        assert solution.se == 0.0
        assert solution.gee == 0.0


class TestSicOrdering:
    """Tests for check_sic_ordering."""

    def test_satisfied_chain(self, scalar_pair):
        """Test a chain with increasing received power."""
        cs, _ = scalar_pair
        report = sm.check_sic_ordering(np.array([[1.0], [2.0]]), cs)
        assert report
        assert report.violations == []

    def test_violations_listed(self, scalar_pair):
        """Test that every violated pair is reported."""
        cs, _ = scalar_pair
        report = sm.check_sic_ordering(np.array([[2.0], [1.0]]), cs)
        assert not report
        assert [(v.receiver, v.user) for v in report.violations] == [(0, 0), (1, 0)]
        assert report.violations[0].margin == pytest.approx(-12.0)

    def test_tolerance(self, scalar_pair):
        """Test that equal powers pass and tiny violations respect the tolerance."""
        cs, _ = scalar_pair
        assert sm.check_sic_ordering(np.array([[1.0], [1.0]]), cs)
        w = np.array([[1.0], [1.0 - 1e-6]])
        assert not sm.check_sic_ordering(w, cs)
        assert sm.check_sic_ordering(w, cs, tolerance=1e-3)
