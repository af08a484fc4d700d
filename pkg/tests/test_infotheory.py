"""Unit tests for the closed-form rates, bounds, and the leakage budget.

Golden constants were computed with an independent 40-digit evaluation of
each displayed formula and are frozen here.
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from skwiretap.infotheory import (
    BoundNotActiveError,
    BoundQuery,
    RateQuery,
    awgn_capacity,
    chebyshev_error_bound,
    g_entropy,
    induced_sigma2,
    leakage_budget,
    phi,
    phi_inverse,
    q_function,
    rate_coherent_homodyne,
    rate_squeezed_homodyne,
    sk_error_bound,
    sk_error_bound_log10,
    tetration_error_bound,
    tetration_order,
)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class TestGEntropy:
    def test_zero(self):
        assert g_entropy(0.0) == 0.0

    def test_one(self):
        assert g_entropy(1.0) == 2.0

    def test_three(self):
        # 4 log2(4) - 3 log2(3)
        assert g_entropy(3.0) == pytest.approx(3.245112497836531, abs=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="x="):
            g_entropy(-1e-9)

    def test_nonnegative_increasing_concave(self):
        grid = np.linspace(0.0, 30.0, 400)
        values = np.array([g_entropy(x) for x in grid])
        assert np.all(values >= 0)
        assert np.all(np.diff(values) > 0)
        assert np.all(np.diff(values, 2) <= 1e-12)


class TestAwgnCapacity:
    def test_known_values(self):
        assert awgn_capacity(3.0, 1.0) == pytest.approx(1.0, abs=1e-15)
        assert awgn_capacity(0.0, 1.0) == 0.0
        assert awgn_capacity(4.0, 1.0) == pytest.approx(1.160964047443681, abs=1e-14)

    def test_domain(self):
        with pytest.raises(ValueError, match="noise="):
            awgn_capacity(1.0, 0.0)
        with pytest.raises(ValueError, match="power="):
            awgn_capacity(-1.0, 1.0)


class TestInducedSigma2:
    @pytest.mark.parametrize(
        "eta,n_th,expected",
        [(1.0, 0.0, 0.25), (0.5, 1.0, 1.0), (0.1, 2.0, 11.5), (0.25, 0.0, 1.0)],
    )
    def test_values(self, eta, n_th, expected):
        assert induced_sigma2(eta, n_th) == pytest.approx(expected, rel=1e-15)

    @pytest.mark.parametrize("eta", [0.0, -0.1, 1.5])
    def test_eta_domain(self, eta):
        with pytest.raises(ValueError, match="eta="):
            induced_sigma2(eta, 0.0)


class TestCoherentRate:
    def test_basic(self):
        assert rate_coherent_homodyne(RateQuery(n_s=3.0, sigma2=1.0)) == pytest.approx(1.0, abs=1e-15)

    def test_vanishes_with_power(self):
        assert rate_coherent_homodyne(RateQuery(n_s=1e-12, sigma2=0.25)) < 1e-11

    def test_lossless_vacuum(self):
        q = RateQuery.from_channel(eta=1.0, n_th=0.0, n_s=10.0)
        assert q.sigma2 == 0.25
        assert rate_coherent_homodyne(q) == pytest.approx(2.678776002309042, abs=1e-13)

    def test_equals_capacity_of_induced_channel(self):
        for eta in (0.1, 0.4, 0.7, 1.0):
            for n_th in (0.0, 0.5, 3.0):
                for n_s in (0.1, 2.0, 20.0):
                    q = RateQuery.from_channel(eta, n_th, n_s)
                    assert rate_coherent_homodyne(q) == awgn_capacity(n_s, induced_sigma2(eta, n_th))


class TestSqueezedRate:
    def test_frozen_values(self):
        assert rate_squeezed_homodyne(0.5, 1.0) == pytest.approx(1.009005931142434, abs=1e-13)
        assert rate_squeezed_homodyne(0.9, 5.0) == pytest.approx(2.963925668952594, abs=1e-13)

    def test_small_power_limit(self):
        # the displayed formula's internal gain tends to 1 as n_s -> 0, which
        # leaves a floor of (1/2) log2(1 + 2 eta); frozen from the oracle
        assert rate_squeezed_homodyne(0.5, 1e-12) == pytest.approx(0.5, abs=1e-11)
        assert rate_squeezed_homodyne(0.8, 1e-12) == pytest.approx(
            0.5 * math.log2(1 + 1.6), abs=1e-11
        )

    def test_eta_domain(self):
        with pytest.raises(ValueError, match="eta="):
            rate_squeezed_homodyne(1.0, 1.0)
        with pytest.raises(ValueError, match="eta="):
            rate_squeezed_homodyne(0.0, 1.0)

    def test_beats_coherent_rate_on_pure_loss(self):
        for eta in (0.1, 0.3, 0.5, 0.7, 0.9, 0.99):
            for n_s in (0.2, 1.0, 5.0, 20.0):
                coherent = rate_coherent_homodyne(RateQuery.from_channel(eta, 0.0, n_s))
                assert rate_squeezed_homodyne(eta, n_s) >= coherent


class TestSkErrorBound:
    def test_deep_regime_underflows(self):
        b = BoundQuery(n_s=3.0, sigma2=1.0, n=10, rate=0.5)
        assert sk_error_bound(b) < 1e-300
        assert sk_error_bound_log10(b) == pytest.approx(-667.174, rel=1e-4)

    def test_rate_at_capacity(self):
        b = BoundQuery(n_s=3.0, sigma2=1.0, n=7, rate=1.0)
        # exponent collapses to n_s / (2 sigma2), independent of n
        assert sk_error_bound(b) == pytest.approx(SQRT_2_OVER_PI * math.exp(-1.5), abs=1e-15)
        assert sk_error_bound(b) == pytest.approx(0.17803210983190294, abs=1e-15)

    def test_near_capacity_value(self):
        b = BoundQuery(n_s=3.0, sigma2=1.0, n=2, rate=0.95)
        assert sk_error_bound(b) == pytest.approx(0.14243936406839356, abs=1e-15)

    def test_nonincreasing_in_n_below_capacity(self):
        values = [sk_error_bound(BoundQuery(n_s=3.0, sigma2=1.0, n=n, rate=0.8)) for n in range(1, 30)]
        assert all(b <= a for a, b in zip(values, values[1:]))

    def test_clamped_above_capacity(self):
        b = BoundQuery(n_s=3.0, sigma2=1.0, n=50, rate=5.0)
        assert 0.0 < sk_error_bound(b) <= SQRT_2_OVER_PI


class TestChebyshevBound:
    def test_reference_point(self):
        b = BoundQuery(n_s=3.0, sigma2=1.0, n=5, rate=0.5)
        assert chebyshev_error_bound(1.0, 1.0, b) == pytest.approx(2.0**-5 / 3.0, rel=1e-14)

    def test_gain_scaling(self):
        b = BoundQuery(n_s=3.0, sigma2=1.0, n=5, rate=0.5)
        assert chebyshev_error_bound(2.0, 1.0, b) == pytest.approx(4.0 * chebyshev_error_bound(1.0, 1.0, b), rel=1e-14)

    def test_deeper_blocklength(self):
        b = BoundQuery(n_s=3.0, sigma2=1.0, n=10, rate=0.5)
        assert chebyshev_error_bound(1.0, 1.0, b) == pytest.approx(2.0**-10 / 3.0, rel=1e-14)

    def test_nonincreasing_below_capacity(self):
        values = [
            chebyshev_error_bound(1.0, 1.0, BoundQuery(n_s=3.0, sigma2=1.0, n=n, rate=0.7))
            for n in range(1, 25)
        ]
        assert all(b <= a for a, b in zip(values, values[1:]))


class TestPhi:
    def test_at_one_equals_coherent_rate(self):
        assert phi(1.0, 3.0, 1.0) == awgn_capacity(3.0, 1.0)

    def test_vanishing_limit(self):
        assert phi(1e-12, 3.0, 1.0) < 1e-10

    def test_halfway_value(self):
        assert phi(0.5, 3.0, 1.0) == pytest.approx(0.701838730514401, abs=1e-14)

    def test_strictly_increasing_on_grid(self):
        grid = np.linspace(1e-6, 1.0, 1000)
        values = np.array([phi(nu, 3.0, 1.0) for nu in grid])
        assert np.all(np.diff(values) > 0)

    def test_domain(self):
        for nu in (0.0, -0.5, 1.0001):
            with pytest.raises(ValueError, match="nu="):
                phi(nu, 3.0, 1.0)


class TestPhiInverse:
    def test_at_capacity(self):
        assert phi_inverse(awgn_capacity(3.0, 1.0), 3.0, 1.0) == 1.0

    def test_round_trip_through_half(self):
        target = phi(0.5, 3.0, 1.0)
        assert phi_inverse(target, 3.0, 1.0) == pytest.approx(0.5, abs=1e-10)

    @given(st.floats(min_value=0.01, max_value=0.99))
    def test_round_trip_residual(self, frac):
        p_h = awgn_capacity(3.0, 1.0)
        rate = frac * p_h
        nu = phi_inverse(rate, 3.0, 1.0)
        assert abs(phi(nu, 3.0, 1.0) - rate) < 1e-10

    def test_domain(self):
        p_h = awgn_capacity(3.0, 1.0)
        for rate in (0.0, -0.1, p_h * 1.0001):
            with pytest.raises(ValueError, match="rate="):
                phi_inverse(rate, 3.0, 1.0)


class TestTetration:
    def test_small_n_not_active(self):
        assert tetration_order(BoundQuery(n_s=3.0, sigma2=1.0, n=1, rate=0.5)) <= 0

    def test_composes_with_phi_inverse(self):
        nu = phi_inverse(0.5, 3.0, 1.0)
        expected = math.floor(100 * (1 - nu) - 5 * (1 - nu) / (1.0 - 0.5))
        assert tetration_order(BoundQuery(n_s=3.0, sigma2=1.0, n=100, rate=0.5)) == expected

    def test_nondecreasing_in_n(self):
        orders = [tetration_order(BoundQuery(n_s=3.0, sigma2=1.0, n=n, rate=0.5)) for n in range(1, 120)]
        assert all(b >= a for a, b in zip(orders, orders[1:]))

    def test_rate_domain(self):
        with pytest.raises(ValueError, match="rate="):
            tetration_order(BoundQuery(n_s=3.0, sigma2=1.0, n=10, rate=1.0))

    def _n_with_order(self, order):
        for n in range(1, 300):
            if tetration_order(BoundQuery(n_s=3.0, sigma2=1.0, n=n, rate=0.5)) == order:
                return n
        raise AssertionError(f"no n found with tower order {order}")

    def test_tower_values(self):
        b1 = tetration_error_bound(BoundQuery(n_s=3.0, sigma2=1.0, n=self._n_with_order(1), rate=0.5))
        assert b1.value == pytest.approx(1.0 / math.e, abs=1e-16)
        assert not b1.underflow
        b2 = tetration_error_bound(BoundQuery(n_s=3.0, sigma2=1.0, n=self._n_with_order(2), rate=0.5))
        assert b2.value == pytest.approx(0.06598803584531254, abs=1e-16)
        b3 = tetration_error_bound(BoundQuery(n_s=3.0, sigma2=1.0, n=self._n_with_order(3), rate=0.5))
        assert b3.value == pytest.approx(2.6217273894613532e-07, rel=1e-12)

    def test_underflow_marker(self):
        b4 = tetration_error_bound(BoundQuery(n_s=3.0, sigma2=1.0, n=self._n_with_order(4), rate=0.5))
        assert b4.underflow and b4.value == 0.0 and b4.order == 4
        assert b4.log10_value == pytest.approx(-1656520.3676, rel=1e-8)

    def test_not_active_error(self):
        with pytest.raises(BoundNotActiveError):
            tetration_error_bound(BoundQuery(n_s=3.0, sigma2=1.0, n=2, rate=0.5))


class TestQFunction:
    def test_half_at_zero(self):
        assert q_function(0.0) == 0.5

    def test_unit_value_against_quadrature(self):
        oracle, err = quad(lambda t: math.exp(-t * t / 2.0) / math.sqrt(2 * math.pi), 1.0, math.inf)
        assert err < 1e-8
        assert q_function(1.0) == pytest.approx(oracle, abs=1e-9)
        assert q_function(1.0) == pytest.approx(0.15865525393145705, abs=1e-15)

    def test_gaussian_tail_bound(self):
        for x in np.linspace(1.0, 10.0, 50):
            assert q_function(x) <= math.exp(-x * x / 2.0) / math.sqrt(2 * math.pi)
        assert q_function(1.0) <= 0.24197072451914337

    @given(st.floats(min_value=-8, max_value=8))
    def test_symmetry(self, x):
        assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-12)


class TestLeakageBudget:
    def test_reference_point(self):
        budget = leakage_budget(0.5, 0.0, 2.0, 0.5, 1.0, 99)
        assert budget.tap_capacity == pytest.approx(0.9036774610288021, abs=1e-14)
        assert budget.eve_entropy_bound == 2.0
        assert budget.per_mode_bits == pytest.approx(0.029037, abs=1e-6)

    def test_per_mode_vanishes(self):
        assert leakage_budget(0.5, 0.0, 2.0, 0.5, 1.0, 10**6).per_mode_bits < 3e-6

    def test_vacuum_port(self):
        assert leakage_budget(1.0, 0.0, 2.0, 0.25, 1.0, 9).eve_entropy_bound == 0.0

    def test_noiseless_tap_rejected(self):
        with pytest.raises(ValueError, match="tap_variance="):
            leakage_budget(0.5, 0.0, 2.0, 0.5, 0.0, 9)

    def test_numerator_independent_of_n(self):
        budgets = [leakage_budget(0.5, 0.0, 2.0, 0.5, 1.0, n) for n in (1, 9, 99, 999)]
        totals = {b.total_bits for b in budgets}
        assert len(totals) == 1
        for n, b in zip((1, 9, 99, 999), budgets):
            assert b.per_mode_bits * (n + 1) == pytest.approx(b.total_bits, rel=1e-12)


class TestQueryValidation:
    def test_rate_query_domains(self):
        with pytest.raises(ValueError, match="n_s="):
            RateQuery(n_s=0.0, sigma2=1.0)
        with pytest.raises(ValueError, match="sigma2="):
            RateQuery(n_s=1.0, sigma2=0.0)
        with pytest.raises(ValueError, match="eta="):
            RateQuery(n_s=1.0, sigma2=1.0, eta=1.2)
        with pytest.raises(ValueError, match="n_th="):
            RateQuery(n_s=1.0, sigma2=1.0, n_th=-0.1)

    def test_bound_query_domains(self):
        with pytest.raises(ValueError, match="n="):
            BoundQuery(n_s=1.0, sigma2=1.0, n=0, rate=0.5)
        with pytest.raises(ValueError, match="rate="):
            BoundQuery(n_s=1.0, sigma2=1.0, n=1, rate=0.0)

    def test_rate_above_capacity_is_allowed(self):
        b = BoundQuery(n_s=3.0, sigma2=1.0, n=5, rate=7.0)
        assert sk_error_bound(b) > 0.0
