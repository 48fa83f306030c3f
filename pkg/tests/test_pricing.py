import math

import numpy as np
import pytest

from src.contagion_engine import DefaultTimeline
from src.errors import ConfigurationError, ContractMisuseError, DegenerateContractError
from src.pricing import (
    ContractTerms,
    MCEstimate,
    TrancheSpec,
    cdo_legs_on_path,
    cdo_legs_with_counterparty,
    cds_legs,
    cds_legs_on_path,
    cds_legs_with_counterparty,
    portfolio_loss,
    portfolio_losses,
    swap_rate,
    tranche_loss,
)


def timeline_of(*tau, counterparty_tau=None):
    return DefaultTimeline(tau=np.array(tau, dtype=float), counterparty_tau=counterparty_tau)


class TestTerms:
    def test_equally_spaced(self, base_terms):
        np.testing.assert_allclose(base_terms.dates, [0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
        np.testing.assert_allclose(base_terms.accruals, [0.5] * 6)

    def test_annuity(self, base_terms):
        expected = sum(0.5 * math.exp(-0.05 * 0.5 * i) for i in range(1, 7))
        assert base_terms.annuity() == pytest.approx(expected)

    @pytest.mark.parametrize("kwargs, field", [
        (dict(maturity=3.0, payment_dates=(1.0, 2.0), recovery=0.5, rate=0.05), 'terms.payments'),
        (dict(maturity=3.0, payment_dates=(2.0, 1.0, 3.0), recovery=0.5, rate=0.05), 'terms.payments'),
        (dict(maturity=3.0, payment_dates=(3.0,), recovery=1.5, rate=0.05), 'terms.recovery'),
        (dict(maturity=0.0, payment_dates=(0.0,), recovery=0.5, rate=0.05), 'terms.maturity'),
    ])
    def test_invalid(self, kwargs, field):
        with pytest.raises(ConfigurationError) as excinfo:
            ContractTerms(**kwargs)
        assert excinfo.value.field == field


class TestTranches:
    def test_bounds_are_one_based(self, base_tranches):
        assert base_tranches.count == 3
        assert base_tranches.bounds(1) == (0.0, 0.15)
        assert base_tranches.bounds(3) == (0.3, 1.0)
        assert base_tranches.label(2) == '0.15-0.3'

    def test_bad_index(self, base_tranches):
        with pytest.raises(ConfigurationError):
            base_tranches.bounds(0)

    @pytest.mark.parametrize("attachments", [(0.1, 1.0), (0.0, 0.5), (0.0, 0.3, 0.2, 1.0)])
    def test_invalid_attachments(self, attachments):
        with pytest.raises(ConfigurationError):
            TrancheSpec(attachments)


class TestCdsLegs:
    def test_survival_pays_full_annuity(self, base_terms):
        legs = cds_legs_on_path(1, timeline_of(5.0, 7.0), base_terms)
        assert legs.contingent_pv == 0.0
        assert legs.fee_pv_per_unit_rate == pytest.approx(base_terms.annuity())

    def test_default_in_first_period(self, base_terms):
        legs = cds_legs_on_path(1, timeline_of(0.25, 7.0), base_terms)
        assert legs.contingent_pv == pytest.approx(0.5 * math.exp(-0.0125))
        assert legs.fee_pv_per_unit_rate == pytest.approx(0.25 * math.exp(-0.0125))

    def test_kth_default_selected(self, base_terms):
        legs = cds_legs_on_path(2, timeline_of(0.25, 1.25, 7.0), base_terms)
        expected_fee = 0.5 * math.exp(-0.025) + 0.5 * math.exp(-0.05) + 0.25 * math.exp(-0.05 * 1.25)
        assert legs.contingent_pv == pytest.approx(0.5 * math.exp(-0.05 * 1.25))
        assert legs.fee_pv_per_unit_rate == pytest.approx(expected_fee)

    def test_default_on_payment_date(self, base_terms):
        on_date = cds_legs_on_path(1, timeline_of(1.0), base_terms)
        just_before = cds_legs_on_path(1, timeline_of(1.0 - 1e-12), base_terms)
        expected = 0.5 * math.exp(-0.025) + 0.5 * math.exp(-0.05)
        assert on_date.fee_pv_per_unit_rate == pytest.approx(expected)
        assert on_date.fee_pv_per_unit_rate == pytest.approx(just_before.fee_pv_per_unit_rate, abs=1e-10)

    def test_default_at_maturity_is_paid(self, base_terms):
        legs = cds_legs_on_path(1, timeline_of(3.0), base_terms)
        assert legs.contingent_pv == pytest.approx(0.5 * math.exp(-0.15))
        assert legs.fee_pv_per_unit_rate == pytest.approx(base_terms.annuity())

    def test_order_out_of_range(self, base_terms):
        with pytest.raises(ConfigurationError):
            cds_legs_on_path(3, timeline_of(1.0, 2.0), base_terms)


class TestExponentialFirstDefault:
    def test_independent_names(self, exponential_default_rate):
        # tau_1 ~ Exp(n a) under the product copula
        assert exponential_default_rate(40 * 0.01) == pytest.approx(0.2024, abs=1e-4)

    def test_common_shock_names(self, exponential_default_rate):
        # min of n common-shock thresholds is Exp(c0 + n c1) / (c0 + c1)
        c0, c1, n, a = 0.01, 0.1, 40, 0.01
        h = a * (c0 + n * c1) / (c0 + c1)
        assert h == pytest.approx(0.3645, abs=1e-4)
        assert exponential_default_rate(h) == pytest.approx(0.1845, abs=1e-4)


class TestCdsCounterparty:
    def test_needs_counterparty_time(self, base_terms):
        with pytest.raises(ContractMisuseError):
            cds_legs_with_counterparty(1, timeline_of(1.0), base_terms)

    def test_counterparty_survives(self, base_terms):
        timeline = timeline_of(1.3, 2.2, counterparty_tau=10.0)
        assert cds_legs_with_counterparty(1, timeline, base_terms) == cds_legs_on_path(1, timeline, base_terms)

    def test_counterparty_defaults_first(self, base_terms):
        legs = cds_legs_with_counterparty(1, timeline_of(1.3, counterparty_tau=0.2), base_terms)
        assert legs.contingent_pv == 0.0
        assert legs.fee_pv_per_unit_rate == 0.0

    def test_counterparty_defaults_after_kth_default(self, base_terms):
        timeline = timeline_of(0.3, 2.0, counterparty_tau=1.7)
        gated = cds_legs_with_counterparty(1, timeline, base_terms)
        plain = cds_legs_on_path(1, timeline, base_terms)
        assert gated.contingent_pv == plain.contingent_pv
        assert gated.fee_pv_per_unit_rate == pytest.approx(0.3 * math.exp(-0.05 * 0.3))

    def test_counterparty_between_payments(self, base_terms):
        # tau_k beyond maturity, counterparty gone in the third period
        gated = cds_legs_with_counterparty(1, timeline_of(5.0, counterparty_tau=1.2), base_terms)
        assert gated.contingent_pv == 0.0
        assert gated.fee_pv_per_unit_rate == pytest.approx(0.5 * math.exp(-0.025) + 0.5 * math.exp(-0.05))

    def test_gating_never_increases_legs(self, base_terms):
        rng = np.random.default_rng(4)
        tau_k = rng.exponential(2.0, 100_000)
        counterparty_tau = rng.exponential(4.0, 100_000)
        contingent, fee = cds_legs(tau_k, base_terms)
        gated_contingent, gated_fee = cds_legs(tau_k, base_terms, counterparty_tau)
        assert np.all(gated_contingent <= contingent)
        assert np.all(gated_fee <= fee)


class TestLosses:
    def test_counting(self):
        tau = np.concatenate([np.linspace(0.1, 1.0, 6), np.full(34, 10.0)])
        timeline = DefaultTimeline(tau=tau)
        assert portfolio_loss(timeline, 0.05) == 0.0
        assert portfolio_loss(timeline, 1.0) == pytest.approx(0.15)
        assert portfolio_loss(timeline, 10.0) == 1.0

    def test_batch_shape(self, base_terms):
        tau = np.sort(np.random.default_rng(1).exponential(5.0, (3, 40)), axis=1)
        assert portfolio_losses(tau, base_terms.dates).shape == (3, 6)

    @pytest.mark.parametrize("L, expected", [
        (0.15, (0.15, 0.0, 0.0)),
        (0.2, (0.15, 0.05, 0.0)),
        (1.0, (0.15, 0.15, 0.7)),
    ])
    def test_tranche_clamp(self, base_tranches, L, expected):
        losses = [float(tranche_loss(L, *base_tranches.bounds(l))) for l in (1, 2, 3)]
        assert losses == pytest.approx(list(expected))

    def test_tranche_losses_add_up(self, base_tranches):
        L = np.random.default_rng(2).uniform(0, 1, 1_000)
        total = sum(tranche_loss(L, *base_tranches.bounds(l)) for l in (1, 2, 3))
        np.testing.assert_allclose(total, L, atol=1e-15)


class TestCdoLegs:
    def test_no_defaults(self, base_terms, base_tranches):
        for l in (1, 2, 3):
            lo, hi = base_tranches.bounds(l)
            legs = cdo_legs_on_path(l, timeline_of(*[9.0] * 40), base_terms, base_tranches)
            assert legs.contingent_pv == 0.0
            assert legs.fee_pv_per_unit_rate == pytest.approx((hi - lo) * base_terms.annuity())

    def test_everything_defaults_at_once(self, base_terms, base_tranches):
        for l in (1, 2, 3):
            lo, hi = base_tranches.bounds(l)
            legs = cdo_legs_on_path(l, timeline_of(*[0.1] * 40), base_terms, base_tranches)
            assert legs.contingent_pv == pytest.approx(math.exp(-0.025) * (hi - lo))
            assert legs.fee_pv_per_unit_rate == pytest.approx(0.0, abs=1e-15)

    def test_losses_settle_on_payment_dates(self, base_terms, base_tranches):
        # eight defaults early in the second period: equity loses 0.15 at t_2
        tau = [0.7] * 8 + [9.0] * 32
        legs = cdo_legs_on_path(1, timeline_of(*tau), base_terms, base_tranches)
        assert legs.contingent_pv == pytest.approx(0.15 * math.exp(-0.05))
        assert legs.fee_pv_per_unit_rate == pytest.approx(0.15 * 0.5 * math.exp(-0.025))

    def test_loss_given_default_scaling(self, base_terms, base_tranches):
        tau = [0.1] * 8 + [9.0] * 32
        plain = cdo_legs_on_path(1, timeline_of(*tau), base_terms, base_tranches)
        scaled = cdo_legs_on_path(1, timeline_of(*tau), base_terms, base_tranches,
                                  loss_given_default_scaling=True)
        assert plain.contingent_pv == pytest.approx(0.15 * math.exp(-0.025))
        assert scaled.contingent_pv == pytest.approx(0.1 * math.exp(-0.025))

    def test_counterparty_needed(self, base_terms, base_tranches):
        with pytest.raises(ContractMisuseError):
            cdo_legs_with_counterparty(1, timeline_of(*[1.0] * 40), base_terms, base_tranches)

    def test_counterparty_survives(self, base_terms, base_tranches):
        timeline = timeline_of(*np.linspace(0.2, 6.0, 40), counterparty_tau=4.0)
        for l in (1, 2, 3):
            assert (cdo_legs_with_counterparty(l, timeline, base_terms, base_tranches)
                    == cdo_legs_on_path(l, timeline, base_terms, base_tranches))

    def test_counterparty_gone_before_first_date(self, base_terms, base_tranches):
        timeline = timeline_of(*np.linspace(0.2, 6.0, 40), counterparty_tau=0.4)
        legs = cdo_legs_with_counterparty(1, timeline, base_terms, base_tranches)
        assert legs.contingent_pv == 0.0
        assert legs.fee_pv_per_unit_rate == 0.0

    def test_counterparty_truncates_after_second_period(self, base_terms, base_tranches):
        tau = [0.2, 0.7, 1.2, 1.7] + [9.0] * 36
        timeline = timeline_of(*tau, counterparty_tau=1.3)
        gated = cdo_legs_with_counterparty(1, timeline, base_terms, base_tranches)

        discount = np.exp(-0.05 * base_terms.dates[:2])
        settled = np.array([1, 1]) / 40
        outstanding = 0.15 - np.array([1, 2]) / 40
        assert gated.contingent_pv == pytest.approx(float(settled @ discount))
        assert gated.fee_pv_per_unit_rate == pytest.approx(float(outstanding @ (0.5 * discount)))


class TestSwapRate:
    def test_zero_contingent(self):
        rate = swap_rate(MCEstimate(0.0, 0.0, 10, 1), MCEstimate(2.0, 0.1, 10, 1))
        assert rate.value == 0.0

    def test_equal_legs(self):
        assert swap_rate(MCEstimate(1.5, 0.0, 10, 1), MCEstimate(1.5, 0.0, 10, 1)).value == 1.0

    def test_degenerate_fee(self):
        with pytest.raises(DegenerateContractError):
            swap_rate(MCEstimate(0.1, 0.0, 10, 1), MCEstimate(0.0, 0.0, 10, 1))

    def test_delta_method(self):
        contingent = MCEstimate(0.2, 0.01, 100, 5)
        fee = MCEstimate(2.0, 0.02, 100, 5)
        covariance = 1e-4
        rate = swap_rate(contingent, fee, covariance)
        expected = math.sqrt(0.01 ** 2 - 2 * 0.1 * covariance + 0.1 ** 2 * 0.02 ** 2) / 2.0
        assert rate.value == pytest.approx(0.1)
        assert rate.std_error == pytest.approx(expected)
        assert (rate.paths, rate.seed) == (100, 5)
