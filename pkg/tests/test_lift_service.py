import numpy as np
import pytest

from costcast.models.dataset import TestDataset
from costcast.schemas.evaluation_schema import BootstrapConfig
from costcast.services.evaluation.bootstrap_service import (
    bootstrap_curve,
    half_sample_bootstrap,
    lift_delta,
    paired_bootstrap,
)
from costcast.services.evaluation.exceptions import BudgetOutOfRange, LengthMismatch, TooFewReps
from costcast.services.evaluation.lift_service import delta_at_spend, lift_at_budget, slope_bandwidth
from costcast.services.evaluation.qini_service import qini_curve


def _linear_test_set(n: int, seed: int) -> tuple:
    """tau(x) = 1 + x1, C(1) = 1 + x2^2, 점수 = 참 tau"""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n, 2))
    w = rng.binomial(1, 0.5, size=n)
    c = w * (1.0 + x[:, 1] ** 2)
    y = 0.5 * x[:, 0] + w * (1.0 + x[:, 0]) + rng.normal(0.0, 1.0, size=n)
    d = TestDataset(x=x, w=w, y=y, c=c, zero_control_cost=True, default_propensity=0.5)
    return d, 1.0 + x[:, 0]


class TestLiftAtBudget:
    def test_delta_identity_and_summary(self):
        d, scores = _linear_test_set(2000, seed=1)
        curve = qini_curve(d, scores)
        b = 0.5 * curve.b0
        est = lift_at_budget(curve, b, bootstrap_cfg=BootstrapConfig(reps=200, seed=3))
        assert est.delta_hat == pytest.approx(est.q_hat - b * curve.r0 / curve.b0)
        assert est.ci[0] <= est.delta_hat <= est.ci[1]
        assert est.wald_ci[0] < est.delta_hat < est.wald_ci[1]
        assert set(est.summary()) == {"q_hat", "delta_hat", "se", "ci_lo", "ci_hi", "q_ci_lo", "q_ci_hi"}
        assert est.q_ci[0] <= est.q_hat <= est.q_ci[1]
        assert len(est.psi_d) == d.n

    def test_good_ranking_has_positive_lift(self):
        d, scores = _linear_test_set(4000, seed=2)
        curve = qini_curve(d, scores)
        est = lift_at_budget(curve, 0.5 * curve.b0, bootstrap_cfg=BootstrapConfig(enabled=False))
        assert est.delta_hat > 0
        assert est.ci == est.wald_ci
        assert est.q_ci == pytest.approx((est.q_hat - 1.959964 * est.q_se, est.q_hat + 1.959964 * est.q_se))

    def test_prefix_stays_within_budget(self):
        d, scores = _linear_test_set(500, seed=4)
        curve = qini_curve(d, scores)
        b = 0.3 * curve.b0
        k = curve.prefix_index(b)
        assert curve.spend[k] <= b
        assert k == curve.n_points - 1 or curve.spend[k + 1] > b

    def test_endpoint_lift_is_zero(self):
        d, scores = _linear_test_set(300, seed=5)
        curve = qini_curve(d, scores)
        assert delta_at_spend(curve, curve.b0) == 0.0

    @pytest.mark.parametrize("factor", [0.0, 1.0, 1.5])
    def test_budget_out_of_range(self, factor):
        d, scores = _linear_test_set(300, seed=6)
        curve = qini_curve(d, scores)
        with pytest.raises(BudgetOutOfRange):
            lift_at_budget(curve, factor * curve.b0)

    def test_slope_bandwidth(self):
        assert slope_bandwidth(500) == 25
        assert slope_bandwidth(10000) == 100

    def test_random_scores_have_no_lift_on_average(self):
        rng = np.random.default_rng(7)
        deltas = []
        for r in range(60):
            d, _ = _linear_test_set(1000, seed=100 + r)
            curve = qini_curve(d, rng.uniform(size=d.n))
            deltas.append(lift_delta(curve, 0.5 * curve.b0))
        deltas = np.asarray(deltas)
        assert abs(deltas.mean()) < 3.0 * deltas.std(ddof=1) / np.sqrt(deltas.shape[0])


class TestHalfSampleBootstrap:
    def test_degenerate_data_has_zero_se(self):
        n = 40
        d = TestDataset(
            x=np.arange(n, dtype=float).reshape(-1, 1),
            w=np.ones(n, dtype=int),
            y=np.ones(n),
            c=np.ones(n),
            default_propensity=0.5,
            require_overlap=False,
        )
        result = half_sample_bootstrap(d, np.zeros(n), b=1.0, reps=100, seed=0)
        assert result.se == 0.0
        assert result.ci == (result.estimate, result.estimate)
        assert result.estimate == pytest.approx(-1.0)

    def test_same_seed_same_interval(self):
        d, scores = _linear_test_set(600, seed=8)
        a = half_sample_bootstrap(d, scores, b=0.4, reps=150, seed=11)
        b = half_sample_bootstrap(d, scores, b=0.4, reps=150, seed=11, threads=3)
        assert a.ci == b.ci and a.se == b.se

    def test_too_few_reps(self):
        d, scores = _linear_test_set(100, seed=9)
        with pytest.raises(TooFewReps):
            half_sample_bootstrap(d, scores, b=0.4, reps=99)

    def test_cluster_resampling(self):
        d0, scores = _linear_test_set(400, seed=10)
        d = TestDataset(
            x=d0.x, w=d0.w, y=d0.y, c=d0.c, cluster_id=np.arange(400) // 4,
            zero_control_cost=True, default_propensity=0.5,
        )
        curve = qini_curve(d, scores)
        result = bootstrap_curve(curve, 0.4, BootstrapConfig(reps=120, seed=1, cluster=True))
        assert result.se > 0 and len(result.deviations) == 120

    def test_symmetric_interval(self):
        d, scores = _linear_test_set(400, seed=12)
        curve = qini_curve(d, scores)
        result = bootstrap_curve(curve, 0.4, BootstrapConfig(reps=120, seed=1, symmetric=True))
        assert result.ci[1] - result.estimate == pytest.approx(result.estimate - result.ci[0])

    def test_bootstrap_and_influence_se_agree_roughly(self):
        d, scores = _linear_test_set(3000, seed=13)
        curve = qini_curve(d, scores)
        est = lift_at_budget(curve, 0.5 * curve.b0, bootstrap_cfg=BootstrapConfig(reps=300, seed=2))
        assert 0.5 < est.bootstrap_se / est.se < 2.0

    @pytest.mark.slow
    def test_bootstrap_se_within_fifteen_percent_of_influence_se(self):
        d, scores = _linear_test_set(5000, seed=14)
        curve = qini_curve(d, scores)
        est = lift_at_budget(curve, 0.5 * curve.b0, bootstrap_cfg=BootstrapConfig(reps=2000, seed=5))
        assert abs(est.bootstrap_se / est.se - 1.0) < 0.15


class TestPairedBootstrap:
    def test_identical_rules_do_not_differ(self):
        d, scores = _linear_test_set(500, seed=20)
        result = paired_bootstrap(scores, scores, d, 0.4, BootstrapConfig(reps=100, seed=1))
        assert result.difference == 0.0
        assert result.se == 0.0 and result.ci == (0.0, 0.0)
        assert result.p_value == 1.0

    def test_true_ranking_beats_reversed_ranking(self):
        d, scores = _linear_test_set(3000, seed=21)
        b = 0.5 * qini_curve(d, scores).b0
        result = paired_bootstrap(scores, -scores, d, b, BootstrapConfig(reps=200, seed=2))
        assert result.difference == pytest.approx(result.estimate_a - result.estimate_b)
        assert result.ci[0] > 0
        assert result.p_value < 0.05
        assert result.reps == 200

    def test_swapping_rules_flips_the_sign(self):
        d, scores = _linear_test_set(800, seed=22)
        other = np.random.default_rng(0).uniform(size=d.n)
        cfg = BootstrapConfig(reps=120, seed=3)
        ab = paired_bootstrap(scores, other, d, 0.4, cfg)
        ba = paired_bootstrap(other, scores, d, 0.4, cfg)
        assert ab.difference == -ba.difference
        assert ab.se == pytest.approx(ba.se)
        assert ab.ci[0] == pytest.approx(-ba.ci[1]) and ab.ci[1] == pytest.approx(-ba.ci[0])
        assert ab.p_value == ba.p_value

    def test_worker_count_does_not_change_result(self):
        d, scores = _linear_test_set(600, seed=23)
        other = scores + np.random.default_rng(1).normal(0.0, 0.5, size=d.n)
        a = paired_bootstrap(scores, other, d, 0.4, BootstrapConfig(reps=100, seed=4, threads=1))
        b = paired_bootstrap(scores, other, d, 0.4, BootstrapConfig(reps=100, seed=4, threads=3))
        assert a == b

    def test_rejects_mismatched_scores(self):
        d, scores = _linear_test_set(200, seed=24)
        with pytest.raises(LengthMismatch):
            paired_bootstrap(scores, scores[:-1], d, 0.4, BootstrapConfig(reps=100))

    def test_curve_bootstrap_reports_reward_interval(self):
        d, scores = _linear_test_set(800, seed=25)
        curve = qini_curve(d, scores)
        result = bootstrap_curve(curve, 0.4, BootstrapConfig(reps=120, seed=5))
        assert result.q_estimate == pytest.approx(float(curve.reward[curve.prefix_index(0.4)]))
        assert result.q_ci[0] <= result.q_estimate <= result.q_ci[1]
        assert result.q_se > 0
