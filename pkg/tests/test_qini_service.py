import numpy as np
import pytest

from costcast.models.dataset import TestDataset, TrainDataset
from costcast.models.qini import ArmNuisances, QiniCurve
from costcast.schemas.evaluation_schema import EvalMode
from costcast.schemas.forest_schema import ForestConfig
from costcast.services.evaluation.exceptions import (
    DegenerateCurve,
    EmptyInput,
    LengthMismatch,
    MissingPropensity,
    NuisanceRequired,
    TrainingRowsRejected,
)
from costcast.services.evaluation.qini_service import curve_average, oracle_curve, qini_curve
from costcast.services.evaluation.transforms import eval_weights, fit_arm_nuisances


def _four_rows(**kwargs) -> TestDataset:
    kwargs.setdefault("default_propensity", 0.5)
    return TestDataset(
        x=[[0.0], [1.0], [2.0], [3.0]],
        w=[1, 0, 1, 0],
        y=[5.0, 0.0, 3.0, 0.0],
        c=[2.0, 0.0, 1.0, 0.0],
        **kwargs,
    )


def _line(slope: float) -> QiniCurve:
    return QiniCurve(
        thresholds=np.array([1.0]),
        spend=np.array([0.0, 1.0]),
        reward=np.array([0.0, slope]),
        b0=1.0,
        r0=slope,
    )


class TestQiniCurve:
    def test_hand_computed_endpoint(self):
        curve = qini_curve(_four_rows(), [1.0, 1.0, 1.0, 1.0])
        assert curve.b0 == pytest.approx(1.5)
        assert curve.r0 == pytest.approx(4.0)
        assert curve.spend[0] == 0.0 and curve.reward[0] == 0.0

    def test_points_follow_score_order(self):
        curve = qini_curve(_four_rows(), [4.0, 3.0, 2.0, 1.0])
        assert curve.spend.tolist() == pytest.approx([0.0, 1.0, 1.0, 1.5, 1.5])
        assert curve.reward.tolist() == pytest.approx([0.0, 2.5, 2.5, 4.0, 4.0])
        assert curve.value_at(1.25) == pytest.approx(3.25)

    def test_all_control_zero_outcomes_is_flat(self):
        d = TestDataset(
            x=[[0.0], [1.0]], w=[0, 0], y=[0.0, 0.0], c=[0.0, 0.0],
            default_propensity=0.5, require_overlap=False,
        )
        curve = qini_curve(d, [0.2, 0.1])
        assert np.all(curve.spend == 0.0) and np.all(curve.reward == 0.0)
        with pytest.raises(DegenerateCurve):
            curve.normalized()

    def test_normalized_endpoint(self):
        curve = qini_curve(_four_rows(), [4.0, 3.0, 2.0, 1.0]).normalized()
        assert curve.spend[-1] == pytest.approx(1.0) and curve.reward[-1] == pytest.approx(1.0)

    def test_rejects_training_split(self):
        d = _four_rows()
        train = d.as_role(TrainDataset)
        with pytest.raises(TrainingRowsRejected):
            qini_curve(train, [1.0] * 4)

    def test_missing_propensity(self):
        with pytest.raises(MissingPropensity):
            qini_curve(_four_rows(default_propensity=None, require_propensity=False), [1.0] * 4)

    def test_score_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            qini_curve(_four_rows(), [1.0, 2.0])

    def test_aipw_needs_nuisances(self):
        with pytest.raises(NuisanceRequired):
            qini_curve(_four_rows(), [1.0] * 4, mode=EvalMode.AIPW)

    def test_aipw_with_exact_arm_means(self):
        d = _four_rows()
        nuisances = ArmNuisances(
            mu1_y=np.full(4, 4.0), mu0_y=np.zeros(4), mu1_c=np.full(4, 1.5), mu0_c=np.zeros(4)
        )
        weights = eval_weights(d, EvalMode.AIPW, nuisances)
        assert weights.reward.mean() == pytest.approx(4.0)
        assert weights.cost.mean() == pytest.approx(1.5)

    def test_arm_nuisances_from_training_split(self, train_data, test_data):
        nuisances = fit_arm_nuisances(train_data, test_data, ForestConfig(num_trees=20, threads=1))
        assert np.all(nuisances.mu0_c == 0.0)
        curve = qini_curve(test_data, np.arange(test_data.n, dtype=float), EvalMode.AIPW, nuisances)
        assert curve.n == test_data.n


class TestIpwUnbiasedness:
    def test_monte_carlo_mean_matches_population_spend(self):
        rng = np.random.default_rng(0)
        n, pi = 200, 0.3
        x = rng.uniform(size=(n, 1))
        c1 = 1.0 + x[:, 0]
        scores = x[:, 0]
        threshold = 0.5
        truth = float(np.mean(c1 * (scores >= threshold)))
        draws = []
        for _ in range(2000):
            w = rng.binomial(1, pi, size=n)
            d = TestDataset(x=x, w=w, y=np.zeros(n), c=w * c1, default_propensity=pi)
            weights = eval_weights(d)
            draws.append(float(np.mean(weights.cost * (scores >= threshold))))
        draws = np.asarray(draws)
        mc_se = draws.std(ddof=1) / np.sqrt(draws.shape[0])
        assert abs(draws.mean() - truth) < 3.0 * mc_se + 0.01


class TestOracleCurve:
    def test_hand_computed_ranking(self):
        curve = oracle_curve([3.0, 2.0, 1.0], [1.0, 1.0, 1.0], [3.0, 2.0, 1.0])
        assert curve.spend.tolist() == pytest.approx([0.0, 1 / 3, 2 / 3, 1.0])
        assert curve.reward.tolist() == pytest.approx([0.0, 1.0, 5 / 3, 2.0])

    def test_homogeneous_population_is_diagonal(self):
        curve = oracle_curve(np.ones(5), np.ones(5), np.arange(5.0))
        assert np.allclose(curve.spend, curve.reward)

    def test_reversed_ranking_is_dominated(self):
        rng = np.random.default_rng(3)
        tau = rng.uniform(0.0, 3.0, size=50)
        gamma = rng.uniform(0.5, 2.0, size=50)
        rho = tau / gamma
        good = oracle_curve(tau, gamma, rho)
        bad = oracle_curve(tau, gamma, -rho)
        for b in np.linspace(0.0, good.b0, 21):
            assert good.value_at(float(b)) >= bad.value_at(float(b)) - 1e-12

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            oracle_curve([1.0], [1.0, 2.0], [1.0])


class TestCurveAverage:
    def test_two_lines(self):
        avg = curve_average([_line(1.0), _line(2.0)], [0.0, 0.5, 1.0])
        assert avg.reward.tolist() == pytest.approx([0.0, 0.75, 1.5])

    def test_single_curve_is_itself(self):
        avg = curve_average([_line(2.0)], [0.0, 0.25, 1.0])
        assert avg.reward.tolist() == pytest.approx([0.0, 0.5, 2.0])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            curve_average([], [0.0, 1.0])
