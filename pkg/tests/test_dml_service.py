from fractions import Fraction

import numpy as np
import pytest

from costcast.models.dataset import Dataset
from costcast.models.estimation import NuisanceFit, SupportPoint
from costcast.schemas.forest_schema import ForestConfig
from costcast.schemas.simulation_schema import Design, SimConfig
from costcast.services.data.splitting_service import make_folds
from costcast.services.estimators.dml_service import (
    covariance_ratio_identity,
    design_matrix,
    fit_dml,
    moment_drift,
    orthogonality_check,
    population_orthogonality,
)
from costcast.services.estimators.exceptions import FoldTooSmall, SingularMoment
from costcast.services.estimators.nuisance_service import fit_nuisances
from costcast.services.simulation.generators import linear_beta, linear_rho_dgp


def _balanced_cells():
    """셀마다 처치 2 / 대조 2, nuisance = 셀 평균 (1차 항이 정확히 상쇄되는 표본)"""
    xs, ws, ys, cs = [], [], [], []
    for x, shift in ((-1.0, 0.0), (0.5, 1.0), (2.0, -2.0)):
        xs += [x] * 4
        ws += [1, 1, 0, 0]
        ys += [3.0 + shift, 1.0 + 2 * shift, 0.5, -0.5 + shift]
        cs += [2.0 + abs(shift), 1.0, 0.0, 0.0]
    d = Dataset(x=np.array(xs).reshape(-1, 1), w=ws, y=ys, c=cs, default_propensity=0.5)
    cells = np.repeat(np.arange(3), 4)
    h_y = np.array([d.y[cells == k].mean() for k in cells])
    h_c = np.array([d.c[cells == k].mean() for k in cells])
    return d, NuisanceFit.known(h_y, h_c, 0.5)


def _linear_truth(cfg: SimConfig, seed: int):
    tagged = linear_rho_dgp(cfg, seed)
    x = tagged.data.x
    base = np.maximum(x[:, 0] + x[:, 2], 0.0)
    nuisances = NuisanceFit.known(base + cfg.pi * tagged.tau, cfg.pi * tagged.gamma, cfg.pi)
    return tagged, nuisances


class TestFitDml:
    def test_zero_nuisances_single_fold_is_direct_solve(self, dataset_factory):
        d = dataset_factory(60, p=2, seed=4)
        fit = fit_dml(d, k=1, nuisances=NuisanceFit.known(0.0, 0.0, 0.0, n=d.n))
        w, c, y, x = d.w.astype(float), d.c, d.y, d.x
        expected = np.linalg.solve((x * (w * c)[:, None]).T @ x, x.T @ (w * y))
        assert np.allclose(fit.beta, expected, atol=1e-12)
        assert fit.beta_per_fold.shape == (1, 2)

    def test_recovers_linear_priority_with_true_nuisances(self):
        cfg = SimConfig(design=Design.LINEAR_RHO, n_train=4000, p=3)
        tagged, nuisances = _linear_truth(cfg, seed=3)
        fit = fit_dml(tagged.data, k=2, nuisances=nuisances, seed=1)
        beta_star = np.asarray(linear_beta(cfg))
        assert np.all(np.abs(fit.beta - beta_star) < 4.0 * fit.se)
        lo, hi = fit.wald_interval(1.96)
        assert np.all(lo < fit.beta) and np.all(fit.beta < hi)

    def test_cross_fitted_forest_nuisances(self):
        cfg = SimConfig(design=Design.LINEAR_RHO, n_train=1500, p=3)
        tagged = linear_rho_dgp(cfg, seed=9)
        fit = fit_dml(tagged.data, k=3, nuisance_cfg=ForestConfig(num_trees=40, threads=1), seed=2)
        beta_star = np.asarray(linear_beta(cfg))
        assert fit.nuisances.plan.k == 3
        assert set(fit.nuisances.regressors) == {"y", "c"}
        assert np.all(np.abs(fit.beta - beta_star) < 5.0 * fit.se)

    def test_fold_workers_do_not_change_nuisances(self):
        cfg = SimConfig(design=Design.LINEAR_RHO, n_train=300, p=3)
        data = linear_rho_dgp(cfg, seed=3).data
        d = Dataset(x=data.x, w=data.w, y=data.y, c=data.c, require_propensity=False)
        plan = make_folds(d, 3, seed=1)
        one = fit_nuisances(d, plan, ForestConfig(num_trees=10, seed=4, threads=1))
        three = fit_nuisances(d, plan, ForestConfig(num_trees=10, seed=4, threads=3))
        assert set(one.regressors) == {"y", "c", "w"}
        for name in ("h_y", "h_c", "h_w"):
            assert np.array_equal(getattr(one, name), getattr(three, name)), name

    def test_intercept_column(self, dataset_factory):
        d = dataset_factory(80, p=2)
        fit = fit_dml(d, k=1, nuisances=NuisanceFit.known(0.0, 0.0, 0.5, n=d.n), add_intercept=True)
        assert fit.beta.shape == (3,)
        assert design_matrix(d.x, True)[:, 0].tolist() == [1.0] * 80

    def test_singular_moment(self, dataset_factory):
        d0 = dataset_factory(40, p=1)
        d = Dataset(x=np.column_stack([d0.x, d0.x]), w=d0.w, y=d0.y, c=d0.c, default_propensity=0.5)
        with pytest.raises(SingularMoment):
            fit_dml(d, k=1, nuisances=NuisanceFit.known(0.0, 0.0, 0.5, n=d.n))

    def test_fold_too_small(self, dataset_factory):
        d = dataset_factory(10, p=2)
        with pytest.raises(FoldTooSmall):
            fit_dml(d, k=5, nuisances=NuisanceFit.known(0.0, 0.0, 0.5, n=d.n), seed=0)


class TestOrthogonality:
    def test_directional_derivatives_vanish_at_cell_means(self):
        d, nuisances = _balanced_cells()
        beta = np.array([0.3, 0.7])
        norms = orthogonality_check(d, beta, nuisances, seed=4, add_intercept=True)
        assert set(norms) == {"h_y", "h_c", "h_w"}
        assert max(norms.values()) < 1e-8

    def test_moment_drift_is_second_order(self):
        d, nuisances = _balanced_cells()
        beta = np.array([0.3, 0.7])
        eps = np.array([1e-1, 1e-2, 1e-3])
        drift = np.array([moment_drift(d, beta, nuisances, e, seed=4, add_intercept=True) for e in eps])
        slope = np.polyfit(np.log(eps), np.log(drift), 1)[0]
        assert slope >= 1.8

    def test_zero_perturbation_zero_drift(self):
        d, nuisances = _balanced_cells()
        assert moment_drift(d, np.array([0.3, 0.7]), nuisances, 0.0, add_intercept=True) == 0.0

    def test_population_derivatives_are_exactly_zero(self):
        support = [
            SupportPoint(
                x=(Fraction(0), Fraction(1)), weight=Fraction(1, 3), propensity=Fraction(1, 2),
                y0=Fraction(1), y1=Fraction(4), c0=Fraction(0), c1=Fraction(3),
            ),
            SupportPoint(
                x=(Fraction(1), Fraction(-2)), weight=Fraction(2, 3), propensity=Fraction(1, 3),
                y0=Fraction(-1, 2), y1=Fraction(2), c0=Fraction(1), c1=Fraction(7, 2),
            ),
        ]
        out = population_orthogonality(support, [Fraction(1, 2), Fraction(-3)])
        for values in out.values():
            assert values == [Fraction(0), Fraction(0)]

    def test_covariance_ratio_equals_effect_ratio(self):
        support = [
            SupportPoint(
                x=(Fraction(k),), weight=Fraction(1, 4), propensity=Fraction(k + 1, 6),
                y0=Fraction(k), y1=Fraction(3 * k + 2), c0=Fraction(1), c1=Fraction(k + 3),
            )
            for k in range(4)
        ]
        for cov_ratio, effect_ratio in covariance_ratio_identity(support):
            assert cov_ratio == effect_ratio
