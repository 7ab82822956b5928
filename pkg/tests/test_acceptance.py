"""
끝단 검증
- 빠른 테스트: 정확한 분수 항등식, 스레드 수와 무관한 CLI 산출물
- slow: 시뮬레이션 연구 수치, DML 커버리지 Monte Carlo (pytest -m slow)
"""

import json
from fractions import Fraction

import numpy as np
import pytest

from costcast.main import main
from costcast.models.estimation import SupportPoint
from costcast.schemas.forest_schema import ForestConfig
from costcast.schemas.simulation_schema import Design, SimConfig
from costcast.services.estimators.dml_service import covariance_ratio_identity, fit_dml, population_orthogonality
from costcast.services.simulation.generators import linear_beta, linear_rho_dgp
from costcast.services.simulation.study_service import run_study


def _random_support(rng: np.random.Generator, size: int, p: int) -> list:
    points = []
    for _ in range(size):
        c0 = Fraction(int(rng.integers(0, 3)))
        points.append(
            SupportPoint(
                x=tuple(Fraction(int(v), 4) for v in rng.integers(-8, 9, size=p)),
                weight=Fraction(1, size),
                propensity=Fraction(int(rng.integers(1, 10)), 10),
                y0=Fraction(int(rng.integers(-10, 11)), 3),
                y1=Fraction(int(rng.integers(-10, 11)), 3),
                c0=c0,
                c1=c0 + Fraction(int(rng.integers(1, 6)), 2),
            )
        )
    return points


class TestExactIdentities:
    def test_covariance_ratio_identity_on_random_supports(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            for cov_ratio, effect_ratio in covariance_ratio_identity(_random_support(rng, 3, 2)):
                assert cov_ratio == effect_ratio

    def test_population_orthogonality_on_random_supports(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            support = _random_support(rng, 4, 2)
            beta = [Fraction(int(v), 5) for v in rng.integers(-5, 6, size=2)]
            for values in population_orthogonality(support, beta).values():
                assert all(v == 0 for v in values)


class TestThreadIndependence:
    def _pipeline(self, root, threads: int) -> dict:
        root.mkdir(parents=True, exist_ok=True)
        sim = root / "sim"
        cfg = root / "forest.json"
        cfg.write_text(json.dumps({"num_trees": 30, "seed": 9}), encoding="utf-8")
        study_cfg = root / "study.json"
        study_cfg.write_text(
            json.dumps({
                "n_train": 200, "n_test": 200, "replicates": 2, "p": 6, "grid_points": 11,
                "methods": ["iv_forest", "oracle"], "forest": {"num_trees": 10},
            }),
            encoding="utf-8",
        )
        base = ["--threads", str(threads)]
        assert main(base + ["simulate", "--n-train", "250", "--n-test", "200", "--p", "6", "--seed", "4", "--out", str(sim)]) == 0
        assert main(base + ["simulate", "--config", str(study_cfg), "--study", "--out", str(root / "study")]) == 0
        schema = str(sim / "schema.json")
        assert main(base + [
            "fit", "--method", "iv_forest", "--data", str(sim / "train.csv"), "--config", str(cfg),
            "--schema", schema, "--out", str(root / "fit" / "model.ccst"),
        ]) == 0
        assert main(base + [
            "score", "--model", str(root / "fit" / "model.ccst"), "--data", str(sim / "test.csv"),
            "--schema", schema, "--out", str(root / "score" / "scores.csv"),
        ]) == 0
        scores = str(root / "score" / "scores.csv")
        assert main(base + [
            "qini", "--data", str(sim / "test.csv"), "--scores", scores, "--schema", schema,
            "--out", str(root / "qini"), "--normalized",
        ]) == 0
        assert main(base + [
            "lift", "--data", str(sim / "test.csv"), "--scores", scores, "--budget", "0.5",
            "--reps", "120", "--schema", schema, "--out", str(root / "lift" / "lift.json"),
        ]) == 0
        assert main(base + [
            "policy", "--scores", scores, "--budget", "0.5", "--out", str(root / "policy" / "probs.csv"),
        ]) == 0
        return {str(path.relative_to(root)): path.read_bytes() for path in sorted(root.rglob("*")) if path.is_file()}

    def test_outputs_are_byte_identical(self, tmp_path):
        one = self._pipeline(tmp_path, 1)
        four = self._pipeline(tmp_path, 4)
        assert one.keys() == four.keys()
        assert len(one) >= 15
        for name in one:
            assert one[name] == four[name], name


@pytest.mark.slow
class TestSimulationStudies:
    def test_predictable_cost_ordering(self):
        cfg = SimConfig(
            design=Design.PREDICTABLE_COST,
            n_train=1000,
            n_test=10000,
            replicates=100,
            p=12,
            seed=42,
            budgets=[0.5],
            forest=ForestConfig(num_trees=500),
        )
        report = run_study(cfg)
        v_iv = report.value("iv_forest", 0.5)
        v_ratio = report.value("direct_ratio", 0.5)
        v_ignore = report.value("ignore_cost", 0.5)
        assert v_iv > v_ratio > v_ignore
        assert v_ignore == pytest.approx(0.69, abs=0.07)
        assert v_ratio == pytest.approx(0.98, abs=0.07)
        assert v_iv == pytest.approx(1.04, abs=0.07)

    def test_unpredictable_cost_methods_coincide(self):
        cfg = SimConfig(
            design=Design.UNPREDICTABLE_COST,
            n_train=1000,
            n_test=10000,
            replicates=50,
            p=12,
            seed=42,
            forest=ForestConfig(num_trees=500),
        )
        report = run_study(cfg)
        curves = np.array([report.averaged_curves[m] for m in cfg.methods])
        gap = curves.max(axis=0) - curves.min(axis=0)
        assert gap.max() < 0.05


@pytest.mark.slow
def test_dml_bias_and_coverage():
    cfg = SimConfig(design=Design.LINEAR_RHO, n_train=4000, p=3)
    beta_star = np.asarray(linear_beta(cfg))
    nuisance_cfg = ForestConfig(num_trees=200)
    estimates, ses, covered = [], [], []
    for r in range(500):
        tagged = linear_rho_dgp(cfg, seed=1000 + r)
        fit = fit_dml(tagged.data, k=5, nuisance_cfg=nuisance_cfg, seed=r)
        lo, hi = fit.wald_interval(1.96)
        estimates.append(fit.beta)
        ses.append(fit.se)
        covered.append((lo <= beta_star) & (beta_star <= hi))
    estimates, ses, covered = np.array(estimates), np.array(ses), np.array(covered)
    bias = np.abs(estimates.mean(axis=0) - beta_star)
    assert np.all(bias < 0.25 * ses.mean(axis=0))
    coverage = covered.mean(axis=0)
    assert np.all((coverage >= 0.92) & (coverage <= 0.975))
