import json

import numpy as np
import pandas as pd
import pytest

from costcast.schemas.forest_schema import ForestConfig
from costcast.schemas.simulation_schema import Design, SimConfig
from costcast.services.simulation.exceptions import TestSetHashMismatch
from costcast.services.simulation.generators import dataset_hash, generate, linear_beta
from costcast.services.simulation import study_service
from costcast.services.simulation.study_service import TEST_HASH_FILE, TEST_SET_FILE, run_study
from costcast.utils.exceptions import ConfigInvalid


def _study_cfg(**kwargs) -> SimConfig:
    base = dict(
        design=Design.PREDICTABLE_COST,
        n_train=300,
        n_test=500,
        replicates=2,
        p=6,
        seed=5,
        methods=["iv_forest", "ignore_cost", "oracle"],
        budgets=[0.5, 1.0],
        grid_points=21,
        forest=ForestConfig(num_trees=20, threads=1),
    )
    base.update(kwargs)
    return SimConfig(**base)


class TestGenerators:
    @pytest.mark.parametrize("design", [Design.UNPREDICTABLE_COST, Design.PREDICTABLE_COST])
    def test_shapes_and_truth(self, design):
        tagged = generate(SimConfig(design=design, n_train=200, p=6), seed=1)
        d, x = tagged.data, tagged.data.x
        assert x.shape == (200, 6)
        assert np.all(d.c[d.w == 0] == 0.0)
        assert np.allclose(tagged.tau, np.exp(x[:, 0] + x[:, 1] + x[:, 2] + x[:, 3]))
        assert np.allclose(tagged.rho, tagged.tau / tagged.gamma)
        if design == Design.UNPREDICTABLE_COST:
            assert np.all(tagged.gamma == 1.0)
        else:
            assert np.allclose(tagged.gamma, np.exp(x[:, 1] + x[:, 2] + x[:, 3] + x[:, 4]))

    def test_same_seed_same_data(self):
        cfg = SimConfig(n_train=50, p=6)
        assert dataset_hash(generate(cfg, seed=3)) == dataset_hash(generate(cfg, seed=3))
        assert dataset_hash(generate(cfg, seed=3)) != dataset_hash(generate(cfg, seed=4))

    def test_nonlinear_designs_need_six_covariates(self):
        with pytest.raises(ConfigInvalid):
            generate(SimConfig(design=Design.PREDICTABLE_COST, n_train=20, p=5), seed=0)

    def test_linear_rho_is_linear(self):
        cfg = SimConfig(design=Design.LINEAR_RHO, n_train=100, p=4)
        tagged = generate(cfg, seed=2)
        assert np.allclose(tagged.rho, tagged.data.x @ np.asarray(linear_beta(cfg)))
        assert linear_beta(cfg) == [1.0, -0.5, 0.25, 0.0]

    def test_linear_beta_length_checked(self):
        with pytest.raises(ConfigInvalid):
            linear_beta(SimConfig(design=Design.LINEAR_RHO, p=3, beta_star=[1.0]))

    def test_custom_design_needs_generator(self):
        with pytest.raises(ConfigInvalid):
            generate(SimConfig(design=Design.CUSTOM, n_train=10), seed=0)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            SimConfig(methods=["nearest_neighbour"])


class TestRunStudy:
    def test_report_and_artifacts(self, tmp_path):
        cfg = _study_cfg()
        report = run_study(cfg, out_dir=tmp_path)
        assert report.replicates == 2 and len(report.grid) == 21
        assert [m.method for m in report.methods] == cfg.methods
        for name in (TEST_SET_FILE, TEST_HASH_FILE, "report.json", "averaged_curves.csv", "replicate_curves.csv"):
            assert (tmp_path / name).exists()
        stored = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert stored["test_hash"] == report.test_hash
        replicate_rows = pd.read_csv(tmp_path / "replicate_curves.csv")
        assert len(replicate_rows) == 3 * 2 * 21

    def test_oracle_dominates(self):
        report = run_study(_study_cfg())
        for b in (0.5, 1.0):
            best = report.value("oracle", b)
            for method in ("iv_forest", "ignore_cost"):
                assert report.value(method, b) <= best + 1e-9

    def test_method_order_does_not_change_results(self):
        a = run_study(_study_cfg(methods=["iv_forest", "ignore_cost"], replicates=1))
        b = run_study(_study_cfg(methods=["ignore_cost", "iv_forest"], replicates=1))
        for method in ("iv_forest", "ignore_cost"):
            assert a.value(method, 0.5) == b.value(method, 0.5)

    def test_rerun_into_same_directory(self, tmp_path):
        cfg = _study_cfg(methods=["oracle"], replicates=1)
        first = run_study(cfg, out_dir=tmp_path)
        second = run_study(cfg, out_dir=tmp_path)
        assert first.test_hash == second.test_hash

    def test_changed_test_set_is_rejected(self, tmp_path):
        run_study(_study_cfg(methods=["oracle"], replicates=1), out_dir=tmp_path)
        with pytest.raises(TestSetHashMismatch):
            run_study(_study_cfg(methods=["oracle"], replicates=1, seed=6), out_dir=tmp_path)

    def test_replicate_workers_do_not_change_results(self):
        one = run_study(_study_cfg(forest=ForestConfig(num_trees=20, threads=1)))
        three = run_study(_study_cfg(forest=ForestConfig(num_trees=20, threads=3)))
        assert one.test_hash == three.test_hash
        assert one.averaged_curves == three.averaged_curves
        assert [m.model_dump() for m in one.methods] == [m.model_dump() for m in three.methods]

    def test_test_set_drift_during_study_is_detected(self, monkeypatch):
        original = study_service.method_scores
        calls = []

        def tampering(method, train, test, cfg, seed):
            calls.append(method)
            if len(calls) == 2:
                object.__setattr__(test, "tau", test.tau + 1.0)
            return original(method, train, test, cfg, seed)

        monkeypatch.setattr(study_service, "method_scores", tampering)
        with pytest.raises(TestSetHashMismatch) as exc:
            run_study(_study_cfg(methods=["oracle"], replicates=3))
        assert "replicate 1" in str(exc.value)

    def test_normalized_budget_scale(self):
        report = run_study(_study_cfg(methods=["oracle"], replicates=1, budget_scale="normalized", budgets=[1.0]))
        assert report.grid[-1] == pytest.approx(1.0)
        assert report.value("oracle", 1.0) == pytest.approx(1.0)
