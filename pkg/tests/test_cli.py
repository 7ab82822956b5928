import json

import numpy as np
import pandas as pd
import pytest

from costcast.main import exit_code_for, main
from costcast.repositories.dataset_repository import load_dataset
from costcast.repositories.exceptions import InputFileNotFound
from costcast.schemas.data_schema import ColumnSchema
from costcast.schemas.forest_schema import ForestConfig
from costcast.services.estimators.exceptions import SingularMoment
from costcast.services.estimators.priority_service import fit_iv_forest, score
from costcast.utils.exceptions import ConfigInvalid, InternalError


@pytest.fixture
def simulated(tmp_path):
    out = tmp_path / "sim"
    code = main(["simulate", "--n-train", "300", "--n-test", "400", "--p", "6", "--seed", "1", "--out", str(out)])
    assert code == 0
    return out


@pytest.fixture
def forest_config(tmp_path):
    path = tmp_path / "forest.json"
    path.write_text(json.dumps({"num_trees": 20, "seed": 3, "threads": 1}), encoding="utf-8")
    return path


class TestPipeline:
    def test_simulate_writes_data_and_schema(self, simulated):
        for name in ("train.csv", "test.csv", "schema.json", "run_config.json"):
            assert (simulated / name).exists()
        header = pd.read_csv(simulated / "train.csv", nrows=1).columns.tolist()
        assert {"x1", "x6", "w", "y", "c", "tau", "gamma", "rho"} <= set(header)

    def test_fit_score_qini_lift_policy(self, simulated, forest_config, tmp_path):
        schema = simulated / "schema.json"
        model = tmp_path / "model.ccst"
        scores = tmp_path / "scores.csv"

        assert main([
            "fit", "--method", "iv_forest", "--data", str(simulated / "train.csv"),
            "--config", str(forest_config), "--schema", str(schema), "--out", str(model),
        ]) == 0
        assert main([
            "score", "--model", str(model), "--data", str(simulated / "test.csv"),
            "--schema", str(schema), "--out", str(scores),
        ]) == 0

        column_schema = ColumnSchema.model_validate_json(schema.read_text(encoding="utf-8"))
        train = load_dataset(simulated / "train.csv", column_schema)
        test = load_dataset(simulated / "test.csv", column_schema)
        expected = score(fit_iv_forest(train, ForestConfig(num_trees=20, seed=3, threads=1)), test.x)
        written = pd.read_csv(scores, float_precision="round_trip")["score"].to_numpy()
        assert np.array_equal(written, expected)

        qini_dir = tmp_path / "qini"
        assert main([
            "qini", "--data", str(simulated / "test.csv"), "--scores", str(scores),
            "--schema", str(schema), "--out", str(qini_dir),
        ]) == 0
        curve = pd.read_csv(qini_dir / "qini_curve.csv")
        assert len(curve) >= 2

        lift_json = tmp_path / "lift.json"
        assert main([
            "lift", "--data", str(simulated / "test.csv"), "--scores", str(scores),
            "--budget", "0.5", "--reps", "100", "--schema", str(schema), "--out", str(lift_json),
        ]) == 0
        summary = json.loads(lift_json.read_text(encoding="utf-8"))
        assert set(summary) == {"q_hat", "delta_hat", "se", "ci_lo", "ci_hi", "q_ci_lo", "q_ci_hi"}
        assert summary["ci_lo"] <= summary["delta_hat"] <= summary["ci_hi"]

        probs_path = tmp_path / "probs.csv"
        assert main(["policy", "--scores", str(scores), "--budget", "0.5", "--out", str(probs_path)]) == 0
        probs = pd.read_csv(probs_path)["prob"].to_numpy()
        assert probs.shape == (400,)
        assert np.all((probs >= 0.0) & (probs <= 1.0))
        assert probs.sum() <= 200.0 + 1e-9

        run_config = json.loads((tmp_path / "run_config.json").read_text(encoding="utf-8"))
        assert run_config["command"] == "policy"

    def test_fit_run_config_drops_threads(self, simulated, forest_config, tmp_path):
        out = tmp_path / "fit" / "model.ccst"
        assert main([
            "--threads", "2", "fit", "--method", "ignore_cost", "--data", str(simulated / "train.csv"),
            "--config", str(forest_config), "--schema", str(simulated / "schema.json"), "--out", str(out),
        ]) == 0
        run_config = json.loads((out.parent / "run_config.json").read_text(encoding="utf-8"))
        assert run_config["config"]["num_trees"] == 20
        assert "threads" not in run_config and "threads" not in run_config["config"]

    def test_lift_compares_two_score_files(self, simulated, tmp_path):
        test = pd.read_csv(simulated / "test.csv", float_precision="round_trip")
        good = tmp_path / "good.csv"
        bad = tmp_path / "bad.csv"
        pd.DataFrame({"unit_id": range(len(test)), "score": test["rho"]}).to_csv(good, index=False)
        pd.DataFrame({"unit_id": range(len(test)), "score": -test["rho"]}).to_csv(bad, index=False)
        out = tmp_path / "lift.json"
        assert main([
            "lift", "--data", str(simulated / "test.csv"), "--scores", str(good), "--compare-scores", str(bad),
            "--budget", "0.3", "--reps", "100", "--schema", str(simulated / "schema.json"), "--out", str(out),
        ]) == 0
        summary = json.loads(out.read_text(encoding="utf-8"))
        comparison = summary["comparison"]
        assert set(comparison) == {"delta_a", "delta_b", "difference", "se", "ci_lo", "ci_hi", "p_value"}
        assert comparison["delta_a"] == pytest.approx(summary["delta_hat"])
        assert comparison["difference"] == pytest.approx(comparison["delta_a"] - comparison["delta_b"])
        assert comparison["ci_lo"] <= comparison["difference"] <= comparison["ci_hi"]
        assert 0.0 < comparison["p_value"] <= 1.0


class TestExitCodes:
    def test_missing_data_file(self, tmp_path):
        code = main(["fit", "--method", "iv_forest", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "m")])
        assert code == 2

    def test_conflicting_budget_options(self, tmp_path):
        scores = tmp_path / "scores.csv"
        pd.DataFrame({"unit_id": [0, 1], "score": [1.0, 2.0]}).to_csv(scores, index=False)
        code = main([
            "policy", "--scores", str(scores), "--budget", "0.5", "--total-budget", "1",
            "--out", str(tmp_path / "p.csv"),
        ])
        assert code == 2

    def test_invalid_config(self, tmp_path):
        path = tmp_path / "forest.json"
        path.write_text(json.dumps({"num_trees": 0}), encoding="utf-8")
        code = main([
            "fit", "--method", "iv_forest", "--data", str(tmp_path / "d.csv"),
            "--config", str(path), "--out", str(tmp_path / "m"),
        ])
        assert code == 2

    @pytest.mark.parametrize(
        "exc, code",
        [
            (InputFileNotFound("x"), 2),
            (ConfigInvalid("x"), 2),
            (SingularMoment(0, 1e12), 2),
            (InternalError("x"), 1),
            (RuntimeError("x"), 1),
        ],
    )
    def test_exit_code_mapping(self, exc, code):
        assert exit_code_for(exc) == code


class TestPolicyCommand:
    @pytest.fixture
    def scores_csv(self, tmp_path):
        path = tmp_path / "scores.csv"
        pd.DataFrame({"unit_id": [10, 20, 30], "score": [2.0, 1.0, 0.5]}).to_csv(path, index=False)
        return path

    def _run(self, scores_csv, tmp_path, *args) -> pd.DataFrame:
        out = tmp_path / "probs.csv"
        assert main(["policy", "--scores", str(scores_csv), *args, "--out", str(out)]) == 0
        return pd.read_csv(out)

    def test_per_capita_budget(self, scores_csv, tmp_path):
        frame = self._run(scores_csv, tmp_path, "--budget", "0.5")
        assert frame.columns.tolist() == ["unit_id", "prob"]
        assert frame["unit_id"].tolist() == [10, 20, 30]
        assert frame["prob"].tolist() == pytest.approx([1.0, 0.5, 0.0])

    def test_total_budget_is_divided_by_units(self, scores_csv, tmp_path):
        frame = self._run(scores_csv, tmp_path, "--total-budget", "1.5")
        assert frame["prob"].tolist() == pytest.approx([1.0, 0.5, 0.0])

    def test_greedy_allocation(self, scores_csv, tmp_path):
        frame = self._run(scores_csv, tmp_path, "--total-budget", "1.5", "--greedy")
        assert frame["prob"].tolist() == [1.0, 0.0, 0.0]

    def test_greedy_needs_total_budget(self, scores_csv, tmp_path):
        code = main(["policy", "--scores", str(scores_csv), "--budget", "0.5", "--greedy", "--out", str(tmp_path / "p.csv")])
        assert code == 2

    def test_run_config_omits_worker_count(self, scores_csv, tmp_path):
        assert main(["--threads", "3", "policy", "--scores", str(scores_csv), "--budget", "0.5",
                     "--out", str(tmp_path / "probs.csv")]) == 0
        run_config = json.loads((tmp_path / "run_config.json").read_text(encoding="utf-8"))
        assert "threads" not in run_config
