import logging
from pathlib import Path
from typing import Optional

import click
import pandas as pd

from costcast.cli.common import load_schema, read_column, write_run_config
from costcast.models.dataset import TestDataset, TrainDataset
from costcast.models.qini import QiniCurve
from costcast.repositories.dataset_repository import load_dataset
from costcast.schemas.evaluation_schema import EvalMode
from costcast.services.evaluation.qini_service import qini_curve
from costcast.services.evaluation.transforms import fit_arm_nuisances

logger = logging.getLogger(__name__)


def curve_frame(curve: QiniCurve) -> pd.DataFrame:
    """곡선 CSV 열: threshold, spend, reward (첫 행은 아무도 처치하지 않는 점)"""
    thresholds = [float("inf"), *curve.thresholds.tolist()]
    return pd.DataFrame({"threshold": thresholds, "spend": curve.spend, "reward": curve.reward})


@click.command("qini")
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True, help="평가 CSV")
@click.option("--scores", "scores_path", type=click.Path(path_type=Path), required=True, help="점수 CSV")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True, help="출력 디렉토리")
@click.option("--mode", type=click.Choice([m.value for m in EvalMode]), default=EvalMode.IPW.value)
@click.option("--train", "train_path", type=click.Path(path_type=Path), default=None, help="aipw nuisance 학습 CSV")
@click.option("--schema", "schema_path", type=click.Path(path_type=Path), default=None, help="ColumnSchema JSON")
@click.option("--normalized", is_flag=True, help="정규화 곡선 CSV 도 저장")
def qini(
    data_path: Path,
    scores_path: Path,
    out: Path,
    mode: str,
    train_path: Optional[Path],
    schema_path: Optional[Path],
    normalized: bool,
) -> None:
    """점수 순서의 비용 가중 QINI 곡선 CSV 저장"""
    schema = load_schema(schema_path)
    test = load_dataset(data_path, schema).as_role(TestDataset)
    scores = read_column(scores_path)

    nuisances = None
    if train_path is not None:
        train = load_dataset(train_path, schema).as_role(TrainDataset)
        nuisances = fit_arm_nuisances(train, test)
    curve = qini_curve(test, scores, mode, nuisances)

    out.mkdir(parents=True, exist_ok=True)
    curve_frame(curve).to_csv(out / "qini_curve.csv", index=False, float_format="%.17g")
    if normalized:
        curve_frame(curve.normalized()).to_csv(out / "qini_curve_normalized.csv", index=False, float_format="%.17g")
    write_run_config(
        out,
        "qini",
        {"data": data_path, "scores": scores_path, "mode": mode, "train": train_path, "normalized": normalized},
    )
    click.echo(f"B(0)={curve.b0:.6g} R(0)={curve.r0:.6g} points={curve.n_points} → {out}")
