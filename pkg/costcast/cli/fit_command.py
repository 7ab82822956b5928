import logging
from pathlib import Path
from typing import Optional

import click

from costcast.cli.common import load_model_config, load_schema, output_dir_of, write_run_config
from costcast.core.config import get_settings
from costcast.repositories.dataset_repository import load_dataset
from costcast.repositories.model_repository import ModelRepository
from costcast.schemas.forest_schema import ForestConfig
from costcast.services.estimators.priority_service import (
    fit_direct_ratio,
    fit_dml_priority,
    fit_ignore_cost,
    fit_iv_forest,
)

logger = logging.getLogger(__name__)

METHODS = ("iv_forest", "direct_ratio", "ignore_cost", "dml")


@click.command("fit")
@click.option("--method", type=click.Choice(METHODS), required=True, help="우선순위 모델 종류")
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True, help="학습 CSV")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None, help="ForestConfig JSON")
@click.option("--schema", "schema_path", type=click.Path(path_type=Path), default=None, help="ColumnSchema JSON")
@click.option("--folds", type=int, default=None, help="dml fold 수")
@click.option("--seed", type=int, default=None, help="시드 (config 값을 덮어씀)")
@click.option("--intercept", is_flag=True, help="dml 선형 점수에 절편 포함")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="모델 파일 경로")
def fit(
    method: str,
    data_path: Path,
    config_path: Optional[Path],
    schema_path: Optional[Path],
    folds: Optional[int],
    seed: Optional[int],
    intercept: bool,
    out: Path,
) -> None:
    """학습 CSV 로 우선순위 모델을 학습하고 모델 파일 저장"""
    cfg = load_model_config(ForestConfig, config_path, seed=seed)
    data = load_dataset(data_path, load_schema(schema_path))

    if method == "iv_forest":
        model = fit_iv_forest(data, cfg)
    elif method == "direct_ratio":
        model = fit_direct_ratio(data, cfg)
    elif method == "ignore_cost":
        model = fit_ignore_cost(data, cfg)
    else:
        model = fit_dml_priority(
            data,
            k=folds or get_settings().DEFAULT_FOLDS,
            cfg=cfg,
            seed=cfg.seed,
            add_intercept=intercept,
        )

    ModelRepository().save(model, out)
    write_run_config(
        output_dir_of(out),
        "fit",
        {"method": method, "data": data_path, "schema": schema_path, "folds": folds, "intercept": intercept, "out": out},
        seed=cfg.seed,
        config=cfg,
    )
    click.echo(f"wrote {method} model to {out}")
