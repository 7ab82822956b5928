import logging
from pathlib import Path
from typing import Optional

import click
import pandas as pd

from costcast.cli.common import SCORE_COLUMN, UNIT_ID_COLUMN, load_schema, output_dir_of, write_run_config
from costcast.models.priority import PriorityModel
from costcast.repositories.dataset_repository import DatasetRepository
from costcast.repositories.exceptions import ModelFormatError
from costcast.repositories.model_repository import ModelRepository
from costcast.services.estimators.priority_service import score

logger = logging.getLogger(__name__)


@click.command("score")
@click.option("--model", "model_path", type=click.Path(path_type=Path), required=True, help="모델 파일")
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True, help="공변량 CSV")
@click.option("--schema", "schema_path", type=click.Path(path_type=Path), default=None, help="ColumnSchema JSON")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="점수 CSV")
def score_command(model_path: Path, data_path: Path, schema_path: Optional[Path], out: Path) -> None:
    """
    모델로 CSV 행에 점수를 매겨 저장 (열: unit_id, score)
    - 공변량 열만 있으면 되고 처치/결과/비용 열은 필요 없음
    """
    model = ModelRepository().load(model_path)
    if not isinstance(model, PriorityModel):
        raise ModelFormatError(f"{model_path} holds a bare forest, not a priority model")
    x = DatasetRepository(load_schema(schema_path)).load_covariates(data_path)
    scores = score(model, x)

    out.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({UNIT_ID_COLUMN: range(len(scores)), SCORE_COLUMN: scores}).to_csv(
        out, index=False, float_format="%.17g"
    )
    write_run_config(output_dir_of(out), "score", {"model": model_path, "data": data_path, "out": out})
    click.echo(f"scored {len(scores)} rows → {out}")
