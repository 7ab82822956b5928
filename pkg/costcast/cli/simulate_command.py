import logging
from pathlib import Path
from typing import Optional, Tuple

import click
import numpy as np

from costcast.cli.common import load_model_config, write_run_config
from costcast.core.config import get_settings
from costcast.core.parallel import derive_seed
from costcast.repositories.dataset_repository import write_dataset
from costcast.schemas.data_schema import ColumnSchema
from costcast.schemas.simulation_schema import BudgetScale, Design, SimConfig
from costcast.services.simulation.generators import generate
from costcast.services.simulation.study_service import run_study

logger = logging.getLogger(__name__)

SCHEMA_FILE = "schema.json"


@click.command("simulate")
@click.option("--design", type=click.Choice([d.value for d in Design if d != Design.CUSTOM]), default=None)
@click.option("--n-train", type=int, default=None, help="학습 표본 크기")
@click.option("--n-test", type=int, default=None, help="평가 표본 크기")
@click.option("--pi", type=float, default=None, help="처치 확률")
@click.option("--p", "p", type=int, default=None, help="공변량 차원")
@click.option("--seed", type=int, default=None, help="연구 시드")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="출력 디렉토리 (기본: COSTCAST_STUDY_DIR)")
@click.option("--replicates", type=int, default=None, help="연구 복제 수")
@click.option("--methods", type=str, default=None, help="쉼표로 구분한 방법 목록")
@click.option("--budget", "budgets", type=float, multiple=True, help="가치를 보고할 예산 (반복 가능)")
@click.option("--budget-scale", type=click.Choice([s.value for s in BudgetScale]), default=None)
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None, help="SimConfig JSON")
@click.option("--study", is_flag=True, help="데이터만 쓰지 않고 전체 연구 실행")
def simulate(
    design: Optional[str],
    n_train: Optional[int],
    n_test: Optional[int],
    pi: Optional[float],
    p: Optional[int],
    seed: Optional[int],
    out: Optional[Path],
    replicates: Optional[int],
    methods: Optional[str],
    budgets: Tuple[float, ...],
    budget_scale: Optional[str],
    config_path: Optional[Path],
    study: bool,
) -> None:
    """
    시뮬레이션 데이터 생성 또는 연구 실행
    - 기본: train.csv / test.csv (정답 열 tau, gamma, rho 포함)
    - --study: report.json, averaged_curves.csv, replicate_curves.csv
    """
    cfg = load_model_config(
        SimConfig,
        config_path,
        design=design,
        n_train=n_train,
        n_test=n_test,
        pi=pi,
        p=p,
        seed=seed,
        replicates=replicates,
        methods=None if methods is None else [m.strip() for m in methods.split(",") if m.strip()],
        budgets=list(budgets) or None,
        budget_scale=budget_scale,
    )
    out = out if out is not None else Path(get_settings().STUDY_DIR)
    out.mkdir(parents=True, exist_ok=True)
    write_run_config(out, "simulate", {"study": study, "out": out}, seed=cfg.seed, config=cfg)

    if study:
        report = run_study(cfg, out)
        for summary in report.methods:
            click.echo(f"{summary.method}: " + ", ".join(f"V({b})={v:.4f}" for b, v in summary.values.items()))
        return

    for name, n, key in (("train", cfg.n_train, "train"), ("test", cfg.n_test, "test")):
        tagged = generate(cfg, seed=derive_seed(cfg.seed, key, 0), n=n)
        write_dataset(
            tagged.data,
            out / f"{name}.csv",
            extra_columns={
                "propensity": np.full(n, cfg.pi),
                "tau": tagged.tau,
                "gamma": tagged.gamma,
                "rho": tagged.rho,
            },
        )
    schema = ColumnSchema(propensity="propensity", zero_control_cost=True)
    (out / SCHEMA_FILE).write_text(schema.model_dump_json(indent=2), encoding="utf-8")
    click.echo(f"wrote {out / 'train.csv'} and {out / 'test.csv'}")
