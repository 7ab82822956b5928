import logging
from pathlib import Path
from typing import Optional

import click
import numpy as np
import pandas as pd

from costcast.cli.common import SCORE_COLUMN, UNIT_ID_COLUMN, output_dir_of, read_column, write_run_config
from costcast.services.policy.policy_service import rank_and_allocate, score_units, solve_policy

logger = logging.getLogger(__name__)

COST_COLUMN = "expected_cost"


@click.command("policy")
@click.option("--scores", "scores_path", type=click.Path(path_type=Path), required=True, help="점수 CSV")
@click.option("--budget", type=float, default=None, help="1인당 예산 B")
@click.option("--total-budget", type=float, default=None, help="총예산 (단위 수로 나눠 1인당 예산으로 사용)")
@click.option("--greedy", is_flag=True, help="총예산을 실현 비용으로 점수 순 0/1 배분 (--total-budget 필요)")
@click.option("--cost-column", default=COST_COLUMN, show_default=True, help="비용 열 이름")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, help="처치 확률 CSV")
def policy(
    scores_path: Path,
    budget: Optional[float],
    total_budget: Optional[float],
    greedy: bool,
    cost_column: str,
    out: Path,
) -> None:
    """
    단위별 처치 확률 계산 (열: unit_id, prob)
    - --budget B 또는 --total-budget T (B = T / n): 최적 임계값 정책, 동점은 a_B 확률
    - --total-budget T --greedy: 점수 순 탐욕 배분 (0/1)
    - unit_id 열이 있으면 그대로 쓰고, 없으면 행 순서 번호
    """
    if (budget is None) == (total_budget is None):
        raise click.UsageError("pass exactly one of --budget or --total-budget")
    if greedy and total_budget is None:
        raise click.UsageError("--greedy needs --total-budget")

    scores = read_column(scores_path, SCORE_COLUMN)
    frame = pd.read_csv(scores_path)
    n = scores.shape[0]
    if UNIT_ID_COLUMN in frame.columns:
        unit_ids = frame[UNIT_ID_COLUMN].to_numpy(dtype=np.int64)
    else:
        unit_ids = np.arange(n, dtype=np.int64)
    if cost_column in frame.columns:
        costs = frame[cost_column].to_numpy(dtype=np.float64)
    else:
        logger.warning("no '%s' column in %s; using unit costs", cost_column, scores_path)
        costs = np.ones_like(scores)

    if greedy:
        probs = np.zeros(n)
        probs[rank_and_allocate(scores, costs, total_budget)] = 1.0
        click.echo(f"treated {int(probs.sum())} of {n} units")
    else:
        per_capita = budget if budget is not None else total_budget / max(n, 1)
        result = solve_policy(score_units(scores, costs, unit_ids), per_capita)
        probs = result.probs
        click.echo(f"rho_B={result.rho_b:.6g} a_B={result.a_b:.6g} spend={result.expected_spend:.6g}")

    out.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({UNIT_ID_COLUMN: unit_ids, "prob": probs}).to_csv(out, index=False, float_format="%.17g")
    write_run_config(
        output_dir_of(out),
        "policy",
        {
            "scores": scores_path,
            "budget": budget,
            "total_budget": total_budget,
            "greedy": greedy,
            "cost_column": cost_column,
        },
    )
