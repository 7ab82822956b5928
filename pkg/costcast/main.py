import logging
import os
import sys
from typing import Optional, Type

import click

from costcast import __version__
from costcast.cli.fit_command import fit
from costcast.cli.lift_command import lift
from costcast.cli.policy_command import policy
from costcast.cli.qini_command import qini
from costcast.cli.score_command import score_command
from costcast.cli.simulate_command import simulate
from costcast.core.config import get_settings
from costcast.utils.exceptions import CostcastError, InternalError, ValidationError

logger = logging.getLogger(__name__)

# ─── 예외 클래스 → 종료 코드 매핑 ─────────────────────────────────────────
EXIT_CODE_MAP: dict[Type[Exception], int] = {
    ValidationError: 2,
    InternalError: 1,
}


def exit_code_for(exc: BaseException) -> int:
    """
    예외의 MRO 를 따라 EXIT_CODE_MAP 에서 종료 코드 조회
    매핑이 없으면 1 (내부 오류)
    """
    for cls in type(exc).__mro__:
        if cls in EXIT_CODE_MAP:
            return EXIT_CODE_MAP[cls]
    return 1


# ─── 로그 설정 ─────────────────────────────────────────────────────────
def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )
    # joblib 내부 로그 억제
    logging.getLogger("joblib").setLevel(logging.WARNING)


# ─── click 그룹 ───────────────────────────────────────────────────────
@click.group()
@click.version_option(__version__, prog_name="costcast")
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    envvar="COSTCAST_THREADS",
    default=None,
    help="워커 수 (기본: COSTCAST_THREADS 또는 논리 코어 수). 결과는 워커 수와 무관",
)
@click.option("--log-level", default=None, help="로그 레벨 (기본: COSTCAST_LOG_LEVEL)")
def cli(threads: Optional[int], log_level: Optional[str]) -> None:
    """
    비용 불확실성 아래 예산 제약 처치 우선순위 도구
    simulate → fit → score → qini / lift → policy
    """
    if threads is not None:
        os.environ["COSTCAST_THREADS"] = str(threads)
        get_settings.cache_clear()
    configure_logging(log_level or get_settings().LOG_LEVEL)


cli.add_command(simulate)
cli.add_command(fit)
cli.add_command(score_command)
cli.add_command(qini)
cli.add_command(lift)
cli.add_command(policy)


def main(argv: Optional[list] = None) -> int:
    """
    CLI 진입점
    - costcast 예외는 EXIT_CODE_MAP 에 따라 종료 코드로 변환 (검증 오류 2, 내부 오류 1)
    - click 사용법 오류는 click 의 종료 코드 (2)
    """
    try:
        cli.main(args=argv, prog_name="costcast", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.exceptions.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Exit as e:
        return e.exit_code
    except CostcastError as e:
        code = exit_code_for(e)
        logger.error("%s: %s", type(e).__name__, e.message)
        click.echo(f"error: {e.message}", err=True)
        return code
    except Exception:
        logger.exception("unexpected internal error")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
