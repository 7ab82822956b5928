"""
Repository 계층 예외 클래스들 (CSV 입력 검증, 모델 파일 입출력)
"""

from typing import Optional, Sequence

from costcast.utils.exceptions import ValidationError


class DataValidationError(ValidationError):
    """
    데이터 검증 실패 기본 예외
    - rows: 문제가 된 행 번호 목록 (0부터 시작, 헤더 제외)
    """
    def __init__(self, message: str, rows: Optional[Sequence[int]] = None):
        self.rows = list(rows) if rows is not None else []
        if self.rows:
            shown = ", ".join(str(r) for r in self.rows[:20])
            more = "" if len(self.rows) <= 20 else f" (+{len(self.rows) - 20} more)"
            message = f"{message} [rows: {shown}{more}]"
        super().__init__(message)


class MissingColumn(DataValidationError):
    """선언된 컬럼이 파일에 없음"""
    pass


class MissingValue(DataValidationError):
    """선언된 필드 값이 비어 있음"""
    pass


class NonBinaryTreatment(DataValidationError):
    """처치 컬럼에 {0,1} 이외의 값"""
    pass


class NegativeCost(DataValidationError):
    """비용이 음수"""
    pass


class NonzeroControlCost(DataValidationError):
    """zero_control_cost 설정에서 대조군 비용이 0이 아님"""
    pass


class NonFiniteValue(DataValidationError):
    """공변량/결과/비용에 NaN 또는 Inf"""
    pass


class PropensityOutOfRange(DataValidationError):
    """처치 확률이 (0,1) 밖"""
    pass


class UnknownPropensity(DataValidationError):
    """처치 확률 컬럼도 기본 처치 확률도 없음 (require_propensity 설정 시)"""
    pass


class InvalidClusterId(DataValidationError):
    """클러스터 ID가 정수가 아님"""
    pass


class NoOverlap(DataValidationError):
    """처치군 또는 대조군이 비어 있음"""
    pass


class DimensionMismatch(DataValidationError):
    """공변량 차원 불일치"""
    pass


class ModelFormatError(ValidationError):
    """모델 파일 매직/버전/레이아웃 오류"""
    pass


class InputFileNotFound(ValidationError):
    """입력 파일 경로가 존재하지 않음"""
    pass
