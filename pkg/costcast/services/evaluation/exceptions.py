"""
평가 관련 예외 클래스들
"""

from costcast.utils.exceptions import ValidationError


class EvaluationError(ValidationError):
    """평가 관련 기본 예외"""
    pass


class MissingPropensity(EvaluationError):
    """평가 데이터에 처치 확률이 없음"""
    pass


class NuisanceRequired(EvaluationError):
    """aipw 모드에 팔별 회귀 예측이 주어지지 않음"""
    pass


class BudgetOutOfRange(EvaluationError):
    """예산 b 가 (0, B(0)) 밖"""
    pass


class TooFewReps(EvaluationError):
    """bootstrap 반복 횟수가 최소값 미만"""
    pass


class EmptyInput(EvaluationError):
    """빈 곡선 목록"""
    pass


class LengthMismatch(EvaluationError):
    """점수/정답 벡터 길이가 평가 행 수와 다름"""
    pass


class TrainingRowsRejected(EvaluationError):
    """학습 분할을 평가 연산에 넘김"""
    pass


class DegenerateCurve(EvaluationError):
    """끝점 B(0) 또는 R(0) 이 0 이라 정규화 불가"""
    pass
