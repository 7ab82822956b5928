"""
추정기 관련 예외 클래스들
"""

from costcast.utils.exceptions import ValidationError


class EstimatorError(ValidationError):
    """추정기 관련 기본 예외"""
    pass


class SingularMoment(EstimatorError):
    """
    fold 모멘트 행렬의 조건수가 임계값을 넘음
    - fold: 문제 fold 번호
    - cond: 조건수
    """
    def __init__(self, fold: int, cond: float):
        self.fold = fold
        self.cond = cond
        super().__init__(f"moment matrix of fold {fold} is near-singular (condition number {cond:.3g})")


class FoldTooSmall(EstimatorError):
    """fold 행 수가 계수 수보다 적음"""
    pass


class NoTreatedUnits(EstimatorError):
    """비용 모델을 학습할 처치군 행이 부족함"""
    pass


class MissingZeroControlCost(EstimatorError):
    """direct_ratio는 zero_control_cost 데이터셋에서만 정의됨"""
    pass
