"""
포레스트 엔진 관련 예외 클래스들
"""

from costcast.utils.exceptions import ConfigInvalid, InternalError, ValidationError


class ForestError(ValidationError):
    """포레스트 관련 기본 예외"""
    pass


class DegenerateNode(ForestError):
    """처치(instrument) 변동이 전혀 없어 분할/추정 불가"""
    pass


class ModeMismatch(ForestError):
    """요청한 예측이 포레스트 모드와 맞지 않음"""
    pass


class DimensionMismatch(ForestError):
    """질의 공변량 차원이 학습 차원과 다름"""
    pass


class ZeroDenominator(ForestError):
    """질의점 주변에 비용-처치 공분산이 없음 (Cov(C,W) ~ 0)"""
    pass


class EmptyLeaf(InternalError):
    """추정 절반 구성원이 없는 리프 (min_node_size >= 1이면 발생하지 않아야 함)"""
    pass
