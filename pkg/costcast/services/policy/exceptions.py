"""
정책 계산 관련 예외 클래스들
"""

from costcast.utils.exceptions import ValidationError


class PolicyError(ValidationError):
    """정책 계산 관련 기본 예외"""
    pass


class NonpositiveCost(PolicyError):
    """기대 비용이 0 이하인 단위 (무료 단위는 호출자가 먼저 걸러야 함)"""
    pass


class NonpositiveBudget(PolicyError):
    """예산이 0 이하"""
    pass


class LengthMismatch(PolicyError):
    """입력 벡터 길이 불일치"""
    pass
