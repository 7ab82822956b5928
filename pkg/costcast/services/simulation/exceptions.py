"""
시뮬레이션 관련 예외 클래스들
"""

from costcast.utils.exceptions import ValidationError


class SimulationError(ValidationError):
    """시뮬레이션 관련 기본 예외"""
    pass


class TestSetHashMismatch(SimulationError):
    """저장된 평가 표본의 해시가 현재 설정으로 만든 표본과 다름"""
    __test__ = False
