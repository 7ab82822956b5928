"""
데이터 분할 관련 예외 클래스들
"""

from costcast.utils.exceptions import ValidationError


class SplitError(ValidationError):
    """데이터 분할 관련 기본 예외"""
    pass


class TooFewSamples(SplitError):
    """요청한 fold/분할을 만들기에 표본이 부족함"""
    pass


class InvalidFraction(SplitError):
    """test_fraction이 (0,1) 밖"""
    pass
