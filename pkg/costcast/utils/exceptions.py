class CostcastError(Exception):
    """
    costcast 예외의 최상위 클래스
    - 모든 커스텀 예외가 이 클래스를 상속
    - CLI 진입점의 예외 핸들러가 종료 코드로 변환
    """
    def __init__(self, message: str):
        """
        - message: 사용자에게 전달할 예외 메시지 문자열
        """
        # 예외 메시지 설정
        self.message = message
        # 상위 Exception 초기화
        super().__init__(message)


class ValidationError(CostcastError):
    """입력/설정 검증 실패 (exit code 2)"""
    pass


class InternalError(CostcastError):
    """계산 도중 발생한 내부 오류 (exit code 1)"""
    pass


class ConfigInvalid(ValidationError):
    """설정값이 잘못되었거나 데이터와 맞지 않음"""
    pass
