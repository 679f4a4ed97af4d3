"""例外定義"""

from typing import Optional


class MicError(Exception):
    """ライブラリ共通の基底例外"""

    exit_code = 3


class UsageError(MicError):
    """コマンドラインの使い方の誤り"""

    exit_code = 1


class ConfigError(MicError):
    """設定ファイル・シナリオファイルの誤り"""

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None):
        """
        Args:
            message: エラーメッセージ
            field: 問題のあるフィールドの位置 (例: "nodes[1].antenna.radius")
        """
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DomainError(MicError, ValueError):
    """物理量・引数の定義域外"""


class NumericError(MicError, ArithmeticError):
    """数値計算の失敗 (収束しない、交点がない、オーバーフローなど)"""


class SingularSystemError(NumericError):
    """KVL連立方程式の係数行列が特異に近い"""

    def __init__(self, message: str, pair: Optional[tuple] = None):
        """
        Args:
            message: エラーメッセージ
            pair: 退化しているコイルの組 (インデックス)
        """
        self.pair = pair
        super().__init__(message)
