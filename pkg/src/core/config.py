"""設定管理"""

import json
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import ConfigError

logger = logging.getLogger(__name__)

# 乱数シードの既定値 (再現性のため固定)
DEFAULT_SEED = 20240917


@dataclass
class AppConfig:
    """アプリケーション設定"""

    # ログ設定
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # 乱数・並列実行設定
    seed: int = DEFAULT_SEED
    jobs: int = 1
    mc_samples: int = 100_000

    # 出力設定
    out_dir: str = "out"

    # 物理モデル設定
    near_field_kappa: float = 1.0  # 近傍界境界の |k0 d| しきい値
    skin_depth_mode: str = "exact"  # "exact" または "vlf"

    def __post_init__(self):
        """初期化後の検証"""
        if self.jobs < 1:
            raise ConfigError(f"1以上が必要です (値: {self.jobs})", field="jobs")
        if self.mc_samples < 1:
            raise ConfigError(f"1以上が必要です (値: {self.mc_samples})", field="mc_samples")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"64ビット符号なし整数が必要です (値: {self.seed})", field="seed")
        if self.near_field_kappa <= 0:
            raise ConfigError(f"正の値が必要です (値: {self.near_field_kappa})", field="near_field_kappa")
        if self.skin_depth_mode not in ("exact", "vlf"):
            raise ConfigError(
                f"'exact' または 'vlf' を指定してください (値: {self.skin_depth_mode})",
                field="skin_depth_mode"
            )

    @classmethod
    def from_file(cls, config_path: Optional[Path] = None) -> 'AppConfig':
        """
        設定ファイル (JSON) から読み込み

        Args:
            config_path: 設定ファイルのパス (Noneの場合はデフォルト設定)

        Returns:
            設定インスタンス
        """
        if config_path is None:
            return cls()

        path = Path(config_path)
        try:
            data = json.loads(path.read_text(encoding="utf-8") or "{}")
        except FileNotFoundError:
            raise ConfigError(f"設定ファイルが見つかりません: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"JSONの解析に失敗しました: {e.msg} (行 {e.lineno}, 列 {e.colno})")

        if not isinstance(data, dict):
            raise ConfigError("トップレベルはオブジェクトである必要があります")

        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError("未知のキーです", field=key)

        try:
            config = cls(**data)
        except TypeError as e:
            raise ConfigError(f"値の型が不正です: {e}") from e
        logger.info(f"設定ファイルを読み込みました: {path}")
        return config

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'log_level': self.log_level,
            'log_format': self.log_format,
            'seed': self.seed,
            'jobs': self.jobs,
            'mc_samples': self.mc_samples,
            'out_dir': self.out_dir,
            'near_field_kappa': self.near_field_kappa,
            'skin_depth_mode': self.skin_depth_mode,
        }
