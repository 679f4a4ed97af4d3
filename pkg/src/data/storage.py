"""計算結果の保存 (CSV)"""

import logging
from pathlib import Path
from typing import Dict, List

import pandas as pd

from src.core.errors import ConfigError

logger = logging.getLogger(__name__)

# 浮動小数点は17桁で書き出す (読み戻すと同じ値になる)
FLOAT_FORMAT = "%.17g"


class ResultWriter:
    """曲線ファミリーごとに1つの CSV を書き出すクラス"""

    def __init__(self, out_dir: str = "out"):
        """
        Args:
            out_dir: 出力ディレクトリ
        """
        self.out_dir = Path(out_dir)
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"出力ディレクトリを作成できません: {e}", field="out_dir") from e
        self.written: List[Path] = []

    def path_for(self, name: str) -> Path:
        """表の名前から CSV のパスを作る"""
        if not name or "/" in name or "\\" in name:
            raise ConfigError(f"不正な出力名です: {name!r}")
        return self.out_dir / f"{name}.csv"

    def write(self, name: str, frame: pd.DataFrame) -> Path:
        """
        表を CSV に書き出す

        Args:
            name: 表の名前 (拡張子なし)
            frame: 書き出す表 (列名に単位を含める)

        Returns:
            書き出したファイルのパス
        """
        path = self.path_for(name)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self.written.append(path)
        logger.info(f"CSVを保存しました: {path} ({len(frame)} 行)")
        return path

    def write_all(self, tables: Dict[str, pd.DataFrame]) -> List[Path]:
        """複数の表を名前順に書き出す"""
        return [self.write(name, tables[name]) for name in sorted(tables)]

    def read(self, name: str) -> pd.DataFrame:
        """
        書き出した CSV を読み戻す

        Args:
            name: 表の名前

        Returns:
            表
        """
        path = self.path_for(name)
        if not path.exists():
            raise ConfigError(f"CSVが見つかりません: {path}")
        return pd.read_csv(path, float_precision="round_trip")

    def summary(self) -> str:
        """書き出したファイルの一覧 (標準出力向け)"""
        lines = []
        for path in self.written:
            with path.open(encoding="utf-8") as f:
                header = f.readline().rstrip("\n")
                rows = sum(1 for _ in f)
            lines.append(f"{path}\t{rows} rows\t{header}")
        return "\n".join(lines)
