"""MI高速フェージングのモデル定義"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import integrate

from src.core.errors import DomainError, NumericError

logger = logging.getLogger(__name__)

# 数値積分の絶対許容誤差
QUAD_TOLERANCE = 1e-10


@dataclass(frozen=True)
class BcsSpec:
    """境界付きカイ二乗 (BCS) 分布のパラメータ"""

    sigma: float  # アンテナ振動強度 (基礎となる正規分布の標準偏差, rad)
    varsigma: float = 0.8  # 振動の境界 ς

    def __post_init__(self):
        """初期化後の検証"""
        if not self.sigma > 0:
            raise DomainError(f"sigma: 正の値が必要です (値: {self.sigma})")
        if not 0 < self.varsigma <= 1:
            raise DomainError(f"varsigma: (0, 1] の範囲が必要です (値: {self.varsigma})")

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {'sigma': self.sigma, 'varsigma': self.varsigma}

    @classmethod
    def from_dict(cls, data: dict) -> 'BcsSpec':
        """辞書からインスタンスを生成"""
        return cls(**data)


class FadingKind(Enum):
    """フェージングモデルの種類"""

    NONE = "none"  # 準静的
    BCS = "bcs"  # アンテナ振動 (BCS)
    UNIFORM = "uniform"  # 3次元一様ミスアライメント


@dataclass(frozen=True)
class FadingModel:
    """
    フェージングモデル (タグ付きバリアント)

    BCS の場合は送信端・受信端それぞれに振動パラメータを持てる。
    mode は "exact" (J領域で 1 − min(g², ς) を掛ける) または
    "geometric" (軸を傾き角 min(|g|, √ς) と一様方位角で回転) 。
    """

    kind: FadingKind = FadingKind.NONE
    tx: Optional[BcsSpec] = None  # 送信端の振動
    rx: Optional[BcsSpec] = None  # 受信端の振動
    mode: str = "exact"

    def __post_init__(self):
        """初期化後の検証"""
        if self.mode not in ("exact", "geometric"):
            raise DomainError(f"mode: 'exact' または 'geometric' を指定してください (値: {self.mode})")
        if self.kind is FadingKind.BCS and self.tx is None and self.rx is None:
            raise DomainError("BCSモデルには少なくとも一端の振動パラメータが必要です")
        if self.kind is not FadingKind.BCS and (self.tx is not None or self.rx is not None):
            raise DomainError(f"{self.kind.value} モデルは振動パラメータを取りません")

    @classmethod
    def none(cls) -> 'FadingModel':
        """フェージングなし"""
        return cls()

    @classmethod
    def bcs(
        cls,
        rx: Optional[BcsSpec] = None,
        tx: Optional[BcsSpec] = None,
        mode: str = "exact"
    ) -> 'FadingModel':
        """BCS振動モデル"""
        return cls(kind=FadingKind.BCS, tx=tx, rx=rx, mode=mode)

    @classmethod
    def uniform(cls) -> 'FadingModel':
        """両端の軸が単位球面上で一様"""
        return cls(kind=FadingKind.UNIFORM)

    @property
    def vibrating_ends(self) -> List[BcsSpec]:
        """振動している端のパラメータ"""
        return [spec for spec in (self.tx, self.rx) if spec is not None]

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        data = {'model': self.kind.value}
        if self.kind is FadingKind.BCS:
            data['mode'] = self.mode
            data['tx'] = self.tx.to_dict() if self.tx else None
            data['rx'] = self.rx.to_dict() if self.rx else None
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'FadingModel':
        """辞書からインスタンスを生成"""
        kind = FadingKind(data.get('model', 'none'))
        if kind is FadingKind.BCS:
            tx = BcsSpec.from_dict(data['tx']) if data.get('tx') else None
            rx = BcsSpec.from_dict(data['rx']) if data.get('rx') else None
            return cls.bcs(rx=rx, tx=tx, mode=data.get('mode', 'exact'))
        return cls(kind=kind)


@dataclass
class FadingDistribution:
    """
    正規化フェージング利得 X (1 が公称値) の混合分布

    点質量と連続密度の和で表す。singular_end は密度が 1/√ の特異性を持つ端
    ("lower" / "upper") で、積分時に u = √(x − lo) または u = √(hi − x) で変数変換する。
    """

    point_masses: List[Tuple[float, float]] = field(default_factory=list)  # (値, 重み)
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support: Tuple[float, float] = (1.0, 1.0)
    cdf_function: Optional[Callable[[float], float]] = None
    singular_end: Optional[str] = None
    breakpoints: Tuple[float, ...] = ()  # 変数変換後の u 座標での折れ点

    def _integrate(self, func: Callable[[np.ndarray], np.ndarray]) -> float:
        """連続部分について ∫ func(x) p(x) dx を数値積分"""
        if self.density is None:
            return 0.0
        lo, hi = self.support
        if self.singular_end == "upper":
            def integrand(u):
                x = hi - u * u
                return func(x) * self.density(x) * 2 * u
            span = math.sqrt(hi - lo)
        elif self.singular_end == "lower":
            def integrand(u):
                x = lo + u * u
                return func(x) * self.density(x) * 2 * u
            span = math.sqrt(hi - lo)
        else:
            def integrand(u):
                return func(lo + u) * self.density(lo + u)
            span = hi - lo

        points = [p for p in self.breakpoints if 0 < p < span] or None
        value, abserr = integrate.quad(
            integrand, 0.0, span, points=points, epsabs=QUAD_TOLERANCE, epsrel=1e-10, limit=200
        )
        if abserr > 1e-6 * max(1.0, abs(value)):
            raise NumericError(f"数値積分が収束しません (推定誤差: {abserr:.3g})")
        return float(value)

    def expect(self, func: Callable[[np.ndarray], np.ndarray]) -> float:
        """
        期待値 E[func(X)]

        Args:
            func: 評価する関数

        Returns:
            期待値
        """
        total = sum(w * float(func(np.float64(v))) for v, w in self.point_masses)
        return total + self._integrate(func)

    def total_mass(self) -> float:
        """点質量と連続部分の全確率"""
        return self.expect(lambda x: np.ones_like(x))

    def mean(self) -> float:
        """平均 E[X]"""
        return self.expect(lambda x: x)

    def cdf(self, x: float) -> float:
        """累積分布関数 P[X <= x]"""
        if self.cdf_function is not None:
            return float(self.cdf_function(x))
        mass = sum(w for v, w in self.point_masses if v <= x)
        lo, hi = self.support
        if self.density is None or x <= lo:
            return mass
        clipped = min(x, hi)
        value, _ = integrate.quad(self.density, lo, clipped, epsabs=QUAD_TOLERANCE, limit=200)
        return mass + value

    def prob_below(self, x: float) -> float:
        """P[X < x] (x 上の点質量を含まない)"""
        at_x = sum(w for v, w in self.point_masses if v == x)
        return self.cdf(x) - at_x


@dataclass(frozen=True)
class MetricResult:
    """フェージング平均した性能指標"""

    value: float  # 推定値
    std: float = 0.0  # モンテカルロ推定の標準誤差 (解析計算では0)
    method: str = "analytic"  # "analytic" または "monte_carlo"

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {'value': self.value, 'std': self.std, 'method': self.method}
