"""伝搬媒質の電磁気的な基本量 (波数・表皮深さ・近傍界境界)"""

import logging
from dataclasses import dataclass

import numpy as np

from src.core.errors import DomainError
from .constants import (
    DEFAULT_EPSILON,
    DEFAULT_MU,
    DEFAULT_SIGMA,
    DRY_SOIL_REL_EPSILON,
    DRY_SOIL_SIGMA,
    EPS0,
    MU0,
    SEA_WATER_REL_EPSILON,
    SEA_WATER_SIGMA,
    WET_SOIL_REL_EPSILON,
    WET_SOIL_SIGMA,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Medium:
    """伝搬媒質"""

    mu: float = DEFAULT_MU  # 透磁率 (H/m)
    epsilon: float = DEFAULT_EPSILON  # 誘電率 (F/m)
    sigma: float = DEFAULT_SIGMA  # 導電率 (S/m)
    name: str = ""  # 表示名

    def __post_init__(self):
        """初期化後の検証"""
        if not self.mu > 0:
            raise DomainError(f"mu: 正の値が必要です (値: {self.mu})")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon: 正の値が必要です (値: {self.epsilon})")
        if not self.sigma >= 0:
            raise DomainError(f"sigma: 0以上が必要です (値: {self.sigma})")

    @classmethod
    def default(cls) -> 'Medium':
        """既定パラメータの媒質"""
        return cls(name="default")

    @classmethod
    def air(cls) -> 'Medium':
        """空気 (損失なし)"""
        return cls(mu=MU0, epsilon=EPS0, sigma=0.0, name="air")

    @classmethod
    def dry_soil(cls) -> 'Medium':
        """乾燥土壌"""
        return cls(mu=MU0, epsilon=DRY_SOIL_REL_EPSILON * EPS0, sigma=DRY_SOIL_SIGMA, name="dry_soil")

    @classmethod
    def wet_soil(cls) -> 'Medium':
        """湿潤土壌"""
        return cls(mu=MU0, epsilon=WET_SOIL_REL_EPSILON * EPS0, sigma=WET_SOIL_SIGMA, name="wet_soil")

    @classmethod
    def sea_water(cls) -> 'Medium':
        """海水"""
        return cls(mu=MU0, epsilon=SEA_WATER_REL_EPSILON * EPS0, sigma=SEA_WATER_SIGMA, name="sea_water")

    @classmethod
    def preset(cls, name: str) -> 'Medium':
        """
        名前からプリセットを取得

        Args:
            name: "default", "air", "dry_soil", "wet_soil", "sea_water"

        Returns:
            媒質インスタンス
        """
        presets = {
            "default": cls.default,
            "air": cls.air,
            "dry_soil": cls.dry_soil,
            "wet_soil": cls.wet_soil,
            "sea_water": cls.sea_water,
        }
        if name not in presets:
            raise DomainError(f"未知の媒質プリセットです: {name}")
        return presets[name]()

    def with_sigma(self, sigma: float) -> 'Medium':
        """導電率だけを変更した媒質を返す"""
        return Medium(mu=self.mu, epsilon=self.epsilon, sigma=sigma, name=f"sigma={sigma:g}")

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'mu': self.mu,
            'epsilon': self.epsilon,
            'sigma': self.sigma,
            'name': self.name,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'Medium':
        """辞書からインスタンスを生成"""
        return cls(**data)


def _check_frequency(f) -> None:
    if np.any(np.asarray(f) <= 0):
        raise DomainError(f"周波数は正の値が必要です (値: {f})")


def wavenumber(f, medium: Medium):
    """
    複素波数 k0 = 2πf √(μ(ε + jσ/(2πf)))

    主値の平方根を取るため Im(k0) >= 0 となる。

    Args:
        f: 周波数 (Hz), スカラーまたは配列
        medium: 媒質

    Returns:
        複素波数 (1/m)
    """
    _check_frequency(f)
    omega = 2 * np.pi * np.asarray(f, dtype=float)
    k = omega * np.sqrt(medium.mu * (medium.epsilon + 1j * medium.sigma / omega))
    return complex(k) if k.ndim == 0 else k


def skin_depth(f, medium: Medium, mode: str = "exact"):
    """
    表皮深さ

    Args:
        f: 周波数 (Hz), スカラーまたは配列
        medium: 媒質
        mode: "exact" (完全な式) または "vlf" (σ >> 2πfε の近似)

    Returns:
        表皮深さ (m)。σ=0 の場合は +inf
    """
    _check_frequency(f)
    f_arr = np.asarray(f, dtype=float)
    if medium.sigma == 0:
        delta = np.full_like(f_arr, np.inf)
    elif mode == "vlf":
        delta = np.sqrt(1.0 / (np.pi * f_arr * medium.mu * medium.sigma))
    elif mode == "exact":
        omega = 2 * np.pi * f_arr
        loss = medium.sigma / (omega * medium.epsilon)
        # sqrt(1+x^2)-1 を桁落ちしない形で評価
        excess = loss ** 2 / (np.sqrt(1.0 + loss ** 2) + 1.0)
        delta = 1.0 / (omega * np.sqrt(medium.mu * medium.epsilon / 2.0 * excess))
    else:
        raise DomainError(f"未知の表皮深さモードです: {mode}")
    return float(delta) if delta.ndim == 0 else delta


def near_field_boundary(f, medium: Medium, kappa: float = 1.0):
    """
    |k0 d| が kappa に達する距離 (近傍界の境界)

    Args:
        f: 周波数 (Hz)
        medium: 媒質
        kappa: しきい値

    Returns:
        境界距離 (m)
    """
    if kappa <= 0:
        raise DomainError(f"kappa は正の値が必要です (値: {kappa})")
    return kappa / np.abs(wavenumber(f, medium))
