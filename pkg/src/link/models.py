"""リンク単位の構成と計算結果のデータモデル"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from src.channel.antennas import CoilSpec, Pose, RpmaSpec
from src.channel.constants import (
    LINK_DISTANCE,
    NOISE_PSD,
    RX_COIL_RADIUS,
    RX_COIL_TURNS,
    RX_THETA,
    TX_COIL_RADIUS,
    TX_COIL_TURNS,
    TX_POWER,
    TX_THETA,
)
from src.channel.medium import Medium
from src.core.errors import DomainError
from src.fading.models import FadingModel

Antenna = Union[CoilSpec, RpmaSpec]


@dataclass(frozen=True)
class LinkSpec:
    """
    送信アンテナ・受信コイル・媒質・電力からなる1本のリンク

    送信PSD (tx_psd) を省略した場合は tx_power を数値計算した3dB帯域幅で割って求める。
    動作周波数は受信コイルの共振周波数。
    """

    tx: Antenna = field(default_factory=lambda: CoilSpec(radius=TX_COIL_RADIUS, turns=TX_COIL_TURNS))
    rx: CoilSpec = field(default_factory=lambda: CoilSpec(radius=RX_COIL_RADIUS, turns=RX_COIL_TURNS))
    pose_tx: Pose = field(default_factory=lambda: Pose.in_plane((0.0, 0.0, 0.0), TX_THETA))
    pose_rx: Pose = field(
        default_factory=lambda: Pose.in_plane((LINK_DISTANCE, 0.0, 0.0), RX_THETA, mirrored=True)
    )
    medium: Medium = field(default_factory=Medium.default)
    tx_power: float = TX_POWER  # 送信電力 P_S (W)
    noise_psd: float = NOISE_PSD  # 雑音電力密度 N_of (W/Hz)
    tx_psd: Optional[float] = None  # 送信電力密度 P_Sf (W/Hz)
    fading: FadingModel = field(default_factory=FadingModel.none)

    def __post_init__(self):
        """初期化後の検証"""
        if not self.tx_power > 0:
            raise DomainError(f"tx_power: 正の値が必要です (値: {self.tx_power})")
        if not self.noise_psd > 0:
            raise DomainError(f"noise_psd: 正の値が必要です (値: {self.noise_psd})")
        if self.tx_psd is not None and not self.tx_psd > 0:
            raise DomainError(f"tx_psd: 正の値が必要です (値: {self.tx_psd})")
        if self.distance == 0:
            raise DomainError("送受信アンテナの位置が一致しています")

    @classmethod
    def default(cls) -> 'LinkSpec':
        """既定パラメータのリンク (距離60 m、同軸配置)"""
        return cls()

    @property
    def frequency(self) -> float:
        """動作周波数 f0 (Hz)"""
        return self.rx.tuned_frequency

    @property
    def distance(self) -> float:
        """送受信間距離 (m)"""
        return float(np.linalg.norm(self.pose_rx.position_array - self.pose_tx.position_array))

    def with_distance(self, distance: float) -> 'LinkSpec':
        """視線方向を保ったまま受信側を距離 distance に移動"""
        if not distance > 0:
            raise DomainError(f"距離は正の値が必要です (値: {distance})")
        direction = (self.pose_rx.position_array - self.pose_tx.position_array) / self.distance
        position = self.pose_tx.position_array + distance * direction
        return replace(self, pose_rx=self.pose_rx.moved_to(tuple(position)))

    def with_frequency(self, f0: float) -> 'LinkSpec':
        """両端のコイルを f0 に再同調 (RPMAは回転周波数を f0 とする)"""
        tx = self.tx.retuned(f0) if isinstance(self.tx, CoilSpec) else self.tx
        return replace(self, tx=tx, rx=self.rx.retuned(f0))

    def with_medium(self, medium: Medium) -> 'LinkSpec':
        """媒質を変更"""
        return replace(self, medium=medium)

    def with_rx_theta(self, theta: float) -> 'LinkSpec':
        """受信軸を同一平面内で角度 theta (鏡映) に向ける"""
        return replace(self, pose_rx=Pose.in_plane(self.pose_rx.position, theta, mirrored=True))

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'tx': self.tx.to_dict(),
            'rx': self.rx.to_dict(),
            'pose_tx': self.pose_tx.to_dict(),
            'pose_rx': self.pose_rx.to_dict(),
            'medium': self.medium.to_dict(),
            'tx_power': self.tx_power,
            'noise_psd': self.noise_psd,
            'tx_psd': self.tx_psd,
            'fading': self.fading.to_dict(),
        }


@dataclass(frozen=True)
class BandwidthResult:
    """帯域幅の計算結果"""

    method: str  # "numeric" / "dipole_closed" / "coupling"
    value: float  # 帯域幅 B_w (Hz)
    f_lo: Optional[float] = None  # 下側の半値周波数 (Hz)
    f_hi: Optional[float] = None  # 上側の半値周波数 (Hz)
    multiple_crossings: bool = False  # 半値点を複数回横切ったか

    def __post_init__(self):
        """初期化後の検証"""
        if not self.value > 0 or not math.isfinite(self.value):
            raise DomainError(f"帯域幅は正の有限値が必要です (値: {self.value})")

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'method': self.method,
            'bandwidth_hz': self.value,
            'f_lo_hz': self.f_lo,
            'f_hi_hz': self.f_hi,
            'multiple_crossings': self.multiple_crossings,
        }


@dataclass(frozen=True)
class RangeResult:
    """通信距離の計算結果"""

    distance: float  # 通信距離 d* (m)
    threshold: float  # SNRしきい値 Υ_th
    frequency: float  # 周波数 (Hz)
    capped: bool = False  # 探索上限でもしきい値を上回った

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'distance_m': self.distance,
            'threshold': self.threshold,
            'frequency_hz': self.frequency,
            'capped': self.capped,
        }


def ebn0_grid_db(start: float = 0.0, stop: float = 12.0, step: float = 1.0) -> Sequence[float]:
    """Eb/N0 (dB) の等間隔グリッド"""
    return list(np.arange(start, stop + step / 2, step))
