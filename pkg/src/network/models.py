"""多ノードネットワークのデータモデル"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from src.channel.antennas import CoilSpec, Pose, RpmaSpec
from src.channel.constants import (
    LINK_DISTANCE,
    NOISE_PSD,
    RESONANCE_FREQUENCY,
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

# シナリオファイルの現行スキーマ
SCHEMA_VERSION = 1

ORIENTATION_MODES = ("fixed", "random", "optimal_rx", "coaxial")

# 既定のSNRしきい値
DEFAULT_SNR_THRESHOLD = 1.0


@dataclass(frozen=True)
class Node:
    """ネットワークのノード"""

    id: str
    antenna: Antenna
    pose: Pose
    tx_power: float = TX_POWER  # 送信電力 (W)
    noise_psd: float = NOISE_PSD  # 雑音電力密度 (W/Hz)
    destination: Optional[str] = None  # 電力制御ゲームでの通信相手

    def __post_init__(self):
        """初期化後の検証"""
        if not self.id:
            raise DomainError("id: 空でない文字列が必要です")
        if not self.tx_power > 0:
            raise DomainError(f"tx_power: 正の値が必要です (値: {self.tx_power})")
        if not self.noise_psd > 0:
            raise DomainError(f"noise_psd: 正の値が必要です (値: {self.noise_psd})")

    @property
    def can_receive(self) -> bool:
        """受信できるか (RPMAは送信専用)"""
        return isinstance(self.antenna, CoilSpec)

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'id': self.id,
            'antenna': self.antenna.to_dict(),
            'position': list(self.pose.position),
            'axis': list(self.pose.axis),
            'tx_power': self.tx_power,
            'noise_psd': self.noise_psd,
            'destination': self.destination,
        }


@dataclass(frozen=True)
class Scenario:
    """ノード群・媒質・周波数集合・しきい値からなるシナリオ"""

    nodes: Tuple[Node, ...]
    medium: Medium = field(default_factory=Medium.default)
    frequency_set: Tuple[float, ...] = (RESONANCE_FREQUENCY,)
    snr_threshold: float = DEFAULT_SNR_THRESHOLD  # Υ_th
    orientation_mode: str = "fixed"
    fading: FadingModel = field(default_factory=FadingModel.none)

    def __post_init__(self):
        """初期化後の検証"""
        object.__setattr__(self, 'nodes', tuple(self.nodes))
        object.__setattr__(self, 'frequency_set', tuple(float(f) for f in self.frequency_set))
        ids = [node.id for node in self.nodes]
        if len(set(ids)) != len(ids):
            duplicated = sorted({i for i in ids if ids.count(i) > 1})
            raise DomainError(f"nodes: id が重複しています ({', '.join(duplicated)})")
        if not self.frequency_set:
            raise DomainError("frequency_set: 1つ以上の周波数が必要です")
        if any(not f > 0 for f in self.frequency_set):
            raise DomainError(f"frequency_set: 正の周波数が必要です (値: {list(self.frequency_set)})")
        if not self.snr_threshold > 0:
            raise DomainError(f"snr_threshold: 正の値が必要です (値: {self.snr_threshold})")
        if self.orientation_mode not in ORIENTATION_MODES:
            raise DomainError(
                f"orientation_mode: {', '.join(ORIENTATION_MODES)} のいずれかを指定してください "
                f"(値: {self.orientation_mode})"
            )
        for node in self.nodes:
            if node.destination is not None and node.destination not in ids:
                raise DomainError(f"destination: 未知のノードです ({node.id} → {node.destination})")

    @classmethod
    def default(cls) -> 'Scenario':
        """既定シナリオ (S を原点、D を60 m 先に同軸配置)"""
        source = Node(
            id="S",
            antenna=CoilSpec(radius=TX_COIL_RADIUS, turns=TX_COIL_TURNS),
            pose=Pose.in_plane((0.0, 0.0, 0.0), TX_THETA),
            destination="D",
        )
        destination = Node(
            id="D",
            antenna=CoilSpec(radius=RX_COIL_RADIUS, turns=RX_COIL_TURNS),
            pose=Pose.in_plane((LINK_DISTANCE, 0.0, 0.0), RX_THETA, mirrored=True),
        )
        return cls(nodes=(source, destination))

    def node(self, node_id: str) -> Node:
        """id からノードを取得"""
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise DomainError(f"未知のノードです: {node_id}")

    @property
    def node_ids(self) -> List[str]:
        return [node.id for node in self.nodes]


@dataclass(frozen=True)
class PathResult:
    """周波数切り替え経路の探索結果"""

    source: str
    destination: str
    nodes: Tuple[str, ...] = ()  # 経由ノード (始点・終点を含む)
    frequencies: Tuple[float, ...] = ()  # ホップごとの周波数 (Hz)
    capacities: Tuple[float, ...] = ()  # ホップごとの容量 (bit/s)
    reachable: bool = True

    @property
    def bottleneck(self) -> float:
        """ボトルネック容量 (始点=終点なら +inf、到達不能なら0)"""
        if not self.reachable:
            return 0.0
        return min(self.capacities) if self.capacities else math.inf

    @property
    def hop_count(self) -> int:
        return len(self.frequencies)

    def to_rows(self) -> List[Dict]:
        """ホップごとの行"""
        return [
            {'hop': k, 'from': self.nodes[k], 'to': self.nodes[k + 1],
             'frequency_hz': f, 'capacity_bps': c}
            for k, (f, c) in enumerate(zip(self.frequencies, self.capacities))
        ]


@dataclass(frozen=True)
class IsolationResult:
    """孤立確率のモンテカルロ推定"""

    probability: float
    std: float  # 二項分布の標準誤差
    trials: int
    density: float  # ノード密度 (個/m³)

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'density_per_m3': self.density,
            'isolation_probability': self.probability,
            'std': self.std,
            'trials': self.trials,
        }


@dataclass
class PowerAllocationResult:
    """最適応答による電力配分の結果"""

    node_ids: List[str]
    powers: List[float]  # 送信電力 (W)
    utilities: List[float]  # 最終的な効用
    trace: List[Dict] = field(default_factory=list)  # 反復ごとの更新記録
    status: str = "converged"  # "converged" または "max_iters"
    iterations: int = 0

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def power_of(self, node_id: str) -> float:
        """ノードの送信電力"""
        return self.powers[self.node_ids.index(node_id)]
