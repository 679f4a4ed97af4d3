"""複数コイル系のKVL連立方程式"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.channel.antennas import CoilSpec, Pose, coil_impedance, mutual_inductance
from src.channel.constants import KVL_CONDITION_LIMIT
from src.channel.medium import Medium
from src.core.errors import DomainError, NumericError, SingularSystemError

logger = logging.getLogger(__name__)

# 解の残差 ‖Z·i − u‖/‖u‖ の許容値
RESIDUAL_TOLERANCE = 1e-10


@dataclass
class KvlSystem:
    """
    n個のコイルからなる回路系

    対角要素は各コイルのインピーダンス Z_LC (受動リレーも含め R_L 込み)、
    非対角要素は j2πf M_kl。coupling_mask で結合を残す組を指定できる。
    """

    coils: List[CoilSpec]
    poses: List[Pose]
    voltages: np.ndarray  # 各コイルの駆動電圧 (V, 複素)
    frequency: float  # 周波数 (Hz)
    medium: Medium = field(default_factory=Medium.default)
    coupling_mask: Optional[np.ndarray] = None  # 結合を残す組 (n×n, bool)
    skin_mode: str = "exact"

    def __post_init__(self):
        """初期化後の検証"""
        n = len(self.coils)
        if n < 2:
            raise DomainError(f"コイルは2個以上必要です (個数: {n})")
        if len(self.poses) != n:
            raise DomainError(f"poses の数がコイル数と一致しません ({len(self.poses)} != {n})")
        self.voltages = np.asarray(self.voltages, dtype=complex)
        if self.voltages.shape != (n,):
            raise DomainError(f"voltages の形状が不正です: {self.voltages.shape}")
        if not np.any(self.voltages):
            raise DomainError("少なくとも1つのコイルを駆動する必要があります")
        if self.coupling_mask is not None:
            self.coupling_mask = np.asarray(self.coupling_mask, dtype=bool)
            if self.coupling_mask.shape != (n, n):
                raise DomainError(f"coupling_mask の形状が不正です: {self.coupling_mask.shape}")

    @property
    def size(self) -> int:
        return len(self.coils)

    def mutual_matrix(self) -> np.ndarray:
        """相互インダクタンス行列 M (対角は0)"""
        n = self.size
        m = np.zeros((n, n))
        for k in range(n):
            for l in range(k + 1, n):
                if self.coupling_mask is not None and not self.coupling_mask[k, l]:
                    continue
                value = mutual_inductance(
                    self.coils[k], self.coils[l], self.poses[k], self.poses[l],
                    self.medium, self.frequency, self.skin_mode
                ).value
                m[k, l] = m[l, k] = value
        return m

    def impedance_matrix(self) -> np.ndarray:
        """インピーダンス行列 Z"""
        z = 1j * 2 * math.pi * self.frequency * self.mutual_matrix()
        for k, coil in enumerate(self.coils):
            z[k, k] = coil_impedance(coil, self.frequency)
        return z


def _worst_pair(z: np.ndarray) -> tuple:
    """最小特異値の右特異ベクトルで成分が大きい2コイル"""
    _, _, vh = np.linalg.svd(z)
    k, l = np.argsort(np.abs(vh[-1]), kind="stable")[-2:]
    return (int(min(k, l)), int(max(k, l)))


def kvl_solve(system: KvlSystem) -> np.ndarray:
    """
    Z·i = u を解いて各コイルの電流を求める

    Args:
        system: 回路系

    Returns:
        複素電流 (A)
    """
    z = system.impedance_matrix()
    condition = np.linalg.cond(z)
    if not condition <= KVL_CONDITION_LIMIT:
        pair = _worst_pair(z)
        raise SingularSystemError(
            f"インピーダンス行列が特異に近い状態です (条件数 {condition:.3g})。コイル {pair[0]} と {pair[1]} を確認してください",
            pair=pair,
        )
    currents = np.linalg.solve(z, system.voltages)
    residual = np.linalg.norm(z @ currents - system.voltages) / np.linalg.norm(system.voltages)
    if residual > RESIDUAL_TOLERANCE:
        raise NumericError(f"KVLの解の残差が大きすぎます (残差 {residual:.3g})")
    logger.debug(f"KVLを解きました: {system.size} コイル, 条件数 {condition:.3g}")
    return currents


def link_power_gain(system: KvlSystem, currents: np.ndarray, tx: int = 0, rx: int = -1) -> float:
    """
    送受信間の電力利得 |I_rx|² R_L / (|I_tx| |U_tx|)

    Args:
        system: 回路系
        currents: kvl_solve の解
        tx: 送信コイルのインデックス
        rx: 受信コイルのインデックス

    Returns:
        電力利得
    """
    u_tx = system.voltages[tx]
    if u_tx == 0:
        raise DomainError(f"コイル {tx} は駆動されていません")
    load = system.coils[rx].load_resistance
    return float(abs(currents[rx]) ** 2 * load / (abs(currents[tx]) * abs(u_tx)))


def relay_system(
    tx: CoilSpec,
    rx: CoilSpec,
    relay: CoilSpec,
    pose_tx: Pose,
    pose_rx: Pose,
    relay_poses: Sequence[Pose],
    frequency: float,
    medium: Medium,
    voltage: complex = 1.0
) -> KvlSystem:
    """
    送信コイル・受動リレー群・受信コイルの回路系 (全コイルが R_L 込みの Z_LC)

    コイルの順序は [送信, リレー..., 受信]。
    """
    coils = [tx] + [relay] * len(relay_poses) + [rx]
    poses = [pose_tx] + list(relay_poses) + [pose_rx]
    voltages = np.zeros(len(coils), dtype=complex)
    voltages[0] = voltage
    return KvlSystem(coils=coils, poses=poses, voltages=voltages, frequency=frequency,
                     medium=medium)


def hexagonal_array(center: Sequence[float], spacing: float, axis: Sequence[float] = (0.0, 0.0, 1.0)) -> List[Pose]:
    """
    中心と正六角形の頂点に並べた7個のリレー姿勢

    頂点は軸に直交する平面内に置く。

    Args:
        center: 中心位置 (m)
        spacing: 中心から頂点までの距離 (m)
        axis: 全リレー共通の軸

    Returns:
        姿勢のリスト (先頭が中心)
    """
    if not spacing > 0:
        raise DomainError(f"spacing は正の値が必要です (値: {spacing})")
    pose = Pose.normalized(center, axis)
    n = pose.axis_array
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    poses = [pose]
    for k in range(6):
        angle = k * math.pi / 3
        position = pose.position_array + spacing * (math.cos(angle) * e1 + math.sin(angle) * e2)
        poses.append(pose.moved_to(tuple(position)))
    return poses
