"""アンテナ (コイル・RPMA) の構成パラメータと回路量"""

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from src.core.errors import DomainError
from .constants import (
    LOAD_RESISTANCE,
    MU0,
    RESONANCE_FREQUENCY,
    RPMA_EFFICIENCY,
    RPMA_FRICTION_CORNER,
    RPMA_FRICTION_TORQUE,
    RPMA_MOMENT_OF_INERTIA,
    RPMA_RAMP_STEP,
    RPMA_RATED_ACCELERATION,
    RPMA_REMANENCE,
    RPMA_VOLUME,
    TX_COIL_RADIUS,
    TX_COIL_TURNS,
    WIRE_RADIUS,
    WIRE_RESISTANCE_PER_M,
)
from .medium import Medium, skin_depth

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoilSpec:
    """コイルアンテナの構成"""

    radius: float = TX_COIL_RADIUS  # コイル半径 a (m)
    turns: int = TX_COIL_TURNS  # 巻数 N
    wire_resistance_per_m: float = WIRE_RESISTANCE_PER_M  # 導線の単位長抵抗 (Ω/m)
    wire_radius: float = WIRE_RADIUS  # 導線半径 (m)
    load_resistance: float = LOAD_RESISTANCE  # 負荷抵抗 R_L (Ω)
    tuned_frequency: float = RESONANCE_FREQUENCY  # 共振周波数 f0 (Hz)

    def __post_init__(self):
        """初期化後の検証"""
        if not self.radius > 0:
            raise DomainError(f"radius: 正の値が必要です (値: {self.radius})")
        if isinstance(self.turns, bool) or int(self.turns) != self.turns or self.turns < 1:
            raise DomainError(f"turns: 1以上の整数が必要です (値: {self.turns})")
        if not self.wire_resistance_per_m >= 0:
            raise DomainError(f"wire_resistance_per_m: 0以上が必要です (値: {self.wire_resistance_per_m})")
        if not 0 < self.wire_radius < self.radius:
            raise DomainError(f"wire_radius: 0 < r_w < a が必要です (値: {self.wire_radius})")
        if not self.load_resistance > 0:
            raise DomainError(f"load_resistance: 正の値が必要です (値: {self.load_resistance})")
        if not self.tuned_frequency > 0:
            raise DomainError(f"tuned_frequency: 正の値が必要です (値: {self.tuned_frequency})")

    def retuned(self, f0: float) -> 'CoilSpec':
        """共振周波数だけを変更したコイルを返す"""
        return CoilSpec(
            radius=self.radius,
            turns=self.turns,
            wire_resistance_per_m=self.wire_resistance_per_m,
            wire_radius=self.wire_radius,
            load_resistance=self.load_resistance,
            tuned_frequency=f0,
        )

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'type': 'coil',
            'radius': self.radius,
            'turns': self.turns,
            'wire_resistance_per_m': self.wire_resistance_per_m,
            'wire_radius': self.wire_radius,
            'load_resistance': self.load_resistance,
            'tuned_frequency': self.tuned_frequency,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'CoilSpec':
        """辞書からインスタンスを生成"""
        data = {k: v for k, v in data.items() if k != 'type'}
        return cls(**data)


def default_ramp_time() -> float:
    """定格加速度で RPMA_RAMP_STEP だけ回転周波数を上げるのに要する時間 (s)"""
    return RPMA_RAMP_STEP / RPMA_RATED_ACCELERATION


@dataclass(frozen=True)
class RpmaSpec:
    """回転永久磁石アンテナ (RPMA) の構成"""

    remanence: float = RPMA_REMANENCE  # 残留磁束密度 B_rm (T)
    volume: float = RPMA_VOLUME  # 磁石体積 V_m (m^3)
    efficiency: float = RPMA_EFFICIENCY  # エネルギー変換効率 η
    friction_torque: float = RPMA_FRICTION_TORQUE  # 摩擦トルク τ_fr (N·m)
    moment_of_inertia: float = RPMA_MOMENT_OF_INERTIA  # 慣性モーメント I_nr (kg·m^2)
    ramp_time: float = field(default_factory=default_ramp_time)  # 立ち上がり時間 dt (s)
    friction_corner: float = RPMA_FRICTION_CORNER  # 摩擦損失係数のコーナー周波数 f_c (Hz)

    def __post_init__(self):
        """初期化後の検証"""
        if not self.remanence >= 0:
            raise DomainError(f"remanence: 0以上が必要です (値: {self.remanence})")
        for name in ('volume', 'moment_of_inertia', 'ramp_time', 'friction_corner'):
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f"{name}: 正の値が必要です (値: {value})")
        if not 0 < self.efficiency <= 1:
            raise DomainError(f"efficiency: (0, 1] の範囲が必要です (値: {self.efficiency})")
        if not self.friction_torque >= 0:
            raise DomainError(f"friction_torque: 0以上が必要です (値: {self.friction_torque})")

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'type': 'rpma',
            'remanence': self.remanence,
            'volume': self.volume,
            'efficiency': self.efficiency,
            'friction_torque': self.friction_torque,
            'moment_of_inertia': self.moment_of_inertia,
            'ramp_time': self.ramp_time,
            'friction_corner': self.friction_corner,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'RpmaSpec':
        """辞書からインスタンスを生成"""
        data = {k: v for k, v in data.items() if k != 'type'}
        return cls(**data)


def _as_vector(values: Sequence[float], name: str) -> Tuple[float, float, float]:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: 有限な3次元ベクトルが必要です (値: {values})")
    return (float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class Pose:
    """アンテナの位置と軸の向き"""

    position: Tuple[float, float, float] = (0.0, 0.0, 0.0)  # 位置 (m)
    axis: Tuple[float, float, float] = (1.0, 0.0, 0.0)  # コイル法線 / 回転軸 (単位ベクトル)

    def __post_init__(self):
        """初期化後の検証"""
        object.__setattr__(self, 'position', _as_vector(self.position, "position"))
        object.__setattr__(self, 'axis', _as_vector(self.axis, "axis"))
        norm = math.sqrt(sum(c * c for c in self.axis))
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"axis: 単位ベクトルが必要です (ノルム: {norm})")

    @classmethod
    def normalized(cls, position: Sequence[float], axis: Sequence[float]) -> 'Pose':
        """軸を正規化して生成"""
        vec = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise DomainError("axis: ゼロベクトルは向きになりません")
        return cls(position=tuple(position), axis=tuple(vec / norm))

    @classmethod
    def in_plane(cls, position: Sequence[float], theta: float, mirrored: bool = False) -> 'Pose':
        """
        視線方向 (+x) と鉛直方向 (+z) が張る平面内で軸を傾けた姿勢

        受信側は mirrored=True とすると、偏波係数が
        2cosθ_S cosθ_D + sinθ_S sinθ_D の形になる。

        Args:
            position: 位置 (m)
            theta: +x からの角度 (rad)
            mirrored: 角度を -θ 側に取る

        Returns:
            姿勢
        """
        s = -math.sin(theta) if mirrored else math.sin(theta)
        c = math.cos(theta)
        norm = math.hypot(c, s)
        return cls(position=tuple(position), axis=(c / norm, 0.0, s / norm))

    @property
    def position_array(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)

    @property
    def axis_array(self) -> np.ndarray:
        return np.asarray(self.axis, dtype=float)

    def moved_to(self, position: Sequence[float]) -> 'Pose':
        """向きを保ったまま位置を変更"""
        return Pose(position=tuple(position), axis=self.axis)

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {'position': list(self.position), 'axis': list(self.axis)}

    @classmethod
    def from_dict(cls, data: dict) -> 'Pose':
        """辞書からインスタンスを生成"""
        return cls(position=tuple(data['position']), axis=tuple(data['axis']))


def coil_resistance(coil: CoilSpec) -> float:
    """導線抵抗 R_c = ρ_w · 2πa · N (Ω)"""
    return coil.wire_resistance_per_m * 2 * math.pi * coil.radius * coil.turns


def coil_inductance(coil: CoilSpec) -> float:
    """多巻円形ループの自己インダクタンス L = μ0 N² a (ln(8a/r_w) − 2) (H)"""
    return MU0 * coil.turns ** 2 * coil.radius * (math.log(8 * coil.radius / coil.wire_radius) - 2)


def matching_capacitance(coil: CoilSpec) -> float:
    """f0 で共振させる整合コンデンサ容量 C = 1/((2πf0)² L) (F)"""
    return 1.0 / ((2 * math.pi * coil.tuned_frequency) ** 2 * coil_inductance(coil))


def quality_factor(coil: CoilSpec) -> float:
    """負荷込みのQ値 Q = 2πf0 L / (R_c + R_L)"""
    return 2 * math.pi * coil.tuned_frequency * coil_inductance(coil) / (
        coil_resistance(coil) + coil.load_resistance
    )


def coil_impedance(coil: CoilSpec, f):
    """
    コイル回路のインピーダンス Z = j2πfL + 1/(j2πfC) + R_c + R_L

    Args:
        coil: コイル
        f: 周波数 (Hz), スカラーまたは配列

    Returns:
        複素インピーダンス (Ω)
    """
    if np.any(np.asarray(f) <= 0):
        raise DomainError(f"周波数は正の値が必要です (値: {f})")
    omega = 2 * np.pi * np.asarray(f, dtype=float)
    L = coil_inductance(coil)
    # 共振点で虚部が厳密に0になるよう (ω² − ω0²) の形で評価
    omega0_sq = (2 * np.pi * coil.tuned_frequency) ** 2
    z = 1j * L * (omega ** 2 - omega0_sq) / omega + coil_resistance(coil) + coil.load_resistance
    return complex(z) if np.ndim(z) == 0 else z


@dataclass(frozen=True)
class MutualInductance:
    """相互インダクタンスの計算結果"""

    value: float  # 符号付き相互インダクタンス (H)
    distance: float  # コイル間距離 (m)
    weak_coupling: bool  # 弱結合の前提 (d > 半径) を満たすか

    def __float__(self) -> float:
        return self.value


def mutual_inductance(
    tx: CoilSpec,
    rx: CoilSpec,
    pose_tx: Pose,
    pose_rx: Pose,
    medium: Medium,
    f: float,
    skin_mode: str = "exact"
) -> MutualInductance:
    """
    磁気双極子近似の相互インダクタンス

    M = μ π a_tx² a_rx² N_tx N_rx 𝒥 e^{−d/δ} / (4 d³)

    Args:
        tx: 送信コイル
        rx: 受信コイル
        pose_tx: 送信コイルの姿勢
        pose_rx: 受信コイルの姿勢
        medium: 媒質
        f: 周波数 (Hz)
        skin_mode: 表皮深さの計算モード

    Returns:
        相互インダクタンスと妥当性フラグ
    """
    # 循環参照を避けるため関数内で読み込む
    from .gain import polarization_factor

    d = float(np.linalg.norm(pose_rx.position_array - pose_tx.position_array))
    j_signed = polarization_factor(pose_tx, pose_rx)
    delta = skin_depth(f, medium, mode=skin_mode)
    eddy_amplitude = math.exp(-d / delta)
    value = (
        medium.mu * math.pi * tx.radius ** 2 * rx.radius ** 2 * tx.turns * rx.turns
        * j_signed * eddy_amplitude / (4 * d ** 3)
    )
    weak = d > max(tx.radius, rx.radius)
    if not weak:
        logger.warning(f"弱結合の前提を満たしません: d={d:.3g} m <= 半径 {max(tx.radius, rx.radius):.3g} m")
    return MutualInductance(value=value, distance=d, weak_coupling=weak)


def rpma_moment(rpma: RpmaSpec) -> float:
    """単一磁石の磁気モーメント |m| = B_rm V_m / μ0 (A·m²)"""
    return rpma.remanence * rpma.volume / MU0


@dataclass(frozen=True)
class RpmaPower:
    """RPMAの入力電力"""

    power: float  # 入力電力 (W)
    inertia_share: float  # 慣性トルクの割合 τ_nr / (τ_fr + τ_nr)


def rpma_input_power(rpma: RpmaSpec, f: float) -> RpmaPower:
    """
    RPMAの入力電力 P = (τ_fr + τ_nr)·2πf/η, τ_nr = I_nr·2πf/dt

    Args:
        rpma: RPMAの構成
        f: 回転周波数 (Hz)

    Returns:
        入力電力と慣性トルクの割合
    """
    if f <= 0:
        raise DomainError(f"周波数は正の値が必要です (値: {f})")
    omega = 2 * math.pi * f
    tau_nr = rpma.moment_of_inertia * omega / rpma.ramp_time
    total = rpma.friction_torque + tau_nr
    power = total * omega / rpma.efficiency
    return RpmaPower(power=power, inertia_share=tau_nr / total)
