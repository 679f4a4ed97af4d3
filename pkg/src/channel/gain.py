"""チャネル電力利得の4因子分解 G = 𝒞·𝒮·ℰ·J と双極子磁界"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.core.errors import DomainError
from .antennas import CoilSpec, Pose, RpmaSpec, coil_impedance
from .constants import MU0
from .medium import Medium, near_field_boundary, skin_depth, wavenumber

logger = logging.getLogger(__name__)

Antenna = Union[CoilSpec, RpmaSpec]


@dataclass(frozen=True)
class GainBreakdown:
    """チャネル電力利得の内訳"""

    circuit: float  # 回路利得 𝒞
    space: float  # 空間利得 𝒮 = μ²/d⁶
    eddy: float  # 渦電流利得 ℰ
    polarization: float  # 偏波利得 J = 𝒥²
    near_field_valid: bool = True  # |k0 d| <= kappa
    weak_coupling_valid: bool = True  # d > アンテナ半径

    @property
    def total(self) -> float:
        """利得 G = 𝒞·𝒮·ℰ·J"""
        return self.circuit * self.space * self.eddy * self.polarization

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'circuit': self.circuit,
            'space': self.space,
            'eddy': self.eddy,
            'polarization': self.polarization,
            'total': self.total,
            'near_field_valid': self.near_field_valid,
            'weak_coupling_valid': self.weak_coupling_valid,
        }


@dataclass(frozen=True)
class LinkGeometry:
    """2点間の幾何"""

    distance: float  # 距離 d (m)
    signed_polarization: float  # 符号付き偏波係数 𝒥
    theta_tx: Optional[float] = None  # 同一平面の場合の送信軸角度 (rad)
    theta_rx: Optional[float] = None  # 同一平面の場合の受信軸角度 (rad)

    @property
    def polarization(self) -> float:
        """偏波利得 J = 𝒥²"""
        return self.signed_polarization ** 2


def _line_of_sight(pose_tx: Pose, pose_rx: Pose):
    delta = pose_rx.position_array - pose_tx.position_array
    d = float(np.linalg.norm(delta))
    if d == 0:
        raise DomainError("送受信アンテナの位置が一致しています")
    return d, delta / d


def polarization_factor(pose_tx: Pose, pose_rx: Pose) -> float:
    """
    符号付き偏波係数 𝒥 = n_D·(3r̂(n_S·r̂) − n_S)

    Args:
        pose_tx: 送信側の姿勢
        pose_rx: 受信側の姿勢

    Returns:
        𝒥 (|𝒥| <= 2)
    """
    _, r_hat = _line_of_sight(pose_tx, pose_rx)
    n_s = pose_tx.axis_array
    n_d = pose_rx.axis_array
    return float(n_d @ (3 * r_hat * (n_s @ r_hat) - n_s))


def link_geometry(pose_tx: Pose, pose_rx: Pose) -> LinkGeometry:
    """
    距離・偏波係数・(同一平面なら) 軸角度を求める

    角度は受信側を鏡映で測る (𝒥 = 2cosθ_S cosθ_D + sinθ_S sinθ_D)。
    """
    d, r_hat = _line_of_sight(pose_tx, pose_rx)
    j_signed = polarization_factor(pose_tx, pose_rx)
    n_s = pose_tx.axis_array
    n_d = pose_rx.axis_array
    theta_tx = theta_rx = None
    if abs(np.linalg.det(np.vstack([r_hat, n_s, n_d]))) < 1e-9:
        # 視線方向に直交する面内の基準方向
        perp = np.zeros(3)
        for n in (n_s, n_d):
            rest = n - r_hat * (n @ r_hat)
            if np.linalg.norm(rest) > 1e-12:
                perp = rest / np.linalg.norm(rest)
                break
        theta_tx = math.atan2(float(n_s @ perp), float(n_s @ r_hat))
        theta_rx = math.atan2(-float(n_d @ perp), float(n_d @ r_hat))
    return LinkGeometry(distance=d, signed_polarization=j_signed, theta_tx=theta_tx, theta_rx=theta_rx)


def eddy_gain(d, f, medium: Medium, mode: str = "exact"):
    """
    渦電流利得 ℰ = e^{−2d/δ}

    Args:
        d: 距離 (m)
        f: 周波数 (Hz)
        medium: 媒質
        mode: 表皮深さの計算モード

    Returns:
        ℰ ∈ (0, 1]
    """
    if np.any(np.asarray(d) < 0):
        raise DomainError(f"距離は0以上が必要です (値: {d})")
    delta = skin_depth(f, medium, mode=mode)
    return np.exp(-2.0 * np.asarray(d, dtype=float) / delta)


def space_gain(d: float, medium: Medium) -> float:
    """空間利得 𝒮 = μ²/d⁶"""
    if not d > 0:
        raise DomainError(f"距離は正の値が必要です (値: {d})")
    return medium.mu ** 2 / d ** 6


def circuit_gain_coil(tx: CoilSpec, rx: CoilSpec, f):
    """
    コイル間の回路利得

    𝒞 = (π a_S² a_D² N_S N_D)²/16 · |(2πf)² R_L / (Z_S Z_D²)|

    Args:
        tx: 送信コイル
        rx: 受信コイル
        f: 周波数 (Hz), スカラーまたは配列

    Returns:
        𝒞
    """
    omega = 2 * np.pi * np.asarray(f, dtype=float)
    z_s = coil_impedance(tx, f)
    z_d = coil_impedance(rx, f)
    area_product = math.pi * tx.radius ** 2 * rx.radius ** 2 * tx.turns * rx.turns
    return area_product ** 2 / 16.0 * np.abs(omega ** 2 * rx.load_resistance / (z_s * z_d ** 2))


def rpma_friction_factor(rpma: RpmaSpec, f):
    """RPMAの摩擦損失係数 ℵ_S(f) = η/(1 + f/f_c)"""
    return rpma.efficiency / (1.0 + np.asarray(f, dtype=float) / rpma.friction_corner)


def circuit_gain_rpma(rpma: RpmaSpec, rx: CoilSpec, f, ideal_friction: bool = False):
    """
    RPMA送信時の回路利得

    𝒞 = (B_rm V_m/(4πμ0))² ℵ_S(f) ℵ_D(f),  ℵ_D(f) = π² f a_D / (2|Z_D|)

    Args:
        rpma: RPMAの構成
        rx: 受信コイル
        f: 周波数 (Hz)
        ideal_friction: True なら ℵ_S ≡ 1

    Returns:
        𝒞
    """
    f_arr = np.asarray(f, dtype=float)
    aleph_s = 1.0 if ideal_friction else rpma_friction_factor(rpma, f_arr)
    aleph_d = math.pi ** 2 * f_arr * rx.radius / (2 * np.abs(coil_impedance(rx, f_arr)))
    return (rpma.remanence * rpma.volume / (4 * math.pi * MU0)) ** 2 * aleph_s * aleph_d


def circuit_gain(tx: Antenna, rx: CoilSpec, f):
    """送信アンテナの種類に応じた回路利得"""
    if isinstance(tx, RpmaSpec):
        return circuit_gain_rpma(tx, rx, f)
    return circuit_gain_coil(tx, rx, f)


def channel_gain(
    tx_antenna: Antenna,
    rx_antenna: CoilSpec,
    pose_tx: Pose,
    pose_rx: Pose,
    medium: Medium,
    f: float,
    kappa: float = 1.0,
    skin_mode: str = "exact"
) -> GainBreakdown:
    """
    チャネル電力利得を4因子に分解して求める

    Args:
        tx_antenna: 送信アンテナ (コイルまたはRPMA)
        rx_antenna: 受信コイル
        pose_tx: 送信側の姿勢
        pose_rx: 受信側の姿勢
        medium: 媒質
        f: 周波数 (Hz)
        kappa: 近傍界境界のしきい値
        skin_mode: 表皮深さの計算モード

    Returns:
        利得の内訳
    """
    geometry = link_geometry(pose_tx, pose_rx)
    d = geometry.distance
    radius = rx_antenna.radius
    if isinstance(tx_antenna, CoilSpec):
        radius = max(radius, tx_antenna.radius)
    weak = d > radius
    near = d <= near_field_boundary(f, medium, kappa)
    if not weak:
        logger.warning(f"弱結合の前提を満たしません: d={d:.3g} m")
    if not near:
        logger.debug(f"近傍界の範囲外です: d={d:.3g} m, f={f:.6g} Hz")
    return GainBreakdown(
        circuit=float(circuit_gain(tx_antenna, rx_antenna, f)),
        space=space_gain(d, medium),
        eddy=float(eddy_gain(d, f, medium, mode=skin_mode)),
        polarization=geometry.polarization,
        near_field_valid=bool(near),
        weak_coupling_valid=weak,
    )


def dipole_field(moment_vector, displacement, f: float, medium: Medium) -> np.ndarray:
    """
    磁気双極子の複素磁界 (近傍界・中間界・放射界を含む)

    H = e^{jk0 r}/(4π) [ k0² (r̂×m)×r̂ / r + (3r̂(r̂·m) − m)(1/r³ − jk0/r²) ]

    Im(k0) >= 0 の波数と組み合わせて距離とともに減衰する位相因子を用いる。

    Args:
        moment_vector: 磁気モーメント (A·m²)
        displacement: 双極子から観測点への変位 (m)
        f: 周波数 (Hz)
        medium: 媒質

    Returns:
        複素磁界ベクトル H (A/m)
    """
    r_vec = np.asarray(displacement, dtype=float)
    m = np.asarray(moment_vector, dtype=complex)
    r = float(np.linalg.norm(r_vec))
    if r == 0:
        raise DomainError("観測点が双極子の位置と一致しています")
    r_hat = r_vec / r
    k = wavenumber(f, medium)
    radiation = np.cross(np.cross(r_hat, m), r_hat) * k ** 2 / r
    quasi_static = (3 * r_hat * (r_hat @ m) - m) * (1 / r ** 3 - 1j * k / r ** 2)
    return np.exp(1j * k * r) / (4 * math.pi) * (radiation + quasi_static)


def flux_linkage(field, rx: CoilSpec, pose_rx: Pose, medium: Medium) -> complex:
    """
    受信コイルの鎖交磁束 Ψ = μ (H·n_D) N_D π a_D² (コイル内で一様な磁界の近似)

    Args:
        field: 受信位置の複素磁界 (A/m)
        rx: 受信コイル
        pose_rx: 受信側の姿勢
        medium: 媒質

    Returns:
        複素鎖交磁束 (Wb·turn)
    """
    h_normal = np.asarray(field, dtype=complex) @ pose_rx.axis_array
    return complex(medium.mu * h_normal * rx.turns * math.pi * rx.radius ** 2)


def mixed_field_gain(
    tx: CoilSpec,
    rx: CoilSpec,
    pose_tx: Pose,
    pose_rx: Pose,
    medium: Medium,
    f: float
) -> float:
    """
    双極子磁界全体から求めたチャネル電力利得

    単位電流の送信コイルがつくる磁界の鎖交磁束を実効相互インダクタンスとし、
    G = ω²|M_eff|² R_L / (|Z_S||Z_D|²) を返す。

    Args:
        tx: 送信コイル
        rx: 受信コイル
        pose_tx: 送信側の姿勢
        pose_rx: 受信側の姿勢
        medium: 媒質
        f: 周波数 (Hz)

    Returns:
        電力利得
    """
    moment = tx.turns * math.pi * tx.radius ** 2 * pose_tx.axis_array
    field = dipole_field(moment, pose_rx.position_array - pose_tx.position_array, f, medium)
    m_eff = flux_linkage(field, rx, pose_rx, medium)
    omega = 2 * math.pi * f
    return (
        omega ** 2 * abs(m_eff) ** 2 * rx.load_resistance
        / (abs(coil_impedance(tx, f)) * abs(coil_impedance(rx, f)) ** 2)
    )
