"""受動リレー1個によるクロストーク (S・D・R の3コイル系)"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

from src.channel.antennas import CoilSpec, Pose, coil_impedance, mutual_inductance
from src.channel.constants import CROSSTALK_NEGLIGIBLE_BAND
from src.channel.medium import Medium
from src.core.errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrosstalkReport:
    """クロストークの評価結果"""

    z_pa1: complex  # Z_RD·Z_SR·Z_LC (Ω³)
    z_pa2: complex  # 2Z_RD Z_SD Z_SR Z_LC − (Z_RD² + Z_SD² + Z_SR²) Z_LC² (Ω⁴)
    ratio: float  # リレーあり/なしの利得比 G_SD,p / G_SD
    classification: str  # "positive" / "negative" / "negligible"

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'z_pa1_real': self.z_pa1.real,
            'z_pa1_imag': self.z_pa1.imag,
            'z_pa2_real': self.z_pa2.real,
            'z_pa2_imag': self.z_pa2.imag,
            'ratio': self.ratio,
            'classification': self.classification,
        }


@dataclass(frozen=True)
class ThreeCoilCurrents:
    """U_S で駆動したときの S・D の電流"""

    source: complex  # I_S (A)
    destination: complex  # I_D (A)


def relay_path(distance: float, height: float) -> Tuple[Pose, Pose, Pose]:
    """
    S を原点、D を (d, 0, 0)、R を中点の真上 (d/2, 0, h) に置いた同軸 (+x) 配置

    Returns:
        (S, D, R) の姿勢
    """
    if not distance > 0:
        raise DomainError(f"距離は正の値が必要です (値: {distance})")
    axis = (1.0, 0.0, 0.0)
    return (
        Pose(position=(0.0, 0.0, 0.0), axis=axis),
        Pose(position=(distance, 0.0, 0.0), axis=axis),
        Pose(position=(distance / 2, 0.0, height), axis=axis),
    )


def _pair_impedances(coil: CoilSpec, pose_s: Pose, pose_d: Pose, pose_r: Pose, f: float, medium: Medium):
    positions = [p.position for p in (pose_s, pose_d, pose_r)]
    if len(set(positions)) < 3:
        raise DomainError("S・D・R は異なる位置に置く必要があります")
    j_omega = 1j * 2 * math.pi * f

    def z(a: Pose, b: Pose) -> complex:
        return j_omega * mutual_inductance(coil, coil, a, b, medium, f).value

    return z(pose_s, pose_d), z(pose_s, pose_r), z(pose_r, pose_d), coil_impedance(coil, f)


def crosstalk_current(
    coil: CoilSpec,
    pose_s: Pose,
    pose_d: Pose,
    pose_r: Pose,
    f: float,
    medium: Medium,
    voltage: complex = 1.0
) -> ThreeCoilCurrents:
    """
    3コイル系の電流の閉形式

    I_D = U(Z_pa1 − Z_SD Z_LC²)/(Z_LC⁴ + Z_pa2), I_S = U Z_LC (Z_LC² − Z_RD²)/(Z_LC⁴ + Z_pa2)
    """
    impedances = _pair_impedances(coil, pose_s, pose_d, pose_r, f, medium)
    return _three_coil_currents(*impedances, voltage=voltage)


def _three_coil_currents(z_sd, z_sr, z_rd, z_lc, voltage: complex = 1.0) -> ThreeCoilCurrents:
    z_pa1, z_pa2 = _crosstalk_terms(z_sd, z_sr, z_rd, z_lc)
    denominator = z_lc ** 4 + z_pa2
    return ThreeCoilCurrents(
        source=voltage * z_lc * (z_lc ** 2 - z_rd ** 2) / denominator,
        destination=voltage * (z_pa1 - z_sd * z_lc ** 2) / denominator,
    )


def _crosstalk_terms(z_sd: complex, z_sr: complex, z_rd: complex, z_lc: complex):
    z_pa1 = z_rd * z_sr * z_lc
    z_pa2 = (
        2 * z_rd * z_sd * z_sr * z_lc
        - z_rd ** 2 * z_lc ** 2 - z_sd ** 2 * z_lc ** 2 - z_sr ** 2 * z_lc ** 2
    )
    return z_pa1, z_pa2


def classify_ratio(ratio: float, band: float = CROSSTALK_NEGLIGIBLE_BAND) -> str:
    """利得比を正/負/無視できるクロストークに分類"""
    if ratio > 1 + band:
        return "positive"
    if ratio < 1 - band:
        return "negative"
    return "negligible"


def crosstalk_impedances(
    coil: CoilSpec,
    pose_s: Pose,
    pose_d: Pose,
    pose_r: Pose,
    f: float,
    medium: Medium
) -> CrosstalkReport:
    """
    受動リレー R が S→D リンクに与えるクロストーク

    全コイルが同じ Z_LC (負荷込み) を持つとして、リレーあり/なしの
    電力利得 |I_D|² R_L/(|I_S||U|) の比を返す。

    Args:
        coil: 3コイル共通のコイル
        pose_s: 送信コイルの姿勢
        pose_d: 受信コイルの姿勢
        pose_r: リレーの姿勢
        f: 周波数 (Hz)
        medium: 媒質

    Returns:
        クロストーク評価
    """
    z_sd, z_sr, z_rd, z_lc = _pair_impedances(coil, pose_s, pose_d, pose_r, f, medium)
    z_pa1, z_pa2 = _crosstalk_terms(z_sd, z_sr, z_rd, z_lc)
    with_relay = _three_coil_currents(z_sd, z_sr, z_rd, z_lc)

    # リレーなし: 2コイル系
    det = z_lc ** 2 - z_sd ** 2
    direct_d = -z_sd / det
    direct_s = z_lc / det

    gain_relay = abs(with_relay.destination) ** 2 / abs(with_relay.source)
    gain_direct = abs(direct_d) ** 2 / abs(direct_s)
    ratio = float(gain_relay / gain_direct)
    classification = classify_ratio(ratio)
    logger.debug(f"クロストーク比: {ratio:.6g} ({classification}), f={f:.6g} Hz")
    return CrosstalkReport(z_pa1=complex(z_pa1), z_pa2=complex(z_pa2), ratio=ratio, classification=classification)
