"""MI導波路 (同一の受動リレーを等間隔に並べたチェーン)"""

import logging
import math

import numpy as np

from src.channel.antennas import CoilSpec, Pose, coil_impedance, mutual_inductance
from src.channel.medium import Medium
from src.core.errors import DomainError, NumericError
from .kvl import KvlSystem

logger = logging.getLogger(__name__)


def fn_recurrence(z_m: complex, k: int) -> complex:
    """
    F(k+1) = Z_M·F(k) − F(k−1), F(0) = 1, F(−1) = 0

    Args:
        z_m: 正規化インピーダンス Z_M
        k: 次数 (−1 以上)

    Returns:
        F(k)
    """
    if k < -1:
        raise DomainError(f"次数は −1 以上が必要です (値: {k})")
    previous, current = 0j, 1 + 0j
    if k == -1:
        return previous
    for step in range(k):
        previous, current = current, z_m * current - previous
        if not np.isfinite(current):
            raise NumericError(f"F(k) が表現可能な範囲を超えました (k={step + 1})")
    return current


def _normalized_impedances(relay_coil: CoilSpec, m_adjacent: float, f: float):
    j_omega_m = 1j * 2 * math.pi * f * m_adjacent
    return coil_impedance(relay_coil, f) / j_omega_m, relay_coil.load_resistance / j_omega_m


def waveguide_gain(relay_coil: CoilSpec, n: int, m_adjacent: float, f: float) -> float:
    """
    n個の受動リレーを挟んだ導波路の電力利得

    送受信コイルとリレーはすべて同じコイルで、いずれも R_L 込みの Z_LC を持つ。
    隣接コイル間の結合だけを考え、Z_M = Z_LC/(j2πfM), Z_L = R_L/(j2πfM) として
    G = |Z_L| / (|F(n+1)|·|F(n+2)|)。

    Args:
        relay_coil: リレー (と端) のコイル
        n: リレー数
        m_adjacent: 隣接コイル間の相互インダクタンス (H)
        f: 周波数 (Hz)

    Returns:
        電力利得 |I_rx|² R_L / (|I_tx||U|)
    """
    if n < 0:
        raise DomainError(f"リレー数は0以上が必要です (値: {n})")
    if not m_adjacent > 0:
        raise DomainError(f"隣接相互インダクタンスは正の値が必要です (値: {m_adjacent})")
    z_m, z_l = _normalized_impedances(relay_coil, m_adjacent, f)
    return float(abs(z_l) / (abs(fn_recurrence(z_m, n + 1)) * abs(fn_recurrence(z_m, n + 2))))


def waveguide_system(
    relay_coil: CoilSpec,
    n: int,
    spacing: float,
    f: float,
    medium: Medium,
    nearest_only: bool = True
) -> KvlSystem:
    """
    +x 軸上に間隔 spacing で並べた導波路のKVL系

    Args:
        relay_coil: コイル
        n: リレー数
        spacing: コイル間隔 (m)
        f: 周波数 (Hz)
        medium: 媒質
        nearest_only: 隣接コイル以外の結合を除く

    Returns:
        回路系 (先頭が送信、末尾が受信)
    """
    if n < 0:
        raise DomainError(f"リレー数は0以上が必要です (値: {n})")
    count = n + 2
    poses = [Pose(position=(k * spacing, 0.0, 0.0), axis=(1.0, 0.0, 0.0)) for k in range(count)]
    voltages = np.zeros(count, dtype=complex)
    voltages[0] = 1.0
    mask = None
    if nearest_only:
        index = np.arange(count)
        mask = np.abs(index[:, None] - index[None, :]) <= 1
    return KvlSystem(
        coils=[relay_coil] * count, poses=poses, voltages=voltages, frequency=f,
        medium=medium, coupling_mask=mask,
    )


def waveguide_gain_at_spacing(relay_coil: CoilSpec, n: int, spacing: float, f: float, medium: Medium) -> float:
    """同軸に並べたコイル間隔から隣接相互インダクタンスを求めて waveguide_gain を評価"""
    m_adjacent = mutual_inductance(
        relay_coil, relay_coil,
        Pose(position=(0.0, 0.0, 0.0), axis=(1.0, 0.0, 0.0)),
        Pose(position=(spacing, 0.0, 0.0), axis=(1.0, 0.0, 0.0)),
        medium, f,
    ).value
    return waveguide_gain(relay_coil, n, m_adjacent, f)
