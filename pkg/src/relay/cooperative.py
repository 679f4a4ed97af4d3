"""増幅中継 (AF) による協調MI通信"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import integrate

from src.channel.antennas import CoilSpec, Pose
from src.channel.constants import RX_COIL_RADIUS, RX_COIL_TURNS
from src.core.errors import DomainError
from src.link.metrics import bandwidth_numeric, gain_response, half_power_band, resolve_tx_psd
from src.link.models import BandwidthResult, LinkSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CmicResult:
    """AF協調リンクの評価結果"""

    snr_af: float  # f0 での合成SNR Υ_AF
    snr_direct: float  # f0 での直接リンクSNR Υ_SD
    bandwidth_af: float  # 合成応答の3dB帯域幅 B_AF (Hz)
    bandwidth_dmi: float  # 直接リンクの3dB帯域幅 B_DMI (Hz)
    capacity_af: float  # 𝔠_AF (bit/s)
    capacity_dmi: float  # 𝔠_DMI (bit/s)

    @property
    def cmg(self) -> float:
        """協調MI利得 CMG = 𝔠_AF / 𝔠_DMI"""
        return self.capacity_af / self.capacity_dmi

    def to_dict(self) -> dict:
        """辞書形式に変換"""
        return {
            'snr_af': self.snr_af,
            'snr_direct': self.snr_direct,
            'bandwidth_af_hz': self.bandwidth_af,
            'bandwidth_dmi_hz': self.bandwidth_dmi,
            'capacity_af_bps': self.capacity_af,
            'capacity_dmi_bps': self.capacity_dmi,
            'cmg': self.cmg,
        }


def default_relay_coil(link: LinkSpec) -> CoilSpec:
    """リレーの既定コイル (受信コイルと同じ寸法、リンクの f0 に同調)"""
    return CoilSpec(radius=RX_COIL_RADIUS, turns=RX_COIL_TURNS).retuned(link.frequency)


def _hop(link: LinkSpec, tx, pose_tx: Pose, rx: CoilSpec, pose_rx: Pose) -> LinkSpec:
    return replace(link, tx=tx, rx=rx, pose_tx=pose_tx, pose_rx=pose_rx)


def _band_capacity(snr_response, band: BandwidthResult, prelog: float) -> float:
    """半値点 [f_lo, f_hi] の区間で log2(1 + Υ(f)) を積分"""
    value, _ = integrate.quad(lambda f: math.log2(1 + snr_response(f)), band.f_lo, band.f_hi, limit=200)
    return prelog * value


def cmic_af(link: LinkSpec, relay_pose: Pose, relay_coil: Optional[CoilSpec] = None) -> CmicResult:
    """
    AFリレーを1個加えた協調リンクの容量と帯域幅

    Υ_AF(f) = Υ_SD + Υ_SR·Υ_RD / (1 + Υ_SR + Υ_RD)。送信PSDは直接リンクの値を
    S とリレーで共用し、半二重のため協調リンクの容量は1/2倍する。

    Args:
        link: 直接リンク S→D
        relay_pose: リレーの姿勢
        relay_coil: リレーのコイル (省略時は受信コイルと同じ寸法)

    Returns:
        合成SNR・帯域幅・容量
    """
    relay_coil = relay_coil or default_relay_coil(link)
    for pose in (link.pose_tx, link.pose_rx):
        if relay_pose.position == pose.position:
            raise DomainError("リレーの位置が送信側または受信側と一致しています")

    f0 = link.frequency
    psd = resolve_tx_psd(link)
    scale = psd / link.noise_psd
    hop_sr = _hop(link, link.tx, link.pose_tx, relay_coil, relay_pose)
    hop_rd = _hop(link, relay_coil, relay_pose, link.rx, link.pose_rx)

    def snr_direct(f):
        return scale * gain_response(link, f)

    def snr_af(f):
        sr = scale * gain_response(hop_sr, f)
        rd = scale * gain_response(hop_rd, f)
        return snr_direct(f) + sr * rd / (1 + sr + rd)

    band_dmi = bandwidth_numeric(link)
    band_af = half_power_band(snr_af, f0, "numeric")
    result = CmicResult(
        snr_af=float(snr_af(f0)),
        snr_direct=float(snr_direct(f0)),
        bandwidth_af=band_af.value,
        bandwidth_dmi=band_dmi.value,
        capacity_af=_band_capacity(snr_af, band_af, 0.5),
        capacity_dmi=_band_capacity(snr_direct, band_dmi, 1.0),
    )
    logger.debug(
        f"AF協調リンク: CMG={result.cmg:.4g}, B_AF={band_af.value:.4g} Hz, B_DMI={band_dmi.value:.4g} Hz"
    )
    return result


@dataclass
class RelayAreaMap:
    """リレー位置ごとの CMG"""

    xs: np.ndarray  # 視線方向の座標 (m)
    zs: np.ndarray  # 鉛直方向の座標 (m)
    cmg: np.ndarray  # CMG (形状 len(zs) × len(xs)、除外セルは NaN)

    @property
    def best(self) -> tuple:
        """CMG が最大のセル (x, z, CMG)"""
        iz, ix = np.unravel_index(int(np.nanargmax(self.cmg)), self.cmg.shape)
        return float(self.xs[ix]), float(self.zs[iz]), float(self.cmg[iz, ix])

    def relay_area_fraction(self) -> float:
        """CMG > 1 のセルの割合"""
        valid = ~np.isnan(self.cmg)
        return float(np.mean(self.cmg[valid] > 1)) if valid.any() else 0.0

    def to_frame(self) -> pd.DataFrame:
        """縦持ちの表 (x_m, z_m, cmg)"""
        grid_x, grid_z = np.meshgrid(self.xs, self.zs)
        return pd.DataFrame({'x_m': grid_x.ravel(), 'z_m': grid_z.ravel(), 'cmg': self.cmg.ravel()})


def relay_area_map(
    link: LinkSpec,
    xs: Sequence[float],
    zs: Sequence[float],
    relay_axis: Sequence[float] = (1.0, 0.0, 0.0),
    relay_coil: Optional[CoilSpec] = None,
    exclusion_radius: float = 1.0
) -> RelayAreaMap:
    """
    S–D 平面 (x–z) の格子上でリレー位置を動かしたときの CMG

    送信側・受信側から exclusion_radius 以内のセルは NaN とする。

    Args:
        link: 直接リンク (S は原点、D は +x 軸上を想定)
        xs: x 座標 (m)
        zs: z 座標 (m)
        relay_axis: リレー軸
        relay_coil: リレーのコイル
        exclusion_radius: 除外半径 (m)

    Returns:
        CMG の格子
    """
    xs = np.asarray(xs, dtype=float)
    zs = np.asarray(zs, dtype=float)
    cmg = np.full((len(zs), len(xs)), np.nan)
    ends = [link.pose_tx.position_array, link.pose_rx.position_array]
    for iz, z in enumerate(zs):
        for ix, x in enumerate(xs):
            position = np.array([x, 0.0, z])
            if min(np.linalg.norm(position - end) for end in ends) < exclusion_radius:
                continue
            pose = Pose.normalized(tuple(position), relay_axis)
            cmg[iz, ix] = cmic_af(link, pose, relay_coil).cmg
    result = RelayAreaMap(xs=xs, zs=zs, cmg=cmg)
    if np.any(~np.isnan(cmg)):
        x_best, z_best, value = result.best
        logger.info(f"CMG最大: {value:.4g} at x={x_best:.3g} m, z={z_best:.3g} m")
    return result


@dataclass(frozen=True)
class BandwidthComparison:
    """協調リンクと直接リンクの帯域幅"""

    bandwidth_af: float  # B_AF (Hz)
    bandwidth_dmi: float  # B_DMI (Hz)


def cmic_af_bandwidth_comparison(
    link: LinkSpec,
    relay_pose: Pose,
    relay_coil: Optional[CoilSpec] = None
) -> BandwidthComparison:
    """B_AF と B_DMI の組"""
    result = cmic_af(link, relay_pose, relay_coil)
    return BandwidthComparison(bandwidth_af=result.bandwidth_af, bandwidth_dmi=result.bandwidth_dmi)
