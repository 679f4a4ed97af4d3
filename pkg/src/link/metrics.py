"""リンク性能 (SNR・容量・帯域幅・通信距離・BER)"""

import logging
import math
from dataclasses import replace
from functools import lru_cache
from typing import Callable, Iterable, Optional

import numpy as np
import pandas as pd
from scipy import integrate, optimize

from src.channel.antennas import (
    CoilSpec,
    coil_resistance,
    matching_capacitance,
    quality_factor,
)
from src.channel.constants import (
    BANDWIDTH_SCAN_POINTS,
    BANDWIDTH_SEARCH_SPAN,
    MU0,
    RANGE_MAX_DISTANCE,
    RANGE_MIN_DISTANCE,
)
from src.channel.gain import circuit_gain, eddy_gain, polarization_factor, space_gain
from src.channel.medium import skin_depth
from src.core.errors import DomainError, NumericError
from src.fading.metrics import ergodic_ber, q_function
from .models import Antenna, BandwidthResult, LinkSpec, RangeResult

logger = logging.getLogger(__name__)


def gain_response(link: LinkSpec, f, skin_mode: str = "exact"):
    """
    リンクの電力利得 G(f) = 𝒞(f)·𝒮·ℰ(f)·J

    Args:
        link: リンク
        f: 周波数 (Hz), スカラーまたは配列
        skin_mode: 表皮深さの計算モード

    Returns:
        電力利得
    """
    d = link.distance
    polarization = polarization_factor(link.pose_tx, link.pose_rx) ** 2
    value = (
        circuit_gain(link.tx, link.rx, f) * space_gain(d, link.medium)
        * eddy_gain(d, f, link.medium, mode=skin_mode) * polarization
    )
    return float(value) if np.ndim(value) == 0 else value


def half_power_band(response: Callable, f0: float, method: str) -> BandwidthResult:
    """f0 の両側で応答が半分になる周波数を探す"""
    target = float(response(f0)) / 2
    if not target > 0:
        raise NumericError(f"f0={f0:.6g} Hz での応答が0のため帯域幅を定義できません")

    edges = []
    multiple = False
    for span in (1 / BANDWIDTH_SEARCH_SPAN, BANDWIDTH_SEARCH_SPAN):
        grid = f0 * np.geomspace(1.0, span, BANDWIDTH_SCAN_POINTS)
        below = np.asarray(response(grid)) < target
        if not below.any():
            side = "下側" if span < 1 else "上側"
            raise NumericError(f"{side}の探索範囲内に半値点がありません (f0={f0:.6g} Hz)")
        idx = int(np.argmax(below))
        if not below[idx:].all():
            multiple = True
        edge = optimize.brentq(
            lambda f: float(response(f)) - target, grid[idx - 1], grid[idx], xtol=1e-9 * f0, rtol=1e-12
        )
        edges.append(edge)

    if multiple:
        logger.warning(f"半値点を複数回横切りました。最も内側の組を採用します (f0={f0:.6g} Hz)")
    f_lo, f_hi = edges
    return BandwidthResult(method=method, value=f_hi - f_lo, f_lo=f_lo, f_hi=f_hi, multiple_crossings=multiple)


def band_shape(link: LinkSpec, skin_mode: str = "exact") -> Callable:
    """
    f0 で 1 に正規化した G(f) の周波数特性 𝒞(f)·ℰ(f)/(𝒞(f0)·ℰ(f0))

    𝒮 と J は周波数によらないため半値点は G(f) と同じになる。
    対数のまま合成するので、遠距離や J=0 の姿勢でも0に潰れない。
    """
    d = link.distance

    def log_shape(f):
        with np.errstate(divide="ignore"):
            return (np.log(circuit_gain(link.tx, link.rx, f))
                    - 2.0 * d / skin_depth(f, link.medium, mode=skin_mode))

    reference = float(log_shape(link.frequency))
    return lambda f: np.exp(log_shape(f) - reference)


def bandwidth_numeric(link: LinkSpec, skin_mode: str = "exact") -> BandwidthResult:
    """
    電力利得の半値点から3dB帯域幅を求める

    探索範囲は [f0/100, 100 f0]。グリッドで最初の交差を見つけ、区間内を brentq で詰める。

    Args:
        link: リンク
        skin_mode: 表皮深さの計算モード

    Returns:
        帯域幅 (f_lo, f_hi 付き)
    """
    result = half_power_band(band_shape(link, skin_mode), link.frequency, "numeric")
    logger.debug(f"帯域幅 (数値): {result.value:.6g} Hz [{result.f_lo:.6g}, {result.f_hi:.6g}]")
    return result


@lru_cache(maxsize=256)
def circuit_bandwidth(tx: Antenna, rx: CoilSpec) -> BandwidthResult:
    """回路利得 𝒞(f) だけから求めた3dB帯域幅 (距離・媒質に依存しない)"""
    return half_power_band(lambda f: circuit_gain(tx, rx, f), rx.tuned_frequency, "numeric")


def _same_coil(a: CoilSpec, b: CoilSpec) -> bool:
    return (
        a.radius == b.radius and a.turns == b.turns
        and a.wire_resistance_per_m == b.wire_resistance_per_m and a.wire_radius == b.wire_radius
        and a.load_resistance == b.load_resistance and a.tuned_frequency == b.tuned_frequency
    )


def bandwidth_dipole_closed(link: LinkSpec, printed: bool = False) -> BandwidthResult:
    """
    同一コイル対の閉形式帯域幅

    R = R_cD + R_L、C を整合容量として
    ϖ = f0² + 2π²C²f0⁴K, ϱ = √(ϖ² − f0⁴), B = √(ϖ+ϱ) − √(ϖ−ϱ)。
    既定では 𝒵_C = 2R³, K = 𝒵_C^{2/3} − R² (半値条件から導いた形) を使う。
    printed=True では 𝒵_C = R³/8, K = 𝒵_C^{−2/3} − R² の形を評価する。

    Args:
        link: 送受信が同一コイルのリンク
        printed: 𝒵_C = R³/8 の定数で評価する

    Returns:
        帯域幅
    """
    if not isinstance(link.tx, CoilSpec) or not _same_coil(link.tx, link.rx):
        raise DomainError("閉形式の帯域幅は送受信が同一コイルの場合のみ有効です。数値計算を使ってください")
    coil = link.rx
    f0 = coil.tuned_frequency
    r_total = coil_resistance(coil) + coil.load_resistance
    capacitance = matching_capacitance(coil)
    if printed:
        z_c = r_total ** 3 / 8
        k = z_c ** (-2 / 3) - r_total ** 2
    else:
        z_c = 2 * r_total ** 3
        k = z_c ** (2 / 3) - r_total ** 2
    varpi = f0 ** 2 + 2 * math.pi ** 2 * capacitance ** 2 * f0 ** 4 * k
    discriminant = varpi ** 2 - f0 ** 4
    if discriminant < 0 or varpi < 0:
        raise NumericError(f"閉形式の判別式が負です (ϖ²−f0⁴={discriminant:.3g})")
    varrho = math.sqrt(discriminant)
    value = math.sqrt(varpi + varrho) - math.sqrt(varpi - varrho)
    return BandwidthResult(method="dipole_closed", value=value)


def bandwidth_coupling(qs: float, qd: float, f0: float) -> BandwidthResult:
    """
    Q値による帯域幅の見積もり B = f0 / max(Q_S, Q_D)

    Args:
        qs: 送信コイルのQ値
        qd: 受信コイルのQ値
        f0: 共振周波数 (Hz)

    Returns:
        帯域幅
    """
    if not qs > 0 or not qd > 0:
        raise DomainError(f"Q値は正の値が必要です (Q_S={qs}, Q_D={qd})")
    return BandwidthResult(method="coupling", value=f0 / max(qs, qd))


def link_bandwidth_coupling(link: LinkSpec) -> BandwidthResult:
    """リンクのコイルから Q値を計算して bandwidth_coupling を評価"""
    if not isinstance(link.tx, CoilSpec):
        raise DomainError("Q値による見積もりは送信側がコイルの場合のみ有効です")
    return bandwidth_coupling(quality_factor(link.tx), quality_factor(link.rx), link.frequency)


def resolve_tx_psd(link: LinkSpec) -> float:
    """送信電力密度 P_Sf (明示されていなければ P_S / B_w)"""
    if link.tx_psd is not None:
        return link.tx_psd
    return link.tx_power / bandwidth_numeric(link).value


def snr(link: LinkSpec, f: Optional[float] = None, skin_mode: str = "exact"):
    """
    SNR = P_Sf·G(f)/N_of

    Args:
        link: リンク
        f: 周波数 (Hz)。省略時は f0
        skin_mode: 表皮深さの計算モード

    Returns:
        SNR (真値)
    """
    f = link.frequency if f is None else f
    return resolve_tx_psd(link) * gain_response(link, f, skin_mode) / link.noise_psd


def capacity(link: LinkSpec, mode: str = "flat") -> float:
    """
    シャノン容量 (bit/s)

    Args:
        link: リンク
        mode: "flat" (B_w·log2(1 + snr(f0))) または
              "integral" (3dB帯域内で log2(1 + snr(f)) を積分)

    Returns:
        容量 (bit/s)
    """
    band = bandwidth_numeric(link)
    psd = link.tx_psd if link.tx_psd is not None else link.tx_power / band.value
    fixed = replace(link, tx_psd=psd)
    if mode == "flat":
        return band.value * math.log2(1 + snr(fixed))
    if mode == "integral":
        value, _ = integrate.quad(lambda f: math.log2(1 + snr(fixed, f)), band.f_lo, band.f_hi, limit=200)
        return value
    raise DomainError(f"未知の容量モードです: {mode}")


def log_snr(link: LinkSpec, f: Optional[float] = None, skin_mode: str = "exact") -> float:
    """ln SNR (長距離での桁あふれを避けるため対数のまま合成)"""
    f = link.frequency if f is None else f
    d = link.distance
    polarization = polarization_factor(link.pose_tx, link.pose_rx) ** 2
    if polarization == 0:
        return -math.inf
    return (
        math.log(resolve_tx_psd(link) / link.noise_psd)
        + math.log(float(circuit_gain(link.tx, link.rx, f)))
        + math.log(space_gain(d, link.medium))
        - 2 * d / skin_depth(f, link.medium, mode=skin_mode)
        + math.log(polarization)
    )


def mic_range(link: LinkSpec, threshold: float, skin_mode: str = "exact") -> RangeResult:
    """
    SNR がしきい値に一致する距離 d* を求める

    送信PSDはリンクの設定距離で決めた値に固定し、視線方向に受信側を動かす。
    対数距離で [0.1 m, 10⁴ m] を brentq で探索する。

    Args:
        link: リンク
        threshold: SNRしきい値 Υ_th
        skin_mode: 表皮深さの計算モード

    Returns:
        通信距離 (上限に達した場合は capped=True)
    """
    if not threshold > 0:
        raise DomainError(f"しきい値は正の値が必要です (値: {threshold})")
    fixed = replace(link, tx_psd=resolve_tx_psd(link))
    log_threshold = math.log(threshold)

    def excess(log_d: float) -> float:
        return log_snr(fixed.with_distance(math.exp(log_d)), skin_mode=skin_mode) - log_threshold

    lo, hi = math.log(RANGE_MIN_DISTANCE), math.log(RANGE_MAX_DISTANCE)
    if excess(lo) <= 0:
        raise NumericError(f"最短距離 {RANGE_MIN_DISTANCE} m でもしきい値 {threshold:.3g} に届きません")
    if excess(hi) >= 0:
        logger.warning(f"探索上限 {RANGE_MAX_DISTANCE:g} m でもしきい値を上回っています")
        return RangeResult(distance=RANGE_MAX_DISTANCE, threshold=threshold, frequency=link.frequency, capped=True)
    log_d = optimize.brentq(excess, lo, hi, xtol=1e-8, rtol=1e-12)
    distance = math.exp(log_d)
    logger.debug(f"通信距離: {distance:.6g} m (f={link.frequency:.6g} Hz, Υ_th={threshold:.3g})")
    return RangeResult(distance=distance, threshold=threshold, frequency=link.frequency)


def range_no_eddy(moment, direction, s_min: float, mu: float = MU0) -> float:
    """
    渦電流を無視した通信距離 (d*)³ = μ|m|·|3(m̂·r̂)r̂ − m̂| / (4π S_min)

    Args:
        moment: 磁気モーメントベクトル (A·m²)
        direction: 視線方向の単位ベクトル r̂
        s_min: 検出可能な最小磁束密度 (T)
        mu: 透磁率 (H/m)

    Returns:
        通信距離 (m)
    """
    if not s_min > 0:
        raise DomainError(f"s_min は正の値が必要です (値: {s_min})")
    m = np.asarray(moment, dtype=float)
    r_hat = np.asarray(direction, dtype=float)
    r_hat = r_hat / np.linalg.norm(r_hat)
    magnitude = float(np.linalg.norm(m))
    if magnitude == 0:
        raise DomainError("磁気モーメントが0です")
    m_hat = m / magnitude
    factor = float(np.linalg.norm(3 * (m_hat @ r_hat) * r_hat - m_hat))
    return (mu * magnitude * factor / (4 * math.pi * s_min)) ** (1 / 3)


def uncoded_ber_curve(
    link: LinkSpec,
    ebn0_db: Iterable[float],
    rng: Optional[np.random.Generator] = None,
    samples: int = 100_000
) -> pd.DataFrame:
    """
    BPSK (符号化なし) のBER曲線

    フェージングなしの Q(√(2·Eb/N0)) と、リンクのフェージングモデルで平均したBERを並べる。

    Args:
        link: リンク (fading を使用)
        ebn0_db: Eb/N0 のグリッド (dB)
        rng: モンテカルロ用の乱数生成器
        samples: モンテカルロのサンプル数

    Returns:
        列 ebn0_db, ber_no_fading, ber, ber_std の表
    """
    rows = []
    for value_db in ebn0_db:
        ebn0 = 10 ** (value_db / 10)
        faded = ergodic_ber(link.fading, 2 * ebn0, rng=rng, samples=samples,
                            pose_tx=link.pose_tx, pose_rx=link.pose_rx)
        rows.append({
            'ebn0_db': float(value_db),
            'ber_no_fading': q_function(math.sqrt(2 * ebn0)),
            'ber': faded.value,
            'ber_std': faded.std,
        })
    return pd.DataFrame(rows, columns=['ebn0_db', 'ber_no_fading', 'ber', 'ber_std'])

