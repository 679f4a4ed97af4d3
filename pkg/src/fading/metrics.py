"""フェージング環境でのエルゴード性能指標 (アウテージ確率・容量・BER)"""

import logging
import math
from typing import Optional

import numpy as np
from scipy import special

from src.channel.antennas import Pose
from src.core.errors import DomainError
from .distributions import (
    default_poses,
    fading_distribution,
    link_fading_sample,
    nominal_polarization,
)
from .models import FadingModel, MetricResult

logger = logging.getLogger(__name__)

# モンテカルロ評価の既定サンプル数
DEFAULT_MC_SAMPLES = 100_000


def q_function(x):
    """ガウスQ関数 Q(x) = erfc(x/√2)/2"""
    value = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(value) if np.ndim(value) == 0 else value


def _nominal(model: FadingModel, pose_tx: Optional[Pose], pose_rx: Optional[Pose]):
    """公称姿勢 (省略時は既定) と公称の偏波利得 J_nom"""
    if pose_tx is None or pose_rx is None:
        pose_tx, pose_rx = default_poses()
    nominal = nominal_polarization(model, pose_tx, pose_rx)
    if nominal == 0:
        raise DomainError("公称の偏波利得が0のため正規化できません")
    return pose_tx, pose_rx, nominal


def _normalized_samples(
    model: FadingModel,
    rng: Optional[np.random.Generator],
    samples: int,
    pose_tx: Optional[Pose],
    pose_rx: Optional[Pose]
) -> np.ndarray:
    """X = J/J_nom のモンテカルロサンプル"""
    if rng is None:
        rng = np.random.default_rng()
    pose_tx, pose_rx, nominal = _nominal(model, pose_tx, pose_rx)
    return link_fading_sample(rng, model, pose_tx, pose_rx, size=samples) / nominal


def _evaluate(
    func,
    model: FadingModel,
    rng: Optional[np.random.Generator],
    samples: int,
    pose_tx: Optional[Pose],
    pose_rx: Optional[Pose]
) -> MetricResult:
    """解析的な分布があれば期待値を積分、なければモンテカルロで平均"""
    distribution = fading_distribution(model)
    if distribution is not None:
        return MetricResult(value=distribution.expect(func))
    values = func(_normalized_samples(model, rng, samples, pose_tx, pose_rx))
    return MetricResult(
        value=float(np.mean(values)),
        std=float(np.std(values, ddof=1) / math.sqrt(samples)),
        method="monte_carlo",
    )


def outage_probability(
    model: FadingModel,
    mean_snr: float,
    threshold: float,
    rng: Optional[np.random.Generator] = None,
    samples: int = DEFAULT_MC_SAMPLES,
    pose_tx: Optional[Pose] = None,
    pose_rx: Optional[Pose] = None
) -> MetricResult:
    """
    アウテージ確率 P[mean_snr·X < Υ_th]

    Args:
        model: フェージングモデル
        mean_snr: フェージングなしのSNR (公称姿勢)
        threshold: SNRしきい値 Υ_th
        rng: モンテカルロ用の乱数生成器
        samples: モンテカルロのサンプル数
        pose_tx: 送信側の公称姿勢 (幾何モード用)
        pose_rx: 受信側の公称姿勢 (幾何モード用)

    Returns:
        アウテージ確率
    """
    if not mean_snr > 0:
        raise DomainError(f"mean_snr は正の値が必要です (値: {mean_snr})")
    level = threshold / mean_snr
    distribution = fading_distribution(model)
    if distribution is not None:
        return MetricResult(value=min(max(distribution.prob_below(level), 0.0), 1.0))
    x = _normalized_samples(model, rng, samples, pose_tx, pose_rx)
    p = float(np.mean(x < level))
    return MetricResult(value=p, std=math.sqrt(p * (1 - p) / samples), method="monte_carlo")


def ergodic_capacity(
    model: FadingModel,
    mean_snr: float,
    rng: Optional[np.random.Generator] = None,
    samples: int = DEFAULT_MC_SAMPLES,
    pose_tx: Optional[Pose] = None,
    pose_rx: Optional[Pose] = None
) -> MetricResult:
    """
    エルゴード容量 E[log2(1 + mean_snr·X)] (bit/s/Hz)

    Args:
        model: フェージングモデル
        mean_snr: フェージングなしのSNR
        rng: モンテカルロ用の乱数生成器
        samples: モンテカルロのサンプル数
        pose_tx: 送信側の公称姿勢
        pose_rx: 受信側の公称姿勢

    Returns:
        エルゴード容量
    """
    if not mean_snr > 0:
        raise DomainError(f"mean_snr は正の値が必要です (値: {mean_snr})")
    result = _evaluate(lambda x: np.log2(1 + mean_snr * x), model, rng, samples, pose_tx, pose_rx)
    logger.debug(f"エルゴード容量: {result.value:.4g} bit/s/Hz ({result.method})")
    return result


def ergodic_ber(
    model: FadingModel,
    ebn0: float,
    rng: Optional[np.random.Generator] = None,
    samples: int = DEFAULT_MC_SAMPLES,
    pose_tx: Optional[Pose] = None,
    pose_rx: Optional[Pose] = None
) -> MetricResult:
    """
    フェージング平均したビット誤り率 E[Q(√(ebn0·X))]

    Args:
        model: フェージングモデル
        ebn0: Eb/N0 (真値)
        rng: モンテカルロ用の乱数生成器
        samples: モンテカルロのサンプル数
        pose_tx: 送信側の公称姿勢
        pose_rx: 受信側の公称姿勢

    Returns:
        ビット誤り率
    """
    if ebn0 < 0:
        raise DomainError(f"ebn0 は0以上が必要です (値: {ebn0})")
    return _evaluate(
        lambda x: q_function(np.sqrt(ebn0 * np.clip(x, 0.0, None))), model, rng, samples, pose_tx, pose_rx
    )


def simulate_bpsk_ber(
    rng: np.random.Generator,
    model: FadingModel,
    ebn0: float,
    n_bits: int,
    pose_tx: Optional[Pose] = None,
    pose_rx: Optional[Pose] = None,
    chunk: int = 1_000_000
) -> MetricResult:
    """
    BPSKのビット単位モンテカルロ (ビットごとに独立なフェージング)

    受信信号 y = √(2·ebn0·X)·s + n, n ~ N(0, 1) を硬判定する。

    Args:
        rng: 乱数生成器
        model: フェージングモデル
        ebn0: Eb/N0 (真値)
        n_bits: 送信ビット数
        pose_tx: 送信側の公称姿勢
        pose_rx: 受信側の公称姿勢
        chunk: 一度に生成するビット数

    Returns:
        ビット誤り率 (標準誤差付き)
    """
    if n_bits < 1:
        raise DomainError(f"n_bits は1以上が必要です (値: {n_bits})")
    pose_tx, pose_rx, nominal = _nominal(model, pose_tx, pose_rx)
    errors = 0
    remaining = n_bits
    while remaining > 0:
        n = min(chunk, remaining)
        symbols = 1 - 2 * rng.integers(0, 2, size=n)
        x = link_fading_sample(rng, model, pose_tx, pose_rx, size=n) / nominal
        received = np.sqrt(2 * ebn0 * x) * symbols + rng.normal(size=n)
        errors += int(np.count_nonzero(np.sign(received) != symbols))
        remaining -= n
    p = errors / n_bits
    logger.info(f"BPSKシミュレーション完了: {n_bits} ビット中 {errors} 誤り")
    return MetricResult(value=p, std=math.sqrt(p * (1 - p) / n_bits), method="monte_carlo")
