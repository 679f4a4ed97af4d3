"""フェージング分布 (BCS・一様ミスアライメント) の密度・分布関数・サンプラー"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import special

from src.channel.antennas import Pose
from src.channel.gain import polarization_factor
from src.core.errors import DomainError
from .models import BcsSpec, FadingDistribution, FadingKind, FadingModel

logger = logging.getLogger(__name__)

# arsinh(√3) = arccosh(2) = ln(2 + √3)
_ASINH_SQRT3 = math.asinh(math.sqrt(3.0))
_SQRT3 = math.sqrt(3.0)


# ---------------------------------------------------------------------------
# BCS (境界付きカイ二乗) 分布
# ---------------------------------------------------------------------------

def bcs_point_mass(spec: BcsSpec) -> float:
    """x = 1 − ς の点質量 w0 = 1 − erf(√(ς/(2σ²)))"""
    return float(special.erfc(math.sqrt(spec.varsigma / (2 * spec.sigma ** 2))))


def bcs_pdf(x, spec: BcsSpec):
    """
    BCS分布の連続部分の密度

    (1−ς, 1) で exp(−(1−x)/(2σ²))/√(2πσ²(1−x))、それ以外は0。
    x = 1−ς の点質量は bcs_point_mass で得る。

    Args:
        x: 評価点 (スカラーまたは配列)
        spec: BCSパラメータ

    Returns:
        密度
    """
    x_arr = np.asarray(x, dtype=float)
    gap = 1.0 - x_arr
    inside = (gap > 0) & (gap < spec.varsigma)
    safe_gap = np.where(inside, gap, 1.0)
    var = spec.sigma ** 2
    density = np.where(
        inside,
        np.exp(-safe_gap / (2 * var)) / np.sqrt(2 * np.pi * var * safe_gap),
        0.0,
    )
    return float(density) if density.ndim == 0 else density


def bcs_cdf(x, spec: BcsSpec):
    """
    BCS分布の累積分布関数 P[J <= x]

    [1−ς, 1) で erfc(√((1−x)/(2σ²)))、x >= 1 で1。

    Args:
        x: 評価点
        spec: BCSパラメータ

    Returns:
        累積確率
    """
    x_arr = np.asarray(x, dtype=float)
    gap = np.clip(1.0 - x_arr, 0.0, None)
    value = special.erfc(np.sqrt(gap / (2 * spec.sigma ** 2)))
    value = np.where(x_arr < 1.0 - spec.varsigma, 0.0, value)
    value = np.where(x_arr >= 1.0, 1.0, value)
    return float(value) if value.ndim == 0 else value


def bcs_distribution(spec: BcsSpec) -> FadingDistribution:
    """BCS分布を点質量+連続密度の形で返す"""
    sqrt_varsigma = math.sqrt(spec.varsigma)
    # u = √(1−x) では密度が幅σの半ガウスになるため、その付近で区間を分ける
    breakpoints = tuple(sorted({min(spec.sigma, sqrt_varsigma / 2), min(5 * spec.sigma, sqrt_varsigma)}))
    return FadingDistribution(
        point_masses=[(1.0 - spec.varsigma, bcs_point_mass(spec))],
        density=lambda x: bcs_pdf(x, spec),
        support=(1.0 - spec.varsigma, 1.0),
        cdf_function=lambda x: bcs_cdf(x, spec),
        singular_end="upper",
        breakpoints=breakpoints,
    )


def bcs_sample(rng: np.random.Generator, spec: BcsSpec, size=None):
    """
    BCS分布に従う J を生成 (J = 1 − min(g², ς), g ~ N(0, σ²))

    Args:
        rng: 乱数生成器
        spec: BCSパラメータ
        size: 生成数 (Noneでスカラー)

    Returns:
        サンプル
    """
    g = rng.normal(0.0, spec.sigma, size=size)
    return 1.0 - np.minimum(g * g, spec.varsigma)


def bcs_expectation(spec: BcsSpec, mode: str = "integral") -> float:
    """
    BCS分布の期待値 E[J]

    Args:
        spec: BCSパラメータ
        mode: "closed_form" (点質量の寄与を erf ≈ 1 とみなした閉形式) または
              "integral" (密度の数値積分と点質量の和)

    Returns:
        E[J]
    """
    if mode == "closed_form":
        a = math.sqrt(spec.varsigma / (2 * spec.sigma ** 2))
        return (
            math.erf(a) * (1 - spec.sigma ** 2)
            + spec.sigma * math.sqrt(2 * spec.varsigma / math.pi) * math.exp(-a * a)
        )
    if mode == "integral":
        return bcs_distribution(spec).mean()
    raise DomainError(f"未知の期待値モードです: {mode}")


# ---------------------------------------------------------------------------
# 3次元一様ミスアライメント
# ---------------------------------------------------------------------------

def uniform_misalignment_pdf(x):
    """
    両端の軸が一様なときの正規化偏波係数 𝒥/2 の密度

    |x| <= 1/2 で arsinh√3/√3、1/2 < |x| <= 1 で (arsinh√3 − arsinh√(4x²−1))/√3。

    Args:
        x: 評価点 (スカラーまたは配列)

    Returns:
        密度
    """
    y = np.abs(np.asarray(x, dtype=float))
    tail = _ASINH_SQRT3 - np.arcsinh(np.sqrt(np.clip(4 * y * y - 1, 0.0, None)))
    density = np.where(y <= 0.5, _ASINH_SQRT3, tail) / _SQRT3
    density = np.where(y > 1.0, 0.0, density)
    return float(density) if density.ndim == 0 else density


def _folded_uniform_cdf(y):
    """P[|X| <= y] (y ∈ [0, 1])"""
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
    c = _ASINH_SQRT3
    root = np.sqrt(np.clip(4 * y * y - 1, 0.0, None))
    acosh = np.arccosh(np.maximum(2 * y, 1.0))
    outer = c / _SQRT3 + 2 / _SQRT3 * (c * (y - 0.5) - (2 * y * acosh - root) / 2)
    return np.where(y <= 0.5, 2 * c * y / _SQRT3, outer)


def uniform_misalignment_cdf(x):
    """正規化偏波係数 𝒥/2 の累積分布関数"""
    x_arr = np.asarray(x, dtype=float)
    value = 0.5 + np.sign(x_arr) * _folded_uniform_cdf(np.abs(x_arr)) / 2
    return float(value) if value.ndim == 0 else value


def _uniform_unit_vectors(rng: np.random.Generator, size: int) -> np.ndarray:
    vec = rng.normal(size=(size, 3))
    return vec / np.linalg.norm(vec, axis=1, keepdims=True)


def uniform_misalignment_sample(rng: np.random.Generator, size: int = 1):
    """
    両端の軸を単位球面上で一様に取ったときの正規化偏波係数 𝒥/2 を生成

    視線方向は +x に固定する。符号付きの値を返す。

    Args:
        rng: 乱数生成器
        size: 生成数

    Returns:
        サンプル (配列)
    """
    r_hat = np.array([1.0, 0.0, 0.0])
    n_s = _uniform_unit_vectors(rng, size)
    n_d = _uniform_unit_vectors(rng, size)
    return _polarization_rows(r_hat, n_s, n_d) / 2


def uniform_power_distribution() -> FadingDistribution:
    """一様ミスアライメントでの X = J/4 = (𝒥/2)² の分布"""
    def density(x):
        x = np.asarray(x, dtype=float)
        root = np.sqrt(np.clip(x, 1e-300, None))
        return np.where(x > 0, uniform_misalignment_pdf(root) / root, 0.0)

    return FadingDistribution(
        density=density,
        support=(0.0, 1.0),
        cdf_function=lambda x: float(_folded_uniform_cdf(math.sqrt(min(max(x, 0.0), 1.0)))),
        singular_end="lower",
        breakpoints=(0.5,),
    )


# ---------------------------------------------------------------------------
# リンク単位のサンプラー
# ---------------------------------------------------------------------------

def _polarization_rows(r_hat: np.ndarray, n_s: np.ndarray, n_d: np.ndarray) -> np.ndarray:
    """行ごとの 𝒥 = n_D·(3r̂(n_S·r̂) − n_S)"""
    field = 3 * np.outer(n_s @ r_hat, r_hat) - n_s
    return np.einsum('ij,ij->i', n_d, field)


def _tilted_axes(rng: np.random.Generator, axis: np.ndarray, spec: BcsSpec, size: int) -> np.ndarray:
    """軸を傾き角 min(|g|, √ς)、方位角 U[0, 2π) で回転させる"""
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    tilt = np.minimum(np.abs(rng.normal(0.0, spec.sigma, size=size)), math.sqrt(spec.varsigma))
    azimuth = rng.uniform(0.0, 2 * math.pi, size=size)
    lateral = np.outer(np.cos(azimuth), e1) + np.outer(np.sin(azimuth), e2)
    return np.outer(np.cos(tilt), axis) + np.sin(tilt)[:, None] * lateral


def link_fading_sample(
    rng: np.random.Generator,
    model: FadingModel,
    pose_tx: Pose,
    pose_rx: Pose,
    size: int = 1
) -> np.ndarray:
    """
    振動・ミスアライメントを含む偏波利得 J のサンプル

    Args:
        rng: 乱数生成器
        model: フェージングモデル
        pose_tx: 送信側の公称姿勢
        pose_rx: 受信側の公称姿勢
        size: 生成数

    Returns:
        J のサンプル (配列)
    """
    nominal = polarization_factor(pose_tx, pose_rx) ** 2
    if model.kind is FadingKind.NONE:
        return np.full(size, nominal)

    delta = pose_rx.position_array - pose_tx.position_array
    r_hat = delta / np.linalg.norm(delta)

    if model.kind is FadingKind.UNIFORM:
        n_s = _uniform_unit_vectors(rng, size)
        n_d = _uniform_unit_vectors(rng, size)
        return _polarization_rows(r_hat, n_s, n_d) ** 2

    if model.mode == "exact":
        factor = np.ones(size)
        for spec in model.vibrating_ends:
            factor *= bcs_sample(rng, spec, size=size)
        return nominal * factor

    n_s = np.tile(pose_tx.axis_array, (size, 1))
    n_d = np.tile(pose_rx.axis_array, (size, 1))
    if model.tx is not None:
        n_s = _tilted_axes(rng, pose_tx.axis_array, model.tx, size)
    if model.rx is not None:
        n_d = _tilted_axes(rng, pose_rx.axis_array, model.rx, size)
    return _polarization_rows(r_hat, n_s, n_d) ** 2


def nominal_polarization(model: FadingModel, pose_tx: Pose, pose_rx: Pose) -> float:
    """正規化の基準となる J (一様ミスアライメントでは最大値4)"""
    if model.kind is FadingKind.UNIFORM:
        return 4.0
    return polarization_factor(pose_tx, pose_rx) ** 2


def fading_distribution(model: FadingModel) -> Optional[FadingDistribution]:
    """
    正規化フェージング利得 X = J/J_nom の解析的な分布

    解析形がないモデル (幾何モード、両端振動) では None を返す。

    Args:
        model: フェージングモデル

    Returns:
        分布または None
    """
    if model.kind is FadingKind.NONE:
        return FadingDistribution(point_masses=[(1.0, 1.0)])
    if model.kind is FadingKind.UNIFORM:
        return uniform_power_distribution()
    ends = model.vibrating_ends
    if model.mode == "exact" and len(ends) == 1:
        return bcs_distribution(ends[0])
    logger.debug("解析的な分布がないためモンテカルロで評価します")
    return None


def default_poses(distance: float = 1.0) -> Tuple[Pose, Pose]:
    """視線方向に向き合う同軸配置の公称姿勢"""
    return Pose.in_plane((0.0, 0.0, 0.0), 0.0), Pose.in_plane((distance, 0.0, 0.0), math.pi, mirrored=True)
